use num_complex::Complex64 as C;
use proptest::prelude::*;
use sqbath::bath::{alpha2_coeff, variance_p_exact, variance_p_taylor, variance_x_exact, variance_x_taylor};
use sqbath::dynamics::{rhs_rho, EvolutionState};
use sqbath::operator::pauli;
use sqbath::{build_adiabatic_model, squeeze_factors, Operator, SqueezedBathSpec, StateVector};

fn operator(dim: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), dim * dim)
        .prop_map(move |v| Operator::new(dim, v.into_iter().map(|(re, im)| C::new(re, im)).collect()).unwrap())
}

fn hermitian(dim: usize) -> impl Strategy<Value = Operator> {
    operator(dim).prop_map(|a| a.add(&a.dagger()).unwrap())
}

fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| StateVector::normalized(v.into_iter().map(|(re, im)| C::new(re, im)).collect()).unwrap())
}

fn density(dim: usize) -> impl Strategy<Value = Operator> {
    operator(dim).prop_map(move |a| {
        let p = a.matmul(&a.dagger()).unwrap();
        let tr = p.trace().re;
        p.scale(C::from(1.0 / tr))
    })
}

/// `max_θ |V_exact − V_taylor| = ¼(e^{2r} − 1 − 2r − 2r²)`
fn taylor_remainder(r: f64) -> f64 {
    ((2.0 * r).exp() - 1.0 - 2.0 * r - 2.0 * r * r) / 4.0
}

#[test]
fn taylor_gap_grid_scan() {
    let mut worst_below = 0.0f64;
    let mut worst_half = 0.0f64;
    for i in 0..=500 {
        let r = 0.5 * i as f64 / 500.0;
        for k in 0..=720 {
            let theta = std::f64::consts::TAU * k as f64 / 720.0;
            let gap = (variance_p_exact(r, theta) - variance_p_taylor(r, theta))
                .abs()
                .max((variance_x_exact(r, theta) - variance_x_taylor(r, theta)).abs());
            if r <= 0.48 {
                worst_below = worst_below.max(gap);
            }
            worst_half = worst_half.max(gap);
        }
    }
    assert!(worst_below <= 0.05, "{worst_below}");
    assert!((worst_half - taylor_remainder(0.5)).abs() < 1e-12, "{worst_half}");
    assert!(worst_half > 0.054);
}

proptest! {
    #[test]
    fn commutator_is_traceless(a in operator(4), b in operator(4)) {
        prop_assert!(a.commutator(&b).unwrap().trace().norm() < 1e-12);
    }

    #[test]
    fn dagger_is_an_involution(a in operator(3)) {
        prop_assert_eq!(a.dagger().dagger(), a);
    }

    #[test]
    fn kron_dimensions_multiply(a in operator(2), b in operator(3)) {
        let k = a.kron(&b);
        prop_assert_eq!(k.dim(), 6);
        prop_assert!((k.trace() - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn expectation_of_hermitian_is_bounded(h in hermitian(3), psi in state(3)) {
        let e = h.expectation(&psi).unwrap();
        let bound: f64 = h.entries().iter().map(|z| z.norm()).sum();
        prop_assert!(e.abs() <= bound);
    }

    #[test]
    fn projector_expectation_is_a_probability(psi in state(4), phi in state(4)) {
        let p = phi.projector().expectation(&psi).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn bogoliubov_normalisation(r in 0.0..=1.0f64, theta in -10.0..10.0f64) {
        let f = squeeze_factors(r, theta).unwrap();
        prop_assert!((f.u * f.u - f.v.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn variances_respect_uncertainty_floor(r in 0.0..=1.0f64, theta in 0.0..std::f64::consts::TAU) {
        prop_assert!(variance_p_exact(r, theta) * variance_x_exact(r, theta) >= 1.0 / 16.0 - 1e-12);
    }

    #[test]
    fn taylor_variances_within_remainder(r in 0.0..=1.0f64, theta in 0.0..std::f64::consts::TAU) {
        let bound = taylor_remainder(r) + 1e-12;
        prop_assert!((variance_p_exact(r, theta) - variance_p_taylor(r, theta)).abs() <= bound);
        prop_assert!((variance_x_exact(r, theta) - variance_x_taylor(r, theta)).abs() <= bound);
    }

    #[test]
    fn unsqueezed_bath_has_no_second_coefficient(theta in 0.0..std::f64::consts::TAU, g in 0.01..10.0f64) {
        let spec = SqueezedBathSpec::new(0.3, g, 0.0, 0.0, theta, pauli::sigma_x()).unwrap();
        prop_assert_eq!(alpha2_coeff(&spec), C::new(0.0, 0.0));
    }

    #[test]
    fn master_equation_preserves_hermiticity_and_trace(
        rho in density(3),
        o1 in operator(3),
        o2 in operator(3),
        r in 0.0..=1.0f64,
        theta in 0.0..std::f64::consts::TAU,
        t in 0.0..10.0f64,
    ) {
        let bath = SqueezedBathSpec::new(0.3, 5.0, 0.7, r, theta, Operator::identity(3)).unwrap();
        let model = build_adiabatic_model(10.0, &bath).unwrap();
        let state = EvolutionState { t, rho, obar1: vec![o1], obar2: vec![o2] };
        let d = rhs_rho(&model, &state).unwrap();
        prop_assert!(d.hermiticity_residue() < 1e-12);
        prop_assert!(d.trace().norm() < 1e-12);
    }
}
