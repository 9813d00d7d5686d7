//! Fixed-step integration of the weak-coupling non-Markovian master equation.
//!
//! The state carries `ρ` together with the memory operators `O̅₁ʲ`, `O̅₂ʲ` of
//! every bath `j`. They obey
//!
//! ```text
//! dρ/dt    = −i[H, ρ] + Σⱼ [Lⱼ, ρ(O̅₁ʲ + O̅₂ʲ)† − (O̅₁ʲ + O̅₂ʲ)ρ]
//! dO̅₁ʲ/dt = α₁ʲ(0,0)Lⱼ − (iω₀ʲ + γⱼ)O̅₁ʲ + [G, O̅₁ʲ]
//! dO̅₂ʲ/dt = α₂ʲ(0,0)Lⱼ − (−iω₀ʲ + γⱼ)O̅₂ʲ + [G, O̅₂ʲ]
//! G        = −iH − Σₖ Lₖ(O̅₁ᵏ + O̅₂ᵏ)
//! ```
//!
//! with `O̅ = 0` at `t = 0`. The drift generator `G` sums over all baths; for a
//! single bath it is exactly the two-term generator of the one-bath equations.
//!
//! Integration is classic RK4 with the Hamiltonian evaluated at the stage
//! times. Nothing is renormalized: trace and Hermiticity drift are sampled and
//! the run aborts once either exceeds [`ABORT_THRESHOLD`].

use log::{debug, warn};
use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use crate::bath::{alpha1_coeff, alpha2_coeff, SqueezedBathSpec};
use crate::error::{Error, Result};
use crate::models::ModelInstance;
use crate::operator::{matmul_into, Operator};
use crate::scalar::Scalar;

type C<T> = Complex<T>;

/// Name of the only supported stepping scheme.
pub const METHOD: &str = "rk4-classic";
/// Default step size.
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest step accepted by [`IntegratorConfig::new`].
pub const MAX_DT: f64 = 1e-2;
/// Trace or Hermiticity drift beyond this aborts the run.
pub const ABORT_THRESHOLD: f64 = 1e-3;
/// Minimum eigenvalue of `ρ` below this is reported as a positivity warning.
pub const POSITIVITY_WARNING: f64 = -1e-3;
/// Label of the multi-bath drift convention, echoed into run metadata.
pub const DRIFT_CONVENTION: &str = "G=-iH-sum_k L_k(O1_k+O2_k)";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T: Scalar> {
    pub dt: T,
    pub sample_every: usize,
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn new(dt: T, sample_every: usize) -> Result<Self> {
        if !(dt > T::zero()) || dt > T::lit(MAX_DT) * (T::one() + T::epsilon()) {
            return Err(Error::OutOfRange(format!("dt ∈ (0, {MAX_DT}] (got {dt})")));
        }
        if sample_every == 0 {
            return Err(Error::OutOfRange("sample_every ≥ 1".into()));
        }
        Ok(Self { dt, sample_every })
    }

    pub fn method(&self) -> &'static str {
        METHOD
    }

    /// Same sampling times with the step halved.
    pub fn halved(&self) -> Self {
        Self { dt: self.dt / T::lit(2.0), sample_every: self.sample_every * 2 }
    }
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self { dt: T::lit(DEFAULT_DT), sample_every: 10 }
    }
}

/// `ρ` and the memory operators at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionState<T: Scalar> {
    pub t: T,
    pub rho: Operator<T>,
    pub obar1: Vec<Operator<T>>,
    pub obar2: Vec<Operator<T>>,
}

impl<T: Scalar> EvolutionState<T> {
    /// `ρ(0) = |ψ₀⟩⟨ψ₀|`, all memory operators zero.
    pub fn initial(model: &ModelInstance<T>) -> Self {
        let n = model.baths().len();
        let zero = Operator::zeros(model.dim());
        Self {
            t: T::zero(),
            rho: model.initial_state().projector(),
            obar1: vec![zero.clone(); n],
            obar2: vec![zero; n],
        }
    }

    fn check(&self, model: &ModelInstance<T>) -> Result<()> {
        let n = model.baths().len();
        if self.obar1.len() != n || self.obar2.len() != n {
            return Err(Error::DimensionMismatch { left: n, right: self.obar1.len().min(self.obar2.len()) });
        }
        let dim = model.dim();
        for op in std::iter::once(&self.rho).chain(&self.obar1).chain(&self.obar2) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: op.dim() });
            }
        }
        Ok(())
    }
}

/// Per-bath constants of the memory-operator equations.
#[derive(Clone, Debug)]
struct BathTerms<T: Scalar> {
    lindblad: Operator<T>,
    alpha1: C<T>,
    alpha2: C<T>,
    /// `iω₀ + γ`
    damping1: C<T>,
    /// `−iω₀ + γ`
    damping2: C<T>,
}

impl<T: Scalar> BathTerms<T> {
    fn new(spec: &SqueezedBathSpec<T>) -> Self {
        Self {
            lindblad: spec.lindblad.clone(),
            alpha1: alpha1_coeff(spec),
            alpha2: alpha2_coeff(spec),
            damping1: C::new(spec.bandwidth, spec.center_frequency),
            damping2: C::new(spec.bandwidth, -spec.center_frequency),
        }
    }
}

fn bath_terms<T: Scalar>(model: &ModelInstance<T>) -> Vec<BathTerms<T>> {
    model.baths().iter().map(BathTerms::new).collect()
}

/// `G = −iH − Σₖ Lₖ(O̅₁ᵏ + O̅₂ᵏ)`
fn drift_generator<T: Scalar>(
    h: &Operator<T>,
    baths: &[BathTerms<T>],
    obar1: &[Operator<T>],
    obar2: &[Operator<T>],
    out: &mut Operator<T>,
) {
    out.fill_zero();
    out.axpy(-C::i(), h);
    for (k, bath) in baths.iter().enumerate() {
        out.sub_product(&bath.lindblad, &obar1[k]);
        out.sub_product(&bath.lindblad, &obar2[k]);
    }
}

/// `out = αL − d·O + [G, O]`
fn obar_derivative<T: Scalar>(
    generator: &Operator<T>,
    lindblad: &Operator<T>,
    alpha: C<T>,
    damping: C<T>,
    obar: &Operator<T>,
    out: &mut Operator<T>,
) {
    out.fill_zero();
    out.axpy(alpha, lindblad);
    out.axpy(-damping, obar);
    out.add_product(generator, obar);
    out.sub_product(obar, generator);
}

/// `out = −i[H, ρ] + Σⱼ [Lⱼ, ρAⱼ† − Aⱼρ]` with `Aⱼ = O̅₁ʲ + O̅₂ʲ`.
fn rho_derivative<T: Scalar>(
    h: &Operator<T>,
    baths: &[BathTerms<T>],
    rho: &Operator<T>,
    obar1: &[Operator<T>],
    obar2: &[Operator<T>],
    out: &mut Operator<T>,
    scratch: &mut [Operator<T>; 3],
) {
    let [sum, inner, tmp] = scratch;
    out.fill_zero();
    let mi = -C::i();
    matmul_into(h, rho, tmp);
    out.axpy(mi, tmp);
    matmul_into(rho, h, tmp);
    out.axpy(-mi, tmp);
    for (j, bath) in baths.iter().enumerate() {
        if obar1[j].is_zero() && obar2[j].is_zero() {
            continue;
        }
        sum.copy_from(&obar1[j]);
        sum.axpy(C::new(T::one(), T::zero()), &obar2[j]);
        // inner = ρ A† − A ρ
        let sum_dag = sum.dagger();
        matmul_into(rho, &sum_dag, inner);
        inner.sub_product(sum, rho);
        out.add_product(&bath.lindblad, inner);
        out.sub_product(inner, &bath.lindblad);
    }
    let _ = tmp;
}

fn bath_index<T: Scalar>(model: &ModelInstance<T>, j: usize) -> Result<()> {
    let n = model.baths().len();
    if j >= n {
        Err(Error::IndexOutOfRange { index: j, max: n.saturating_sub(1) })
    } else {
        Ok(())
    }
}

fn memory_rhs<T: Scalar>(
    model: &ModelInstance<T>,
    state: &EvolutionState<T>,
    j: usize,
    second: bool,
) -> Result<Operator<T>> {
    state.check(model)?;
    bath_index(model, j)?;
    let baths = bath_terms(model);
    let mut g = Operator::zeros(model.dim());
    drift_generator(&model.hamiltonian_at(state.t), &baths, &state.obar1, &state.obar2, &mut g);
    let mut out = Operator::zeros(model.dim());
    let b = &baths[j];
    if second {
        obar_derivative(&g, &b.lindblad, b.alpha2, b.damping2, &state.obar2[j], &mut out);
    } else {
        obar_derivative(&g, &b.lindblad, b.alpha1, b.damping1, &state.obar1[j], &mut out);
    }
    Ok(out)
}

/// Time derivative of `O̅₁ʲ` at `state`.
pub fn rhs_obar1<T: Scalar>(model: &ModelInstance<T>, state: &EvolutionState<T>, j: usize) -> Result<Operator<T>> {
    memory_rhs(model, state, j, false)
}

/// Time derivative of `O̅₂ʲ` at `state`.
pub fn rhs_obar2<T: Scalar>(model: &ModelInstance<T>, state: &EvolutionState<T>, j: usize) -> Result<Operator<T>> {
    memory_rhs(model, state, j, true)
}

/// Time derivative of `ρ` at `state`.
pub fn rhs_rho<T: Scalar>(model: &ModelInstance<T>, state: &EvolutionState<T>) -> Result<Operator<T>> {
    state.check(model)?;
    let dim = model.dim();
    let mut out = Operator::zeros(dim);
    let mut scratch = [Operator::zeros(dim), Operator::zeros(dim), Operator::zeros(dim)];
    rho_derivative(
        &model.hamiltonian_at(state.t),
        &bath_terms(model),
        &state.rho,
        &state.obar1,
        &state.obar2,
        &mut out,
        &mut scratch,
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// RK4 driver

/// Vector-space operations the RK4 driver needs on a state.
trait RkState<T: Scalar>: Clone {
    fn axpy(&mut self, c: T, other: &Self);
    fn assign(&mut self, other: &Self);
}

impl<T: Scalar> RkState<T> for Vec<Operator<T>> {
    fn axpy(&mut self, c: T, other: &Self) {
        let c = C::new(c, T::zero());
        for (a, b) in self.iter_mut().zip(other) {
            a.axpy(c, b);
        }
    }

    fn assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.copy_from(b);
        }
    }
}

impl<T: Scalar> RkState<T> for Vec<C<T>> {
    fn axpy(&mut self, c: T, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a = *a + *b * c;
        }
    }

    fn assign(&mut self, other: &Self) {
        self.copy_from_slice(other);
    }
}

trait OdeSystem<T: Scalar> {
    type State: RkState<T>;
    fn derivative(&mut self, t: T, y: &Self::State, dy: &mut Self::State);
}

struct Rk4<S> {
    k: [S; 4],
    stage: S,
}

impl<S: Clone> Rk4<S> {
    fn new(template: &S) -> Self {
        Self {
            k: [template.clone(), template.clone(), template.clone(), template.clone()],
            stage: template.clone(),
        }
    }
}

impl<S> Rk4<S> {
    fn step<T: Scalar, Sys: OdeSystem<T, State = S>>(&mut self, sys: &mut Sys, t: T, dt: T, y: &mut S)
    where
        S: RkState<T>,
    {
        let half = dt / T::lit(2.0);
        let [k1, k2, k3, k4] = &mut self.k;
        sys.derivative(t, y, k1);
        self.stage.assign(y);
        self.stage.axpy(half, k1);
        sys.derivative(t + half, &self.stage, k2);
        self.stage.assign(y);
        self.stage.axpy(half, k2);
        sys.derivative(t + half, &self.stage, k3);
        self.stage.assign(y);
        self.stage.axpy(dt, k3);
        sys.derivative(t + dt, &self.stage, k4);
        let sixth = dt / T::lit(6.0);
        let third = dt / T::lit(3.0);
        y.axpy(sixth, k1);
        y.axpy(third, k2);
        y.axpy(third, k3);
        y.axpy(sixth, k4);
    }
}

/// Step schedule: `n` steps of `dt`, the last one shortened to land on `T`.
fn schedule<T: Scalar>(total: T, dt: T) -> (usize, T) {
    let ratio = (total / dt).to_f64().unwrap_or(0.0);
    let n = (ratio - 1e-9).ceil().max(1.0) as usize;
    let last = total - dt * T::from_usize(n - 1).unwrap();
    (n, last)
}

fn run<T: Scalar, Sys: OdeSystem<T>>(
    sys: &mut Sys,
    y: &mut Sys::State,
    total: T,
    cfg: &IntegratorConfig<T>,
    mut observe: impl FnMut(T, &Sys::State, bool) -> Result<()>,
) -> Result<()> {
    let (n, last) = schedule(total, cfg.dt);
    let mut rk = Rk4::new(y);
    observe(T::zero(), y, true)?;
    for step in 0..n {
        let t = cfg.dt * T::from_usize(step).unwrap();
        let h = if step + 1 == n { last } else { cfg.dt };
        rk.step(sys, t, h, y);
        let t_next = if step + 1 == n { total } else { cfg.dt * T::from_usize(step + 1).unwrap() };
        let sample = (step + 1) % cfg.sample_every == 0 || step + 1 == n;
        observe(t_next, y, sample)?;
    }
    Ok(())
}

/// The full non-Markovian system: `[ρ, O̅₁¹…O̅₁ⁿ, O̅₂¹…O̅₂ⁿ]`.
struct MasterEquation<'a, T: Scalar> {
    model: &'a ModelInstance<T>,
    baths: Vec<BathTerms<T>>,
    generator: Operator<T>,
    scratch: [Operator<T>; 3],
}

impl<T: Scalar> OdeSystem<T> for MasterEquation<'_, T> {
    type State = Vec<Operator<T>>;

    fn derivative(&mut self, t: T, y: &Self::State, dy: &mut Self::State) {
        let n = self.baths.len();
        let h = self.model.hamiltonian_at(t);
        let (rho, obar) = y.split_first().unwrap();
        let (obar1, obar2) = obar.split_at(n);
        let (drho, dobar) = dy.split_first_mut().unwrap();
        let (dobar1, dobar2) = dobar.split_at_mut(n);
        drift_generator(&h, &self.baths, obar1, obar2, &mut self.generator);
        for (j, b) in self.baths.iter().enumerate() {
            obar_derivative(&self.generator, &b.lindblad, b.alpha1, b.damping1, &obar1[j], &mut dobar1[j]);
            obar_derivative(&self.generator, &b.lindblad, b.alpha2, b.damping2, &obar2[j], &mut dobar2[j]);
        }
        rho_derivative(&h, &self.baths, rho, obar1, obar2, drho, &mut self.scratch);
    }
}

/// Markovian limit: memory operators frozen at `cⱼLⱼ`, written in Lindblad form
/// `−i[H + Σⱼ Im(cⱼ)Lⱼ², ρ] − Σⱼ 2Re(cⱼ)(½{Lⱼ², ρ} − LⱼρLⱼ)`.
struct LindbladEquation<'a, T: Scalar> {
    model: &'a ModelInstance<T>,
    channels: Vec<MarkovChannel<T>>,
    tmp: Operator<T>,
}

/// One dissipator of the Markovian limit.
#[derive(Clone, Debug)]
pub struct MarkovChannel<T: Scalar> {
    pub lindblad: Operator<T>,
    /// `L†L` (= `L²` for Hermitian `L`).
    pub lindblad_sq: Operator<T>,
    /// Dissipation rate `2 Re c`.
    pub rate: T,
    /// Energy shift `Im c` multiplying `L²`.
    pub shift: T,
}

/// Stationary memory operator `O̅₁ + O̅₂ → c·L` reached for `γ ≫` system scales:
/// `c = α₁(0,0)/(γ + iω₀) + α₂(0,0)/(γ − iω₀)`.
pub fn markov_coefficient<T: Scalar>(spec: &SqueezedBathSpec<T>) -> C<T> {
    let b = BathTerms::new(spec);
    b.alpha1 / b.damping1 + b.alpha2 / b.damping2
}

pub fn markov_channels<T: Scalar>(model: &ModelInstance<T>) -> Vec<MarkovChannel<T>> {
    model
        .baths()
        .iter()
        .map(|spec| {
            let c = markov_coefficient(spec);
            let l = spec.lindblad.clone();
            MarkovChannel {
                lindblad_sq: l.dagger().matmul(&l).expect("square"),
                lindblad: l,
                rate: c.re + c.re,
                shift: c.im,
            }
        })
        .collect()
}

impl<T: Scalar> OdeSystem<T> for LindbladEquation<'_, T> {
    type State = Vec<Operator<T>>;

    fn derivative(&mut self, t: T, y: &Self::State, dy: &mut Self::State) {
        let mut h = self.model.hamiltonian_at(t);
        for ch in &self.channels {
            h.axpy(C::from(ch.shift), &ch.lindblad_sq);
        }
        let rho = &y[0];
        let out = &mut dy[0];
        let mi = -C::i();
        *out = h.commutator(rho).expect("dims").scale(mi);
        for ch in &self.channels {
            let anti = ch.lindblad_sq.anticommutator(rho).expect("dims");
            out.axpy(C::from(-ch.rate / T::lit(2.0)), &anti);
            matmul_into(&ch.lindblad, rho, &mut self.tmp);
            let sandwich = self.tmp.matmul(&ch.lindblad.dagger()).expect("dims");
            out.axpy(C::from(ch.rate), &sandwich);
        }
    }
}

/// Schrödinger equation for a pure state of the closed system.
struct Schrodinger<'a, T: Scalar> {
    model: &'a ModelInstance<T>,
}

impl<T: Scalar> OdeSystem<T> for Schrodinger<'_, T> {
    type State = Vec<C<T>>;

    fn derivative(&mut self, t: T, y: &Self::State, dy: &mut Self::State) {
        let h = self.model.hamiltonian_at(t);
        let n = y.len();
        for i in 0..n {
            let mut acc: C<T> = C::zero();
            for j in 0..n {
                acc = acc + h.get(i, j) * y[j];
            }
            dy[i] = acc * -C::i();
        }
    }
}

// ---------------------------------------------------------------------------
// Observables and records

/// Sampled observables of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T: Scalar> {
    pub times: Vec<T>,
    pub fidelity: Vec<T>,
    pub trace_err: Vec<T>,
    pub herm_err: Vec<T>,
    pub purity: Vec<T>,
    /// Largest fidelity over every integration step (not just samples).
    pub step_peak: (T, T),
    /// Smallest eigenvalue of `ρ` seen at any sample.
    pub min_eigenvalue: T,
    /// Ordered `key = value` description of the run.
    pub metadata: Vec<(String, String)>,
}

impl<T: Scalar> TrajectoryRecord<T> {
    fn empty(metadata: Vec<(String, String)>) -> Self {
        Self {
            times: Vec::new(),
            fidelity: Vec::new(),
            trace_err: Vec::new(),
            herm_err: Vec::new(),
            purity: Vec::new(),
            step_peak: (T::zero(), T::neg_infinity()),
            min_eigenvalue: T::infinity(),
            metadata,
        }
    }

    fn push(&mut self, t: T, f: T, trace_err: T, herm_err: T, purity: T) {
        self.times.push(t);
        self.fidelity.push(f);
        self.trace_err.push(trace_err);
        self.herm_err.push(herm_err);
        self.purity.push(purity);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_fidelity(&self) -> Option<T> {
        self.fidelity.last().copied()
    }

    /// Sampled fidelity at the sample time closest to `t`.
    pub fn fidelity_near(&self, t: T) -> Option<T> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - t).abs().partial_cmp(&(*b.1 - t).abs()).unwrap())?
            .0;
        Some(self.fidelity[idx])
    }

    pub fn max_trace_err(&self) -> T {
        self.trace_err.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn max_herm_err(&self) -> T {
        self.herm_err.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn fidelity_series<T: Scalar>(record: &TrajectoryRecord<T>) -> Result<(&[T], &[T])> {
    if record.is_empty() {
        return Err(Error::EmptyRecord);
    }
    Ok((&record.times, &record.fidelity))
}

/// Sampled maximum `(t*, F*)`; ties resolve to the earliest time.
pub fn max_fidelity<T: Scalar>(record: &TrajectoryRecord<T>) -> Result<(T, T)> {
    if record.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let mut best = (record.times[0], record.fidelity[0]);
    for (&t, &f) in record.times.iter().zip(&record.fidelity).skip(1) {
        if f > best.1 {
            best = (t, f);
        }
    }
    Ok(best)
}

/// `F = √⟨ψ|ρ|ψ⟩`; rounding residue down to `−1e-12` is clamped to zero.
pub fn fidelity<T: Scalar>(rho: &Operator<T>, target: &crate::operator::StateVector<T>) -> Result<T> {
    let overlap = rho.expectation(target)?;
    if overlap < -T::lit(1e-12) || overlap.is_nan() {
        return Err(Error::OutOfRange(format!("⟨ψ|ρ|ψ⟩ ≥ 0 (got {overlap})")));
    }
    Ok(overlap.max(T::zero()).sqrt())
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue<T: Scalar>(rho: &Operator<T>) -> f64 {
    let n = rho.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let a = (rho.get(i, j) + rho.get(j, i).conj()) * T::lit(0.5);
        Complex::new(a.re.to_f64().unwrap(), a.im.to_f64().unwrap())
    });
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

struct Recorder<'a, T: Scalar> {
    model: &'a ModelInstance<T>,
    record: TrajectoryRecord<T>,
}

impl<'a, T: Scalar> Recorder<'a, T> {
    fn new(model: &'a ModelInstance<T>, cfg: &IntegratorConfig<T>, equation: &str) -> Self {
        let metadata = vec![
            ("equation".to_string(), equation.to_string()),
            ("method".to_string(), METHOD.to_string()),
            ("dt".to_string(), cfg.dt.to_string()),
            ("sample_every".to_string(), cfg.sample_every.to_string()),
            ("dim".to_string(), model.dim().to_string()),
            ("baths".to_string(), model.baths().len().to_string()),
            ("total_time".to_string(), model.total_time().to_string()),
            ("drift_convention".to_string(), DRIFT_CONVENTION.to_string()),
        ];
        Self { model, record: TrajectoryRecord::empty(metadata) }
    }

    fn abort(t: T, reason: String) -> Error {
        Error::Aborted { t: t.to_f64().unwrap_or(f64::NAN), reason }
    }

    fn observe_rho(&mut self, t: T, rho: &Operator<T>, sample: bool) -> Result<()> {
        let f = fidelity(rho, self.model.target_state()).map_err(|e| Self::abort(t, e.to_string()))?;
        if f > self.record.step_peak.1 {
            self.record.step_peak = (t, f);
        }
        if !sample {
            return Ok(());
        }
        let trace_err = (rho.trace() - C::new(T::one(), T::zero())).norm();
        let herm_err = rho.hermiticity_residue();
        let limit = T::lit(ABORT_THRESHOLD);
        if !(trace_err <= limit) {
            return Err(Self::abort(t, format!("trace drift {trace_err:e} exceeds {ABORT_THRESHOLD:e}")));
        }
        if !(herm_err <= limit) {
            return Err(Self::abort(t, format!("Hermiticity drift {herm_err:e} exceeds {ABORT_THRESHOLD:e}")));
        }
        let lowest = min_eigenvalue(rho);
        if lowest < POSITIVITY_WARNING {
            warn!("ρ has eigenvalue {lowest:e} at t = {t}");
        }
        self.record.min_eigenvalue = self.record.min_eigenvalue.min(T::lit(lowest));
        self.push(t, f, trace_err, herm_err, rho.purity());
        Ok(())
    }

    fn push(&mut self, t: T, f: T, trace_err: T, herm_err: T, purity: T) {
        self.record.push(t, f, trace_err, herm_err, purity);
    }

    fn finish(self) -> TrajectoryRecord<T> {
        debug!(
            "run finished: {} samples, peak F = {} at t = {}",
            self.record.len(),
            self.record.step_peak.1,
            self.record.step_peak.0
        );
        self.record
    }
}

/// Integrates the coupled `{ρ, O̅₁ʲ, O̅₂ʲ}` system from `0` to `T`.
pub fn evolve<T: Scalar>(model: &ModelInstance<T>, cfg: &IntegratorConfig<T>) -> Result<TrajectoryRecord<T>> {
    evolve_with_state(model, cfg).map(|(record, _)| record)
}

/// As [`evolve`], also returning the final state.
pub fn evolve_with_state<T: Scalar>(
    model: &ModelInstance<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(TrajectoryRecord<T>, EvolutionState<T>)> {
    evolve_observed(model, cfg, |_| {})
}

/// As [`evolve_with_state`], handing every sampled state to `inspect`.
pub fn evolve_observed<T: Scalar>(
    model: &ModelInstance<T>,
    cfg: &IntegratorConfig<T>,
    mut inspect: impl FnMut(&EvolutionState<T>),
) -> Result<(TrajectoryRecord<T>, EvolutionState<T>)> {
    let dim = model.dim();
    let n = model.baths().len();
    let init = EvolutionState::initial(model);
    let mut y: Vec<Operator<T>> = std::iter::once(init.rho)
        .chain(init.obar1)
        .chain(init.obar2)
        .collect();
    let mut sys = MasterEquation {
        model,
        baths: bath_terms(model),
        generator: Operator::zeros(dim),
        scratch: [Operator::zeros(dim), Operator::zeros(dim), Operator::zeros(dim)],
    };
    let mut rec = Recorder::new(model, cfg, "non-markovian");
    let unpack = |t: T, y: &Vec<Operator<T>>| EvolutionState {
        t,
        rho: y[0].clone(),
        obar1: y[1..=n].to_vec(),
        obar2: y[n + 1..].to_vec(),
    };
    run(&mut sys, &mut y, model.total_time(), cfg, |t, y, sample| {
        rec.observe_rho(t, &y[0], sample)?;
        if sample {
            inspect(&unpack(t, y));
        }
        Ok(())
    })?;
    let state = unpack(model.total_time(), &y);
    Ok((rec.finish(), state))
}

/// Integrates the Markovian-limit Lindblad equation.
pub fn evolve_lindblad<T: Scalar>(model: &ModelInstance<T>, cfg: &IntegratorConfig<T>) -> Result<TrajectoryRecord<T>> {
    let mut sys = LindbladEquation { model, channels: markov_channels(model), tmp: Operator::zeros(model.dim()) };
    let mut y = vec![model.initial_state().projector()];
    let mut rec = Recorder::new(model, cfg, "lindblad");
    run(&mut sys, &mut y, model.total_time(), cfg, |t, y, sample| rec.observe_rho(t, &y[0], sample))?;
    Ok(rec.finish())
}

/// Pure-state propagation under `H(t)` alone, ignoring every bath.
pub fn evolve_unitary<T: Scalar>(model: &ModelInstance<T>, cfg: &IntegratorConfig<T>) -> Result<TrajectoryRecord<T>> {
    let mut sys = Schrodinger { model };
    let mut y = model.initial_state().amplitudes().to_vec();
    let target = model.target_state().amplitudes();
    let mut rec = Recorder::new(model, cfg, "unitary");
    run(&mut sys, &mut y, model.total_time(), cfg, |t, y, sample| {
        let overlap = target.iter().zip(y).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b);
        let f = overlap.norm();
        if f > rec.record.step_peak.1 {
            rec.record.step_peak = (t, f);
        }
        if sample {
            let norm2 = y.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
            rec.push(t, f, (norm2 - T::one()).abs(), T::zero(), norm2 * norm2);
        }
        Ok(())
    })?;
    rec.record.min_eigenvalue = T::zero();
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SqueezedBathSpec;
    use crate::models::{build_adiabatic_model, build_xy_chain_model, HamiltonianFn, LindbladKind};
    use crate::operator::{pauli, StateVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn bath(gamma_c: f64, bw: f64, r: f64, theta: f64) -> SqueezedBathSpec<f64> {
        SqueezedBathSpec::new(gamma_c, bw, 0.0, r, theta, pauli::sigma_z()).unwrap()
    }

    fn scrambled(dim: usize, seed: u64) -> Operator<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Operator::from_fn(dim, |_, _| C::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).unwrap()
    }

    fn hermitian(dim: usize, seed: u64) -> Operator<f64> {
        let a = scrambled(dim, seed);
        a.add(&a.dagger()).unwrap()
    }

    fn random_state(model: &ModelInstance<f64>, seed: u64) -> EvolutionState<f64> {
        let n = model.baths().len();
        let d = model.dim();
        let a = scrambled(d, seed);
        let mut rho = a.matmul(&a.dagger()).unwrap();
        let tr = rho.trace();
        rho = rho.scale(tr.inv());
        EvolutionState {
            t: 0.37,
            rho,
            obar1: (0..n).map(|k| scrambled(d, seed + 10 + k as u64)).collect(),
            obar2: (0..n).map(|k| scrambled(d, seed + 100 + k as u64)).collect(),
        }
    }

    #[test]
    fn integrator_config_validation() {
        assert!(IntegratorConfig::<f64>::new(0.0, 1).is_err());
        assert!(IntegratorConfig::<f64>::new(0.02, 1).is_err());
        assert!(IntegratorConfig::<f64>::new(1e-3, 0).is_err());
        let cfg = IntegratorConfig::<f64>::new(0.01, 3).unwrap();
        assert_eq!(cfg.method(), "rk4-classic");
        assert_eq!(cfg.halved(), IntegratorConfig { dt: 0.005, sample_every: 6 });
    }

    #[test]
    fn schedule_lands_on_final_time() {
        assert_eq!(schedule(1.0, 0.1).0, 10);
        let (n, last) = schedule(1.05f64, 0.1);
        assert_eq!(n, 11);
        assert!((last - 0.05).abs() < 1e-12);
    }

    #[test]
    fn memory_rhs_at_origin_is_alpha_times_l() {
        let model = build_adiabatic_model(10.0, &bath(0.3, 5.0, 0.5, 0.7)).unwrap();
        let state = EvolutionState::initial(&model);
        let b = &model.baths()[0];
        assert_eq!(rhs_obar1(&model, &state, 0).unwrap(), b.lindblad.scale(alpha1_coeff(b)));
        assert_eq!(rhs_obar2(&model, &state, 0).unwrap(), b.lindblad.scale(alpha2_coeff(b)));
        assert!(rhs_obar1(&model, &state, 1).is_err());
        assert!(rhs_obar2(&model, &state, 5).is_err());
    }

    #[test]
    fn closed_system_rho_rhs_is_unitary_flow() {
        let model = build_adiabatic_model(10.0, &bath(0.0, 5.0, 0.5, 0.7)).unwrap();
        let mut state = random_state(&model, 7);
        state.obar1[0] = Operator::zeros(3);
        state.obar2[0] = Operator::zeros(3);
        let h = model.hamiltonian_at(state.t);
        let expected = h.commutator(&state.rho).unwrap().scale(-C::i());
        assert!(rhs_rho(&model, &state).unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rho_rhs_is_traceless_and_hermitian() {
        let template = bath(0.3, 5.0, 0.5, 0.9);
        let models = [
            build_adiabatic_model(10.0, &template).unwrap(),
            build_xy_chain_model(3, -1.0, 5.0, &template, LindbladKind::SigmaX).unwrap(),
        ];
        for (m, model) in models.iter().enumerate() {
            for seed in 0..5 {
                let state = random_state(model, 31 * seed + m as u64);
                let d = rhs_rho(model, &state).unwrap();
                assert!(d.trace().norm() < 1e-12);
                assert!(d.hermiticity_residue() < 1e-12);
            }
        }
    }

    #[test]
    fn hermiticity_pairing_identity() {
        // ([L, ρA†])† = −[L, Aρ] for Hermitian L and ρ, arbitrary A.
        for seed in 0..5 {
            let l = hermitian(4, seed);
            let rho = hermitian(4, seed + 50);
            let a = scrambled(4, seed + 99);
            let lhs = l.commutator(&rho.matmul(&a.dagger()).unwrap()).unwrap().dagger();
            let rhs = l.commutator(&a.matmul(&rho).unwrap()).unwrap().scale(C::new(-1.0, 0.0));
            assert!(lhs.max_abs_diff(&rhs) < 1e-13);
        }
    }

    #[test]
    fn rhs_rejects_inconsistent_state() {
        let model = build_adiabatic_model(10.0, &bath(0.3, 5.0, 0.5, 0.7)).unwrap();
        let mut state = EvolutionState::initial(&model);
        state.obar2.clear();
        assert!(rhs_rho(&model, &state).is_err());
        assert!(rhs_obar1(&model, &state, 0).is_err());
    }

    /// `H = 0`, one `σᶻ` bath on a qubit.
    fn dephasing_qubit(r: f64, theta: f64, w0: f64, total: f64) -> ModelInstance<f64> {
        let spec = SqueezedBathSpec::new(0.3, 2.0, w0, r, theta, pauli::sigma_z()).unwrap();
        let h: HamiltonianFn<f64> = Arc::new(|_| Operator::zeros(2));
        let plus = StateVector::normalized(vec![C::new(1.0, 0.0), C::new(1.0, 0.0)]).unwrap();
        ModelInstance::new(h, vec![spec], plus.clone(), plus, total).unwrap()
    }

    #[test]
    fn memory_operators_follow_linear_closed_form() {
        let model = dephasing_qubit(0.6, 0.4, 0.8, 2.0);
        let spec = &model.baths()[0];
        let (a1, a2) = (alpha1_coeff(spec), alpha2_coeff(spec));
        let d1 = C::new(2.0, 0.8);
        let d2 = C::new(2.0, -0.8);
        let cfg = IntegratorConfig::new(1e-3, 50).unwrap();
        let mut worst: f64 = 0.0;
        evolve_observed(&model, &cfg, |s| {
            let e1 = a1 / d1 * (C::new(1.0, 0.0) - (-d1 * s.t).exp());
            let e2 = a2 / d2 * (C::new(1.0, 0.0) - (-d2 * s.t).exp());
            worst = worst.max(s.obar1[0].max_abs_diff(&spec.lindblad.scale(e1)));
            worst = worst.max(s.obar2[0].max_abs_diff(&spec.lindblad.scale(e2)));
        })
        .unwrap();
        assert!(worst < 1e-10, "worst deviation {worst:e}");
    }

    #[test]
    fn vacuum_bath_keeps_second_memory_operator_zero() {
        let model = dephasing_qubit(0.0, 0.4, 0.0, 1.0);
        let cfg = IntegratorConfig::new(1e-3, 100).unwrap();
        let mut all_zero = true;
        let (_, last) = evolve_observed(&model, &cfg, |s| all_zero &= s.obar2[0].is_zero()).unwrap();
        assert!(all_zero && last.obar2[0].is_zero());
        assert!(!last.obar1[0].is_zero());
    }

    #[test]
    fn closed_system_keeps_memory_exactly_zero() {
        let model = build_xy_chain_model(3, -1.0, 1.0, &bath(0.0, 10.0, 0.5, 0.3), LindbladKind::SigmaX).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 10).unwrap();
        let mut all_zero = true;
        evolve_observed(&model, &cfg, |s| {
            all_zero &= s.obar1.iter().chain(&s.obar2).all(Operator::is_zero);
        })
        .unwrap();
        assert!(all_zero);
    }

    #[test]
    fn two_site_transfer_is_rabi_oscillation() {
        let model = build_xy_chain_model(2, -1.0, 1.5, &bath(0.0, 10.0, 0.0, 0.0), LindbladKind::SigmaZ).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 10).unwrap();
        let rec = evolve(&model, &cfg).unwrap();
        for (&t, &f) in rec.times.iter().zip(&rec.fidelity) {
            assert!((f - (2.0 * t).sin().abs()).abs() < 1e-9, "t={t} F={f}");
        }
        let (t_star, f_star) = max_fidelity(&rec).unwrap();
        assert!((t_star - PI / 4.0).abs() <= 0.01 + 1e-12);
        assert!((f_star - 1.0).abs() < 1e-3);
    }

    #[test]
    fn lindblad_rates() {
        let vac = bath(0.3, 10.0, 0.0, 0.0);
        assert!((markov_coefficient(&vac) - C::new(0.15, 0.0)).norm() < 1e-15);
        let squeezed = bath(0.3, 10.0, 0.5, 0.0);
        // 2 Re c = Γ(u − w)² = Γ e^{−2r}
        let c = markov_coefficient(&squeezed);
        assert!((2.0 * c.re - 0.3 * (-1.0f64).exp()).abs() < 1e-14);
        assert!(c.im.abs() < 1e-15);
    }

    #[test]
    fn lindblad_dephasing_decay() {
        // Pure dephasing of |+⟩ at rate κ: coherence decays as e^{−2κt}.
        let model = dephasing_qubit(0.0, 0.0, 0.0, 1.0);
        let cfg = IntegratorConfig::new(1e-3, 100).unwrap();
        let rec = evolve_lindblad(&model, &cfg).unwrap();
        let kappa = 0.3;
        for (&t, &f) in rec.times.iter().zip(&rec.fidelity) {
            let expected = ((1.0 + (-2.0 * kappa * t).exp()) / 2.0).sqrt();
            assert!((f - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_system_routes_agree() {
        let model = build_adiabatic_model(3.0, &bath(0.0, 10.0, 0.5, 0.0)).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 20).unwrap();
        let a = evolve(&model, &cfg).unwrap();
        let b = evolve_lindblad(&model, &cfg).unwrap();
        let c = evolve_unitary(&model, &cfg).unwrap();
        for i in 0..a.len() {
            assert!((a.fidelity[i] - b.fidelity[i]).abs() < 1e-12);
            assert!((a.fidelity[i] - c.fidelity[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn max_fidelity_helpers() {
        let mut rec = TrajectoryRecord::<f64>::empty(Vec::new());
        assert_eq!(max_fidelity(&rec), Err(Error::EmptyRecord));
        assert!(fidelity_series(&rec).is_err());
        for k in 0..5 {
            rec.push(k as f64 * 0.1, 1.0, 0.0, 0.0, 1.0);
        }
        assert_eq!(max_fidelity(&rec).unwrap(), (0.0, 1.0));
        rec.fidelity = vec![0.9, 0.8, 0.7, 0.6, 0.5];
        assert_eq!(max_fidelity(&rec).unwrap(), (0.0, 0.9));
        assert_eq!(fidelity_series(&rec).unwrap().1.len(), 5);
    }

    #[test]
    fn fidelity_clamps_rounding_only() {
        let psi = StateVector::<f64>::basis(2, 0).unwrap();
        let tiny = Operator::diagonal(&[C::new(-1e-13, 0.0), C::new(1.0, 0.0)]).unwrap();
        assert_eq!(fidelity(&tiny, &psi).unwrap(), 0.0);
        let bad = Operator::diagonal(&[C::new(-1e-6, 0.0), C::new(1.0, 0.0)]).unwrap();
        assert!(fidelity(&bad, &psi).is_err());
    }

    #[test]
    fn runaway_drift_aborts() {
        // Γ far outside weak coupling with a coarse step blows up the trace monitor.
        let spec = SqueezedBathSpec::new(1.0, 1.0, 0.0, 1.0, PI, crate::models::spin1_jx()).unwrap();
        let model = build_adiabatic_model(10.0, &spec).unwrap();
        let h: HamiltonianFn<f64> = {
            let m = model.clone();
            Arc::new(move |t| m.hamiltonian_at(t).scale(C::new(1e3, 0.0)))
        };
        let wild = ModelInstance::new(
            h,
            model.baths().to_vec(),
            model.initial_state().clone(),
            model.target_state().clone(),
            10.0,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(1e-2, 1).unwrap();
        assert!(matches!(evolve(&wild, &cfg), Err(Error::Aborted { .. })));
    }

    #[test]
    fn single_precision_run() {
        let spec = SqueezedBathSpec::<f32>::new(0.0, 10.0, 0.0, 0.0, 0.0, pauli::sigma_z()).unwrap();
        let model = build_xy_chain_model::<f32>(2, -1.0, 1.0, &spec, LindbladKind::SigmaZ).unwrap();
        let rec = evolve(&model, &IntegratorConfig::new(1e-3, 10).unwrap()).unwrap();
        let (t, f) = max_fidelity(&rec).unwrap();
        assert!((t - std::f32::consts::FRAC_PI_4).abs() < 0.011);
        assert!((f - 1.0).abs() < 1e-3);
    }
}
