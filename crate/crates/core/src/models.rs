//! Benchmark systems: the three-level adiabatic sweep and the open-ended XY
//! chain with one squeezed bath per site.
//!
//! Chain sites are numbered from 1 and the basis is big-endian: site 1 is the
//! leftmost tensor factor, so `|100…0⟩` has index `2^(N−1)` and `|00…01⟩`
//! has index 1. Single-site basis state `|0⟩` is the `σᶻ = +1` eigenvector.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::One;

use crate::bath::SqueezedBathSpec;
use crate::error::{Error, Result};
use crate::operator::{pauli, Operator, StateVector};
use crate::scalar::Scalar;

/// Largest chain length accepted by [`build_xy_chain_model`].
pub const MAX_CHAIN_SITES: usize = 8;

/// Time-dependent system Hamiltonian; must be a pure function of `t`.
pub type HamiltonianFn<T> = Arc<dyn Fn(T) -> Operator<T> + Send + Sync>;

/// How each chain site couples to its bath.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LindbladKind {
    SigmaX,
    SigmaZ,
    /// Spin-1 `J_x`; only meaningful for the three-level model.
    Jx,
}

impl LindbladKind {
    pub fn name(self) -> &'static str {
        match self {
            LindbladKind::SigmaX => "sigma_x",
            LindbladKind::SigmaZ => "sigma_z",
            LindbladKind::Jx => "jx",
        }
    }
}

impl fmt::Display for LindbladKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LindbladKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sigma_x" => Ok(LindbladKind::SigmaX),
            "sigma_z" => Ok(LindbladKind::SigmaZ),
            "jx" => Ok(LindbladKind::Jx),
            other => Err(Error::OutOfRange(format!(
                "lindblad_kind ∈ {{sigma_x, sigma_z, jx}} (got {other:?})"
            ))),
        }
    }
}

/// A closed system plus its baths and the states defining the fidelity.
#[derive(Clone)]
pub struct ModelInstance<T: Scalar> {
    dim: usize,
    hamiltonian: HamiltonianFn<T>,
    baths: Vec<SqueezedBathSpec<T>>,
    initial_state: StateVector<T>,
    target_state: StateVector<T>,
    total_time: T,
}

impl<T: Scalar> fmt::Debug for ModelInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelInstance")
            .field("dim", &self.dim)
            .field("baths", &self.baths.len())
            .field("total_time", &self.total_time)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ModelInstance<T> {
    /// Assembles a model, checking dimensions and Hermiticity of `H(t)` at
    /// `t ∈ {0, T/2, T}`.
    pub fn new(
        hamiltonian: HamiltonianFn<T>,
        baths: Vec<SqueezedBathSpec<T>>,
        initial_state: StateVector<T>,
        target_state: StateVector<T>,
        total_time: T,
    ) -> Result<Self> {
        if !(total_time > T::zero()) || !total_time.is_finite() {
            return Err(Error::OutOfRange(format!("T > 0 (got {total_time})")));
        }
        let dim = initial_state.dim();
        if target_state.dim() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: target_state.dim() });
        }
        for t in [T::zero(), total_time / T::lit(2.0), total_time] {
            let h = hamiltonian(t);
            if h.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: h.dim() });
            }
            let herm = h.hermiticity_residue();
            if herm > T::tol(1e-12) {
                return Err(Error::NotHermitian(herm.to_f64().unwrap_or(f64::NAN)));
            }
        }
        for bath in &baths {
            if bath.lindblad.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: bath.lindblad.dim() });
            }
        }
        Ok(Self { dim, hamiltonian, baths, initial_state, target_state, total_time })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian_at(&self, t: T) -> Operator<T> {
        (self.hamiltonian)(t)
    }

    pub fn baths(&self) -> &[SqueezedBathSpec<T>] {
        &self.baths
    }

    pub fn initial_state(&self) -> &StateVector<T> {
        &self.initial_state
    }

    pub fn target_state(&self) -> &StateVector<T> {
        &self.target_state
    }

    pub fn total_time(&self) -> T {
        self.total_time
    }

    /// Copy of this model with every bath removed.
    pub fn closed(&self) -> Self {
        Self { baths: Vec::new(), ..self.clone() }
    }
}

/// `J_z = |2⟩⟨2| − |0⟩⟨0|`
pub fn spin1_jz<T: Scalar>() -> Operator<T> {
    Operator::from_real(3, &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap()
}

/// `J_x = (|2⟩⟨1| + |1⟩⟨2| + |1⟩⟨0| + |0⟩⟨1|)/√2`
pub fn spin1_jx<T: Scalar>() -> Operator<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Operator::from_real(3, &[0.0, s, 0.0, s, 0.0, s, 0.0, s, 0.0]).unwrap()
}

/// Three-level system swept linearly from `J_z` to `J_x` over `[0, T]`,
/// coupled to one bath through `J_x`.
pub fn build_adiabatic_model<T: Scalar>(
    total_time: T,
    bath_template: &SqueezedBathSpec<T>,
) -> Result<ModelInstance<T>> {
    if !(total_time > T::zero()) {
        return Err(Error::OutOfRange(format!("T > 0 (got {total_time})")));
    }
    let (jz, jx) = (spin1_jz::<T>(), spin1_jx::<T>());
    let bath = bath_template.with_lindblad(jx.clone())?;
    let hamiltonian: HamiltonianFn<T> = Arc::new(move |t: T| {
        let s = t / total_time;
        let (a, b) = (Complex::from(T::one() - s), Complex::from(s));
        let entries = jz.entries().iter().zip(jx.entries()).map(|(&z, &x)| z * a + x * b).collect();
        Operator::new(3, entries).expect("3x3")
    });
    let r2 = std::f64::consts::SQRT_2;
    let target = StateVector::from_real(&[0.5, -r2 / 2.0, 0.5])?;
    ModelInstance::new(hamiltonian, vec![bath], StateVector::basis(3, 0)?, target, total_time)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with the 2×2 `op` at 1-based position `site`.
pub fn embed_site_operator<T: Scalar>(op: &Operator<T>, site: usize, sites: usize) -> Result<Operator<T>> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch { left: 2, right: op.dim() });
    }
    if site == 0 || site > sites {
        return Err(Error::IndexOutOfRange { index: site, max: sites });
    }
    let left = Operator::<T>::identity(1 << (site - 1));
    let right = Operator::<T>::identity(1 << (sites - site));
    Ok(left.kron(op).kron(&right))
}

/// Open-ended XY chain `Σᵢ J(σᵢˣσᵢ₊₁ˣ + σᵢʸσᵢ₊₁ʸ)` with one bath per site.
pub fn xy_chain_hamiltonian<T: Scalar>(sites: usize, coupling: T) -> Result<Operator<T>> {
    let dim = 1usize << sites;
    let mut h = Operator::zeros(dim);
    let (sx, sy) = (pauli::sigma_x::<T>(), pauli::sigma_y::<T>());
    for i in 1..sites {
        let xx = embed_site_operator(&sx, i, sites)?.matmul(&embed_site_operator(&sx, i + 1, sites)?)?;
        let yy = embed_site_operator(&sy, i, sites)?.matmul(&embed_site_operator(&sy, i + 1, sites)?)?;
        h.axpy(Complex::from(coupling), &xx);
        h.axpy(Complex::from(coupling), &yy);
    }
    Ok(h)
}

/// Transfers `|100…0⟩` to `|00…01⟩` along an `N`-site chain, `2 ≤ N ≤ 8`.
pub fn build_xy_chain_model<T: Scalar>(
    sites: usize,
    coupling: T,
    total_time: T,
    bath_template: &SqueezedBathSpec<T>,
    lindblad_kind: LindbladKind,
) -> Result<ModelInstance<T>> {
    if !(2..=MAX_CHAIN_SITES).contains(&sites) {
        return Err(Error::OutOfRange(format!("N ∈ [2, {MAX_CHAIN_SITES}] (got {sites})")));
    }
    let local = match lindblad_kind {
        LindbladKind::SigmaX => pauli::sigma_x::<T>(),
        LindbladKind::SigmaZ => pauli::sigma_z::<T>(),
        LindbladKind::Jx => {
            return Err(Error::OutOfRange("chain lindblad_kind ∈ {sigma_x, sigma_z}".into()))
        }
    };
    let baths = (1..=sites)
        .map(|site| bath_template.with_lindblad(embed_site_operator(&local, site, sites)?))
        .collect::<Result<Vec<_>>>()?;
    let h = xy_chain_hamiltonian(sites, coupling)?;
    let hamiltonian: HamiltonianFn<T> = Arc::new(move |_| h.clone());
    let dim = 1usize << sites;
    let initial = StateVector::basis(dim, 1 << (sites - 1))?;
    let target = StateVector::basis(dim, 1)?;
    ModelInstance::new(hamiltonian, baths, initial, target, total_time)
}

/// `Σᵢ σᵢᶻ`
pub fn total_sigma_z<T: Scalar>(sites: usize) -> Result<Operator<T>> {
    let mut acc = Operator::zeros(1 << sites);
    for i in 1..=sites {
        acc.axpy(Complex::one(), &embed_site_operator(&pauli::sigma_z(), i, sites)?);
    }
    Ok(acc)
}
