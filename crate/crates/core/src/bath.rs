//! Two-mode squeezed bosonic baths with Lorentzian spectral density.
//!
//! Each bath is described by its coupling strength `Γ`, bandwidth `γ`,
//! squeeze centre frequency `ω₀`, squeeze strength `r` and direction `θ`,
//! plus the (Hermitian) system operator it couples through. The memory kernel
//! splits into two exponentially decaying pieces `α₁`, `α₂`; the master
//! equation integrator only needs their values at `t = s = 0`.

use num_complex::Complex;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::scalar::Scalar;

/// Parameters of one squeezed reservoir.
#[derive(Clone, Debug, PartialEq)]
pub struct SqueezedBathSpec<T: Scalar> {
    pub coupling_strength: T,
    pub bandwidth: T,
    pub center_frequency: T,
    pub squeeze_strength: T,
    pub squeeze_direction: T,
    pub lindblad: Operator<T>,
}

impl<T: Scalar> SqueezedBathSpec<T> {
    /// Validates ranges and Hermiticity of the coupling operator. The squeeze
    /// direction is reduced into `[0, 2π)`.
    pub fn new(
        coupling_strength: T,
        bandwidth: T,
        center_frequency: T,
        squeeze_strength: T,
        squeeze_direction: T,
        lindblad: Operator<T>,
    ) -> Result<Self> {
        if !(coupling_strength >= T::zero()) || !coupling_strength.is_finite() {
            return Err(Error::OutOfRange(format!("Γ ≥ 0 (got {coupling_strength})")));
        }
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(Error::OutOfRange(format!("γ > 0 (got {bandwidth})")));
        }
        if !center_frequency.is_finite() {
            return Err(Error::OutOfRange(format!("ω₀ finite (got {center_frequency})")));
        }
        check_r(squeeze_strength)?;
        if !squeeze_direction.is_finite() {
            return Err(Error::OutOfRange(format!("θ finite (got {squeeze_direction})")));
        }
        let herm = lindblad.hermiticity_residue();
        if herm > T::tol(1e-12) {
            return Err(Error::NotHermitian(herm.to_f64().unwrap_or(f64::NAN)));
        }
        let two_pi = T::PI() + T::PI();
        Ok(Self {
            coupling_strength,
            bandwidth,
            center_frequency,
            squeeze_strength,
            squeeze_direction: squeeze_direction - two_pi * (squeeze_direction / two_pi).floor(),
            lindblad,
        })
    }

    /// Same bath parameters with a different coupling operator.
    pub fn with_lindblad(&self, lindblad: Operator<T>) -> Result<Self> {
        Self::new(
            self.coupling_strength,
            self.bandwidth,
            self.center_frequency,
            self.squeeze_strength,
            self.squeeze_direction,
            lindblad,
        )
    }

    pub fn squeeze_factors(&self) -> SqueezeFactors<T> {
        SqueezeFactors::from_valid(self.squeeze_strength, self.squeeze_direction)
    }

    /// `γΓ/2`
    fn prefactor(&self) -> T {
        self.bandwidth * self.coupling_strength / T::lit(2.0)
    }
}

fn check_r<T: Scalar>(r: T) -> Result<()> {
    if r >= T::zero() && r <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("r ∈ [0,1] (got {r})")))
    }
}

/// `u = cosh r`, `v = sinh r · e^{iθ}`, `w = sinh r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeFactors<T: Scalar> {
    pub u: T,
    pub v: Complex<T>,
    pub w: T,
}

impl<T: Scalar> SqueezeFactors<T> {
    fn from_valid(r: T, theta: T) -> Self {
        let w = r.sinh();
        Self { u: r.cosh(), v: Complex::from_polar(w, theta), w }
    }
}

pub fn squeeze_factors<T: Scalar>(r: T, theta: T) -> Result<SqueezeFactors<T>> {
    check_r(r)?;
    Ok(SqueezeFactors::from_valid(r, theta))
}

/// `α₁(0,0) = (γΓ/2)(u² − v·u)`
pub fn alpha1_coeff<T: Scalar>(spec: &SqueezedBathSpec<T>) -> Complex<T> {
    let f = spec.squeeze_factors();
    (Complex::from(f.u * f.u) - f.v * f.u) * spec.prefactor()
}

/// `α₂(0,0) = (γΓ/2)(|v|² − v*·u)`
pub fn alpha2_coeff<T: Scalar>(spec: &SqueezedBathSpec<T>) -> Complex<T> {
    let f = spec.squeeze_factors();
    (Complex::from(f.v.norm_sqr()) - f.v.conj() * f.u) * spec.prefactor()
}

/// Non-stationary kernel `α₁(t,s)`.
pub fn alpha1_kernel<T: Scalar>(spec: &SqueezedBathSpec<T>, t: T, s: T) -> Complex<T> {
    let f = spec.squeeze_factors();
    let w0 = spec.center_frequency;
    let two = T::lit(2.0);
    let amplitude = Complex::from(f.u * f.u) - f.v * f.u * Complex::from_polar(T::one(), -two * w0 * s);
    amplitude * spec.prefactor() * envelope(spec, -w0 * (t - s), t - s)
}

/// Non-stationary kernel `α₂(t,s)`.
pub fn alpha2_kernel<T: Scalar>(spec: &SqueezedBathSpec<T>, t: T, s: T) -> Complex<T> {
    let f = spec.squeeze_factors();
    let w0 = spec.center_frequency;
    let two = T::lit(2.0);
    let amplitude =
        Complex::from(f.v.norm_sqr()) - f.v.conj() * f.u * Complex::from_polar(T::one(), two * w0 * t);
    amplitude * spec.prefactor() * envelope(spec, w0 * (t - s), t - s)
}

/// `e^{iφ − γ|Δ|}`
fn envelope<T: Scalar>(spec: &SqueezedBathSpec<T>, phase: T, delta: T) -> Complex<T> {
    Complex::from_polar((-spec.bandwidth * delta.abs()).exp(), phase)
}

/// Unsqueezed Ornstein–Uhlenbeck kernel `(γΓ/2) e^{−iω₀(t−s) − γ|t−s|}`.
pub fn ornstein_uhlenbeck_kernel<T: Scalar>(spec: &SqueezedBathSpec<T>, t: T, s: T) -> Complex<T> {
    envelope(spec, -spec.center_frequency * (t - s), t - s) * spec.prefactor()
}

/// `V(p) = ¼[u² + w² − 2uw cos θ]`
pub fn variance_p_exact<T: Scalar>(r: T, theta: T) -> T {
    let (u, w) = (r.cosh(), r.sinh());
    (u * u + w * w - T::lit(2.0) * u * w * theta.cos()) / T::lit(4.0)
}

/// `V(x) = ¼[u² + w² + 2uw cos θ]`
pub fn variance_x_exact<T: Scalar>(r: T, theta: T) -> T {
    let (u, w) = (r.cosh(), r.sinh());
    (u * u + w * w + T::lit(2.0) * u * w * theta.cos()) / T::lit(4.0)
}

/// Second-order expansion `⅛[2 − 4r cos θ + 4r²]`.
pub fn variance_p_taylor<T: Scalar>(r: T, theta: T) -> T {
    let four = T::lit(4.0);
    (T::lit(2.0) - four * r * theta.cos() + four * r * r) / T::lit(8.0)
}

/// Second-order expansion `⅛[2 + 4r cos θ + 4r²]`.
pub fn variance_x_taylor<T: Scalar>(r: T, theta: T) -> T {
    let four = T::lit(4.0);
    (T::lit(2.0) + four * r * theta.cos() + four * r * r) / T::lit(8.0)
}

/// Squeeze strength at which the fidelity peak is expected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalR<T> {
    pub value: T,
    /// False when `θ` lies outside `[0, π/2]`, where no interior peak exists.
    pub has_peak: bool,
}

/// `r_c = 1 − 2θ/π` on `θ ∈ [0, π/2]`, flagged zero elsewhere.
pub fn critical_r<T: Scalar>(theta: T) -> CriticalR<T> {
    if theta >= T::zero() && theta <= T::FRAC_PI_2() {
        let value = (T::one() - T::lit(2.0) * theta / T::PI()).max(T::zero()).min(T::one());
        CriticalR { value, has_peak: true }
    } else {
        CriticalR { value: T::zero(), has_peak: false }
    }
}

impl<T: Scalar> Default for CriticalR<T> {
    fn default() -> Self {
        Self { value: T::zero(), has_peak: false }
    }
}
