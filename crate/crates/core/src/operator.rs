//! Dense complex operators together with pure and mixed states.
//!
//! Storage is row-major and every operator is square.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

type C<T> = Complex<T>;

/// Square complex matrix in row-major layout.
#[derive(Clone, PartialEq)]
pub struct Operator<T: Scalar> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> fmt::Debug for Operator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

impl<T: Scalar> Operator<T> {
    pub fn new(dim: usize, entries: Vec<C<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::NotSquare { expected: dim * dim, got: entries.len() });
        }
        Ok(Self { dim, data: entries })
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| C::new(T::lit(x), T::zero())).collect())
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self { dim, data: vec![C::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.data[i * dim + i] = C::one();
        }
        out
    }

    pub fn diagonal(values: &[C<T>]) -> Result<Self> {
        let dim = values.len();
        Self::from_fn(dim, |i, j| if i == j { values[i] } else { C::zero() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C<T> {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C<T>) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let mut out = Self::zeros(self.dim);
        matmul_into(self, other, &mut out);
        Ok(out)
    }

    /// `self·other − other·self`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let mut out = self.matmul(other)?;
        out.sub_product(other, self);
        Ok(out)
    }

    /// `self·other + other·self`
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        let mut out = self.matmul(other)?;
        out.add_product(other, self);
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(self.data[j * n + i].conj());
            }
        }
        Self { dim: n, data }
    }

    /// Kronecker product; the left factor is the most significant index.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * dim + j * m + l] = a * other.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).fold(C::zero(), |acc, i| acc + self.data[i * self.dim + i])
    }

    pub fn scale(&self, factor: C<T>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * factor).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let mut out = self.clone();
        out.axpy(C::one(), other);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let mut out = self.clone();
        out.axpy(-C::one(), other);
        Ok(out)
    }

    /// Largest entrywise modulus of `A − A†`.
    pub fn hermiticity_residue(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                let d = self.data[i * n + j] - self.data[j * n + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_residue() <= tol
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    /// `Re tr(A·A)`; equals `tr ρ²` for Hermitian `ρ`.
    pub fn purity(&self) -> T {
        let n = self.dim;
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + (self.data[i * n + j] * self.data[j * n + i]).re;
            }
        }
        acc
    }

    /// `⟨ψ|A|ψ⟩` as a complex number.
    pub fn sandwich(&self, psi: &StateVector<T>) -> Result<C<T>> {
        check_dims(self.dim, psi.dim())?;
        let n = self.dim;
        let amps = psi.amplitudes();
        let mut acc = C::zero();
        for i in 0..n {
            let mut row = C::zero();
            for j in 0..n {
                row = row + self.data[i * n + j] * amps[j];
            }
            acc = acc + amps[i].conj() * row;
        }
        Ok(acc)
    }

    /// Real expectation value; errors if the imaginary residue exceeds `1e-9`.
    pub fn expectation(&self, psi: &StateVector<T>) -> Result<T> {
        let z = self.sandwich(psi)?;
        if z.im.abs() > T::tol(1e-9) {
            return Err(Error::ComplexExpectation(z.im.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(z.re)
    }

    // In-place kernels used by the integrator. Callers guarantee matching dims.

    /// `self += c · other`
    #[inline]
    pub(crate) fn axpy(&mut self, c: C<T>, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + c * *b;
        }
    }

    /// `self += a·b`
    pub(crate) fn add_product(&mut self, a: &Self, b: &Self) {
        gemm_acc(a, b, self, C::one());
    }

    /// `self −= a·b`
    pub(crate) fn sub_product(&mut self, a: &Self, b: &Self) {
        gemm_acc(a, b, self, -C::one());
    }

    pub(crate) fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|z| *z = C::zero());
    }

    pub(crate) fn copy_from(&mut self, other: &Self) {
        self.data.copy_from_slice(&other.data);
    }
}

/// `out = a·b`
pub(crate) fn matmul_into<T: Scalar>(a: &Operator<T>, b: &Operator<T>, out: &mut Operator<T>) {
    out.fill_zero();
    gemm_acc(a, b, out, C::one());
}

/// `out += sign · a·b`, i-k-j order so the inner loop walks contiguous rows.
fn gemm_acc<T: Scalar>(a: &Operator<T>, b: &Operator<T>, out: &mut Operator<T>, sign: C<T>) {
    let n = a.dim;
    debug_assert!(b.dim == n && out.dim == n);
    for i in 0..n {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a.data[i * n + k];
            if aik.is_zero() {
                continue;
            }
            let s = aik * sign;
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o = *o + s * bkj;
            }
        }
    }
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Scalar> {
    amps: Vec<C<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// Accepts amplitudes whose squared norm is 1 within `1e-12`.
    pub fn new(amps: Vec<C<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let norm2 = amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if (norm2 - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::NotNormalized(norm2.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<C<T>>) -> Result<Self> {
        let norm = amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if amps.is_empty() || norm.is_zero() {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self { amps: amps.into_iter().map(|z| z / norm).collect() })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| C::new(T::lit(x), T::zero())).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, max: dim.saturating_sub(1) });
        }
        let mut amps = vec![C::zero(); dim];
        amps[index] = C::one();
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amps.iter().zip(&other.amps).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(&self) -> Operator<T> {
        let n = self.dim();
        Operator::from_fn(n, |i, j| self.amps[i] * self.amps[j].conj()).expect("nonempty state")
    }
}

/// Hermitian, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Scalar> {
    op: Operator<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity and unit trace, both within `1e-9`.
    pub fn new(op: Operator<T>) -> Result<Self> {
        let tol = T::tol(1e-9);
        let herm = op.hermiticity_residue();
        if herm > tol {
            return Err(Error::NotHermitian(herm.to_f64().unwrap_or(f64::NAN)));
        }
        let tr = op.trace();
        if (tr - C::one()).norm() > tol {
            return Err(Error::BadTrace(tr.re.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { op })
    }

    pub fn pure(psi: &StateVector<T>) -> Self {
        Self { op: psi.projector() }
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / T::from_usize(dim).expect("dimension fits scalar");
        Self { op: Operator::identity(dim).scale(C::new(w, T::zero())) }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &Operator<T> {
        &self.op
    }

    pub fn into_operator(self) -> Operator<T> {
        self.op
    }

    pub fn purity(&self) -> T {
        self.op.purity()
    }
}

/// `⟨ψ|ρ|ψ⟩`
pub fn expectation<T: Scalar>(rho: &DensityMatrix<T>, psi: &StateVector<T>) -> Result<T> {
    rho.op.expectation(psi)
}

/// Pauli matrices and the 2×2 identity.
pub mod pauli {
    use super::*;

    pub fn identity<T: Scalar>() -> Operator<T> {
        Operator::identity(2)
    }

    pub fn sigma_x<T: Scalar>() -> Operator<T> {
        Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn sigma_y<T: Scalar>() -> Operator<T> {
        let (z, i) = (C::zero(), C::i());
        Operator::new(2, vec![z, -i, i, z]).unwrap()
    }

    pub fn sigma_z<T: Scalar>() -> Operator<T> {
        Operator::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
}
