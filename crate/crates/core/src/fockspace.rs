//! Truncated single-mode and composite-mode operator algebra.
//!
//! All matrices are dense and expressed in the Fock (number) basis. Composite
//! spaces are ordered cavity-major: the basis index of `|n>_a ⊗ |m>_b` is
//! `n * n_b + m`, with `n_b` the mechanical truncation. Every constructor in
//! this crate follows that convention.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum tolerated norm deficit of a displaced number state.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Dense complex square matrix acting on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    hermitian_hint: bool,
}

impl OperatorMatrix {
    /// Wraps a square matrix.
    ///
    /// # Panics
    /// If `entries` is not square.
    pub fn new(entries: DMatrix<Complex64>, hermitian_hint: bool) -> Self {
        assert!(entries.is_square(), "operator matrices must be square");
        Self { entries, hermitian_hint }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, dim), true)
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), true)
    }

    pub fn from_real(entries: DMatrix<f64>, hermitian_hint: bool) -> Self {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)), hermitian_hint)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.entries.adjoint(), self.hermitian_hint)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(&self.entries * factor, self.hermitian_hint && factor.im == 0.0)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// `max |M - M†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    /// Largest entrywise distance to another operator of the same size.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.entries * v
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let e = &self.entries * &other.entries - &other.entries * &self.entries;
        OperatorMatrix::new(e, false)
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(&self.entries * &rhs.entries, false)
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(
            &self.entries + &rhs.entries,
            self.hermitian_hint && rhs.hermitian_hint,
        )
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(
            &self.entries - &rhs.entries,
            self.hermitian_hint && rhs.hermitian_hint,
        )
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension { dim, reason: "Fock truncation must be at least 1" });
    }
    Ok(())
}

/// Ladder operator `b` with `b|i+1> = sqrt(i+1)|i>`.
pub fn annihilation_op(dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim - 1 {
        m[(i, i + 1)] = ((i + 1) as f64).sqrt();
    }
    Ok(OperatorMatrix::from_real(m, false))
}

pub fn creation_op(dim: usize) -> Result<OperatorMatrix> {
    Ok(annihilation_op(dim)?.adjoint())
}

pub fn number_op(dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let diag = DVector::from_iterator(dim, (0..dim).map(|i| i as f64));
    Ok(OperatorMatrix::from_real(DMatrix::from_diagonal(&diag), true))
}

/// Unit vector `|index>` of a `dim`-dimensional space.
pub fn basis_vector(dim: usize, index: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Truncated displacement `exp[β(b† − b)]`.
///
/// Built from the eigendecomposition of the Hermitian generator `i(b† − b)`,
/// so the result is unitary within the truncated space.
pub fn displacement_op(beta: f64, dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    if !beta.is_finite() {
        return Err(Error::param("beta", format!("must be finite, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(OperatorMatrix::identity(dim));
    }
    let b = annihilation_op(dim)?;
    let generator = (b.entries().adjoint() - b.entries()) * Complex64::i();
    let eig = SymmetricEigen::new(generator);
    let phases = eig.eigenvalues.map(|lambda| Complex64::from_polar(1.0, -beta * lambda));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(OperatorMatrix::new(scaled * v.adjoint(), false))
}

/// Associated Laguerre polynomial `L_n^α(x)` by upward recurrence in `n`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed-form coefficient `A_{m,q}^{(n)} = sqrt(n) <m|D(-β)|q>`.
///
/// These are the transition amplitudes of the drive `a†` between the
/// displaced bases of adjacent photon sectors.
pub fn a_coefficient(n: usize, m: usize, q: usize, beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::param("beta", format!("must be finite, got {beta}")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let (lo, hi) = if m < q { (m, q) } else { (q, m) };
    let order = hi - lo;
    // beta^(hi-lo) * sqrt(lo!/hi!) accumulated factor by factor.
    let prefactor: f64 = (lo + 1..=hi).map(|j| beta / (j as f64).sqrt()).product();
    let x = beta * beta;
    let poly = laguerre(lo, order as f64, x);
    let sign = if m >= q && order % 2 == 1 { -1.0 } else { 1.0 };
    Ok((n as f64).sqrt() * (-0.5 * x).exp() * prefactor * sign * poly)
}

/// Weight of `D(α)|m>` that falls outside the first `dim` Fock states,
/// computed from the closed-form matrix elements.
pub fn displaced_state_deficit(alpha: f64, m: usize, dim: usize) -> Result<f64> {
    let mut inside = 0.0;
    for k in 0..dim {
        // <k|D(α)|m> = <k|D(-(-α))|m>
        let amp = a_coefficient(1, k, m, -alpha)?;
        inside += amp * amp;
    }
    Ok((1.0 - inside).max(0.0))
}

/// Displaced number state `D(nβ)|m>` in a `dim`-dimensional truncation.
pub fn displaced_number_state(
    n_photons: usize,
    m: usize,
    beta: f64,
    dim: usize,
) -> Result<DVector<Complex64>> {
    check_dim(dim)?;
    if m >= dim {
        return Err(Error::param("m", format!("phonon index {m} outside truncation {dim}")));
    }
    let alpha = n_photons as f64 * beta;
    let deficit = displaced_state_deficit(alpha, m, dim)?;
    if deficit > TRUNCATION_TOLERANCE {
        return Err(Error::TruncationInsufficient { m, alpha, dim, deficit });
    }
    Ok(displacement_op(alpha, dim)?.entries().column(m).into_owned())
}

/// Minimal positive coupling `g_N` at which `A_{N,N}^{(1)}` vanishes, i.e. the
/// smallest root of `L_N^0((g/ω_m)^2)`.
pub fn find_g_n(n: usize, omega_m: f64) -> Result<f64> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::param("N", format!("must be a positive even integer, got {n}")));
    }
    if !(omega_m.is_finite() && omega_m > 0.0) {
        return Err(Error::param("omega_m", format!("must be positive, got {omega_m}")));
    }
    const GRID: f64 = 0.01;
    let f = |beta: f64| laguerre(n, 0.0, beta * beta);
    // All roots of L_N^0 lie below x = 4N + 2.
    let limit = (4.0 * n as f64 + 2.0).sqrt() + 1.0;
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    let mut bracket = None;
    let mut k = 1;
    while (k as f64) * GRID <= limit {
        let hi = k as f64 * GRID;
        let f_hi = f(hi);
        if f_hi == 0.0 {
            return Ok(hi * omega_m);
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        lo = hi;
        f_lo = f_hi;
        k += 1;
    }
    let (mut lo, mut hi, mut f_lo) = bracket
        .ok_or_else(|| Error::InternalConsistency(format!("no root of L_{n}^0 bracketed")))?;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < 1e-12 && hi - lo < 1e-12 {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(mid * omega_m)
}

/// Kronecker product `A ⊗ B`; `A` carries the slow (outer) index.
pub fn tensor(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix::new(
        a.entries().kronecker(b.entries()),
        a.hermitian_hint() && b.hermitian_hint(),
    )
}

/// Kronecker product of two state vectors, cavity factor first.
pub fn tensor_state(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    a.kronecker(b)
}
