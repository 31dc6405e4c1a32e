use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{basis_vector, OperatorMatrix};
use crate::model::HilbertConfig;

/// Tolerance on `‖ψ‖ = 1` and `Tr ρ = 1`.
pub const NORM_TOLERANCE: f64 = 1e-6;
/// Tolerance on `ρ = ρ†` for a valid density matrix.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
/// Most negative eigenvalue accepted in an input density matrix.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Density,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(DVector<Complex64>),
    Density(DMatrix<Complex64>),
}

impl QuantumState {
    pub fn pure(psi: DVector<Complex64>) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidDimension { dim: 0, reason: "state vector must be nonempty" });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Integrity { invariant: "normalization", t: f64::NAN, detail: format!("‖ψ‖ = {norm}") });
        }
        Ok(Self::Pure(psi))
    }

    pub fn density(rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::DimensionMismatch { expected: rho.nrows(), found: rho.ncols() });
        }
        if rho.is_empty() {
            return Err(Error::InvalidDimension { dim: 0, reason: "density matrix must be nonempty" });
        }
        check_density(&rho, f64::NAN, HERMITICITY_TOLERANCE, NORM_TOLERANCE, POSITIVITY_TOLERANCE)?;
        Ok(Self::Density(rho))
    }

    /// Bare product state `|photons⟩ ⊗ |phonons⟩`.
    pub fn basis(hc: &HilbertConfig, photons: usize, phonons: usize) -> Result<Self> {
        hc.validate()?;
        if photons >= hc.n_a || phonons >= hc.n_b {
            return Err(Error::param("state", format!("|{photons},{phonons}> outside truncation")));
        }
        Ok(Self::Pure(basis_vector(hc.dim(), hc.index(photons, phonons))))
    }

    /// `|0,0⟩`, the default initial state.
    pub fn ground(hc: &HilbertConfig) -> Result<Self> {
        Self::basis(hc, 0, 0)
    }

    pub fn kind(&self) -> StateKind {
        match self {
            Self::Pure(_) => StateKind::Pure,
            Self::Density(_) => StateKind::Density,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Density(m) => m.nrows(),
        }
    }

    pub fn to_density(&self) -> DMatrix<Complex64> {
        match self {
            Self::Pure(v) => v * v.adjoint(),
            Self::Density(m) => m.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&DVector<Complex64>> {
        match self {
            Self::Pure(v) => Some(v),
            Self::Density(_) => None,
        }
    }

    pub fn as_density(&self) -> Option<&DMatrix<Complex64>> {
        match self {
            Self::Density(m) => Some(m),
            Self::Pure(_) => None,
        }
    }

    /// `⟨O⟩`; the state need not be normalized for pure inputs (the result is
    /// divided by `‖ψ‖²`).
    pub fn expectation(&self, op: &OperatorMatrix) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(match self {
            Self::Pure(v) => v.dotc(&(op.entries() * v)) / v.norm_squared(),
            Self::Density(m) => (op.entries() * m).trace(),
        })
    }

    /// `⟨φ|ρ|φ⟩` or `|⟨φ|ψ⟩|²`.
    pub fn overlap(&self, phi: &DVector<Complex64>) -> Result<f64> {
        if phi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: phi.len() });
        }
        Ok(match self {
            Self::Pure(v) => phi.dotc(v).norm_sqr(),
            Self::Density(m) => phi.dotc(&(m * phi)).re,
        })
    }
}

pub(crate) fn min_eigenvalue(rho: &DMatrix<Complex64>) -> f64 {
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn hermiticity_defect(rho: &DMatrix<Complex64>) -> f64 {
    crate::fockspace::max_abs_diff(rho, &rho.adjoint())
}

/// Check trace, Hermiticity and positivity, naming the first violated invariant.
pub(crate) fn check_density(
    rho: &DMatrix<Complex64>,
    t: f64,
    hermiticity: f64,
    trace: f64,
    positivity: f64,
) -> Result<()> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > trace || tr.im.abs() > trace || !tr.re.is_finite() {
        return Err(Error::Integrity { invariant: "trace", t, detail: format!("Tr ρ = {tr}") });
    }
    let defect = hermiticity_defect(rho);
    if defect > hermiticity {
        return Err(Error::Integrity { invariant: "hermiticity", t, detail: format!("max|ρ − ρ†| = {defect:.3e}") });
    }
    let lowest = min_eigenvalue(rho);
    if lowest < -positivity {
        return Err(Error::Integrity { invariant: "positivity", t, detail: format!("smallest eigenvalue {lowest:.3e}") });
    }
    Ok(())
}

/// A named quantity recorded along a propagation.
#[derive(Debug, Clone)]
pub struct Observable {
    pub label: String,
    kind: ObservableKind,
}

#[derive(Debug, Clone)]
enum ObservableKind {
    Operator(OperatorMatrix),
    Projector(DVector<Complex64>),
}

impl Observable {
    /// Expectation value of a Hermitian operator.
    pub fn operator(label: impl Into<String>, op: OperatorMatrix) -> Self {
        Self { label: label.into(), kind: ObservableKind::Operator(op) }
    }

    /// Population of the normalized state `phi`.
    pub fn projector(label: impl Into<String>, phi: DVector<Complex64>) -> Self {
        Self { label: label.into(), kind: ObservableKind::Projector(phi) }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ObservableKind::Operator(op) => op.dim(),
            ObservableKind::Projector(v) => v.len(),
        }
    }

    /// Real expectation value in a (possibly unnormalized) pure state.
    pub fn evaluate_pure(&self, psi: &[Complex64]) -> f64 {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        match &self.kind {
            ObservableKind::Projector(phi) => {
                let amp: Complex64 = phi.iter().zip(psi).map(|(p, s)| p.conj() * s).sum();
                amp.norm_sqr() / norm
            }
            ObservableKind::Operator(op) => {
                let m = op.entries();
                let n = psi.len();
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let mut row = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        row += m[(i, j)] * psi[j];
                    }
                    acc += psi[i].conj() * row;
                }
                acc.re / norm
            }
        }
    }

    pub fn evaluate_density(&self, rho: &DMatrix<Complex64>) -> f64 {
        match &self.kind {
            ObservableKind::Projector(phi) => phi.dotc(&(rho * phi)).re,
            ObservableKind::Operator(op) => (op.entries() * rho).trace().re,
        }
    }

    pub fn evaluate(&self, state: &QuantumState) -> f64 {
        match state {
            QuantumState::Pure(v) => self.evaluate_pure(v.as_slice()),
            QuantumState::Density(m) => self.evaluate_density(m),
        }
    }
}
