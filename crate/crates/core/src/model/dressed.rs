//! Polaron basis `|n⟩ ⊗ D(nβ)|m⟩` diagonalizing the undriven Hamiltonian.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{basis_vector, displaced_state_deficit, displacement_op, tensor_state, TRUNCATION_TOLERANCE};
use crate::model::params::{HilbertConfig, PhysicalParams};

/// Dressed states and energies for every `n < n_a`, `m < n_b`.
///
/// Vectors are columns of the truncated displacement, so each photon sector
/// is orthonormal. How faithfully a column represents the true displaced
/// state is recorded as a norm deficit; [`DressedBasis::state`] refuses
/// states whose deficit exceeds the truncation tolerance.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub hilbert: HilbertConfig,
    pub beta: f64,
    states: Vec<Vec<DVector<Complex64>>>,
    energies: Vec<Vec<f64>>,
    deficits: Vec<Vec<f64>>,
}

pub fn dressed_basis(params: &PhysicalParams, hc: &HilbertConfig) -> Result<DressedBasis> {
    params.validate()?;
    hc.validate()?;
    let beta = params.beta();
    let mut states = Vec::with_capacity(hc.n_a);
    let mut energies = Vec::with_capacity(hc.n_a);
    let mut deficits = Vec::with_capacity(hc.n_a);
    for n in 0..hc.n_a {
        let alpha = n as f64 * beta;
        let displacement = displacement_op(alpha, hc.n_b)?;
        let photon = basis_vector(hc.n_a, n);
        let mut sector = Vec::with_capacity(hc.n_b);
        let mut sector_deficit = Vec::with_capacity(hc.n_b);
        for m in 0..hc.n_b {
            let column = displacement.entries().column(m).into_owned();
            sector.push(tensor_state(&photon, &column));
            sector_deficit.push(displaced_state_deficit(alpha, m, hc.n_b)?);
        }
        if sector_deficit[0] > TRUNCATION_TOLERANCE {
            return Err(Error::TruncationInsufficient { m: 0, alpha, dim: hc.n_b, deficit: sector_deficit[0] });
        }
        states.push(sector);
        energies.push(
            (0..hc.n_b)
                .map(|m| m as f64 * params.omega_m - params.g * params.g * (n * n) as f64 / params.omega_m)
                .collect(),
        );
        deficits.push(sector_deficit);
    }
    Ok(DressedBasis { hilbert: *hc, beta, states, energies, deficits })
}

impl DressedBasis {
    /// `|n, m~(n)⟩` as a composite vector.
    pub fn state(&self, n: usize, m: usize) -> Result<&DVector<Complex64>> {
        self.check_index(n, m)?;
        let deficit = self.deficits[n][m];
        if deficit > TRUNCATION_TOLERANCE {
            return Err(Error::TruncationInsufficient {
                m,
                alpha: n as f64 * self.beta,
                dim: self.hilbert.n_b,
                deficit,
            });
        }
        Ok(&self.states[n][m])
    }

    /// `E_{n,m} = m ω_m − g² n² / ω_m`.
    pub fn energy(&self, n: usize, m: usize) -> Result<f64> {
        self.check_index(n, m)?;
        Ok(self.energies[n][m])
    }

    pub fn deficit(&self, n: usize, m: usize) -> Result<f64> {
        self.check_index(n, m)?;
        Ok(self.deficits[n][m])
    }

    /// Whether `|n, m~(n)⟩` is represented within the truncation tolerance.
    pub fn is_faithful(&self, n: usize, m: usize) -> bool {
        n < self.hilbert.n_a && m < self.hilbert.n_b && self.deficits[n][m] <= TRUNCATION_TOLERANCE
    }

    fn check_index(&self, n: usize, m: usize) -> Result<()> {
        if n >= self.hilbert.n_a || m >= self.hilbert.n_b {
            return Err(Error::param(
                "state",
                format!("|{n},{m}> outside truncation ({}, {})", self.hilbert.n_a, self.hilbert.n_b),
            ));
        }
        Ok(())
    }
}

/// A dressed state whose population is reported by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrackedState {
    pub photons: usize,
    pub phonons: usize,
}

impl TrackedState {
    pub const fn new(photons: usize, phonons: usize) -> Self {
        Self { photons, phonons }
    }

    /// Column label, e.g. `p_0_2` or `p_1_0_disp` for displaced sectors.
    pub fn label(&self) -> String {
        if self.photons == 0 {
            format!("p_{}_{}", self.photons, self.phonons)
        } else {
            format!("p_{}_{}_disp", self.photons, self.phonons)
        }
    }
}

/// Ground, first excited and target states of both lambda systems.
pub const TRACKED_STATES: [TrackedState; 6] = [
    TrackedState::new(0, 0),
    TrackedState::new(0, 1),
    TrackedState::new(0, 2),
    TrackedState::new(1, 0),
    TrackedState::new(1, 1),
    TrackedState::new(1, 2),
];
