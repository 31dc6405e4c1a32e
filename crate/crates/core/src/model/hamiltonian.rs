use num_complex::Complex64;

use crate::error::Result;
use crate::fockspace::{annihilation_op, number_op, tensor, OperatorMatrix};
use crate::model::params::{HilbertConfig, PhysicalParams};
use crate::model::pulse::{Pulse, PulseTrain};

/// Ladder and number operators lifted to the composite cavity ⊗ mechanics space.
#[derive(Debug, Clone)]
pub struct CompositeOperators {
    pub hilbert: HilbertConfig,
    /// Cavity annihilation `a ⊗ 1`.
    pub a: OperatorMatrix,
    /// Mechanical annihilation `1 ⊗ b`.
    pub b: OperatorMatrix,
    /// `a†a ⊗ 1`.
    pub photon_number: OperatorMatrix,
    /// `1 ⊗ b†b`.
    pub phonon_number: OperatorMatrix,
}

impl CompositeOperators {
    pub fn new(hilbert: HilbertConfig) -> Result<Self> {
        hilbert.validate()?;
        let id_a = OperatorMatrix::identity(hilbert.n_a);
        let id_b = OperatorMatrix::identity(hilbert.n_b);
        Ok(Self {
            hilbert,
            a: tensor(&annihilation_op(hilbert.n_a)?, &id_b),
            b: tensor(&id_a, &annihilation_op(hilbert.n_b)?),
            photon_number: tensor(&number_op(hilbert.n_a)?, &id_b),
            phonon_number: tensor(&id_a, &number_op(hilbert.n_b)?),
        })
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::identity(self.hilbert.dim())
    }
}

/// Rotating-frame Hamiltonian split as `H(t) = H_s + c(t) a† + c(t)* a`,
/// with `H_s = ω_m b†b − g a†a (b† + b)` and `c(t)` the complex drive.
#[derive(Debug, Clone)]
pub struct RotatingHamiltonian {
    pub params: PhysicalParams,
    pub train: PulseTrain,
    pub ops: CompositeOperators,
    /// The undriven part `H_s`.
    pub h_static: OperatorMatrix,
}

impl RotatingHamiltonian {
    pub fn new(params: PhysicalParams, train: PulseTrain, hilbert: HilbertConfig) -> Result<Self> {
        params.validate()?;
        train.validate()?;
        let ops = CompositeOperators::new(hilbert)?;
        let mech = ops.phonon_number.scale_real(params.omega_m);
        let position = &ops.b + &ops.b.adjoint();
        let coupling = (&ops.photon_number * &position).scale_real(params.g);
        let mut h_static = &mech - &coupling;
        h_static = OperatorMatrix::new(h_static.into_entries(), true);
        Ok(Self { params, train, ops, h_static })
    }

    pub fn drive_coefficient(&self, t: f64) -> Complex64 {
        self.train.drive_coefficient(&self.params, t)
    }

    pub fn at(&self, t: f64) -> OperatorMatrix {
        let c = self.drive_coefficient(t);
        let raise = self.ops.a.adjoint().scale(c);
        let lower = self.ops.a.scale(c.conj());
        let drive = &raise + &lower;
        OperatorMatrix::new((&self.h_static + &drive).into_entries(), true)
    }
}

/// Full rotating-frame Hamiltonian `H_r(t)` on the truncated composite space.
pub fn build_h_rotating(
    params: &PhysicalParams,
    train: &PulseTrain,
    hc: &HilbertConfig,
    t: f64,
) -> Result<OperatorMatrix> {
    Ok(RotatingHamiltonian::new(*params, *train, *hc)?.at(t))
}

/// Detuning `δ^{(i)}_{n,m,q}` of the `|n−1,q~> -> |n,m~>` transition from the
/// carrier of pulse `which`, in the interaction picture of `H_s`.
pub fn off_resonance_detuning(params: &PhysicalParams, n: usize, m: usize, q: usize, which: Pulse) -> f64 {
    let w = params.omega_m;
    let shift = 2.0 * params.g * params.g / w * (n as f64 - 1.0);
    let phonons = m as f64 - q as f64;
    match which {
        Pulse::Pump => phonons * w - shift,
        Pulse::Stokes => (phonons + 2.0) * w - shift,
    }
}

/// Margin below which the off-resonant two-photon transitions are reported as
/// not negligible.
pub const VALIDITY_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidityMargin {
    /// No drive, so nothing can leak.
    Unconditional,
    Finite(f64),
}

/// How well the drive amplitude is separated from the nearest two-photon
/// resonance, `|2g²/ω_m − Kω_m| / Ω_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    pub margin: ValidityMargin,
    /// Nearest integer to `2 (g/ω_m)^2`.
    pub nearest_integer: i64,
    /// `|2g²/ω_m − Kω_m|`.
    pub detuning_gap: f64,
    pub threshold: f64,
}

impl ValidityReport {
    pub fn satisfied(&self) -> bool {
        match self.margin {
            ValidityMargin::Unconditional => true,
            ValidityMargin::Finite(m) => m >= self.threshold,
        }
    }

    pub fn value(&self) -> f64 {
        match self.margin {
            ValidityMargin::Unconditional => f64::INFINITY,
            ValidityMargin::Finite(m) => m,
        }
    }

    pub fn warning(&self) -> Option<String> {
        if self.satisfied() {
            return None;
        }
        Some(format!(
            "validity margin {:.4} below threshold {} (K = {}, gap {:.5}): off-resonant \
             transitions to the two-photon manifold are not negligible",
            self.value(),
            self.threshold,
            self.nearest_integer,
            self.detuning_gap
        ))
    }
}

pub fn validity_margin(params: &PhysicalParams, omega_0: f64) -> ValidityReport {
    let two_beta_sq = 2.0 * params.beta() * params.beta();
    let k = two_beta_sq.round();
    let gap = (2.0 * params.g * params.g / params.omega_m - k * params.omega_m).abs();
    let margin = if omega_0 == 0.0 {
        ValidityMargin::Unconditional
    } else {
        ValidityMargin::Finite(gap / omega_0)
    };
    let report = ValidityReport {
        margin,
        nearest_integer: k as i64,
        detuning_gap: gap,
        threshold: VALIDITY_THRESHOLD,
    };
    if let Some(w) = report.warning() {
        log::warn!("{w}");
    }
    report
}
