use nalgebra::DVector;
use num_complex::Complex64;

use crate::dynamics::config::IntegratorConfig;
use crate::dynamics::ode::{Dopri5, OdeSystem, Tolerances};
use crate::dynamics::sparse::DrivenCsr;
use crate::dynamics::state::{QuantumState, NORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::fockspace::{a_coefficient, find_g_n, OperatorMatrix};
use crate::model::{EffectiveBasis, HilbertConfig, PhysicalParams, Pulse, PulseTrain, RotatingHamiltonian};

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Per-step change of `‖ψ‖²` tolerated by the Schrödinger propagator, per unit
/// time and in absolute terms.
pub const NORM_DRIFT_PER_STEP: f64 = 1e-10;

/// A Hermitian, possibly time-dependent Hamiltonian acting on state vectors.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    /// `out = H(t) psi`.
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]);

    /// Step cap at `t`.
    fn max_step(&self, _t: f64, cfg: &IntegratorConfig) -> f64 {
        cfg.max_step_idle.unwrap_or(f64::INFINITY)
    }
}

impl Hamiltonian for OperatorMatrix {
    fn dim(&self) -> usize {
        OperatorMatrix::dim(self)
    }

    fn apply(&self, _t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let m = self.entries();
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (0..psi.len()).map(|j| m[(i, j)] * psi[j]).sum();
        }
    }
}

/// Sparse rotating-frame Hamiltonian `H_r(t)`.
#[derive(Debug, Clone)]
pub struct DrivenHamiltonian {
    params: PhysicalParams,
    train: PulseTrain,
    hilbert: HilbertConfig,
    op: DrivenCsr,
}

impl DrivenHamiltonian {
    pub fn new(params: PhysicalParams, train: PulseTrain, hilbert: HilbertConfig) -> Result<Self> {
        Ok(Self::from_rotating(&RotatingHamiltonian::new(params, train, hilbert)?))
    }

    pub fn from_rotating(h: &RotatingHamiltonian) -> Self {
        let raise = h.ops.a.adjoint();
        let op = DrivenCsr::new(h.h_static.entries(), raise.entries(), h.ops.a.entries(), 0.0);
        Self { params: h.params, train: h.train, hilbert: h.ops.hilbert, op }
    }

    pub fn hilbert(&self) -> HilbertConfig {
        self.hilbert
    }
}

impl Hamiltonian for DrivenHamiltonian {
    fn dim(&self) -> usize {
        self.hilbert.dim()
    }

    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let c = self.train.drive_coefficient(&self.params, t);
        self.op.matvec(c, psi, out);
    }

    fn max_step(&self, t: f64, cfg: &IntegratorConfig) -> f64 {
        cfg.step_limit(&self.params, &self.train, t, true)
    }
}

/// `H_eff^(N)(t)` on its [`EffectiveBasis`].
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub basis: EffectiveBasis,
    params: PhysicalParams,
    train: PulseTrain,
    /// `(row, col, coefficient)` of pump and Stokes couplings, upper triangle.
    pump: Vec<(usize, usize, f64)>,
    stokes: Vec<(usize, usize, f64)>,
}

impl EffectiveHamiltonian {
    pub fn new(n: usize, params: PhysicalParams, train: PulseTrain) -> Result<Self> {
        let basis = EffectiveBasis::new(n)?;
        params.validate()?;
        train.validate()?;
        let g_n = find_g_n(n, params.omega_m)?;
        if (params.g - g_n).abs() > 1e-6 * g_n {
            log::warn!("effective model with N = {n} assumes g = {g_n}, got {}", params.g);
        }
        let beta = params.beta();
        let mut pump = Vec::new();
        let mut stokes = Vec::new();
        for m in 0..n {
            let excited = basis.position(1, m).expect("excited state listed");
            let lower = basis.position(0, m).expect("ground state listed");
            pump.push((excited, lower, a_coefficient(1, m, m, beta)?));
            if m + 2 <= n {
                let upper = basis.position(0, m + 2).expect("target state listed");
                stokes.push((excited, upper, a_coefficient(1, m, m + 2, beta)?));
            }
        }
        Ok(Self { basis, params, train, pump, stokes })
    }
}

impl Hamiltonian for EffectiveHamiltonian {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (links, which) in [(&self.pump, Pulse::Pump), (&self.stokes, Pulse::Stokes)] {
            let amp = self.train.amplitude(which, t);
            if amp == 0.0 {
                continue;
            }
            for &(i, j, a) in links {
                out[i] += psi[j] * (amp * a);
                out[j] += psi[i] * (amp * a);
            }
        }
    }

    fn max_step(&self, t: f64, cfg: &IntegratorConfig) -> f64 {
        cfg.step_limit(&self.params, &self.train, t, false)
    }
}

struct SchrodingerSystem<'a> {
    h: &'a dyn Hamiltonian,
    cfg: &'a IntegratorConfig,
}

impl OdeSystem for SchrodingerSystem<'_> {

    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self.h.apply(t, y, dy);
        for v in dy.iter_mut() {
            *v *= MINUS_I;
        }
    }

    fn max_step(&self, t: f64) -> f64 {
        self.h.max_step(t, self.cfg)
    }

    fn accept(&self, _t: f64, h: f64, y_old: &[Complex64], y_new: &[Complex64]) -> bool {
        let before: f64 = y_old.iter().map(|z| z.norm_sqr()).sum();
        let after: f64 = y_new.iter().map(|z| z.norm_sqr()).sum();
        (after - before).abs() <= NORM_DRIFT_PER_STEP * h.min(1.0)
    }
}

/// Sampled pure states.
#[derive(Debug, Clone)]
pub struct PureEvolution {
    pub times: Vec<f64>,
    pub states: Vec<DVector<Complex64>>,
}

/// Integrate `i dψ/dt = H(t) ψ`, calling `sink` at every sample time.
///
/// Steps that change `‖ψ‖²` by more than [`NORM_DRIFT_PER_STEP`] times the
/// step length are rejected rather than renormalized.
pub fn evolve_schrodinger_with<F>(psi0: &QuantumState, h: &dyn Hamiltonian, cfg: &IntegratorConfig, mut sink: F) -> Result<()>
where
    F: FnMut(f64, &DVector<Complex64>) -> Result<()>,
{
    cfg.validate()?;
    let psi0 = psi0
        .as_pure()
        .ok_or_else(|| Error::param("psi0", "Schrödinger propagation needs a pure state"))?;
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.len() });
    }
    let tol = Tolerances { rel: cfg.rel_tol, abs: cfg.abs_tol };
    let mut sys = SchrodingerSystem { h, cfg };
    let mut ode = Dopri5::new(cfg.start_time, psi0.as_slice().to_vec(), tol);
    for &ts in &cfg.sample_times {
        ode.advance_to(&mut sys, ts)?;
        let psi = DVector::from_column_slice(&ode.y);
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Integrity { invariant: "normalization", t: ts, detail: format!("‖ψ‖ = {norm}") });
        }
        sink(ts, &psi)?;
    }
    log::debug!("schrodinger: {} steps accepted, {} rejected", ode.accepted, ode.rejected);
    Ok(())
}

pub fn evolve_schrodinger(psi0: &QuantumState, h: &dyn Hamiltonian, cfg: &IntegratorConfig) -> Result<PureEvolution> {
    let mut out = PureEvolution { times: Vec::new(), states: Vec::new() };
    evolve_schrodinger_with(psi0, h, cfg, |t, psi| {
        out.times.push(t);
        out.states.push(psi.clone());
        Ok(())
    })?;
    Ok(out)
}
