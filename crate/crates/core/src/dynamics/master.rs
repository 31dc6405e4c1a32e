//! Dressed-state Lindblad master equation.
//!
//! Propagation runs in the interaction picture of the undriven Hamiltonian,
//! expressed in its eigenbasis: the free evolution becomes a phase on each
//! matrix element, so the adaptive steps follow the slow drive and
//! dissipation rather than the mechanical oscillation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::channels::{channels_from, JumpChannel};
use crate::dynamics::config::IntegratorConfig;
use crate::dynamics::ode::{Dopri5, OdeSystem, Tolerances};
use crate::dynamics::sparse::{relative_drop, Csr, DrivenCsr};
use crate::dynamics::state::{check_density, Observable, QuantumState};
use crate::dynamics::trajectory::TrajectoryOperators;
use crate::error::{Error, Result};
use crate::model::{dressed_basis, DressedBasis, HilbertConfig, PhysicalParams, PulseTrain, RotatingHamiltonian, TRACKED_STATES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Tolerances checked on every sampled density matrix.
pub const SAMPLE_TRACE_TOLERANCE: f64 = 1e-6;
pub const SAMPLE_HERMITICITY_TOLERANCE: f64 = 1e-8;
pub const SAMPLE_POSITIVITY_TOLERANCE: f64 = 1e-6;

/// `dρ/dt = −i(Kρ − (Kρ)†) + Σ L ρ L†` with `K = H − (i/2) Σ L†L`, valid for
/// Hermitian `ρ`.
#[derive(Debug, Clone)]
pub(crate) struct LindbladKernel {
    n: usize,
    generator: DrivenCsr,
    jumps: Vec<Csr>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct KernelScratch {
    vals: Vec<Complex64>,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
}

impl LindbladKernel {
    fn new(hamiltonian: &DMatrix<Complex64>, raise: &DMatrix<Complex64>, jumps: &[DMatrix<Complex64>]) -> Self {
        let n = hamiltonian.nrows();
        let mut decay = DMatrix::<Complex64>::zeros(n, n);
        for l in jumps {
            decay += l.adjoint() * l;
        }
        let base = hamiltonian - decay * Complex64::new(0.0, 0.5);
        let lower = raise.adjoint();
        Self {
            n,
            generator: DrivenCsr::new(&base, raise, &lower, relative_drop(&base).max(relative_drop(raise))),
            jumps: jumps.iter().map(|l| Csr::from_dense(l, relative_drop(l))).collect(),
        }
    }

    /// `out = L(ρ)` for drive coefficient `c`; `rho` and `out` are row-major.
    fn apply(&self, c: Complex64, rho: &[Complex64], out: &mut [Complex64], s: &mut KernelScratch) {
        let n = self.n;
        s.x.resize(n * n, ZERO);
        s.y.resize(n * n, ZERO);
        self.generator.assemble(c, &mut s.vals);
        self.generator.pattern.mul_dense(&s.vals, rho, &mut s.x);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = MINUS_I * (s.x[i * n + j] - s.x[j * n + i].conj());
            }
        }
        for l in &self.jumps {
            l.mul_dense(rho, &mut s.y);
            l.add_mul_adjoint(&s.y, out);
        }
    }
}

fn to_row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(n: usize, data: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(n, n, data)
}

/// Eigenbasis of the undriven Hamiltonian and the generator expressed in it.
#[derive(Debug, Clone)]
pub(crate) struct DressedFrame {
    /// Columns are eigenvectors, block-diagonal by photon number.
    pub vectors: DMatrix<Complex64>,
    pub energies: Vec<f64>,
    kernel: LindbladKernel,
}

impl DressedFrame {
    fn new(h: &RotatingHamiltonian, jumps: &[DMatrix<Complex64>]) -> Self {
        let hc = h.ops.hilbert;
        let dim = hc.dim();
        let mut vectors = DMatrix::<Complex64>::zeros(dim, dim);
        let mut energies = vec![0.0; dim];
        for n in 0..hc.n_a {
            let off = n * hc.n_b;
            let block = h.h_static.entries().view((off, off), (hc.n_b, hc.n_b)).map(|z| z.re);
            let eig = SymmetricEigen::new(block);
            let mut order: Vec<usize> = (0..hc.n_b).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            for (col, &k) in order.iter().enumerate() {
                energies[off + col] = eig.eigenvalues[k];
                // fix the sign so that the largest component is positive
                let v = eig.eigenvectors.column(k);
                let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
                let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
                for r in 0..hc.n_b {
                    vectors[(off + r, off + col)] = Complex64::new(sign * v[r], 0.0);
                }
            }
        }
        let into = |m: &DMatrix<Complex64>| vectors.adjoint() * m * &vectors;
        let zero = DMatrix::zeros(dim, dim);
        let raise = into(&h.ops.a.adjoint().into_entries());
        let jumps: Vec<DMatrix<Complex64>> = jumps.iter().map(into).collect();
        let kernel = LindbladKernel::new(&zero, &raise, &jumps);
        Self { vectors, energies, kernel }
    }

    fn to_frame(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.vectors.adjoint() * rho * &self.vectors
    }

    fn from_frame(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.vectors * rho * self.vectors.adjoint()
    }
}

/// Everything needed to propagate the open system: Hamiltonian, channels,
/// sparse kernels and cached propagators for trajectories.
#[derive(Debug)]
pub struct OpenSystem {
    pub params: PhysicalParams,
    pub train: PulseTrain,
    pub hilbert: HilbertConfig,
    pub hamiltonian: RotatingHamiltonian,
    pub channels: Vec<JumpChannel>,
    fock_kernel: LindbladKernel,
    frame: DressedFrame,
    pub(crate) trajectory: TrajectoryOperators,
}

impl OpenSystem {
    pub fn new(params: PhysicalParams, train: PulseTrain, hilbert: HilbertConfig) -> Result<Self> {
        let hamiltonian = RotatingHamiltonian::new(params, train, hilbert)?;
        let channels = channels_from(&params, &hamiltonian.ops);
        let jumps: Vec<DMatrix<Complex64>> = channels.iter().map(|c| c.scaled().into_entries()).collect();
        let raise = hamiltonian.ops.a.adjoint().into_entries();
        let fock_kernel = LindbladKernel::new(hamiltonian.h_static.entries(), &raise, &jumps);
        let frame = DressedFrame::new(&hamiltonian, &jumps);
        let trajectory = TrajectoryOperators::new(&frame.vectors, &frame.energies, &hamiltonian, &jumps);
        Ok(Self {
            params,
            train,
            hilbert,
            hamiltonian,
            channels,
            fock_kernel,
            frame,
            trajectory,
        })
    }

    pub fn dim(&self) -> usize {
        self.hilbert.dim()
    }

    /// Right-hand side of the master equation in the bare Fock basis.
    pub fn rhs(&self, t: f64, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho.nrows() });
        }
        let c = self.hamiltonian.drive_coefficient(t);
        let flat = to_row_major(rho);
        let mut out = vec![ZERO; n * n];
        self.fock_kernel.apply(c, &flat, &mut out, &mut KernelScratch::default());
        Ok(from_row_major(n, &out))
    }

    /// Populations of the tracked dressed states and the mean phonon number.
    pub fn tracked_observables(&self) -> Result<Vec<Observable>> {
        let basis = dressed_basis(&self.params, &self.hilbert)?;
        tracked_observables(&basis, &self.hamiltonian)
    }
}

pub(crate) fn tracked_observables(basis: &DressedBasis, h: &RotatingHamiltonian) -> Result<Vec<Observable>> {
    let mut out = Vec::new();
    for s in TRACKED_STATES {
        if s.photons < basis.hilbert.n_a && basis.is_faithful(s.photons, s.phonons) {
            out.push(Observable::projector(s.label(), basis.state(s.photons, s.phonons)?.clone()));
        }
    }
    out.push(Observable::operator("mean_phonon", h.ops.phonon_number.clone()));
    Ok(out)
}

/// `i[ρ, H_r(t)] + Σ D[L]ρ` for the dressed-state channels.
pub fn lindblad_rhs(
    rho: &QuantumState,
    t: f64,
    params: &PhysicalParams,
    train: &PulseTrain,
    hc: &HilbertConfig,
) -> Result<DMatrix<Complex64>> {
    let system = OpenSystem::new(*params, *train, *hc)?;
    system.rhs(t, &rho.to_density())
}

struct FrameSystem<'a> {
    system: &'a OpenSystem,
    cfg: &'a IntegratorConfig,
    origin: f64,
    blocks: usize,
    phases: Vec<Complex64>,
    rho: Vec<Complex64>,
    out: Vec<Complex64>,
    scratch: KernelScratch,
}

impl FrameSystem<'_> {
    fn update_phases(&mut self, t: f64) {
        let dt = t - self.origin;
        for (p, e) in self.phases.iter_mut().zip(&self.system.frame.energies) {
            *p = Complex64::from_polar(1.0, e * dt);
        }
    }
}

impl OdeSystem for FrameSystem<'_> {

    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.phases.len();
        let c = self.system.hamiltonian.drive_coefficient(t);
        self.update_phases(t);
        for b in 0..self.blocks {
            let range = b * n * n..(b + 1) * n * n;
            let sigma = &y[range.clone()];
            for j in 0..n {
                for k in 0..n {
                    self.rho[j * n + k] = self.phases[j].conj() * sigma[j * n + k] * self.phases[k];
                }
            }
            self.system.frame.kernel.apply(c, &self.rho, &mut self.out, &mut self.scratch);
            let d = &mut dy[range];
            for j in 0..n {
                for k in 0..n {
                    d[j * n + k] = self.phases[j] * self.out[j * n + k] * self.phases[k].conj();
                }
            }
        }
    }

    fn max_step(&self, t: f64) -> f64 {
        self.cfg.step_limit(&self.system.params, &self.system.train, t, false)
    }
}

/// Stepwise propagation of one or more density matrices under the same
/// generator (the extra blocks need not be normalized).
pub struct MasterPropagator<'a> {
    system: &'a OpenSystem,
    frame: FrameSystem<'a>,
    ode: Dopri5,
}

impl<'a> MasterPropagator<'a> {
    pub fn new(system: &'a OpenSystem, cfg: &'a IntegratorConfig, t0: f64, states: &[DMatrix<Complex64>]) -> Result<Self> {
        let n = system.dim();
        if states.is_empty() {
            return Err(Error::param("states", "at least one density matrix is required"));
        }
        let mut y = Vec::with_capacity(states.len() * n * n);
        for s in states {
            if s.nrows() != n || s.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.nrows() });
            }
            y.extend(to_row_major(&system.frame.to_frame(s)));
        }
        let frame = FrameSystem {
            system,
            cfg,
            origin: t0,
            blocks: states.len(),
            phases: vec![Complex64::new(1.0, 0.0); n],
            rho: vec![ZERO; n * n],
            out: vec![ZERO; n * n],
            scratch: KernelScratch::default(),
        };
        let ode = Dopri5::new(t0, y, Tolerances { rel: cfg.rel_tol, abs: cfg.abs_tol });
        Ok(Self { system, frame, ode })
    }

    pub fn time(&self) -> f64 {
        self.ode.t
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.ode.t {
            return Err(Error::param("t", format!("cannot propagate backwards from {} to {t}", self.ode.t)));
        }
        self.ode.advance_to(&mut self.frame, t)
    }

    /// Block `index` at the current time, in the bare Fock basis.
    pub fn state(&mut self, index: usize) -> DMatrix<Complex64> {
        let n = self.system.dim();
        self.frame.update_phases(self.ode.t);
        let sigma = &self.ode.y[index * n * n..(index + 1) * n * n];
        let p = &self.frame.phases;
        let rho = DMatrix::from_fn(n, n, |j, k| p[j].conj() * sigma[j * n + k] * p[k]);
        let rho = self.system.frame.from_frame(&rho);
        // remove rounding-level anti-Hermitian residue
        (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0)
    }

    pub fn steps(&self) -> (u64, u64) {
        (self.ode.accepted, self.ode.rejected)
    }
}

/// Sampled density matrices.
#[derive(Debug, Clone)]
pub struct MixedEvolution {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<Complex64>>,
}

/// Propagate `rho0`, checking trace, Hermiticity and positivity at every
/// sample before handing the state to `sink`.
pub fn evolve_master_with<F>(system: &OpenSystem, rho0: &QuantumState, cfg: &IntegratorConfig, mut sink: F) -> Result<()>
where
    F: FnMut(f64, &DMatrix<Complex64>) -> Result<()>,
{
    cfg.validate()?;
    let rho0 = rho0.to_density();
    let mut prop = MasterPropagator::new(system, cfg, cfg.start_time, &[rho0])?;
    for &ts in &cfg.sample_times {
        prop.advance_to(ts)?;
        let rho = prop.state(0);
        check_density(
            &rho,
            ts,
            SAMPLE_HERMITICITY_TOLERANCE,
            SAMPLE_TRACE_TOLERANCE,
            SAMPLE_POSITIVITY_TOLERANCE,
        )?;
        sink(ts, &rho)?;
    }
    let (acc, rej) = prop.steps();
    log::debug!("master: {acc} steps accepted, {rej} rejected");
    Ok(())
}

pub fn evolve_master(
    rho0: &QuantumState,
    params: &PhysicalParams,
    train: &PulseTrain,
    hc: &HilbertConfig,
    cfg: &IntegratorConfig,
) -> Result<MixedEvolution> {
    let system = OpenSystem::new(*params, *train, *hc)?;
    let mut out = MixedEvolution { times: Vec::new(), states: Vec::new() };
    evolve_master_with(&system, rho0, cfg, |t, rho| {
        out.times.push(t);
        out.states.push(rho.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Observable series along a master-equation propagation.
pub fn master_series(
    system: &OpenSystem,
    rho0: &QuantumState,
    cfg: &IntegratorConfig,
    observables: &[Observable],
) -> Result<Vec<Vec<f64>>> {
    let mut series = vec![Vec::with_capacity(cfg.sample_times.len()); observables.len()];
    evolve_master_with(system, rho0, cfg, |_, rho| {
        for (s, o) in series.iter_mut().zip(observables) {
            s.push(o.evaluate_density(rho));
        }
        Ok(())
    })?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::schrodinger::{evolve_schrodinger, DrivenHamiltonian};
    use crate::model::Preset;

    fn dissipator(l: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let ld = l.adjoint();
        let ll = &ld * l;
        l * rho * &ld - (&ll * rho + rho * &ll) * Complex64::new(0.5, 0.0)
    }

    /// Direct dense evaluation used as an independent reference.
    fn reference_rhs(system: &OpenSystem, t: f64, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let h = system.hamiltonian.at(t).into_entries();
        let mut out = (rho * &h - &h * rho) * Complex64::new(0.0, 1.0);
        for ch in &system.channels {
            out += dissipator(ch.scaled().entries(), rho);
        }
        out
    }

    fn random_density(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        let m = &a * a.adjoint();
        let tr = m.trace();
        m / tr
    }

    fn thermal_params() -> PhysicalParams {
        let mut p = Preset::PaperFig3.params();
        p.n_th = 0.3;
        p.theta_b = 0.7;
        p
    }

    #[test]
    fn sparse_rhs_matches_dense_reference() {
        let hc = HilbertConfig::new(3, 8).unwrap();
        let system = OpenSystem::new(thermal_params(), Preset::PaperFig3.pulses(), hc).unwrap();
        let rho = random_density(hc.dim(), 3);
        for t in [0.0, 1350.0, 1600.0, 9000.0] {
            let fast = system.rhs(t, &rho).unwrap();
            let slow = reference_rhs(&system, t, &rho);
            assert!(crate::fockspace::max_abs_diff(&fast, &slow) < 1e-13);
        }
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let hc = HilbertConfig::new(3, 10).unwrap();
        let system = OpenSystem::new(thermal_params(), Preset::PaperFig3.pulses(), hc).unwrap();
        for seed in 0..5 {
            let rho = random_density(hc.dim(), seed);
            let d = system.rhs(1400.0 + seed as f64, &rho).unwrap();
            assert!(d.trace().norm() < 1e-12);
            assert!(crate::fockspace::max_abs_diff(&d, &d.adjoint()) < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_stationary() {
        let p = Preset::PaperFig3.params();
        let hc = HilbertConfig::default();
        let rho = QuantumState::ground(&hc).unwrap();
        let d = lindblad_rhs(&rho, 5.0, &p, &PulseTrain::off(), &hc).unwrap();
        assert!(d.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn single_phonon_decay_rate() {
        let p = Preset::PaperFig3.params();
        let hc = HilbertConfig::default();
        let system = OpenSystem::new(p, PulseTrain::off(), hc).unwrap();
        let rho = QuantumState::basis(&hc, 0, 1).unwrap().to_density();
        let d = system.rhs(0.0, &rho).unwrap();
        let rate = (system.hamiltonian.ops.phonon_number.entries() * d).trace();
        assert!((rate.re + p.gamma_m).abs() < 1e-15 && rate.im.abs() < 1e-15);
    }

    #[test]
    fn fock_state_decay() {
        let p = Preset::PaperFig3.params();
        let hc = HilbertConfig::default();
        let system = OpenSystem::new(p, PulseTrain::off(), hc).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 10000.0, 21);
        let rho0 = QuantumState::basis(&hc, 0, 2).unwrap();
        let obs = [Observable::operator("n", system.hamiltonian.ops.phonon_number.clone())];
        let series = master_series(&system, &rho0, &cfg, &obs).unwrap();
        for (t, n) in cfg.sample_times.iter().zip(&series[0]) {
            let exact = 2.0 * (-p.gamma_m * t).exp();
            assert!(((n - exact) / exact).abs() < 1e-4, "t={t}: {n} vs {exact}");
        }
    }

    #[test]
    fn closed_system_matches_schrodinger() {
        let p = Preset::PaperFig2.params();
        let tr = Preset::PaperFig2.pulses();
        let hc = HilbertConfig::default();
        let cfg = IntegratorConfig::uniform(0.0, 3000.0, 31);
        let psi0 = QuantumState::ground(&hc).unwrap();
        let pure = evolve_schrodinger(&psi0, &DrivenHamiltonian::new(p, tr, hc).unwrap(), &cfg).unwrap();
        let system = OpenSystem::new(p, tr, hc).unwrap();
        let obs = system.tracked_observables().unwrap();
        let mixed = master_series(&system, &psi0, &cfg, &obs).unwrap();
        for (i, psi) in pure.states.iter().enumerate() {
            let state = QuantumState::Pure(psi.clone());
            for (o, series) in obs.iter().zip(&mixed) {
                let diff = (o.evaluate(&state) - series[i]).abs();
                assert!(diff < 1e-6, "{} at t={}: {diff:e}", o.label, pure.times[i]);
            }
        }
    }

    #[test]
    fn stacked_blocks_propagate_independently() {
        let p = Preset::PaperFig3.params();
        let tr = Preset::PaperFig3.pulses();
        let hc = HilbertConfig::new(3, 8).unwrap();
        let system = OpenSystem::new(p, tr, hc).unwrap();
        let cfg = IntegratorConfig::uniform(1000.0, 1500.0, 2).with_tolerances(1e-10, 1e-12);
        let a = random_density(hc.dim(), 1);
        let b = random_density(hc.dim(), 2) * Complex64::new(0.3, 0.0);
        let mut both = MasterPropagator::new(&system, &cfg, 1000.0, &[a.clone(), b.clone()]).unwrap();
        both.advance_to(1500.0).unwrap();
        let mut single = MasterPropagator::new(&system, &cfg, 1000.0, &[b]).unwrap();
        single.advance_to(1500.0).unwrap();
        assert!(crate::fockspace::max_abs_diff(&both.state(1), &single.state(0)) < 1e-8);
    }

    #[test]
    fn invariant_breach_is_reported() {
        let p = Preset::PaperFig3.params();
        let hc = HilbertConfig::new(2, 4).unwrap();
        let system = OpenSystem::new(p, PulseTrain::off(), hc).unwrap();
        let mut rho = DMatrix::<Complex64>::zeros(hc.dim(), hc.dim());
        rho[(0, 0)] = Complex64::new(2.0, 0.0);
        let cfg = IntegratorConfig::uniform(0.0, 1.0, 2);
        let err = evolve_master_with(&system, &QuantumState::Density(rho), &cfg, |_, _| Ok(())).unwrap_err();
        assert!(matches!(err, Error::Integrity { invariant: "trace", .. }));
    }
}
