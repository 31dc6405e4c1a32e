//! Monte-Carlo wave-function unraveling of the master equation.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::channels::ChannelLabel;
use crate::dynamics::config::IntegratorConfig;
use crate::dynamics::master::OpenSystem;
use crate::dynamics::ode::{fixed_step, Dopri5, OdeSystem, Tolerances};
use crate::dynamics::sparse::{relative_drop, Csr};
use crate::dynamics::state::{Observable, QuantumState};
use crate::error::{Error, Result};
use crate::model::RotatingHamiltonian;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Longest interval covered by one exact propagator while the drive is off.
const STATIC_STEP: f64 = 100.0;
const PROPAGATOR_CACHE_LIMIT: usize = 256;

/// Non-Hermitian generator and jump operators in the eigenbasis of the
/// undriven Hamiltonian.
///
/// Trajectories propagate `y = e^{iE(t−t_0)} V†ψ`, so that adaptive steps
/// follow the drive and decay rather than the free mechanical phases.
#[derive(Debug)]
pub(crate) struct TrajectoryOperators {
    /// Columns are eigenvectors of the undriven Hamiltonian.
    vectors: DMatrix<Complex64>,
    energies: Vec<f64>,
    /// `V†(K_0 − H_s)V`, the decay part of the undriven generator.
    decay: Csr,
    raise: Csr,
    lower: Csr,
    jumps: Vec<Csr>,
    /// `−i V† K_0 V` with `K_0` the undriven non-Hermitian Hamiltonian.
    static_generator: DMatrix<Complex64>,
    cache: Mutex<HashMap<u64, Arc<DMatrix<Complex64>>>>,
}

impl TrajectoryOperators {
    pub fn new(
        vectors: &DMatrix<Complex64>,
        energies: &[f64],
        h: &RotatingHamiltonian,
        jumps: &[DMatrix<Complex64>],
    ) -> Self {
        let n = energies.len();
        let into = |m: &DMatrix<Complex64>| vectors.adjoint() * m * vectors;
        let jumps: Vec<DMatrix<Complex64>> = jumps.iter().map(into).collect();
        let mut decay = DMatrix::<Complex64>::zeros(n, n);
        for l in &jumps {
            decay += l.adjoint() * l;
        }
        let base = decay * Complex64::new(0.0, -0.5);
        let raise = into(&h.ops.a.adjoint().into_entries());
        let lower = raise.adjoint();
        let mut full = base.clone();
        for (i, e) in energies.iter().enumerate() {
            full[(i, i)] += e;
        }
        Self {
            vectors: vectors.clone(),
            energies: energies.to_vec(),
            decay: Csr::from_dense(&base, relative_drop(&base)),
            raise: Csr::from_dense(&raise, relative_drop(&raise)),
            lower: Csr::from_dense(&lower, relative_drop(&lower)),
            jumps: jumps.iter().map(|l| Csr::from_dense(l, relative_drop(l))).collect(),
            static_generator: full * MINUS_I,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// `exp(−i K_0 h)` in the eigenbasis, cached by the exact duration.
    fn propagator(&self, h: f64) -> Arc<DMatrix<Complex64>> {
        let key = h.to_bits();
        if let Some(u) = self.cache.lock().expect("propagator cache poisoned").get(&key) {
            return Arc::clone(u);
        }
        let u = Arc::new((&self.static_generator * Complex64::new(h, 0.0)).exp());
        let mut cache = self.cache.lock().expect("propagator cache poisoned");
        if cache.len() < PROPAGATOR_CACHE_LIMIT {
            cache.insert(key, Arc::clone(&u));
        }
        u
    }
}

struct TrajectorySystem<'a> {
    system: &'a OpenSystem,
    cfg: &'a IntegratorConfig,
    origin: f64,
    phases: Vec<Complex64>,
    w: Vec<Complex64>,
    z: Vec<Complex64>,
}

impl TrajectorySystem<'_> {
    fn update_phases(&mut self, t: f64) {
        let dt = t - self.origin;
        for (p, e) in self.phases.iter_mut().zip(&self.system.trajectory.energies) {
            *p = Complex64::from_polar(1.0, e * dt);
        }
    }

    /// Eigenbasis amplitudes `V†ψ` at time `t` from the frame vector.
    fn unrotate(&mut self, t: f64, y: &[Complex64]) -> Vec<Complex64> {
        self.update_phases(t);
        y.iter().zip(&self.phases).map(|(v, p)| p.conj() * v).collect()
    }

    fn rotate(&mut self, t: f64, v: &mut [Complex64]) {
        self.update_phases(t);
        for (x, p) in v.iter_mut().zip(&self.phases) {
            *x *= p;
        }
    }

    fn to_fock(&mut self, t: f64, y: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_vec(self.unrotate(t, y));
        (&self.system.trajectory.vectors * v).data.into()
    }
}

impl OdeSystem for TrajectorySystem<'_> {
    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let c = self.system.hamiltonian.drive_coefficient(t);
        self.update_phases(t);
        for ((w, v), p) in self.w.iter_mut().zip(y).zip(&self.phases) {
            *w = p.conj() * v;
        }
        let ops = &self.system.trajectory;
        ops.decay.matvec(&self.w, &mut self.z);
        if c != ZERO {
            ops.raise.add_matvec(c, &self.w, &mut self.z);
            ops.lower.add_matvec(c.conj(), &self.w, &mut self.z);
        }
        for ((d, z), p) in dy.iter_mut().zip(&self.z).zip(&self.phases) {
            *d = MINUS_I * p * z;
        }
    }

    fn max_step(&self, t: f64) -> f64 {
        self.cfg.step_limit(&self.system.params, &self.system.train, t, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: ChannelLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub sample_times: Vec<f64>,
    pub observables: BTreeMap<String, Vec<f64>>,
    pub jumps: Vec<JumpEvent>,
}

impl TrajectoryRecord {
    pub fn jumps_on(&self, channel: ChannelLabel) -> impl Iterator<Item = f64> + '_ {
        self.jumps.iter().filter(move |j| j.channel == channel).map(|j| j.time)
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// If `t` lies outside every drive window, the time at which the next window opens.
fn drive_free_until(support: &[(f64, f64)], t: f64) -> Option<f64> {
    for &(lo, hi) in support {
        if t < lo {
            return Some(lo);
        }
        if t < hi {
            return None;
        }
    }
    Some(f64::INFINITY)
}

fn window_end(support: &[(f64, f64)], t: f64) -> f64 {
    support.iter().find(|&&(lo, hi)| t >= lo && t < hi).map_or(f64::INFINITY, |w| w.1)
}

/// Adaptive steps toward `target`; stops at the first time the squared norm
/// falls to `threshold`, located by bisection, and returns that time.
fn integrate_until_jump(
    ode: &mut Dopri5,
    sys: &mut TrajectorySystem<'_>,
    target: f64,
    threshold: f64,
) -> Result<Option<f64>> {
    while ode.t < target {
        ode.step(sys, target)?;
        if norm_sqr(&ode.y) >= threshold {
            continue;
        }
        let t0 = ode.t_prev;
        let y0 = ode.y_prev.clone();
        let mut at_hi = ode.y.clone();
        let (mut lo, mut hi) = (0.0, ode.t - t0);
        let tol = 1e-10 * t0.abs().max(1.0);
        let mut trial = vec![ZERO; y0.len()];
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            fixed_step(sys, ode.stages_mut(), t0, &y0, mid, &mut trial);
            if norm_sqr(&trial) < threshold {
                hi = mid;
                at_hi.copy_from_slice(&trial);
            } else {
                lo = mid;
            }
        }
        let t_jump = t0 + hi;
        ode.reset(t_jump, &at_hi);
        return Ok(Some(t_jump));
    }
    Ok(None)
}

/// One quantum trajectory.
///
/// The unnormalized state evolves under `K(t) = H_r(t) − (i/2) Σ L†L` until its
/// squared norm reaches a uniformly drawn threshold; a channel is then chosen
/// with probability `∝ ‖L ψ‖²` and the state is collapsed and renormalized.
/// While the drive is identically zero the evolution uses exact propagators.
pub fn mcwf_trajectory(
    system: &OpenSystem,
    psi0: &QuantumState,
    cfg: &IntegratorConfig,
    observables: &[Observable],
    seed: u64,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let n = system.dim();
    let psi0 = psi0
        .as_pure()
        .ok_or_else(|| Error::param("psi0", "trajectories start from a pure state"))?;
    if psi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi0.len() });
    }
    if let Some(o) = observables.iter().find(|o| o.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: o.dim() });
    }
    let ops = &system.trajectory;
    let support = system.train.active_intervals(0.0, cfg.start_time, cfg.end_time());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut threshold: f64 = rng.random();
    let mut sys = TrajectorySystem {
        system,
        cfg,
        origin: cfg.start_time,
        phases: vec![ZERO; n],
        w: vec![ZERO; n],
        z: vec![ZERO; n],
    };
    let tol = Tolerances { rel: cfg.rel_tol, abs: cfg.abs_tol };
    let y0 = ops.vectors.adjoint() * psi0;
    let mut ode = Dopri5::new(cfg.start_time, y0.as_slice().to_vec(), tol);
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.sample_times.len()); observables.len()];
    let mut jumps = Vec::new();
    let mut buf = vec![ZERO; n];

    for &ts in &cfg.sample_times {
        while ode.t < ts {
            let t = ode.t;
            let jump_time = match drive_free_until(&support, t) {
                Some(free_end) => {
                    let end = ts.min(free_end).min(t + STATIC_STEP);
                    let u = ops.propagator(end - t);
                    let v = sys.unrotate(t, &ode.y);
                    for (i, slot) in buf.iter_mut().enumerate() {
                        *slot = (0..n).map(|j| u[(i, j)] * v[j]).sum();
                    }
                    sys.rotate(end, &mut buf);
                    if norm_sqr(&buf) >= threshold {
                        ode.reset(end, &buf);
                        None
                    } else {
                        // the norm decays monotonically, so the crossing lies in [t, end]
                        integrate_until_jump(&mut ode, &mut sys, end, threshold)?
                    }
                }
                None => {
                    let end = ts.min(window_end(&support, t));
                    integrate_until_jump(&mut ode, &mut sys, end, threshold)?
                }
            };
            let Some(t_jump) = jump_time else { continue };
            let v = sys.unrotate(t_jump, &ode.y);
            let weights: Vec<f64> = ops
                .jumps
                .iter()
                .map(|l| {
                    l.matvec(&v, &mut buf);
                    norm_sqr(&buf)
                })
                .collect();
            let total: f64 = weights.iter().sum();
            if !(total > 0.0 && total.is_finite()) {
                return Err(Error::InternalConsistency(format!(
                    "jump triggered at t = {t_jump} but all channel weights vanish"
                )));
            }
            let pick = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = weights.iter().rposition(|&w| w > 0.0).expect("positive total weight");
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if pick < acc && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            ops.jumps[chosen].matvec(&v, &mut buf);
            let scale = 1.0 / norm_sqr(&buf).sqrt();
            for x in buf.iter_mut() {
                *x *= scale;
            }
            sys.rotate(t_jump, &mut buf);
            ode.reset(t_jump, &buf);
            jumps.push(JumpEvent { time: t_jump, channel: system.channels[chosen].label });
            threshold = rng.random();
        }
        if !observables.is_empty() {
            let psi = sys.to_fock(ts, &ode.y);
            for (s, o) in series.iter_mut().zip(observables) {
                s.push(o.evaluate_pure(&psi));
            }
        }
    }

    Ok(TrajectoryRecord {
        seed,
        sample_times: cfg.sample_times.clone(),
        observables: observables.iter().map(|o| o.label.clone()).zip(series).collect(),
        jumps,
    })
}

/// Trajectories with seeds `base_seed + i`, returned in index order.
pub fn run_trajectories(
    system: &OpenSystem,
    psi0: &QuantumState,
    cfg: &IntegratorConfig,
    observables: &[Observable],
    n_traj: usize,
    base_seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    if n_traj == 0 {
        return Err(Error::param("n_traj", "at least one trajectory is required"));
    }
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| mcwf_trajectory(system, psi0, cfg, observables, base_seed.wrapping_add(i)))
        .collect()
}

/// Mean and standard error of the observables over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub sample_times: Vec<f64>,
    pub n_traj: usize,
    pub mean: BTreeMap<String, Vec<f64>>,
    pub std_error: BTreeMap<String, Vec<f64>>,
}

/// Reduce records in their given order; the result depends only on the
/// multiset of records as long as the order is fixed by seed.
pub fn summarize(records: &[TrajectoryRecord]) -> Result<EnsembleResult> {
    let first = records.first().ok_or_else(|| Error::param("records", "empty ensemble"))?;
    let n = records.len() as f64;
    let mut mean = BTreeMap::new();
    let mut std_error = BTreeMap::new();
    for (label, values) in &first.observables {
        let len = values.len();
        let mut m = vec![0.0; len];
        for r in records {
            let series = r.observables.get(label).filter(|s| s.len() == len).ok_or_else(|| {
                Error::InternalConsistency(format!("trajectory {} lacks a full `{label}` series", r.seed))
            })?;
            for (acc, v) in m.iter_mut().zip(series) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        let mut se = vec![0.0; len];
        if records.len() > 1 {
            for r in records {
                for ((acc, v), mu) in se.iter_mut().zip(&r.observables[label]).zip(&m) {
                    *acc += (v - mu).powi(2);
                }
            }
            se.iter_mut().for_each(|v| *v = (*v / (n - 1.0)).sqrt() / n.sqrt());
        }
        mean.insert(label.clone(), m);
        std_error.insert(label.clone(), se);
    }
    Ok(EnsembleResult { sample_times: first.sample_times.clone(), n_traj: records.len(), mean, std_error })
}

pub fn ensemble_average(
    system: &OpenSystem,
    psi0: &QuantumState,
    cfg: &IntegratorConfig,
    observables: &[Observable],
    n_traj: usize,
    base_seed: u64,
) -> Result<EnsembleResult> {
    summarize(&run_trajectories(system, psi0, cfg, observables, n_traj, base_seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::schrodinger::{evolve_schrodinger, DrivenHamiltonian};
    use crate::model::{HilbertConfig, Preset, PulseTrain};

    fn cascade_system() -> OpenSystem {
        OpenSystem::new(Preset::PaperFig4.params(), PulseTrain::off(), HilbertConfig::default()).unwrap()
    }

    #[test]
    fn dissipationless_trajectory_is_schrodinger() {
        let p = Preset::PaperFig2.params();
        let tr = Preset::PaperFig2.pulses();
        let hc = HilbertConfig::default();
        let system = OpenSystem::new(p, tr, hc).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 3000.0, 16);
        let psi0 = QuantumState::ground(&hc).unwrap();
        let obs = system.tracked_observables().unwrap();
        let rec = mcwf_trajectory(&system, &psi0, &cfg, &obs, 7).unwrap();
        assert!(rec.jumps.is_empty());
        let pure = evolve_schrodinger(&psi0, &DrivenHamiltonian::new(p, tr, hc).unwrap(), &cfg).unwrap();
        for (i, psi) in pure.states.iter().enumerate() {
            for o in &obs {
                let a = o.evaluate(&QuantumState::Pure(psi.clone()));
                assert!((a - rec.observables[&o.label][i]).abs() < 1e-6, "{}", o.label);
            }
        }
    }

    #[test]
    fn cascade_has_two_emissions() {
        let system = cascade_system();
        let hc = system.hilbert;
        let psi0 = QuantumState::basis(&hc, 0, 2).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 30.0 / system.params.gamma_m, 4);
        let obs = system.tracked_observables().unwrap();
        for seed in 0..20 {
            let rec = mcwf_trajectory(&system, &psi0, &cfg, &obs, seed).unwrap();
            assert_eq!(rec.jumps.len(), 2, "seed {seed}");
            assert!(rec.jumps.iter().all(|j| j.channel == ChannelLabel::MechDown));
            assert!(rec.jumps[0].time < rec.jumps[1].time);
            assert!((rec.observables["p_0_0"][3] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_jumps() {
        let system = cascade_system();
        let psi0 = QuantumState::basis(&system.hilbert, 0, 2).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 20000.0, 5);
        let a = mcwf_trajectory(&system, &psi0, &cfg, &[], 42).unwrap();
        let b = mcwf_trajectory(&system, &psi0, &cfg, &[], 42).unwrap();
        let c = mcwf_trajectory(&system, &psi0, &cfg, &[], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.jumps, c.jumps);
    }

    #[test]
    fn single_phonon_waiting_times() {
        let system = cascade_system();
        let gamma = system.params.gamma_m;
        let psi0 = QuantumState::basis(&system.hilbert, 0, 1).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 40.0 / gamma, 2);
        let records = run_trajectories(&system, &psi0, &cfg, &[], 2000, 1000).unwrap();
        let mut waits: Vec<f64> = records.iter().map(|r| r.jumps[0].time).collect();
        waits.sort_by(f64::total_cmp);
        let n = waits.len() as f64;
        let ks = waits
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let cdf = 1.0 - (-gamma * t).exp();
                (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.05, "KS statistic {ks}");
    }

    #[test]
    fn ensemble_of_one_is_the_trajectory() {
        let system = cascade_system();
        let psi0 = QuantumState::basis(&system.hilbert, 0, 1).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 5000.0, 6);
        let obs = system.tracked_observables().unwrap();
        let ens = ensemble_average(&system, &psi0, &cfg, &obs, 1, 9).unwrap();
        let rec = mcwf_trajectory(&system, &psi0, &cfg, &obs, 9).unwrap();
        assert_eq!(ens.mean, rec.observables);
        assert!(ens.std_error.values().flatten().all(|&v| v == 0.0));
        assert!(ensemble_average(&system, &psi0, &cfg, &obs, 0, 9).is_err());
    }

    #[test]
    fn ensemble_mean_phonon_decays() {
        let system = cascade_system();
        let gamma = system.params.gamma_m;
        let psi0 = QuantumState::basis(&system.hilbert, 0, 1).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 3.0 / gamma, 7);
        let obs = [Observable::operator("n", system.hamiltonian.ops.phonon_number.clone())];
        let ens = ensemble_average(&system, &psi0, &cfg, &obs, 2000, 5).unwrap();
        for (i, t) in ens.sample_times.iter().enumerate() {
            let exact = (-gamma * t).exp();
            let se = ens.std_error["n"][i].max(1e-12);
            assert!((ens.mean["n"][i] - exact).abs() <= 3.0 * se + 1e-9, "t={t}");
        }
    }
}
