//! Populations, phonon statistics and second-order correlation functions of
//! the mechanical mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    check_density, ChannelLabel, IntegratorConfig, MasterPropagator, OpenSystem, QuantumState, TrajectoryRecord,
    SAMPLE_HERMITICITY_TOLERANCE, SAMPLE_POSITIVITY_TOLERANCE, SAMPLE_TRACE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::model::{CompositeOperators, HilbertConfig};

/// Normalizations below this value leave a correlation undefined.
pub const CORRELATION_FLOOR: f64 = 1e-12;

/// Slack allowed on probabilities and moments before clamping for reports.
pub const REPORT_SLACK: f64 = 1e-8;

/// Sampled scalar quantity; `None` marks points where it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<Option<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        Ok(Self { label: label.into(), times, values })
    }

    pub fn from_values(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(label, times, values.into_iter().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().zip(&self.values).filter_map(|(&t, v)| v.map(|v| (t, v)))
    }
}

/// A probability as computed, and clamped to `[0, 1]` for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Population {
    pub raw: f64,
    pub reported: f64,
}

/// `⟨φ|ρ|φ⟩` or `|⟨φ|ψ⟩|²`.
pub fn population(state: &QuantumState, basis_state: &DVector<Complex64>) -> Result<Population> {
    let raw = state.overlap(basis_state)?;
    if !(-REPORT_SLACK..=1.0 + REPORT_SLACK).contains(&raw) {
        log::warn!("population {raw} outside [0, 1] beyond rounding");
    }
    Ok(Population { raw, reported: raw.clamp(0.0, 1.0) })
}

/// `⟨b†b⟩`.
pub fn mean_phonon(state: &QuantumState, hc: &HilbertConfig) -> Result<f64> {
    let ops = CompositeOperators::new(*hc)?;
    Ok(state.expectation(&ops.phonon_number)?.re)
}

/// Which correlation function: standard (single phonons) or generalized
/// (phonon pairs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationOrder {
    Single,
    Pair,
}

impl CorrelationOrder {
    /// Number of phonons annihilated per detection event.
    pub fn phonons(self) -> u32 {
        match self {
            Self::Single => 1,
            Self::Pair => 2,
        }
    }

    pub fn from_phonons(n: u32) -> Option<Self> {
        match n {
            1 => Some(Self::Single),
            2 => Some(Self::Pair),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Single => "g2_single",
            Self::Pair => "g2_pair",
        }
    }
}

/// Operators entering `g_N^(2)`: `B = b^N`, `B†B` and `B†B†BB`.
#[derive(Debug, Clone)]
pub struct CorrelationProbe {
    pub order: CorrelationOrder,
    lowering: DMatrix<Complex64>,
    intensity: DMatrix<Complex64>,
    coincidence: DMatrix<Complex64>,
}

impl CorrelationProbe {
    pub fn new(order: CorrelationOrder, hc: &HilbertConfig) -> Result<Self> {
        let ops = CompositeOperators::new(*hc)?;
        let b = ops.b.entries();
        let mut lowering = DMatrix::identity(hc.dim(), hc.dim());
        for _ in 0..order.phonons() {
            lowering = &lowering * b;
        }
        let intensity = lowering.adjoint() * &lowering;
        let pair = &lowering * &lowering;
        let coincidence = pair.adjoint() * pair;
        Ok(Self { order, lowering, intensity, coincidence })
    }

    pub fn dim(&self) -> usize {
        self.lowering.nrows()
    }

    fn check_dim(&self, rho: &DMatrix<Complex64>) -> Result<()> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.nrows() });
        }
        Ok(())
    }

    /// `⟨B†B⟩`.
    pub fn intensity(&self, rho: &DMatrix<Complex64>) -> f64 {
        trace_product(&self.intensity, rho)
    }

    /// `⟨B†B†BB⟩ / ⟨B†B⟩²`, `None` below the normalization floor.
    pub fn equal_time(&self, rho: &DMatrix<Complex64>) -> Option<f64> {
        let norm = self.intensity(rho);
        if norm < CORRELATION_FLOOR {
            return None;
        }
        Some(trace_product(&self.coincidence, rho) / (norm * norm))
    }

    /// `B ρ B†`.
    pub fn condition(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.lowering * rho * self.lowering.adjoint()
    }
}

/// `Re Tr[A ρ]` without forming the product.
fn trace_product(a: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * rho[(k, i)];
        }
    }
    acc.re
}

/// `g_N^(2)(t, t)` along a sampled density-matrix evolution.
pub fn g2_equal_time(
    times: &[f64],
    states: &[DMatrix<Complex64>],
    order: CorrelationOrder,
    hc: &HilbertConfig,
) -> Result<TimeSeries> {
    let probe = CorrelationProbe::new(order, hc)?;
    if times.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: states.len() });
    }
    let mut values = Vec::with_capacity(states.len());
    for rho in states {
        probe.check_dim(rho)?;
        values.push(probe.equal_time(rho));
    }
    TimeSeries::new(order.label(), times.to_vec(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Max,
    Min,
}

/// Extremum of `series` within `window`, refined by a parabola through the
/// best sample and its two neighbours; ties go to the earliest time.
pub fn locate_extremum(series: &TimeSeries, kind: ExtremumKind, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::param("window", format!("empty window [{lo}, {hi}]")));
    }
    let points: Vec<(f64, f64)> = series.defined().filter(|&(t, _)| t >= lo && t <= hi).collect();
    if points.len() < 3 {
        return Err(Error::NoExtremum(format!(
            "`{}` has {} defined samples in [{lo}, {hi}], need 3",
            series.label,
            points.len()
        )));
    }
    let better = |a: f64, b: f64| match kind {
        ExtremumKind::Max => a > b,
        ExtremumKind::Min => a < b,
    };
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        if better(p.1, points[best].1) {
            best = i;
        }
    }
    let t_best = points[best].0;
    if best == 0 || best + 1 == points.len() {
        return Ok(t_best);
    }
    let (t0, y0) = points[best - 1];
    let (t1, y1) = points[best];
    let (t2, y2) = points[best + 1];
    // Newton form of the interpolating parabola
    let d01 = (y1 - y0) / (t1 - t0);
    let d12 = (y2 - y1) / (t2 - t1);
    let curvature = (d12 - d01) / (t2 - t0);
    let opens_correctly = match kind {
        ExtremumKind::Max => curvature < 0.0,
        ExtremumKind::Min => curvature > 0.0,
    };
    if !opens_correctly {
        return Ok(t_best);
    }
    let vertex = 0.5 * (t0 + t1) - d01 / (2.0 * curvature);
    Ok(vertex.clamp(t0, t2))
}

/// Time at which the conditioned state `B ρ B†` is formed in the numerator
/// of the delayed correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "time")]
pub enum NumeratorTime {
    /// Same reference time as the normalization.
    #[default]
    Reference,
    /// A different reference time for the numerator only.
    Other(f64),
}

/// Output of a delayed-correlation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedCorrelation {
    pub order: CorrelationOrder,
    pub t_star: f64,
    /// `g_N^(2)(t*, t* + τ)` indexed by `τ`.
    pub series: TimeSeries,
    /// Unnormalized `G_N^(2)(t*, t* + τ)`.
    pub coincidences: Vec<f64>,
    /// `⟨B†B⟩(t* + τ)`.
    pub intensities: Vec<f64>,
}

/// Conditioned propagation from `t0`: `(Tr[B†B ρ̃(t0+τ)], ⟨B†B⟩(t0+τ))`.
fn conditioned_run(
    system: &OpenSystem,
    rho0: &DMatrix<Complex64>,
    cfg: &IntegratorConfig,
    probe: &CorrelationProbe,
    t0: f64,
    taus: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut prop = MasterPropagator::new(system, cfg, cfg.start_time, std::slice::from_ref(rho0))?;
    prop.advance_to(t0)?;
    let rho = prop.state(0);
    check_sample(&rho, t0)?;
    let conditioned = probe.condition(&rho);
    let mut prop = MasterPropagator::new(system, cfg, t0, &[rho, conditioned])?;
    let mut coincidences = Vec::with_capacity(taus.len());
    let mut intensities = Vec::with_capacity(taus.len());
    for &tau in taus {
        let t = t0 + tau;
        prop.advance_to(t)?;
        let rho = prop.state(0);
        check_sample(&rho, t)?;
        coincidences.push(probe.intensity(&prop.state(1)));
        intensities.push(probe.intensity(&rho));
    }
    Ok((coincidences, intensities))
}

fn check_sample(rho: &DMatrix<Complex64>, t: f64) -> Result<()> {
    check_density(rho, t, SAMPLE_HERMITICITY_TOLERANCE, SAMPLE_TRACE_TOLERANCE, SAMPLE_POSITIVITY_TOLERANCE)
}

/// `g_N^(2)(t*, t* + τ) = Tr[B†B ρ̃(t*+τ)] / (⟨B†B⟩(t*) ⟨B†B⟩(t*+τ))` with
/// `ρ̃(t*) = B ρ(t*) B†` propagated under the same generator.
pub fn g2_delayed(
    system: &OpenSystem,
    rho0: &QuantumState,
    cfg: &IntegratorConfig,
    t_star: f64,
    order: CorrelationOrder,
    tau_grid: &[f64],
    numerator: NumeratorTime,
) -> Result<DelayedCorrelation> {
    if tau_grid.first() != Some(&0.0) {
        return Err(Error::param("tau_grid", "must start at 0"));
    }
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("tau_grid", "must be strictly increasing"));
    }
    if t_star < cfg.start_time {
        return Err(Error::param("t_star", format!("{t_star} precedes the start time {}", cfg.start_time)));
    }
    let probe = CorrelationProbe::new(order, &system.hilbert)?;
    let rho0 = rho0.to_density();
    probe.check_dim(&rho0)?;
    let (mut coincidences, intensities) = conditioned_run(system, &rho0, cfg, &probe, t_star, tau_grid)?;
    let reference = intensities[0];
    if reference < CORRELATION_FLOOR {
        return Err(Error::UndefinedCorrelation { t: t_star, value: reference });
    }
    if let NumeratorTime::Other(t_num) = numerator {
        if t_num < cfg.start_time {
            return Err(Error::param("numerator", format!("{t_num} precedes the start time")));
        }
        coincidences = conditioned_run(system, &rho0, cfg, &probe, t_num, tau_grid)?.0;
    }
    let values = coincidences
        .iter()
        .zip(&intensities)
        .map(|(g, i)| (*i >= CORRELATION_FLOOR).then(|| g / (reference * i)))
        .collect();
    Ok(DelayedCorrelation {
        order,
        t_star,
        series: TimeSeries::new(format!("{}_delayed", order.label()), tau_grid.to_vec(), values)?,
        coincidences,
        intensities,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BunchedPairs,
    AntibunchedPairs,
    Inconclusive,
}

/// Equal-time series, the chosen extremum and the delayed correlation there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub order: CorrelationOrder,
    pub equal_time: TimeSeries,
    pub t_star: f64,
    pub delayed: TimeSeries,
    pub verdict: Verdict,
}

impl CorrelationResult {
    /// Single-phonon bunching within a pair shows as a maximum above 1 that
    /// decreases with delay; pair antibunching as a minimum below 1 that
    /// increases with delay.
    pub fn new(order: CorrelationOrder, equal_time: TimeSeries, t_star: f64, delayed: TimeSeries) -> Self {
        let verdict = verdict(order, &delayed);
        Self { order, equal_time, t_star, delayed, verdict }
    }
}

fn verdict(order: CorrelationOrder, delayed: &TimeSeries) -> Verdict {
    let Some(Some(g0)) = delayed.values.first().copied() else {
        return Verdict::Inconclusive;
    };
    let rest: Vec<f64> = delayed.values.iter().skip(1).flatten().copied().collect();
    if rest.is_empty() {
        return Verdict::Inconclusive;
    }
    match order {
        CorrelationOrder::Single if g0 > 1.0 && rest.iter().all(|&g| g < g0) => Verdict::BunchedPairs,
        CorrelationOrder::Pair if g0 < 1.0 && rest.iter().all(|&g| g > g0) => Verdict::AntibunchedPairs,
        _ => Verdict::Inconclusive,
    }
}

/// Fixed-width histogram over `[min, max]` of the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bins: usize) -> Self {
        if samples.is_empty() || bins == 0 {
            return Self { edges: Vec::new(), counts: Vec::new() };
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &s in samples {
            let k = (((s - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    /// Centre of the most populated bin (earliest on ties).
    pub fn mode(&self) -> Option<f64> {
        let (k, _) = self.counts.iter().enumerate().fold(None, |best: Option<(usize, usize)>, (k, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })?;
        Some(0.5 * (self.edges[k] + self.edges[k + 1]))
    }
}

pub const HISTOGRAM_BINS: usize = 20;

/// Default clustering window in units of the mechanical lifetime.
pub const PAIR_WINDOW_LIFETIMES: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStatistics {
    pub pair_window: f64,
    pub pair_count: usize,
    /// Emissions not paired with a neighbour.
    pub single_count: usize,
    /// Sorted delays between the two emissions of each pair.
    pub intra_pair_delays: Vec<f64>,
    /// Sorted intervals between successive pairs of the same trajectory.
    pub inter_pair_intervals: Vec<f64>,
    pub intra_pair_histogram: Histogram,
    pub inter_pair_histogram: Histogram,
}

/// Groups consecutive `mech_down` emissions closer than `pair_window` into
/// pairs, scanning each trajectory from its first emission.
pub fn pair_emission_statistics(records: &[TrajectoryRecord], pair_window: f64) -> PairStatistics {
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    let mut singles = 0;
    for r in records {
        let times: Vec<f64> = r.jumps_on(ChannelLabel::MechDown).collect();
        let mut pair_starts = Vec::new();
        let mut i = 0;
        while i < times.len() {
            if i + 1 < times.len() && times[i + 1] - times[i] < pair_window {
                intra.push(times[i + 1] - times[i]);
                pair_starts.push(times[i]);
                i += 2;
            } else {
                singles += 1;
                i += 1;
            }
        }
        inter.extend(pair_starts.windows(2).map(|w| w[1] - w[0]));
    }
    intra.sort_by(f64::total_cmp);
    inter.sort_by(f64::total_cmp);
    PairStatistics {
        pair_window,
        pair_count: intra.len(),
        single_count: singles,
        intra_pair_histogram: Histogram::from_samples(&intra, HISTOGRAM_BINS),
        inter_pair_histogram: Histogram::from_samples(&inter, HISTOGRAM_BINS),
        intra_pair_delays: intra,
        inter_pair_intervals: inter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{JumpEvent, TrajectoryRecord};
    use crate::fockspace::{basis_vector, displacement_op};
    use crate::model::{dressed_basis, Preset, PulseTrain};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn fock_density(hc: &HilbertConfig, n: usize, m: usize) -> DMatrix<Complex64> {
        QuantumState::basis(hc, n, m).unwrap().to_density()
    }

    #[test]
    fn populations() {
        let hc = HilbertConfig::default();
        let p = Preset::PaperFig3.params();
        let basis = dressed_basis(&p, &hc).unwrap();
        let ground = QuantumState::ground(&hc).unwrap();
        let vac = basis.state(0, 0).unwrap();
        assert_abs_diff_eq!(population(&ground, vac).unwrap().reported, 1.0, epsilon = 1e-14);
        let excited = basis.state(1, 0).unwrap();
        assert_abs_diff_eq!(population(&ground, excited).unwrap().raw, 0.0, epsilon = 1e-14);
        let phi = basis.state(0, 2).unwrap();
        let sup = (vac + phi) / Complex64::new(2f64.sqrt(), 0.0);
        let state = QuantumState::pure(sup).unwrap();
        assert_abs_diff_eq!(population(&state, phi).unwrap().reported, 0.5, epsilon = 1e-14);
        assert!(population(&state, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn mean_phonon_numbers() {
        let hc = HilbertConfig::default();
        let p = Preset::PaperFig3.params();
        assert_abs_diff_eq!(mean_phonon(&QuantumState::basis(&hc, 0, 2).unwrap(), &hc).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mean_phonon(&QuantumState::ground(&hc).unwrap(), &hc).unwrap(), 0.0, epsilon = 1e-14);
        let displaced = QuantumState::pure(dressed_basis(&p, &hc).unwrap().state(1, 0).unwrap().clone()).unwrap();
        let beta = p.beta();
        assert_abs_diff_eq!(mean_phonon(&displaced, &hc).unwrap(), beta * beta, epsilon = 1e-9);
        assert_abs_diff_eq!(beta * beta, 0.585_786_437_626_905, epsilon = 1e-12);
    }

    #[test]
    fn fock_state_correlations() {
        let hc = HilbertConfig::default();
        let rho = fock_density(&hc, 0, 2);
        let single = CorrelationProbe::new(CorrelationOrder::Single, &hc).unwrap();
        let pair = CorrelationProbe::new(CorrelationOrder::Pair, &hc).unwrap();
        assert_abs_diff_eq!(single.equal_time(&rho).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.equal_time(&rho).unwrap(), 0.0, epsilon = 1e-14);
        assert_eq!(single.equal_time(&fock_density(&hc, 0, 0)), None);
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let hc = HilbertConfig::new(2, 30).unwrap();
        let alpha = 0.5;
        let coherent = displacement_op(alpha, 30).unwrap().apply(&basis_vector(30, 0));
        let psi = crate::fockspace::tensor_state(&basis_vector(2, 0), &coherent);
        let rho = QuantumState::pure(psi).unwrap().to_density();
        let series = g2_equal_time(&[0.0], &[rho], CorrelationOrder::Single, &hc).unwrap();
        assert_abs_diff_eq!(series.values[0].unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn two_level_brute_force() {
        // N_b = 2, cavity 2: arbitrary positive state, g1 from an explicit basis sum
        let hc = HilbertConfig::new(2, 2).unwrap();
        let m = DMatrix::from_fn(4, 4, |i, j| Complex64::new((i + 2 * j) as f64 * 0.1 + 0.3, (i as f64 - j as f64) * 0.2));
        let rho = &m * m.adjoint();
        let rho = &rho / rho.trace();
        let probe = CorrelationProbe::new(CorrelationOrder::Single, &hc).unwrap();
        // b annihilates |1⟩ into |0⟩ in each photon sector; b² vanishes
        let mut n_mean = 0.0;
        for photons in 0..2 {
            n_mean += rho[(photons * 2 + 1, photons * 2 + 1)].re;
        }
        assert_abs_diff_eq!(probe.intensity(&rho), n_mean, epsilon = 1e-12);
        assert_abs_diff_eq!(probe.equal_time(&rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn extremum_search() {
        let times: Vec<f64> = (0..=40).map(|i| std::f64::consts::PI * i as f64 / 40.0).collect();
        let sin = TimeSeries::from_values("sin", times.clone(), times.iter().map(|t| t.sin()).collect()).unwrap();
        let t = locate_extremum(&sin, ExtremumKind::Max, (0.0, std::f64::consts::PI)).unwrap();
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < std::f64::consts::PI / 40.0);
        let flat = TimeSeries::from_values("c", times.clone(), vec![1.0; times.len()]).unwrap();
        assert_eq!(locate_extremum(&flat, ExtremumKind::Min, (0.5, 3.0)).unwrap(), times[7]);
        let empty = TimeSeries::new("u", times.clone(), vec![None; times.len()]).unwrap();
        assert!(matches!(locate_extremum(&empty, ExtremumKind::Max, (0.0, 3.0)), Err(Error::NoExtremum(_))));
        let parabola = TimeSeries::from_values("p", vec![0.0, 1.0, 3.0], vec![-1.0, 1.0, -5.0]).unwrap();
        // interpolant -1 + 2t - (5/3) t(t-1) peaks at t = 1.1
        let vertex = locate_extremum(&parabola, ExtremumKind::Max, (0.0, 3.0)).unwrap();
        assert_abs_diff_eq!(vertex, 1.1, epsilon = 1e-12);
    }

    #[test]
    fn series_invariants() {
        assert!(TimeSeries::from_values("x", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::from_values("x", vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::from_values("x", vec![0.0], vec![1.0, 2.0]).is_err());
    }

    fn record(seed: u64, times: &[f64]) -> TrajectoryRecord {
        TrajectoryRecord {
            seed,
            sample_times: Vec::new(),
            observables: BTreeMap::new(),
            jumps: times.iter().map(|&time| JumpEvent { time, channel: ChannelLabel::MechDown }).collect(),
        }
    }

    #[test]
    fn pair_clustering() {
        let gamma = 0.0004;
        let window = PAIR_WINDOW_LIFETIMES / gamma;
        let s = pair_emission_statistics(&[record(0, &[100.0, 100.0 + 0.1 / gamma])], window);
        assert_eq!(s.pair_count, 1);
        assert_abs_diff_eq!(s.intra_pair_delays[0], 0.1 / gamma, epsilon = 1e-9);
        let empty = pair_emission_statistics(&[], window);
        assert_eq!(empty.pair_count, 0);
        assert!(empty.intra_pair_histogram.counts.is_empty());

        let a = record(1, &[0.0, 500.0, 15000.0, 16000.0, 40000.0]);
        let b = record(2, &[3000.0, 3100.0]);
        let s1 = pair_emission_statistics(&[a.clone(), b.clone()], window);
        let s2 = pair_emission_statistics(&[b, a], window);
        assert_eq!(s1, s2);
        assert_eq!(s1.pair_count, 3);
        assert_eq!(s1.single_count, 1);
        assert_eq!(s1.inter_pair_intervals, vec![15000.0]);
    }

    #[test]
    fn histogram_mode() {
        let h = Histogram::from_samples(&[1.0, 2.0, 2.1, 2.2, 9.0], 4);
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        let mode = h.mode().unwrap();
        assert!(mode > 1.0 && mode < 3.0);
    }

    #[test]
    fn delayed_correlation_matches_equal_time_at_zero_delay() {
        let p = Preset::PaperFig3.params();
        let hc = HilbertConfig::default();
        let system = OpenSystem::new(p, Preset::PaperFig3.pulses(), hc).unwrap();
        let cfg = IntegratorConfig::new(vec![2000.0]);
        let rho0 = QuantumState::ground(&hc).unwrap();
        for order in [CorrelationOrder::Single, CorrelationOrder::Pair] {
            let delayed =
                g2_delayed(&system, &rho0, &cfg, 2000.0, order, &[0.0, 200.0, 400.0], NumeratorTime::Reference).unwrap();
            let mut prop = MasterPropagator::new(&system, &cfg, 0.0, &[rho0.to_density()]).unwrap();
            prop.advance_to(2000.0).unwrap();
            let direct = CorrelationProbe::new(order, &hc).unwrap().equal_time(&prop.state(0)).unwrap();
            assert_abs_diff_eq!(delayed.series.values[0].unwrap(), direct, epsilon = 1e-8);
            assert!(delayed.series.values.iter().flatten().all(|&g| g >= -REPORT_SLACK));
        }
    }

    #[test]
    fn delayed_correlation_of_free_decay() {
        // drives off, |2⟩ decays: G(0, τ) = Tr[b†b e^{Lτ}(b ρ b†)] = 2 e^{-γτ}
        // and ⟨b†b⟩(τ) = 2 e^{-γτ}, so g1(0, τ) = 2 e^{-γτ} / (2 · 2 e^{-γτ}) = 1/2
        let p = Preset::PaperFig4.params();
        let hc = HilbertConfig::default();
        let system = OpenSystem::new(p, PulseTrain::off(), hc).unwrap();
        let cfg = IntegratorConfig::new(vec![1.0]);
        let rho0 = QuantumState::basis(&hc, 0, 2).unwrap();
        let taus = [0.0, 500.0, 2000.0];
        let d = g2_delayed(&system, &rho0, &cfg, 0.0, CorrelationOrder::Single, &taus, NumeratorTime::Reference).unwrap();
        for (k, tau) in taus.iter().enumerate() {
            assert_abs_diff_eq!(d.coincidences[k], 2.0 * (-p.gamma_m * tau).exp(), epsilon = 1e-6);
            assert_abs_diff_eq!(d.series.values[k].unwrap(), 0.5, epsilon = 1e-6);
        }
        let err = g2_delayed(&system, &QuantumState::ground(&hc).unwrap(), &cfg, 0.0, CorrelationOrder::Single, &taus, NumeratorTime::Reference);
        assert!(matches!(err, Err(Error::UndefinedCorrelation { .. })));
    }

    #[test]
    fn verdicts() {
        let taus = vec![0.0, 1.0, 2.0];
        let s = |v: [f64; 3]| TimeSeries::from_values("d", taus.clone(), v.to_vec()).unwrap();
        assert_eq!(verdict(CorrelationOrder::Single, &s([2.0, 1.5, 1.0])), Verdict::BunchedPairs);
        assert_eq!(verdict(CorrelationOrder::Pair, &s([0.2, 0.5, 0.9])), Verdict::AntibunchedPairs);
        assert_eq!(verdict(CorrelationOrder::Pair, &s([0.2, 0.1, 0.9])), Verdict::Inconclusive);
    }
}
