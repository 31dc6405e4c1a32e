//! Execution of each experiment kind into an in-memory [`RunOutput`].

use std::collections::BTreeMap;

use phonon_pulse_core::dynamics::{
    evolve_master_with, evolve_schrodinger_with, mcwf_trajectory, run_trajectories, summarize, ChannelLabel,
    DrivenHamiltonian, IntegratorConfig, Observable, OpenSystem, QuantumState,
};
use phonon_pulse_core::fockspace::{find_g_n, OperatorMatrix};
use phonon_pulse_core::model::{validity_margin, Pulse};
use phonon_pulse_core::observables::{
    g2_delayed, locate_extremum, pair_emission_statistics, CorrelationOrder, CorrelationProbe, CorrelationResult,
    ExtremumKind, NumeratorTime, TimeSeries,
};
use nalgebra::DMatrix;
use phonon_pulse_core::Complex64;

use crate::config::{Experiment, NumeratorConvention, ResolvedConfig};
use crate::error::CliResult;
use crate::output::{Cell, CheckRecord, CheckStatus, Column, RunOutput, Table, FREQUENCY_UNIT, QUANTA_UNIT, UNITLESS};

/// Leakage into the two-photon manifold above this is reported as a warning.
pub const TWO_PHOTON_LEAKAGE_BOUND: f64 = 0.02;

pub fn execute(cfg: &ResolvedConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    validity_check(cfg, &mut out);
    match cfg.experiment {
        Experiment::PureEvolve => pure_evolve(cfg, &mut out)?,
        Experiment::MasterEvolve => master_evolve(cfg, &mut out)?,
        Experiment::Trajectory => trajectory(cfg, &mut out)?,
        Experiment::Ensemble => ensemble(cfg, &mut out)?,
        Experiment::Correlations => correlations(cfg, &mut out)?,
        Experiment::FindGn => {
            let g = find_g_n(cfg.find_gn.n, cfg.params.omega_m)?;
            out.result("n", cfg.find_gn.n);
            out.result("g_n", g);
            out.result("g_n_over_omega_m", g / cfg.params.omega_m);
        }
        Experiment::ValidityCheck => {}
    }
    Ok(out)
}

fn validity_check(cfg: &ResolvedConfig, out: &mut RunOutput) {
    let report = validity_margin(&cfg.params, cfg.pulses.omega_0);
    let value = report.value();
    out.result("validity_margin", if value.is_finite() { Some(value) } else { None });
    out.result("validity_threshold", report.threshold);
    let (status, detail) = match report.warning() {
        None => (CheckStatus::Pass, format!("margin {value:.6} >= {}", report.threshold)),
        Some(w) => (CheckStatus::Warn, w),
    };
    out.checks.push(CheckRecord::new("validity_margin", status, detail));
}

fn initial_state(cfg: &ResolvedConfig) -> CliResult<QuantumState> {
    Ok(QuantumState::basis(&cfg.hilbert, cfg.initial_state.photons, cfg.initial_state.phonons)?)
}

fn observable_unit(label: &str) -> &'static str {
    if label == "mean_phonon" {
        QUANTA_UNIT
    } else {
        UNITLESS
    }
}

fn pulse_tables(cfg: &ResolvedConfig, times: &[f64], out: &mut RunOutput) {
    for (name, which) in [("pump", Pulse::Pump), ("stokes", Pulse::Stokes)] {
        let values = times.iter().map(|&t| Cell::Num(cfg.pulses.amplitude(which, t))).collect();
        out.tables.push(Table::series(name, times, vec![(Column::new(name, FREQUENCY_UNIT), values)]));
    }
}

fn series_tables(times: &[f64], observables: &[Observable], series: Vec<Vec<f64>>, out: &mut RunOutput) {
    for (o, values) in observables.iter().zip(series) {
        let cells = values.into_iter().map(Cell::Num).collect();
        out.tables.push(Table::series(
            o.label.clone(),
            times,
            vec![(Column::new(o.label.clone(), observable_unit(&o.label)), cells)],
        ));
    }
}

fn pure_evolve(cfg: &ResolvedConfig, out: &mut RunOutput) -> CliResult<()> {
    if cfg.params.kappa > 0.0 || cfg.params.gamma_m > 0.0 {
        out.checks.push(CheckRecord::new(
            "dissipation_ignored",
            CheckStatus::Warn,
            "pure-state evolution ignores kappa and gamma_m",
        ));
    }
    let system = OpenSystem::new(cfg.params, cfg.pulses, cfg.hilbert)?;
    let observables = system.tracked_observables()?;
    let h = DrivenHamiltonian::new(cfg.params, cfg.pulses, cfg.hilbert)?;
    let icfg = cfg.integrator.to_config();
    let mut series = vec![Vec::new(); observables.len()];
    evolve_schrodinger_with(&initial_state(cfg)?, &h, &icfg, |_, psi| {
        for (s, o) in series.iter_mut().zip(&observables) {
            s.push(o.evaluate_pure(psi.as_slice()));
        }
        Ok(())
    })?;
    pulse_tables(cfg, &icfg.sample_times, out);
    series_tables(&icfg.sample_times, &observables, series, out);
    Ok(())
}

/// Projector onto the cavity levels `n >= 2`.
fn multi_photon_projector(cfg: &ResolvedConfig) -> Option<Observable> {
    let hc = cfg.hilbert;
    if hc.n_a < 3 {
        return None;
    }
    let dim = hc.dim();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j && i >= 2 * hc.n_b {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Some(Observable::operator("two_photon_population", OperatorMatrix::new(m, true)))
}

fn master_evolve(cfg: &ResolvedConfig, out: &mut RunOutput) -> CliResult<()> {
    let system = OpenSystem::new(cfg.params, cfg.pulses, cfg.hilbert)?;
    let mut observables = system.tracked_observables()?;
    observables.extend(multi_photon_projector(cfg));
    let icfg = cfg.integrator.to_config();
    let mut series = vec![Vec::new(); observables.len()];
    let mut trace_dev: f64 = 0.0;
    evolve_master_with(&system, &initial_state(cfg)?, &icfg, |_, rho| {
        trace_dev = trace_dev.max((rho.trace().re - 1.0).abs());
        for (s, o) in series.iter_mut().zip(&observables) {
            s.push(o.evaluate_density(rho));
        }
        Ok(())
    })?;
    out.result("max_trace_deviation", trace_dev);
    if let Some(k) = observables.iter().position(|o| o.label == "two_photon_population") {
        let leak = series[k].iter().copied().fold(0.0, f64::max);
        out.result("max_two_photon_population", leak);
        let status = if leak < TWO_PHOTON_LEAKAGE_BOUND { CheckStatus::Pass } else { CheckStatus::Warn };
        out.checks.push(CheckRecord::new(
            "two_photon_leakage",
            status,
            format!("max population {leak:.3e} (bound {TWO_PHOTON_LEAKAGE_BOUND})"),
        ));
    }
    pulse_tables(cfg, &icfg.sample_times, out);
    series_tables(&icfg.sample_times, &observables, series, out);
    Ok(())
}

fn jump_table(jumps: impl Iterator<Item = (u64, f64, ChannelLabel)>) -> Table {
    let mut t = Table::new(
        "jumps",
        vec![Column::new("seed", UNITLESS), Column::new("time", crate::output::TIME_UNIT), Column::new("channel", UNITLESS)],
    );
    for (seed, time, ch) in jumps {
        t.rows.push(vec![Cell::Text(seed.to_string()), Cell::Num(time), Cell::Text(ch.as_str().to_string())]);
    }
    t
}

fn period_warning(cfg: &ResolvedConfig, out: &mut RunOutput) {
    let window = cfg.pair_window();
    if cfg.pulses.period < 10.0 * window {
        out.checks.push(CheckRecord::new(
            "pair_window",
            CheckStatus::Warn,
            format!(
                "pulse period {} is less than 10 pair windows ({window}); pairs from consecutive pulses may merge",
                cfg.pulses.period
            ),
        ));
    }
}

fn trajectory(cfg: &ResolvedConfig, out: &mut RunOutput) -> CliResult<()> {
    let system = OpenSystem::new(cfg.params, cfg.pulses, cfg.hilbert)?;
    let observables = system.tracked_observables()?;
    let icfg = cfg.integrator.to_config();
    let seed = cfg.trajectories.base_seed;
    let record = mcwf_trajectory(&system, &initial_state(cfg)?, &icfg, &observables, seed)?;
    let stats = pair_emission_statistics(std::slice::from_ref(&record), cfg.pair_window());
    period_warning(cfg, out);
    out.result("seed", seed);
    out.result("jump_count", record.jumps.len());
    out.result("pair_count", stats.pair_count);
    out.result("pair_statistics", &stats);
    out.tables.push(jump_table(record.jumps.iter().map(|j| (seed, j.time, j.channel))));
    let series = observables.iter().map(|o| record.observables[&o.label].clone()).collect();
    pulse_tables(cfg, &icfg.sample_times, out);
    series_tables(&icfg.sample_times, &observables, series, out);
    Ok(())
}

fn ensemble(cfg: &ResolvedConfig, out: &mut RunOutput) -> CliResult<()> {
    let system = OpenSystem::new(cfg.params, cfg.pulses, cfg.hilbert)?;
    let observables = system.tracked_observables()?;
    let icfg = cfg.integrator.to_config();
    let records = run_trajectories(
        &system,
        &initial_state(cfg)?,
        &icfg,
        &observables,
        cfg.trajectories.n_traj,
        cfg.trajectories.base_seed,
    )?;
    let summary = summarize(&records)?;
    let stats = pair_emission_statistics(&records, cfg.pair_window());
    period_warning(cfg, out);
    out.result("n_traj", summary.n_traj);
    out.result("pair_statistics", &stats);
    out.tables.push(jump_table(records.iter().flat_map(|r| r.jumps.iter().map(move |j| (r.seed, j.time, j.channel)))));
    for o in &observables {
        let unit = observable_unit(&o.label);
        let mean = summary.mean[&o.label].iter().map(|&v| Cell::Num(v)).collect();
        let se = summary.std_error[&o.label].iter().map(|&v| Cell::Num(v)).collect();
        out.tables.push(Table::series(
            o.label.clone(),
            &summary.sample_times,
            vec![(Column::new(format!("{}_mean", o.label), unit), mean), (Column::new(format!("{}_std_error", o.label), unit), se)],
        ));
    }
    Ok(())
}

fn tau_grid(cfg: &ResolvedConfig) -> Vec<f64> {
    let n = cfg.correlations.tau_samples;
    let max = cfg.tau_max();
    (0..n).map(|i| if i + 1 == n { max } else { max * i as f64 / (n - 1) as f64 }).collect()
}

fn correlations(cfg: &ResolvedConfig, out: &mut RunOutput) -> CliResult<()> {
    let system = OpenSystem::new(cfg.params, cfg.pulses, cfg.hilbert)?;
    let icfg: IntegratorConfig = cfg.integrator.to_config();
    let rho0 = initial_state(cfg)?;
    let orders = [CorrelationOrder::Single, CorrelationOrder::Pair];
    let probes = orders.map(|o| CorrelationProbe::new(o, &cfg.hilbert));
    let probes: Vec<CorrelationProbe> = probes.into_iter().collect::<Result<_, _>>()?;
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); 2];
    let mut phonons = Vec::new();
    let phonon_op = system.hamiltonian.ops.phonon_number.clone();
    evolve_master_with(&system, &rho0, &icfg, |_, rho| {
        for (v, p) in values.iter_mut().zip(&probes) {
            v.push(p.equal_time(rho));
        }
        phonons.push((phonon_op.entries() * rho).trace().re);
        Ok(())
    })?;
    let window = cfg.correlation_window();
    let taus = tau_grid(cfg);
    let mut equal: Vec<TimeSeries> = Vec::new();
    let mut stars = Vec::new();
    for (order, v) in orders.iter().zip(values) {
        let series = TimeSeries::new(order.label(), icfg.sample_times.clone(), v)?;
        let kind = match order {
            CorrelationOrder::Single => ExtremumKind::Max,
            CorrelationOrder::Pair => ExtremumKind::Min,
        };
        stars.push(locate_extremum(&series, kind, window)?);
        equal.push(series);
    }
    let mut results = Vec::new();
    for (k, order) in orders.iter().enumerate() {
        let numerator = match (order, cfg.correlations.numerator) {
            (CorrelationOrder::Single, NumeratorConvention::PairExtremum) => NumeratorTime::Other(stars[1]),
            _ => NumeratorTime::Reference,
        };
        let delayed = g2_delayed(&system, &rho0, &icfg, stars[k], *order, &taus, numerator)?;
        results.push(CorrelationResult::new(*order, equal[k].clone(), stars[k], delayed.series));
    }

    out.result("t_s1", stars[0]);
    out.result("t_s2", stars[1]);
    out.result("extremum_window", window);
    for r in &results {
        let key = r.order.label();
        out.result(&format!("{key}_at_t_star"), r.delayed.values[0]);
        out.result(&format!("{key}_verdict"), r.verdict);
    }
    out.tables.push(Table::series(
        "mean_phonon",
        &icfg.sample_times,
        vec![(Column::new("mean_phonon", QUANTA_UNIT), phonons.into_iter().map(Cell::Num).collect())],
    ));
    for r in &results {
        let label = r.order.label();
        out.tables.push(Table::series(
            label,
            &r.equal_time.times,
            vec![(Column::new(label, UNITLESS), r.equal_time.values.iter().map(|&v| Cell::from(v)).collect())],
        ));
        let mut t = Table::series(
            format!("{label}_delayed"),
            &r.delayed.times,
            vec![(Column::new(format!("{label}_delayed"), UNITLESS), r.delayed.values.iter().map(|&v| Cell::from(v)).collect())],
        );
        t.columns[0] = Column::new("tau", crate::output::TIME_UNIT);
        out.tables.push(t);
    }
    let by_order: BTreeMap<&str, &CorrelationResult> = results.iter().map(|r| (r.order.label(), r)).collect();
    out.result("correlations", &by_order);
    Ok(())
}
