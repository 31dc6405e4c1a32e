//! Figure presets with pass/fail checks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{resolve, ResolvedConfig};
use crate::error::{CliError, CliResult};
use crate::experiments::execute;
use crate::output::{output_dir, write_run, CheckRecord, CheckStatus, RunOutput};

/// Sample time at which the adiabatic transfer is judged complete.
pub const FIG2_TRANSFER_TIME: f64 = 1800.0;
pub const FIG2_TARGET_MIN: f64 = 0.99;
pub const FIG2_OTHERS_MAX: f64 = 0.01;
pub const PERIODICITY_TOLERANCE: f64 = 0.01;
pub const TRACE_TOLERANCE: f64 = 1e-6;
/// A trajectory counts as collapsed onto a dressed state above this population.
pub const COLLAPSE_POPULATION: f64 = 0.9;

pub const REPORT_NAME: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    pub fn preset(self) -> String {
        format!("paper-{}", self.as_str())
    }

    /// Preset configuration, shortened for `--fast`.
    pub fn config(self, fast: bool) -> CliResult<ResolvedConfig> {
        let overrides: &[&str] = match (self, fast) {
            (_, false) | (Figure::Fig2, true) => &[],
            (Figure::Fig3, true) => &["integrator.grid.samples=451"],
            (Figure::Fig4, true) => &["integrator.grid.end=15000", "integrator.grid.samples=1501"],
            (Figure::Fig5, true) => &["integrator.grid.samples=1501", "correlations.tau_samples=11"],
        };
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        resolve(None, Some(&self.preset()), &overrides)
    }

    pub fn checks(self, cfg: &ResolvedConfig, out: &RunOutput) -> Vec<CheckRecord> {
        match self {
            Figure::Fig2 => fig2_checks(out),
            Figure::Fig3 => fig3_checks(cfg, out),
            Figure::Fig4 => fig4_checks(out),
            Figure::Fig5 => fig5_checks(out),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| CliError::config(format!("unknown figure `{s}` (expected fig2, fig3, fig4 or fig5)")))
    }
}

fn population_labels(out: &RunOutput) -> Vec<&str> {
    out.tables.iter().map(|t| t.name.as_str()).filter(|n| n.starts_with("p_")).collect()
}

/// Defined values of the single value column of `name`, with the key column.
fn series(out: &RunOutput, name: &str) -> Option<(Vec<f64>, Vec<f64>)> {
    let t = out.table(name)?;
    let times = t.column(&t.columns.first()?.label)?;
    let values = t.column(&t.columns.get(1)?.label)?;
    Some(times.into_iter().zip(values).filter_map(|(t, v)| Some((t?, v?))).unzip())
}

fn value_at(out: &RunOutput, name: &str, time: f64) -> Option<f64> {
    let (times, values) = series(out, name)?;
    let k = times.iter().position(|&t| (t - time).abs() <= 1e-9 * time.abs().max(1.0))?;
    Some(values[k])
}

fn missing(name: &str, what: &str) -> CheckRecord {
    CheckRecord::new(name, CheckStatus::Fail, format!("{what} not produced"))
}

pub fn fig2_checks(out: &RunOutput) -> Vec<CheckRecord> {
    let t = FIG2_TRANSFER_TIME;
    let mut checks = Vec::new();
    match value_at(out, "p_0_2", t) {
        Some(p) => checks.push(CheckRecord::verdict(
            "target_population",
            p >= FIG2_TARGET_MIN,
            format!("P_0_2({t}) = {p:.6}, required >= {FIG2_TARGET_MIN}"),
        )),
        None => checks.push(missing("target_population", "p_0_2 at the transfer time")),
    }
    let others: Vec<(String, f64)> = population_labels(out)
        .into_iter()
        .filter(|&l| l != "p_0_2")
        .filter_map(|l| Some((l.to_string(), value_at(out, l, t)?)))
        .collect();
    let worst = others.iter().cloned().fold((String::from("none"), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    checks.push(CheckRecord::verdict(
        "other_populations",
        !others.is_empty() && worst.1 <= FIG2_OTHERS_MAX,
        format!("largest other population at {t}: {} = {:.3e}, required <= {FIG2_OTHERS_MAX}", worst.0, worst.1),
    ));
    checks
}

pub fn fig3_checks(cfg: &ResolvedConfig, out: &RunOutput) -> Vec<CheckRecord> {
    let mut checks = Vec::new();
    match series(out, "p_0_2") {
        Some((_, v)) => {
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            checks.push(CheckRecord::verdict(
                "max_target_population",
                max > 0.5 && max < 1.0,
                format!("max P_0_2 = {max:.6}, required in (0.5, 1)"),
            ));
        }
        None => checks.push(missing("max_target_population", "p_0_2")),
    }
    checks.push(periodicity_check(cfg, out));
    match out.results.get("max_trace_deviation").and_then(Value::as_f64) {
        Some(d) => checks.push(CheckRecord::verdict(
            "trace_preservation",
            d < TRACE_TOLERANCE,
            format!("max |Tr rho - 1| = {d:.3e}, required < {TRACE_TOLERANCE:e}"),
        )),
        None => checks.push(missing("trace_preservation", "max_trace_deviation")),
    }
    checks
}

/// Compares every tracked population at `t` and `t + T` for `t` from the
/// end of the first period up to one period before the end of the run.
pub fn periodicity_check(cfg: &ResolvedConfig, out: &RunOutput) -> CheckRecord {
    let period = cfg.pulses.period;
    let mut worst: Option<(f64, &str, f64)> = None;
    let mut compared = 0usize;
    for label in population_labels(out) {
        let Some((times, values)) = series(out, label) else { continue };
        for (i, &t) in times.iter().enumerate() {
            if t < period - 1e-9 {
                continue;
            }
            let target = t + period;
            let Some(j) = times[i..].iter().position(|&s| (s - target).abs() <= 1e-9 * target).map(|j| i + j) else {
                continue;
            };
            compared += 1;
            let d = (values[j] - values[i]).abs();
            if worst.is_none_or(|w| d > w.0) {
                worst = Some((d, label, t));
            }
        }
    }
    match worst {
        Some((d, label, t)) => CheckRecord::verdict(
            "periodicity",
            d <= PERIODICITY_TOLERANCE,
            format!(
                "largest |P(t) - P(t+T)| over {compared} pairs: {d:.3e} ({label} at t = {t}), required <= {PERIODICITY_TOLERANCE}"
            ),
        ),
        None => CheckRecord::new(
            "periodicity",
            CheckStatus::Fail,
            "grid does not contain sample pairs t, t + T after the first period",
        ),
    }
}

pub fn fig4_checks(out: &RunOutput) -> Vec<CheckRecord> {
    let mut checks = Vec::new();
    let pairs = out.results.get("pair_count").and_then(Value::as_u64);
    checks.push(match pairs {
        Some(n) => CheckRecord::verdict("cascade_pairs", n >= 1, format!("{n} emission pairs, required >= 1")),
        None => missing("cascade_pairs", "pair_count"),
    });
    for label in ["p_0_1", "p_0_2"] {
        let name = format!("collapse_{label}");
        checks.push(match series(out, label) {
            Some((_, v)) => {
                let max = v.iter().copied().fold(0.0, f64::max);
                CheckRecord::verdict(
                    name,
                    max >= COLLAPSE_POPULATION,
                    format!("max {label} = {max:.6}, required >= {COLLAPSE_POPULATION}"),
                )
            }
            None => missing(&name, label),
        });
    }
    checks
}

pub fn fig5_checks(out: &RunOutput) -> Vec<CheckRecord> {
    let mut checks = Vec::new();
    for (label, bunched) in [("g2_single", true), ("g2_pair", false)] {
        let Some((taus, g)) = series(out, &format!("{label}_delayed")) else {
            checks.push(missing(label, "delayed correlation"));
            continue;
        };
        let defined = taus.first() == Some(&0.0);
        let g0 = if defined { g[0] } else { f64::NAN };
        let (cmp, sign) = if bunched { (g0 > 1.0, ">") } else { (g0 < 1.0, "<") };
        checks.push(CheckRecord::verdict(
            format!("{label}_equal_time"),
            defined && cmp,
            format!("{label}(t*, t*) = {g0:.6}, required {sign} 1"),
        ));
        let n = taus.len().saturating_sub(1);
        let bad: Vec<f64> = taus
            .iter()
            .zip(&g)
            .skip(1)
            .filter(|&(_, &v)| if bunched { !(v < g0) } else { !(v > g0) })
            .map(|(&t, _)| t)
            .collect();
        let expected_len = taus.len() == out.table(&format!("{label}_delayed")).map_or(0, |t| t.rows.len());
        checks.push(CheckRecord::verdict(
            format!("{label}_delay_trend"),
            defined && n > 0 && bad.is_empty() && expected_len,
            if bad.is_empty() {
                format!("{label}(t*, t*+tau) {} {label}(t*, t*) at all {n} delays", if bunched { "<" } else { ">" })
            } else {
                format!("violated at {} of {n} delays, first at tau = {}", bad.len(), bad[0])
            },
        ));
    }
    checks
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub figure: Figure,
    pub fast: bool,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl ReproduceReport {
    pub fn failed(&self) -> Vec<String> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).map(|c| c.name.clone()).collect()
    }
}

/// Runs the figure preset, writes its outputs and `report.json`, and
/// returns the report together with the output directory.
pub fn reproduce(figure: Figure, fast: bool, explicit_dir: Option<&Path>) -> CliResult<(ReproduceReport, PathBuf)> {
    let cfg = figure.config(fast)?;
    let start = Instant::now();
    let mut out = execute(&cfg)?;
    let checks = figure.checks(&cfg, &out);
    out.checks.extend(checks.iter().cloned());
    let report = ReproduceReport {
        figure,
        fast,
        passed: checks.iter().all(|c| c.status != CheckStatus::Fail),
        checks,
    };
    let name = format!("reproduce-{figure}{}", if fast { "-fast" } else { "" });
    let dir = output_dir(explicit_dir, cfg.output_dir.as_deref(), &name);
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::config(e.to_string()))?;
    out.files.push((REPORT_NAME.to_string(), text));
    let resolved = serde_json::to_value(&cfg).map_err(|e| CliError::config(e.to_string()))?;
    write_run(&dir, &out, resolved, start.elapsed().as_secs_f64())?;
    Ok((report, dir))
}
