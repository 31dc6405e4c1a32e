//! Experiment configuration: presets, strict JSON files and `--set` overrides.
//!
//! Resolution order is preset document, then the file's fields merged
//! key-by-key, then each `--set path=value`. The merged document must
//! deserialize into [`ResolvedConfig`] with no unknown keys.

use std::path::{Path, PathBuf};

use phonon_pulse_core::dynamics::IntegratorConfig;
use phonon_pulse_core::model::{HilbertConfig, PhysicalParams, Preset, PulseTrain};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PureEvolve,
    MasterEvolve,
    Trajectory,
    Ensemble,
    Correlations,
    FindGn,
    ValidityCheck,
}

/// Uniform sampling grid in units of `1/omega_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step_active: Option<f64>,
    pub max_step_idle: Option<f64>,
    pub grid: TimeGrid,
}

impl IntegratorSpec {
    pub fn to_config(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::uniform(self.grid.start, self.grid.end, self.grid.samples)
            .with_tolerances(self.rel_tol, self.abs_tol);
        cfg.max_step_active = self.max_step_active;
        cfg.max_step_idle = self.max_step_idle;
        cfg
    }
}

/// Initial bare Fock state `|photons, phonons>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub photons: usize,
    pub phonons: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub n_traj: usize,
    pub base_seed: u64,
    /// Clustering window for emission pairs; defaults to `5 / gamma_m`.
    pub pair_window: Option<f64>,
}

/// Which reference time enters the numerator of the delayed single-phonon
/// correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeratorConvention {
    /// Conditioned at the single-phonon maximum, like the normalization.
    Matching,
    /// Conditioned at the pair-correlation minimum.
    PairExtremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSpec {
    /// Extremum search window; defaults to the second pulse period.
    pub window: Option<(f64, f64)>,
    /// Largest delay; defaults to half a period.
    pub tau_max: Option<f64>,
    pub tau_samples: usize,
    pub numerator: NumeratorConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindGnSpec {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub name: String,
    pub experiment: Experiment,
    pub params: PhysicalParams,
    pub pulses: PulseTrain,
    pub hilbert: HilbertConfig,
    pub integrator: IntegratorSpec,
    pub initial_state: InitialState,
    pub trajectories: TrajectorySpec,
    pub correlations: CorrelationSpec,
    pub find_gn: FindGnSpec,
    pub output_dir: Option<PathBuf>,
}

impl ResolvedConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.params.validate()?;
        self.pulses.validate()?;
        self.hilbert.validate()?;
        self.integrator.to_config().validate()?;
        let g = &self.integrator.grid;
        if g.samples == 0 || !(g.end >= g.start) {
            return Err(CliError::config(format!(
                "integrator.grid: need at least one sample and end >= start, got {g:?}"
            )));
        }
        let s = self.initial_state;
        if s.photons >= self.hilbert.n_a || s.phonons >= self.hilbert.n_b {
            return Err(CliError::config(format!(
                "initial_state |{},{}> outside the truncation ({}, {})",
                s.photons, s.phonons, self.hilbert.n_a, self.hilbert.n_b
            )));
        }
        if matches!(self.experiment, Experiment::Trajectory | Experiment::Ensemble) && self.trajectories.n_traj == 0 {
            return Err(CliError::config("trajectories.n_traj must be at least 1"));
        }
        if let Some(w) = self.trajectories.pair_window {
            if !(w.is_finite() && w > 0.0) {
                return Err(CliError::config("trajectories.pair_window must be positive"));
            }
        }
        if self.experiment == Experiment::Correlations {
            let (lo, hi) = self.correlation_window();
            if !(lo < hi) || lo < g.start || hi > g.end {
                return Err(CliError::config(format!(
                    "correlations.window [{lo}, {hi}] must lie inside the grid [{}, {}]",
                    g.start, g.end
                )));
            }
            if self.correlations.tau_samples < 2 || !(self.tau_max() > 0.0) {
                return Err(CliError::config("correlations need tau_max > 0 and at least 2 delay samples"));
            }
        }
        if self.experiment == Experiment::FindGn && (self.find_gn.n == 0 || self.find_gn.n % 2 == 1) {
            return Err(CliError::config(format!("find_gn.n must be a positive even integer, got {}", self.find_gn.n)));
        }
        Ok(())
    }

    pub fn correlation_window(&self) -> (f64, f64) {
        self.correlations
            .window
            .unwrap_or((self.pulses.period, 2.0 * self.pulses.period))
    }

    pub fn tau_max(&self) -> f64 {
        self.correlations.tau_max.unwrap_or(0.5 * self.pulses.period)
    }

    pub fn pair_window(&self) -> f64 {
        self.trajectories
            .pair_window
            .unwrap_or(phonon_pulse_core::observables::PAIR_WINDOW_LIFETIMES / self.params.gamma_m)
    }
}

/// Defaults shared by every configuration; physics fields have none.
fn base_document() -> Value {
    let hc = HilbertConfig::default();
    json!({
        "name": "run",
        "hilbert": { "n_a": hc.n_a, "n_b": hc.n_b },
        "integrator": {
            "rel_tol": IntegratorConfig::DEFAULT_REL_TOL,
            "abs_tol": IntegratorConfig::DEFAULT_ABS_TOL,
            "max_step_active": null,
            "max_step_idle": null,
        },
        "initial_state": { "photons": 0, "phonons": 0 },
        "trajectories": { "n_traj": 1, "base_seed": 0, "pair_window": null },
        "correlations": { "window": null, "tau_max": null, "tau_samples": 76, "numerator": "matching" },
        "find_gn": { "n": 2 },
        "output_dir": null,
    })
}

/// Full document for a named preset.
pub fn preset_document(preset: Preset) -> Value {
    let mut doc = base_document();
    let (experiment, end, samples) = match preset {
        Preset::PaperFig2 => ("pure-evolve", 3000.0, 301),
        Preset::PaperFig3 => ("master-evolve", 45000.0, 4501),
        Preset::PaperFig4 => ("trajectory", 45000.0, 4501),
        Preset::PaperFig5 => ("correlations", 30000.0, 3001),
    };
    merge(
        &mut doc,
        json!({
            "name": preset.name(),
            "experiment": experiment,
            "params": preset.params(),
            "pulses": preset.pulses(),
            "hilbert": preset.hilbert(),
            "integrator": { "grid": { "start": 0.0, "end": end, "samples": samples } },
        }),
    );
    doc
}

/// Recursive object merge; non-object values replace.
pub fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Apply `path.to.key=value`; the value is parsed as JSON, falling back to
/// a bare string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{assignment}` is not of the form key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("override path `{path}` has an empty component")));
    }
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("override path `{path}` crosses a non-object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::config(format!("override path `{path}` crosses a non-object")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn preset_by_name(name: &str) -> CliResult<Preset> {
    Preset::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        CliError::config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
    })
}

/// Builds the resolved configuration from an optional file, an optional
/// preset name and `--set` overrides.
pub fn resolve(file: Option<&Path>, preset: Option<&str>, overrides: &[String]) -> CliResult<ResolvedConfig> {
    let mut file_doc = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let doc: Value =
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            if !doc.is_object() {
                return Err(CliError::config(format!("{}: top level must be an object", path.display())));
            }
            doc
        }
        None => Value::Object(Map::new()),
    };
    let file_preset = match file_doc.as_object_mut().and_then(|o| o.remove("preset")) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(other) => return Err(CliError::config(format!("preset must be a string, got {other}"))),
    };
    let preset = match (file_preset.as_deref(), preset) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::config(format!("config names preset `{a}` but `{b}` was requested")))
        }
        (a, b) => a.or(b),
    };
    let mut doc = match preset {
        Some(name) => preset_document(preset_by_name(name)?),
        None => base_document(),
    };
    merge(&mut doc, file_doc);
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ResolvedConfig = serde_json::from_value(doc).map_err(|e| CliError::config(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}
