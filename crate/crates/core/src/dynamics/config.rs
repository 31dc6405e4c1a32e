use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhysicalParams, PulseTrain};

/// Drive amplitude, relative to `omega_0`, above which a pulse counts as on.
pub const ACTIVE_PULSE_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "IntegratorConfig::default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "IntegratorConfig::default_abs_tol")]
    pub abs_tol: f64,
    /// Step cap while a pulse is on; defaults to `sigma / 10`.
    #[serde(default)]
    pub max_step_active: Option<f64>,
    /// Step cap between pulses; defaults to `0.1` over the fastest rate.
    #[serde(default)]
    pub max_step_idle: Option<f64>,
    #[serde(default)]
    pub start_time: f64,
    /// Times at which the state is reported, sorted, all `>= start_time`.
    pub sample_times: Vec<f64>,
}

impl IntegratorConfig {
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ABS_TOL: f64 = 1e-10;

    fn default_rel_tol() -> f64 {
        Self::DEFAULT_REL_TOL
    }

    fn default_abs_tol() -> f64 {
        Self::DEFAULT_ABS_TOL
    }

    pub fn new(sample_times: Vec<f64>) -> Self {
        Self {
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_step_active: None,
            max_step_idle: None,
            start_time: sample_times.first().copied().unwrap_or(0.0).min(0.0),
            sample_times,
        }
    }

    /// `count` equally spaced samples covering `[start, end]`, starting at `start`.
    pub fn uniform(start: f64, end: f64, count: usize) -> Self {
        let times = uniform_grid(start, end, count);
        Self { start_time: start, ..Self::new(times) }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn end_time(&self) -> f64 {
        self.sample_times.last().copied().unwrap_or(self.start_time)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("max_step_active", self.max_step_active), ("max_step_idle", self.max_step_idle)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::param(name, format!("must be positive, got {v}")));
                }
            }
        }
        if !self.start_time.is_finite() {
            return Err(Error::param("start_time", "must be finite"));
        }
        if self.sample_times.is_empty() {
            return Err(Error::param("sample_times", "at least one sample time is required"));
        }
        let mut prev = self.start_time;
        for &t in &self.sample_times {
            if !t.is_finite() || t < prev {
                return Err(Error::param(
                    "sample_times",
                    format!("must be finite, sorted and not before start_time {}; offending value {t}", self.start_time),
                ));
            }
            prev = t;
        }
        Ok(())
    }

    /// Step cap at `t` for a propagation resolving the carrier phases in the
    /// cavity frame (`carrier_cap`), or in a frame where they are removed.
    pub(crate) fn step_limit(&self, params: &PhysicalParams, train: &PulseTrain, t: f64, carrier_cap: bool) -> f64 {
        if train.exceeds(ACTIVE_PULSE_FRACTION, t) {
            self.max_step_active.unwrap_or_else(|| {
                let mut cap = train.sigma / 10.0;
                if carrier_cap {
                    let fastest = params.delta_1.abs().max(params.delta_2.abs());
                    if fastest > 0.0 {
                        cap = cap.min(2.0 * std::f64::consts::PI / (20.0 * fastest));
                    }
                }
                cap
            })
        } else {
            self.max_step_idle.unwrap_or_else(|| {
                let mut rate = params.kappa.max(params.gamma_m);
                if carrier_cap {
                    rate = rate.max(params.omega_m);
                }
                if rate > 0.0 {
                    0.1 / rate
                } else {
                    f64::INFINITY
                }
            })
        }
    }
}

pub fn uniform_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| if i + 1 == count { end } else { start + step * i as f64 }).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    #[test]
    fn defaults_and_validation() {
        let cfg = IntegratorConfig::uniform(0.0, 100.0, 11);
        assert_eq!(cfg.sample_times[10], 100.0);
        assert_eq!(cfg.sample_times[3], 30.0);
        assert_eq!((cfg.rel_tol, cfg.abs_tol), (1e-8, 1e-10));
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.sample_times = vec![5.0, 1.0];
        assert!(bad.validate().is_err());
        bad.sample_times = vec![-1.0];
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.rel_tol = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn step_limits() {
        let p = Preset::PaperFig3.params();
        let tr = Preset::PaperFig3.pulses();
        let cfg = IntegratorConfig::uniform(0.0, 1.0, 2);
        let carrier = 2.0 * std::f64::consts::PI / (20.0 * p.delta_2.abs());
        assert!((cfg.step_limit(&p, &tr, 1600.0, true) - carrier).abs() < 1e-15);
        assert_eq!(cfg.step_limit(&p, &tr, 1600.0, false), 30.0);
        assert_eq!(cfg.step_limit(&p, &tr, 9000.0, true), 0.1);
        assert!((cfg.step_limit(&p, &tr, 9000.0, false) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn serde_defaults() {
        let cfg: IntegratorConfig = serde_json::from_str(r#"{"sample_times": [0.0, 1.0]}"#).unwrap();
        assert_eq!(cfg.rel_tol, 1e-8);
        assert!(serde_json::from_str::<IntegratorConfig>(r#"{"sample_times": [], "bogus": 1}"#).is_err());
    }
}
