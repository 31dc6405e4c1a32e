use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::find_g_n;
use crate::model::pulse::PulseTrain;

/// Physical constants of the driven optomechanical system.
///
/// Frequencies are angular. Detunings are carrier minus cavity frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub omega_m: f64,
    pub g: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub n_th: f64,
    /// Bath temperature as `k_B T_b / (hbar omega_m)`; enters the dephasing channel.
    pub theta_b: f64,
}

impl PhysicalParams {
    /// Detunings tuned to the `|0,m> <-> |1,m~(1)>` (pump) and
    /// `|0,m+2> <-> |1,m~(1)>` (Stokes) resonances, zero temperature.
    pub fn resonance_preset(omega_m: f64, g: f64, kappa: f64, gamma_m: f64) -> Self {
        Self {
            omega_m,
            g,
            delta_1: 0.0,
            delta_2: 0.0,
            kappa,
            gamma_m,
            n_th: 0.0,
            theta_b: 0.0,
        }
        .with_resonant_detunings()
    }

    pub fn with_resonant_detunings(mut self) -> Self {
        let shift = self.g * self.g / self.omega_m;
        self.delta_1 = -shift;
        self.delta_2 = -shift - 2.0 * self.omega_m;
        self
    }

    /// Coupling in units of the mechanical frequency, `g / omega_m`.
    pub fn beta(&self) -> f64 {
        self.g / self.omega_m
    }

    pub fn dissipationless(mut self) -> Self {
        self.kappa = 0.0;
        self.gamma_m = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m.is_finite() && self.omega_m > 0.0) {
            return Err(Error::param("omega_m", format!("must be positive, got {}", self.omega_m)));
        }
        for (name, value) in [("delta_1", self.delta_1), ("delta_2", self.delta_2)] {
            if !value.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        for (name, value) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("n_th", self.n_th),
            ("theta_b", self.theta_b),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::param(name, format!("must be finite and nonnegative, got {value}")));
            }
        }
        Ok(())
    }
}

/// Truncation of the cavity (`n_a`) and mechanical (`n_b`) Fock spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertConfig {
    pub n_a: usize,
    pub n_b: usize,
}

impl Default for HilbertConfig {
    fn default() -> Self {
        Self { n_a: 3, n_b: 15 }
    }
}

impl HilbertConfig {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        let hc = Self { n_a, n_b };
        hc.validate()?;
        Ok(hc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a < 2 {
            return Err(Error::InvalidDimension {
                dim: self.n_a,
                reason: "cavity truncation must include the one-photon manifold (n_a >= 2)",
            });
        }
        if self.n_b == 0 {
            return Err(Error::InvalidDimension { dim: 0, reason: "mechanical truncation must be positive" });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n_a * self.n_b
    }

    /// Composite index of `|photons>_a ⊗ |phonons>_b`.
    pub fn index(&self, photons: usize, phonons: usize) -> usize {
        debug_assert!(photons < self.n_a && phonons < self.n_b);
        photons * self.n_b + phonons
    }
}

/// Named parameter sets behind the CLI presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Dissipationless adiabatic passage over the first pulse pair.
    PaperFig2,
    /// Dissipative populations over several pulse periods.
    PaperFig3,
    /// Single quantum trajectory.
    PaperFig4,
    /// Equal-time and delayed correlation functions.
    PaperFig5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::PaperFig2, Preset::PaperFig3, Preset::PaperFig4, Preset::PaperFig5];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperFig2 => "paper-fig2",
            Preset::PaperFig3 => "paper-fig3",
            Preset::PaperFig4 => "paper-fig4",
            Preset::PaperFig5 => "paper-fig5",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// `g = g_2`, resonant detunings, `kappa = 0.002`, `gamma_m = 0.0004`
    /// (dissipation switched off for `PaperFig2`).
    pub fn params(self) -> PhysicalParams {
        let g2 = find_g_n(2, 1.0).expect("g_2 exists for omega_m = 1");
        let params = PhysicalParams::resonance_preset(1.0, g2, 0.002, 0.0004);
        match self {
            Preset::PaperFig2 => params.dissipationless(),
            _ => params,
        }
    }

    pub fn pulses(self) -> PulseTrain {
        PulseTrain {
            omega_0: 0.03,
            sigma: 300.0,
            t1: 1600.0,
            t2: 1100.0,
            period: 15000.0,
            window_sigmas: PulseTrain::DEFAULT_WINDOW_SIGMAS,
        }
    }

    pub fn hilbert(self) -> HilbertConfig {
        HilbertConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonance_detunings_exact() {
        let p = PhysicalParams::resonance_preset(1.0, 0.7, 0.0, 0.0);
        assert_eq!(p.delta_1, -0.7 * 0.7);
        assert_eq!(p.delta_2, -0.7 * 0.7 - 2.0);
        let p = Preset::PaperFig3.params();
        assert!((p.delta_2 + 2.585_786_437_626_905).abs() < 1e-12);
        assert!((p.beta() - 0.765_366_864_730_179_5).abs() < 1e-10);
        assert_eq!(Preset::PaperFig2.params().kappa, 0.0);
    }

    #[test]
    fn validation() {
        let mut p = Preset::PaperFig3.params();
        assert!(p.validate().is_ok());
        p.kappa = -1.0;
        assert!(p.validate().is_err());
        p.kappa = 0.0;
        p.omega_m = 0.0;
        assert!(p.validate().is_err());
        assert!(HilbertConfig::new(1, 15).is_err());
        assert!(HilbertConfig::new(2, 0).is_err());
        assert_eq!(HilbertConfig::default().dim(), 45);
        assert_eq!(HilbertConfig::default().index(1, 2), 17);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        assert_eq!(Preset::from_name("paper-fig9"), None);
    }
}
