use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fockspace::OperatorMatrix;
use crate::model::{CompositeOperators, HilbertConfig, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLabel {
    /// Phonon emission `b − β a†a`.
    MechDown,
    /// Thermal phonon absorption `b† − β a†a`.
    MechUp,
    /// Photon leakage `a`.
    CavityDecay,
    /// Photon-number dephasing `a†a`.
    Dephasing,
}

impl ChannelLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelLabel::MechDown => "mech_down",
            ChannelLabel::MechUp => "mech_up",
            ChannelLabel::CavityDecay => "cavity_decay",
            ChannelLabel::Dephasing => "dephasing",
        }
    }
}

impl std::fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lindblad operator `rate_prefactor * operator`.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub label: ChannelLabel,
    pub rate_prefactor: f64,
    /// Unscaled operator.
    pub operator: OperatorMatrix,
}

impl JumpChannel {
    /// The full jump operator including the prefactor.
    pub fn scaled(&self) -> OperatorMatrix {
        self.operator.scale_real(self.rate_prefactor)
    }
}

/// Dressed-state dissipators; channels with zero prefactor are omitted.
pub fn jump_channels(params: &PhysicalParams, hc: &HilbertConfig) -> Result<Vec<JumpChannel>> {
    params.validate()?;
    let ops = CompositeOperators::new(*hc)?;
    Ok(channels_from(params, &ops))
}

pub(crate) fn channels_from(params: &PhysicalParams, ops: &CompositeOperators) -> Vec<JumpChannel> {
    let beta = params.beta();
    let shift = ops.photon_number.scale_real(beta);
    let candidates = [
        (ChannelLabel::MechDown, (params.gamma_m * (params.n_th + 1.0)).sqrt(), &ops.b - &shift),
        (ChannelLabel::MechUp, (params.gamma_m * params.n_th).sqrt(), &ops.b.adjoint() - &shift),
        (ChannelLabel::CavityDecay, params.kappa.sqrt(), ops.a.clone()),
        (ChannelLabel::Dephasing, (4.0 * params.gamma_m * params.theta_b * beta * beta).sqrt(), ops.photon_number.clone()),
    ];
    candidates
        .into_iter()
        .filter(|(_, rate, _)| *rate > 0.0)
        .map(|(label, rate_prefactor, operator)| JumpChannel { label, rate_prefactor, operator })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    #[test]
    fn zero_rates_dropped() {
        let hc = HilbertConfig::default();
        let labels = |p: &PhysicalParams| -> Vec<ChannelLabel> {
            jump_channels(p, &hc).unwrap().iter().map(|c| c.label).collect()
        };
        let mut p = Preset::PaperFig3.params();
        assert_eq!(labels(&p), [ChannelLabel::MechDown, ChannelLabel::CavityDecay]);
        p.n_th = 0.5;
        p.theta_b = 2.0;
        assert_eq!(labels(&p).len(), 4);
        assert!(labels(&Preset::PaperFig2.params()).is_empty());
        let ch = jump_channels(&p, &hc).unwrap();
        assert!((ch[0].rate_prefactor - (0.0004f64 * 1.5).sqrt()).abs() < 1e-15);
        assert!((ch[3].rate_prefactor - (4.0 * 0.0004 * 2.0 * p.beta() * p.beta()).sqrt()).abs() < 1e-15);
        assert_eq!(ChannelLabel::MechDown.to_string(), "mech_down");
    }
}
