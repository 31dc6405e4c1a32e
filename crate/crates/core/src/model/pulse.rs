//! Gaussian pulse trains driving the cavity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::params::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pulse {
    /// Carrier at `omega_c + delta_1`, peaks at `t1 + kT`.
    Pump,
    /// Carrier at `omega_c + delta_2`, peaks at `t2 + kT`.
    Stokes,
}

/// Periodic train of Gaussian packets `Ω_0 Σ_k exp[-(t - t_i - kT)^2 / 2σ^2]`, `k >= 0`.
///
/// A packet contributes only within `window_sigmas * sigma` of its peak, so the
/// drive is exactly zero far from every packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrain {
    pub omega_0: f64,
    pub sigma: f64,
    pub t1: f64,
    pub t2: f64,
    pub period: f64,
    #[serde(default = "PulseTrain::default_window")]
    pub window_sigmas: f64,
}

impl PulseTrain {
    pub const DEFAULT_WINDOW_SIGMAS: f64 = 8.0;

    fn default_window() -> f64 {
        Self::DEFAULT_WINDOW_SIGMAS
    }

    /// A train with zero amplitude; every evaluation returns 0.
    pub fn off() -> Self {
        Self { omega_0: 0.0, sigma: 1.0, t1: 0.0, t2: 0.0, period: 1.0, window_sigmas: Self::DEFAULT_WINDOW_SIGMAS }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_0.is_finite() && self.omega_0 >= 0.0) {
            return Err(Error::param("omega_0", "must be finite and nonnegative"));
        }
        for (name, value) in [("sigma", self.sigma), ("period", self.period), ("window_sigmas", self.window_sigmas)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {value}")));
            }
        }
        if !(self.t1.is_finite() && self.t2.is_finite()) {
            return Err(Error::param("t1/t2", "peak times must be finite"));
        }
        Ok(())
    }

    pub fn peak_time(&self, which: Pulse) -> f64 {
        match which {
            Pulse::Pump => self.t1,
            Pulse::Stokes => self.t2,
        }
    }

    fn half_width(&self) -> f64 {
        self.window_sigmas * self.sigma
    }

    /// Packet indices `k >= 0` whose peak lies within `half_width` of `t`.
    fn packets_near(&self, which: Pulse, t: f64, half_width: f64) -> std::ops::RangeInclusive<u64> {
        let offset = t - self.peak_time(which);
        let first = ((offset - half_width) / self.period).ceil().max(0.0);
        let last = ((offset + half_width) / self.period).floor();
        if last < first {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        first as u64..=last as u64
    }

    pub fn amplitude(&self, which: Pulse, t: f64) -> f64 {
        if self.omega_0 == 0.0 {
            return 0.0;
        }
        let peak = self.peak_time(which);
        let two_var = 2.0 * self.sigma * self.sigma;
        self.packets_near(which, t, self.half_width())
            .map(|k| {
                let d = t - peak - k as f64 * self.period;
                (-d * d / two_var).exp()
            })
            .sum::<f64>()
            * self.omega_0
    }

    /// Complex drive `Ω_1(t) e^{-iΔ_1 t} + Ω_2(t) e^{-iΔ_2 t}` multiplying `a†`
    /// in the frame rotating at the cavity frequency.
    pub fn drive_coefficient(&self, params: &PhysicalParams, t: f64) -> Complex64 {
        let pump = self.amplitude(Pulse::Pump, t);
        let stokes = self.amplitude(Pulse::Stokes, t);
        let mut c = Complex64::new(0.0, 0.0);
        if pump != 0.0 {
            c += Complex64::from_polar(pump, -params.delta_1 * t);
        }
        if stokes != 0.0 {
            c += Complex64::from_polar(stokes, -params.delta_2 * t);
        }
        c
    }

    /// Merged time intervals within `[start, end]` on which some packet
    /// exceeds `fraction * omega_0` (`fraction = 0` gives the full window support).
    pub fn active_intervals(&self, fraction: f64, start: f64, end: f64) -> Vec<(f64, f64)> {
        if self.omega_0 == 0.0 || end <= start {
            return Vec::new();
        }
        let mut half = self.half_width();
        if fraction > 0.0 {
            half = half.min(self.sigma * (2.0 * (1.0 / fraction).ln()).max(0.0).sqrt());
        }
        let mut intervals = Vec::new();
        for which in [Pulse::Pump, Pulse::Stokes] {
            let peak = self.peak_time(which);
            let first = ((start - peak - half) / self.period).floor().max(0.0) as u64;
            let mut k = first;
            loop {
                let centre = peak + k as f64 * self.period;
                if centre - half > end {
                    break;
                }
                let (lo, hi) = (centre - half, centre + half);
                if hi >= start {
                    intervals.push((lo.max(start), hi.min(end)));
                }
                k += 1;
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged
    }

    /// Whether any packet exceeds `fraction * omega_0` at time `t`.
    pub fn exceeds(&self, fraction: f64, t: f64) -> bool {
        if self.omega_0 == 0.0 {
            return false;
        }
        let threshold = fraction * self.omega_0;
        [Pulse::Pump, Pulse::Stokes].into_iter().any(|w| self.amplitude(w, t) > threshold)
    }
}

/// `Ω_i(t)` for one of the two trains.
pub fn pulse_amplitude(train: &PulseTrain, which: Pulse, t: f64) -> f64 {
    train.amplitude(which, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::Preset;

    fn train() -> PulseTrain {
        Preset::PaperFig3.pulses()
    }

    #[test]
    fn peaks_and_periodicity() {
        let tr = train();
        let rel = |x: f64| (x - tr.omega_0).abs() / tr.omega_0;
        assert!(rel(tr.amplitude(Pulse::Pump, tr.t1)) < 1e-12);
        assert!(rel(tr.amplitude(Pulse::Pump, tr.t1 + tr.period)) < 1e-12);
        assert!(rel(tr.amplitude(Pulse::Stokes, tr.t2 + 3.0 * tr.period)) < 1e-12);
    }

    #[test]
    fn gaussian_tail_value() {
        let tr = train();
        let v = tr.amplitude(Pulse::Pump, 1000.0);
        assert!((v - 0.03 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.004_060_058_497_098_38).abs() < 1e-15);
    }

    #[test]
    fn window_cutoff_and_negative_packets() {
        let tr = train();
        // packets with k < 0 never contribute
        assert_eq!(tr.amplitude(Pulse::Pump, tr.t1 - tr.period), 0.0);
        // midway between packets the drive is exactly zero
        assert_eq!(tr.amplitude(Pulse::Pump, 9000.0), 0.0);
        let inside = tr.amplitude(Pulse::Pump, tr.t1 + 7.9 * tr.sigma);
        assert!(inside > 0.0 && inside < 1e-13);
        assert_eq!(tr.amplitude(Pulse::Pump, tr.t1 + 8.1 * tr.sigma), 0.0);
        assert!(tr.drive_coefficient(&Preset::PaperFig3.params(), 9000.0).norm() < 1e-14);
    }

    #[test]
    fn bounded_by_contributing_packets() {
        let mut tr = train();
        tr.period = 200.0; // overlapping packets
        for i in 0..200 {
            let t = i as f64 * 37.0;
            let v = tr.amplitude(Pulse::Stokes, t);
            let count = tr.packets_near(Pulse::Stokes, t, tr.half_width()).count();
            assert!(v >= 0.0 && v <= tr.omega_0 * count as f64 + 1e-15);
        }
    }

    #[test]
    fn intervals_merge_and_clip() {
        let tr = train();
        let iv = tr.active_intervals(0.0, 0.0, 25000.0);
        // first pair overlaps, clipped at 0; second pair
        assert_eq!(iv.len(), 2);
        assert_eq!(iv[0], (0.0, 1600.0 + 2400.0));
        assert_eq!(iv[1], (1100.0 + 15000.0 - 2400.0, 1600.0 + 15000.0 + 2400.0));
        let narrow = tr.active_intervals(1e-8, 0.0, 30000.0);
        let half = 300.0 * (2.0 * 1e8f64.ln()).sqrt();
        assert!((narrow[0].1 - (1600.0 + half)).abs() < 1e-9);
        assert!(tr.exceeds(1e-8, 1600.0 + half - 1.0));
        assert!(!tr.exceeds(1e-8, 1600.0 + half + 1.0));
        assert!(PulseTrain::off().active_intervals(0.0, 0.0, 1e5).is_empty());
    }
}
