//! Resonant lambda-system model restricted to the zero- and one-photon sectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{a_coefficient, find_g_n, OperatorMatrix};
use crate::model::dressed::DressedBasis;
use crate::model::params::{HilbertConfig, PhysicalParams};
use crate::model::pulse::{Pulse, PulseTrain};

/// Ordered basis of the `N`-truncated effective model.
///
/// Phonon parity 0 comes first, then parity 1; within a parity the chain
/// `|0,m⟩, |1,m~⟩, |0,m+2⟩, ...` is listed in coupling order, so for `N = 2`
/// the order is `|0,0⟩, |1,0~⟩, |0,2⟩, |0,1⟩, |1,1~⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveBasis {
    pub max_phonons: usize,
    /// `(photons, phonons)` labels of the dressed states.
    pub states: Vec<(usize, usize)>,
}

impl EffectiveBasis {
    pub fn new(max_phonons: usize) -> Result<Self> {
        if max_phonons == 0 || max_phonons % 2 == 1 {
            return Err(Error::param("N", format!("must be a positive even integer, got {max_phonons}")));
        }
        let mut states = Vec::with_capacity(2 * max_phonons + 1);
        for parity in 0..2 {
            let mut m = parity;
            while m <= max_phonons {
                states.push((0, m));
                if m < max_phonons {
                    states.push((1, m));
                }
                m += 2;
            }
        }
        Ok(Self { max_phonons, states })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn position(&self, photons: usize, phonons: usize) -> Option<usize> {
        self.states.iter().position(|&s| s == (photons, phonons))
    }

    /// Map an effective-basis vector into the composite space.
    pub fn embed(&self, dressed: &DressedBasis, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut out = DVector::zeros(dressed.hilbert.dim());
        for (&(n, m), &c) in self.states.iter().zip(v.iter()) {
            if c != Complex64::new(0.0, 0.0) {
                out.axpy(c, dressed.state(n, m)?, Complex64::new(1.0, 0.0));
            }
        }
        Ok(out)
    }
}

/// `H_eff^(N)(t)`: pump couples `|0,m⟩ ↔ |1,m~⟩` with `Ω_1 A_{m,m}`, Stokes
/// couples `|0,m+2⟩ ↔ |1,m~⟩` with `Ω_2 A_{m,m+2}`, in the interaction
/// picture of the undriven Hamiltonian.
pub fn build_h_eff(n: usize, params: &PhysicalParams, train: &PulseTrain, t: f64) -> Result<OperatorMatrix> {
    let basis = EffectiveBasis::new(n)?;
    params.validate()?;
    train.validate()?;
    let g_n = find_g_n(n, params.omega_m)?;
    if (params.g - g_n).abs() > 1e-6 * g_n {
        log::warn!("effective model with N = {n} assumes g = {g_n}, got {}", params.g);
    }
    let beta = params.beta();
    let pump = train.amplitude(Pulse::Pump, t);
    let stokes = train.amplitude(Pulse::Stokes, t);
    let mut h = DMatrix::<f64>::zeros(basis.dim(), basis.dim());
    let mut couple = |i: usize, j: usize, value: f64| {
        h[(i, j)] = value;
        h[(j, i)] = value;
    };
    for m in 0..n {
        let excited = basis.position(1, m).expect("excited state listed");
        let lower = basis.position(0, m).expect("ground state listed");
        couple(excited, lower, pump * a_coefficient(1, m, m, beta)?);
        if m + 2 <= n {
            let upper = basis.position(0, m + 2).expect("target state listed");
            couple(excited, upper, stokes * a_coefficient(1, m, m + 2, beta)?);
        }
    }
    Ok(OperatorMatrix::from_real(h, true))
}

/// Closed-form spectrum of `H_eff^(2)(t)`, sorted ascending:
/// `0`, `±sqrt((Ω_1 A_00)^2 + (Ω_2 A_02)^2)`, `±Ω_1 A_11`.
pub fn h_eff2_eigenvalues(params: &PhysicalParams, train: &PulseTrain, t: f64) -> Result<[f64; 5]> {
    let beta = params.beta();
    let pump = train.amplitude(Pulse::Pump, t);
    let stokes = train.amplitude(Pulse::Stokes, t);
    let bright = (pump * a_coefficient(1, 0, 0, beta)?).hypot(stokes * a_coefficient(1, 0, 2, beta)?);
    let odd = (pump * a_coefficient(1, 1, 1, beta)?).abs();
    let mut ev = [0.0, bright, -bright, odd, -odd];
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Dark state of the even lambda system as a vector in the `N = 2` effective
/// basis, normalized with a nonnegative real `|0,0⟩` coefficient.
pub fn dark_state_effective(params: &PhysicalParams, train: &PulseTrain, t: f64) -> Result<DVector<Complex64>> {
    let (ground, target) = dark_state_amplitudes(params, train, t)?;
    let mut v = DVector::zeros(5);
    v[0] = Complex64::new(ground, 0.0);
    v[2] = Complex64::new(target, 0.0);
    Ok(v)
}

/// Dark state `∝ Ω_2 A_02 |0,0⟩ − Ω_1 A_00 |0,2⟩` in the composite space.
pub fn dark_state(
    params: &PhysicalParams,
    train: &PulseTrain,
    hc: &HilbertConfig,
    t: f64,
) -> Result<DVector<Complex64>> {
    hc.validate()?;
    if hc.n_b < 3 {
        return Err(Error::InvalidDimension { dim: hc.n_b, reason: "dark state needs phonon number 2" });
    }
    let (ground, target) = dark_state_amplitudes(params, train, t)?;
    let mut v = DVector::zeros(hc.dim());
    v[hc.index(0, 0)] = Complex64::new(ground, 0.0);
    v[hc.index(0, 2)] = Complex64::new(target, 0.0);
    Ok(v)
}

fn dark_state_amplitudes(params: &PhysicalParams, train: &PulseTrain, t: f64) -> Result<(f64, f64)> {
    let pump = train.amplitude(Pulse::Pump, t);
    let stokes = train.amplitude(Pulse::Stokes, t);
    if pump < 1e-300 && stokes < 1e-300 {
        return Err(Error::UndefinedDarkState { t });
    }
    let beta = params.beta();
    let mut ground = stokes * a_coefficient(1, 0, 2, beta)?;
    let mut target = -pump * a_coefficient(1, 0, 0, beta)?;
    let norm = ground.hypot(target);
    if norm == 0.0 {
        return Err(Error::UndefinedDarkState { t });
    }
    if ground < 0.0 {
        ground = -ground;
        target = -target;
    }
    Ok((ground / norm, target / norm))
}
