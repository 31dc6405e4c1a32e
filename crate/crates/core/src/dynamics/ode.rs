//! Adaptive Dormand–Prince 5(4) integrator for complex-valued systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) trait OdeSystem {

    /// `dy = f(t, y)`.
    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);

    /// Largest step allowed when starting at `t`.
    fn max_step(&self, _t: f64) -> f64 {
        f64::INFINITY
    }

    /// Extra acceptance criterion applied after the error test passes.
    fn accept(&self, _t: f64, _h: f64, _y_old: &[Complex64], _y_new: &[Complex64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Stage buffers for one Runge–Kutta step.
#[derive(Debug, Clone)]
pub(crate) struct Stages {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
}

impl Stages {
    pub fn new(len: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![ZERO; len]), tmp: vec![ZERO; len] }
    }

    /// Stages 2..7 given `k[0] = f(t, y)`; writes the fifth-order solution to
    /// `out` and leaves `f(t + h, out)` in `k[6]`.
    fn run(&mut self, sys: &mut dyn OdeSystem, t: f64, y: &[Complex64], h: f64, out: &mut [Complex64]) {
        let Self { k, tmp } = self;
        let combine = |tmp: &mut [Complex64], k: &[Vec<Complex64>; 7], coeffs: &[(usize, f64)]| {
            for (i, slot) in tmp.iter_mut().enumerate() {
                let mut acc = ZERO;
                for &(s, c) in coeffs {
                    acc += k[s][i] * c;
                }
                *slot = y[i] + acc * h;
            }
        };
        combine(tmp, k, &[(0, A21)]);
        sys.rhs(t + C2 * h, tmp, &mut k[1]);
        combine(tmp, k, &[(0, A31), (1, A32)]);
        sys.rhs(t + C3 * h, tmp, &mut k[2]);
        combine(tmp, k, &[(0, A41), (1, A42), (2, A43)]);
        sys.rhs(t + C4 * h, tmp, &mut k[3]);
        combine(tmp, k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        sys.rhs(t + C5 * h, tmp, &mut k[4]);
        combine(tmp, k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        sys.rhs(t + h, tmp, &mut k[5]);
        combine(out, k, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
        sys.rhs(t + h, out, &mut k[6]);
    }

    fn error_norm(&self, y: &[Complex64], y_new: &[Complex64], h: f64, tol: Tolerances) -> f64 {
        let k = &self.k;
        let mut sum = 0.0;
        for i in 0..y.len() {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let scale = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
            sum += e.norm_sqr() / (scale * scale);
        }
        (sum / y.len().max(1) as f64).sqrt()
    }
}

/// Single fifth-order step without error control, used to localize events
/// inside an accepted step.
pub(crate) fn fixed_step(
    sys: &mut dyn OdeSystem,
    stages: &mut Stages,
    t: f64,
    y: &[Complex64],
    h: f64,
    out: &mut [Complex64],
) {
    sys.rhs(t, y, &mut stages.k[0]);
    stages.run(sys, t, y, h, out);
}

/// Adaptive integrator state.
#[derive(Debug, Clone)]
pub(crate) struct Dopri5 {
    pub t: f64,
    pub y: Vec<Complex64>,
    /// State at the start of the last accepted step.
    pub t_prev: f64,
    pub y_prev: Vec<Complex64>,
    h: f64,
    tol: Tolerances,
    stages: Stages,
    y_new: Vec<Complex64>,
    fsal: bool,
    pub accepted: u64,
    pub rejected: u64,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: Vec<Complex64>, tol: Tolerances) -> Self {
        let len = y0.len();
        Self {
            t: t0,
            t_prev: t0,
            y_prev: y0.clone(),
            y: y0,
            h: 0.0,
            tol,
            stages: Stages::new(len),
            y_new: vec![ZERO; len],
            fsal: false,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Restart from a new state (e.g. after a quantum jump), keeping the step size.
    pub fn reset(&mut self, t: f64, y: &[Complex64]) {
        self.t = t;
        self.t_prev = t;
        self.y.copy_from_slice(y);
        self.y_prev.copy_from_slice(y);
        self.fsal = false;
    }

    fn initial_step(&mut self, sys: &mut dyn OdeSystem, limit: f64) -> f64 {
        let k0 = &self.stages.k[0];
        let tol = self.tol;
        let scaled = |v: &[Complex64], y: &[Complex64]| {
            let s: f64 = v
                .iter()
                .zip(y)
                .map(|(a, b)| (a.norm() / (tol.abs + tol.rel * b.norm())).powi(2))
                .sum();
            (s / v.len().max(1) as f64).sqrt()
        };
        let d0 = scaled(&self.y, &self.y);
        let d1 = scaled(k0, &self.y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(limit);
        // one explicit Euler probe to estimate the second derivative
        let probe: Vec<Complex64> = self.y.iter().zip(k0).map(|(y, k)| y + k * h0).collect();
        let mut f1 = vec![ZERO; self.y.len()];
        sys.rhs(self.t + h0, &probe, &mut f1);
        let diff: Vec<Complex64> = f1.iter().zip(k0).map(|(a, b)| (a - b) / h0).collect();
        let d2 = scaled(&diff, &self.y);
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(limit)
    }

    /// Take one accepted step, never passing `t_end`. Returns the step length.
    pub fn step(&mut self, sys: &mut dyn OdeSystem, t_end: f64) -> Result<f64> {
        let remaining = t_end - self.t;
        if remaining <= 0.0 {
            return Ok(0.0);
        }
        if !self.fsal {
            sys.rhs(self.t, &self.y, &mut self.stages.k[0]);
            self.fsal = true;
        }
        let limit = sys.max_step(self.t).min(remaining);
        if self.h <= 0.0 {
            self.h = self.initial_step(sys, limit);
        }
        let mut h = self.h.min(limit);
        loop {
            let floor = 1e-12 * self.t.abs().max(1.0);
            if h < floor && h < remaining {
                return Err(Error::Stiffness { t: self.t, step: h });
            }
            self.stages.run(sys, self.t, &self.y, h, &mut self.y_new);
            let err = self.stages.error_norm(&self.y, &self.y_new, h, self.tol);
            if !err.is_finite() {
                self.rejected += 1;
                h *= MIN_FACTOR;
                continue;
            }
            if err > 1.0 {
                self.rejected += 1;
                h *= (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
                continue;
            }
            if !sys.accept(self.t, h, &self.y, &self.y_new) {
                self.rejected += 1;
                h *= 0.5;
                continue;
            }
            let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
            let proposed = h * factor;
            // landing on t_end shortens a step artificially; do not let that shrink the next one
            self.h = if h >= remaining { proposed.max(self.h) } else { proposed };
            self.t_prev = self.t;
            std::mem::swap(&mut self.y_prev, &mut self.y);
            std::mem::swap(&mut self.y, &mut self.y_new);
            let (first, last) = self.stages.k.split_at_mut(6);
            std::mem::swap(&mut first[0], &mut last[0]);
            self.t = if h >= remaining { t_end } else { self.t + h };
            self.accepted += 1;
            return Ok(h);
        }
    }

    pub fn advance_to(&mut self, sys: &mut dyn OdeSystem, t_end: f64) -> Result<()> {
        while self.t < t_end {
            self.step(sys, t_end)?;
        }
        Ok(())
    }

    /// Stage buffers for [`fixed_step`]; invalidates the cached derivative.
    pub fn stages_mut(&mut self) -> &mut Stages {
        self.fsal = false;
        &mut self.stages
    }
}
