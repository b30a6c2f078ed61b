//! Adaptive Dormand–Prince 5(4) integration of a scalar complex ODE.
//!
//! The state is one complex number; the error norm treats its real and
//! imaginary parts as two coupled real components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and step budget for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdeConfig {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

impl OdeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.atol.is_finite()
            && self.rtol.is_finite()
            && self.atol >= 0.0
            && self.rtol >= 0.0
            && self.atol + self.rtol > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad ODE config {self:?}")))
        }
    }
}

// Dormand–Prince tableau.
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates `dy/dτ = f(τ, y)` from `τ = 0` with `y(0) = y0` up to `τ = t`.
pub fn integrate<F>(f: F, y0: Complex64, t: f64, cfg: &OdeConfig) -> Result<Complex64>
where
    F: Fn(f64, Complex64) -> Complex64,
{
    if !t.is_finite() || t < 0.0 {
        return Err(Error::IntegrationFailure {
            tau: 0.0,
            reason: format!("end time {t} is not a finite non-negative number"),
        });
    }
    if t == 0.0 {
        return Ok(y0);
    }

    let mut tau = 0.0;
    let mut y = y0;
    let mut k1 = f(tau, y);
    let mut h = initial_step(&f, y0, k1, t, cfg);
    let mut steps = 0usize;

    while tau < t {
        if steps >= cfg.max_steps {
            return Err(Error::IntegrationFailure {
                tau,
                reason: format!("step budget of {} exhausted", cfg.max_steps),
            });
        }
        steps += 1;

        let last = tau + h >= t;
        if last {
            h = t - tau;
        }

        let k2 = f(tau + C2 * h, y + k1 * (h * A21));
        let k3 = f(tau + C3 * h, y + (k1 * A31 + k2 * A32) * h);
        let k4 = f(tau + C4 * h, y + (k1 * A41 + k2 * A42 + k3 * A43) * h);
        let k5 = f(
            tau + C5 * h,
            y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h,
        );
        let k6 = f(
            tau + h,
            y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h,
        );
        let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
        let k7 = f(tau + h, y_new);

        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let err_norm = error_norm(err, y, y_new, cfg);

        if !err_norm.is_finite() || !y_new.re.is_finite() || !y_new.im.is_finite() {
            return Err(Error::IntegrationFailure {
                tau,
                reason: "non-finite state".into(),
            });
        }

        if err_norm <= 1.0 {
            tau = if last { t } else { tau + h };
            y = y_new;
            k1 = k7;
            let factor = if err_norm == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            h *= (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }

        if h <= f64::EPSILON * t.max(1.0) {
            return Err(Error::IntegrationFailure {
                tau,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
    }
    Ok(y)
}

fn error_norm(err: Complex64, y: Complex64, y_new: Complex64, cfg: &OdeConfig) -> f64 {
    let sc_re = cfg.atol + cfg.rtol * y.re.abs().max(y_new.re.abs());
    let sc_im = cfg.atol + cfg.rtol * y.im.abs().max(y_new.im.abs());
    let a = err.re / sc_re;
    let b = err.im / sc_im;
    ((a * a + b * b) / 2.0).sqrt()
}

// Hairer–Nørsett–Wanner starting step heuristic.
fn initial_step<F>(f: &F, y0: Complex64, f0: Complex64, t: f64, cfg: &OdeConfig) -> f64
where
    F: Fn(f64, Complex64) -> Complex64,
{
    let scale = cfg.atol + cfg.rtol * y0.norm();
    let d0 = y0.norm() / scale;
    let d1 = f0.norm() / scale;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(t);
    let y1 = y0 + f0 * h0;
    let f1 = f(h0, y1);
    let d2 = (f1 - f0).norm() / scale / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t)
}
