//! Accelerated proximal gradient baseline for the same ℓ₁ problem the ADMM
//! solver handles.
//!
//! Each step is `S⁺ = prox_{λ/L}(Y − ∇f(Y)/L)` with momentum
//! `Y = S_k + ω_k(S_k − S_{k−1})`, `ω_k = k/(k+3)`, and `L` grown by `c`
//! until the quadratic upper bound holds. A step that would raise the
//! objective is rejected and the momentum restarted, which keeps the
//! objective sequence non-increasing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, MeasurementSet, TransitionMatrix};
use crate::models::ModelKind;
use crate::operator::{l1_norm, real_inner, soft_threshold, SampledFourier};
use crate::report::{History, PgdRecord, SolveReport, SolverKind};

/// Line-search attempts per iteration before giving up.
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgdConfig {
    pub lambda: f64,
    /// Initial inverse step size.
    pub l0: f64,
    /// Backtracking growth factor.
    pub c: f64,
    pub max_iter: usize,
    /// Relative-change stopping threshold.
    pub tol: f64,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            l0: 1.0,
            c: 2.0,
            max_iter: 5000,
            tol: 1e-6,
        }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda.is_finite()
            && self.lambda >= 0.0
            && self.l0.is_finite()
            && self.l0 > 0.0
            && self.c.is_finite()
            && self.c > 1.0
            && self.max_iter >= 1
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad PGD config {self:?}")))
        }
    }

    /// Defaults with `λ = √(ln M)` for HSC and `λ = ln M` for BDS.
    pub fn reference(kind: ModelKind, m: usize) -> Self {
        let log_m = (m.max(1) as f64).ln();
        Self {
            lambda: match kind {
                ModelKind::Hsc => log_m.sqrt(),
                ModelKind::Bds => log_m,
            },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgdState {
    pub s_cur: ComplexGrid,
    pub s_prev: ComplexGrid,
    pub y_momentum: ComplexGrid,
    pub k: usize,
    pub l_cur: f64,
}

impl PgdState {
    pub fn zeros(n: usize, l0: f64) -> Self {
        Self {
            s_cur: ComplexGrid::zeros(n, n),
            s_prev: ComplexGrid::zeros(n, n),
            y_momentum: ComplexGrid::zeros(n, n),
            k: 0,
            l_cur: l0,
        }
    }
}

/// Gradient of `f(S) = (N²/2)‖inverse(S)[𝒥,𝒥] − B‖²` in the real inner
/// product `Re⟨·,·⟩`.
pub fn fidelity_gradient(s: &ComplexGrid, ms: &MeasurementSet) -> Result<ComplexGrid> {
    SampledFourier::for_measurements(ms).gradient(s, ms.b())
}

fn prox_step(y: &ComplexGrid, g: &ComplexGrid, l: f64, lambda: f64) -> ComplexGrid {
    let n = y.rows();
    let tau = lambda / l;
    let data = y
        .data()
        .iter()
        .zip(g.data())
        .map(|(y, g)| soft_threshold(y - g / l, tau))
        .collect();
    ComplexGrid::from_vec(n, n, data).expect("shape preserved")
}

fn momentum(s: &ComplexGrid, s_prev: &ComplexGrid, omega: f64) -> ComplexGrid {
    let n = s.rows();
    let data = s
        .data()
        .iter()
        .zip(s_prev.data())
        .map(|(a, b)| a + (a - b) * omega)
        .collect();
    ComplexGrid::from_vec(n, n, data).expect("shape preserved")
}

/// Iteration driver, exposed so tests can inspect the per-step state.
#[derive(Debug)]
pub struct PgdSolver<'a> {
    cfg: PgdConfig,
    ms: &'a MeasurementSet,
    op: SampledFourier,
}

impl<'a> PgdSolver<'a> {
    pub fn new(ms: &'a MeasurementSet, cfg: PgdConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            ms,
            op: SampledFourier::for_measurements(ms),
        })
    }

    pub fn operator(&self) -> &SampledFourier {
        &self.op
    }

    pub fn objective(&self, s: &ComplexGrid) -> Result<f64> {
        Ok(self.op.fidelity(s, self.ms.b())? + self.cfg.lambda * l1_norm(s))
    }

    pub fn run(&self) -> Result<(PgdState, SolveReport)> {
        let n = self.ms.n();
        let b = self.ms.b();
        let lambda = self.cfg.lambda;
        let mut st = PgdState::zeros(n, self.cfg.l0);
        let mut f_cur = self.objective(&st.s_cur)?;
        // momentum counter, reset on restart
        let mut j = 0usize;
        let mut history = Vec::new();
        let mut converged = false;

        let start = Instant::now();
        while st.k < self.cfg.max_iter {
            st.k += 1;
            let omega = j as f64 / (j as f64 + 3.0);
            st.y_momentum = momentum(&st.s_cur, &st.s_prev, omega);
            let y = &st.y_momentum;
            let r_y = self.op.residual(y, b)?;
            let f_y = self.op.fidelity_from_residual(&r_y);
            let g = self.op.adjoint(&r_y);

            let mut l = st.l_cur;
            let mut tries = 0;
            let (z, f_z) = loop {
                let z = prox_step(y, &g, l, lambda);
                let f_z = self.op.fidelity(&z, b)?;
                let dz = z.distance(y);
                let bound = f_y + real_inner(&g, &z) - real_inner(&g, y) + 0.5 * l * dz * dz;
                if !f_z.is_finite() {
                    return Err(Error::NonFinite { iteration: st.k });
                }
                if f_z <= bound + 1e-12 * bound.abs().max(1.0) {
                    break (z, f_z);
                }
                tries += 1;
                if tries >= MAX_BACKTRACKS {
                    return Err(Error::NonConvergent { cap: MAX_BACKTRACKS });
                }
                l *= self.cfg.c;
            };
            st.l_cur = l;

            let obj = f_z + lambda * l1_norm(&z);
            if !obj.is_finite() {
                return Err(Error::NonFinite { iteration: st.k });
            }
            if obj > f_cur && j > 0 {
                // momentum overshoot: keep S_k and restart
                st.s_prev = st.s_cur.clone();
                j = 0;
                history.push(PgdRecord {
                    k: st.k,
                    objective: f_cur,
                    rel_change: 0.0,
                    lipschitz: l,
                    accepted: false,
                });
                continue;
            }

            let rel_change = z.distance(&st.s_cur) / st.s_cur.norm().max(1.0);
            st.s_prev = std::mem::replace(&mut st.s_cur, z);
            f_cur = obj;
            j += 1;
            history.push(PgdRecord {
                k: st.k,
                objective: obj,
                rel_change,
                lipschitz: l,
                accepted: true,
            });
            if rel_change < self.cfg.tol {
                converged = true;
                break;
            }
        }
        let wall_time = start.elapsed().as_secs_f64();

        let n2 = (n * n) as f64;
        let s_hat = TransitionMatrix::from_vec(n, st.s_cur.data().iter().map(|z| z.re / n2).collect())?;
        let report = SolveReport {
            solver: SolverKind::Pgd,
            s_hat,
            iterations: st.k,
            converged,
            wall_time,
            max_imag: st.s_cur.max_abs_imag() / n2,
            history: History::Pgd(history),
        };
        Ok((st, report))
    }
}

/// Recovers `Ŝ = Re(S)/N²` by accelerated proximal gradient.
pub fn pgd_recover(ms: &MeasurementSet, cfg: &PgdConfig) -> Result<SolveReport> {
    Ok(PgdSolver::new(ms, *cfg)?.run()?.1)
}
