//! Ground-truth transition probabilities on a truncated state space by
//! uniformization.
//!
//! States are `(x₁, x₂) ∈ [0, n)²`, indexed `x₁·n + x₂`. Transitions that
//! would leave the box are dropped, so every row of the generator loses
//! that outflow and the computed probabilities are lower bounds.

use crate::error::{Error, Result};
use crate::grid::TransitionMatrix;
use crate::models::{Model, ModelSpec};

/// Poisson terms allowed before giving up.
pub const MAX_POISSON_TERMS: usize = 1_000_000;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Sparse generator restricted to `[0, n_trunc)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGenerator {
    n_trunc: usize,
    /// Off-diagonal `(target, rate)` pairs per state.
    rows: Vec<Vec<(usize, f64)>>,
    /// Total out-rate per state, including dropped transitions.
    out_rate: Vec<f64>,
}

impl TruncatedGenerator {
    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    pub fn state_index(&self, x1: usize, x2: usize) -> usize {
        x1 * self.n_trunc + x2
    }

    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    pub fn out_rate(&self, state: usize) -> f64 {
        self.out_rate[state]
    }

    /// `Q[from, to]`, diagonal included.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        let off: f64 = self.rows[from].iter().filter(|e| e.0 == to).map(|e| e.1).sum();
        if from == to {
            off - self.out_rate[from]
        } else {
            off
        }
    }

    /// Largest total out-rate, the uniformization constant.
    pub fn max_out_rate(&self) -> f64 {
        self.out_rate.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-particle events as `(type, Δx₁, Δx₂, rate)`.
fn events(model: &Model) -> Vec<(usize, i64, i64, f64)> {
    match model {
        Model::Hsc(r) => vec![(0, 1, 0, r.rho), (0, -1, 1, r.nu), (1, 0, -1, r.mu)],
        Model::Bds(r) => vec![
            (0, 0, 1, r.gamma),
            (0, -1, 1, r.sigma),
            (0, -1, 0, r.delta),
            (1, 0, 1, r.gamma),
            (1, 0, -1, r.delta),
        ],
    }
}

/// Generator with rate `x_i·a` for each event of a type-`i` particle.
pub fn build_generator(model: &ModelSpec, n_trunc: usize) -> TruncatedGenerator {
    let n = n_trunc;
    let ev = events(&model.model);
    let mut rows = Vec::with_capacity(n * n);
    let mut out_rate = Vec::with_capacity(n * n);
    for x1 in 0..n {
        for x2 in 0..n {
            let x = [x1 as i64, x2 as i64];
            let mut row = Vec::new();
            let mut total = 0.0;
            for &(i, d1, d2, a) in &ev {
                let rate = x[i] as f64 * a;
                if rate == 0.0 {
                    continue;
                }
                total += rate;
                let (y1, y2) = (x[0] + d1, x[1] + d2);
                if (0..n as i64).contains(&y1) && (0..n as i64).contains(&y2) {
                    row.push((y1 as usize * n + y2 as usize, rate));
                }
            }
            rows.push(row);
            out_rate.push(total);
        }
    }
    TruncatedGenerator {
        n_trunc,
        rows,
        out_rate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `probs[(l, m)] = P(X(t) = (l, m) | X(0) = init)`.
    pub probs: TransitionMatrix,
    /// Mass not accounted for inside the box, `1 − Σ probs`.
    pub truncation_mass: f64,
}

/// Row `init` of `exp(Qt)` as `Σ_k Pois(k; Λt)·e_initᵀ(I + Q/Λ)^k`, summed
/// until the Poisson tail drops below `tol`.
pub fn transition_probs_uniformized(
    q: &TruncatedGenerator,
    init: (usize, usize),
    t: f64,
    tol: f64,
) -> Result<OracleResult> {
    let n = q.n_trunc();
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidConfig(format!("tolerance {tol} must lie in (0, 1)")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidModel(format!("t = {t} must be >= 0")));
    }
    if init.0 >= n || init.1 >= n {
        return Err(Error::InvalidModel(format!(
            "initial state {init:?} outside the {n}x{n} box"
        )));
    }
    let lam = q.max_out_rate();
    let mut pi = vec![0.0; n * n];
    pi[q.state_index(init.0, init.1)] = 1.0;
    if lam == 0.0 || t == 0.0 {
        return finish(n, pi);
    }

    let lt = lam * t;
    let ln_lt = lt.ln();
    let mut acc = vec![0.0; n * n];
    let mut next = vec![0.0; n * n];
    let mut weight_sum = 0.0;
    let mut ln_fact = 0.0;
    for k in 0..MAX_POISSON_TERMS {
        if k > 0 {
            ln_fact += (k as f64).ln();
            step(q, lam, &pi, &mut next);
            std::mem::swap(&mut pi, &mut next);
        }
        let w = (-lt + k as f64 * ln_lt - ln_fact).exp();
        weight_sum += w;
        for (a, p) in acc.iter_mut().zip(&pi) {
            *a += w * p;
        }
        // past the mode the remaining weights form a decreasing sequence
        if k as f64 > lt && 1.0 - weight_sum < tol {
            return finish(n, acc);
        }
    }
    Err(Error::NonConvergent {
        cap: MAX_POISSON_TERMS,
    })
}

/// `next = pi (I + Q/Λ)`.
fn step(q: &TruncatedGenerator, lam: f64, pi: &[f64], next: &mut [f64]) {
    for (s, (nx, p)) in next.iter_mut().zip(pi).enumerate() {
        *nx = p * (1.0 - q.out_rate(s) / lam);
    }
    for (s, &p) in pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for &(to, rate) in q.row(s) {
            next[to] += p * rate / lam;
        }
    }
}

fn finish(n: usize, probs: Vec<f64>) -> Result<OracleResult> {
    let probs = TransitionMatrix::from_vec(n, probs)?;
    let truncation_mass = (1.0 - probs.sum()).max(0.0);
    Ok(OracleResult {
        probs,
        truncation_mass,
    })
}

/// Oracle distribution for a model's own time and initial state.
pub fn oracle_for(model: &ModelSpec, n_trunc: usize, tol: f64) -> Result<OracleResult> {
    let q = build_generator(model, n_trunc);
    let init = (model.init.0 as usize, model.init.1 as usize);
    transition_probs_uniformized(&q, init, model.t, tol)
}
