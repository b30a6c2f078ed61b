use serde::Serialize;

use crate::grid::TransitionMatrix;

/// Residuals and tolerances after one ADMM sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRecord {
    pub k: usize,
    pub r_norm: f64,
    pub s_norm: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
}

/// One accelerated proximal-gradient iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgdRecord {
    pub k: usize,
    pub objective: f64,
    pub rel_change: f64,
    pub lipschitz: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Admm,
    Pgd,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverKind::Admm => f.write_str("admm"),
            SolverKind::Pgd => f.write_str("pgd"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum History {
    Admm(Vec<ResidualRecord>),
    Pgd(Vec<PgdRecord>),
}

impl History {
    pub fn len(&self) -> usize {
        match self {
            History::Admm(h) => h.len(),
            History::Pgd(h) => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn admm(&self) -> Option<&[ResidualRecord]> {
        match self {
            History::Admm(h) => Some(h),
            History::Pgd(_) => None,
        }
    }

    pub fn pgd(&self) -> Option<&[PgdRecord]> {
        match self {
            History::Pgd(h) => Some(h),
            History::Admm(_) => None,
        }
    }
}

/// Outcome of a sparse recovery run. The matrix is not part of the JSON
/// form; write it with [`crate::io`].
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    #[serde(skip)]
    pub s_hat: TransitionMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds spent in the iteration loop.
    pub wall_time: f64,
    /// `max |Im X| / N²` of the final Fourier-domain iterate.
    pub max_imag: f64,
    pub history: History,
}

impl SolveReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
