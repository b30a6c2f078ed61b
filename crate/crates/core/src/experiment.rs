//! Parameter sweeps and solver benchmarks.
//!
//! Benchmarks follow a matched-error protocol: PGD runs to its own stopping
//! rule first, then ADMM keeps iterating past its residual test until its
//! error is no worse than PGD's. A trial where ADMM settles above that
//! error, or hits `max_iter`, is reported as unmatched.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::admm::{AdmmConfig, AdmmSolver, AdmmState};
use crate::error::{Error, Result};
use crate::grid::{sample_indices, ComplexGrid, MeasurementSet, TransitionMatrix};
use crate::pgd::{pgd_recover, PgdConfig};
use crate::report::{ResidualRecord, SolveReport, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Beta,
    Lambda,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(SweepParam::Beta),
            "lambda" => Ok(SweepParam::Lambda),
            other => Err(Error::InvalidConfig(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Beta => "beta",
            SweepParam::Lambda => "lambda",
        })
    }
}

/// Sweep grid: `log:lo:hi:count`, `lin:lo:hi:count` or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Log { lo: f64, hi: f64, count: usize },
    Lin { lo: f64, hi: f64, count: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        let ramp = |lo: f64, hi: f64, count: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            if count == 1 {
                return vec![f(lo)];
            }
            (0..count)
                .map(|i| f(lo + (hi - lo) * i as f64 / (count - 1) as f64))
                .collect()
        };
        let mut v = match self {
            GridSpec::Log { lo, hi, count } => ramp(lo.log10(), hi.log10(), *count, &|x| 10f64.powf(x)),
            GridSpec::Lin { lo, hi, count } => ramp(*lo, *hi, *count, &|x| x),
            GridSpec::List(v) => v.clone(),
        };
        v.sort_by(f64::total_cmp);
        v
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad grid spec {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            [kind @ ("log" | "lin"), lo, hi, count] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                let count: usize = count.trim().parse().map_err(|_| bad())?;
                if count == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
                    return Err(bad());
                }
                if *kind == "log" {
                    if lo <= 0.0 {
                        return Err(bad());
                    }
                    GridSpec::Log { lo, hi, count }
                } else {
                    GridSpec::Lin { lo, hi, count }
                }
            }
            ["list", list] | [list] => {
                let v = list.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if v.is_empty() {
                    return Err(bad());
                }
                GridSpec::List(v)
            }
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub eps_rel_l2: Option<f64>,
    pub iterations: usize,
    pub wall_time: f64,
    pub converged: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<SolveReport>,
}

/// One ADMM recovery per grid value on a shared measurement set. Failed
/// points become rows with `error` set.
pub fn sweep(
    ms: &MeasurementSet,
    truth: &TransitionMatrix,
    base: &AdmmConfig,
    param: SweepParam,
    values: &[f64],
) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| {
            let mut cfg = *base;
            match param {
                SweepParam::Beta => cfg.beta = value,
                SweepParam::Lambda => cfg.lambda = value,
            }
            match crate::admm::recover(ms, &cfg) {
                Ok(rep) => SweepRow {
                    value,
                    eps_rel_l2: Some(rep.s_hat.eps_rel_l2(truth)),
                    iterations: rep.iterations,
                    wall_time: rep.wall_time,
                    converged: rep.converged,
                    error: None,
                    report: Some(rep),
                },
                Err(e) => SweepRow {
                    value,
                    eps_rel_l2: None,
                    iterations: 0,
                    wall_time: 0.0,
                    converged: false,
                    error: Some(e.to_string()),
                    report: None,
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    rows
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{param},eps_rel_l2,iterations,wall_time,converged,error\n");
    for r in rows {
        let err = r.eps_rel_l2.map(|e| format!("{e:.6e}")).unwrap_or_default();
        let msg = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{err},{},{:.3},{},{msg}\n",
            r.value, r.iterations, r.wall_time, r.converged
        ));
    }
    out
}

/// `‖Re(X)/N² − S‖ / ‖S‖` for a Fourier-domain iterate.
pub fn fourier_error(x: &ComplexGrid, truth: &TransitionMatrix) -> f64 {
    let n2 = (x.rows() * x.cols()) as f64;
    let mut d = 0.0;
    for (z, s) in x.data().iter().zip(truth.data()) {
        let e = z.re / n2 - s;
        d += e * e;
    }
    d.sqrt() / truth.norm()
}

/// Residuals below this fraction of `‖U‖` count as a settled ADMM run.
pub const STALL_REL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub wall_time: f64,
    pub eps_rel_l2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// ADMM reached the PGD error of the same trial (always true for PGD).
    pub matched: bool,
    #[serde(skip)]
    pub report: SolveReport,
}

/// PGD, then ADMM run to PGD's error, on one sampled index set.
pub fn bench_trial(
    full: &ComplexGrid,
    truth: &TransitionMatrix,
    m: usize,
    trial: usize,
    seed: u64,
    admm_cfg: &AdmmConfig,
    pgd_cfg: &PgdConfig,
) -> Result<[TrialOutcome; 2]> {
    let n = full.rows();
    let ms = MeasurementSet::from_full(full, sample_indices(n, m, seed)?)?.with_seed(seed);

    let p = pgd_recover(&ms, pgd_cfg)?;
    let target = p.s_hat.eps_rel_l2(truth);

    let solver = AdmmSolver::new(&ms, *admm_cfg)?;
    let (_, a) = solver.run_until(|st: &AdmmState, rec: &ResidualRecord| {
        // give up once ADMM has settled on its own optimum
        let scale = st.u.norm() * STALL_REL;
        fourier_error(&st.u, truth) <= target || (rec.r_norm <= scale && rec.s_norm <= scale)
    })?;
    let a_err = a.s_hat.eps_rel_l2(truth);

    let outcome = |rep: SolveReport, err: f64, matched: bool| TrialOutcome {
        n,
        m,
        trial,
        seed,
        solver: rep.solver,
        wall_time: rep.wall_time,
        eps_rel_l2: err,
        iterations: rep.iterations,
        converged: rep.converged,
        matched,
        report: rep,
    };
    let matched = a.converged && a_err <= target;
    Ok([outcome(p, target, true), outcome(a, a_err, matched)])
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub solver: SolverKind,
    pub trials: usize,
    pub median_wall_time: f64,
    pub median_eps_rel_l2: f64,
    pub median_iterations: f64,
    /// Median wall time per iteration.
    pub median_time_per_iter: f64,
    pub all_converged: bool,
    pub all_matched: bool,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Per-(N, solver) medians, ordered by N then solver.
pub fn summarize(trials: &[TrialOutcome]) -> Vec<BenchRow> {
    let mut keys: Vec<(usize, SolverKind)> = trials.iter().map(|t| (t.n, t.solver)).collect();
    keys.sort_by_key(|k| (k.0, k.1 == SolverKind::Admm));
    keys.dedup();
    keys.into_iter()
        .map(|(n, solver)| {
            let ts: Vec<&TrialOutcome> = trials.iter().filter(|t| t.n == n && t.solver == solver).collect();
            let col = |f: &dyn Fn(&TrialOutcome) -> f64| median(&ts.iter().map(|t| f(t)).collect::<Vec<_>>());
            BenchRow {
                n,
                m: ts[0].m,
                solver,
                trials: ts.len(),
                median_wall_time: col(&|t| t.wall_time),
                median_eps_rel_l2: col(&|t| t.eps_rel_l2),
                median_iterations: col(&|t| t.iterations as f64),
                median_time_per_iter: col(&|t| t.wall_time / t.iterations.max(1) as f64),
                all_converged: ts.iter().all(|t| t.converged),
                all_matched: ts.iter().all(|t| t.matched),
            }
        })
        .collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "n,m,solver,trials,median_wall_time,median_eps_rel_l2,median_iterations,median_time_per_iter,all_converged,all_matched\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{:.6e},{},{:.6e},{},{}\n",
            r.n,
            r.m,
            r.solver,
            r.trials,
            r.median_wall_time,
            r.median_eps_rel_l2,
            r.median_iterations,
            r.median_time_per_iter,
            r.all_converged,
            r.all_matched
        ));
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        let v = "log:1e-3:1e2:6".parse::<GridSpec>().unwrap().values();
        assert_eq!(v.len(), 6);
        assert!((v[0] - 1e-3).abs() < 1e-15 && (v[5] - 100.0).abs() < 1e-9);
        assert!((v[1] - 1e-2).abs() < 1e-14);
        assert_eq!("lin:1:3:3".parse::<GridSpec>().unwrap().values(), vec![1.0, 2.0, 3.0]);
        assert_eq!("0.5".parse::<GridSpec>().unwrap().values(), vec![0.5]);
        assert_eq!("list:3,1,2".parse::<GridSpec>().unwrap().values(), vec![1.0, 2.0, 3.0]);
        assert_eq!("log:2:2:1".parse::<GridSpec>().unwrap().values(), vec![2.0]);
        for bad in ["log:0:1:3", "lin:1:0:3", "lin:0:1:0", "log:a:1:2", "foo:1:2", ""] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn medians_and_fits() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = [64.0, 128.0, 256.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(2.2)).collect();
        assert!((fit_exponent(&x, &y) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn sweep_param_parsing() {
        assert_eq!("beta".parse::<SweepParam>().unwrap(), SweepParam::Beta);
        assert!("gamma".parse::<SweepParam>().is_err());
    }
}
