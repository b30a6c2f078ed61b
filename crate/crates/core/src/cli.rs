//! Command-line front end. `main` only parses arguments and maps errors to
//! exit codes; everything else lives here so it can be tested in-process.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::admm::{self, AdmmConfig};
use crate::error::{Error, Result};
use crate::experiment::{self, GridSpec, SweepParam};
use crate::grid::{self, TransitionMatrix};
use crate::io;
use crate::models::ModelSpec;
use crate::ode::OdeConfig;
use crate::oracle;
use crate::pgd::{pgd_recover, PgdConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "branchprob", version, about = "Transition probabilities of two-type branching processes")]
pub struct Cli {
    /// Worker threads for PGF evaluation and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for all output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Matrix file format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Bin)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Bin,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Admm,
    Pgd,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the full PGF grid and invert it.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        /// Output file stem.
        #[arg(long, default_value = "S")]
        out: String,
    },
    /// Recover the matrix from M×M sampled PGF values.
    Recover {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_enum, default_value_t = SolverArg::Admm)]
        solver: SolverArg,
        #[command(flatten)]
        overrides: SolverFlags,
        /// Reference matrix for the error metric.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "S_hat")]
        out: String,
    },
    /// ADMM error across a grid of β or λ values on one index set.
    Sweep {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        param: SweepParam,
        /// `log:lo:hi:count`, `lin:lo:hi:count` or a comma list.
        #[arg(long)]
        grid: GridSpec,
        #[command(flatten)]
        overrides: SolverFlags,
    },
    /// Median runtimes and errors of PGD and ADMM over random index sets.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Seed of the first trial; trial `i` uses `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        overrides: SolverFlags,
    },
    /// Uniformization on a truncated state space.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n_trunc: usize,
        #[arg(long, default_value_t = oracle::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = "oracle")]
        out: String,
    },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Sampled indices per axis (default: the reference count for N).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Flags overriding the config file, which overrides built-in defaults.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
pub struct SolverFlags {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eps_abs: Option<f64>,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long)]
    pub d1_exp: Option<f64>,
    #[arg(long)]
    pub d2_exp: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// PGD initial inverse step size.
    #[arg(long)]
    pub l0: Option<f64>,
    /// PGD backtracking factor.
    #[arg(long)]
    pub c: Option<f64>,
    /// PGD relative-change tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdmmBlock {
    beta: Option<f64>,
    lambda: Option<f64>,
    eps_abs: Option<f64>,
    eps_rel: Option<f64>,
    d1_exp: Option<f64>,
    d2_exp: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PgdBlock {
    lambda: Option<f64>,
    l0: Option<f64>,
    c: Option<f64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
}

/// A config file: the model schema plus optional `admm`, `pgd` and `ode`
/// blocks.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    admm: AdmmBlock,
    pgd: PgdBlock,
    pub ode: OdeConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text)?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::InvalidConfig("config must be a JSON object".into()))?;
        let admm = obj.remove("admm").map(serde_json::from_value).transpose()?.unwrap_or_default();
        let pgd = obj.remove("pgd").map(serde_json::from_value).transpose()?.unwrap_or_default();
        let ode: OdeConfig = obj.remove("ode").map(serde_json::from_value).transpose()?.unwrap_or_default();
        ode.validate()?;
        let model: ModelSpec = serde_json::from_value(v)?;
        Ok(Self { model, admm, pgd, ode })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Reference ADMM settings for `(N, M)`, then config, then flags.
    pub fn admm_config(&self, n: usize, m: usize, flags: &SolverFlags) -> Result<AdmmConfig> {
        let mut c = AdmmConfig::reference(self.model.model.kind(), n, m);
        let b = &self.admm;
        c.beta = flags.beta.or(b.beta).unwrap_or(c.beta);
        c.lambda = flags.lambda.or(b.lambda).unwrap_or(c.lambda);
        c.eps_abs = flags.eps_abs.or(b.eps_abs).unwrap_or(c.eps_abs);
        c.eps_rel = flags.eps_rel.or(b.eps_rel).unwrap_or(c.eps_rel);
        c.d1_exp = flags.d1_exp.or(b.d1_exp).unwrap_or(c.d1_exp);
        c.d2_exp = flags.d2_exp.or(b.d2_exp).unwrap_or(c.d2_exp);
        c.max_iter = flags.max_iter.or(b.max_iter).unwrap_or(c.max_iter);
        c.validate()?;
        Ok(c)
    }

    pub fn pgd_config(&self, m: usize, flags: &SolverFlags) -> Result<PgdConfig> {
        let mut c = PgdConfig::reference(self.model.model.kind(), m);
        let b = &self.pgd;
        c.lambda = flags.lambda.or(b.lambda).unwrap_or(c.lambda);
        c.l0 = flags.l0.or(b.l0).unwrap_or(c.l0);
        c.c = flags.c.or(b.c).unwrap_or(c.c);
        c.max_iter = flags.max_iter.or(b.max_iter).unwrap_or(c.max_iter);
        c.tol = flags.tol.or(b.tol).unwrap_or(c.tol);
        c.validate()?;
        Ok(c)
    }
}

/// Everything needed to rerun a command, plus what it produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub model: ModelSpec,
    pub ode: OdeConfig,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub indices: Option<Vec<usize>>,
    pub admm: Option<AdmmConfig>,
    pub pgd: Option<PgdConfig>,
    pub pgf_evaluations: usize,
    pub outputs: Vec<String>,
    pub metrics: Option<ErrorMetric>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub extra: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetric {
    pub eps_rel_l2: f64,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            started_unix: unix_now(),
            finished_unix: 0.0,
            model: cfg.model,
            ode: cfg.ode,
            n: None,
            m: None,
            seed: None,
            indices: None,
            admm: None,
            pgd: None,
            pgf_evaluations: 0,
            outputs: Vec::new(),
            metrics: None,
            extra: Value::Null,
        }
    }
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
    manifest: RunManifest,
}

impl Output<'_> {
    fn matrix(&mut self, stem: &str, s: &TransitionMatrix) -> Result<()> {
        let name = match self.format {
            Format::Bin => {
                let name = format!("{stem}.bin");
                io::write_matrix(&self.dir.join(&name), s)?;
                name
            }
            Format::Csv => {
                let name = format!("{stem}.csv");
                let mut buf = Vec::new();
                io::write_matrix_csv(&mut buf, s)?;
                fs::write(self.dir.join(&name), buf)?;
                name
            }
        };
        self.manifest.outputs.push(name);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_unix = unix_now();
        self.manifest.outputs.push("manifest.json".into());
        fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&self.manifest)?,
        )?;
        Ok(self.manifest)
    }
}

fn read_truth(path: &Path) -> Result<TransitionMatrix> {
    if path.extension().is_some_and(|e| e == "csv") {
        io::read_matrix_csv(&fs::read_to_string(path)?)
    } else {
        io::read_matrix(path)
    }
}

fn resolve_m(cfg: &RunConfig, n: usize, m: Option<usize>) -> usize {
    m.unwrap_or_else(|| grid::reference_m(cfg.model.model.kind(), n).min(n))
}

/// Runs a parsed command and returns its manifest.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    if let Some(t) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Solve { config, n, out } => {
            let cfg = RunConfig::load(config)?;
            let mut o = Output {
                dir: &cli.out_dir,
                format: cli.format,
                manifest: RunManifest::new("solve", &cfg),
            };
            let full = grid::full_measurements(&cfg.model, *n, &cfg.ode)?;
            let s = grid::invert_full(&full)?;
            o.manifest.n = Some(*n);
            o.manifest.pgf_evaluations = n * n;
            o.matrix(out, &s)?;
            o.finish()
        }
        Command::Recover {
            sample,
            solver,
            overrides,
            truth,
            out,
        } => {
            let cfg = RunConfig::load(&sample.config)?;
            let n = sample.n;
            let m = resolve_m(&cfg, n, sample.m);
            let mut o = Output {
                dir: &cli.out_dir,
                format: cli.format,
                manifest: RunManifest::new("recover", &cfg),
            };
            let idx = grid::sample_indices(n, m, sample.seed)?;
            let ms = grid::sampled_measurements(&cfg.model, n, &idx, &cfg.ode)?.with_seed(sample.seed);
            o.manifest.n = Some(n);
            o.manifest.m = Some(m);
            o.manifest.seed = Some(sample.seed);
            o.manifest.indices = Some(idx);
            o.manifest.pgf_evaluations = ms.pgf_evaluations();
            let report = match solver {
                SolverArg::Admm => {
                    let c = cfg.admm_config(n, m, overrides)?;
                    o.manifest.admm = Some(c);
                    admm::recover(&ms, &c)?
                }
                SolverArg::Pgd => {
                    let c = cfg.pgd_config(m, overrides)?;
                    o.manifest.pgd = Some(c);
                    pgd_recover(&ms, &c)?
                }
            };
            if let Some(path) = truth {
                let t = read_truth(path)?;
                if t.n() != n {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{n}x{n}"),
                        got: format!("{0}x{0}", t.n()),
                    });
                }
                o.manifest.metrics = Some(ErrorMetric {
                    eps_rel_l2: report.s_hat.eps_rel_l2(&t),
                });
            }
            o.matrix(out, &report.s_hat)?;
            o.text("report.json", &report.to_json()?)?;
            o.finish()
        }
        Command::Sweep {
            sample,
            param,
            grid: spec,
            overrides,
        } => {
            let cfg = RunConfig::load(&sample.config)?;
            let n = sample.n;
            let m = resolve_m(&cfg, n, sample.m);
            let mut o = Output {
                dir: &cli.out_dir,
                format: cli.format,
                manifest: RunManifest::new("sweep", &cfg),
            };
            let full = grid::full_measurements(&cfg.model, n, &cfg.ode)?;
            let truth = grid::invert_full(&full)?;
            let idx = grid::sample_indices(n, m, sample.seed)?;
            let ms = grid::MeasurementSet::from_full(&full, idx.clone())?.with_seed(sample.seed);
            let base = cfg.admm_config(n, m, overrides)?;
            let rows = experiment::sweep(&ms, &truth, &base, *param, &spec.values());
            o.manifest.n = Some(n);
            o.manifest.m = Some(m);
            o.manifest.seed = Some(sample.seed);
            o.manifest.indices = Some(idx);
            o.manifest.admm = Some(base);
            o.manifest.pgf_evaluations = n * n;
            o.manifest.extra = serde_json::json!({ "param": param, "grid": spec.values() });
            o.text("sweep.csv", &experiment::sweep_csv(*param, &rows))?;
            o.finish()
        }
        Command::Bench {
            config,
            n_list,
            trials,
            seed,
            overrides,
        } => {
            let cfg = RunConfig::load(config)?;
            if *trials == 0 {
                return Err(Error::InvalidConfig("--trials must be at least 1".into()));
            }
            let mut o = Output {
                dir: &cli.out_dir,
                format: cli.format,
                manifest: RunManifest::new("bench", &cfg),
            };
            let mut outcomes = Vec::new();
            let mut evals = 0;
            for &n in n_list {
                let m = grid::reference_m(cfg.model.model.kind(), n).min(n);
                let full = grid::full_measurements(&cfg.model, n, &cfg.ode)?;
                evals += n * n;
                let truth = grid::invert_full(&full)?;
                let ac = cfg.admm_config(n, m, overrides)?;
                let pc = cfg.pgd_config(m, overrides)?;
                for trial in 0..*trials {
                    let s = seed + trial as u64;
                    outcomes.extend(experiment::bench_trial(&full, &truth, m, trial, s, &ac, &pc)?);
                }
            }
            let rows = experiment::summarize(&outcomes);
            o.manifest.seed = Some(*seed);
            o.manifest.pgf_evaluations = evals;
            o.manifest.extra = serde_json::json!({ "n_list": n_list, "trials": outcomes });
            o.text("bench.csv", &experiment::bench_csv(&rows))?;
            o.finish()
        }
        Command::Oracle {
            config,
            n_trunc,
            tol,
            out,
        } => {
            let cfg = RunConfig::load(config)?;
            let mut o = Output {
                dir: &cli.out_dir,
                format: cli.format,
                manifest: RunManifest::new("oracle", &cfg),
            };
            let r = oracle::oracle_for(&cfg.model, *n_trunc, *tol)?;
            o.manifest.n = Some(*n_trunc);
            o.manifest.extra = serde_json::json!({ "truncation_mass": r.truncation_mass, "tol": tol });
            o.matrix(out, &r.probs)?;
            o.finish()
        }
    }
}

/// Parses `args`, runs, prints errors to stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(m) => {
            for f in &m.outputs {
                println!("{}", cli.out_dir.join(f).display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}
