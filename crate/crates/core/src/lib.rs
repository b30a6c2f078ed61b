//! Transition probabilities of two-type continuous-time branching processes.
//!
//! The probability generating function of the process is evaluated on an
//! `N×N` grid of unit-circle points and turned into the `N×N` matrix of
//! transition probabilities by a 2D DFT. When only an `M×M` subgrid is
//! evaluated, the matrix is recovered by ℓ₁-regularized least squares,
//! either with the FFT-diagonalized ADMM solver in [`admm`] or with the
//! proximal gradient baseline in [`pgd`]. [`oracle`] provides small-scale
//! ground truth by uniformization of the truncated generator.
//!
//! ```no_run
//! use branchprob::{admm, grid, models::reference, ode::OdeConfig};
//!
//! let model = reference::hsc((1, 0));
//! let n = 64;
//! let m = grid::default_m(n, grid::HSC_SPARSITY_K);
//! let idx = grid::sample_indices(n, m, 0)?;
//! let ms = grid::sampled_measurements(&model, n, &idx, &OdeConfig::default())?;
//! let cfg = admm::AdmmConfig::reference(model.model.kind(), n, m);
//! let report = admm::recover(&ms, &cfg)?;
//! println!("{} iterations", report.iterations);
//! # Ok::<(), branchprob::Error>(())
//! ```

pub mod admm;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod grid;
pub mod io;
pub mod models;
pub mod ode;
pub mod operator;
pub mod oracle;
pub mod pgd;
pub mod report;

pub use admm::{recover, AdmmConfig};
pub use error::{Error, Result};
pub use grid::{ComplexGrid, MeasurementSet, TransitionMatrix};
pub use models::{Model, ModelKind, ModelSpec, RatesBds, RatesHsc};
pub use ode::OdeConfig;
pub use pgd::{pgd_recover, PgdConfig};
pub use report::SolveReport;
