//! PGF measurement grids and exact transition probabilities by 2D Fourier
//! inversion.
//!
//! Grid cell `(u, v)` always holds `φ(e^{2πiu/N}, e^{2πiv/N})`; matrix cell
//! `(l, m)` holds the probability of ending with `l` type-1 and `m` type-2
//! particles. Both are stored row-major.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::models::{pgf, ModelKind, ModelSpec, UnitCirclePoint};
use crate::ode::OdeConfig;

/// Slack allowed below zero for entries produced by Fourier inversion.
pub const NEGATIVE_SLACK: f64 = 1e-6;

/// Sparsity level that reproduces the HSC measurement counts
/// (N = 64..1024 → M = 51, 78, 83, 88, 93) under [`default_m`].
pub const HSC_SPARSITY_K: usize = 126;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::default(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols}"),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
    }

    pub fn same_shape(&self, other: &ComplexGrid) -> Result<()> {
        if self.rows == other.rows && self.cols == other.cols {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                got: format!("{}x{}", other.rows, other.cols),
            })
        }
    }

    /// Frobenius distance to another grid of the same shape.
    pub fn distance(&self, other: &ComplexGrid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Rows and columns `indices` of this grid.
    pub fn submatrix(&self, indices: &[usize]) -> ComplexGrid {
        ComplexGrid::from_fn(indices.len(), indices.len(), |a, b| {
            self.get(indices[a], indices[b])
        })
    }
}

/// Real `N×N` matrix of transition probabilities; cell `(l, m)` is the
/// probability of ending in state `(l, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.data[l * self.n + m]
    }

    pub fn set(&mut self, l: usize, m: usize, p: f64) {
        self.data[l * self.n + m] = p;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Relative Frobenius error `‖self − truth‖ / ‖truth‖`.
    pub fn eps_rel_l2(&self, truth: &TransitionMatrix) -> f64 {
        assert_eq!(self.n, truth.n, "matrices differ in size");
        let diff = self
            .data
            .iter()
            .zip(&truth.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / truth.norm()
    }

    /// Zeroes entries in `(-NEGATIVE_SLACK, 0)`. Presentation only; error
    /// metrics should use the unclamped matrix.
    pub fn clamped(&self) -> TransitionMatrix {
        let data = self
            .data
            .iter()
            .map(|&p| if p < 0.0 && p > -NEGATIVE_SLACK { 0.0 } else { p })
            .collect();
        TransitionMatrix { n: self.n, data }
    }

    /// Upper-left `k×k` block.
    pub fn truncate(&self, k: usize) -> TransitionMatrix {
        let k = k.min(self.n);
        let mut out = TransitionMatrix::zeros(k);
        for l in 0..k {
            for m in 0..k {
                out.set(l, m, self.get(l, m));
            }
        }
        out
    }
}

/// Uniformly sampled PGF measurements `B = B̃[𝒥, 𝒥]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    n: usize,
    indices: Vec<usize>,
    b: ComplexGrid,
    seed: Option<u64>,
    pgf_evaluations: usize,
}

impl MeasurementSet {
    pub fn new(n: usize, indices: Vec<usize>, b: ComplexGrid) -> Result<Self> {
        check_indices(n, &indices)?;
        if indices.is_empty() {
            return Err(Error::BadIndices("empty index set".into()));
        }
        if b.rows() != indices.len() || b.cols() != indices.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", indices.len()),
                got: format!("{}x{}", b.rows(), b.cols()),
            });
        }
        Ok(Self {
            n,
            indices,
            b,
            seed: None,
            pgf_evaluations: 0,
        })
    }

    /// Takes `B̃[𝒥, 𝒥]` from an already evaluated full grid.
    pub fn from_full(full: &ComplexGrid, indices: Vec<usize>) -> Result<Self> {
        if !full.is_square() {
            return Err(Error::NonSquareGrid {
                rows: full.rows(),
                cols: full.cols(),
            });
        }
        check_indices(full.rows(), &indices)?;
        let b = full.submatrix(&indices);
        Self::new(full.rows(), indices, b)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn b(&self) -> &ComplexGrid {
        &self.b
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// PGF evaluations performed to build this set (0 when taken from a
    /// precomputed grid).
    pub fn pgf_evaluations(&self) -> usize {
        self.pgf_evaluations
    }

    /// `N×N` zero grid with `B` written at rows/cols `𝒥`.
    pub fn embedded(&self) -> ComplexGrid {
        let mut out = ComplexGrid::zeros(self.n, self.n);
        for (a, &u) in self.indices.iter().enumerate() {
            for (b, &v) in self.indices.iter().enumerate() {
                out.set(u, v, self.b.get(a, b));
            }
        }
        out
    }
}

fn check_grid_size(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::BadGridSize(n))
    }
}

pub(crate) fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::BadIndices(format!("index {bad} out of range for N = {n}")));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadIndices("indices must be strictly increasing".into()));
    }
    Ok(())
}

fn eval_points(
    model: &ModelSpec,
    n: usize,
    points: &[(usize, usize)],
    ode_cfg: &OdeConfig,
    counter: &AtomicUsize,
) -> Result<Vec<Complex64>> {
    points
        .par_iter()
        .map(|&(u, v)| {
            counter.fetch_add(1, Ordering::Relaxed);
            pgf(model, UnitCirclePoint::grid(u, v, n), ode_cfg).map_err(|e| Error::GridPoint {
                u,
                v,
                source: Box::new(e),
            })
        })
        .collect()
}

/// The full `N×N` grid `B̃[u,v] = φ(e^{2πiu/N}, e^{2πiv/N})`.
pub fn full_measurements(model: &ModelSpec, n: usize, ode_cfg: &OdeConfig) -> Result<ComplexGrid> {
    check_grid_size(n)?;
    model.validate()?;
    ode_cfg.validate()?;
    let points: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect();
    let counter = AtomicUsize::new(0);
    let data = eval_points(model, n, &points, ode_cfg, &counter)?;
    ComplexGrid::from_vec(n, n, data)
}

/// PGF values at `𝒥 × 𝒥` only; exactly `M²` evaluations.
pub fn sampled_measurements(
    model: &ModelSpec,
    n: usize,
    indices: &[usize],
    ode_cfg: &OdeConfig,
) -> Result<MeasurementSet> {
    check_grid_size(n)?;
    check_indices(n, indices)?;
    model.validate()?;
    ode_cfg.validate()?;
    let points: Vec<(usize, usize)> = indices
        .iter()
        .flat_map(|&u| indices.iter().map(move |&v| (u, v)))
        .collect();
    let counter = AtomicUsize::new(0);
    let data = eval_points(model, n, &points, ode_cfg, &counter)?;
    let m = indices.len();
    let b = ComplexGrid::from_vec(m, m, data)?;
    let mut ms = MeasurementSet::new(n, indices.to_vec(), b)?;
    ms.pgf_evaluations = counter.into_inner();
    Ok(ms)
}

/// `forward(B̃) / N²` without discarding the imaginary part.
pub fn fourier_inverse(b_full: &ComplexGrid) -> Result<ComplexGrid> {
    if !b_full.is_square() {
        return Err(Error::NonSquareGrid {
            rows: b_full.rows(),
            cols: b_full.cols(),
        });
    }
    let n = b_full.rows();
    let fft = Fft2::new(n);
    let mut out = b_full.clone();
    fft.forward(out.data_mut());
    let scale = 1.0 / (n * n) as f64;
    for z in out.data_mut() {
        *z *= scale;
    }
    Ok(out)
}

/// Transition probabilities from a full PGF grid by 2D Fourier inversion.
pub fn invert_full(b_full: &ComplexGrid) -> Result<TransitionMatrix> {
    let s = fourier_inverse(b_full)?;
    let n = s.rows();
    TransitionMatrix::from_vec(n, s.into_vec().into_iter().map(|z| z.re).collect())
}

/// `m` distinct indices drawn uniformly from `[0, n)`, sorted ascending.
pub fn sample_indices(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m > n {
        return Err(Error::MTooLarge { n, m });
    }
    if m == 0 {
        return Err(Error::BadIndices("must sample at least one index".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Default measurement count
/// `M = min(⌊√(10·K·ln N)⌋, ⌊N − N/5⌋)`, clamped to `[1, N]`.
pub fn default_m(n: usize, k_sparsity: usize) -> usize {
    let nf = n as f64;
    let cs = (10.0 * k_sparsity as f64 * nf.ln()).sqrt().floor() as usize;
    let cap = (nf - nf / 5.0).floor() as usize;
    cs.min(cap).clamp(1, n.max(1))
}

/// Measurement counts used for the reference experiments, falling back to
/// [`default_m`] with [`HSC_SPARSITY_K`] for other sizes.
pub fn reference_m(kind: ModelKind, n: usize) -> usize {
    const HSC: [(usize, usize); 5] = [(64, 51), (128, 78), (256, 83), (512, 88), (1024, 93)];
    const BDS: [(usize, usize); 5] = [(64, 18), (128, 19), (256, 29), (512, 22), (1024, 28)];
    let table = match kind {
        ModelKind::Hsc => &HSC,
        ModelKind::Bds => &BDS,
    };
    table
        .iter()
        .find(|r| r.0 == n)
        .map(|r| r.1)
        .unwrap_or_else(|| default_m(n, HSC_SPARSITY_K))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::reference::{bds, hsc};
    use crate::models::root_of_unity;

    #[test]
    fn all_ones_grid_is_point_mass_at_origin() {
        let n = 8;
        let g = ComplexGrid::from_fn(n, n, |_, _| Complex64::new(1.0, 0.0));
        let s = invert_full(&g).unwrap();
        for l in 0..n {
            for m in 0..n {
                let expected = if (l, m) == (0, 0) { 1.0 } else { 0.0 };
                assert!((s.get(l, m) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_mode_is_point_mass() {
        let n = 16;
        let (l0, m0) = (3, 11);
        let g = ComplexGrid::from_fn(n, n, |u, v| root_of_unity(u * l0, n) * root_of_unity(v * m0, n));
        let s = invert_full(&g).unwrap();
        for l in 0..n {
            for m in 0..n {
                let expected = if (l, m) == (l0, m0) { 1.0 } else { 0.0 };
                assert!((s.get(l, m) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_square_rejected() {
        let g = ComplexGrid::zeros(4, 8);
        assert!(matches!(invert_full(&g), Err(Error::NonSquareGrid { .. })));
    }

    #[test]
    fn full_grid_normalization_and_symmetry() {
        let n = 16;
        for model in [hsc((1, 0)), bds((2, 1))] {
            let g = full_measurements(&model, n, &OdeConfig::default()).unwrap();
            assert!((g.get(0, 0) - 1.0).norm() < 1e-8);
            for u in 1..n {
                for v in 1..n {
                    assert!((g.get(u, v) - g.get(n - u, n - v).conj()).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn full_grid_matches_pointwise_pgf() {
        let n = 16;
        let model = hsc((1, 0));
        let cfg = OdeConfig::default();
        let g = full_measurements(&model, n, &cfg).unwrap();
        for u in 0..n {
            for v in 0..n {
                let p = pgf(&model, UnitCirclePoint::grid(u, v, n), &cfg).unwrap();
                assert_eq!(g.get(u, v), p);
            }
        }
    }

    #[test]
    fn bad_grid_size_rejected() {
        let cfg = OdeConfig::default();
        assert!(matches!(full_measurements(&hsc((1, 0)), 12, &cfg), Err(Error::BadGridSize(12))));
        assert!(full_measurements(&hsc((1, 0)), 1, &cfg).is_err());
    }

    #[test]
    fn sampling_examples() {
        assert_eq!(sample_indices(4, 4, 99).unwrap(), vec![0, 1, 2, 3]);
        let a = sample_indices(4, 2, 5).unwrap();
        assert_eq!(a, sample_indices(4, 2, 5).unwrap());
        assert!(matches!(sample_indices(4, 5, 0), Err(Error::MTooLarge { n: 4, m: 5 })));
        let s = sample_indices(64, 8, 1).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&i| i < 64));
    }

    #[test]
    fn sampling_is_uniform() {
        // Each index is included with probability p = m/n = 1/8. Over
        // `draws` samples its count is Binomial(draws, p); 5σ of that.
        let (n, m, draws) = (64usize, 8usize, 10_000usize);
        let p = m as f64 / n as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut counts = vec![0usize; n];
        for seed in 0..draws as u64 {
            for i in sample_indices(n, m, seed).unwrap() {
                counts[i] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            assert!((c as f64 - mean).abs() <= 5.0 * sigma, "index {i}: {c} vs {mean}");
        }
    }

    #[test]
    fn sampled_measurements_examples() {
        let cfg = OdeConfig::default();
        let model = hsc((1, 0));
        let one = sampled_measurements(&model, 16, &[0], &cfg).unwrap();
        assert_eq!(one.b().rows(), 1);
        assert!((one.b().get(0, 0) - 1.0).norm() < 1e-12);
        assert_eq!(one.pgf_evaluations(), 1);

        let n = 16;
        let full = full_measurements(&model, n, &cfg).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let ms = sampled_measurements(&model, n, &all, &cfg).unwrap();
        assert_eq!(ms.b(), &full);
        assert_eq!(ms.pgf_evaluations(), n * n);

        let idx = sample_indices(n, 5, 2).unwrap();
        let ms = sampled_measurements(&model, n, &idx, &cfg).unwrap();
        assert_eq!(ms.pgf_evaluations(), 25);
        assert_eq!(ms.b(), &full.submatrix(&idx));
        assert_eq!(ms, MeasurementSet::from_full(&full, idx.clone()).unwrap().with_pgf_count(25));
    }

    impl MeasurementSet {
        fn with_pgf_count(mut self, c: usize) -> Self {
            self.pgf_evaluations = c;
            self
        }
    }

    #[test]
    fn invalid_indices_rejected() {
        let b = ComplexGrid::zeros(2, 2);
        assert!(MeasurementSet::new(8, vec![3, 1], b.clone()).is_err());
        assert!(MeasurementSet::new(8, vec![1, 8], b.clone()).is_err());
        assert!(MeasurementSet::new(8, vec![1, 1], b).is_err());
        assert!(MeasurementSet::new(8, vec![1, 2, 3], ComplexGrid::zeros(2, 2)).is_err());
    }

    #[test]
    fn default_m_reproduces_hsc_table() {
        let expected = [(64, 51), (128, 78), (256, 83), (512, 88), (1024, 93)];
        for (n, m) in expected {
            assert_eq!(default_m(n, HSC_SPARSITY_K), m, "N = {n}");
        }
    }

    #[test]
    fn default_m_never_exceeds_cap() {
        for n in [2usize, 4, 8, 16, 64, 256, 4096] {
            for k in [1usize, 10, 126, 10_000] {
                let cap = (n as f64 - n as f64 / 5.0).floor() as usize;
                let m = default_m(n, k);
                assert!(m <= cap.max(1) && m >= 1 && m <= n);
            }
        }
    }

    #[test]
    fn round_trip_mass_and_realness() {
        let n = 16;
        for model in [hsc((1, 0)), hsc((2, 1)), bds((1, 0)), bds((2, 1))] {
            let g = full_measurements(&model, n, &OdeConfig::default()).unwrap();
            let c = fourier_inverse(&g).unwrap();
            assert!(c.max_abs_imag() < 1e-8);
            let s = invert_full(&g).unwrap();
            assert!((s.sum() - 1.0).abs() < 1e-6);
            assert!(s.min() >= -NEGATIVE_SLACK);
        }
    }

    #[test]
    fn clamp_only_touches_tiny_negatives() {
        let s = TransitionMatrix::from_vec(2, vec![-1e-9, 0.5, -0.1, 0.5]).unwrap();
        let c = s.clamped();
        assert_eq!(c.data(), &[0.0, 0.5, -0.1, 0.5]);
    }

    #[test]
    fn eps_rel_zero_for_identical() {
        let s = TransitionMatrix::from_vec(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(s.eps_rel_l2(&s), 0.0);
    }
}
