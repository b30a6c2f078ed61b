//! Shared test helpers: a dense ADMM oracle built from explicit Kronecker
//! products, and small random problem generators.
#![allow(dead_code)]

use std::f64::consts::PI;

use branchprob::grid::{sample_indices, ComplexGrid, MeasurementSet};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense ADMM on column-stacked vectors. `f` is `(PΨ)⊗(PΨ)` with
/// `Ψ[u, l] = e^{+2πiul/N}/√N`, and every U-update solves
/// `(FᴴF + βI)u = Fᴴ(N·b) + βz − y` directly.
pub struct DenseAdmm {
    pub n: usize,
    pub beta: f64,
    pub lambda: f64,
    f: DMatrix<Complex64>,
    b: DVector<Complex64>,
    pub u: DVector<Complex64>,
    pub z: DVector<Complex64>,
    pub y: DVector<Complex64>,
}

fn vec_col(g: &ComplexGrid) -> DVector<Complex64> {
    // column-stacked: entry (r, c) lands at c·rows + r
    let (rows, cols) = (g.rows(), g.cols());
    DVector::from_fn(rows * cols, |k, _| g.get(k % rows, k / rows))
}

/// Reads a column-stacked vector back as an `n×n` grid.
pub fn unvec(n: usize, v: &DVector<Complex64>) -> ComplexGrid {
    ComplexGrid::from_fn(n, n, |r, c| v[c * n + r])
}

pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

impl DenseAdmm {
    pub fn new(ms: &MeasurementSet, beta: f64, lambda: f64) -> Self {
        let n = ms.n();
        let idx = ms.indices();
        let scale = 1.0 / (n as f64).sqrt();
        let ppsi = DMatrix::from_fn(idx.len(), n, |i, l| {
            Complex64::from_polar(scale, 2.0 * PI * (idx[i] * l) as f64 / n as f64)
        });
        let zeros = DVector::zeros(n * n);
        Self {
            n,
            beta,
            lambda,
            f: kron(&ppsi, &ppsi),
            b: vec_col(ms.b()),
            u: zeros.clone(),
            z: zeros.clone(),
            y: zeros,
        }
    }

    pub fn u_update(&self, z: &DVector<Complex64>, y: &DVector<Complex64>) -> DVector<Complex64> {
        let fh = self.f.adjoint();
        let nn = self.n * self.n;
        let a = &fh * &self.f + DMatrix::<Complex64>::identity(nn, nn) * Complex64::from(self.beta);
        let rhs = &fh * (&self.b * Complex64::from(self.n as f64)) + z * Complex64::from(self.beta) - y;
        a.lu().solve(&rhs).expect("system is positive definite")
    }

    pub fn step(&mut self) {
        self.u = self.u_update(&self.z, &self.y);
        let tau = self.lambda / self.beta;
        for k in 0..self.u.len() {
            let v = self.u[k] + self.y[k] / self.beta;
            let mag = v.norm();
            let z = if mag > tau { v * ((mag - tau) / mag) } else { Complex64::new(0.0, 0.0) };
            self.y[k] += (self.u[k] - z) * self.beta;
            self.z[k] = z;
        }
    }

    pub fn grids(&self) -> (ComplexGrid, ComplexGrid, ComplexGrid) {
        (unvec(self.n, &self.u), unvec(self.n, &self.z), unvec(self.n, &self.y))
    }
}

pub fn random_grid(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexGrid {
    ComplexGrid::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random complex measurements on a seeded index set.
pub fn random_problem(n: usize, m: usize, seed: u64) -> MeasurementSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample_indices(n, m, seed).unwrap();
    MeasurementSet::new(n, idx, random_grid(m, m, &mut rng)).unwrap()
}

pub fn max_diff(a: &ComplexGrid, b: &ComplexGrid) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
