//! Square 2D FFTs on row-major complex buffers.
//!
//! Conventions used across the crate:
//!
//! * `forward`: `X[l,m] = Σ_{u,v} x[u,v] e^{-2πi(lu+mv)/N}`, unnormalized.
//! * `inverse`: `x[u,v] = N^{-2} Σ_{l,m} X[l,m] e^{+2πi(lu+mv)/N}`.
//!
//! so `inverse(forward(x)) == x`. A full PGF grid `B̃` satisfies
//! `B̃ = N² · inverse(S)` and `S = forward(B̃) / N²`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Mutex<Vec<Complex64>>,
    calls: AtomicUsize,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("n", &self.n)
            .field("calls", &self.calls())
            .finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch: Mutex::new(vec![Complex64::default(); len]),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of 2D transforms performed so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &*self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &*self.inv);
        let scale = 1.0 / (self.n * self.n) as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &dyn Fft<f64>) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer is not {n}x{n}");
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut guard = self.scratch.lock().unwrap_or_else(|e| e.into_inner());
        let scratch = &mut guard[..plan.get_inplace_scratch_len()];
        // rows are contiguous; rustfft processes the buffer in chunks of n
        plan.process_with_scratch(data, scratch);
        transpose_in_place(data, n);
        plan.process_with_scratch(data, scratch);
        transpose_in_place(data, n);
    }
}

const TILE: usize = 16;

/// Square in-place transpose, tiled for cache reuse.
fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + TILE).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
