//! Matrix-free sampled Fourier measurement operator.
//!
//! Both solvers minimize, over the Fourier-domain variable `X = N²·S`,
//!
//! ```text
//! f(X) + λ‖X‖₁,    f(X) = (N²/2) ‖ inverse(X)[𝒥,𝒥] − B ‖²
//! ```
//!
//! which is `½‖F_P⁻¹ X (F_P⁻¹)ᵀ − N·B‖²` written with the unitary inverse
//! DFT. Its gradient is `forward(embed(inverse(X)[𝒥,𝒥] − B))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{ComplexGrid, MeasurementSet};

#[derive(Debug)]
pub struct SampledFourier {
    n: usize,
    indices: Vec<usize>,
    fft: Fft2,
}

impl SampledFourier {
    pub fn new(n: usize, indices: &[usize]) -> Self {
        Self {
            n,
            indices: indices.to_vec(),
            fft: Fft2::new(n),
        }
    }

    pub fn for_measurements(ms: &MeasurementSet) -> Self {
        Self::new(ms.n(), ms.indices())
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    fn check(&self, x: &ComplexGrid) -> Result<()> {
        if x.rows() != self.n || x.cols() != self.n {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.n),
                got: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        Ok(())
    }

    /// `inverse(X)[𝒥,𝒥] − B`. One 2D FFT.
    pub fn residual(&self, x: &ComplexGrid, b: &ComplexGrid) -> Result<ComplexGrid> {
        self.check(x)?;
        let m = self.indices.len();
        if b.rows() != m || b.cols() != m {
            return Err(Error::ShapeMismatch {
                expected: format!("{m}x{m}"),
                got: format!("{}x{}", b.rows(), b.cols()),
            });
        }
        let mut w = x.clone();
        self.fft.inverse(w.data_mut());
        let r = ComplexGrid::from_fn(m, m, |a, c| {
            w.get(self.indices[a], self.indices[c]) - b.get(a, c)
        });
        Ok(r)
    }

    /// `forward(embed(R))`. One 2D FFT.
    pub fn adjoint(&self, r: &ComplexGrid) -> ComplexGrid {
        let n = self.n;
        let mut out = ComplexGrid::zeros(n, n);
        for (a, &u) in self.indices.iter().enumerate() {
            for (c, &v) in self.indices.iter().enumerate() {
                out.set(u, v, r.get(a, c));
            }
        }
        self.fft.forward(out.data_mut());
        out
    }

    /// `f` evaluated from a residual.
    pub fn fidelity_from_residual(&self, r: &ComplexGrid) -> f64 {
        let n2 = (self.n * self.n) as f64;
        0.5 * n2 * r.data().iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn fidelity(&self, x: &ComplexGrid, b: &ComplexGrid) -> Result<f64> {
        Ok(self.fidelity_from_residual(&self.residual(x, b)?))
    }

    pub fn gradient(&self, x: &ComplexGrid, b: &ComplexGrid) -> Result<ComplexGrid> {
        Ok(self.adjoint(&self.residual(x, b)?))
    }
}

pub fn l1_norm(x: &ComplexGrid) -> f64 {
    x.data().iter().map(|z| z.norm_sqr().sqrt()).sum()
}

/// Real inner product `Re Σ conj(a)·b`.
pub fn real_inner(a: &ComplexGrid, b: &ComplexGrid) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

/// Complex soft-thresholding: shrinks the modulus by `tau`, keeps the phase.
pub fn soft_threshold(v: Complex64, tau: f64) -> Complex64 {
    let r = v.norm_sqr().sqrt();
    if r <= tau {
        Complex64::default()
    } else {
        v * (1.0 - tau / r)
    }
}

/// `f(U) + λ‖Z‖₁`.
pub fn objective(
    op: &SampledFourier,
    ms: &MeasurementSet,
    u: &ComplexGrid,
    z: &ComplexGrid,
    lambda: f64,
) -> Result<f64> {
    Ok(op.fidelity(u, ms.b())? + lambda * l1_norm(z))
}
