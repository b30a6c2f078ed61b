//! Probability generating functions of the two-type branching models.
//!
//! Two models are supported:
//!
//! * **HSC**: a stem cell self-renews at rate `rho` and differentiates into
//!   a progenitor at rate `nu`; progenitors die at rate `mu`.
//! * **BDS**: birth-death-shift of transposons. Type 1 counts initially
//!   occupied locations, type 2 newly occupied ones. Both types give birth
//!   (to type 2) at `gamma` and die at `delta`; type 1 shifts to type 2 at
//!   `sigma`.
//!
//! For a single ancestor of type `i` the generating function solves the
//! backward equation `dφ_i/dt = u_i(φ_1, φ_2)` where `u_i` is the
//! pseudo-generating function of the per-particle rates. Ancestors act
//! independently, so `φ_{jk} = φ_1^j φ_2^k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeConfig};

const DEGENERACY_EPS: f64 = 1e-12;
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesHsc {
    pub rho: f64,
    pub nu: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesBds {
    pub gamma: f64,
    pub sigma: f64,
    pub delta: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRates(format!("{name} = {v} must be positive and finite")))
    }
}

impl RatesHsc {
    pub fn new(rho: f64, nu: f64, mu: f64) -> Result<Self> {
        let r = Self { rho, nu, mu };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("rho", self.rho)?;
        check_positive("nu", self.nu)?;
        check_positive("mu", self.mu)
    }
}

impl RatesBds {
    pub fn new(gamma: f64, sigma: f64, delta: f64) -> Result<Self> {
        let r = Self { gamma, sigma, delta };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("gamma", self.gamma)?;
        check_positive("sigma", self.sigma)?;
        check_positive("delta", self.delta)
    }
}

/// Which branching model, with its rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Hsc(RatesHsc),
    Bds(RatesBds),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hsc,
    Bds,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Hsc(_) => ModelKind::Hsc,
            Model::Bds(_) => ModelKind::Bds,
        }
    }
}

/// A fully specified transition problem: model, elapsed time and initial
/// population `(j, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    pub model: Model,
    pub t: f64,
    pub init: (u32, u32),
}

impl ModelSpec {
    pub fn new(model: Model, t: f64, init: (u32, u32)) -> Result<Self> {
        let spec = Self { model, t, init };
        spec.validate()?;
        Ok(spec)
    }

    pub fn hsc(rates: RatesHsc, t: f64, init: (u32, u32)) -> Result<Self> {
        Self::new(Model::Hsc(rates), t, init)
    }

    pub fn bds(rates: RatesBds, t: f64, init: (u32, u32)) -> Result<Self> {
        Self::new(Model::Bds(rates), t, init)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            Model::Hsc(r) => r.validate()?,
            Model::Bds(r) => r.validate()?,
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidModel(format!("t = {} must be > 0", self.t)));
        }
        if self.init.0 + self.init.1 == 0 {
            return Err(Error::InvalidModel("initial population must be non-empty".into()));
        }
        Ok(())
    }

    pub fn with_time(&self, t: f64) -> Result<Self> {
        Self::new(self.model, t, self.init)
    }

    pub fn with_init(&self, init: (u32, u32)) -> Result<Self> {
        Self::new(self.model, self.t, init)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModelSpec {
    model: ModelKind,
    rates: serde_json::Value,
    t: f64,
    init: [u32; 2],
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        let model = match raw.model {
            ModelKind::Hsc => Model::Hsc(serde_json::from_value(raw.rates)?),
            ModelKind::Bds => Model::Bds(serde_json::from_value(raw.rates)?),
        };
        ModelSpec::new(model, raw.t, (raw.init[0], raw.init[1]))
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(spec: ModelSpec) -> Self {
        let (model, rates) = match spec.model {
            Model::Hsc(r) => (ModelKind::Hsc, serde_json::to_value(r)),
            Model::Bds(r) => (ModelKind::Bds, serde_json::to_value(r)),
        };
        RawModelSpec {
            model,
            rates: rates.expect("rates serialize"),
            t: spec.t,
            init: [spec.init.0, spec.init.1],
        }
    }
}

/// A point `(s1, s2)` at which a generating function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCirclePoint {
    pub s1: Complex64,
    pub s2: Complex64,
}

impl UnitCirclePoint {
    pub fn new(s1: Complex64, s2: Complex64) -> Self {
        Self { s1, s2 }
    }

    /// `(e^{2πiu/n}, e^{2πiv/n})`.
    pub fn grid(u: usize, v: usize, n: usize) -> Self {
        Self {
            s1: root_of_unity(u, n),
            s2: root_of_unity(v, n),
        }
    }

    pub fn conj(&self) -> Self {
        Self::new(self.s1.conj(), self.s2.conj())
    }
}

/// `e^{2πi k/n}`, exactly `1` for `k = 0`.
pub fn root_of_unity(k: usize, n: usize) -> Complex64 {
    if k.is_multiple_of(n) {
        return Complex64::new(1.0, 0.0);
    }
    let theta = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
    Complex64::new(theta.cos(), theta.sin())
}

/// HSC progenitor PGF; closed form of the pure-death equation.
pub fn hsc_phi2(t: f64, s2: Complex64, rates: &RatesHsc) -> Complex64 {
    // `1 + (s2 − 1)e^{−μt}` arranged to return s2 exactly at t = 0
    let e = (-rates.mu * t).exp();
    s2 * e + (1.0 - e)
}

/// HSC stem-cell PGF, integrating
/// `φ₁' = ρφ₁² − (ρ+ν)φ₁ + νφ₂(τ)` from `φ₁(0) = s1`.
pub fn hsc_phi1(
    t: f64,
    s: UnitCirclePoint,
    rates: &RatesHsc,
    ode_cfg: &OdeConfig,
) -> Result<Complex64> {
    let RatesHsc { rho, nu, .. } = *rates;
    ode::integrate(
        |tau, y| rho * y * y - (rho + nu) * y + nu * hsc_phi2(tau, s.s2, rates),
        s.s1,
        t,
        ode_cfg,
    )
}

fn check_nondegenerate(rates: &RatesBds) -> Result<()> {
    if (rates.gamma - rates.delta).abs() < DEGENERACY_EPS {
        Err(Error::DegenerateRates {
            gamma: rates.gamma,
            delta: rates.delta,
        })
    } else {
        Ok(())
    }
}

fn bds_phi01_unchecked(t: f64, s2: Complex64, rates: &RatesBds) -> Complex64 {
    if (s2 - 1.0).norm() < SINGULAR_EPS {
        return Complex64::new(1.0, 0.0);
    }
    let RatesBds { gamma, delta, .. } = *rates;
    let bracket = gamma / (delta - gamma)
        + (1.0 / (s2 - 1.0) + gamma / (gamma - delta)) * ((delta - gamma) * t).exp();
    1.0 + 1.0 / bracket
}

/// BDS PGF for one newly occupied location (closed-form Riccati solution).
pub fn bds_phi01(t: f64, s2: Complex64, rates: &RatesBds) -> Result<Complex64> {
    check_nondegenerate(rates)?;
    Ok(bds_phi01_unchecked(t, s2, rates))
}

/// BDS PGF for one initially occupied location, integrating
/// `φ₁₀' = γφ₁₀φ₀₁ + σφ₀₁ + δ − (γ+σ+δ)φ₁₀` from `φ₁₀(0) = s1`.
pub fn bds_phi10(
    t: f64,
    s: UnitCirclePoint,
    rates: &RatesBds,
    ode_cfg: &OdeConfig,
) -> Result<Complex64> {
    check_nondegenerate(rates)?;
    let RatesBds { gamma, sigma, delta } = *rates;
    ode::integrate(
        |tau, y| {
            let p01 = bds_phi01_unchecked(tau, s.s2, rates);
            gamma * y * p01 + sigma * p01 + delta - (gamma + sigma + delta) * y
        },
        s.s1,
        t,
        ode_cfg,
    )
}

/// `φ_{jk}(t, s1, s2) = φ₁^j φ₂^k` for the model's initial state.
pub fn pgf(model: &ModelSpec, s: UnitCirclePoint, ode_cfg: &OdeConfig) -> Result<Complex64> {
    let (j, k) = model.init;
    let t = model.t;
    let one = Complex64::new(1.0, 0.0);
    let (phi1, phi2) = match &model.model {
        Model::Hsc(r) => {
            let p1 = if j > 0 { hsc_phi1(t, s, r, ode_cfg)? } else { one };
            (p1, hsc_phi2(t, s.s2, r))
        }
        Model::Bds(r) => {
            let p1 = if j > 0 { bds_phi10(t, s, r, ode_cfg)? } else { one };
            (p1, bds_phi01(t, s.s2, r)?)
        }
    };
    Ok(phi1.powu(j) * phi2.powu(k))
}

/// Rates used throughout the experiments: per week for HSC, per year for BDS.
pub mod reference {
    use super::*;

    pub const HSC_RATES: RatesHsc = RatesHsc {
        rho: 0.125,
        nu: 0.104,
        mu: 0.147,
    };
    pub const HSC_T: f64 = 1.0;

    pub const BDS_RATES: RatesBds = RatesBds {
        gamma: 0.016,
        sigma: 0.004,
        delta: 0.019,
    };
    pub const BDS_T: f64 = 0.35;

    pub fn hsc(init: (u32, u32)) -> ModelSpec {
        ModelSpec::hsc(HSC_RATES, HSC_T, init).expect("reference HSC model is valid")
    }

    pub fn bds(init: (u32, u32)) -> ModelSpec {
        ModelSpec::bds(BDS_RATES, BDS_T, init).expect("reference BDS model is valid")
    }
}
