//! Model parameters, the two-Lorentzian coupling profile and the closed-form
//! response function ζ.
//!
//! Internally everything is computed in units ω₀ = m = μ = 1; the public
//! functions take full parameters and scale results back.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config::KvConfig;
use crate::error::{Error, Result};

pub const PARAM_KEYS: [&str; 6] = ["omega0", "mass_m", "mu", "sigma", "eta_r", "eta_0"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    omega0: f64,
    mass_m: f64,
    mu: f64,
    sigma: f64,
    eta_r: f64,
    eta_0: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    omega0: f64,
    mass_m: f64,
    mu: f64,
    sigma: f64,
    eta_r: f64,
    eta_0: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.omega0, r.mass_m, r.mu, r.sigma, r.eta_r, r.eta_0)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            omega0: p.omega0,
            mass_m: p.mass_m,
            mu: p.mu,
            sigma: p.sigma,
            eta_r: p.eta_r,
            eta_0: p.eta_0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

impl ModelParams {
    pub fn new(
        omega0: f64,
        mass_m: f64,
        mu: f64,
        sigma: f64,
        eta_r: f64,
        eta_0: f64,
    ) -> Result<Self> {
        positive("omega0", omega0)?;
        positive("mass_m", mass_m)?;
        positive("mu", mu)?;
        if sigma == 0.0 {
            return Err(Error::InvalidParams(
                "sigma must be > 0 (sigma = 0 decouples the reservoir)".into(),
            ));
        }
        positive("sigma", sigma)?;
        if !(eta_r.is_finite() && eta_r >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "eta_r must be finite and >= 0, got {eta_r}"
            )));
        }
        if eta_0 == 0.0 {
            return Err(Error::InvalidParams(
                "eta_0 must be > 0 (eta_0 = 0 is the delta-resonance limit)".into(),
            ));
        }
        positive("eta_0", eta_0)?;
        Ok(Self {
            omega0,
            mass_m,
            mu,
            sigma,
            eta_r,
            eta_0,
        })
    }

    /// Parameters in natural units ω₀ = m = μ = 1.
    pub fn natural(sigma: f64, eta_r: f64, eta_0: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, sigma, eta_r, eta_0)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }
    pub fn mass_m(&self) -> f64 {
        self.mass_m
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn eta_r(&self) -> f64 {
        self.eta_r
    }
    pub fn eta_0(&self) -> f64 {
        self.eta_0
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(
            self.omega0,
            self.mass_m,
            self.mu,
            sigma,
            self.eta_r,
            self.eta_0,
        )
    }

    pub fn with_units(&self, omega0: f64, mass_m: f64, mu: f64) -> Result<Self> {
        Self::new(omega0, mass_m, mu, self.sigma, self.eta_r, self.eta_0)
    }

    pub fn shape(&self) -> Shape {
        Shape {
            sigma: self.sigma,
            eta_r: self.eta_r,
            eta_0: self.eta_0,
        }
    }

    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        let get = |k: &str| -> Result<f64> {
            cfg.require(k).map_err(|e| match e {
                Error::Config { msg, .. } => Error::Config {
                    line: cfg.line_of(k),
                    msg,
                },
                other => other,
            })
        };
        Self::new(
            get("omega0")?,
            get("mass_m")?,
            get("mu")?,
            get("sigma")?,
            get("eta_r")?,
            get("eta_0")?,
        )
    }

    pub fn to_kv(&self) -> String {
        self.kv_pairs()
            .iter()
            .map(|(k, v)| format!("{k} = {v:?}\n"))
            .collect()
    }

    pub fn kv_pairs(&self) -> [(&'static str, f64); 6] {
        [
            ("omega0", self.omega0),
            ("mass_m", self.mass_m),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("eta_r", self.eta_r),
            ("eta_0", self.eta_0),
        ]
    }
}

/// The dimensionless shape parameters (σ, η_r, η₀) that fix every closed
/// form once ω₀, m and μ are scaled out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub sigma: f64,
    pub eta_r: f64,
    pub eta_0: f64,
}

impl Shape {
    /// Two-Lorentzian profile L(x) = η₀/((x-η_r)²+η₀²) + η₀/((x+η_r)²+η₀²).
    pub fn lorentz(&self, x: f64) -> f64 {
        let e0 = self.eta_0;
        let a = x - self.eta_r;
        let b = x + self.eta_r;
        e0 / (a * a + e0 * e0) + e0 / (b * b + e0 * e0)
    }

    /// Dimensionless β²: σ² L(x)/π.
    pub fn beta_sq(&self, x: f64) -> f64 {
        self.sigma * self.sigma * self.lorentz(x) / PI
    }

    /// Denominator (η - iη₀)² - η_r² of the rational factor.
    pub fn lorentz_den(&self, eta: Complex64) -> Complex64 {
        let s = eta - Complex64::new(0.0, self.eta_0);
        s * s - self.eta_r * self.eta_r
    }

    /// ζ(ω₀η)/ω₀² without a pole check.
    pub fn zeta(&self, eta: Complex64) -> Complex64 {
        let s = eta - Complex64::new(0.0, self.eta_0);
        1.0 - eta * eta + eta * self.sigma * self.sigma * s / (s * s - self.eta_r * self.eta_r)
    }

    pub fn zeta_real(&self, x: f64) -> Complex64 {
        self.zeta(Complex64::new(x, 0.0))
    }
}

pub fn effective_frequency_sq(p: &ModelParams) -> f64 {
    p.omega0 * p.omega0 * (1.0 + p.sigma * p.sigma)
}

/// β²(ν) for the two-Lorentzian coupling.
pub fn coupling_beta_sq(p: &ModelParams, nu: f64) -> f64 {
    p.mass_m * p.mu * p.omega0 * p.shape().beta_sq(nu / p.omega0)
}

/// ζ(ω₀η) in units of ω₀², i.e. ω₀²·[1 - η² + ησ²(η-iη₀)/((η-iη₀)² - η_r²)].
pub fn zeta_closed(p: &ModelParams, eta: Complex64) -> Result<Complex64> {
    if !(eta.re.is_finite() && eta.im.is_finite()) {
        return Err(Error::Domain(format!("zeta: non-finite argument {eta}")));
    }
    let sh = p.shape();
    let den = sh.lorentz_den(eta);
    if den.norm() <= 1e-15 * (1.0 + eta.norm_sqr()) {
        return Err(Error::Domain(format!(
            "zeta: {eta} is a pole of the coupling factor"
        )));
    }
    Ok(p.omega0 * p.omega0 * sh.zeta(eta))
}
