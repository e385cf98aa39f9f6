//! Parameter records, characteristic scales and conversions between
//! dimensional and nondimensional variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigmoid::{SigmoidFamily, SigmoidResponse};

/// Julian year in seconds.
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// Dimensional inputs (SI units unless noted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PhysicalParams {
    /// Solar constant, W m^-2.
    pub Q: f64,
    /// Continental fraction of the surface.
    pub gamma: f64,
    /// OLR intercept, W m^-2 (negative).
    pub A: f64,
    /// OLR slope, W m^-2 K^-1.
    pub B: f64,
    /// Ice yield stress, Pa.
    pub tau0: f64,
    pub rho_i: f64,
    pub grav: f64,
    /// Slope of the 0 °C isotherm.
    pub s: f64,
    /// Isotherm height over the Arctic Ocean, m.
    pub h0: f64,
    /// Column heat capacity, J m^-2 K^-1.
    pub c: f64,
    /// Ablation rate, m/yr.
    pub m_rate: f64,
    /// Accumulation rate, m/yr. Documentation only; ξ is given by `accum`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_rate: Option<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub albedo: SigmoidResponse,
    pub accum: SigmoidResponse,
}

impl PhysicalParams {
    /// Typical present-day values. `m_rate` is backed out of t* = 33.2e3 yr and
    /// `c` is a placeholder that puts μ near 2.
    pub fn table1() -> Self {
        PhysicalParams {
            Q: 1361.0,
            gamma: 0.3,
            A: -267.96,
            B: 1.74,
            tau0: 0.3e5,
            rho_i: 920.0,
            grav: 9.81,
            s: 0.4e-3,
            h0: 1200.0,
            c: 9.0e11,
            m_rate: 0.498,
            a_rate: None,
            alpha1: 0.25,
            alpha2: 4.0,
            albedo: SigmoidResponse::new(SigmoidFamily::Tanh, 0.85, 0.25, 1.4, 0.015),
            accum: SigmoidResponse::new(SigmoidFamily::Tanh, 0.1, 0.5, 1.43, 0.0027),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("Q", self.Q),
            ("B", self.B),
            ("tau0", self.tau0),
            ("rho_i", self.rho_i),
            ("grav", self.grav),
            ("c", self.c),
            ("m_rate", self.m_rate),
            ("alpha2", self.alpha2),
            ("s", self.s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.A < 0.0) {
            return Err(Error::InvalidParams(format!("A must be negative, got {}", self.A)));
        }
        if !self.h0.is_finite() || !self.alpha1.is_finite() {
            return Err(Error::InvalidParams("h0 and alpha1 must be finite".into()));
        }
        self.albedo.validate("albedo")?;
        self.accum.validate("accum")
    }

    /// H = sqrt(4 τ₀ / (3 ρᵢ g)), in m^½.
    pub fn profile_coefficient(&self) -> f64 {
        (4.0 * self.tau0 / (3.0 * self.rho_i * self.grav)).sqrt()
    }
}

/// Nondimensional parameters of the planar model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub beta: f64,
    pub gamma: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub albedo: SigmoidResponse,
    pub accum: SigmoidResponse,
}

impl ModelParams {
    /// Table-1 values as printed (β = 0.79) with ε = 0.
    pub fn table1() -> Self {
        ModelParams {
            beta: 0.79,
            gamma: 0.3,
            alpha1: 0.25,
            alpha2: 4.0,
            epsilon: 0.0,
            albedo: SigmoidResponse::new(SigmoidFamily::Tanh, 0.85, 0.25, 1.4, 0.015),
            accum: SigmoidResponse::new(SigmoidFamily::Tanh, 0.1, 0.5, 1.43, 0.0027),
        }
    }

    /// Table 1 with a wider albedo transition (Δα = 0.0213). This variant has an
    /// interior equilibrium with a supercritical Hopf point at μ₀ ≈ 1.9.
    pub fn hopf_demo() -> Self {
        let mut p = Self::table1();
        p.albedo.steepness = 0.0213;
        p
    }

    /// Three nullcline crossings: shallow albedo ramp, smooth ξ.
    pub fn fig2() -> Self {
        ModelParams {
            beta: 0.79,
            gamma: 0.3,
            alpha1: 0.25,
            alpha2: 3.2,
            epsilon: 0.0,
            albedo: SigmoidResponse::new(SigmoidFamily::Tanh, 0.85, 0.25, 1.27, 0.12),
            accum: SigmoidResponse::new(SigmoidFamily::Tanh, 0.1, 0.5, 1.29, 0.01),
        }
    }

    pub fn with_family(mut self, family: SigmoidFamily) -> Self {
        self.albedo.family = family;
        self.accum.family = family;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParams(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.alpha2 > 0.0) {
            return Err(Error::InvalidParams(format!("alpha2 must be positive, got {}", self.alpha2)));
        }
        if !self.alpha1.is_finite() || !self.epsilon.is_finite() {
            return Err(Error::InvalidParams("alpha1 and epsilon must be finite".into()));
        }
        for (name, curve) in [("albedo", &self.albedo), ("accum", &self.accum)] {
            curve.validate(name)?;
            if curve.lower() < 0.0 || curve.upper() > 1.0 {
                return Err(Error::InvalidParams(format!("{name} limits must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    /// True when both curves have derivatives of all orders.
    pub fn is_smooth(&self) -> bool {
        self.albedo.family.is_smooth() && self.accum.family.is_smooth()
    }
}

/// Characteristic scales; `t_star` is in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Scales {
    /// K
    pub T_star: f64,
    /// m
    pub L_star: f64,
    /// yr
    pub t_star: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub theta: f64,
    pub lambda: f64,
}

impl State {
    pub const fn new(theta: f64, lambda: f64) -> Self {
        State { theta, lambda }
    }

    pub fn dist(&self, other: &State) -> f64 {
        (self.theta - other.theta).hypot(self.lambda - other.lambda)
    }
}

/// Temperature in K and ice-sheet half-width in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalState {
    pub temperature: f64,
    pub extent: f64,
}

impl Scales {
    pub fn to_dimensional(&self, s: &State) -> DimensionalState {
        DimensionalState { temperature: self.T_star * s.theta, extent: self.L_star * s.lambda }
    }

    pub fn from_dimensional(&self, d: &DimensionalState) -> State {
        State { theta: d.temperature / self.T_star, lambda: d.extent / self.L_star }
    }

    pub fn years(&self, tau: f64) -> f64 {
        self.t_star * tau
    }

    pub fn tau(&self, years: f64) -> f64 {
        years / self.t_star
    }
}

pub fn nondimensionalize(p: &PhysicalParams) -> Result<(ModelParams, Scales)> {
    p.validate()?;
    let h = p.profile_coefficient();
    let h2 = h * h;
    let t_star_years = 1.5 * h2 / (p.m_rate * p.s);
    let m_si = p.m_rate / SECONDS_PER_YEAR;
    let scales = Scales {
        T_star: p.Q / (4.0 * p.B),
        L_star: h2 / (p.s * p.s),
        t_star: t_star_years,
        mu: 1.5 * p.B * h2 / (m_si * p.s * p.c),
    };
    let checks = [("T*", scales.T_star), ("L*", scales.L_star), ("t*", scales.t_star), ("mu", scales.mu)];
    for (symbol, value) in checks {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Scale { symbol, value });
        }
    }
    let model = ModelParams {
        beta: -4.0 * p.A / p.Q,
        gamma: p.gamma,
        alpha1: p.alpha1,
        alpha2: p.alpha2,
        epsilon: p.s * p.h0 / h2,
        albedo: p.albedo,
        accum: p.accum,
    };
    Ok((model, scales))
}

/// Height of the perfectly plastic ice sheet, H·sqrt(l - |x|).
pub fn ice_profile_height(x: f64, l: f64, h: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!("sheet half-width must be positive, got {l}")));
    }
    if x.abs() > l {
        return Err(Error::OutOfProfile { x: x.abs(), l });
    }
    Ok(h * l.sqrt() * (1.0 - x.abs() / l).max(0.0).sqrt())
}
