//! Pure evaluations of the model: vector fields, snow line, nullclines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, State};

/// Branch of the full mass balance that produced dλ/dτ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Accumulating,
    Stagnant,
    Nucleation,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Accumulating => "accumulating",
            Regime::Stagnant => "stagnant",
            Regime::Nucleation => "nucleation",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accumulating" => Ok(Regime::Accumulating),
            "stagnant" => Ok(Regime::Stagnant),
            "nucleation" => Ok(Regime::Nucleation),
            _ => Err(Error::Config(format!("unknown regime '{s}'"))),
        }
    }
}

pub fn continental_albedo(params: &ModelParams, lambda: f64) -> f64 {
    params.alpha1 + params.alpha2 * lambda
}

/// Position of the accumulation/ablation boundary in units of λ.
pub fn lambda0(lambda: f64, epsilon: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda0 needs lambda > 0, got {lambda}")));
    }
    let radicand = epsilon + 2.0 * lambda + 0.25;
    if radicand < 0.0 {
        return Err(Error::ComplexSnowline { lambda, epsilon });
    }
    let root = radicand.sqrt();
    let a = epsilon + lambda + 0.5;
    if a > 0.0 {
        // rationalized: avoids cancelling sqrt(R) against a for small lambda
        Ok((1.0 - (epsilon + lambda) * (epsilon + lambda) / lambda) / (root + a))
    } else {
        Ok((root - a) / lambda)
    }
}

fn check_lambda(s: &State) -> Result<()> {
    if !(s.lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {}", s.lambda)));
    }
    Ok(())
}

/// dθ/dτ, shared by both models.
pub fn energy_rate(params: &ModelParams, mu: f64, theta: f64, lambda: f64) -> f64 {
    let ao = params.albedo.value(theta);
    mu * (1.0 + params.beta - params.gamma * continental_albedo(params, lambda) - (1.0 - params.gamma) * ao - theta)
}

/// Simplified system (F, G).
pub fn vector_field(params: &ModelParams, mu: f64, s: State) -> Result<(f64, f64)> {
    check_lambda(&s)?;
    let xi = params.accum.value(s.theta);
    let g = s.lambda.sqrt() * ((1.0 + xi) * (1.0 - 4.0 * s.lambda) - 1.0);
    Ok((energy_rate(params, mu, s.theta, s.lambda), g))
}

pub fn regime_of(params: &ModelParams, s: State) -> Result<Regime> {
    check_lambda(&s)?;
    let eps = params.epsilon;
    if eps < 0.0 && s.lambda < -0.5 * eps {
        return Ok(Regime::Nucleation);
    }
    if lambda0(s.lambda, eps)? >= 0.0 {
        Ok(Regime::Accumulating)
    } else {
        Ok(Regime::Stagnant)
    }
}

/// dλ/dτ of the full mass balance evaluated on a prescribed branch.
pub fn mass_rate(params: &ModelParams, regime: Regime, s: State) -> Result<f64> {
    check_lambda(&s)?;
    let xi = params.accum.value(s.theta);
    let sq = s.lambda.sqrt();
    Ok(match regime {
        Regime::Nucleation => -xi * params.epsilon / (2.0 * sq),
        Regime::Accumulating => sq * ((1.0 + xi) * lambda0(s.lambda, params.epsilon)? - 1.0),
        Regime::Stagnant => -sq,
    })
}

/// Full system with regime switching; ε is taken from `params`.
pub fn vector_field_full(params: &ModelParams, mu: f64, s: State) -> Result<(f64, f64, Regime)> {
    let regime = regime_of(params, s)?;
    let dl = mass_rate(params, regime, s)?;
    Ok((energy_rate(params, mu, s.theta, s.lambda), dl, regime))
}

/// Analytic Jacobian of the simplified field at an arbitrary state,
/// `[[F_θ, F_λ], [G_θ, G_λ]]`.
pub fn field_partials(params: &ModelParams, mu: f64, s: State) -> Result<[[f64; 2]; 2]> {
    check_lambda(&s)?;
    let ao1 = params.albedo.eval(s.theta, 1)?;
    let xi = params.accum.value(s.theta);
    let xi1 = params.accum.eval(s.theta, 1)?;
    let sq = s.lambda.sqrt();
    let l = s.lambda;
    Ok([
        [mu * (-(1.0 - params.gamma) * ao1 - 1.0), -mu * params.gamma * params.alpha2],
        [sq * xi1 * (1.0 - 4.0 * l), ((1.0 + xi) * (1.0 - 4.0 * l) - 1.0) / (2.0 * sq) - 4.0 * sq * (1.0 + xi)],
    ])
}

/// θ-nullcline λ = f(θ) and its derivatives.
pub fn nullcline_f(params: &ModelParams, theta: f64, order: u8) -> Result<f64> {
    let ga = params.gamma * params.alpha2;
    let ao = params.albedo.eval(theta, order)?;
    Ok(match order {
        0 => ((1.0 + params.beta - (1.0 - params.gamma) * ao - theta) / params.gamma - params.alpha1) / params.alpha2,
        1 => -((1.0 - params.gamma) * ao + 1.0) / ga,
        _ => -(1.0 - params.gamma) * ao / ga,
    })
}

/// λ-nullcline g = ξ/(4(1+ξ)) and its derivatives.
pub fn nullcline_g(params: &ModelParams, theta: f64, order: u8) -> Result<f64> {
    let xi = params.accum.eval(theta, 0)?;
    let u = 1.0 + xi;
    if order == 0 {
        return Ok(0.25 * xi / u);
    }
    let x1 = params.accum.eval(theta, 1)?;
    Ok(match order {
        1 => 0.25 * x1 / (u * u),
        2 => {
            let x2 = params.accum.eval(theta, 2)?;
            0.25 * (x2 * u - 2.0 * x1 * x1) / (u * u * u)
        }
        3 => {
            let x2 = params.accum.eval(theta, 2)?;
            let x3 = params.accum.eval(theta, 3)?;
            0.25 * (x3 / (u * u) - 6.0 * x1 * x2 / (u * u * u) + 6.0 * x1 * x1 * x1 / (u * u * u * u))
        }
        _ => return Err(Error::InvalidOrder(order)),
    })
}

/// f − g, whose zeros are the equilibria.
pub fn nullcline_gap(params: &ModelParams, theta: f64) -> f64 {
    let f = nullcline_f(params, theta, 0).unwrap_or(f64::NAN);
    let g = nullcline_g(params, theta, 0).unwrap_or(f64::NAN);
    f - g
}
