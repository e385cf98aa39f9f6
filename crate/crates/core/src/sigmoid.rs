//! Odd sigmoid shapes and the bounded monotone response curves built on them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized odd sigmoid with limits ±1 and unit slope scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmoidFamily {
    #[default]
    Tanh,
    /// 2/(1+e^{-x}) - 1, i.e. tanh(x/2).
    Logistic,
    Erf,
    /// clamp(x, -1, 1)
    PiecewiseLinear,
}

impl SigmoidFamily {
    pub const ALL: [SigmoidFamily; 4] =
        [SigmoidFamily::Tanh, SigmoidFamily::Logistic, SigmoidFamily::Erf, SigmoidFamily::PiecewiseLinear];

    /// Families with derivatives of every order (required for Hopf analysis).
    pub fn is_smooth(self) -> bool {
        !matches!(self, SigmoidFamily::PiecewiseLinear)
    }

    pub fn name(self) -> &'static str {
        match self {
            SigmoidFamily::Tanh => "tanh",
            SigmoidFamily::Logistic => "logistic",
            SigmoidFamily::Erf => "erf",
            SigmoidFamily::PiecewiseLinear => "piecewise_linear",
        }
    }

    pub fn eval(self, x: f64, order: u8) -> Result<f64> {
        sigmoid_eval(self, x, order)
    }
}

impl std::str::FromStr for SigmoidFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SigmoidFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sigmoid family '{s}'")))
    }
}

// sech^2 without overflow for large |x|
fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

fn tanh_derivative(x: f64, order: u8) -> f64 {
    let t = x.tanh();
    let s = sech2(x);
    match order {
        0 => t,
        1 => s,
        2 => -2.0 * t * s,
        _ => s * (6.0 * t * t - 2.0),
    }
}

/// σ^(order)(x) for the chosen family.
pub fn sigmoid_eval(family: SigmoidFamily, x: f64, order: u8) -> Result<f64> {
    if order > 3 {
        return Err(Error::InvalidOrder(order));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("sigmoid argument {x} is not finite")));
    }
    let v = match family {
        SigmoidFamily::Tanh => tanh_derivative(x, order),
        SigmoidFamily::Logistic => tanh_derivative(0.5 * x, order) / f64::from(1u8 << order),
        SigmoidFamily::Erf => {
            if order == 0 {
                libm::erf(x)
            } else {
                let d1 = 2.0 / PI.sqrt() * (-x * x).exp();
                match order {
                    1 => d1,
                    2 => -2.0 * x * d1,
                    _ => (4.0 * x * x - 2.0) * d1,
                }
            }
        }
        SigmoidFamily::PiecewiseLinear => {
            if order >= 1 && x.abs() == 1.0 {
                return Err(Error::NonDifferentiablePoint { x });
            }
            match order {
                0 => x.clamp(-1.0, 1.0),
                1 if x.abs() < 1.0 => 1.0,
                _ => 0.0,
            }
        }
    };
    Ok(v)
}

/// ½(l₋ + l₊ + (l₊ − l₋)·σ((θ − center)/steepness))
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidResponse {
    #[serde(default)]
    pub family: SigmoidFamily,
    pub limit_minus: f64,
    pub limit_plus: f64,
    pub center: f64,
    pub steepness: f64,
}

impl SigmoidResponse {
    pub fn new(family: SigmoidFamily, limit_minus: f64, limit_plus: f64, center: f64, steepness: f64) -> Self {
        SigmoidResponse { family, limit_minus, limit_plus, center, steepness }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let finite = [self.limit_minus, self.limit_plus, self.center, self.steepness].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams(format!("{what}: non-finite curve parameter")));
        }
        if self.steepness <= 0.0 {
            return Err(Error::InvalidParams(format!("{what}: steepness must be positive, got {}", self.steepness)));
        }
        Ok(())
    }

    pub fn eval(&self, theta: f64, order: u8) -> Result<f64> {
        response_eval(self, theta, order)
    }

    pub fn value(&self, theta: f64) -> f64 {
        // order 0 never fails for finite input
        self.eval(theta, 0).unwrap_or(f64::NAN)
    }

    pub fn lower(&self) -> f64 {
        self.limit_minus.min(self.limit_plus)
    }

    pub fn upper(&self) -> f64 {
        self.limit_minus.max(self.limit_plus)
    }

    /// Largest |slope| over θ for the smooth families.
    pub fn max_abs_slope(&self) -> f64 {
        let peak = match self.family {
            SigmoidFamily::Tanh | SigmoidFamily::PiecewiseLinear => 1.0,
            SigmoidFamily::Logistic => 0.5,
            SigmoidFamily::Erf => 2.0 / PI.sqrt(),
        };
        0.5 * (self.limit_plus - self.limit_minus).abs() * peak / self.steepness
    }
}

pub fn response_eval(curve: &SigmoidResponse, theta: f64, order: u8) -> Result<f64> {
    let x = (theta - curve.center) / curve.steepness;
    let half_span = 0.5 * (curve.limit_plus - curve.limit_minus);
    let s = sigmoid_eval(curve.family, x, order)?;
    if order == 0 {
        let v = 0.5 * (curve.limit_plus + curve.limit_minus) + half_span * s;
        Ok(v.clamp(curve.lower(), curve.upper()))
    } else {
        Ok(half_span * s / curve.steepness.powi(i32::from(order)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn albedo() -> SigmoidResponse {
        SigmoidResponse::new(SigmoidFamily::Tanh, 0.85, 0.25, 1.4, 0.015)
    }

    #[test]
    fn trivial_values() {
        assert_eq!(sigmoid_eval(SigmoidFamily::Tanh, 0.0, 0).unwrap(), 0.0);
        assert_eq!(sigmoid_eval(SigmoidFamily::Tanh, 0.0, 1).unwrap(), 1.0);
        assert!((sigmoid_eval(SigmoidFamily::Tanh, 20.0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sigmoid_eval(SigmoidFamily::Logistic, 0.0, 2).unwrap(), 0.0);
        for f in SigmoidFamily::ALL {
            assert_eq!(f.eval(0.0, 0).unwrap(), 0.0, "{f:?}");
            assert!((f.eval(60.0, 0).unwrap() - 1.0).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn logistic_is_rescaled_logistic() {
        for x in [-3.0f64, -0.4, 0.0, 0.7, 5.0] {
            let direct = 2.0 / (1.0 + (-x).exp()) - 1.0;
            assert!((SigmoidFamily::Logistic.eval(x, 0).unwrap() - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn kinks_reject_derivatives() {
        let pl = SigmoidFamily::PiecewiseLinear;
        assert_eq!(pl.eval(1.0, 0).unwrap(), 1.0);
        assert!(matches!(pl.eval(1.0, 1), Err(Error::NonDifferentiablePoint { .. })));
        assert!(matches!(pl.eval(-1.0, 3), Err(Error::NonDifferentiablePoint { .. })));
        assert_eq!(pl.eval(0.3, 1).unwrap(), 1.0);
        assert_eq!(pl.eval(1.3, 1).unwrap(), 0.0);
        assert_eq!(pl.eval(0.3, 2).unwrap(), 0.0);
        assert!(matches!(pl.eval(0.0, 4), Err(Error::InvalidOrder(4))));
    }

    #[test]
    fn response_examples() {
        let a = albedo();
        assert!((a.eval(1.4, 0).unwrap() - 0.55).abs() < 1e-15);
        assert!((a.eval(-1e6, 0).unwrap() - 0.85).abs() < 1e-15);
        for th in [0.5, 1.39, 1.4, 1.41, 2.0] {
            assert!(a.eval(th, 1).unwrap() <= 0.0);
        }
        let xi = SigmoidResponse::new(SigmoidFamily::Tanh, 0.1, 0.5, 1.43, 0.0027);
        assert!((xi.eval(1.43, 0).unwrap() - 0.3).abs() < 1e-15);
        assert!((a.max_abs_slope() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn family_names_round_trip() {
        for f in SigmoidFamily::ALL {
            assert_eq!(f.name().parse::<SigmoidFamily>().unwrap(), f);
            let js = serde_json::to_string(&f).unwrap();
            assert_eq!(js, format!("\"{}\"", f.name()));
        }
    }
}
