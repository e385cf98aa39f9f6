//! Linearization at a critical point, μ-dependent classification, Hopf data
//! and the quadratic reduction at a nullcline tangency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibria::CriticalPoint;
use crate::error::{Error, Result};

/// Relative width of the window around μ₀ classified as a center.
pub const HOPF_WINDOW: f64 = 1e-12;
/// |f′ − g′| ≤ TANGENCY_REL·max(|f′|, |g′|) is treated as a tangency.
pub const TANGENCY_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2 {
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn discriminant(&self) -> f64 {
        let tr = self.trace();
        tr * tr - 4.0 * self.det()
    }

    /// Roots of r² − tr·r + det, ordered (+, −) for a real pair and
    /// (Im > 0, Im < 0) for a complex pair.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc < 0.0 {
            let re = 0.5 * tr;
            let im = 0.5 * (-disc).sqrt();
            return [Complex64::new(re, im), Complex64::new(re, -im)];
        }
        let sq = disc.sqrt();
        let q = 0.5 * (tr + tr.signum() * sq);
        let (plus, minus) = if q == 0.0 {
            (0.0, 0.0)
        } else if tr >= 0.0 {
            (q, det / q)
        } else {
            (det / q, q)
        };
        [Complex64::new(plus, 0.0), Complex64::new(minus, 0.0)]
    }
}

/// μα₂γ, the coupling that multiplies the temperature row.
fn coupling(mu: f64, alpha2: f64, gamma: f64) -> f64 {
    mu * alpha2 * gamma
}

pub fn jacobian(cp: &CriticalPoint, mu: f64, alpha2: f64, gamma: f64) -> Result<Jacobian2> {
    if !(cp.lambda_c > 0.0) {
        return Err(Error::Domain(format!("lambda_c must be positive, got {}", cp.lambda_c)));
    }
    let k = coupling(mu, alpha2, gamma);
    let rho = cp.rho();
    Ok(Jacobian2 { a11: k * cp.f1, a12: -k, a21: rho * cp.g1, a22: -rho })
}

pub fn eigenvalues(cp: &CriticalPoint, mu: f64, alpha2: f64, gamma: f64) -> Result<[Complex64; 2]> {
    Ok(jacobian(cp, mu, alpha2, gamma)?.eigenvalues())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MuThresholds {
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub mu0: Option<f64>,
    pub omega0: Option<f64>,
}

/// Node/focus transitions μ₁ < μ₂ (zeros of the discriminant in μ) and, for
/// g′ > f′ > 0, the trace zero μ₀ with its frequency ω₀.
pub fn mu_thresholds(cp: &CriticalPoint, alpha2: f64, gamma: f64) -> Result<MuThresholds> {
    let (f1, g1) = (cp.f1, cp.g1);
    if f1 == 0.0 {
        return Err(Error::DegenerateSlope);
    }
    let rho = cp.rho();
    let a = alpha2 * gamma;
    let mut out = MuThresholds::default();
    if g1 >= f1 {
        let root = 2.0 * (g1 * (g1 - f1)).sqrt();
        let mu2 = rho / (a * f1 * f1) * (2.0 * g1 - f1 + root);
        out.mu2 = Some(mu2);
        out.mu1 = Some(rho * rho / (a * a * f1 * f1) / mu2);
    }
    if g1 > f1 && f1 > 0.0 {
        out.mu0 = Some(rho / (a * f1));
        out.omega0 = Some(rho * (g1 / f1 - 1.0).sqrt());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassKind {
    StableNode,
    StableFocus,
    UnstableFocus,
    UnstableNode,
    Saddle,
    HopfCenter,
    NonHyperbolicTangency,
}

impl ClassKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassKind::StableNode => "StableNode",
            ClassKind::StableFocus => "StableFocus",
            ClassKind::UnstableFocus => "UnstableFocus",
            ClassKind::UnstableNode => "UnstableNode",
            ClassKind::Saddle => "Saddle",
            ClassKind::HopfCenter => "HopfCenter",
            ClassKind::NonHyperbolicTangency => "NonHyperbolicTangency",
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, ClassKind::StableNode | ClassKind::StableFocus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: ClassKind,
}

pub fn is_tangent(cp: &CriticalPoint) -> bool {
    (cp.f1 - cp.g1).abs() <= TANGENCY_REL * cp.f1.abs().max(cp.g1.abs())
}

pub fn classify(cp: &CriticalPoint, mu: f64, alpha2: f64, gamma: f64) -> Classification {
    use ClassKind::*;
    let (f1, g1) = (cp.f1, cp.g1);
    let kind = if is_tangent(cp) {
        NonHyperbolicTangency
    } else if f1 == 0.0 {
        // trace < 0 and det > 0: stable, node or focus by the discriminant
        let disc = jacobian(cp, mu, alpha2, gamma).map(|j| j.discriminant()).unwrap_or(0.0);
        if disc < 0.0 {
            StableFocus
        } else {
            StableNode
        }
    } else if f1 > 0.0 && g1 < f1 {
        Saddle
    } else {
        let th = mu_thresholds(cp, alpha2, gamma).unwrap_or_default();
        let (mu1, mu2) = (th.mu1.unwrap_or(0.0), th.mu2.unwrap_or(f64::INFINITY));
        if f1 < 0.0 {
            if mu <= mu1 || mu >= mu2 {
                StableNode
            } else {
                StableFocus
            }
        } else {
            let mu0 = th.mu0.unwrap_or(f64::NAN);
            if mu <= mu1 {
                StableNode
            } else if (mu - mu0).abs() <= HOPF_WINDOW * mu0 {
                HopfCenter
            } else if mu < mu0 {
                StableFocus
            } else if mu < mu2 {
                UnstableFocus
            } else {
                UnstableNode
            }
        }
    };
    Classification { kind }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Supercritical,
    Subcritical,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfData {
    pub mu0: f64,
    pub omega0: f64,
    pub l1: f64,
    pub criticality: Criticality,
    /// d(Re r)/dμ at μ₀.
    pub transversality: f64,
}

/// First Lyapunov coefficient at μ₀ in closed form. Only the cached
/// derivatives enter; α₂γ cancels against μ₀.
pub fn lyapunov_closed_form(cp: &CriticalPoint) -> f64 {
    let (f1, f2, f3, g1) = (cp.f1, cp.f2, cp.f3, cp.g1);
    let (x, x1, x2, l) = (cp.xi_c, cp.xi1, cp.xi2, cp.lambda_c);
    let b = (g1 / f1 - 1.0).sqrt();
    let (l2, l3, x2s, x4) = (l * l, l * l * l, x * x, x * x * x * x);
    let w = 2.0 * x - 1.0;

    let t1 = (4.0 * f3 * l2 * x2s
        + f1 * f1 * (3.0 * x2s * g1 - 8.0 * l2 * (4.0 * x + 1.0) * x1)
        + 8.0 * l3 * (1.0 - 2.0 * x) * f1 * x2)
        / (32.0 * l2 * x2s * f1 * f1 * g1 * b);
    let den = 8.0 * l2 * x4 * f1 * f1 * g1 * (f1 - g1) * b;
    let t2 = (l2 * x2s * f2 * (4.0 * l2 * x2 - x2s * f2) + x2s * f1.powi(3) * (x2s * g1 + 4.0 * l2 * w * x1)) / den;
    let t3 = (2.0 * l2 * f1 * f1 * (w * x1 * (x2s * g1 + 4.0 * l2 * w * x1) - 2.0 * l * x2s * x2)
        - 2.0 * l3 * w * f1 * x1 * (x2s * f2 + 4.0 * l2 * x2))
        / den;
    t1 + t2 + t3
}

pub fn criticality_of(l1: f64) -> Criticality {
    if l1.abs() <= 1e-8 * (1.0 + l1.abs()) {
        Criticality::Degenerate
    } else if l1 < 0.0 {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    }
}

pub fn hopf_analysis(cp: &CriticalPoint, alpha2: f64, gamma: f64) -> Result<HopfData> {
    if !(cp.g1 > cp.f1 && cp.f1 > 0.0) {
        return Err(Error::NotHopfCandidate { f1: cp.f1, g1: cp.g1 });
    }
    if !cp.smooth {
        return Err(Error::NonDifferentiablePoint { x: cp.theta_c });
    }
    let th = mu_thresholds(cp, alpha2, gamma)?;
    let (mu0, omega0) = match (th.mu0, th.omega0) {
        (Some(m), Some(w)) => (m, w),
        _ => return Err(Error::NotHopfCandidate { f1: cp.f1, g1: cp.g1 }),
    };
    let l1 = lyapunov_closed_form(cp);
    Ok(HopfData { mu0, omega0, l1, criticality: criticality_of(l1), transversality: 0.5 * alpha2 * gamma * cp.f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Unstable,
    /// Nilpotent linearization (μ = μ₀): unstable as long as the quadratic
    /// term does not vanish.
    UnstableIfQuadNonzero,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterManifold {
    /// Curvature of the slow manifold κ = c₂ψ².
    pub c2: f64,
    /// Coefficient of ψ² in the reduced equation.
    pub quad_coeff: f64,
    pub verdict: Verdict,
}

/// Quadratic reduction at a tangency f′ = g′ > 0.
pub fn center_manifold(cp: &CriticalPoint, mu: f64, alpha2: f64, gamma: f64) -> Result<CenterManifold> {
    if !(is_tangent(cp) && cp.f1 > 0.0) {
        return Err(Error::NotTangent { f1: cp.f1, g1: cp.g1 });
    }
    let a = alpha2 * gamma;
    let (x, x1, x2, l) = (cp.xi_c, cp.xi1, cp.xi2, cp.lambda_c);
    let sl = l.sqrt();
    let gap = x - a * sl * mu * cp.f1;
    let num = a * sl * mu * x1 * (4.0 * l * l * x2 - x * x * cp.f2) + x * x * x2 * gap - 8.0 * l * x * x * x1 * x1;
    let c2 = num / (2.0 * sl * x1 * gap * gap);
    let quad_coeff = 2.0 * a * mu * x * x * (cp.f2 - cp.g2) / (-gap).powi(3);

    let mu0 = x / (a * cp.f1 * sl);
    let curvature_gap = (cp.f2 - cp.g2).abs() <= TANGENCY_REL * cp.f2.abs().max(cp.g2.abs()).max(1.0);
    let verdict = if (mu - mu0).abs() <= HOPF_WINDOW * mu0 {
        if curvature_gap {
            Verdict::Inconclusive
        } else {
            Verdict::UnstableIfQuadNonzero
        }
    } else if mu > mu0 || !curvature_gap {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    };
    Ok(CenterManifold { c2, quad_coeff, verdict })
}
