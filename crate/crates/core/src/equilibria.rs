//! Critical points of the simplified system, their count, and the two
//! λ-branches of the full mass balance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lambda0, nullcline_f, nullcline_g, nullcline_gap};
use crate::params::{ModelParams, State};
use crate::roots::bisect;

/// Default θ scan window and resolution for [`find_equilibria`].
pub const DEFAULT_THETA_RANGE: (f64, f64) = (0.05, 3.0);
pub const DEFAULT_GRID: usize = 20_000;

/// |f − g| below which a non-crossing local extremum of f − g counts as a tangency.
pub const TANGENCY_GAP: f64 = 1e-10;

/// Equilibrium with cached nullcline and ξ derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub theta_c: f64,
    pub lambda_c: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub g1: f64,
    pub g2: f64,
    pub xi_c: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    /// Both response curves are C^∞ at this point.
    pub smooth: bool,
    /// Reported from a touching (non-crossing) extremum of f − g.
    pub tangency: bool,
}

impl CriticalPoint {
    /// Evaluates the cache at θ with λ = g(θ). Does not check f(θ) = g(θ).
    pub fn at(params: &ModelParams, theta: f64) -> Result<Self> {
        let accum = &params.accum;
        Ok(CriticalPoint {
            theta_c: theta,
            lambda_c: nullcline_g(params, theta, 0)?,
            f1: nullcline_f(params, theta, 1)?,
            f2: nullcline_f(params, theta, 2)?,
            f3: nullcline_f(params, theta, 3)?,
            g1: nullcline_g(params, theta, 1)?,
            g2: nullcline_g(params, theta, 2)?,
            xi_c: accum.eval(theta, 0)?,
            xi1: accum.eval(theta, 1)?,
            xi2: accum.eval(theta, 2)?,
            xi3: accum.eval(theta, 3)?,
            smooth: params.is_smooth(),
            tangency: false,
        })
    }

    pub fn state(&self) -> State {
        State::new(self.theta_c, self.lambda_c)
    }

    /// ρ = ξ_c/√λ_c, the magnitude of the (2,2) Jacobian entry.
    pub fn rho(&self) -> f64 {
        self.xi_c / self.lambda_c.sqrt()
    }

    pub fn residual(&self, params: &ModelParams) -> f64 {
        nullcline_gap(params, self.theta_c)
    }
}

/// Roots of f′ = 0 on either side of the albedo center, or `None` when f′ < 0
/// everywhere (or the albedo ramp has kinks).
pub fn theta_extrema(params: &ModelParams) -> Option<(f64, f64)> {
    if !params.albedo.family.is_smooth() {
        return None;
    }
    let fp = |t: f64| nullcline_f(params, t, 1).unwrap_or(f64::NAN);
    let c = params.albedo.center;
    let d = params.albedo.steepness;
    if !(fp(c) > 0.0) {
        return None;
    }
    let mut out = [0.0; 2];
    for (k, dir) in [-1.0, 1.0].into_iter().enumerate() {
        let mut inner = c;
        let mut found = None;
        for i in 1..=400 {
            let outer = c + dir * d * 0.25 * f64::from(i);
            if fp(outer) <= 0.0 {
                found = Some(bisect(fp, inner, outer));
                break;
            }
            inner = outer;
        }
        out[k] = found?;
    }
    Some((out[0], out[1]))
}

/// Sign-change scan of f − g refined by bisection, plus touching extrema.
pub fn find_equilibria(params: &ModelParams, theta_range: (f64, f64), grid_n: usize) -> Result<Vec<CriticalPoint>> {
    let (lo, hi) = theta_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid theta range [{lo}, {hi}]")));
    }
    let n = grid_n.max(100);
    let h = |t: f64| nullcline_gap(params, t);
    let hp = |t: f64| nullcline_f(params, t, 1).unwrap_or(f64::NAN) - nullcline_g(params, t, 1).unwrap_or(f64::NAN);
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| h(t)).collect();

    let mut roots: Vec<(f64, bool)> = Vec::new();
    for i in 0..n {
        let (a, b) = (grid[i], grid[i + 1]);
        let (ha, hb) = (vals[i], vals[i + 1]);
        if ha == 0.0 {
            roots.push((a, false));
        } else if ha * hb < 0.0 {
            roots.push((bisect(h, a, b), false));
        }
    }
    if vals[n] == 0.0 {
        roots.push((grid[n], false));
    }

    // touching extrema: local minimum of |h| without a sign change nearby
    for i in 1..n {
        let (a, m, b) = (vals[i - 1], vals[i], vals[i + 1]);
        let same_sign = a * m > 0.0 && m * b > 0.0;
        if !same_sign || m.abs() > a.abs() || m.abs() > b.abs() {
            continue;
        }
        let (ta, tb) = (grid[i - 1], grid[i + 1]);
        let (da, db) = (hp(ta), hp(tb));
        let t = if da * db < 0.0 { bisect(hp, ta, tb) } else { grid[i] };
        if h(t).abs() <= TANGENCY_GAP && !roots.iter().any(|r| (r.0 - t).abs() < (hi - lo) / n as f64) {
            roots.push((t, true));
        }
    }
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut out = Vec::with_capacity(roots.len());
    for (t, touching) in roots {
        let mut cp = CriticalPoint::at(params, t)?;
        let scale = cp.f1.abs().max(cp.g1.abs());
        cp.tangency = touching || (cp.f1 - cp.g1).abs() <= 1e-9 * scale;
        if cp.lambda_c > 0.0 && cp.lambda_c < 0.25 {
            out.push(cp);
        }
    }
    Ok(out)
}

pub fn find_equilibria_default(params: &ModelParams) -> Result<Vec<CriticalPoint>> {
    find_equilibria(params, DEFAULT_THETA_RANGE, DEFAULT_GRID)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumCount {
    One,
    AtLeastThree,
    Five,
    Degenerate,
}

/// g at θ → ±∞.
fn g_limits(params: &ModelParams) -> (f64, f64) {
    let g = |xi: f64| 0.25 * xi / (1.0 + xi);
    (g(params.accum.limit_minus), g(params.accum.limit_plus))
}

/// Counting rules based on the position of g relative to the extrema of f.
pub fn count_classification(params: &ModelParams) -> EquilibriumCount {
    let Some((tm, t_max)) = theta_extrema(params) else {
        return EquilibriumCount::Degenerate;
    };
    let eqs = match find_equilibria_default(params) {
        Ok(v) => v,
        Err(_) => return EquilibriumCount::Degenerate,
    };
    if eqs.iter().any(|c| c.tangency) {
        return EquilibriumCount::Degenerate;
    }
    let f = |t: f64| nullcline_f(params, t, 0).unwrap_or(f64::NAN);
    let g = |t: f64| nullcline_g(params, t, 0).unwrap_or(f64::NAN);
    let (g_minus, g_plus) = g_limits(params);
    let (f_m, f_max) = (f(tm), f(t_max));

    if g_plus <= f_m || g_minus >= f_max || (g(tm) < f_m && g(t_max) > f_max) {
        return EquilibriumCount::One;
    }
    if f_m < g_minus && g_plus < f_max {
        let folded = eqs.iter().any(|c| c.theta_c > tm && c.theta_c < t_max && c.f1 < c.g1);
        return if folded { EquilibriumCount::Five } else { EquilibriumCount::AtLeastThree };
    }
    EquilibriumCount::Degenerate
}

/// Two roots of λ₀(λ, ε) = ζ with their a-priori enclosures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    pub lambda1: f64,
    pub lambda2: f64,
    pub zeta: f64,
    pub bounds1: (f64, f64),
    pub bounds2: (f64, f64),
}

fn branch_hypothesis(xi: f64, epsilon: f64) -> Result<()> {
    if !(xi > 0.0 && xi.is_finite()) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("need xi > 0 and finite eps, got xi = {xi}, eps = {epsilon}")));
    }
    let upper = 0.25 * xi / (2.0 + xi);
    let lower = -(2.0 + xi) / (2.0 * xi);
    if epsilon >= upper {
        return Err(Error::NoBranches { xi, epsilon, threshold: upper });
    }
    if epsilon < lower {
        return Err(Error::NoBranches { xi, epsilon, threshold: lower });
    }
    Ok(())
}

/// Enclosures of λ₁ and λ₂.
pub fn branch_bounds(xi: f64, epsilon: f64) -> Result<((f64, f64), (f64, f64))> {
    branch_hypothesis(xi, epsilon)?;
    let k = 1.0 + 1.0 / xi;
    let big = xi * (1.0 + xi) / ((2.0 + xi) * (2.0 + xi));
    let c = 1.0 - 1.0 / (2.0 + xi);
    let e2 = epsilon * epsilon;
    if epsilon > 0.0 {
        Ok(((k * e2, 4.0 * k * e2), (big - 3.0 * c * epsilon, big - 2.0 * c * epsilon)))
    } else {
        let cubic = 2.0 * k * (1.0 + 2.0 / xi) * e2 * epsilon;
        Ok(((k * e2 + cubic, k * e2), (big - c * epsilon, big - 2.0 * c * epsilon)))
    }
}

pub fn lambda_branches(xi: f64, epsilon: f64) -> Result<BranchPair> {
    branch_hypothesis(xi, epsilon)?;
    let zeta = 1.0 / (1.0 + xi);
    let r = (2.0 + xi) / xi;
    let disc = 1.0 - 4.0 * epsilon * r;
    if !(disc > 0.0) {
        return Err(Error::NoBranches { xi, epsilon, threshold: 0.25 * xi / (2.0 + xi) });
    }
    let one_z = 1.0 + zeta;
    let lambda2 = (1.0 - zeta) / (2.0 * one_z * one_z) * (1.0 - 2.0 * epsilon * r + disc.sqrt());
    // product of the roots is ε²/(1+ζ)²
    let lambda1 = epsilon * epsilon / (one_z * one_z * lambda2);
    let (bounds1, bounds2) = branch_bounds(xi, epsilon)?;
    Ok(BranchPair { lambda1, lambda2, zeta, bounds1, bounds2 })
}

/// Location and value of max λ₀(·, ε) over λ > 0. For ε ≤ 0 the supremum 1 is
/// approached at λ = −ε/2 (at λ → 0⁺ when ε = 0).
pub fn lambda0_max(epsilon: f64) -> (f64, f64) {
    if epsilon > 0.0 {
        (0.5 * epsilon * (1.0 + 4.0 * epsilon), (1.0 - 4.0 * epsilon) / (1.0 + 4.0 * epsilon))
    } else {
        (-0.5 * epsilon, 1.0)
    }
}

/// λ₀ restricted to its real domain, for scans.
pub(crate) fn lambda0_or_nan(lambda: f64, epsilon: f64) -> f64 {
    lambda0(lambda, epsilon).unwrap_or(f64::NAN)
}
