//! Independent numerical counterparts of the closed forms: finite-difference
//! Jacobians, a normal-form Lyapunov coefficient and brute-force root scans.

use serde::{Deserialize, Serialize};

use crate::equilibria::{lambda0_or_nan, CriticalPoint};
use crate::error::{Error, Result};
use crate::model::{field_partials, vector_field};
use crate::params::{ModelParams, State};
use crate::roots::{bisect, golden_max};
use crate::stability::Jacobian2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub base_step: f64,
    /// Number of step sizes h, h/2, ... combined by Richardson extrapolation;
    /// 1 means a plain central difference.
    pub richardson_levels: u32,
    /// Differentiate the analytic first partials instead of raw field values.
    pub hybrid: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { base_step: 1e-4, richardson_levels: 2, hybrid: true }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-7..=1e-2).contains(&self.base_step) || !(1..=4).contains(&self.richardson_levels) {
            return Err(Error::InvalidParams(format!("invalid FD configuration {self:?}")));
        }
        Ok(())
    }
}

/// Richardson table for an estimator whose error expands in even powers of h.
fn richardson<F: FnMut(f64) -> Result<f64>>(mut est: F, h: f64, levels: u32) -> Result<f64> {
    let n = levels as usize;
    let mut row: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        row.push(est(h / f64::from(1u32 << i))?);
    }
    for j in 1..n {
        let factor = 4f64.powi(j as i32);
        for i in (j..n).rev() {
            row[i] = (factor * row[i] - row[i - 1]) / (factor - 1.0);
        }
    }
    Ok(row[n - 1])
}

pub fn fd_jacobian(params: &ModelParams, mu: f64, s: State, cfg: &FdConfig) -> Result<Jacobian2> {
    cfg.validate()?;
    let h = cfg.base_step;
    if s.lambda - h <= 0.0 {
        return Err(Error::Domain(format!("lambda = {} leaves no margin for step {h}", s.lambda)));
    }
    let field = |th: f64, l: f64| vector_field(params, mu, State::new(th, l));
    let d_theta = |k: usize| {
        richardson(
            |hh| {
                let p = field(s.theta + hh, s.lambda)?;
                let m = field(s.theta - hh, s.lambda)?;
                Ok(if k == 0 { p.0 - m.0 } else { p.1 - m.1 } / (2.0 * hh))
            },
            h,
            cfg.richardson_levels,
        )
    };
    let d_lambda = |k: usize| {
        richardson(
            |hh| {
                let p = field(s.theta, s.lambda + hh)?;
                let m = field(s.theta, s.lambda - hh)?;
                Ok(if k == 0 { p.0 - m.0 } else { p.1 - m.1 } / (2.0 * hh))
            },
            h,
            cfg.richardson_levels,
        )
    };
    Ok(Jacobian2 { a11: d_theta(0)?, a12: d_lambda(0)?, a21: d_theta(1)?, a22: d_lambda(1)? })
}

/// Coordinates in which the linearization at μ₀ is a pure rotation:
/// θ = θ_c + (ψ − bκ)/g′, λ = λ_c + ψ, with ψ̇ = −ω₀κ + P, κ̇ = ω₀ψ + Q.
struct RotatingFrame<'a> {
    params: &'a ModelParams,
    cp: &'a CriticalPoint,
    mu0: f64,
    omega0: f64,
    b: f64,
}

impl RotatingFrame<'_> {
    fn state(&self, psi: f64, kappa: f64) -> State {
        State::new(self.cp.theta_c + (psi - self.b * kappa) / self.cp.g1, self.cp.lambda_c + psi)
    }

    /// (P, Q) including their (irrelevant) linear parts.
    fn pq(&self, psi: f64, kappa: f64) -> Result<(f64, f64)> {
        let (f, g) = vector_field(self.params, self.mu0, self.state(psi, kappa))?;
        Ok((g + self.omega0 * kappa, (g - self.cp.g1 * f) / self.b - self.omega0 * psi))
    }

    /// [[P_ψ, P_κ], [Q_ψ, Q_κ]] from the analytic field partials.
    fn pq_grad(&self, psi: f64, kappa: f64) -> Result<[[f64; 2]; 2]> {
        let [[f_t, f_l], [g_t, g_l]] = field_partials(self.params, self.mu0, self.state(psi, kappa))?;
        let g1 = self.cp.g1;
        let (g_psi, g_kap) = (g_t / g1 + g_l, -self.b * g_t / g1);
        let (f_psi, f_kap) = (f_t / g1 + f_l, -self.b * f_t / g1);
        Ok([[g_psi, g_kap + self.omega0], [(g_psi - g1 * f_psi) / self.b - self.omega0, (g_kap - g1 * f_kap) / self.b]])
    }
}

/// Partials of P and Q at the origin needed by the normal-form formula.
#[derive(Debug, Clone, Copy, Default)]
struct Partials {
    p_ss: f64,
    p_sk: f64,
    p_kk: f64,
    q_ss: f64,
    q_sk: f64,
    q_kk: f64,
    p_sss: f64,
    p_skk: f64,
    q_ssk: f64,
    q_kkk: f64,
}

fn hybrid_partials(fr: &RotatingFrame, h: f64, levels: u32) -> Result<Partials> {
    // first differences along one axis of an analytic gradient entry
    let d1 = |row: usize, col: usize, axis: usize| {
        richardson(
            |hh| {
                let (dp, dk) = if axis == 0 { (hh, 0.0) } else { (0.0, hh) };
                Ok((fr.pq_grad(dp, dk)?[row][col] - fr.pq_grad(-dp, -dk)?[row][col]) / (2.0 * hh))
            },
            h,
            levels,
        )
    };
    let d2 = |row: usize, col: usize, axis: usize| {
        let c = fr.pq_grad(0.0, 0.0).map(|g| g[row][col]);
        richardson(
            |hh| {
                let (dp, dk) = if axis == 0 { (hh, 0.0) } else { (0.0, hh) };
                let c = c.clone()?;
                Ok((fr.pq_grad(dp, dk)?[row][col] - 2.0 * c + fr.pq_grad(-dp, -dk)?[row][col]) / (hh * hh))
            },
            h,
            levels,
        )
    };
    Ok(Partials {
        p_ss: d1(0, 0, 0)?,
        p_sk: d1(0, 0, 1)?,
        p_kk: d1(0, 1, 1)?,
        q_ss: d1(1, 0, 0)?,
        q_sk: d1(1, 0, 1)?,
        q_kk: d1(1, 1, 1)?,
        p_sss: d2(0, 0, 0)?,
        p_skk: d2(0, 0, 1)?,
        q_ssk: d2(1, 1, 0)?,
        q_kkk: d2(1, 1, 1)?,
    })
}

fn pure_partials(fr: &RotatingFrame, h: f64, levels: u32) -> Result<Partials> {
    let v = |s: f64, k: f64, which: usize| fr.pq(s, k).map(|(p, q)| if which == 0 { p } else { q });
    let second = |which: usize, kind: usize| {
        richardson(
            |hh| {
                Ok(match kind {
                    0 => (v(hh, 0.0, which)? - 2.0 * v(0.0, 0.0, which)? + v(-hh, 0.0, which)?) / (hh * hh),
                    1 => {
                        (v(hh, hh, which)? - v(hh, -hh, which)? - v(-hh, hh, which)? + v(-hh, -hh, which)?)
                            / (4.0 * hh * hh)
                    }
                    _ => (v(0.0, hh, which)? - 2.0 * v(0.0, 0.0, which)? + v(0.0, -hh, which)?) / (hh * hh),
                })
            },
            h,
            levels,
        )
    };
    // 5-point third derivative along an axis
    let third_axis = |which: usize, axis: usize| {
        richardson(
            |hh| {
                let at = |t: f64| if axis == 0 { v(t, 0.0, which) } else { v(0.0, t, which) };
                Ok((at(2.0 * hh)? - 2.0 * at(hh)? + 2.0 * at(-hh)? - at(-2.0 * hh)?) / (2.0 * hh * hh * hh))
            },
            h,
            levels,
        )
    };
    // ∂_a ∂_b² by central difference in a of second differences in b
    let third_mixed = |which: usize, a_axis: usize| {
        richardson(
            |hh| {
                let pt = |a: f64, b: f64| if a_axis == 0 { v(a, b, which) } else { v(b, a, which) };
                let sec = |a: f64| -> Result<f64> { Ok((pt(a, hh)? - 2.0 * pt(a, 0.0)? + pt(a, -hh)?) / (hh * hh)) };
                Ok((sec(hh)? - sec(-hh)?) / (2.0 * hh))
            },
            h,
            levels,
        )
    };
    Ok(Partials {
        p_ss: second(0, 0)?,
        p_sk: second(0, 1)?,
        p_kk: second(0, 2)?,
        q_ss: second(1, 0)?,
        q_sk: second(1, 1)?,
        q_kk: second(1, 2)?,
        p_sss: third_axis(0, 0)?,
        p_skk: third_mixed(0, 0)?,
        q_ssk: third_mixed(1, 1)?,
        q_kkk: third_axis(1, 1)?,
    })
}

/// First Lyapunov coefficient from finite differences of the vector field in
/// rotating coordinates.
pub fn numeric_l1(params: &ModelParams, cp: &CriticalPoint, cfg: &FdConfig) -> Result<f64> {
    cfg.validate()?;
    if !(cp.g1 > cp.f1 && cp.f1 > 0.0) {
        return Err(Error::NotHopfCandidate { f1: cp.f1, g1: cp.g1 });
    }
    let b2 = cp.g1 / cp.f1 - 1.0;
    if b2 < 1e-8 {
        return Err(Error::Conditioning(format!("g'/f' - 1 = {b2:e} is too close to zero")));
    }
    let b = b2.sqrt();
    let rho = cp.rho();
    let fr = RotatingFrame { params, cp, mu0: rho / (params.alpha2 * params.gamma * cp.f1), omega0: rho * b, b };
    let reach = 2.0 * cfg.base_step;
    if cp.lambda_c - reach <= 0.0 {
        return Err(Error::Domain(format!("lambda_c = {} leaves no margin for the stencil", cp.lambda_c)));
    }
    let d = if cfg.hybrid {
        hybrid_partials(&fr, cfg.base_step, cfg.richardson_levels)?
    } else {
        pure_partials(&fr, cfg.base_step, cfg.richardson_levels)?
    };
    let w = fr.omega0;
    let cubic = d.p_sss + d.p_skk + d.q_ssk + d.q_kkk;
    let quad = d.p_sk * (d.p_ss + d.p_kk) - d.q_sk * (d.q_ss + d.q_kk) - d.p_ss * d.q_ss + d.p_kk * d.q_kk;
    Ok(cubic / (8.0 * w) + quad / (8.0 * w * w))
}

/// Roots of λ₀(λ, ε) = 1/(1+ξ) found by scanning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScannedBranches {
    pub lambda1: f64,
    pub lambda2: f64,
    /// λ₁ = 0 sits on the boundary of the scan (ε = 0) and was not bracketed.
    pub lambda1_at_boundary: bool,
}

/// Uniform grid on (lo, 1] with a logarithmic head resolving λ → 0.
fn scan_grid(lo: f64) -> Vec<f64> {
    let n = 10_000;
    let mut pts: Vec<f64> =
        (0..=280).map(|i| 10f64.powf(-14.0 + 10.0 * f64::from(i) / 280.0)).filter(|&x| x > lo).collect();
    pts.extend((1..=n).map(|i| f64::from(i) / f64::from(n)).filter(|&x| x > lo));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

pub fn bisect_lambda_branches(xi: f64, epsilon: f64) -> Result<ScannedBranches> {
    let zeta = 1.0 / (1.0 + xi);
    let h = |l: f64| lambda0_or_nan(l, epsilon) - zeta;
    let lo = (-0.5 * (epsilon + 0.25)).max(0.0);
    let grid = scan_grid(lo);
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let (ha, hb) = (h(w[0]), h(w[1]));
        if ha.is_nan() || hb.is_nan() {
            continue;
        }
        if ha == 0.0 {
            roots.push(w[0]);
        } else if ha * hb < 0.0 {
            roots.push(bisect(h, w[0], w[1]));
        }
    }
    match roots.as_slice() {
        [a, b] => Ok(ScannedBranches { lambda1: *a, lambda2: *b, lambda1_at_boundary: false }),
        [b] if epsilon == 0.0 => Ok(ScannedBranches { lambda1: 0.0, lambda2: *b, lambda1_at_boundary: true }),
        _ => Err(Error::OracleMismatch(format!(
            "expected two roots of lambda0 = zeta for xi = {xi}, eps = {epsilon}, found {roots:?}"
        ))),
    }
}

/// Grid maximum of λ₀(·, ε) refined by golden-section search.
pub fn grid_max_lambda0(epsilon: f64) -> (f64, f64) {
    let val = |l: f64| {
        let v = lambda0_or_nan(l, epsilon);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let lo = (-0.5 * (epsilon + 0.25)).max(0.0);
    let grid = scan_grid(lo);
    let (imax, _) = grid.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &x)| {
        let v = val(x);
        if v > acc.1 {
            (i, v)
        } else {
            acc
        }
    });
    let a = if imax == 0 { lo.max(grid[0] * 0.5) } else { grid[imax - 1] };
    let b = grid[(imax + 1).min(grid.len() - 1)];
    let x = golden_max(val, a, b, 1e-15 * b.max(1e-300));
    (x, val(x))
}
