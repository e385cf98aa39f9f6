//! Time integration of the simplified and regime-switching systems, limit
//! cycles via a Poincaré section, and μ sweeps.

use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria_default, CriticalPoint};
use crate::error::{Error, Result};
use crate::model::{mass_rate, regime_of, Regime};
use crate::ode::{Dense, Dopri5, StepError, Y};
use crate::params::{DimensionalState, ModelParams, Scales, State};
use crate::stability::{classify, jacobian, ClassKind};

pub const LAMBDA_FLOOR: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_TOL: f64 = 1e-11;
/// Width in τ to which regime switches are located.
pub const EVENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimModel {
    #[default]
    Simplified,
    Full,
}

impl std::str::FromStr for SimModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplified" => Ok(SimModel::Simplified),
            "full" => Ok(SimModel::Full),
            _ => Err(Error::Config(format!("unknown model '{s}' (simplified|full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    TimeLimit,
    LambdaFloor,
    ComplexSnowline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Empty for the simplified model.
    pub regimes: Vec<Regime>,
    pub terminated: Termination,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    /// (years, dimensional state) per sample.
    pub fn to_dimensional(&self, scales: &Scales) -> Vec<(f64, DimensionalState)> {
        self.times.iter().zip(&self.states).map(|(&t, s)| (scales.years(t), scales.to_dimensional(s))).collect()
    }

    fn push(&mut self, t: f64, y: Y, regime: Option<Regime>) {
        if self.times.last().is_some_and(|&last| t <= last) {
            return;
        }
        self.times.push(t);
        self.states.push(State::new(y[0], y[1]));
        if let Some(r) = regime {
            self.regimes.push(r);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub model: SimModel,
    /// Record on a uniform τ grid (plus switch points) instead of at step ends.
    pub sample_dt: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { rel_tol: DEFAULT_REL_TOL, abs_tol: DEFAULT_ABS_TOL, model: SimModel::Simplified, sample_dt: None }
    }
}

/// Simplified field with √λ continued by 0 below λ = 0 (stage evaluations only).
fn simplified_rhs(params: &ModelParams, mu: f64, y: &Y) -> Y {
    let (theta, lambda) = (y[0], y[1]);
    let xi = params.accum.value(theta);
    let sq = lambda.max(0.0).sqrt();
    let f = crate::model::energy_rate(params, mu, theta, lambda);
    [f, sq * ((1.0 + xi) * (1.0 - 4.0 * lambda) - 1.0)]
}

fn full_rhs(params: &ModelParams, mu: f64, regime: Regime, y: &Y) -> Option<Y> {
    let s = State::new(y[0], y[1]);
    let dl = if regime == Regime::Stagnant { -y[1].max(0.0).sqrt() } else { mass_rate(params, regime, s).ok()? };
    Some([crate::model::energy_rate(params, mu, y[0], y[1]), dl])
}

fn step_error(e: StepError) -> Error {
    match e {
        StepError::Underflow { t, h, y } => Error::Stiffness { tau: t, step: h, state: State::new(y[0], y[1]) },
        StepError::Domain { t, y } => Error::Domain(format!("vector field undefined at tau = {t}, state = {y:?}")),
    }
}

fn check_tolerances(rel_tol: f64, abs_tol: f64) -> Result<()> {
    for (name, v) in [("rel_tol", rel_tol), ("abs_tol", abs_tol)] {
        if !(1e-14..=1e-3).contains(&v) {
            return Err(Error::InvalidParams(format!("{name} = {v} outside [1e-14, 1e-3]")));
        }
    }
    Ok(())
}

/// Smallest t in (lo, hi] where `changed` holds, to width `tol`. Assumes
/// `changed(lo)` is false and `changed(hi)` true.
fn locate<P: FnMut(f64) -> bool>(mut changed: P, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if changed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

pub fn integrate(
    params: &ModelParams,
    mu: f64,
    initial: State,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
    model: SimModel,
) -> Result<Trajectory> {
    integrate_with(params, mu, initial, t_end, &SimOptions { rel_tol, abs_tol, model, sample_dt: None })
}

pub fn integrate_with(
    params: &ModelParams,
    mu: f64,
    initial: State,
    t_end: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    params.validate()?;
    check_tolerances(opts.rel_tol, opts.abs_tol)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("t_end must be positive, got {t_end}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("sample_dt must be positive, got {dt}")));
        }
    }
    if !(initial.theta.is_finite() && initial.lambda > LAMBDA_FLOOR && initial.lambda.is_finite()) {
        return Err(Error::Domain(format!("initial state {initial:?} outside the domain")));
    }
    match opts.model {
        SimModel::Simplified => {
            if initial.lambda > 0.25 {
                return Err(Error::Domain(format!("simplified model needs lambda <= 1/4, got {}", initial.lambda)));
            }
            run_simplified(params, mu, initial, t_end, opts)
        }
        SimModel::Full => run_full(params, mu, initial, t_end, opts),
    }
}

struct Recorder {
    traj: Trajectory,
    sample_dt: Option<f64>,
    t0: f64,
    n_sample: u64,
}

impl Recorder {
    fn new(t0: f64, y0: Y, regime: Option<Regime>, sample_dt: Option<f64>) -> Self {
        let mut traj =
            Trajectory { times: vec![], states: vec![], regimes: vec![], terminated: Termination::TimeLimit };
        traj.push(t0, y0, regime);
        Recorder { traj, sample_dt, t0, n_sample: 1 }
    }

    /// Records the part of `dense` up to `t_stop`; the end point is kept
    /// only when `keep_end` (always for step-end sampling).
    fn segment(&mut self, dense: &Dense, t_stop: f64, regime: Option<Regime>, keep_end: bool) {
        match self.sample_dt {
            None => self.traj.push(t_stop, dense.eval(t_stop), regime),
            Some(dt) => {
                loop {
                    let t = self.t0 + dt * self.n_sample as f64;
                    if t > t_stop {
                        break;
                    }
                    self.traj.push(t, dense.eval(t), regime);
                    self.n_sample += 1;
                }
                if keep_end {
                    self.traj.push(t_stop, dense.eval(t_stop), regime);
                }
            }
        }
    }
}

/// Handles the λ-floor check for an accepted step. Returns true when the
/// run terminated.
fn floor_hit(rec: &mut Recorder, dense: &Dense, regime: Option<Regime>) -> bool {
    if dense.end()[1] > LAMBDA_FLOOR {
        return false;
    }
    let (lo, _) = locate(|t| dense.eval(t)[1] <= LAMBDA_FLOOR, dense.t0, dense.t1, EVENT_TOL);
    rec.segment(dense, lo, regime, true);
    rec.traj.terminated = Termination::LambdaFloor;
    true
}

fn run_simplified(params: &ModelParams, mu: f64, initial: State, t_end: f64, opts: &SimOptions) -> Result<Trajectory> {
    let y0 = [initial.theta, initial.lambda];
    let rhs = |_: f64, y: &Y| Some(simplified_rhs(params, mu, y));
    let mut stepper = Dopri5::new(rhs, 0.0, y0, opts.rel_tol, opts.abs_tol).map_err(step_error)?;
    let mut rec = Recorder::new(0.0, y0, None, opts.sample_dt);
    while stepper.t() < t_end {
        let dense = stepper.step(t_end).map_err(step_error)?;
        if floor_hit(&mut rec, &dense, None) {
            return Ok(rec.traj);
        }
        rec.segment(&dense, dense.t1, None, dense.t1 >= t_end);
    }
    Ok(rec.traj)
}

fn run_full(params: &ModelParams, mu: f64, initial: State, t_end: f64, opts: &SimOptions) -> Result<Trajectory> {
    let y0 = [initial.theta, initial.lambda];
    let regime = std::cell::Cell::new(regime_of(params, initial)?);
    let rhs = |_: f64, y: &Y| full_rhs(params, mu, regime.get(), y);
    let mut stepper = Dopri5::new(rhs, 0.0, y0, opts.rel_tol, opts.abs_tol).map_err(step_error)?;
    let mut rec = Recorder::new(0.0, y0, Some(regime.get()), opts.sample_dt);
    let regime_at = |y: Y| regime_of(params, State::new(y[0], y[1]));

    while stepper.t() < t_end {
        let dense = stepper.step(t_end).map_err(step_error)?;
        let current = regime.get();
        if floor_hit(&mut rec, &dense, Some(current)) {
            return Ok(rec.traj);
        }
        let end_regime = regime_at(dense.end());
        if end_regime.as_ref().is_ok_and(|&r| r == current) {
            rec.segment(&dense, dense.t1, Some(current), dense.t1 >= t_end);
            continue;
        }
        // regime boundary (or a complex snow line) crossed inside this step
        let (lo, hi) =
            locate(|t| regime_at(dense.eval(t)).ok().is_none_or(|r| r != current), dense.t0, dense.t1, EVENT_TOL);
        rec.segment(&dense, lo, Some(current), false);
        let y_event = dense.eval(hi);
        match regime_at(y_event) {
            Ok(next) => {
                regime.set(next);
                rec.traj.push(hi, y_event, Some(next));
                stepper.reset(hi, y_event).map_err(step_error)?;
            }
            Err(Error::ComplexSnowline { .. }) => {
                rec.traj.push(lo, dense.eval(lo), Some(current));
                rec.traj.terminated = Termination::ComplexSnowline;
                return Ok(rec.traj);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rec.traj)
}

/// Closed periodic orbit found on the section θ = θ_c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub period: f64,
    pub amplitude_theta: f64,
    pub amplitude_lambda: f64,
    pub section_points: Vec<State>,
    pub converged: bool,
    /// One period sampled from the dense output.
    pub orbit: Vec<State>,
}

impl LimitCycle {
    /// Winding number of the sampled orbit around `p`.
    pub fn winding_number(&self, p: &State) -> i32 {
        let n = self.orbit.len();
        if n < 3 {
            return 0;
        }
        let mut total = 0.0;
        for i in 0..n {
            let a = self.orbit[i];
            let b = self.orbit[(i + 1) % n];
            let a0 = (a.lambda - p.lambda).atan2(a.theta - p.theta);
            let a1 = (b.lambda - p.lambda).atan2(b.theta - p.theta);
            let mut d = a1 - a0;
            if d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        }
        (total / (2.0 * std::f64::consts::PI)).round() as i32
    }

    pub fn encloses(&self, p: &State) -> bool {
        self.winding_number(p) != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub transient: f64,
    pub max_time: f64,
    /// Convergence threshold on successive section crossings in λ.
    pub tol: f64,
    pub perturbation: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Aitken extrapolation of the return map between rounds.
    pub accelerate: bool,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            transient: 0.0,
            max_time: 2e4,
            tol: 1e-8,
            perturbation: 1e-3,
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            accelerate: true,
        }
    }
}

/// Crossings closer than this to λ_c count as a collapsed cycle.
const COLLAPSE: f64 = 1e-7;

type BoxedRhs<'a> = Box<dyn FnMut(f64, &Y) -> Option<Y> + 'a>;

struct SectionFlow<'a> {
    stepper: Dopri5<BoxedRhs<'a>>,
    theta_c: f64,
    t_limit: f64,
}

enum Crossing {
    At(f64, Y),
    OutOfTime,
}

impl SectionFlow<'_> {
    /// Runs to the next upward crossing of θ = θ_c, handing each accepted
    /// step to `visit`.
    fn next_upward(&mut self, visit: &mut dyn FnMut(&Dense)) -> Result<Crossing> {
        while self.stepper.t() < self.t_limit {
            let dense = self.stepper.step(self.t_limit).map_err(step_error)?;
            if dense.end()[1] <= LAMBDA_FLOOR {
                return Err(Error::Domain(format!("cycle search reached the lambda floor at tau = {}", dense.t1)));
            }
            let s0 = dense.start()[0] - self.theta_c;
            let s1 = dense.end()[0] - self.theta_c;
            if s0 < 0.0 && s1 >= 0.0 {
                let (_, hi) =
                    locate(|t| dense.eval(t)[0] >= self.theta_c, dense.t0, dense.t1, 1e-13 * dense.t1.abs().max(1.0));
                let y = dense.eval(hi);
                visit(&dense);
                return Ok(Crossing::At(hi, [self.theta_c, y[1]]));
            }
            visit(&dense);
        }
        Ok(Crossing::OutOfTime)
    }
}

/// Unit direction for the initial kick: the unstable eigenvector for a real
/// positive eigenvalue, +θ otherwise.
fn kick_direction(params: &ModelParams, mu: f64, cp: &CriticalPoint) -> (f64, f64) {
    let Ok(j) = jacobian(cp, mu, params.alpha2, params.gamma) else {
        return (1.0, 0.0);
    };
    let ev = j.eigenvalues();
    if ev[0].im == 0.0 && ev[0].re > 0.0 {
        let r = ev[0].re;
        let (mut v0, mut v1) = (-j.a12, j.a11 - r);
        if v0.hypot(v1) < 1e-300 {
            (v0, v1) = (j.a22 - r, -j.a21);
        }
        let n = v0.hypot(v1);
        if n > 0.0 {
            let s = if v0 < 0.0 { -1.0 } else { 1.0 };
            return (s * v0 / n, s * v1 / n);
        }
    }
    (1.0, 0.0)
}

pub fn poincare_cycle(
    params: &ModelParams,
    mu: f64,
    cp: &CriticalPoint,
    transient: f64,
    max_time: f64,
    tol: f64,
) -> Result<Option<LimitCycle>> {
    poincare_cycle_with(params, mu, cp, &CycleOptions { transient, max_time, tol, ..CycleOptions::default() })
}

pub fn poincare_cycle_with(
    params: &ModelParams,
    mu: f64,
    cp: &CriticalPoint,
    opts: &CycleOptions,
) -> Result<Option<LimitCycle>> {
    params.validate()?;
    check_tolerances(opts.rel_tol, opts.abs_tol)?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    if !(cp.lambda_c > 0.0) || !(opts.tol > 0.0) || !(opts.max_time > opts.transient) {
        return Err(Error::InvalidParams("invalid critical point or cycle options".into()));
    }
    let (theta_c, lambda_c) = (cp.theta_c, cp.lambda_c);
    let (d0, d1) = kick_direction(params, mu, cp);
    let start = [theta_c + opts.perturbation * d0, lambda_c + opts.perturbation * d1];
    let rhs: BoxedRhs = Box::new(move |_: f64, y: &Y| Some(simplified_rhs(params, mu, y)));
    let stepper = Dopri5::new(rhs, 0.0, start, opts.rel_tol, opts.abs_tol).map_err(step_error)?;
    let mut flow = SectionFlow { stepper, theta_c, t_limit: opts.transient };

    // discard the transient
    while flow.stepper.t() < opts.transient {
        let dense = flow.stepper.step(opts.transient).map_err(step_error)?;
        if dense.end()[1] <= LAMBDA_FLOOR {
            return Err(Error::Domain("cycle search reached the lambda floor during the transient".into()));
        }
    }
    flow.t_limit = opts.max_time;

    let mut section = Vec::new();
    let mut times = Vec::new();
    let mut noop = |_: &Dense| {};
    let Crossing::At(t, y) = flow.next_upward(&mut noop)? else {
        return Ok(None);
    };
    section.push(State::new(y[0], y[1]));
    times.push(t);

    // P(x): restart on the section at λ = x and return the next crossing
    let mut ret = |flow: &mut SectionFlow,
                   t: f64,
                   x: f64,
                   section: &mut Vec<State>,
                   times: &mut Vec<f64>|
     -> Result<Option<(f64, f64)>> {
        flow.stepper.reset(t, [theta_c, x]).map_err(step_error)?;
        match flow.next_upward(&mut noop)? {
            Crossing::At(t1, y1) => {
                section.push(State::new(theta_c, y1[1]));
                times.push(t1);
                Ok(Some((t1, y1[1])))
            }
            Crossing::OutOfTime => Ok(None),
        }
    };

    let (mut t, mut x0) = (t, y[1]);
    let converged_at = loop {
        let mut xs = [x0, 0.0, 0.0, 0.0];
        for i in 1..4 {
            let Some((t1, x1)) = ret(&mut flow, t, xs[i - 1], &mut section, &mut times)? else {
                return Ok(None);
            };
            t = t1;
            xs[i] = x1;
        }
        if (1..4).all(|i| (xs[i] - xs[i - 1]).abs() < opts.tol) {
            break xs[3];
        }
        if (xs[3] - lambda_c).abs() < COLLAPSE && (xs[3] - lambda_c).abs() <= (xs[0] - lambda_c).abs() {
            return Ok(None);
        }
        x0 = xs[3];
        if opts.accelerate {
            let (d1, d2) = (xs[2] - xs[1], xs[3] - xs[2]);
            let q = d2 / d1;
            if d1 != 0.0 && q.abs() < 1.0 {
                let xa = xs[3] + d2 * q / (1.0 - q);
                if xa.is_finite() && xa > LAMBDA_FLOOR && xa < lambda_c {
                    if (xa - lambda_c).abs() < COLLAPSE {
                        return Ok(None);
                    }
                    x0 = xa;
                }
            }
        }
    };

    // five more returns for the period, sampling the last one
    let mut x = converged_at;
    let mut orbit = Vec::new();
    let mut cross_times = vec![t];
    for k in 0..5 {
        flow.stepper.reset(t, [theta_c, x]).map_err(step_error)?;
        let last = k == 4;
        let t_start = t;
        let mut visit = |d: &Dense| {
            if last {
                for j in 0..16 {
                    let tt = d.t0 + (d.t1 - d.t0) * f64::from(j) / 16.0;
                    if tt >= t_start {
                        let y = d.eval(tt);
                        orbit.push(State::new(y[0], y[1]));
                    }
                }
            }
        };
        match flow.next_upward(&mut visit)? {
            Crossing::At(t1, y1) => {
                section.push(State::new(theta_c, y1[1]));
                t = t1;
                x = y1[1];
                cross_times.push(t1);
            }
            Crossing::OutOfTime => return Ok(None),
        }
    }
    let period = (cross_times[5] - cross_times[0]) / 5.0;
    let (tmin, tmax) =
        orbit.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.theta), b.max(s.theta)));
    let (lmin, lmax) =
        orbit.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.lambda), b.max(s.lambda)));
    Ok(Some(LimitCycle {
        period,
        amplitude_theta: 0.5 * (tmax - tmin),
        amplitude_lambda: 0.5 * (lmax - lmin),
        section_points: section,
        converged: true,
        orbit,
    }))
}

/// θ-amplitude of the cycle at each μ; `None` where no cycle converged.
pub fn amplitude_curve(params: &ModelParams, cp: &CriticalPoint, mus: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    amplitude_curve_with(params, cp, mus, &CycleOptions::default())
}

pub fn amplitude_curve_with(
    params: &ModelParams,
    cp: &CriticalPoint,
    mus: &[f64],
    opts: &CycleOptions,
) -> Result<Vec<(f64, Option<f64>)>> {
    let one = |&mu: &f64| -> Result<(f64, Option<f64>)> {
        Ok((mu, poincare_cycle_with(params, mu, cp, opts)?.map(|c| c.amplitude_theta)))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        mus.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        mus.iter().map(one).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub theta_c: f64,
    /// `None` when the equilibrium was lost during continuation.
    pub kind: Option<ClassKind>,
    pub period: Option<f64>,
    pub amplitude_theta: Option<f64>,
    pub amplitude_lambda: Option<f64>,
}

impl SweepRow {
    pub fn kind_name(&self) -> &'static str {
        self.kind.map_or("Degenerate", ClassKind::name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub rows: Vec<SweepRow>,
}

/// Continuation tolerance on θ between grid points.
const CONTINUATION_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-10;

/// Sweeps the equilibrium with g′ > f′ > 0 if there is one, else the first.
pub fn sweep_mu(params: &ModelParams, mu_grid: &[f64]) -> Result<BifurcationDiagram> {
    let eqs = find_equilibria_default(params)?;
    let pick = eqs.iter().find(|c| c.g1 > c.f1 && c.f1 > 0.0).or(eqs.first());
    let Some(cp) = pick else {
        return Err(Error::Domain("no equilibria in the scan range".into()));
    };
    sweep_mu_at(params, cp.theta_c, mu_grid, &CycleOptions::default())
}

pub fn sweep_mu_at(
    params: &ModelParams,
    theta_start: f64,
    mu_grid: &[f64],
    opts: &CycleOptions,
) -> Result<BifurcationDiagram> {
    if mu_grid.is_empty() || mu_grid.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidParams("mu grid must be nonempty and positive".into()));
    }
    let mut grid = mu_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    // continuation by nearest θ; nullclines do not depend on μ, so each row
    // only re-verifies the residual of the tracked point
    let mut theta = theta_start;
    let mut tracked: Vec<(f64, Option<CriticalPoint>)> = Vec::with_capacity(grid.len());
    let eqs = find_equilibria_default(params)?;
    for &mu in &grid {
        let near = eqs.iter().min_by(|a, b| (a.theta_c - theta).abs().total_cmp(&(b.theta_c - theta).abs()));
        let cp =
            near.filter(|c| (c.theta_c - theta).abs() <= CONTINUATION_TOL && c.residual(params).abs() <= RESIDUAL_TOL);
        if let Some(c) = cp {
            theta = c.theta_c;
        }
        tracked.push((mu, cp.copied()));
    }

    let row = |(mu, cp): &(f64, Option<CriticalPoint>)| -> Result<SweepRow> {
        let mut row = SweepRow {
            mu: *mu,
            theta_c: theta_start,
            kind: None,
            period: None,
            amplitude_theta: None,
            amplitude_lambda: None,
        };
        let Some(cp) = cp else {
            return Ok(row);
        };
        row.theta_c = cp.theta_c;
        let kind = classify(cp, *mu, params.alpha2, params.gamma).kind;
        row.kind = Some(kind);
        if matches!(kind, ClassKind::UnstableFocus | ClassKind::UnstableNode) {
            // a cycle search that escapes the domain just leaves the columns empty
            if let Ok(Some(c)) = poincare_cycle_with(params, *mu, cp, opts) {
                row.period = Some(c.period);
                row.amplitude_theta = Some(c.amplitude_theta);
                row.amplitude_lambda = Some(c.amplitude_lambda);
            }
        }
        Ok(row)
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        tracked.par_iter().map(row).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = tracked.iter().map(row).collect::<Result<Vec<_>>>()?;
    Ok(BifurcationDiagram { rows })
}
