//! wasm-bindgen bindings for the browser phase-plane demo. Every export takes
//! the `model` parameter block as a JSON string and returns JSON.

use glacier_dyn::equilibria::{find_equilibria_default, CriticalPoint};
use glacier_dyn::io::nullcline_table;
use glacier_dyn::simulator::{integrate_with, poincare_cycle_with, CycleOptions, SimOptions, Termination};
use glacier_dyn::stability::{classify, hopf_analysis};
use glacier_dyn::{ModelParams, State};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Samples per simulated trajectory sent back to the page.
const TRAJECTORY_SAMPLES: f64 = 2000.0;

#[derive(Serialize)]
struct Equilibrium {
    theta: f64,
    lambda: f64,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l1: Option<f64>,
}

#[derive(Serialize)]
struct PhasePlane {
    /// (θ, f(θ), g(θ))
    nullclines: Vec<(f64, f64, f64)>,
    equilibria: Vec<Equilibrium>,
}

#[derive(Serialize)]
struct Path {
    tau: Vec<f64>,
    theta: Vec<f64>,
    lambda: Vec<f64>,
    terminated: Termination,
}

#[derive(Serialize)]
struct Cycle {
    found: bool,
    mu0: Option<f64>,
    period: Option<f64>,
    amplitude_theta: Option<f64>,
    orbit: Vec<(f64, f64)>,
}

fn parse(params: &str) -> Result<ModelParams, String> {
    let p: ModelParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn phase_plane_json(
    params: &str,
    mu: f64,
    theta_min: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, String> {
    let p = parse(params)?;
    let nullclines = nullcline_table(&p, (theta_min, theta_max), points).map_err(|e| e.to_string())?;
    let equilibria = find_equilibria_default(&p)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|cp| {
            let hopf = hopf_analysis(&cp, p.alpha2, p.gamma).ok();
            Equilibrium {
                theta: cp.theta_c,
                lambda: cp.lambda_c,
                kind: classify(&cp, mu, p.alpha2, p.gamma).kind.name(),
                mu0: hopf.map(|h| h.mu0),
                l1: hopf.map(|h| h.l1),
            }
        })
        .collect();
    to_json(&PhasePlane { nullclines, equilibria })
}

pub fn simulate_json(params: &str, mu: f64, theta0: f64, lambda0: f64, t_end: f64) -> Result<String, String> {
    let p = parse(params)?;
    let opts = SimOptions { sample_dt: Some(t_end / TRAJECTORY_SAMPLES), ..SimOptions::default() };
    let traj = integrate_with(&p, mu, State::new(theta0, lambda0), t_end, &opts).map_err(|e| e.to_string())?;
    to_json(&Path {
        tau: traj.times.clone(),
        theta: traj.states.iter().map(|s| s.theta).collect(),
        lambda: traj.states.iter().map(|s| s.lambda).collect(),
        terminated: traj.terminated,
    })
}

/// Cycle around the equilibrium with g′ > f′ > 0 (the only one that can lose
/// stability through a Hopf point).
pub fn limit_cycle_json(params: &str, mu: f64) -> Result<String, String> {
    let p = parse(params)?;
    let eqs = find_equilibria_default(&p).map_err(|e| e.to_string())?;
    let Some(cp): Option<CriticalPoint> = eqs.into_iter().find(|c| c.g1 > c.f1 && c.f1 > 0.0) else {
        return to_json(&Cycle { found: false, mu0: None, period: None, amplitude_theta: None, orbit: vec![] });
    };
    let mu0 = hopf_analysis(&cp, p.alpha2, p.gamma).ok().map(|h| h.mu0);
    let lc = poincare_cycle_with(&p, mu, &cp, &CycleOptions::default()).map_err(|e| e.to_string())?;
    let out = match lc {
        Some(c) if c.converged => Cycle {
            found: true,
            mu0,
            period: Some(c.period),
            amplitude_theta: Some(c.amplitude_theta),
            orbit: c.orbit.iter().map(|s| (s.theta, s.lambda)).collect(),
        },
        _ => Cycle { found: false, mu0, period: None, amplitude_theta: None, orbit: vec![] },
    };
    to_json(&out)
}

#[wasm_bindgen]
pub fn phase_plane(params: &str, mu: f64, theta_min: f64, theta_max: f64, points: usize) -> Result<String, JsError> {
    phase_plane_json(params, mu, theta_min, theta_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(params: &str, mu: f64, theta0: f64, lambda0: f64, t_end: f64) -> Result<String, JsError> {
    simulate_json(params, mu, theta0, lambda0, t_end).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn limit_cycle(params: &str, mu: f64) -> Result<String, JsError> {
    limit_cycle_json(params, mu).map_err(|e| JsError::new(&e))
}
