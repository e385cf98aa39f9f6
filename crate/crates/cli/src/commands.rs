use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use glacier_dyn::equilibria::{find_equilibria_default, CriticalPoint};
use glacier_dyn::io::{
    fmt_f64, load_config_file, nullcline_table, parse_override, write_nullcline_csv, write_sweep_csv,
    write_trajectory_csv, ConfigFile, Resolved,
};
use glacier_dyn::simulator::{integrate_with, sweep_mu, SimModel, SimOptions, Termination, LAMBDA_FLOOR};
use glacier_dyn::stability::{
    center_manifold, classify, hopf_analysis, is_tangent, mu_thresholds, CenterManifold, HopfData, MuThresholds,
};
use glacier_dyn::verify::{run_suite, DEFAULT_SEED};
use glacier_dyn::{Error, State};
use serde::Serialize;

use crate::{exit, Common, Format};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(String),
    Other(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Domain(_) => exit::DOMAIN,
            CliError::Other(_) => exit::OTHER,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Domain(m) => write!(f, "domain: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParams(_) | Error::Scale { .. } => CliError::Config(e.to_string()),
            Error::Domain(_) | Error::ComplexSnowline { .. } | Error::Stiffness { .. } => {
                CliError::Domain(e.to_string())
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

type CliResult = Result<u8, CliError>;

fn load(common: &Common) -> Result<ConfigFile, CliError> {
    let overrides = common.set.iter().map(|s| parse_override(s)).collect::<glacier_dyn::Result<Vec<_>>>()?;
    Ok(load_config_file(&common.params, &overrides)?)
}

fn resolve(common: &Common) -> Result<Resolved, CliError> {
    Ok(load(common)?.resolve()?)
}

fn output(common: &Common) -> Result<Box<dyn Write>, CliError> {
    Ok(match &common.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(common: &Common, value: &T) -> Result<(), CliError> {
    let mut w = output(common)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn required_mu(flag: Option<f64>, resolved: &Resolved) -> Result<f64, CliError> {
    flag.or(resolved.mu())
        .ok_or_else(|| CliError::Config("mu is not set (use --mu, simulation.mu or a physical block)".into()))
}

#[derive(Serialize)]
struct ScalesReport {
    #[serde(rename = "T_star_K")]
    t_star_kelvin: f64,
    #[serde(rename = "L_star_km")]
    l_star_km: f64,
    t_star_years: f64,
    epsilon: f64,
    beta: f64,
    mu: f64,
    #[serde(rename = "H_sqrt_m")]
    h: f64,
    m_rate_m_per_yr: f64,
}

pub fn scales(common: &Common) -> CliResult {
    let cfg = load(common)?;
    let phys =
        cfg.physical.as_ref().ok_or_else(|| CliError::Config("no `physical` block in the parameter file".into()))?;
    let (model, sc) = glacier_dyn::params::nondimensionalize(phys)?;
    let r = ScalesReport {
        t_star_kelvin: sc.T_star,
        l_star_km: sc.L_star / 1e3,
        t_star_years: sc.t_star,
        epsilon: model.epsilon,
        beta: model.beta,
        mu: sc.mu,
        h: phys.profile_coefficient(),
        m_rate_m_per_yr: phys.m_rate,
    };
    let rows: [(&str, f64, &str); 8] = [
        ("T*", r.t_star_kelvin, "K"),
        ("L*", r.l_star_km, "km"),
        ("t*", r.t_star_years, "yr"),
        ("epsilon", r.epsilon, ""),
        ("beta", r.beta, ""),
        ("mu", r.mu, ""),
        ("H", r.h, "m^1/2"),
        ("m_rate", r.m_rate_m_per_yr, "m/yr"),
    ];
    match common.format {
        Some(Format::Json) => write_json(common, &r)?,
        Some(Format::Csv) => {
            let mut w = output(common)?;
            writeln!(w, "quantity,value,unit")?;
            for (name, v, unit) in rows {
                writeln!(w, "{name},{},{unit}", fmt_f64(v))?;
            }
            w.flush()?;
        }
        None => {
            let mut w = output(common)?;
            for (name, v, unit) in rows {
                writeln!(w, "{name:<8} {v:>14.6} {unit}")?;
            }
            w.flush()?;
        }
    }
    Ok(exit::OK)
}

#[derive(Serialize)]
struct EquilibriumReport {
    #[serde(flatten)]
    point: CriticalPoint,
    mu: f64,
    kind: &'static str,
    stable: bool,
    thresholds: Option<MuThresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hopf: Option<HopfData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center_manifold: Option<CenterManifold>,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn analyze(common: &Common, mu: Option<f64>) -> CliResult {
    let res = resolve(common)?;
    let mu = required_mu(mu, &res)?;
    let p = &res.model;
    let eqs = find_equilibria_default(p)?;
    if eqs.is_empty() {
        eprintln!("warning: no equilibria in the scan range");
    }
    let rows: Vec<EquilibriumReport> = eqs
        .into_iter()
        .map(|cp| {
            let kind = classify(&cp, mu, p.alpha2, p.gamma).kind;
            EquilibriumReport {
                point: cp,
                mu,
                kind: kind.name(),
                stable: kind.is_stable(),
                thresholds: mu_thresholds(&cp, p.alpha2, p.gamma).ok(),
                hopf: hopf_analysis(&cp, p.alpha2, p.gamma).ok(),
                center_manifold: is_tangent(&cp).then(|| center_manifold(&cp, mu, p.alpha2, p.gamma).ok()).flatten(),
            }
        })
        .collect();
    match common.format {
        Some(Format::Csv) => {
            let mut w = output(common)?;
            writeln!(w, "theta_c,lambda_c,f1,g1,mu,kind,mu1,mu0,mu2,omega0,l1")?;
            for r in &rows {
                let th = r.thresholds.unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    fmt_f64(r.point.theta_c),
                    fmt_f64(r.point.lambda_c),
                    fmt_f64(r.point.f1),
                    fmt_f64(r.point.g1),
                    fmt_f64(r.mu),
                    r.kind,
                    opt(th.mu1),
                    opt(th.mu0),
                    opt(th.mu2),
                    opt(th.omega0),
                    opt(r.hopf.map(|h| h.l1)),
                )?;
            }
            w.flush()?;
        }
        _ => write_json(common, &rows)?,
    }
    Ok(exit::OK)
}

pub struct SimulateArgs {
    pub mu: Option<f64>,
    pub t_end: Option<f64>,
    pub model: Option<SimModel>,
    pub dimensional: bool,
    pub epsilon: Option<f64>,
}

pub fn simulate(common: &Common, args: &SimulateArgs) -> CliResult {
    let mut res = resolve(common)?;
    if let Some(eps) = args.epsilon {
        res.model.epsilon = eps;
    }
    let mu = required_mu(args.mu, &res)?;
    let t_end = args
        .t_end
        .or(res.simulation.t_end)
        .ok_or_else(|| CliError::Config("t_end is not set (use --t-end or simulation.t_end)".into()))?;
    let model = args.model.or(res.simulation.model).unwrap_or_default();
    let initial: State = res
        .simulation
        .initial
        .ok_or_else(|| CliError::Config("initial state is not set (simulation.initial)".into()))?;
    let lambda_max = if model == SimModel::Simplified { 0.25 } else { f64::INFINITY };
    if !(initial.theta.is_finite() && initial.lambda > LAMBDA_FLOOR && initial.lambda <= lambda_max) {
        return Err(CliError::Config(format!(
            "initial state (theta = {}, lambda = {}) must have lambda in ({LAMBDA_FLOOR}, {lambda_max}]",
            initial.theta, initial.lambda
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CliError::Config(format!("t_end must be positive, got {t_end}")));
    }
    let scales = if args.dimensional {
        Some(res.scales.ok_or_else(|| CliError::Config("--dimensional needs a `physical` block".into()))?)
    } else {
        None
    };
    let opts = SimOptions { model, sample_dt: res.simulation.sample_dt, ..SimOptions::default() };
    let traj = integrate_with(&res.model, mu, initial, t_end, &opts)?;
    match common.format {
        Some(Format::Json) => write_json(common, &traj)?,
        _ => {
            let mut w = output(common)?;
            write_trajectory_csv(&mut w, &traj, scales.as_ref())?;
            w.flush()?;
        }
    }
    Ok(match traj.terminated {
        Termination::TimeLimit => exit::OK,
        Termination::LambdaFloor | Termination::ComplexSnowline => {
            eprintln!("terminated early: {:?} at tau = {}", traj.terminated, traj.times.last().copied().unwrap_or(0.0));
            exit::DOMAIN
        }
    })
}

pub fn sweep(common: &Common, mu_min: Option<f64>, mu_max: Option<f64>, points: usize) -> CliResult {
    let res = resolve(common)?;
    let p = &res.model;
    let mu0 =
        find_equilibria_default(p)?.iter().find_map(|cp| hopf_analysis(cp, p.alpha2, p.gamma).ok()).map(|h| h.mu0);
    let (lo, hi) = match (mu_min.or(mu0.map(|m| 0.5 * m)), mu_max.or(mu0.map(|m| 1.5 * m))) {
        (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => (lo, hi),
        (Some(lo), Some(hi)) => return Err(CliError::Config(format!("need 0 < mu_min < mu_max, got {lo}, {hi}"))),
        _ => return Err(CliError::Config("no Hopf point to center the grid on; pass --mu-min and --mu-max".into())),
    };
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let diagram = sweep_mu(p, &grid)?;
    match common.format {
        Some(Format::Json) => write_json(common, &diagram)?,
        _ => {
            let mut w = output(common)?;
            write_sweep_csv(&mut w, &diagram)?;
            w.flush()?;
        }
    }
    Ok(exit::OK)
}

#[derive(Serialize)]
struct NullclineRow {
    theta: f64,
    f: f64,
    g: f64,
}

pub fn nullclines(common: &Common, range: (f64, f64), points: usize) -> CliResult {
    let res = resolve(common)?;
    let rows = nullcline_table(&res.model, range, points)?;
    match common.format {
        Some(Format::Json) => {
            let rows: Vec<NullclineRow> = rows.iter().map(|&(theta, f, g)| NullclineRow { theta, f, g }).collect();
            write_json(common, &rows)?
        }
        _ => {
            let mut w = output(common)?;
            write_nullcline_csv(&mut w, &rows)?;
            w.flush()?;
        }
    }
    Ok(exit::OK)
}

pub fn verify(common: &Common, mu: Option<f64>, seed: Option<u64>) -> CliResult {
    let res = resolve(common)?;
    let mu = mu.or(res.mu()).unwrap_or(1.0);
    let report = run_suite(&res.model, mu, seed.unwrap_or(DEFAULT_SEED))?;
    match common.format {
        Some(Format::Json) => write_json(common, &report)?,
        _ => {
            let mut w = output(common)?;
            writeln!(w, "seed {}", report.seed)?;
            writeln!(w, "{:<52} {:>6} {:>11} {:>9}  status", "check", "cases", "max error", "tol")?;
            for c in &report.checks {
                let status = if c.passed { "ok" } else { "FAILED" };
                writeln!(w, "{:<52} {:>6} {:>11.3e} {:>9.1e}  {status}", c.name, c.cases, c.max_error, c.tolerance)?;
                if let Some(note) = &c.note {
                    writeln!(w, "    {note}")?;
                }
            }
            w.flush()?;
        }
    }
    Ok(if report.all_passed() { exit::OK } else { exit::VERIFY })
}
