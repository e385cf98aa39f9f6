//! Parameter files, dotted overrides, and CSV export/import.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{nullcline_f, nullcline_g, Regime};
use crate::params::{nondimensionalize, ModelParams, PhysicalParams, Scales, State};
use crate::simulator::{BifurcationDiagram, SimModel, Termination, Trajectory};

/// Run settings that have no home in the parameter records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SimModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
}

/// On-disk parameter file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSettings>,
}

/// Model parameters ready for analysis, with scales when a physical block
/// was given.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelParams,
    pub scales: Option<Scales>,
    pub simulation: SimulationSettings,
}

impl Resolved {
    /// μ from the simulation block, else from the physical scales.
    pub fn mu(&self) -> Option<f64> {
        self.simulation.mu.or(self.scales.map(|s| s.mu))
    }
}

impl ConfigFile {
    /// An explicit `model` block wins over the one derived from `physical`.
    pub fn resolve(&self) -> Result<Resolved> {
        let derived = self.physical.as_ref().map(nondimensionalize).transpose()?;
        let scales = derived.as_ref().map(|(_, s)| *s);
        let model = match (&self.model, derived) {
            (Some(m), _) => m.clone(),
            (None, Some((m, _))) => m,
            (None, None) => return Err(Error::Config("neither a `model` nor a `physical` block is present".into())),
        };
        model.validate()?;
        Ok(Resolved { model, scales, simulation: self.simulation.clone().unwrap_or_default() })
    }
}

/// Splits `a.b.c=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) =
        s.split_once('=').ok_or_else(|| Error::Config(format!("override '{s}' is not of the form key=value")))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("malformed override key '{k}'")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// JSON literal if it parses as one, otherwise a bare string (`family=erf`).
fn override_value(v: &str) -> Value {
    serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{}' is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        node = obj.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses a parameter file and applies overrides. Keys are checked by
/// re-reading the result with unknown fields denied.
pub fn load_config(text: &str, overrides: &[(String, String)]) -> Result<ConfigFile> {
    if text.trim().is_empty() {
        return Err(Error::Config("parameter file is empty".into()));
    }
    let typed: ConfigFile = serde_json::from_str(text)?;
    if overrides.is_empty() {
        return Ok(typed);
    }
    let mut value = serde_json::to_value(&typed)?;
    for (k, v) in overrides {
        set_path(&mut value, k, override_value(v))?;
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("after overrides: {e}")))
}

pub fn load_config_file(path: &std::path::Path, overrides: &[(String, String)]) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    load_config(&text, overrides)
}

/// 17 significant digits: parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Columns `tau,theta,lambda[,regime]`, plus `t_years,T_kelvin,l_km` when
/// `scales` is given.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, scales: Option<&Scales>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let with_regime = !traj.regimes.is_empty();
    let mut header = vec!["tau", "theta", "lambda"];
    if with_regime {
        header.push("regime");
    }
    if scales.is_some() {
        header.extend(["t_years", "T_kelvin", "l_km"]);
    }
    out.write_record(&header)?;
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut rec = vec![fmt_f64(*t), fmt_f64(s.theta), fmt_f64(s.lambda)];
        if with_regime {
            rec.push(traj.regimes[i].name().to_string());
        }
        if let Some(sc) = scales {
            let d = sc.to_dimensional(s);
            rec.extend([fmt_f64(sc.years(*t)), fmt_f64(d.temperature), fmt_f64(d.extent / 1e3)]);
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the nondimensional columns back; extra columns are ignored.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(it), Some(ith), Some(il)) = (col("tau"), col("theta"), col("lambda")) else {
        return Err(Error::Config("trajectory CSV needs tau, theta and lambda columns".into()));
    };
    let ir = col("regime");
    let num = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| Error::Config(format!("bad number in column {i}: {e}")))
    };
    let mut traj = Trajectory { times: vec![], states: vec![], regimes: vec![], terminated: Termination::TimeLimit };
    for rec in rd.records() {
        let rec = rec?;
        traj.times.push(num(&rec, it)?);
        traj.states.push(State::new(num(&rec, ith)?, num(&rec, il)?));
        if let Some(i) = ir {
            let r: Regime = rec.get(i).unwrap_or("").parse()?;
            traj.regimes.push(r);
        }
    }
    Ok(traj)
}

pub fn write_sweep_csv<W: Write>(w: W, diagram: &BifurcationDiagram) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["mu", "theta_c", "kind", "period", "amplitude_theta", "amplitude_lambda"])?;
    for r in &diagram.rows {
        out.write_record([
            fmt_f64(r.mu),
            fmt_f64(r.theta_c),
            r.kind_name().to_string(),
            fmt_opt(r.period),
            fmt_opt(r.amplitude_theta),
            fmt_opt(r.amplitude_lambda),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// (θ, f(θ), g(θ)) on a uniform grid of `n` ≥ 2 points.
pub fn nullcline_table(params: &ModelParams, range: (f64, f64), n: usize) -> Result<Vec<(f64, f64, f64)>> {
    if n < 2 || !(range.1 > range.0) {
        return Err(Error::InvalidParams(format!("need n >= 2 and an increasing range, got {n}, {range:?}")));
    }
    (0..n)
        .map(|i| {
            let th = range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64;
            Ok((th, nullcline_f(params, th, 0)?, nullcline_g(params, th, 0)?))
        })
        .collect()
}

pub fn write_nullcline_csv<W: Write>(w: W, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta", "f", "g"])?;
    for (t, f, g) in rows {
        out.write_record([fmt_f64(*t), fmt_f64(*f), fmt_f64(*g)])?;
    }
    out.flush()?;
    Ok(())
}
