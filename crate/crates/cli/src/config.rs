//! Run configuration: defaults, flat `key = value` files and command-line
//! overrides, merged in that order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nhqubit::{BlochVector, DriveAxis, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Ensemble,
    Compare,
    Sde,
    OptimalPath,
    PhasePortrait,
    PovmCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Ensemble => "ensemble",
            Experiment::Compare => "compare",
            Experiment::Sde => "sde",
            Experiment::OptimalPath => "optimal-path",
            Experiment::PhasePortrait => "phase-portrait",
            Experiment::PovmCheck => "povm-check",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "spectrum" => Experiment::Spectrum,
            "ensemble" => Experiment::Ensemble,
            "compare" => Experiment::Compare,
            "sde" => Experiment::Sde,
            "optimal-path" => Experiment::OptimalPath,
            "phase-portrait" => Experiment::PhasePortrait,
            "povm-check" => Experiment::PovmCheck,
            _ => return Err(format!("unknown experiment `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisChoice {
    X,
    Y,
    Both,
}

impl AxisChoice {
    pub fn axes(self) -> Vec<DriveAxis> {
        match self {
            AxisChoice::X => vec![DriveAxis::X],
            AxisChoice::Y => vec![DriveAxis::Y],
            AxisChoice::Both => DriveAxis::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostSelectMode {
    None,
    NoJump,
    Final,
}

/// Trajectory pipeline. `Jump` is the three-level update with both Kraus
/// branches; the others integrate the no-jump Bloch equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Jump,
    Kraus,
    Stratonovich,
    Ito,
}

/// Every setting of one run. The manifest stores this verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub gamma_e: f64,
    pub gamma_g: f64,
    pub omega: f64,
    pub theta: f64,
    pub axis: AxisChoice,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub n: usize,
    pub seed: u64,
    pub postselect: PostSelectMode,
    pub qi: [f64; 3],
    pub qf: [f64; 3],
    pub lambda: f64,
    pub scheme: Pipeline,
    /// `None` disables the Bloch norm guard.
    pub norm_tol: Option<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub starts: usize,
    pub energies: Vec<f64>,
    pub theta_points: usize,
    pub save_trajectories: usize,
    pub out: PathBuf,
    pub plot: bool,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            gamma_e: 0.2,
            gamma_g: 1.0,
            omega: 2.0,
            theta: 0.0,
            axis: AxisChoice::Both,
            dt: 0.01,
            t_end: 5.0,
            n: 1000,
            seed: 2024,
            postselect: PostSelectMode::None,
            qi: [0.0, 0.0, 1.0],
            qf: [0.0, -1.0, 0.0],
            lambda: 0.05,
            scheme: Pipeline::Kraus,
            norm_tol: Some(nhqubit::trajectory::sde::DEFAULT_NORM_TOLERANCE),
            omega_min: 0.05,
            omega_max: 3.0,
            points: 400,
            starts: 64,
            energies: vec![-12.0, -10.2, -8.0, -5.0, -2.0, 0.0, 2.0],
            theta_points: 721,
            save_trajectories: 5,
            out: PathBuf::from("out"),
            plot: false,
        };
        match experiment {
            Experiment::Compare => c.postselect = PostSelectMode::NoJump,
            Experiment::Sde => c.postselect = PostSelectMode::NoJump,
            Experiment::OptimalPath => {
                c.axis = AxisChoice::X;
                c.t_end = 2.0;
                c.n = 100_000;
                c.postselect = PostSelectMode::Final;
                c.save_trajectories = 0;
            }
            Experiment::PhasePortrait => c.axis = AxisChoice::Y,
            _ => {}
        }
        c
    }

    /// Applies `key = value` overrides; keys accept `-` or `_`.
    pub fn apply(&mut self, entries: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (key, value) in entries {
            self.set(key, value)?;
        }
        self.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        let field: &'static str = match key.as_str() {
            "experiment" => {
                let e: Experiment = v.parse().map_err(|m| CliError::config("experiment", m))?;
                if e != self.experiment {
                    return Err(CliError::config(
                        "experiment",
                        format!("file is for `{}`, not `{}`", e.name(), self.experiment.name()),
                    ));
                }
                return Ok(());
            }
            "gamma-e" => return parse_into(&mut self.gamma_e, "gamma_e", v),
            "gamma-g" => return parse_into(&mut self.gamma_g, "gamma_g", v),
            "omega" => return parse_into(&mut self.omega, "omega", v),
            "theta" => return parse_into(&mut self.theta, "theta", v),
            "dt" => return parse_into(&mut self.dt, "dt", v),
            "T" | "t" | "t-end" => return parse_into(&mut self.t_end, "T", v),
            "n" => return parse_into(&mut self.n, "n", v),
            "seed" => return parse_into(&mut self.seed, "seed", v),
            "lambda" => return parse_into(&mut self.lambda, "lambda", v),
            "omega-min" => return parse_into(&mut self.omega_min, "omega_min", v),
            "omega-max" => return parse_into(&mut self.omega_max, "omega_max", v),
            "points" => return parse_into(&mut self.points, "points", v),
            "starts" => return parse_into(&mut self.starts, "starts", v),
            "theta-points" => return parse_into(&mut self.theta_points, "theta_points", v),
            "save-trajectories" => return parse_into(&mut self.save_trajectories, "save_trajectories", v),
            "plot" => return parse_into(&mut self.plot, "plot", v),
            "out" => {
                self.out = PathBuf::from(v);
                return Ok(());
            }
            "qi" => {
                self.qi = parse_triple("qi", v)?;
                return Ok(());
            }
            "qf" => {
                self.qf = parse_triple("qf", v)?;
                return Ok(());
            }
            "energies" => {
                self.energies = parse_list("energies", v)?;
                return Ok(());
            }
            "norm-tol" => {
                self.norm_tol = if v == "none" { None } else { Some(parse("norm_tol", v)?) };
                return Ok(());
            }
            "axis" => "axis",
            "postselect" => "postselect",
            "scheme" => "scheme",
            _ => return Err(CliError::config("config", format!("unknown key `{key}`"))),
        };
        let quoted = serde_json::Value::String(v.to_string());
        let bad = |_| CliError::config(field, format!("invalid value `{v}`"));
        match field {
            "axis" => self.axis = serde_json::from_value(quoted).map_err(bad)?,
            "postselect" => self.postselect = serde_json::from_value(quoted).map_err(bad)?,
            _ => self.scheme = serde_json::from_value(quoted).map_err(bad)?,
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        let positive = [("T", self.t_end), ("lambda", self.lambda)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(name, format!("must be positive, got {v}")));
            }
        }
        if self.n == 0 {
            return Err(CliError::config("n", "must be at least 1"));
        }
        if !(self.omega_min < self.omega_max) {
            return Err(CliError::config("omega_min", "must be below omega_max"));
        }
        if self.points < 2 || self.theta_points < 2 {
            return Err(CliError::config("points", "need at least two grid points"));
        }
        if self.starts == 0 {
            return Err(CliError::config("starts", "must be at least 1"));
        }
        for (name, q) in [("qi", self.qi), ("qf", self.qf)] {
            if BlochVector::from_array(q).norm() > 1.0 + 1e-12 {
                return Err(CliError::config(name, "must lie in the unit ball"));
            }
        }
        if let Some(t) = self.norm_tol {
            if !(t > 0.0) {
                return Err(CliError::config("norm_tol", "must be positive or `none`"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        SystemParams::new(self.gamma_e, self.gamma_g, self.omega, self.theta, self.dt).map_err(|e| match e {
            nhqubit::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
            other => CliError::config("params", other.to_string()),
        })
    }

    /// Flat `key = value` rendering accepted by [`parse_config_file`].
    pub fn to_flat(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in value.as_object().expect("struct") {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                serde_json::Value::Null => "none".into(),
                other => other.to_string(),
            };
            out.push_str(&format!("{} = {}\n", k.replace('_', "-"), text));
        }
        out
    }
}

fn parse<T: FromStr>(field: &'static str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::config(field, format!("cannot parse `{v}`")))
}

fn parse_into<T: FromStr>(slot: &mut T, field: &'static str, v: &str) -> Result<(), CliError> {
    *slot = parse(field, v)?;
    Ok(())
}

fn parse_list(field: &'static str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(field, s.trim())).collect()
}

fn parse_triple(field: &'static str, v: &str) -> Result<[f64; 3], CliError> {
    let xs = parse_list(field, v)?;
    xs.try_into().map_err(|_| CliError::config(field, "expected three comma-separated numbers"))
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config("config", format!("line {}: expected `key = value`", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_flat())
    }
}
