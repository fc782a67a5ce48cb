use std::path::PathBuf;

use clap::ValueEnum;
use pmflow::fbp_solver::SolverConfig;
use pmflow::selfsim_geometry::{beta_c, map_p1_to_p2, map_p2_to_p1};
use pmflow::gas_model::GasSetup;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const RUN_CONFIG_SCHEMA: &str = "runconfig/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Polar,
    States,
    Geometry,
    EllingLiu,
    Solve,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Polar => "polar",
            Command::States => "states",
            Command::Geometry => "geometry",
            Command::EllingLiu => "elling-liu",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gas {
    pub gamma: f64,
}

impl Default for Gas {
    fn default() -> Self {
        Gas { gamma: 1.4 }
    }
}

/// One parameter point, tagged with its frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", deny_unknown_fields)]
pub enum Parameters {
    /// Steady frame: upstream Mach number and wedge angle.
    #[serde(rename = "p1")]
    P1 { u_inf: Option<f64>, theta_w: Option<f64> },
    /// Wedge frame: normal speed and oblique-shock angle, absolute or as a fraction of β_c.
    #[serde(rename = "p2")]
    P2 { v_inf: Option<f64>, beta: Option<f64>, beta_frac: Option<f64> },
}

/// Parameters resolved to the wedge frame, with the steady-frame pair when it exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolved {
    pub gamma: f64,
    pub v_inf: f64,
    pub beta: f64,
    pub beta_c: f64,
    pub u_inf: Option<f64>,
    pub theta_w: Option<f64>,
}

fn need(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Config(format!("missing parameter {name}")))
}

impl Parameters {
    pub fn resolve(&self, gamma: f64) -> CliResult<Resolved> {
        match *self {
            Parameters::P1 { u_inf, theta_w } => {
                let (u, t) = (need(u_inf, "u_inf")?, need(theta_w, "theta_w")?);
                let (v, b) = map_p1_to_p2(u, t, gamma)?;
                let bc = beta_c(&GasSetup::new(gamma, v)?)?;
                Ok(Resolved { gamma, v_inf: v, beta: b, beta_c: bc, u_inf: Some(u), theta_w: Some(t) })
            }
            Parameters::P2 { v_inf, beta, beta_frac } => {
                let v = need(v_inf, "v_inf")?;
                let bc = beta_c(&GasSetup::new(gamma, v)?)?;
                let b = match (beta, beta_frac) {
                    (Some(b), None) => b,
                    (None, Some(f)) => f * bc,
                    (None, None) => return Err(CliError::Config("one of beta or beta_frac is required".into())),
                    (Some(_), Some(_)) => return Err(CliError::Config("give beta or beta_frac, not both".into())),
                };
                let (u, t) = if b > 0.0 && b < bc { map_p2_to_p1(v, b, gamma).ok().unzip() } else { (None, None) };
                Ok(Resolved { gamma, v_inf: v, beta: b, beta_c: bc, u_inf: u, theta_w: t })
            }
        }
    }
}

/// `count` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count).map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64).collect()
    }

    fn validate(&self, name: &str) -> CliResult<()> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.count >= 1
            && self.start <= self.stop
            && (self.count > 1 || self.start == self.stop);
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("range {name} must have start <= stop and count >= 1 ({self:?})")))
        }
    }

    /// Parses `start:stop:count`.
    pub fn parse(text: &str) -> Result<Range, String> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got {text}"));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|e| format!("{s}: {e}"));
        Ok(Range { start: f(parts[0])?, stop: f(parts[1])?, count: parts[2].parse().map_err(|e| format!("{e}"))? })
    }
}

/// Sweep over the wedge-frame plane; β is given as a fraction of β_c(v∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub v_inf: Range,
    pub beta_frac: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllingLiuScan {
    pub v_inf: Range,
    /// β samples per v∞, uniform on `(0, β_c)`.
    pub n_beta: usize,
}

impl Default for EllingLiuScan {
    fn default() -> Self {
        EllingLiuScan { v_inf: Range { start: 0.05, stop: 2.0, count: 40 }, n_beta: 100 }
    }
}

fn default_schema() -> String {
    RUN_CONFIG_SCHEMA.into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_polar_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub gas: Gas,
    #[serde(default)]
    pub parameters: Option<Parameters>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_polar_samples")]
    pub polar_samples: usize,
    #[serde(default)]
    pub elling_liu: EllingLiuScan,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Input run directory for `verify`.
    #[serde(default)]
    pub run_dir: Option<PathBuf>,
    /// Prebuilt geometry document for `solve`, instead of `parameters`.
    #[serde(default)]
    pub geometry_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<RunConfig> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if c.schema != RUN_CONFIG_SCHEMA {
            return Err(CliError::Config(format!("unexpected schema tag {}", c.schema)));
        }
        Ok(c)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Checks everything the chosen command needs.
    pub fn validate(&self, command: Command) -> CliResult<()> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for command {}, invoked as {}",
                    c.name(),
                    command.name()
                )));
            }
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("formats must name csv, json or both".into()));
        }
        self.solver.validate()?;
        match command {
            Command::Polar | Command::States | Command::Geometry => {
                if self.parameters.is_none() {
                    return Err(CliError::Config("a parameter frame (p1 or p2) is required".into()));
                }
            }
            Command::Solve => {
                if self.parameters.is_some() == self.geometry_file.is_some() {
                    return Err(CliError::Config("give exactly one of parameters or geometry_file".into()));
                }
            }
            Command::Verify => {
                if self.run_dir.is_none() {
                    return Err(CliError::Config("verify needs a run directory".into()));
                }
            }
            Command::Sweep => {
                let s = self.sweep.ok_or_else(|| CliError::Config("sweep ranges are required".into()))?;
                s.v_inf.validate("v_inf")?;
                s.beta_frac.validate("beta_frac")?;
            }
            Command::EllingLiu => {
                self.elling_liu.v_inf.validate("v_inf")?;
                if self.elling_liu.n_beta < 2 {
                    return Err(CliError::Config("n_beta must be at least 2".into()));
                }
            }
        }
        if self.polar_samples < 2 {
            return Err(CliError::Config("polar_samples must be at least 2".into()));
        }
        Ok(())
    }
}
