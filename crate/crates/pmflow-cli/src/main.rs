use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod artifacts;
mod commands;
mod config;
mod error;
mod output;

use config::{Command, Format, Parameters, Range, RunConfig, Sweep};
use error::{CliError, CliResult};

/// Self-similar shock reflection off a ramp: polars, geometry, free-boundary solves.
#[derive(Debug, Parser)]
#[command(name = "pmflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Steady shock polar with detachment and sonic angles.
    Polar {
        #[command(flatten)]
        common: Common,
        /// Number of samples along the polar.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Uniform states and corner points, with a summary.
    States {
        #[command(flatten)]
        common: Common,
    },
    /// As `states`, plus plot-ready polylines.
    Geometry {
        #[command(flatten)]
        common: Common,
    },
    /// Elling-Liu quantity on a (v_inf, beta) grid, beta-hat curve and v*.
    EllingLiu {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        v_min: Option<f64>,
        #[arg(long)]
        v_max: Option<f64>,
        /// Number of v_inf samples.
        #[arg(long)]
        nv: Option<usize>,
        /// Number of beta samples per v_inf.
        #[arg(long)]
        nbeta: Option<usize>,
    },
    /// Free-boundary solve into a run directory.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Geometry document to solve on, instead of parameters.
        #[arg(long)]
        geometry: Option<PathBuf>,
    },
    /// Verification suite on a run directory.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Solves over a (v_inf, beta_frac) grid in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// start:stop:count
        #[arg(long, value_parser = Range::parse)]
        sweep_v_inf: Option<Range>,
        /// start:stop:count
        #[arg(long, value_parser = Range::parse)]
        sweep_beta_frac: Option<Range>,
    },
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration (schema runconfig/1).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    v_inf: Option<f64>,
    #[arg(long, conflicts_with = "beta_frac")]
    beta: Option<f64>,
    /// Beta as a fraction of beta_c(gamma, v_inf).
    #[arg(long)]
    beta_frac: Option<f64>,
    #[arg(long)]
    u_inf: Option<f64>,
    #[arg(long)]
    theta_w: Option<f64>,
    /// Solver grid as NxM cells.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    formats: Option<Vec<Format>>,
}

fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text.split_once('x').ok_or_else(|| format!("expected NxM, got {text}"))?;
    let n = |s: &str| s.parse::<usize>().map_err(|e| format!("{s}: {e}"));
    Ok((n(a)?, n(b)?))
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(g) = self.gamma {
            cfg.gas.gamma = g;
        }
        let p2 = self.v_inf.is_some() || self.beta.is_some() || self.beta_frac.is_some();
        let p1 = self.u_inf.is_some() || self.theta_w.is_some();
        if p1 && p2 {
            return Err(CliError::Config("give either --u-inf/--theta-w or --v-inf/--beta/--beta-frac".into()));
        }
        if p2 {
            let (mut v, mut b, mut f) = match cfg.parameters {
                Some(Parameters::P2 { v_inf, beta, beta_frac }) => (v_inf, beta, beta_frac),
                _ => (None, None, None),
            };
            v = self.v_inf.or(v);
            if self.beta.is_some() {
                (b, f) = (self.beta, None);
            }
            if self.beta_frac.is_some() {
                (b, f) = (None, self.beta_frac);
            }
            cfg.parameters = Some(Parameters::P2 { v_inf: v, beta: b, beta_frac: f });
        }
        if p1 {
            let (u, t) = match cfg.parameters {
                Some(Parameters::P1 { u_inf, theta_w }) => (u_inf, theta_w),
                _ => (None, None),
            };
            cfg.parameters = Some(Parameters::P1 { u_inf: self.u_inf.or(u), theta_w: self.theta_w.or(t) });
        }
        if let Some((n_s, n_t)) = self.grid {
            cfg.solver.n_s = n_s;
            cfg.solver.n_t = n_t;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        if let Some(f) = &self.formats {
            cfg.formats = f.clone();
        }
        Ok(())
    }
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::from_json(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        None => RunConfig::default(),
    };
    common.apply(&mut cfg)?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let (command, cfg) = match &cli.command {
        Sub::Polar { common, samples } => {
            let mut cfg = load(common)?;
            if let Some(n) = samples {
                cfg.polar_samples = *n;
            }
            (Command::Polar, cfg)
        }
        Sub::States { common } => (Command::States, load(common)?),
        Sub::Geometry { common } => (Command::Geometry, load(common)?),
        Sub::EllingLiu { common, v_min, v_max, nv, nbeta } => {
            let mut cfg = load(common)?;
            let scan = &mut cfg.elling_liu;
            scan.v_inf.start = v_min.unwrap_or(scan.v_inf.start);
            scan.v_inf.stop = v_max.unwrap_or(scan.v_inf.stop);
            scan.v_inf.count = nv.unwrap_or(scan.v_inf.count);
            scan.n_beta = nbeta.unwrap_or(scan.n_beta);
            (Command::EllingLiu, cfg)
        }
        Sub::Solve { common, geometry } => {
            let mut cfg = load(common)?;
            if let Some(g) = geometry {
                cfg.geometry_file = Some(g.clone());
                cfg.parameters = None;
            }
            (Command::Solve, cfg)
        }
        Sub::Verify { common, run } => {
            let mut cfg = load(common)?;
            if let Some(r) = run {
                cfg.run_dir = Some(r.clone());
            }
            (Command::Verify, cfg)
        }
        Sub::Sweep { common, sweep_v_inf, sweep_beta_frac } => {
            let mut cfg = load(common)?;
            let (v, f) = (sweep_v_inf.or(cfg.sweep.map(|s| s.v_inf)), sweep_beta_frac.or(cfg.sweep.map(|s| s.beta_frac)));
            match (v, f) {
                (Some(v_inf), Some(beta_frac)) => cfg.sweep = Some(Sweep { v_inf, beta_frac }),
                (None, None) => {}
                _ => return Err(CliError::Config("a sweep needs both v_inf and beta_frac ranges".into())),
            }
            (Command::Sweep, cfg)
        }
    };
    commands::run(command, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pmflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
