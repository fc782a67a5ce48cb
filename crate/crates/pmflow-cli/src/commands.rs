use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use pmflow::fbp_solver::{solve_fbp_with, FbpSolution, ShockCurve, SolverConfig};
use pmflow::gas_model::GasSetup;
use pmflow::selfsim_geometry::{
    beta_c, beta_hat, elling_liu_f, map_p1_to_p2, map_p2_to_p1, polylines, v_star, Geometry, UniformState,
};
use pmflow::shock_polar::{detachment, polar_curve, theta_sonic, weak_state};
use pmflow::verify::{run_suite, Tolerances};
use pmflow::PmError;
use rayon::prelude::*;

use crate::artifacts::{
    BetaHatEntry, Diagnostics, EllingLiuDoc, PolarDoc, RunMeta, RunReport, StatesDoc, SweepIndex, SweepPoint,
};
use crate::config::{Command, Format, Parameters, Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, num, read_csv, read_text, write_csv, write_json, Document};

pub const SOLUTION_HEADER: [&str; 6] = ["xi", "eta", "phi", "psi", "rho", "mach"];
pub const SHOCK_HEADER: [&str; 3] = ["xi", "f", "fprime"];
pub const POLAR_HEADER: [&str; 5] = ["sigma", "u", "v", "rho", "deflection"];
pub const POLYLINE_HEADER: [&str; 4] = ["curve", "index", "xi", "eta"];
pub const ELLING_LIU_HEADER: [&str; 7] = ["v_inf", "beta", "beta_frac", "f", "tan_theta_o", "tan_theta_inf", "vertical"];
pub const BETA_HAT_HEADER: [&str; 3] = ["v_inf", "beta_c", "beta_hat"];

/// Points per polyline in `polylines.csv`.
const POLYLINE_SAMPLES: usize = 65;

pub fn run(command: Command, cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(command)?;
    let out = output_dir(command, cfg);
    match command {
        Command::Polar => polar(cfg, &out),
        Command::States => states(cfg, &out, false),
        Command::Geometry => states(cfg, &out, true),
        Command::EllingLiu => elling_liu(cfg, &out),
        Command::Solve => solve(cfg, &out),
        Command::Verify => verify(cfg, &out),
        Command::Sweep => sweep(cfg, &out),
    }
}

fn output_dir(command: Command, cfg: &RunConfig) -> PathBuf {
    match (&cfg.output_dir, command, &cfg.run_dir) {
        (Some(d), _, _) => d.clone(),
        (None, Command::Verify, Some(run)) => run.clone(),
        (None, c, _) => PathBuf::from(format!("pmflow-{}", c.name())),
    }
}

fn parameters(cfg: &RunConfig) -> CliResult<Resolved> {
    cfg.parameters.expect("validated").resolve(cfg.gas.gamma)
}

fn polar(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let p = parameters(cfg)?;
    let (m, theta_w) = match (p.u_inf, p.theta_w) {
        (Some(u), t) => (u, t),
        (None, _) => {
            return Err(PmError::Domain(format!("beta = {} has no steady-frame polar (needs 0 < beta < beta_c)", p.beta)).into())
        }
    };
    let g = p.gamma;
    let curve = polar_curve(m, g, cfg.polar_samples)?;
    let (sigma_detach, theta_detach) = detachment(m, g)?;
    let doc = PolarDoc {
        schema: PolarDoc::SCHEMA.into(),
        gamma: g,
        m_inf: m,
        sigma_detach,
        theta_detach,
        theta_sonic: theta_sonic(m, g)?,
        theta_w,
        weak_state: theta_w.map(|t| weak_state(m, g, t)).transpose()?,
        samples: curve.len(),
    };
    ensure_dir(out)?;
    if cfg.wants(Format::Csv) {
        let rows = curve.iter().map(|s| [s.sigma, s.u, s.v, s.rho, s.deflection].map(num));
        write_csv(&out.join("polar.csv"), "polar-csv/1", &POLAR_HEADER, rows)?;
    }
    if cfg.wants(Format::Json) {
        write_json(&out.join("polar.json"), &doc)?;
    }
    println!("M = {m}: theta_detach = {theta_detach}, theta_sonic = {}", doc.theta_sonic);
    Ok(())
}

/// Roundtrip of the parameter point through the other frame, measured in the wedge frame.
fn roundtrip_error(p: &Resolved) -> CliResult<Option<f64>> {
    let (Some(u), Some(t)) = (p.u_inf, p.theta_w) else { return Ok(None) };
    let (v, b) = map_p1_to_p2(u, t, p.gamma)?;
    let (u2, t2) = map_p2_to_p1(v, b, p.gamma)?;
    let (v2, b2) = map_p1_to_p2(u2, t2, p.gamma)?;
    Ok(Some((v2 - p.v_inf).abs().max((b2 - p.beta).abs())))
}

fn states(cfg: &RunConfig, out: &Path, polylines: bool) -> CliResult<()> {
    let p = parameters(cfg)?;
    let geo = Geometry::new(GasSetup::new(p.gamma, p.v_inf)?, p.beta)?;
    let doc = StatesDoc { schema: StatesDoc::SCHEMA.into(), parameters: p, roundtrip_error: roundtrip_error(&p)? };
    ensure_dir(out)?;
    write_json(&out.join("geometry.json"), &geo)?;
    if cfg.wants(Format::Json) {
        write_json(&out.join("states.json"), &doc)?;
    }
    let text = summary(&geo, &doc);
    std::fs::write(out.join("summary.txt"), &text).map_err(|e| CliError::io(out.join("summary.txt"), e))?;
    if polylines && cfg.wants(Format::Csv) {
        write_csv(&out.join("polylines.csv"), "polylines-csv/1", &POLYLINE_HEADER, polyline_rows(&geo))?;
    }
    print!("{text}");
    Ok(())
}

fn state_line(name: &str, s: &UniformState) -> String {
    format!("{name:<9} u = {:.12}  v = {:.12}  rho = {:.12}  c = {:.12}\n", s.u, s.v, s.rho, s.c)
}

fn summary(geo: &Geometry, doc: &StatesDoc) -> String {
    let p = &doc.parameters;
    let mut s = String::from("# schema: summary/1\n");
    s += &format!("gamma     {}\n", p.gamma);
    s += &format!("v_inf     {}\nbeta      {}  ({} of beta_c = {})\n", p.v_inf, p.beta, p.beta / p.beta_c, p.beta_c);
    match (p.u_inf, p.theta_w) {
        (Some(u), Some(t)) => s += &format!("u_inf     {u}\ntheta_w   {t}\n"),
        _ => s += "u_inf     (none: beta = 0 has no steady-frame image)\n",
    }
    if let Some(e) = doc.roundtrip_error {
        s += &format!("roundtrip {e:.3e}\n");
    }
    s += &state_line("state_inf", &geo.state_inf);
    s += &state_line("state_O", &geo.state_o);
    s += &state_line("state_N", &geo.state_n);
    s += &format!("eta_bar   {:.12}\nxi_N      {:.12}\n", geo.eta_bar, geo.xi_n);
    s += &format!("P1        ({:.12}, {:.12})\nP2        ({:.12}, {:.12})\n", geo.p1[0], geo.p1[1], geo.p2[0], geo.p2[1]);
    s
}

fn polyline_rows(geo: &Geometry) -> Vec<Vec<String>> {
    polylines(geo, POLYLINE_SAMPLES)
        .into_iter()
        .flat_map(|(name, pts)| {
            pts.into_iter().enumerate().map(move |(k, [x, y])| vec![name.to_string(), k.to_string(), num(x), num(y)])
        })
        .collect()
}

fn elling_liu(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let g = cfg.gas.gamma;
    let scan = cfg.elling_liu;
    let mut grid = Vec::new();
    let mut hats = Vec::new();
    for v in scan.v_inf.values() {
        let setup = GasSetup::new(g, v)?;
        let bc = beta_c(&setup)?;
        for k in 1..=scan.n_beta {
            let frac = k as f64 / (scan.n_beta + 1) as f64;
            let e = elling_liu_f(&setup, frac * bc)?;
            let vertical = if e.vertical { 1.0 } else { 0.0 };
            grid.push([v, frac * bc, frac, e.f, e.tan_theta_o, e.tan_theta_inf, vertical].map(num));
        }
        let (beta_hat, status) = match beta_hat(&setup) {
            Ok(Some(b)) => (Some(b), "unique".to_string()),
            Ok(None) => (None, "none".to_string()),
            Err(e) => (None, e.to_string()),
        };
        hats.push(BetaHatEntry { v_inf: v, beta_c: bc, beta_hat, status });
    }
    let doc = EllingLiuDoc {
        schema: EllingLiuDoc::SCHEMA.into(),
        gamma: g,
        v_star: v_star(g)?,
        v_inf: scan.v_inf,
        n_beta: scan.n_beta,
        beta_hat: hats,
    };
    ensure_dir(out)?;
    if cfg.wants(Format::Csv) {
        write_csv(&out.join("elling_liu.csv"), "elling-liu-csv/1", &ELLING_LIU_HEADER, grid)?;
        let rows = doc.beta_hat.iter().map(|h| [h.v_inf, h.beta_c, h.beta_hat.unwrap_or(f64::NAN)].map(num));
        write_csv(&out.join("beta_hat.csv"), "beta-hat-csv/1", &BETA_HAT_HEADER, rows)?;
    }
    if cfg.wants(Format::Json) {
        write_json(&out.join("elling_liu.json"), &doc)?;
    }
    println!("gamma = {g}: v* = {}", doc.v_star);
    Ok(())
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn meta(command: Command, wall: f64, workers: Option<usize>) -> RunMeta {
    RunMeta {
        schema: RunMeta::SCHEMA.into(),
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: wall,
        solver_threads: 1,
        sweep_workers: workers,
        timestamp_unix: timestamp(),
    }
}

fn report(sol: &FbpSolution) -> RunReport {
    let g = &sol.geometry;
    RunReport {
        schema: RunReport::SCHEMA.into(),
        gamma: g.gamma(),
        v_inf: g.v_inf(),
        beta: g.beta,
        beta_c: g.beta_c,
        converged: sol.converged,
        residuals: sol.residuals,
        history: sol.history.clone(),
        layout: *sol.layout(),
        config: sol.config.clone(),
    }
}

/// Writes the solution artifacts of one solve into `dir`.
pub fn write_run(dir: &Path, sol: &FbpSolution) -> CliResult<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("geometry.json"), &sol.geometry)?;
    let f = sol.fields();
    let rows = (0..f.xi.len()).map(|k| [f.xi[k], f.eta[k], f.phi[k], f.psi[k], f.rho[k], f.mach[k]].map(num));
    write_csv(&dir.join("solution.csv"), "solution-csv/1", &SOLUTION_HEADER, rows)?;
    let s = sol.shock();
    let rows = (0..s.knots().len()).map(|k| [s.knots()[k], s.values()[k], s.slopes()[k]].map(num));
    write_csv(&dir.join("shock.csv"), "shock-csv/1", &SHOCK_HEADER, rows)?;
    write_json(&dir.join("report.json"), &report(sol))
}

fn write_diagnostics(dir: &Path, err: &CliError, sol: Option<&FbpSolution>) -> CliResult<()> {
    ensure_dir(dir)?;
    let d = Diagnostics {
        schema: Diagnostics::SCHEMA.into(),
        message: err.to_string(),
        exit_code: err.exit_code(),
        residuals: sol.map(|s| s.residuals),
        history: sol.map(|s| s.history.clone()).unwrap_or_default(),
    };
    write_json(&dir.join("diagnostics.json"), &d)
}

/// Solves one point and writes its run directory; numerical failures leave `diagnostics.json`.
fn solve_into(geo: &Geometry, solver: &SolverConfig, dir: &Path, workers: Option<usize>) -> CliResult<FbpSolution> {
    let start = Instant::now();
    let result = solve_fbp_with(geo, solver);
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok(sol) => {
            write_run(dir, &sol)?;
            write_json(&dir.join("meta.json"), &meta(Command::Solve, wall, workers))?;
            if sol.converged {
                Ok(sol)
            } else {
                let err = CliError::Unconverged(dir.join("diagnostics.json"));
                write_diagnostics(dir, &err, Some(&sol))?;
                Err(err)
            }
        }
        Err(e) => {
            let err = CliError::from(e);
            if err.exit_code() == 4 {
                write_diagnostics(dir, &err, None)?;
            }
            Err(err)
        }
    }
}

fn load_geometry(path: &Path) -> CliResult<Geometry> {
    let geo = Geometry::from_json(&read_text(path)?)?;
    let rebuilt = Geometry::new(geo.setup, geo.beta)?;
    if rebuilt != geo {
        return Err(CliError::Config(format!("{} does not match the geometry of its own (gamma, v_inf, beta)", path.display())));
    }
    Ok(geo)
}

fn solve(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let geo = match &cfg.geometry_file {
        Some(path) => load_geometry(path)?,
        None => {
            let p = parameters(cfg)?;
            Geometry::new(GasSetup::new(p.gamma, p.v_inf)?, p.beta)?
        }
    };
    let sol = solve_into(&geo, &cfg.solver, out, None)?;
    let r = &sol.residuals;
    println!(
        "converged: level-set {:.3e}, rh {:.3e}, elliptic {:.3e} -> {}",
        r.level_set,
        r.rh_flux,
        r.elliptic,
        out.display()
    );
    Ok(())
}

/// Rebuilds a solution from a run directory written by `solve`.
pub fn load_run(dir: &Path) -> CliResult<FbpSolution> {
    let geometry = load_geometry(&dir.join("geometry.json"))?;
    let report = RunReport::load(&dir.join("report.json"))?;
    let shock = read_csv(&dir.join("shock.csv"), "shock-csv/1", &SHOCK_HEADER)?;
    let knots: Vec<f64> = shock.iter().map(|r| r[0]).collect();
    let values: Vec<f64> = shock.iter().map(|r| r[1]).collect();
    let phi = read_csv(&dir.join("solution.csv"), "solution-csv/1", &SOLUTION_HEADER)?.iter().map(|r| r[2]).collect();
    let shock = ShockCurve::new(&knots, &values)?;
    Ok(FbpSolution::from_parts(geometry, report.config, report.layout, shock, phi, report.converged)?)
}

fn verify(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let run = cfg.run_dir.as_ref().expect("validated");
    let sol = load_run(run)?;
    let rep = run_suite(&sol, &Tolerances::for_solution(&sol));
    ensure_dir(out)?;
    write_json(&out.join("verify.json"), &rep)?;
    for c in &rep.checks {
        println!("{:<4} {:<28} worst {:.3e} tol {:.3e}", if c.passed { "pass" } else { "FAIL" }, c.name, c.worst_violation, c.tolerance_used);
    }
    if rep.all_passed() {
        Ok(())
    } else {
        Err(CliError::Failed(out.join("verify.json")))
    }
}

fn sweep_workers() -> CliResult<usize> {
    match std::env::var("PM_FBP_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("PM_FBP_THREADS must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn sweep_point(index: usize, v: f64, frac: f64, cfg: &RunConfig, out: &Path, workers: usize) -> SweepPoint {
    let dir = format!("point_{index:04}");
    let mut point = SweepPoint {
        index,
        dir: dir.clone(),
        v_inf: v,
        beta_frac: frac,
        beta: None,
        status: "converged".into(),
        exit_code: 0,
        message: None,
    };
    let params = Parameters::P2 { v_inf: Some(v), beta: None, beta_frac: Some(frac) };
    let result = params.resolve(cfg.gas.gamma).and_then(|p| {
        point.beta = Some(p.beta);
        let geo = Geometry::new(GasSetup::new(p.gamma, p.v_inf)?, p.beta)?;
        solve_into(&geo, &cfg.solver, &out.join(&dir), Some(workers))
    });
    if let Err(e) = result {
        point.status = if matches!(e, CliError::Unconverged(_)) { "unconverged" } else { "failed" }.into();
        point.exit_code = e.exit_code();
        point.message = Some(e.to_string());
    }
    point
}

fn sweep(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let s = cfg.sweep.expect("validated");
    let workers = sweep_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let jobs: Vec<(usize, f64, f64)> = s
        .v_inf
        .values()
        .into_iter()
        .flat_map(|v| s.beta_frac.values().into_iter().map(move |f| (v, f)))
        .enumerate()
        .map(|(k, (v, f))| (k, v, f))
        .collect();
    ensure_dir(out)?;
    // Each worker owns its point directory; the index is written once all have returned.
    let points: Vec<SweepPoint> =
        pool.install(|| jobs.par_iter().map(|&(k, v, f)| sweep_point(k, v, f, cfg, out, workers)).collect());
    let index = SweepIndex {
        schema: SweepIndex::SCHEMA.into(),
        gamma: cfg.gas.gamma,
        v_inf: s.v_inf,
        beta_frac: s.beta_frac,
        points,
    };
    write_json(&out.join("index.json"), &index)?;
    let failed = index.points.iter().filter(|p| p.exit_code != 0).count();
    println!("{} points, {failed} not converged -> {}", index.points.len(), out.display());
    match index.points.iter().map(|p| p.exit_code).max() {
        Some(code) if code != 0 => Err(CliError::Sweep { failed, code }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Range, Sweep};
    use pmflow::verify::VerifyReport;

    fn p2(beta_frac: f64) -> Option<Parameters> {
        Some(Parameters::P2 { v_inf: Some(0.5), beta: None, beta_frac: Some(beta_frac) })
    }

    #[test]
    fn every_json_document_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let d = |s: &str| dir.path().join(s);
        let mut cfg = RunConfig { parameters: p2(0.3), polar_samples: 20, ..Default::default() };
        cfg.solver.n_s = 32;
        cfg.solver.n_t = 16;
        cfg.elling_liu.v_inf = Range { start: 0.2, stop: 1.0, count: 2 };
        cfg.elling_liu.n_beta = 8;
        cfg.sweep = Some(Sweep {
            v_inf: Range { start: 0.5, stop: 0.5, count: 1 },
            beta_frac: Range { start: 0.1, stop: 0.2, count: 2 },
        });
        for (c, name) in [
            (Command::Polar, "polar"),
            (Command::Geometry, "geometry"),
            (Command::EllingLiu, "el"),
            (Command::Solve, "run"),
            (Command::Sweep, "sweep"),
        ] {
            run(c, &RunConfig { output_dir: Some(d(name)), ..cfg.clone() }).unwrap();
        }
        // Coarse runs fail some checks; the report is written either way.
        let verify_cfg = RunConfig { run_dir: Some(d("run")), parameters: None, ..cfg.clone() };
        assert!(matches!(run(Command::Verify, &verify_cfg), Ok(()) | Err(CliError::Failed(_))));

        PolarDoc::load(&d("polar/polar.json")).unwrap();
        StatesDoc::load(&d("geometry/states.json")).unwrap();
        EllingLiuDoc::load(&d("el/elling_liu.json")).unwrap();
        RunReport::load(&d("run/report.json")).unwrap();
        RunMeta::load(&d("run/meta.json")).unwrap();
        let index = SweepIndex::load(&d("sweep/index.json")).unwrap();
        assert_eq!(index.points.len(), 2);
        for f in ["geometry/geometry.json", "run/geometry.json"] {
            Geometry::from_json(&read_text(&d(f)).unwrap()).unwrap();
        }
        VerifyReport::from_json(&read_text(&d("run/verify.json")).unwrap()).unwrap();
        assert!(PolarDoc::load(&d("run/report.json")).is_err());
    }

    #[test]
    fn loaded_run_matches_the_solve() {
        let dir = tempfile::tempdir().unwrap();
        let geo = Geometry::new(GasSetup::new(1.4, 0.5).unwrap(), 0.2).unwrap();
        let sol = solve_into(&geo, &SolverConfig::with_grid(32, 16), dir.path(), None).unwrap();
        let back = load_run(dir.path()).unwrap();
        assert_eq!(back.phi, sol.phi);
        assert_eq!(back.shock(), sol.shock());
        assert_eq!(back.residuals, sol.residuals);
    }

    #[test]
    fn unconverged_solve_leaves_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let geo = Geometry::new(GasSetup::new(1.4, 0.5).unwrap(), 0.3).unwrap();
        let cfg = SolverConfig { max_outer: 1, ..SolverConfig::with_grid(32, 16) };
        let err = solve_into(&geo, &cfg, dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let diag = Diagnostics::load(&dir.path().join("diagnostics.json")).unwrap();
        assert_eq!(diag.exit_code, 4);
        assert!(!diag.history.is_empty());
    }
}
