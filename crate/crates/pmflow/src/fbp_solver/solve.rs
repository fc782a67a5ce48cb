use serde::{Deserialize, Serialize};

use super::elliptic::{elliptic_step, Discretization, LinearSolver};
use super::fields::{extract_fields, nodal_gradient, SampledFields};
use super::mapping::{map_domain, DomainMapping, GridLayout};
use super::shock::{update_shock, Anderson, ShockCurve};
use super::SolverConfig;
use crate::error::{ErrorClass, PmError, Result};
use crate::gas_model::GasSetup;
use crate::selfsim_geometry::Geometry;

const ANDERSON_DEPTH: usize = 6;

/// Non-finite values (an update that broke down, a step that never reached the
/// shock update) are written as `null` and read back as NaN.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Residual diagnostics of a discrete solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max |φ∞ - φ|` at the interior shock knots.
    pub level_set: f64,
    /// `max |ρ Dφ·ν - Dφ∞·ν|` at the interior shock knots, from nodal gradients.
    pub rh_flux: f64,
    /// `max |R|` of the discrete field equation over free nodes.
    pub elliptic: f64,
    /// Same, divided by the control-volume area.
    pub elliptic_scaled: f64,
    /// Size of the next level-set update.
    #[serde(with = "nullable")]
    pub shock_increment: f64,
    pub cutoff_active: usize,
    pub cutoff_band: usize,
}

/// One continuation attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub beta: f64,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    #[serde(with = "nullable")]
    pub level_set_residual: f64,
    #[serde(with = "nullable")]
    pub shock_increment: f64,
    /// Cutoff activity of the last elliptic solve: cut samples out of band samples.
    pub cutoff_active: usize,
    pub cutoff_band: usize,
    pub converged: bool,
}

/// Discrete solution: shock, nodal potential and diagnostics.
#[derive(Debug, Clone)]
pub struct FbpSolution {
    pub geometry: Geometry,
    pub config: SolverConfig,
    pub mapping: DomainMapping,
    /// Nodal `φ`, indexed by `DomainMapping::idx`.
    pub phi: Vec<f64>,
    pub converged: bool,
    pub residuals: Residuals,
    pub history: Vec<StepRecord>,
}

impl FbpSolution {
    /// Rebuilds a solution from stored parts and recomputes its diagnostics.
    pub fn from_parts(
        geometry: Geometry,
        config: SolverConfig,
        layout: GridLayout,
        shock: ShockCurve,
        phi: Vec<f64>,
        converged: bool,
    ) -> Result<FbpSolution> {
        let mapping = map_domain(&geometry, &shock, &layout)?;
        if phi.len() != layout.n_nodes() {
            return Err(PmError::Config(format!("expected {} nodal values, got {}", layout.n_nodes(), phi.len())));
        }
        let residuals = evaluate(&geometry, &mapping, &phi, &config)?;
        Ok(FbpSolution { geometry, config, mapping, phi, converged, residuals, history: Vec::new() })
    }

    pub fn shock(&self) -> &ShockCurve {
        &self.mapping.shock
    }

    pub fn layout(&self) -> &GridLayout {
        &self.mapping.layout
    }

    pub fn fields(&self) -> SampledFields {
        extract_fields(&self.geometry, &self.mapping, &self.phi)
    }

    /// `φ - φ_β` at the nodes.
    pub fn psi_beta(&self) -> Vec<f64> {
        psi_beta(&self.geometry, &self.mapping, &self.phi)
    }

    pub fn gradient(&self, i: usize, j: usize) -> [f64; 2] {
        nodal_gradient(&self.geometry, &self.mapping, &self.phi, i, j)
    }
}

fn psi_beta(geo: &Geometry, map: &DomainMapping, phi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; phi.len()];
    for i in 0..=map.layout.n_s {
        for j in 0..=map.layout.n_t {
            let [x, y] = map.node(i, j);
            let k = map.idx(i, j);
            out[k] = phi[k] - geo.phi_beta(x, y);
        }
    }
    out
}

pub fn build_geometry(v_inf: f64, beta: f64, gamma: f64) -> Result<Geometry> {
    Geometry::new(GasSetup::new(gamma, v_inf)?, beta)
}

fn evaluate(geo: &Geometry, map: &DomainMapping, phi: &[f64], config: &SolverConfig) -> Result<Residuals> {
    let disc = Discretization::new(geo, map, config);
    let psi: Vec<f64> = phi.iter().zip(disc.reference_nodes()).map(|(p, r)| p - r).collect();
    let mut r = vec![0.0; psi.len()];
    let stats = disc.residual(&psi, &mut r)?;
    let (elliptic, elliptic_scaled) = disc.residual_norms(&r);
    let nt = map.layout.n_t;
    let cols = map.layout.shock_columns();
    let v = geo.v_inf();
    let (mut level_set, mut rh_flux) = (0.0f64, 0.0f64);
    for (k, i) in cols.clone().enumerate().skip(1).take(cols.len() - 2) {
        let [x, y] = map.node(i, nt);
        let p = phi[map.idx(i, nt)];
        level_set = level_set.max((-0.5 * (x * x + y * y) - v * y - p).abs());
        let g = nodal_gradient(geo, map, phi, i, nt);
        let slope = map.shock.slopes()[k];
        let norm = slope.hypot(1.0);
        let nu = [-slope / norm, 1.0 / norm];
        let rho = geo.setup.density_raw(g[0] * g[0] + g[1] * g[1], p);
        let down = rho * (g[0] * nu[0] + g[1] * nu[1]);
        let up = -x * nu[0] + (-y - v) * nu[1];
        rh_flux = rh_flux.max((down - up).abs());
    }
    let shock_increment = match update_shock(geo, map, phi, config) {
        Ok(u) => u.max_increment,
        Err(PmError::MonotonicityBreakdown { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(Residuals {
        level_set,
        rh_flux,
        elliptic,
        elliptic_scaled,
        shock_increment,
        cutoff_active: stats.active,
        cutoff_band: stats.band,
    })
}

struct Attempt {
    geo: Geometry,
    map: DomainMapping,
    phi: Vec<f64>,
    psi_beta: Vec<f64>,
    record: StepRecord,
}

/// Alternates fixed-shock Newton solves with level-set updates at one β.
fn run_beta(
    setup: GasSetup,
    beta: f64,
    layout: &GridLayout,
    prev: Option<(&ShockCurve, &[f64])>,
    config: &SolverConfig,
    solver: &mut LinearSolver,
) -> Result<Attempt> {
    let geo = Geometry::new(setup, beta)?;
    let cols = layout.columns(&geo);
    let knots = &cols[layout.shock_columns()];
    let mut shock = match prev {
        Some((s, _)) => s.rescaled(&geo, knots)?,
        None => ShockCurve::chord(&geo, knots)?,
    };
    let mut psi_b = prev.map(|p| p.1.to_vec()).unwrap_or_else(|| vec![0.0; layout.n_nodes()]);
    let mut record = StepRecord {
        beta,
        outer_iterations: 0,
        newton_iterations: 0,
        level_set_residual: f64::NAN,
        shock_increment: f64::NAN,
        cutoff_active: 0,
        cutoff_band: 0,
        converged: false,
    };
    let mut outer = 0;
    let mut mixer = Anderson::new(ANDERSON_DEPTH);
    loop {
        let map = map_domain(&geo, &shock, layout)?;
        let disc = Discretization::new(&geo, &map, config);
        let base = psi_beta(&geo, &map, &vec![0.0; layout.n_nodes()]);
        // base = -φ_β, so φ_β + ψ_β - φ_ref = ψ_β - base - ref.
        let psi0: Vec<f64> =
            (0..psi_b.len()).map(|k| psi_b[k] - base[k] - disc.reference_nodes()[k]).collect();
        let out = elliptic_step(&disc, &psi0, config, solver)?;
        record.newton_iterations += out.iterations;
        record.cutoff_active = out.stats.active;
        record.cutoff_band = out.stats.band;
        let phi: Vec<f64> = out.psi.iter().zip(disc.reference_nodes()).map(|(p, r)| p + r).collect();
        psi_b = psi_beta(&geo, &map, &phi);
        outer += 1;
        record.outer_iterations = outer;
        if !out.converged {
            return Ok(Attempt { geo, map, phi, psi_beta: psi_b, record });
        }
        let upd = update_shock(&geo, &map, &phi, config)?;
        record.level_set_residual = upd.level_set_residual;
        record.shock_increment = upd.max_increment;
        if upd.max_increment < config.tol_fixed_point {
            record.converged = true;
            return Ok(Attempt { geo, map, phi, psi_beta: psi_b, record });
        }
        if outer >= config.max_outer {
            return Ok(Attempt { geo, map, phi, psi_beta: psi_b, record });
        }
        let next = mixer.next(shock.values(), upd.shock.values(), geo.p1[1], geo.eta_bar);
        shock = ShockCurve::new(knots, &next)?;
    }
}

/// Solves the free-boundary problem for `(v∞, β, γ)` by continuation in β from 0.
pub fn solve_fbp(v_inf: f64, beta: f64, gamma: f64, config: &SolverConfig) -> Result<FbpSolution> {
    config.validate()?;
    let geo = build_geometry(v_inf, beta, gamma)?;
    solve_fbp_with(&geo, config)
}

/// As [`solve_fbp`], for a prebuilt target geometry.
pub fn solve_fbp_with(target: &Geometry, config: &SolverConfig) -> Result<FbpSolution> {
    config.validate()?;
    let setup = target.setup;
    let beta = target.beta;
    let layout = GridLayout::for_geometry(target, config.n_s, config.n_t, config.top_clustering)?;
    let mut solver = LinearSolver::new(&layout);
    let mut history = Vec::new();

    let first = run_beta(setup, 0.0, &layout, None, config, &mut solver)?;
    history.push(first.record.clone());
    let mut state = first;
    let nominal = beta / config.beta_steps as f64;
    let floor = beta / 64.0;
    let mut step = nominal;
    let mut done = 0.0;
    while state.record.converged && done < beta {
        let b = if done + step >= beta * (1.0 - 1e-12) { beta } else { done + step };
        let attempt = run_beta(setup, b, &layout, Some((&state.map.shock, &state.psi_beta)), config, &mut solver);
        let failed = match attempt {
            Ok(a) => {
                history.push(a.record.clone());
                if a.record.converged {
                    done = b;
                    state = a;
                    step = (2.0 * step).min(nominal);
                    continue;
                }
                Ok(a)
            }
            Err(e) if e.class() == ErrorClass::Numerical => Err(e),
            Err(e) => return Err(e),
        };
        if step / 2.0 < floor * (1.0 - 1e-9) {
            // Out of halvings: report the failing attempt, or the error that ended it.
            state = failed?;
            break;
        }
        step /= 2.0;
    }
    let residuals = evaluate(&state.geo, &state.map, &state.phi, config)?;
    Ok(FbpSolution {
        converged: state.record.converged && done >= beta,
        geometry: state.geo,
        config: config.clone(),
        mapping: state.map,
        phi: state.phi,
        residuals,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_zero_reproduces_the_normal_state() {
        let cfg = SolverConfig::with_grid(32, 16);
        let sol = solve_fbp(0.5, 0.0, 1.4, &cfg).unwrap();
        assert!(sol.converged);
        let n = &sol.geometry.state_n;
        for v in sol.shock().values() {
            assert!((v - sol.geometry.eta_bar).abs() < 1e-12);
        }
        let f = sol.fields();
        for k in 0..f.phi.len() {
            assert!((f.phi[k] - n.phi(f.xi[k], f.eta[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_solve_converges() {
        let s = GasSetup::new(1.4, 0.5).unwrap();
        let bc = crate::selfsim_geometry::beta_c(&s).unwrap();
        let mut cfg = SolverConfig::with_grid(32, 16);
        cfg.beta_steps = 4;
        let sol = solve_fbp(0.5, 0.3 * bc, 1.4, &cfg).unwrap();
        assert!(sol.converged, "{:?}", sol.history);
        let v = sol.shock().values();
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert!(sol.residuals.elliptic < 1e-10);
    }
}
