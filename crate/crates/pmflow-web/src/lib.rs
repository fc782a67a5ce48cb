//! Browser bindings: each export takes plain numbers and returns a JSON string.

use pmflow::fbp_solver::{solve_fbp, SolverConfig};
use pmflow::gas_model::GasSetup;
use pmflow::selfsim_geometry::{beta_c, elling_liu_of, map_p2_to_p1, polylines, Geometry};
use pmflow::shock_polar::{detachment, polar_curve, theta_sonic};
use pmflow::PmError;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a solve interactive.
pub const MAX_CELLS: usize = 64 * 32;

#[derive(Serialize)]
pub struct PolarView {
    pub m_inf: f64,
    pub theta_detach: f64,
    pub theta_sonic: f64,
    /// `(deflection, speed)` along the polar, by increasing shock angle.
    pub curve: Vec<[f64; 2]>,
}

pub fn polar_view(m_inf: f64, gamma: f64, samples: usize) -> Result<PolarView, PmError> {
    let curve = polar_curve(m_inf, gamma, samples.clamp(2, 2000))?;
    Ok(PolarView {
        m_inf,
        theta_detach: detachment(m_inf, gamma)?.1,
        theta_sonic: theta_sonic(m_inf, gamma)?,
        curve: curve.iter().map(|s| [s.deflection, s.speed()]).collect(),
    })
}

#[derive(Serialize)]
pub struct GeometryView {
    pub beta: f64,
    pub beta_c: f64,
    /// Steady-frame image `(u∞, θ_w)`; absent at β = 0.
    pub steady: Option<[f64; 2]>,
    pub elling_liu_f: f64,
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    pub curves: Vec<(&'static str, Vec<[f64; 2]>)>,
}

fn geometry_for(gamma: f64, v_inf: f64, beta_frac: f64) -> Result<Geometry, PmError> {
    let setup = GasSetup::new(gamma, v_inf)?;
    Geometry::new(setup, beta_frac * beta_c(&setup)?)
}

pub fn geometry_view(gamma: f64, v_inf: f64, beta_frac: f64) -> Result<GeometryView, PmError> {
    let geo = geometry_for(gamma, v_inf, beta_frac)?;
    let steady = if geo.beta > 0.0 { Some(map_p2_to_p1(v_inf, geo.beta, gamma)?.into()) } else { None };
    Ok(GeometryView {
        beta: geo.beta,
        beta_c: geo.beta_c,
        steady,
        elling_liu_f: elling_liu_of(&geo)?.f,
        p1: geo.p1,
        p2: geo.p2,
        curves: polylines(&geo, 97),
    })
}

#[derive(Serialize)]
pub struct SolveView {
    pub converged: bool,
    pub n_s: usize,
    pub n_t: usize,
    /// Nodal fields, column-major like the solver unknowns.
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub psi: Vec<f64>,
    pub mach: Vec<f64>,
    pub shock: Vec<[f64; 2]>,
    pub level_set_residual: f64,
    pub rh_residual: f64,
    pub geometry: GeometryView,
}

pub fn solve_view(gamma: f64, v_inf: f64, beta_frac: f64, n_s: usize, n_t: usize) -> Result<SolveView, PmError> {
    if n_s * n_t > MAX_CELLS {
        return Err(PmError::Config(format!("grid {n_s}x{n_t} exceeds {MAX_CELLS} cells")));
    }
    let geometry = geometry_view(gamma, v_inf, beta_frac)?;
    let sol = solve_fbp(v_inf, geometry.beta, gamma, &SolverConfig::with_grid(n_s, n_t))?;
    let f = sol.fields();
    let s = sol.shock();
    Ok(SolveView {
        converged: sol.converged,
        n_s,
        n_t,
        xi: f.xi,
        eta: f.eta,
        psi: f.psi,
        mach: f.mach,
        shock: s.knots().iter().zip(s.values()).map(|(&x, &y)| [x, y]).collect(),
        level_set_residual: sol.residuals.level_set,
        rh_residual: sol.residuals.rh_flux,
        geometry,
    })
}

fn to_js<T: Serialize>(r: Result<T, PmError>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn polar(m_inf: f64, gamma: f64, samples: usize) -> Result<String, JsError> {
    to_js(polar_view(m_inf, gamma, samples))
}

#[wasm_bindgen]
pub fn geometry(gamma: f64, v_inf: f64, beta_frac: f64) -> Result<String, JsError> {
    to_js(geometry_view(gamma, v_inf, beta_frac))
}

#[wasm_bindgen]
pub fn solve(gamma: f64, v_inf: f64, beta_frac: f64, n_s: usize, n_t: usize) -> Result<String, JsError> {
    to_js(solve_view(gamma, v_inf, beta_frac, n_s, n_t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_ends_at_normal_shock() {
        let v = polar_view(2.0, 1.4, 50).unwrap();
        assert_eq!(v.curve.len(), 50);
        assert!(v.theta_sonic < v.theta_detach);
        assert!(v.curve.last().unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn geometry_maps_to_the_steady_frame() {
        let g = geometry_view(1.4, 0.5, 0.3).unwrap();
        assert!((g.beta - 0.3 * g.beta_c).abs() < 1e-15);
        assert!(g.steady.is_some());
        assert!(geometry_view(1.4, 0.5, 0.0).unwrap().steady.is_none());
        assert!(geometry_view(1.4, 0.5, 1.2).is_err());
    }

    #[test]
    fn coarse_solve_serializes() {
        let s = solve_view(1.4, 0.5, 0.2, 32, 16).unwrap();
        assert!(s.converged);
        assert_eq!(s.xi.len(), 33 * 17);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"shock\""));
        assert!(solve_view(1.4, 0.5, 0.2, 128, 64).is_err());
    }
}
