//! Free-boundary solver for the curved transonic shock between P1 and P2.
//!
//! Ω is mapped onto a logical rectangle with vertical fibres `η = t·h(ξ)`; the field
//! equation `div(ρ Dφ) + 2ρ = 0` is discretized with a vertex-centred median-dual
//! finite-volume scheme and solved by Newton's method for a fixed shock, alternating
//! with a Newton step on the level set `φ = φ∞` that moves the shock.

mod elliptic;
mod fields;
mod mapping;
mod pchip;
mod shock;
mod solve;

use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};

pub use elliptic::{elliptic_step, CutoffStats, Discretization, EllipticOutcome, LinearSolver, OperatorAudit};
pub use fields::{extract_fields, nodal_gradient, SampledFields};
pub use mapping::{map_domain, DomainMapping, GridLayout};
pub use pchip::Pchip;
pub use shock::{level_set_step, update_shock, ShockCurve, ShockUpdate};
pub use solve::{build_geometry, solve_fbp, solve_fbp_with, FbpSolution, Residuals, StepRecord};

pub const SOLVER_CONFIG_SCHEMA: &str = "solverconfig/1";

fn default_schema() -> String {
    SOLVER_CONFIG_SCHEMA.into()
}

/// Numerical parameters of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    /// Cells along ξ.
    pub n_s: usize,
    /// Cells along the vertical fibres.
    pub n_t: usize,
    /// δ in the cutoff slope `(2 - δ)/(1 + γ)`.
    pub cutoff_delta: f64,
    /// Width ε of the sonic bands; `None` means `0.15·min(c_O, c_N)`.
    pub cutoff_band: Option<f64>,
    pub relax_shock: f64,
    pub relax_field: f64,
    pub tol_elliptic: f64,
    pub tol_fixed_point: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub beta_steps: usize,
    /// Spacing of the top grid row relative to a uniform row spacing; 1 is uniform.
    pub top_clustering: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            schema: default_schema(),
            n_s: 128,
            n_t: 64,
            cutoff_delta: 0.2,
            cutoff_band: None,
            relax_shock: 0.5,
            relax_field: 1.0,
            tol_elliptic: 1e-11,
            tol_fixed_point: 1e-10,
            max_outer: 100,
            max_inner: 30,
            beta_steps: 8,
            top_clustering: 0.3,
        }
    }
}

impl SolverConfig {
    pub fn with_grid(n_s: usize, n_t: usize) -> Self {
        SolverConfig { n_s, n_t, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PmError::Config(m));
        if self.schema != SOLVER_CONFIG_SCHEMA {
            return bad(format!("unexpected schema tag {}", self.schema));
        }
        if self.n_s < 16 || self.n_t < 16 {
            return bad(format!("grid {}x{} below the 16x16 minimum", self.n_s, self.n_t));
        }
        if !(self.cutoff_delta > 0.0 && self.cutoff_delta < 2.0) {
            return bad(format!("cutoff_delta {} outside (0, 2)", self.cutoff_delta));
        }
        if let Some(b) = self.cutoff_band {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("cutoff_band {b} must be positive"));
            }
        }
        for (name, v) in [("relax_shock", self.relax_shock), ("relax_field", self.relax_field)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} {v} outside (0, 1]"));
            }
        }
        for (name, v) in [("tol_elliptic", self.tol_elliptic), ("tol_fixed_point", self.tol_fixed_point)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.beta_steps == 0 {
            return bad("iteration caps and beta_steps must be at least 1".into());
        }
        if !(self.top_clustering > 0.0 && self.top_clustering <= 1.0) {
            return bad(format!("top_clustering {} outside (0, 1]", self.top_clustering));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: SolverConfig = serde_json::from_str(text).map_err(|e| PmError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_validate() {
        SolverConfig::default().validate().unwrap();
        let js = serde_json::to_string(&SolverConfig::default()).unwrap();
        assert!(js.contains("solverconfig/1"));
        assert_eq!(SolverConfig::from_json(&js).unwrap(), SolverConfig::default());
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = SolverConfig::with_grid(8, 64);
        assert!(c.validate().is_err());
        c.n_s = 64;
        c.relax_shock = 0.0;
        assert!(c.validate().is_err());
        assert!(SolverConfig::from_json("{\"n_s\": 32, \"bogus\": 1}").is_err());
        assert!(SolverConfig::from_json("{\"n_s\": 32, \"n_t\": 16}").is_ok());
    }
}
