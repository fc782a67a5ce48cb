//! JSON documents written by the commands. Each carries a schema tag checked on load.

use pmflow::fbp_solver::{GridLayout, Residuals, SolverConfig, StepRecord};
use pmflow::shock_polar::PolarState;
use serde::{Deserialize, Serialize};

use crate::config::{Range, Resolved};
use crate::output::Document;

macro_rules! document {
    ($t:ty, $tag:literal) => {
        impl Document for $t {
            const SCHEMA: &'static str = $tag;
            fn schema(&self) -> &str {
                &self.schema
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarDoc {
    pub schema: String,
    pub gamma: f64,
    pub m_inf: f64,
    pub sigma_detach: f64,
    pub theta_detach: f64,
    pub theta_sonic: f64,
    pub theta_w: Option<f64>,
    /// Weak-branch state at `theta_w`.
    pub weak_state: Option<PolarState>,
    pub samples: usize,
}
document!(PolarDoc, "polar/1");

/// Both parameter frames and the error of mapping one into the other and back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesDoc {
    pub schema: String,
    pub parameters: Resolved,
    /// `|(v∞, β) - P2(P1(v∞, β))|∞`; `None` at β = 0, which has no steady-frame image.
    pub roundtrip_error: Option<f64>,
}
document!(StatesDoc, "states/1");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaHatEntry {
    pub v_inf: f64,
    pub beta_c: f64,
    pub beta_hat: Option<f64>,
    /// `unique`, `none`, or the error that stopped the search.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllingLiuDoc {
    pub schema: String,
    pub gamma: f64,
    pub v_star: f64,
    pub v_inf: Range,
    pub n_beta: usize,
    pub beta_hat: Vec<BetaHatEntry>,
}
document!(EllingLiuDoc, "elling-liu/1");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema: String,
    pub gamma: f64,
    pub v_inf: f64,
    pub beta: f64,
    pub beta_c: f64,
    pub converged: bool,
    pub residuals: Residuals,
    /// Continuation attempts, including cutoff activity of each.
    pub history: Vec<StepRecord>,
    pub layout: GridLayout,
    pub config: SolverConfig,
}
document!(RunReport, "fbp-report/1");

/// Everything that may differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub wall_time_s: f64,
    /// Threads used by one solve; the solver is sequential.
    pub solver_threads: usize,
    /// Worker pool size of the enclosing sweep.
    pub sweep_workers: Option<usize>,
    pub timestamp_unix: u64,
}
document!(RunMeta, "run-meta/1");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub schema: String,
    pub message: String,
    pub exit_code: i32,
    pub residuals: Option<Residuals>,
    pub history: Vec<StepRecord>,
}
document!(Diagnostics, "diagnostics/1");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub index: usize,
    pub dir: String,
    pub v_inf: f64,
    pub beta_frac: f64,
    pub beta: Option<f64>,
    /// `converged`, `unconverged` or `failed`.
    pub status: String,
    pub exit_code: i32,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepIndex {
    pub schema: String,
    pub gamma: f64,
    pub v_inf: Range,
    pub beta_frac: Range,
    pub points: Vec<SweepPoint>,
}
document!(SweepIndex, "sweep-index/1");
