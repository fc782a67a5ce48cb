use thiserror::Error;

/// Failure classes shared by every module. The CLI maps each class to an exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cavitation: Bernoulli argument {argument} is not positive")]
    Cavitation { argument: f64 },

    #[error("shock detached: wedge angle {theta_w} >= detachment angle {theta_detach}")]
    Detached { theta_w: f64, theta_detach: f64 },

    #[error("no attached oblique shock: {0}")]
    NoAttachedShock(String),

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("monotonicity breakdown at xi = {xi}: d_eta(phi_inf - phi) = {slope} >= 0")]
    MonotonicityBreakdown { xi: f64, slope: f64 },

    #[error("sign change of F is not unique: {count} changes found")]
    NonUniqueSignChange { count: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Domain,
    Numerical,
}

impl PmError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PmError::Config(_) => ErrorClass::Config,
            PmError::Domain(_)
            | PmError::Detached { .. }
            | PmError::NoAttachedShock(_)
            | PmError::NotApplicable(_) => ErrorClass::Domain,
            PmError::Cavitation { .. }
            | PmError::Bracket { .. }
            | PmError::Invariant(_)
            | PmError::MonotonicityBreakdown { .. }
            | PmError::NonUniqueSignChange { .. }
            | PmError::Numerical(_) => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, PmError>;
