//! Prandtl–Meyer reflection of self-similar potential flow past a ramp.
//!
//! The crate covers the steady shock polar, the wedge-frame uniform states and corner
//! points, the transonic free-boundary solver and a verification suite.

pub mod error;
pub mod fbp_solver;
pub mod gas_model;
pub(crate) mod roots;
pub mod selfsim_geometry;
pub mod shock_polar;
pub mod verify;

pub use error::{PmError, Result};
