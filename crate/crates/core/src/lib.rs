//! Secure IRS-assisted integrated sensing and semantic communication:
//! channel models, closed-form metrics, the conic solver layer and the
//! alternating-optimization design stack.

extern crate openblas_src;

pub mod conic;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod par;
pub mod system;
pub mod tolerances;

pub use error::{Error, Result};
