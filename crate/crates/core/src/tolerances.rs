//! Numerical tolerances used across the crate, in one place.

/// PSD slack: a block is accepted as PSD when λ_min ≥ −PSD_SLACK·tr.
pub const PSD_SLACK: f64 = 1e-9;

/// Relative tolerance for algebraic identity checks (two routes to one value).
pub const IDENTITY_REL: f64 = 1e-10;

/// Absolute slack on the transmit-power budget, watts.
pub const POWER_SLACK: f64 = 1e-6;

/// Relative slack on SINR constraints when screening rank-one candidates.
pub const SINR_REL: f64 = 1e-6;

/// Primal feasibility tolerance reported for an optimal SDP solution
/// (relative to the constraint row scale).
pub const SDP_FEASIBILITY: f64 = 1e-7;

/// Relative tolerance used to decide that a Schur complement is positive.
pub const SCHUR_REL: f64 = 1e-12;
