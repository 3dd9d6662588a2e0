use std::f64::consts::PI;

use crate::linalg::{CVec, C64};

/// Uniform-linear-array response: element n is exp(j·2π·s·n·sin θ).
pub fn steering_vector(theta: f64, n: usize, spacing_ratio: f64) -> CVec {
    let phase = 2.0 * PI * spacing_ratio * theta.sin();
    CVec::from_fn(n, |i, _| C64::from_polar(1.0, phase * i as f64))
}

/// d a(θ)/dθ, element n is j·2π·s·cos θ·n·a_n.
pub fn steering_derivative(theta: f64, n: usize, spacing_ratio: f64) -> CVec {
    let a = steering_vector(theta, n, spacing_ratio);
    let k = C64::new(0.0, 2.0 * PI * spacing_ratio * theta.cos());
    CVec::from_fn(n, |i, _| k * (i as f64) * a[i])
}
