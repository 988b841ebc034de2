//! Normalized delay-Doppler correlation kernel of regular block-hopping
//! patterns with hop increment `d`:
//!
//! `|K(tau, nu)| = (1/(M*k)) * |sin(k*pi*(nu - d*M*tau)) / sin(pi*(nu - d*M*tau))| * |sin(M*pi*tau) / sin(pi*tau)|`
//!
//! normalized so that `K(0,0) = 1`. The sine ratios are Dirichlet kernels;
//! at removable singularities (denominator argument an integer) they are
//! evaluated by their limit, the term count.

use std::f64::consts::PI;

const SINGULARITY_EPS: f64 = 1e-9;

/// `|sin(n*pi*x) / sin(pi*x)|` with the limit value `n` at integer `x`.
fn dirichlet_ratio_abs(x: f64, n: usize) -> f64 {
    let denom = (PI * x).sin();
    if denom.abs() < SINGULARITY_EPS {
        n as f64
    } else {
        ((n as f64 * PI * x).sin() / denom).abs()
    }
}

/// Kernel magnitude `|K(tau, nu)|` for subband width `M`, hopping period `k`,
/// and hop increment `d`.
pub fn legacy_kernel(tau: f64, nu: f64, m: usize, k: usize, d: usize) -> f64 {
    assert!(m >= 1 && k >= 1, "M and k must be positive");
    let ridge = nu - (d * m) as f64 * tau;
    dirichlet_ratio_abs(ridge, k) * dirichlet_ratio_abs(tau, m) / (m * k) as f64
}

/// Strongest off-origin ambiguity of the hopped pattern, attained at
/// `(tau, nu) = (1/(M*k), d/k)`: `sin(pi/k) / (M * sin(pi/(M*k)))`.
///
/// Implemented through the Dirichlet-ratio limit so the `M = k = 1`
/// degenerate case evaluates to 1 by continuity.
pub fn kernel_peak(m: usize, k: usize) -> f64 {
    assert!(m >= 1 && k >= 1, "M and k must be positive");
    dirichlet_ratio_abs(1.0 / (m * k) as f64, m) / m as f64
}
