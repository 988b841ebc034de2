//! Nearest-pilot distances, covering radius, and coverage sum.

use crate::geometry::metric_cost_unchecked;
use crate::pattern::PilotPattern;

/// Per-cell nearest-pilot distances `a_{ft}` plus their max and sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    k: usize,
    a: Vec<usize>,
    /// Covering radius `r(X;C) = max_{f,t} a_{ft}`.
    pub radius: usize,
    /// Coverage sum `sum_{f,t} a_{ft}`.
    pub total: usize,
}

impl CoverageReport {
    /// Nearest-pilot distance of grid point `(f, t)`.
    pub fn a(&self, f: usize, t: usize) -> usize {
        self.a[f * self.k + t]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-major `a_{ft}` values (`f` major, `t` minor).
    pub fn cells(&self) -> &[usize] {
        &self.a
    }
}

/// Computes the coverage report of a pattern under the grid metric.
pub fn coverage(pattern: &PilotPattern) -> CoverageReport {
    let k = pattern.k();
    let pilots: Vec<(usize, usize)> = pattern.pilots().collect();
    let mut a = vec![usize::MAX; k * k];
    for f in 0..k {
        for t in 0..k {
            let d = pilots
                .iter()
                .map(|&(f2, t2)| metric_cost_unchecked(f, t, f2, t2, k))
                .min()
                .expect("pattern has at least one pilot");
            a[f * k + t] = d;
        }
    }
    let radius = a.iter().copied().max().unwrap_or(0);
    let total = a.iter().sum();
    CoverageReport { k, a, radius, total }
}
