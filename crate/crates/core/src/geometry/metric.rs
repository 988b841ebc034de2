//! Asymmetric Manhattan-type grid metric.

use crate::error::{Error, Result};

/// Distance from grid point `(f, t)` to a pilot at `(f2, t2)`:
/// `|f - f2| + ((t - t2) mod k)`.
///
/// Frequency distance is non-cyclic; time distance is cyclic and asymmetric,
/// so a pilot serves a point only through the backward-in-time wrap. All
/// indices must lie in `{0,...,k-1}`.
pub fn metric_cost(f: usize, t: usize, f2: usize, t2: usize, k: usize) -> Result<usize> {
    for (name, v) in [("f", f), ("t", t), ("f'", f2), ("t'", t2)] {
        if v >= k {
            return Err(Error::OutOfRange(format!("{name}={v} for k={k}")));
        }
    }
    Ok(metric_cost_unchecked(f, t, f2, t2, k))
}

#[inline]
pub(crate) fn metric_cost_unchecked(f: usize, t: usize, f2: usize, t2: usize, k: usize) -> usize {
    f.abs_diff(f2) + (t + k - t2) % k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_indices() {
        assert!(metric_cost(2, 4, 5, 1, 5).is_err());
        assert!(metric_cost(5, 0, 0, 0, 5).is_err());
    }

    #[test]
    fn direct_formula() {
        assert_eq!(metric_cost(2, 4, 4, 1, 5).unwrap(), 2 + 3);
        assert_eq!(metric_cost(3, 0, 3, 0, 7).unwrap(), 0);
        // Backward wrap: a pilot one slot in the future costs k-1.
        assert_eq!(metric_cost(0, 0, 0, 1, 5).unwrap(), 4);
        assert_eq!(metric_cost(0, 1, 0, 0, 5).unwrap(), 1);
    }
}
