//! Virtual-domain coherence of a pilot set.
//!
//! For pilot set `P = {(f_t, t)}` the squared correlation over virtual
//! offsets `(i, j)` decomposes into pairwise difference-vector contributions:
//!
//! `rho^2_{i,j} = 1/|P| + (2/|P|^2) * sum_{(df,dt) in T_rep} c_{df,dt} * cos(2*pi*(df*i + dt*j)/k)`
//!
//! where `T_rep` keeps one representative per antipodal difference pair and
//! `c_{df,dt}` counts the unordered pilot pairs in that class.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::pattern::PilotPattern;

/// Squared-coherence map over the `k x k` virtual offset grid.
#[derive(Debug, Clone)]
pub struct CoherenceMap {
    k: usize,
    rho_sq: Vec<f64>,
    /// Number of pilots `|P|`.
    pub pilot_count: usize,
    /// Unordered pilot-pair multiplicity per antipodal-representative
    /// difference `(df, dt)` (integer differences, `df > 0` or
    /// `df == 0 && dt > 0`).
    pub multiplicities: BTreeMap<(i64, i64), usize>,
    /// `max_{(i,j) != (0,0)} rho_{i,j}` (square root of the map).
    pub max_offpeak: f64,
}

impl CoherenceMap {
    /// Squared coherence at virtual offset `(i, j)`; `i` is the delay offset.
    pub fn rho_sq(&self, i: usize, j: usize) -> f64 {
        self.rho_sq[i * self.k + j]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-major squared-coherence values (`i` major, `j` minor).
    pub fn cells(&self) -> &[f64] {
        &self.rho_sq
    }
}

/// Computes the coherence map of a pattern's pilot set.
pub fn coherence_map(pattern: &PilotPattern) -> CoherenceMap {
    let k = pattern.k();
    let pilots: Vec<(usize, usize)> = pattern.pilots().collect();
    let p = pilots.len();
    debug_assert!(p > 0, "pattern always carries k pilots");

    let mut multiplicities: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for a in 0..p {
        for b in (a + 1)..p {
            let df = pilots[b].0 as i64 - pilots[a].0 as i64;
            let dt = pilots[b].1 as i64 - pilots[a].1 as i64;
            // Antipodal representative: first nonzero coordinate positive.
            let rep = if df > 0 || (df == 0 && dt > 0) {
                (df, dt)
            } else {
                (-df, -dt)
            };
            *multiplicities.entry(rep).or_insert(0) += 1;
        }
    }

    let inv_p = 1.0 / p as f64;
    let pair_weight = 2.0 / (p * p) as f64;
    let mut rho_sq = vec![0.0; k * k];
    let mut max_offpeak: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            for (&(df, dt), &count) in &multiplicities {
                let phase = TAU * (df * i as i64 + dt * j as i64) as f64 / k as f64;
                acc += count as f64 * phase.cos();
            }
            let val = inv_p + pair_weight * acc;
            rho_sq[i * k + j] = val;
            if (i, j) != (0, 0) {
                max_offpeak = max_offpeak.max(val.max(0.0).sqrt());
            }
        }
    }
    // Degenerate single-pilot grid: the off-peak set is empty; the constant
    // map value 1/|P| (= 1) is reported instead.
    if k == 1 {
        max_offpeak = rho_sq[0].max(0.0).sqrt();
    }

    CoherenceMap {
        k,
        rho_sq,
        pilot_count: p,
        multiplicities,
        max_offpeak,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{baseline_3gpp, baseline_random, PilotPattern};

    /// Oracle: Eq-form over the full ordered difference multiset with weight
    /// 1/|P|^2, no factor 2, no representative collapsing.
    fn rho_sq_full_difference_set(pattern: &PilotPattern, i: usize, j: usize) -> f64 {
        let k = pattern.k();
        let pilots: Vec<(usize, usize)> = pattern.pilots().collect();
        let p = pilots.len();
        let mut acc = 0.0;
        for a in 0..p {
            for b in 0..p {
                if a == b {
                    continue;
                }
                let df = pilots[b].0 as i64 - pilots[a].0 as i64;
                let dt = pilots[b].1 as i64 - pilots[a].1 as i64;
                let phase = TAU * (df * i as i64 + dt * j as i64) as f64 / k as f64;
                acc += phase.cos();
            }
        }
        1.0 / p as f64 + acc / (p * p) as f64
    }

    #[test]
    fn origin_is_normalized() {
        for k in [2usize, 5, 8, 13] {
            let p = baseline_random(k, 7 * k as u64);
            let m = coherence_map(&p);
            assert!((m.rho_sq(0, 0) - 1.0).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn single_pilot_grid_is_flat() {
        let p = PilotPattern::from_schedule(1, vec![0]).unwrap();
        let m = coherence_map(&p);
        assert_eq!(m.pilot_count, 1);
        assert!(m.multiplicities.is_empty());
        assert!((m.rho_sq(0, 0) - 1.0).abs() < 1e-12);
        assert!((m.max_offpeak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn representative_form_matches_full_difference_set() {
        for k in 5..=17 {
            for seed in 0..7 {
                let p = baseline_random(k, seed);
                let m = coherence_map(&p);
                for i in 0..k {
                    for j in 0..k {
                        let full = rho_sq_full_difference_set(&p, i, j);
                        assert!(
                            (m.rho_sq(i, j) - full).abs() < 1e-10,
                            "k={k} seed={seed} offset ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gpp_k5_peaks_on_offset_line() {
        // All 3GPP k=5 pilot differences satisfy 2*df + dt = 0 (mod 5), so
        // every offset with 2i + j = 0 (mod 5) aligns all pairs.
        let p = baseline_3gpp(5, 0).unwrap();
        let m = coherence_map(&p);
        for i in 0..5 {
            for j in 0..5 {
                if (2 * i + j) % 5 == 0 {
                    assert!((m.rho_sq(i, j) - 1.0).abs() < 1e-10, "offset ({i},{j})");
                }
            }
        }
        assert!((m.max_offpeak - 1.0).abs() < 1e-10);
    }

    #[test]
    fn multiplicities_count_unordered_pairs() {
        for k in [4usize, 7, 10] {
            let p = baseline_random(k, 11);
            let m = coherence_map(&p);
            let total: usize = m.multiplicities.values().sum();
            assert_eq!(total, k * (k - 1) / 2);
        }
    }
}
