//! Pilot patterns on the k x k time-frequency grid.
//!
//! A pattern assigns one contiguous frequency subband to each of `k` time
//! slots. Encoded as a binary matrix `X`, feasibility requires exactly one
//! active subband per slot (column constraint); the fairness-friendly base
//! patterns additionally visit every subband exactly once per period (row
//! constraint), so the schedule is a permutation of `{0,...,k-1}`.
//!
//! Slots and subbands are 0-indexed throughout the crate.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid geometry: `k` subbands of `M` subcarriers each, `N = k * M` total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    /// Hopping period and subband count; the pattern grid is `k x k`.
    pub k: usize,
    /// Subband width in subcarriers.
    pub m: usize,
}

impl GridDims {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::invalid_argument(format!(
                "grid dims must be positive, got k={k}, M={m}"
            )));
        }
        Ok(GridDims { k, m })
    }

    /// Total number of subcarriers `N = k * M`.
    pub fn n(&self) -> usize {
        self.k * self.m
    }

    /// Subcarrier rows of subband `f` (contiguous block of width `M`).
    pub fn subband_rows(&self, f: usize) -> std::ops::Range<usize> {
        f * self.m..(f + 1) * self.m
    }
}

/// Lightweight serialization schema for pattern files: `{"k":..,"schedule":[..]}`.
#[derive(Serialize, Deserialize)]
struct RawPattern {
    k: usize,
    schedule: Vec<usize>,
}

/// The active-subband trajectory `f_t` over one hopping period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPattern", into = "RawPattern")]
pub struct PilotPattern {
    k: usize,
    schedule: Vec<usize>,
    is_permutation: bool,
}

impl TryFrom<RawPattern> for PilotPattern {
    type Error = Error;
    fn try_from(raw: RawPattern) -> Result<Self> {
        PilotPattern::from_schedule(raw.k, raw.schedule)
    }
}

impl From<PilotPattern> for RawPattern {
    fn from(p: PilotPattern) -> RawPattern {
        RawPattern {
            k: p.k,
            schedule: p.schedule,
        }
    }
}

impl PilotPattern {
    /// Builds a pattern from a per-slot subband schedule.
    ///
    /// Enforces the column constraint (length `k`, entries in `{0,...,k-1}`);
    /// the permutation flag is computed by inspection, so non-permutation
    /// schedules such as the chirp baseline are representable.
    pub fn from_schedule(k: usize, schedule: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPattern("k must be positive".into()));
        }
        if schedule.len() != k {
            return Err(Error::InvalidPattern(format!(
                "schedule length {} does not match k={k}",
                schedule.len()
            )));
        }
        if let Some(&f) = schedule.iter().find(|&&f| f >= k) {
            return Err(Error::InvalidPattern(format!(
                "subband index {f} out of range for k={k}"
            )));
        }
        let is_permutation = is_permutation_of(k, &schedule);
        Ok(PilotPattern {
            k,
            schedule,
            is_permutation,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    pub fn is_permutation(&self) -> bool {
        self.is_permutation
    }

    /// Pilot locations `(f, t)` in slot order.
    pub fn pilots(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.schedule.iter().enumerate().map(|(t, &f)| (f, t))
    }

    /// Recomputes feasibility from the stored schedule.
    ///
    /// Returns true iff the column constraint holds and, when
    /// `require_permutation` is set, every subband appears exactly once.
    pub fn validate(&self, require_permutation: bool) -> bool {
        validate_schedule(self.k, &self.schedule, require_permutation)
    }

    /// Cyclic column shift: `schedule'[t] = schedule[(t + s) mod k]`.
    ///
    /// Negative shifts are reduced mod `k`. Permutation status is preserved.
    pub fn cyclic_shift(&self, s: i64) -> Self {
        let k = self.k;
        let s = s.rem_euclid(k as i64) as usize;
        let schedule = (0..k).map(|t| self.schedule[(t + s) % k]).collect();
        PilotPattern {
            k,
            schedule,
            is_permutation: self.is_permutation,
        }
    }

    /// Binary incidence matrix `X` with `X[f][t] = 1` iff `schedule[t] = f`.
    pub fn to_matrix(&self) -> Vec<Vec<bool>> {
        let mut x = vec![vec![false; self.k]; self.k];
        for (f, t) in self.pilots() {
            x[f][t] = true;
        }
        x
    }

    /// Inverse of [`PilotPattern::to_matrix`]; rejects matrices whose columns
    /// do not contain exactly one active entry.
    pub fn from_matrix(x: &[Vec<bool>]) -> Result<Self> {
        let k = x.len();
        if k == 0 || x.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidPattern(
                "incidence matrix must be square and non-empty".into(),
            ));
        }
        let mut schedule = Vec::with_capacity(k);
        for t in 0..k {
            let active: Vec<usize> = (0..k).filter(|&f| x[f][t]).collect();
            match active.as_slice() {
                [f] => schedule.push(*f),
                _ => {
                    return Err(Error::InvalidPattern(format!(
                        "column {t} has {} active subbands, expected 1",
                        active.len()
                    )))
                }
            }
        }
        PilotPattern::from_schedule(k, schedule)
    }
}

fn is_permutation_of(k: usize, schedule: &[usize]) -> bool {
    let mut seen = vec![false; k];
    for &f in schedule {
        if f >= k || seen[f] {
            return false;
        }
        seen[f] = true;
    }
    schedule.len() == k
}

/// Checks a raw schedule against the feasibility constraints.
///
/// The column constraint (length `k`, entries in range) is always required;
/// the row constraint (each subband exactly once) only when
/// `require_permutation` is set.
pub fn validate_schedule(k: usize, schedule: &[usize], require_permutation: bool) -> bool {
    if k == 0 || schedule.len() != k || schedule.iter().any(|&f| f >= k) {
        return false;
    }
    !require_permutation || is_permutation_of(k, schedule)
}

/// 3GPP SRS-style block-hopping baseline.
///
/// Odd `k`: `f_t = (f0 + t * floor(k/2)) mod k`. Even `k`: the interleaved
/// progression `f_t = (f0 + floor(t/2) + (k/2) * (t mod 2)) mod k`. Both are
/// permutations for every `k >= 2`.
pub fn baseline_3gpp(k: usize, f0: i64) -> Result<PilotPattern> {
    if k < 2 {
        return Err(Error::invalid_argument(format!(
            "3GPP baseline requires k >= 2, got {k}"
        )));
    }
    let f0 = f0.rem_euclid(k as i64) as usize;
    let schedule: Vec<usize> = if k % 2 == 1 {
        (0..k).map(|t| (f0 + t * (k / 2)) % k).collect()
    } else {
        (0..k)
            .map(|t| (f0 + t / 2 + (k / 2) * (t % 2)) % k)
            .collect()
    };
    PilotPattern::from_schedule(k, schedule)
}

/// Chirp baseline `f_t = t^2 mod k`.
///
/// Not a permutation for prime `k > 2` (quadratic residues repeat); it is
/// evaluated as-is, leaving unvisited subbands without a pilot in the period.
pub fn baseline_chirp(k: usize) -> PilotPattern {
    assert!(k >= 1, "chirp baseline requires k >= 1");
    let schedule = (0..k).map(|t| (t * t) % k).collect();
    PilotPattern::from_schedule(k, schedule).expect("chirp schedule is column-feasible")
}

/// Uniformly random permutation schedule, deterministic for a fixed seed.
pub fn baseline_random(k: usize, seed: u64) -> PilotPattern {
    assert!(k >= 1, "random baseline requires k >= 1");
    let mut schedule: Vec<usize> = (0..k).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    schedule.shuffle(&mut rng);
    PilotPattern::from_schedule(k, schedule).expect("shuffled identity is a permutation")
}
