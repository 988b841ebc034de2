//! Modular lines, collinearity census, and symmetric-triple detection.
//!
//! A modular line is the point set `{(f,t) : u*f + v*t = c (mod k)}` for a
//! primitive direction `gcd(u,v,k) = 1`. Coefficient triples that are unit
//! multiples of each other describe the same point set, so lines are
//! deduplicated by their point sets rather than by coefficient normalization;
//! the residue characterization of directions is unreliable for composite `k`.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::pattern::PilotPattern;

/// A residue-class line on the `k x k` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModularLine {
    /// Representative coefficients (first triple encountered in `(u,v,c)` order).
    pub u: usize,
    pub v: usize,
    pub c: usize,
    points: Vec<(usize, usize)>,
}

impl ModularLine {
    /// Member grid points, sorted; a primitive-direction line has exactly `k`.
    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    /// Membership test via the defining congruence.
    pub fn contains(&self, f: usize, t: usize, k: usize) -> bool {
        (self.u * f + self.v * t) % k == self.c
    }
}

/// A symmetric pilot triple on one modular line: subband indices
/// `f - d, f, f + d` with spacing `d >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricTriple {
    /// Index of one line carrying the triple (lines are deduplicated, but a
    /// triple can lie on several lines for composite `k`; the smallest index
    /// is reported).
    pub line: usize,
    /// Subband spacing.
    pub d: usize,
    /// The three pilots, ordered by subband index.
    pub pilots: [(usize, usize); 3],
}

/// A symmetric triple of grid *points* (pattern-independent), used to
/// materialize exclusion rows in the exported optimization model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointTriple {
    pub line: usize,
    pub d: usize,
    pub points: [(usize, usize); 3],
}

/// All primitive-direction modular lines of a grid, with per-point incidence.
#[derive(Debug, Clone)]
pub struct LineSet {
    k: usize,
    lines: Vec<ModularLine>,
    /// Line indices through each grid point, indexed by `f * k + t`.
    through: Vec<Vec<u16>>,
}

impl LineSet {
    /// Enumerates and deduplicates all primitive-direction lines for grid size `k`.
    pub fn new(k: usize) -> Self {
        assert!(k >= 2, "modular lines require k >= 2");
        let mut lines: Vec<ModularLine> = Vec::new();
        let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
        for u in 0..k {
            for v in 0..k {
                if gcd(gcd(u, v), k) != 1 {
                    continue;
                }
                for c in 0..k {
                    let mut points = Vec::with_capacity(k);
                    for f in 0..k {
                        for t in 0..k {
                            if (u * f + v * t) % k == c {
                                points.push((f, t));
                            }
                        }
                    }
                    debug_assert_eq!(points.len(), k, "primitive line has k points");
                    if seen.insert(points.clone()) {
                        lines.push(ModularLine { u, v, c, points });
                    }
                }
            }
        }
        assert!(lines.len() <= u16::MAX as usize);
        let mut through = vec![Vec::new(); k * k];
        for (idx, line) in lines.iter().enumerate() {
            for &(f, t) in &line.points {
                through[f * k + t].push(idx as u16);
            }
        }
        LineSet { k, lines, through }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lines(&self) -> &[ModularLine] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Indices of the lines through grid point `(f, t)`.
    pub fn through(&self, f: usize, t: usize) -> &[u16] {
        &self.through[f * self.k + t]
    }

    /// All symmetric point triples across all lines, deduplicated by point
    /// set (for composite `k` a triple can lie on more than one line).
    pub fn symmetric_point_triples(&self) -> Vec<PointTriple> {
        let mut seen: BTreeSet<[(usize, usize); 3]> = BTreeSet::new();
        let mut out = Vec::new();
        for (idx, line) in self.lines.iter().enumerate() {
            for (d, triple) in symmetric_triples_on(&line.points) {
                if seen.insert(triple) {
                    out.push(PointTriple {
                        line: idx,
                        d,
                        points: triple,
                    });
                }
            }
        }
        out
    }
}

/// Convenience wrapper returning the deduplicated line set for grid size `k`.
///
/// For prime `k` the set has exactly `k * (k + 1)` members; for composite `k`
/// it can be slightly larger and is determined by direct enumeration.
pub fn enumerate_modular_lines(k: usize) -> LineSet {
    LineSet::new(k)
}

/// Per-line pilot counts and their redundancy summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollinearityCensus {
    /// Pilot count per line, indexed like [`LineSet::lines`].
    pub per_line: Vec<u16>,
    /// Number of lines carrying three or more pilots.
    pub redundant_lines: usize,
    /// Whether any line carries four or more pilots.
    pub has_four_collinear: bool,
}

/// Counts pilots per modular line.
pub fn collinearity_census(pattern: &PilotPattern, lines: &LineSet) -> CollinearityCensus {
    assert_eq!(pattern.k(), lines.k(), "pattern and line set disagree on k");
    let mut per_line = vec![0u16; lines.len()];
    for (f, t) in pattern.pilots() {
        for &l in lines.through(f, t) {
            per_line[l as usize] += 1;
        }
    }
    let redundant_lines = per_line.iter().filter(|&&c| c >= 3).count();
    let has_four_collinear = per_line.iter().any(|&c| c >= 4);
    CollinearityCensus {
        per_line,
        redundant_lines,
        has_four_collinear,
    }
}

/// Finds all symmetric pilot triples of a pattern.
///
/// Subband arithmetic is non-modular (`f - d` and `f + d` must stay in
/// `{0,...,k-1}`), consistent with the non-cyclic `|f - f'|` metric; the time
/// coordinates are wherever the carrying line places them. Triples are
/// deduplicated across lines and returned in deterministic order.
pub fn symmetric_triples(pattern: &PilotPattern, lines: &LineSet) -> Vec<SymmetricTriple> {
    assert_eq!(pattern.k(), lines.k(), "pattern and line set disagree on k");
    let pilot_set: HashSet<(usize, usize)> = pattern.pilots().collect();
    let mut seen: BTreeSet<[(usize, usize); 3]> = BTreeSet::new();
    let mut out = Vec::new();
    for (idx, line) in lines.lines().iter().enumerate() {
        let on_line: Vec<(usize, usize)> = line
            .points()
            .iter()
            .copied()
            .filter(|p| pilot_set.contains(p))
            .collect();
        if on_line.len() < 3 {
            continue;
        }
        for (d, triple) in symmetric_triples_on(&on_line) {
            if seen.insert(triple) {
                out.push(SymmetricTriple {
                    line: idx,
                    d,
                    pilots: triple,
                });
            }
        }
    }
    out
}

/// Enumerates symmetric triples within one point collection: all
/// `(p-, p0, p+)` with subband indices `f - d, f, f + d` for some `d >= 1`.
fn symmetric_triples_on(points: &[(usize, usize)]) -> Vec<(usize, [(usize, usize); 3])> {
    let mut by_f: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for &p in points {
        by_f.entry(p.0).or_default().push(p);
    }
    let mut fs: Vec<usize> = by_f.keys().copied().collect();
    fs.sort_unstable();
    let mut out = Vec::new();
    for &f in &fs {
        for d in 1..=f {
            let (lo, hi) = (f - d, f + d);
            let (Some(a), Some(b), Some(c)) = (by_f.get(&lo), by_f.get(&f), by_f.get(&hi)) else {
                continue;
            };
            for &pa in a {
                for &pb in b {
                    for &pc in c {
                        out.push((d, [pa, pb, pc]));
                    }
                }
            }
        }
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{baseline_3gpp, baseline_chirp, baseline_random, PilotPattern};

    /// Independent brute-force line enumeration: dedupe every primitive
    /// `(u,v,c)` triple by its point set.
    fn brute_force_line_count(k: usize) -> usize {
        let mut seen = HashSet::new();
        for u in 0..k {
            for v in 0..k {
                if gcd(gcd(u, v), k) != 1 {
                    continue;
                }
                for c in 0..k {
                    let mut pts: Vec<(usize, usize)> = Vec::new();
                    for f in 0..k {
                        for t in 0..k {
                            if (u * f + v * t) % k == c {
                                pts.push((f, t));
                            }
                        }
                    }
                    seen.insert(pts);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn prime_k_has_k_times_k_plus_one_lines() {
        assert_eq!(enumerate_modular_lines(5).len(), 30);
        assert_eq!(enumerate_modular_lines(7).len(), 56);
    }

    #[test]
    fn composite_k_matches_direct_enumeration() {
        for k in [4usize, 6, 8, 9, 10, 12] {
            let lines = enumerate_modular_lines(k);
            assert_eq!(lines.len(), brute_force_line_count(k), "k={k}");
            for line in lines.lines() {
                assert_eq!(line.points().len(), k);
            }
        }
        // Frozen from the brute-force oracle above.
        assert_eq!(enumerate_modular_lines(4).len(), 24);
    }

    #[test]
    fn prime_k_incidence_is_k_plus_one_lines_per_point() {
        for k in [2usize, 3, 5, 7, 11, 13] {
            let lines = enumerate_modular_lines(k);
            assert_eq!(lines.len(), k * (k + 1));
            for f in 0..k {
                for t in 0..k {
                    assert_eq!(lines.through(f, t).len(), k + 1, "k={k} point ({f},{t})");
                }
            }
        }
    }

    #[test]
    fn census_of_3gpp_k5_finds_the_carrying_line() {
        let p = baseline_3gpp(5, 0).unwrap();
        let lines = enumerate_modular_lines(5);
        // Oracle: direct membership test of 2f + t = 0 (mod 5) for all pilots.
        for (f, t) in p.pilots() {
            assert_eq!((2 * f + t) % 5, 0);
        }
        let census = collinearity_census(&p, &lines);
        let full = census.per_line.iter().filter(|&&c| c as usize == 5).count();
        assert_eq!(full, 1, "exactly one line carries all five pilots");
        assert!(census.has_four_collinear);
        assert!(census.redundant_lines >= 1);
        // No line can hold more pilots than it has points.
        assert!(census.per_line.iter().all(|&c| c as usize <= 5));
    }

    #[test]
    fn census_of_identity_k3_diagonal() {
        let p = PilotPattern::from_schedule(3, vec![0, 1, 2]).unwrap();
        let lines = enumerate_modular_lines(3);
        let census = collinearity_census(&p, &lines);
        assert!(census.redundant_lines >= 1);
        // The diagonal f - t = 0 is the line 1*f + 2*t = 0 (mod 3).
        let diag = lines
            .lines()
            .iter()
            .position(|l| (0..3).all(|i| l.contains(i, i, 3)))
            .expect("diagonal line exists");
        assert_eq!(census.per_line[diag], 3);
    }

    #[test]
    fn symmetric_triples_identity_k3() {
        let p = PilotPattern::from_schedule(3, vec![0, 1, 2]).unwrap();
        let lines = enumerate_modular_lines(3);
        let v = symmetric_triples(&p, &lines);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].d, 1);
        assert_eq!(v[0].pilots, [(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn symmetric_triples_3gpp_k5() {
        let p = baseline_3gpp(5, 0).unwrap();
        let lines = enumerate_modular_lines(5);
        let v = symmetric_triples(&p, &lines);
        // Oracle: enumerate triples of the 5 collinear pilots directly. The
        // pilots occupy subbands {0,...,4} on one line, so the symmetric
        // triples are exactly the arithmetic progressions of {0,...,4}:
        // d=1 gives 3, d=2 gives 1.
        assert_eq!(v.len(), 4);
        assert!(!v.is_empty());
    }

    #[test]
    fn no_triples_without_three_collinear_pilots() {
        for k in [5usize, 7, 8] {
            let lines = enumerate_modular_lines(k);
            for seed in 0..20 {
                let p = baseline_random(k, seed);
                let census = collinearity_census(&p, &lines);
                if census.redundant_lines == 0 {
                    assert!(symmetric_triples(&p, &lines).is_empty());
                }
            }
        }
    }

    #[test]
    fn census_invariant_under_cyclic_shift() {
        for k in [5usize, 7] {
            let lines = enumerate_modular_lines(k);
            for p in [
                baseline_3gpp(k, 0).unwrap(),
                baseline_chirp(k),
                baseline_random(k, 3),
            ] {
                let base = collinearity_census(&p, &lines);
                let mut base_counts = base.per_line.clone();
                base_counts.sort_unstable();
                for s in 0..k as i64 {
                    let c = collinearity_census(&p.cyclic_shift(s), &lines);
                    assert_eq!(c.redundant_lines, base.redundant_lines);
                    assert_eq!(c.has_four_collinear, base.has_four_collinear);
                    let mut counts = c.per_line.clone();
                    counts.sort_unstable();
                    assert_eq!(counts, base_counts, "k={k} shift={s}");
                }
            }
        }
    }

    #[test]
    fn triple_count_invariant_under_cyclic_shift() {
        for k in [5usize, 7] {
            let lines = enumerate_modular_lines(k);
            let p = baseline_3gpp(k, 0).unwrap();
            let n = symmetric_triples(&p, &lines).len();
            for s in 0..k as i64 {
                assert_eq!(symmetric_triples(&p.cyclic_shift(s), &lines).len(), n);
            }
        }
    }
}
