//! Depth-first branch-and-bound over permutation schedules.
//!
//! Slots are assigned in time order. The admissible objective bound at a
//! partial assignment gives every cell the better of its distance to an
//! already-placed pilot and the cheapest distance achievable through any
//! still-unused subband in any future slot. Cyclic time shifts leave every
//! constraint and objective invariant, so the search fixes subband 0 at
//! slot 0; frequency is not a symmetry and is never reduced. Ties between
//! equal-objective optima resolve to the lexicographically smallest schedule
//! because subbands are tried in ascending order and incumbents are replaced
//! only on strict improvement.

use std::time::Instant;

use crate::geometry::LineSet;

const DEADLINE_CHECK_INTERVAL: u64 = 4096;
const UNSET: u8 = u8::MAX;
/// Sentinel far above any real coverage cost (bounded by k^3 at desk scale).
const INF_COST: usize = 1 << 40;

/// Collinearity rules enforced during the search.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LineRules {
    pub budget: Option<usize>,
    pub forbid_four: bool,
    pub symmetric_exclusion: bool,
}

impl LineRules {
    pub(crate) fn none() -> Self {
        LineRules {
            budget: None,
            forbid_four: false,
            symmetric_exclusion: false,
        }
    }

    fn active(&self) -> bool {
        self.budget.is_some() || self.forbid_four || self.symmetric_exclusion
    }
}

/// What the search optimizes (or merely decides).
#[derive(Debug, Clone, Copy)]
pub(crate) enum SearchMode {
    /// Stop at the first permutation with covering radius `<= radius_cap`.
    Feasibility { radius_cap: usize },
    /// Minimize the coverage sum subject to `radius <= radius_cap`.
    Coverage { radius_cap: usize },
    /// Minimize the number of lines carrying three pilots.
    RedundantLines,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchLimits {
    pub deadline: Option<Instant>,
    /// Deterministic effort cap: stop after exploring this many nodes.
    pub node_limit: Option<u64>,
    pub gap_tolerance: f64,
    /// Exclusive upper bound on the objective (e.g. from a warm start);
    /// subtrees with bound `>= initial_bound` are skipped. Ties with the
    /// warm-start value stay reachable, so the lexicographic tie-break is
    /// unaffected.
    pub initial_bound: Option<usize>,
    /// Shuffle the per-slot candidate order from this seed (used by restart
    /// dives); `None` explores subbands in ascending order, which is what
    /// makes a completed search return the lexicographically smallest
    /// optimum.
    pub value_order_seed: Option<u64>,
}

impl SearchLimits {
    pub(crate) fn exact(deadline: Option<Instant>, gap_tolerance: f64) -> Self {
        SearchLimits {
            deadline,
            node_limit: None,
            gap_tolerance,
            initial_bound: None,
            value_order_seed: None,
        }
    }
}

#[derive(Debug)]
pub(crate) struct SearchOutcome {
    /// Best `(objective, schedule)`; `None` means proven infeasible when the
    /// search completed, or simply "nothing found" under a resource limit.
    pub best: Option<(usize, Vec<usize>)>,
    pub nodes: u64,
    /// A wall-clock deadline or node budget stopped the search early.
    pub limited: bool,
    /// Certified relative gap of `best`: 0 unless the gap tolerance pruned
    /// potentially-improving subtrees; 1 after an early stop.
    pub proven_gap: f64,
}

pub(crate) fn search(
    k: usize,
    lines: Option<&LineSet>,
    rules: LineRules,
    mode: SearchMode,
    limits: SearchLimits,
) -> SearchOutcome {
    assert!((2..=60).contains(&k), "search supports 2 <= k <= 60");
    assert!(
        !rules.active() || lines.is_some(),
        "line rules require a line set"
    );
    let mut engine = Engine::new(k, lines, rules, mode, limits);
    engine.dfs(0);
    engine.finish()
}

struct Engine<'a> {
    k: usize,
    lines: Option<&'a LineSet>,
    rules: LineRules,
    mode: SearchMode,
    // Partial assignment.
    schedule: Vec<usize>,
    used: u64,
    dist: Vec<u8>,
    dist_trail: Vec<(u16, u8)>,
    line_count: Vec<u16>,
    line_pilots: Vec<Vec<(u8, u8)>>,
    budget_used: usize,
    redundant: usize,
    // Incumbent and pruning threshold.
    best_obj: usize,
    best_sched: Option<Vec<usize>>,
    prune_at: f64,
    gap_tolerance: f64,
    min_pruned_lb: usize,
    // Bookkeeping.
    value_order: Option<Vec<Vec<usize>>>,
    nf_scratch: Vec<usize>,
    cost_scratch: Vec<i64>,
    nodes: u64,
    deadline: Option<Instant>,
    node_limit: Option<u64>,
    limited: bool,
    stop: bool,
}

struct Undo {
    f: usize,
    slot: usize,
    trail_start: usize,
}

impl<'a> Engine<'a> {
    fn new(
        k: usize,
        lines: Option<&'a LineSet>,
        rules: LineRules,
        mode: SearchMode,
        limits: SearchLimits,
    ) -> Self {
        let line_n = lines.map_or(0, |l| l.len());
        let value_order = limits.value_order_seed.map(|seed| {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            (0..k)
                .map(|slot| {
                    let mut order: Vec<usize> = (0..k).collect();
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                            .wrapping_add(slot as u64),
                    );
                    order.shuffle(&mut rng);
                    order
                })
                .collect()
        });
        Engine {
            k,
            lines,
            rules,
            mode,
            schedule: vec![0; k],
            used: 0,
            dist: vec![UNSET; k * k],
            dist_trail: Vec::with_capacity(k * k),
            line_count: vec![0; line_n],
            line_pilots: vec![Vec::with_capacity(4); line_n],
            budget_used: 0,
            redundant: 0,
            best_obj: usize::MAX,
            best_sched: None,
            prune_at: limits.initial_bound.map_or(f64::INFINITY, |b| b as f64),
            gap_tolerance: limits.gap_tolerance,
            min_pruned_lb: usize::MAX,
            value_order,
            nf_scratch: vec![0; k],
            cost_scratch: Vec::new(),
            nodes: 0,
            deadline: limits.deadline,
            node_limit: limits.node_limit,
            limited: false,
            stop: false,
        }
    }

    fn finish(self) -> SearchOutcome {
        // Certainty is lost only when a pruned subtree could still have
        // improved on the final incumbent.
        let proven_gap = if self.limited {
            1.0
        } else if self.best_obj != usize::MAX && self.min_pruned_lb < self.best_obj {
            (self.best_obj - self.min_pruned_lb) as f64 / self.best_obj as f64
        } else {
            0.0
        };
        SearchOutcome {
            best: self.best_sched.map(|s| (self.best_obj, s)),
            nodes: self.nodes,
            limited: self.limited,
            proven_gap,
        }
    }

    fn dfs(&mut self, slot: usize) {
        if self.stop || self.limited {
            return;
        }
        if slot == self.k {
            self.on_leaf();
            return;
        }
        // Cyclic-shift symmetry: subband 0 is pinned to slot 0.
        let n_candidates = if slot == 0 { 1 } else { self.k };
        for idx in 0..n_candidates {
            let f = match (&self.value_order, slot) {
                (_, 0) => 0,
                (Some(orders), _) => orders[slot][idx],
                (None, _) => idx,
            };
            if self.used & (1 << f) != 0 {
                continue;
            }
            self.nodes += 1;
            if let Some(limit) = self.node_limit {
                if self.nodes >= limit {
                    self.limited = true;
                    return;
                }
            }
            if self.nodes % DEADLINE_CHECK_INTERVAL == 0 {
                if let Some(d) = self.deadline {
                    if Instant::now() >= d {
                        self.limited = true;
                        return;
                    }
                }
            }
            let Some(undo) = self.apply(f, slot) else {
                continue;
            };
            match self.bound(slot) {
                // Radius cap unattainable somewhere: hard infeasible.
                None => {}
                Some(lb) => {
                    if (lb as f64) >= self.prune_at {
                        self.min_pruned_lb = self.min_pruned_lb.min(lb);
                    } else {
                        self.dfs(slot + 1);
                    }
                }
            }
            self.revert(undo);
            if self.stop || self.limited {
                return;
            }
        }
    }

    fn on_leaf(&mut self) {
        let obj = match self.mode {
            SearchMode::Feasibility { .. } => {
                self.best_obj = 0;
                self.best_sched = Some(self.schedule.clone());
                self.stop = true;
                return;
            }
            SearchMode::Coverage { .. } => self.dist.iter().map(|&d| d as usize).sum(),
            SearchMode::RedundantLines => self.redundant,
        };
        if obj < self.best_obj {
            self.best_obj = obj;
            self.best_sched = Some(self.schedule.clone());
            self.prune_at = self
                .prune_at
                .min(obj as f64 * (1.0 - self.gap_tolerance))
                .max(0.0);
        }
    }

    /// Places pilot `(f, slot)` if it violates no hard line rule; returns the
    /// undo token, or `None` (with no state change) on violation.
    fn apply(&mut self, f: usize, slot: usize) -> Option<Undo> {
        if let Some(lines) = self.lines {
            if self.rules.active() {
                // Validation pass: no mutation until every rule admits the move.
                let mut budget_add = 0usize;
                for &l in lines.through(f, slot) {
                    let l = l as usize;
                    let c_new = self.line_count[l] + 1;
                    if c_new >= 4 && self.rules.forbid_four {
                        return None;
                    }
                    if c_new >= 3 {
                        budget_add += 1;
                        if self.rules.symmetric_exclusion
                            && completes_symmetric_triple(f, &self.line_pilots[l])
                        {
                            return None;
                        }
                    }
                }
                if let Some(b) = self.rules.budget {
                    if self.budget_used + budget_add > b {
                        return None;
                    }
                }
                // Commit.
                for &l in lines.through(f, slot) {
                    let l = l as usize;
                    self.line_count[l] += 1;
                    if self.line_count[l] == 3 {
                        self.redundant += 1;
                    }
                    if self.line_count[l] >= 3 {
                        self.budget_used += 1;
                    }
                    self.line_pilots[l].push((f as u8, slot as u8));
                }
            }
        }
        self.schedule[slot] = f;
        self.used |= 1 << f;
        let trail_start = self.dist_trail.len();
        let k = self.k;
        // dist is slot-major: cell (f, t) lives at t*k + f.
        for ct in 0..k {
            let dt = (ct + k - slot) % k;
            let base = ct * k;
            for cf in 0..k {
                let d = (cf.abs_diff(f) + dt) as u8;
                let cell = base + cf;
                if d < self.dist[cell] {
                    self.dist_trail.push((cell as u16, self.dist[cell]));
                    self.dist[cell] = d;
                }
            }
        }
        Some(Undo {
            f,
            slot,
            trail_start,
        })
    }

    fn revert(&mut self, undo: Undo) {
        while self.dist_trail.len() > undo.trail_start {
            let (cell, old) = self.dist_trail.pop().unwrap();
            self.dist[cell as usize] = old;
        }
        self.used &= !(1 << undo.f);
        if let Some(lines) = self.lines {
            if self.rules.active() {
                for &l in lines.through(undo.f, undo.slot) {
                    let l = l as usize;
                    self.line_pilots[l].pop();
                    if self.line_count[l] >= 3 {
                        self.budget_used -= 1;
                    }
                    if self.line_count[l] == 3 {
                        self.redundant -= 1;
                    }
                    self.line_count[l] -= 1;
                }
            }
        }
    }

    /// Admissible objective bound after assigning `slot`, or `None` when some
    /// cell can no longer be covered within the radius cap.
    ///
    /// The future pilots are a bijection between unused subbands and future
    /// slots. Each future column prices every unused subband as its own
    /// pilot (cells take the best of their current distance, the own-column
    /// pilot, and admissible fallbacks through other future slots); all past
    /// columns wrap onto the final slot's single pilot, so their costs join
    /// the final column's row. A min-cost assignment over this matrix is an
    /// admissible bound that respects slot capacity, and an infeasible
    /// matching (no in-radius choice) proves the node dead.
    fn bound(&mut self, slot: usize) -> Option<usize> {
        let radius_cap = match self.mode {
            SearchMode::Feasibility { radius_cap } | SearchMode::Coverage { radius_cap } => {
                radius_cap
            }
            SearchMode::RedundantLines => return Some(self.redundant),
        };
        let k = self.k;
        if slot + 1 >= k {
            // Complete assignment: the sum is exact.
            let mut total = 0usize;
            for &d in &self.dist {
                let d = d as usize;
                if d > radius_cap {
                    return None;
                }
                total += d;
            }
            return Some(total);
        }
        for cf in 0..k {
            self.nf_scratch[cf] = self.nearest_unused(cf);
        }
        // Fast per-cell feasibility: best imaginable option per cell.
        for t in 0..k {
            let base = t * k;
            let mintc = if t > slot { 0 } else { t + 1 };
            for cf in 0..k {
                let cur = self.dist[base + cf] as usize;
                if cur.min(self.nf_scratch[cf] + mintc) > radius_cap {
                    return None;
                }
            }
        }

        let unused: Vec<usize> = (0..k).filter(|&f| self.used & (1 << f) == 0).collect();
        let n = unused.len();
        debug_assert_eq!(n, k - 1 - slot);
        // A future slot strictly before `t` exists iff t >= slot+2.
        let earlier_future = |t: usize, f: usize| -> usize {
            if t >= slot + 2 {
                self.nf_scratch[f] + 1
            } else {
                INF_COST
            }
        };

        // cost[row * n + col]: row = future slot (slot+1+row), col = unused
        // subband index. INF marks an out-of-radius pairing.
        self.cost_scratch.resize(n * n, 0);
        for row in 0..n {
            let t = slot + 1 + row;
            let base = t * k;
            // Fallback through a later future slot wraps at time cost >= t+1.
            let later = if t < k - 1 { t + 1 } else { INF_COST };
            for (col, &fp) in unused.iter().enumerate() {
                let mut acc: usize = 0;
                for cf in 0..k {
                    let cur = self.dist[base + cf] as usize;
                    let own = cf.abs_diff(fp);
                    let fallback = earlier_future(t, cf)
                        .min(self.nf_scratch[cf].saturating_add(later));
                    let best = cur.min(own).min(fallback);
                    if best > radius_cap {
                        // Only the own-column pilot could serve this cell and
                        // `fp` is too far: this pairing is inadmissible.
                        acc = INF_COST;
                        break;
                    }
                    acc += best;
                }
                if acc != INF_COST && t == k - 1 {
                    // The final slot's pilot is the cheapest wrap target for
                    // every past column (time cost t+1); other future slots
                    // cost at least t+2 and only exist while slot <= k-3.
                    let other_future_ok = slot + 1 < k - 1;
                    'past: for tp in 0..=slot {
                        let pbase = tp * k;
                        for cf in 0..k {
                            let cur = self.dist[pbase + cf] as usize;
                            let via_last = cf.abs_diff(fp) + tp + 1;
                            let fallback = if other_future_ok {
                                self.nf_scratch[cf] + tp + 2
                            } else {
                                INF_COST
                            };
                            let best = cur.min(via_last).min(fallback);
                            if best > radius_cap {
                                acc = INF_COST;
                                break 'past;
                            }
                            acc += best;
                        }
                    }
                }
                self.cost_scratch[row * n + col] = acc.min(INF_COST) as i64;
            }
        }
        match assignment_cost(&self.cost_scratch, n) {
            Some(total) if total < INF_COST as i64 => Some(total as usize),
            _ => None,
        }
    }

    fn nearest_unused(&self, f: usize) -> usize {
        for d in 0..self.k {
            if f >= d && self.used & (1 << (f - d)) == 0 {
                return d;
            }
            if f + d < self.k && self.used & (1 << (f + d)) == 0 {
                return d;
            }
        }
        // All subbands used; callers only ask while future slots remain.
        self.k
    }
}

/// Minimum-cost perfect assignment on a square matrix (Hungarian algorithm
/// with potentials, O(n^3)); `None` when only pairings at or above
/// [`INF_COST`] remain, i.e. no admissible assignment exists.
fn assignment_cost(cost: &[i64], n: usize) -> Option<i64> {
    if n == 0 {
        return Some(0);
    }
    const BIG: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![BIG; n + 1];
        let mut visited = vec![false; n + 1];
        loop {
            visited[j0] = true;
            let i0 = matched[j0];
            let mut delta = BIG;
            let mut j1 = 0;
            for j in 1..=n {
                if visited[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if visited[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0i64;
    for j in 1..=n {
        total += cost[(matched[j] - 1) * n + (j - 1)];
    }
    if total >= INF_COST as i64 {
        None
    } else {
        Some(total)
    }
}

/// Does adding a pilot at subband `f` complete a symmetric triple with two of
/// the pilots already on the line?
fn completes_symmetric_triple(f: usize, on_line: &[(u8, u8)]) -> bool {
    let f = f as i64;
    for (i, &(fa, _)) in on_line.iter().enumerate() {
        for &(fb, _) in &on_line[i + 1..] {
            let (fa, fb) = (fa as i64, fb as i64);
            let mut fs = [f, fa, fb];
            fs.sort_unstable();
            if fs[0] < fs[1] && fs[1] < fs[2] && fs[0] + fs[2] == 2 * fs[1] {
                return true;
            }
        }
    }
    false
}
