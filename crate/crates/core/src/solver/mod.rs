//! Two-stage exact construction of MCC pilot patterns.
//!
//! Stage 1 finds the minimum achievable covering radius `r_k` over all
//! permutation patterns by an ascending feasibility search. Stage 2 minimizes
//! the coverage sum subject to `radius <= r_k`, a per-line collinearity
//! budget, optional four-collinear exclusion, and optional symmetric-triple
//! exclusion, using depth-first branch-and-bound with an admissible
//! combinatorial bound. The integrated 0-1 model can also be exported in LP
//! text format for external MILP solvers.

mod bnb;
mod lp;

pub use lp::{export_lp, write_lp, LpStats};

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::{collinearity_census, coverage, symmetric_triples, LineSet};
use crate::pattern::PilotPattern;

use bnb::{search, LineRules, SearchLimits, SearchMode};

/// Knobs of the stage-2 search.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub k: usize,
    /// Redundant-collinearity budget `L_r`: number of modular lines allowed
    /// to carry a pilot triple. `None` removes the budget and the triple
    /// machinery entirely (coverage-only ablation).
    pub budget: Option<usize>,
    /// Forbid any line from carrying four or more pilots (default true).
    /// When disabled, a line with `c >= 3` pilots consumes `c - 2` units of
    /// budget instead of being capped at one triple.
    pub forbid_four_collinear: bool,
    /// Exclude symmetric pilot triples along a line (default true).
    pub symmetric_exclusion: bool,
    /// Wall-clock limit shared by both stages.
    pub time_limit: Duration,
    /// Deterministic effort cap on the main stage-2 search: unlike the wall
    /// clock, a node budget stops at the same tree position on every run and
    /// every machine, so effort-limited results stay reproducible.
    pub node_limit: Option<u64>,
    /// Relative optimality gap at which the search may stop early;
    /// 0 proves optimality.
    pub gap_tolerance: f64,
}

impl SolverConfig {
    /// Full MCC configuration with an explicit budget.
    pub fn mcc(k: usize, budget: usize) -> Self {
        SolverConfig {
            k,
            budget: Some(budget),
            forbid_four_collinear: true,
            symmetric_exclusion: true,
            time_limit: Duration::from_secs(120),
            node_limit: None,
            gap_tolerance: 0.0,
        }
    }

    /// Coverage-only ablation: collinearity constraints removed.
    pub fn coverage_only(k: usize) -> Self {
        SolverConfig {
            k,
            budget: None,
            forbid_four_collinear: false,
            symmetric_exclusion: false,
            time_limit: Duration::from_secs(120),
            node_limit: None,
            gap_tolerance: 0.0,
        }
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn with_node_limit(mut self, limit: Option<u64>) -> Self {
        self.node_limit = limit;
        self
    }

    pub fn with_gap_tolerance(mut self, gap: f64) -> Self {
        self.gap_tolerance = gap;
        self
    }

    fn validate(&self, lines: &LineSet) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid_argument("solver requires k >= 2"));
        }
        if let Some(b) = self.budget {
            if self.forbid_four_collinear && b > lines.len() {
                return Err(Error::invalid_argument(format!(
                    "budget {b} exceeds the number of modular lines {}",
                    lines.len()
                )));
            }
        }
        if self.time_limit.is_zero() {
            return Err(Error::invalid_argument("time limit must be positive"));
        }
        if !(0.0..1.0).contains(&self.gap_tolerance) {
            return Err(Error::invalid_argument("gap tolerance must be in [0, 1)"));
        }
        Ok(())
    }

    fn rules(&self) -> LineRules {
        LineRules {
            budget: self.budget,
            forbid_four: self.forbid_four_collinear,
            symmetric_exclusion: self.symmetric_exclusion,
        }
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Optimum found and proved (gap 0).
    Optimal,
    /// Search completed within the configured gap tolerance, gap > 0.
    GapTerminated,
    /// Completed with no feasible pattern: infeasibility is proved.
    Infeasible,
    /// A resource limit (wall clock or node budget) stopped the search; any
    /// pattern reported is the best incumbent and carries no optimality or
    /// infeasibility proof.
    TimedOut,
}

/// Outcome of a stage-2 solve (or of the collinearity-only objective).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best pattern found (lexicographically smallest schedule among optima
    /// with subband 0 fixed at slot 0), when any exists.
    pub pattern: Option<PilotPattern>,
    /// Objective of `pattern`: coverage sum, or redundant-line count for the
    /// collinearity-only objective.
    pub objective: Option<usize>,
    /// Stage-1 radius bound `r_k` enforced by the solve (absent for the
    /// collinearity-only objective, which has no radius cap).
    pub radius_bound: Option<usize>,
    /// True iff both stages completed with gap 0.
    pub proven_optimal: bool,
    /// Proven relative gap: 0 when optimal, the certified bound gap when the
    /// gap tolerance pruned nodes, 1 when the time limit left no usable bound.
    pub gap: f64,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

/// Outcome of the stage-1 minimum-covering-radius search.
#[derive(Debug, Clone, Copy)]
pub struct RadiusResult {
    /// Minimum achievable covering radius (best-known lower value if unproven).
    pub radius: usize,
    /// False when the time limit interrupted the ascending search.
    pub proven: bool,
    pub nodes_explored: u64,
}

/// Stage 1: smallest `r` such that a permutation pattern with covering radius
/// `<= r` exists, found by ascending feasibility search.
pub fn min_covering_radius(k: usize, time_limit: Duration) -> Result<RadiusResult> {
    if k == 0 {
        return Err(Error::invalid_argument("k must be positive"));
    }
    if k == 1 {
        return Ok(RadiusResult {
            radius: 0,
            proven: true,
            nodes_explored: 0,
        });
    }
    let deadline = Instant::now() + time_limit;
    Ok(min_radius_cached(k, deadline))
}

// The ascending feasibility proof is the most expensive deterministic fact
// about a grid size (proving r_k - 1 infeasible dominates); budget tightening
// re-solves stage 2 many times per k, so proven radii are memoized.
static RADIUS_CACHE: OnceLock<Mutex<HashMap<usize, RadiusResult>>> = OnceLock::new();

fn min_radius_cached(k: usize, deadline: Instant) -> RadiusResult {
    let cache = RADIUS_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("radius cache lock").get(&k) {
        return *hit;
    }
    let result = min_radius_inner(k, deadline);
    if result.proven {
        cache
            .lock()
            .expect("radius cache lock")
            .insert(k, result);
    }
    result
}

fn min_radius_inner(k: usize, deadline: Instant) -> RadiusResult {
    let mut nodes = 0;
    // Any permutation has covering radius < 2k; the loop always terminates.
    for r in 0..2 * k {
        let outcome = search(
            k,
            None,
            LineRules::none(),
            SearchMode::Feasibility { radius_cap: r },
            SearchLimits::exact(Some(deadline), 0.0),
        );
        nodes += outcome.nodes;
        if outcome.limited {
            return RadiusResult {
                radius: r,
                proven: false,
                nodes_explored: nodes,
            };
        }
        if outcome.best.is_some() {
            return RadiusResult {
                radius: r,
                proven: true,
                nodes_explored: nodes,
            };
        }
    }
    unreachable!("a permutation with radius < 2k always exists");
}

// Warm-start dives: restart-limited searches with shuffled candidate orders.
// Deep lexicographic corridors can starve the main search of any incumbent
// at larger k; a handful of randomized dives finds feasible patterns cheaply
// and their best objective seeds the exact run (an exclusive bound preserves
// ties, so the lexicographic tie-break of a completed search is unaffected).
const WARM_RESTARTS: u64 = 24;
const WARM_NODES: u64 = 150_000;
const WARM_MIN_K: usize = 12;

fn warm_start(
    config: &SolverConfig,
    lines: &LineSet,
    radius: usize,
    deadline: Instant,
) -> (Option<(usize, Vec<usize>)>, u64) {
    if config.k < WARM_MIN_K {
        return (None, 0);
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut nodes = 0;
    for restart in 0..WARM_RESTARTS {
        if Instant::now() >= deadline {
            break;
        }
        let outcome = search(
            config.k,
            Some(lines),
            config.rules(),
            SearchMode::Coverage { radius_cap: radius },
            SearchLimits {
                deadline: Some(deadline),
                node_limit: Some(WARM_NODES),
                gap_tolerance: 0.0,
                initial_bound: best.as_ref().map(|(obj, _)| *obj),
                value_order_seed: Some(restart + 1),
            },
        );
        nodes += outcome.nodes;
        if let Some(found) = outcome.best {
            best = Some(match best {
                None => found,
                Some(b) => b.min(found),
            });
        }
    }
    (best, nodes)
}

/// Stage 2: minimize the coverage sum subject to `radius <= r_k` and the
/// configured collinearity rules.
///
/// Returns an explicit infeasibility verdict when no permutation satisfies
/// the constraints at radius `r_k`, distinguishing it from a resource-limit
/// stop.
pub fn solve_mcc(config: &SolverConfig) -> Result<SolveResult> {
    if config.k < 2 {
        return Err(Error::invalid_argument("solver requires k >= 2"));
    }
    let start = Instant::now();
    let lines = LineSet::new(config.k);
    config.validate(&lines)?;
    let deadline = start + config.time_limit;

    let stage1 = min_radius_cached(config.k, deadline);
    if !stage1.proven {
        return Ok(SolveResult {
            status: SolveStatus::TimedOut,
            pattern: None,
            objective: None,
            radius_bound: Some(stage1.radius),
            proven_optimal: false,
            gap: 1.0,
            nodes_explored: stage1.nodes_explored,
            wall_time: start.elapsed(),
        });
    }
    let result = solve_stage2(config, &lines, stage1, start, deadline);
    if let Some(p) = &result.pattern {
        debug_assert!(verify_solution(p, config, stage1.radius, &lines));
    }
    Ok(result)
}

fn solve_stage2(
    config: &SolverConfig,
    lines: &LineSet,
    stage1: RadiusResult,
    start: Instant,
    deadline: Instant,
) -> SolveResult {
    let (warm, warm_nodes) = warm_start(config, lines, stage1.radius, deadline);
    let mut outcome = search(
        config.k,
        Some(lines),
        config.rules(),
        SearchMode::Coverage {
            radius_cap: stage1.radius,
        },
        SearchLimits {
            deadline: Some(deadline),
            node_limit: config.node_limit,
            gap_tolerance: config.gap_tolerance,
            initial_bound: warm.as_ref().map(|(obj, _)| obj + 1),
            value_order_seed: None,
        },
    );
    // The warm incumbent survives as a fallback when the limited main run
    // found nothing at least as good.
    outcome.best = match (outcome.best.take(), warm) {
        (Some(main), Some(warm)) => Some(if main.0 <= warm.0 { main } else { warm }),
        (main, warm) => main.or(warm),
    };
    finish_result(
        config.k,
        outcome,
        Some(stage1.radius),
        stage1.nodes_explored + warm_nodes,
        start,
    )
}

/// Collinearity-only ablation: minimize the number of modular lines carrying
/// a pilot triple, subject to feasibility and (optionally) symmetric-triple
/// exclusion; coverage is unconstrained and lines are capped at three pilots.
///
/// Uses `config` for `k`, `symmetric_exclusion`, and the limits; the budget
/// and radius machinery do not apply to this objective.
pub fn solve_collinearity_only(config: &SolverConfig) -> Result<SolveResult> {
    if config.k < 2 {
        return Err(Error::invalid_argument("solver requires k >= 2"));
    }
    let start = Instant::now();
    let lines = LineSet::new(config.k);
    let outcome = search(
        config.k,
        Some(&lines),
        LineRules {
            budget: None,
            forbid_four: true,
            symmetric_exclusion: config.symmetric_exclusion,
        },
        SearchMode::RedundantLines,
        SearchLimits {
            deadline: Some(start + config.time_limit),
            node_limit: config.node_limit,
            gap_tolerance: config.gap_tolerance,
            initial_bound: None,
            value_order_seed: None,
        },
    );
    Ok(finish_result(config.k, outcome, None, 0, start))
}

fn finish_result(
    k: usize,
    outcome: bnb::SearchOutcome,
    radius_bound: Option<usize>,
    extra_nodes: u64,
    start: Instant,
) -> SolveResult {
    let (pattern, objective) = match outcome.best {
        Some((obj, schedule)) => (
            Some(PilotPattern::from_schedule(k, schedule).expect("search yields feasible schedules")),
            Some(obj),
        ),
        None => (None, None),
    };
    let status = if outcome.limited {
        SolveStatus::TimedOut
    } else if pattern.is_none() {
        SolveStatus::Infeasible
    } else if outcome.proven_gap > 0.0 {
        SolveStatus::GapTerminated
    } else {
        SolveStatus::Optimal
    };
    SolveResult {
        status,
        pattern,
        objective,
        radius_bound,
        proven_optimal: status == SolveStatus::Optimal,
        gap: outcome.proven_gap,
        nodes_explored: outcome.nodes + extra_nodes,
        wall_time: start.elapsed(),
    }
}

/// Independent re-check of every constraint through the geometry module.
fn verify_solution(p: &PilotPattern, config: &SolverConfig, r_k: usize, lines: &LineSet) -> bool {
    if !p.validate(true) {
        return false;
    }
    if coverage(p).radius > r_k {
        return false;
    }
    let census = collinearity_census(p, lines);
    if config.forbid_four_collinear && census.has_four_collinear {
        return false;
    }
    if let Some(budget) = config.budget {
        let used: usize = census
            .per_line
            .iter()
            .map(|&c| (c as usize).saturating_sub(2))
            .sum::<usize>();
        let used = if config.forbid_four_collinear {
            census.redundant_lines
        } else {
            used
        };
        if used > budget {
            return false;
        }
    }
    if config.symmetric_exclusion && !symmetric_triples(p, lines).is_empty() {
        return false;
    }
    true
}

/// Result of the budget-tightening loop.
#[derive(Debug, Clone)]
pub struct TightenResult {
    /// Smallest admissible budget.
    pub budget: usize,
    /// Solution at that budget.
    pub result: SolveResult,
    /// Coverage optimum of the unconstrained (coverage-only) problem, the
    /// reference for the degradation threshold.
    pub unconstrained_objective: usize,
}

/// Gradually tightens the redundant-collinearity budget while the solve
/// stays feasible and the coverage objective stays within
/// `1 + degradation_threshold` times the unconstrained optimum.
///
/// `start` anchors the loop; `None` starts from the redundant-line census of
/// the unconstrained optimum. If the anchor is inadmissible the budget is
/// first relaxed upward (at most to the line count). A threshold of
/// `f64::INFINITY` reduces the loop to pure feasibility tightening.
pub fn tighten_budget(
    base: &SolverConfig,
    start: Option<usize>,
    degradation_threshold: f64,
) -> Result<TightenResult> {
    let lines = LineSet::new(base.k);
    let unconstrained = solve_mcc(&SolverConfig {
        budget: None,
        forbid_four_collinear: false,
        symmetric_exclusion: false,
        ..base.clone()
    })?;
    let Some(unconstrained_objective) = unconstrained.objective else {
        return Err(Error::BudgetExhausted(format!(
            "coverage-only stage-2 solve did not produce a pattern (status {:?})",
            unconstrained.status
        )));
    };
    let start = start.unwrap_or_else(|| {
        let p = unconstrained.pattern.as_ref().expect("objective implies pattern");
        collinearity_census(p, &lines).redundant_lines
    });
    // A budget is admissible when the solve produced a feasible pattern
    // (proven optimal or the best incumbent of an effort-limited run) whose
    // coverage stays within the degradation threshold.
    let admissible = |res: &SolveResult| -> bool {
        res.pattern.is_some()
            && res.objective.is_some_and(|obj| {
                degradation_threshold.is_infinite()
                    || obj as f64 <= unconstrained_objective as f64 * (1.0 + degradation_threshold) + 1e-9
            })
    };

    let solve_at = |budget: usize| -> Result<SolveResult> {
        solve_mcc(&SolverConfig {
            budget: Some(budget),
            ..base.clone()
        })
    };

    // Anchor: walk upward from `start` (doubling steps) until admissible.
    let mut budget = start;
    let mut step = 1;
    let mut best = loop {
        let res = solve_at(budget)?;
        if admissible(&res) {
            break (budget, res);
        }
        if budget >= lines.len() {
            return Err(Error::BudgetExhausted(format!(
                "no admissible budget up to the line count {}",
                lines.len()
            )));
        }
        budget = (budget + step).min(lines.len());
        step *= 2;
    };

    // Tighten downward while admissible.
    while best.0 > 0 {
        let candidate = best.0 - 1;
        let res = solve_at(candidate)?;
        if admissible(&res) {
            best = (candidate, res);
        } else {
            break;
        }
    }

    Ok(TightenResult {
        budget: best.0,
        result: best.1,
        unconstrained_objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coverage;
    use itertools::Itertools;

    fn limit() -> Duration {
        Duration::from_secs(60)
    }

    /// Exhaustive oracle: best (objective, schedule) over all permutations
    /// satisfying the constraints, ties resolved lexicographically. The
    /// search space is optionally restricted to `schedule[0] == 0`.
    fn brute_force(
        k: usize,
        radius_cap: Option<usize>,
        cfg: &SolverConfig,
        pin_slot0: bool,
    ) -> Option<(usize, Vec<usize>)> {
        let lines = LineSet::new(k);
        let mut best: Option<(usize, Vec<usize>)> = None;
        for perm in (0..k).permutations(k) {
            if pin_slot0 && perm[0] != 0 {
                continue;
            }
            let p = PilotPattern::from_schedule(k, perm.clone()).unwrap();
            let cov = coverage(&p);
            if let Some(cap) = radius_cap {
                if cov.radius > cap {
                    continue;
                }
            }
            let census = collinearity_census(&p, &lines);
            if cfg.forbid_four_collinear && census.has_four_collinear {
                continue;
            }
            if let Some(budget) = cfg.budget {
                let used: usize = if cfg.forbid_four_collinear {
                    census.redundant_lines
                } else {
                    census
                        .per_line
                        .iter()
                        .map(|&c| (c as usize).saturating_sub(2))
                        .sum()
                };
                if used > budget {
                    continue;
                }
            }
            if cfg.symmetric_exclusion && !symmetric_triples(&p, &lines).is_empty() {
                continue;
            }
            let candidate = (cov.total, perm);
            best = Some(match best {
                None => candidate,
                Some(b) => b.min(candidate),
            });
        }
        best
    }

    fn brute_min_radius(k: usize) -> usize {
        (0..k)
            .permutations(k)
            .map(|perm| coverage(&PilotPattern::from_schedule(k, perm).unwrap()).radius)
            .min()
            .unwrap()
    }

    #[test]
    fn min_radius_examples() {
        assert_eq!(min_covering_radius(1, limit()).unwrap().radius, 0);
        // Frozen from the exhaustive oracle below.
        assert_eq!(min_covering_radius(2, limit()).unwrap().radius, 1);
        assert_eq!(min_covering_radius(5, limit()).unwrap().radius, 2);
        for k in 2..=6 {
            let res = min_covering_radius(k, limit()).unwrap();
            assert!(res.proven);
            assert_eq!(res.radius, brute_min_radius(k), "k={k}");
        }
    }

    #[test]
    fn coverage_only_matches_exhaustive_oracle() {
        for k in [3usize, 4, 5] {
            let cfg = SolverConfig::coverage_only(k);
            let res = solve_mcc(&cfg).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!(res.proven_optimal);
            let r_k = res.radius_bound.unwrap();
            let oracle = brute_force(k, Some(r_k), &cfg, true).unwrap();
            assert_eq!(res.objective.unwrap(), oracle.0, "k={k}");
            assert_eq!(res.pattern.unwrap().schedule(), &oracle.1[..], "k={k}");
        }
    }

    #[test]
    fn coverage_only_frozen_values() {
        // Frozen from the exhaustive oracle.
        let expected = [(2usize, 2usize), (3, 7), (4, 15), (5, 27), (6, 45)];
        for (k, obj) in expected {
            let res = solve_mcc(&SolverConfig::coverage_only(k)).unwrap();
            assert_eq!(res.objective, Some(obj), "k={k}");
        }
    }

    #[test]
    fn full_mcc_verdicts_match_oracle() {
        // k=4: feasible with no redundant line at all; k=5: proven infeasible
        // at the optimal radius; k=7: needs a budget of exactly 3.
        let res = solve_mcc(&SolverConfig::mcc(4, 0)).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.objective, Some(15));

        let res = solve_mcc(&SolverConfig::mcc(5, 30)).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
        assert!(res.pattern.is_none());

        let res = solve_mcc(&SolverConfig::mcc(7, 3)).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.objective, Some(70));

        let res = solve_mcc(&SolverConfig::mcc(7, 2)).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn solutions_pass_independent_geometry_checks() {
        for (k, cfg) in [
            (4usize, SolverConfig::mcc(4, 0)),
            (6, SolverConfig::mcc(6, 2)),
            (5, SolverConfig::coverage_only(5)),
        ] {
            let res = solve_mcc(&cfg).unwrap();
            let p = res.pattern.expect("feasible configuration");
            let lines = LineSet::new(k);
            assert!(p.validate(true));
            let cov = coverage(&p);
            assert!(cov.radius <= res.radius_bound.unwrap());
            assert_eq!(cov.total, res.objective.unwrap());
            let census = collinearity_census(&p, &lines);
            if cfg.forbid_four_collinear {
                assert!(!census.has_four_collinear);
            }
            if let Some(b) = cfg.budget {
                assert!(census.redundant_lines <= b);
            }
            if cfg.symmetric_exclusion {
                assert!(symmetric_triples(&p, &lines).is_empty());
            }
        }
    }

    #[test]
    fn tie_break_is_lexicographic_in_reduced_space() {
        for k in [4usize, 5] {
            let cfg = SolverConfig::coverage_only(k);
            let res = solve_mcc(&cfg).unwrap();
            let r_k = res.radius_bound.unwrap();
            let obj = res.objective.unwrap();
            let lines = LineSet::new(k);
            let _ = &lines;
            let mut optima: Vec<Vec<usize>> = (0..k)
                .permutations(k)
                .filter(|perm| perm[0] == 0)
                .filter(|perm| {
                    let p = PilotPattern::from_schedule(k, perm.clone()).unwrap();
                    let cov = coverage(&p);
                    cov.radius <= r_k && cov.total == obj
                })
                .collect();
            optima.sort();
            assert_eq!(res.pattern.unwrap().schedule(), &optima[0][..], "k={k}");
        }
    }

    #[test]
    fn symmetry_reduction_is_sound() {
        // The optimum over the slot0-pinned space equals the unreduced
        // optimum (objectives are invariant under cyclic time shifts).
        for k in 3..=6 {
            let cfg = SolverConfig::coverage_only(k);
            let res = solve_mcc(&cfg).unwrap();
            let r_k = res.radius_bound.unwrap();
            let reduced = brute_force(k, Some(r_k), &cfg, true).unwrap();
            let unreduced = brute_force(k, Some(r_k), &cfg, false).unwrap();
            assert_eq!(reduced.0, unreduced.0, "k={k}");
            assert_eq!(res.objective.unwrap(), unreduced.0, "k={k}");
        }
    }

    #[test]
    fn objective_is_monotone_in_budget() {
        // Larger budgets can only help. k=5 with triples allowed (so some
        // budget level is feasible) sweeps every level up to the line count.
        let mut prev = usize::MAX;
        for budget in 0..=6 {
            let cfg = SolverConfig {
                symmetric_exclusion: false,
                ..SolverConfig::mcc(5, budget)
            };
            let res = solve_mcc(&cfg).unwrap();
            let oracle = brute_force(5, Some(res.radius_bound.unwrap()), &cfg, true);
            match (res.objective, oracle) {
                (Some(obj), Some((expect, _))) => {
                    assert_eq!(obj, expect, "budget={budget}");
                    assert!(obj <= prev, "objective must not increase with budget");
                    prev = obj;
                }
                (None, None) => {}
                (got, want) => panic!("budget={budget}: solver {got:?} vs oracle {want:?}"),
            }
        }
    }

    #[test]
    fn tighten_budget_examples() {
        let base = SolverConfig::mcc(7, 0);
        let t = tighten_budget(&base, None, 0.05).unwrap();
        assert_eq!(t.budget, 3);
        assert_eq!(t.result.objective, Some(70));
        assert_eq!(t.unconstrained_objective, 69);
        // One step tighter is infeasible.
        let below = solve_mcc(&SolverConfig { budget: Some(2), ..base.clone() }).unwrap();
        assert_eq!(below.status, SolveStatus::Infeasible);

        // Pure feasibility tightening reaches the same budget here.
        let t_inf = tighten_budget(&base, None, f64::INFINITY).unwrap();
        assert_eq!(t_inf.budget, 3);

        // Without symmetric exclusion and four-collinear caps the loop always
        // has a feasible anchor.
        let relaxed = SolverConfig {
            forbid_four_collinear: false,
            symmetric_exclusion: false,
            ..SolverConfig::mcc(3, 0)
        };
        let t3 = tighten_budget(&relaxed, None, f64::INFINITY).unwrap();
        assert!(t3.result.pattern.is_some());

        // Full rules at k=5 admit no budget at all.
        assert!(matches!(
            tighten_budget(&SolverConfig::mcc(5, 0), None, 0.05),
            Err(Error::BudgetExhausted(_))
        ));
    }

    #[test]
    fn time_limit_reports_timeout() {
        let cfg = SolverConfig::coverage_only(12).with_time_limit(Duration::from_millis(1));
        let res = solve_mcc(&cfg).unwrap();
        assert_eq!(res.status, SolveStatus::TimedOut);
        assert!(!res.proven_optimal);
        assert_eq!(res.gap, 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(solve_mcc(&SolverConfig::mcc(1, 0)).is_err());
        let mut cfg = SolverConfig::mcc(5, 0);
        cfg.budget = Some(10_000);
        assert!(solve_mcc(&cfg).is_err());
        let cfg = SolverConfig::mcc(5, 0).with_gap_tolerance(1.5);
        assert!(solve_mcc(&cfg).is_err());
    }

    #[test]
    fn collinearity_only_minimizes_redundant_lines() {
        // Oracle: minimum number of redundant lines over all permutations
        // with no four-collinear line and no symmetric triple.
        for k in [4usize, 5] {
            let lines = LineSet::new(k);
            let oracle = (0..k)
                .permutations(k)
                .filter(|perm| perm[0] == 0)
                .filter_map(|perm| {
                    let p = PilotPattern::from_schedule(k, perm).unwrap();
                    let census = collinearity_census(&p, &lines);
                    if census.has_four_collinear || !symmetric_triples(&p, &lines).is_empty() {
                        None
                    } else {
                        Some(census.redundant_lines)
                    }
                })
                .min();
            let res =
                solve_collinearity_only(&SolverConfig::mcc(k, 0).with_time_limit(limit())).unwrap();
            match oracle {
                Some(min_red) => {
                    assert_eq!(res.objective, Some(min_red), "k={k}");
                    let p = res.pattern.unwrap();
                    assert_eq!(
                        collinearity_census(&p, &lines).redundant_lines,
                        min_red
                    );
                }
                None => assert_eq!(res.status, SolveStatus::Infeasible),
            }
        }
    }
}
