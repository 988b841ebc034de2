//! Experiment orchestration: the worst-quarter cyclic-shift protocol, sweeps
//! over SNR / pilot interval / sub-window size / hopping period, and pattern
//! comparison tables.
//!
//! Determinism contract: every random draw is seeded through
//! [`derive_seed`](crate::sim::derive_seed) from the master seed and explicit
//! indices, results are collected into index-addressed slots, and reducers
//! sort before folding, so outputs are byte-identical across repeated runs
//! and across worker counts.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{coherence_map, collinearity_census, coverage, symmetric_triples, LineSet};
use crate::pattern::{baseline_3gpp, baseline_chirp, baseline_random, GridDims, PilotPattern};
use crate::recovery::{nmse, recover, reconstruct_latest, RecoveryConfig};
use crate::sim::{
    build_dictionaries, derive_seed, observe_with_dicts, sample_channel, DDChannel, Dictionaries,
    SimConfig,
};
use crate::solver::{
    solve_collinearity_only, solve_mcc, tighten_budget, SolverConfig,
};

const SEED_CHANNEL_STREAM: u64 = 0x6861_726e; // "harn"
const SEED_NOISE_STREAM: u64 = 0x7368_6966; // "shif"
const SEED_RANDOM_PATTERN: u64 = 0x7261_6e64; // "rand"

/// Swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Snr,
    Interval,
    Subwindow,
    K,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::Interval => "interval",
            SweepKind::Subwindow => "subwindow",
            SweepKind::K => "k",
        }
    }
}

/// Named pattern families compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternSelector {
    #[serde(rename = "mcc")]
    Mcc,
    #[serde(rename = "3gpp")]
    ThreeGpp,
    #[serde(rename = "chirp")]
    Chirp,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "coverage_only")]
    CoverageOnly,
    #[serde(rename = "collinearity_only")]
    CollinearityOnly,
}

impl PatternSelector {
    pub fn as_str(&self) -> &'static str {
        match self {
            PatternSelector::Mcc => "mcc",
            PatternSelector::ThreeGpp => "3gpp",
            PatternSelector::Chirp => "chirp",
            PatternSelector::Random => "random",
            PatternSelector::CoverageOnly => "coverage_only",
            PatternSelector::CollinearityOnly => "collinearity_only",
        }
    }

    pub const ALL: [PatternSelector; 6] = [
        PatternSelector::Mcc,
        PatternSelector::ThreeGpp,
        PatternSelector::Chirp,
        PatternSelector::Random,
        PatternSelector::CoverageOnly,
        PatternSelector::CollinearityOnly,
    ];
}

/// Budget selection for solved patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Tightening loop starting from the coverage-only redundancy census.
    Auto,
    /// Fixed budget value.
    Fixed(usize),
}

/// Solver knobs used when the harness has to construct patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub time_limit_s: f64,
    pub gap_tolerance: f64,
    pub budget: BudgetMode,
    /// Coverage-degradation threshold of the tightening loop (relative to
    /// the unconstrained optimum).
    pub degradation_threshold: f64,
    /// Deterministic per-solve effort cap. Harness results must be
    /// byte-reproducible, so solves are bounded by nodes (machine
    /// independent), with a generous wall-clock limit as a safety net.
    #[serde(default = "default_node_limit")]
    pub node_limit: Option<u64>,
}

fn default_node_limit() -> Option<u64> {
    Some(2_000_000)
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            time_limit_s: 900.0,
            gap_tolerance: 0.0,
            budget: BudgetMode::Auto,
            degradation_threshold: 0.05,
            node_limit: default_node_limit(),
        }
    }
}

impl SolverOptions {
    fn config(&self, k: usize) -> SolverConfig {
        SolverConfig {
            k,
            budget: None,
            forbid_four_collinear: true,
            symmetric_exclusion: true,
            time_limit: Duration::from_secs_f64(self.time_limit_s),
            node_limit: self.node_limit,
            gap_tolerance: self.gap_tolerance,
        }
    }
}

fn default_realizations() -> usize {
    50
}

fn default_patterns() -> Vec<PatternSelector> {
    vec![
        PatternSelector::Mcc,
        PatternSelector::ThreeGpp,
        PatternSelector::Chirp,
        PatternSelector::Random,
    ]
}

/// Full sweep description; accepted as JSON by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub sweep_kind: SweepKind,
    pub values: Vec<f64>,
    #[serde(default = "default_patterns")]
    pub patterns: Vec<PatternSelector>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    pub sim: SimConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl SweepSpec {
    /// Desk-scale default: the k=17, M=24 grid.
    pub fn default_for(kind: SweepKind) -> Self {
        let dims = GridDims::new(17, 24).expect("static dims");
        let values = match kind {
            SweepKind::Snr => vec![0.0, 10.0, 20.0, 30.0],
            SweepKind::Interval => vec![1.0, 2.0, 4.0, 8.0],
            SweepKind::Subwindow => vec![4.0, 6.0, 8.0, 10.0],
            SweepKind::K => vec![13.0, 16.0, 17.0],
        };
        SweepSpec {
            sweep_kind: kind,
            values,
            patterns: default_patterns(),
            realizations: default_realizations(),
            seed: 0,
            sim: SimConfig::default_for(dims),
            recovery: RecoveryConfig::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid_argument("sweep values must be non-empty"));
        }
        if self.patterns.is_empty() {
            return Err(Error::invalid_argument("pattern list must be non-empty"));
        }
        if self.realizations == 0 {
            return Err(Error::invalid_argument("realizations must be >= 1"));
        }
        Ok(())
    }

    /// Simulation config with the sweep value applied.
    ///
    /// The `k` sweep recomputes `M = floor(408 / k)` and rescales the delay
    /// grid to fit the new band.
    pub fn resolve_sim(&self, value: f64) -> Result<SimConfig> {
        let mut sim = self.sim.clone();
        match self.sweep_kind {
            SweepKind::Snr => sim.snr_db = value,
            SweepKind::Interval => sim.pilot_interval = value,
            SweepKind::Subwindow => {
                let t = value as usize;
                if t == 0 || (t as f64 - value).abs() > 1e-9 {
                    return Err(Error::invalid_argument(format!(
                        "subwindow value must be a positive integer, got {value}"
                    )));
                }
                sim.window_len = t;
            }
            SweepKind::K => {
                let k = value as usize;
                if k < 2 || (k as f64 - value).abs() > 1e-9 {
                    return Err(Error::invalid_argument(format!(
                        "k value must be an integer >= 2, got {value}"
                    )));
                }
                let m = 408 / k;
                sim.dims = GridDims::new(k, m)?;
                sim.n_tau = sim.n_tau.min(sim.dims.n());
            }
        }
        sim.validate()?;
        Ok(sim)
    }
}

/// One aggregated sweep data point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub pattern: String,
    pub sweep_kind: String,
    pub sweep_value: f64,
    pub metric: String,
    pub value: f64,
    pub realizations_used: usize,
}

/// Per-realization raw score (companion file).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawScore {
    pub pattern: String,
    pub sweep_kind: String,
    pub sweep_value: f64,
    pub realization: usize,
    pub value: f64,
}

/// Sweep output: aggregated rows plus raw per-realization scores.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub raw: Vec<RawScore>,
    pub failures: usize,
}

/// Averages the worst `floor(k/4)` entries (k = number of scores); for
/// `k < 4` the single worst entry is used. Returns the average and the
/// number of entries averaged.
pub fn worst_quarter(scores: &[f64]) -> (f64, usize) {
    assert!(!scores.is_empty());
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    let count = (sorted.len() / 4).max(1);
    (sorted[..count].iter().sum::<f64>() / count as f64, count)
}

/// Exact median: the middle order statistic, or the mean of the two central
/// values for an even count.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Worst-quarter cyclic-shift evaluation of one pattern on one channel
/// realization: all `k` shifts observe the same channel (fresh noise per
/// shift), each is recovered, and the worst `floor(k/4)` NMSEs are averaged.
pub fn evaluate_pattern(
    pattern: &PilotPattern,
    channel: &DDChannel,
    sim: &SimConfig,
    rec: &RecoveryConfig,
    dicts: &Dictionaries,
    noise_seed_base: u64,
) -> Result<f64> {
    let k = pattern.k();
    let truth_latest = reconstruct_latest(&channel.dense(), dicts, sim.window_len - 1);
    let mut scores = Vec::with_capacity(k);
    for shift in 0..k {
        let cfg_s = sim
            .clone()
            .with_seed(derive_seed(noise_seed_base, &[SEED_NOISE_STREAM, shift as u64]));
        let run = || -> Result<f64> {
            let window = observe_with_dicts(pattern, shift as i64, channel, &cfg_s, dicts)?;
            let result = recover(&window, dicts, sim.dims, rec)?;
            nmse(&result.latest_channel, &truth_latest)
        };
        let score = run().map_err(|e| Error::ShiftEvaluation {
            shift,
            source: Box::new(e),
        })?;
        scores.push(score);
    }
    Ok(worst_quarter(&scores).0)
}

/// A pattern resolved for evaluation; `Random` is realization-dependent.
#[derive(Debug, Clone)]
pub enum ResolvedPattern {
    Fixed(PilotPattern),
    RandomPerRealization,
}

/// Description of how a solved pattern was obtained (for reports).
#[derive(Debug, Clone, Serialize)]
pub struct SolveInfo {
    pub status: String,
    pub objective: Option<usize>,
    pub radius_bound: Option<usize>,
    pub budget: Option<usize>,
    pub gap: f64,
}

/// Builds the pattern for a selector at grid size `k`, consulting and filling
/// the on-disk cache for solved families.
pub fn resolve_pattern(
    selector: PatternSelector,
    k: usize,
    opts: &SolverOptions,
    cache_dir: Option<&Path>,
) -> Result<(ResolvedPattern, Option<SolveInfo>)> {
    match selector {
        PatternSelector::ThreeGpp => Ok((ResolvedPattern::Fixed(baseline_3gpp(k, 0)?), None)),
        PatternSelector::Chirp => Ok((ResolvedPattern::Fixed(baseline_chirp(k)), None)),
        PatternSelector::Random => Ok((ResolvedPattern::RandomPerRealization, None)),
        PatternSelector::Mcc | PatternSelector::CoverageOnly | PatternSelector::CollinearityOnly => {
            let key = cache_key(selector, k, opts);
            if let Some(dir) = cache_dir {
                if let Some(hit) = read_cache(dir, &key)? {
                    return Ok((
                        ResolvedPattern::Fixed(PilotPattern::from_schedule(k, hit.schedule)?),
                        Some(hit.info),
                    ));
                }
            }
            let (pattern, info) = solve_selector(selector, k, opts)?;
            if let Some(dir) = cache_dir {
                write_cache(dir, &key, &pattern, &info)?;
            }
            Ok((ResolvedPattern::Fixed(pattern), Some(info)))
        }
    }
}

fn solve_selector(
    selector: PatternSelector,
    k: usize,
    opts: &SolverOptions,
) -> Result<(PilotPattern, SolveInfo)> {
    let base = opts.config(k);
    let (result, budget) = match selector {
        PatternSelector::Mcc => match opts.budget {
            BudgetMode::Auto => {
                let t = tighten_budget(&base, None, opts.degradation_threshold)?;
                (t.result, Some(t.budget))
            }
            BudgetMode::Fixed(b) => {
                let res = solve_mcc(&SolverConfig {
                    budget: Some(b),
                    ..base
                })?;
                (res, Some(b))
            }
        },
        PatternSelector::CoverageOnly => {
            let res = solve_mcc(&SolverConfig {
                budget: None,
                forbid_four_collinear: false,
                symmetric_exclusion: false,
                ..base
            })?;
            (res, None)
        }
        PatternSelector::CollinearityOnly => {
            let res = solve_collinearity_only(&base)?;
            (res, None)
        }
        _ => unreachable!("solve_selector is only called for solved families"),
    };
    let info = SolveInfo {
        status: format!("{:?}", result.status),
        objective: result.objective,
        radius_bound: result.radius_bound,
        budget,
        gap: result.gap,
    };
    match result.pattern {
        Some(p) => Ok((p, info)),
        None => Err(Error::invalid_argument(format!(
            "{} solve produced no pattern (status {:?})",
            selector.as_str(),
            result.status
        ))),
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    k: usize,
    schedule: Vec<usize>,
    status: String,
    objective: Option<usize>,
    radius_bound: Option<usize>,
    budget: Option<usize>,
    gap: f64,
}

struct CacheHit {
    schedule: Vec<usize>,
    info: SolveInfo,
}

fn cache_key(selector: PatternSelector, k: usize, opts: &SolverOptions) -> String {
    let budget = match opts.budget {
        BudgetMode::Auto => format!("auto{}", (opts.degradation_threshold * 1000.0) as i64),
        BudgetMode::Fixed(b) => format!("b{b}"),
    };
    format!(
        "{}_k{k}_{budget}_gap{}",
        selector.as_str(),
        (opts.gap_tolerance * 10000.0) as i64
    )
}

fn read_cache(dir: &Path, key: &str) -> Result<Option<CacheHit>> {
    let path = dir.join(format!("{key}.json"));
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let entry: CacheEntry = serde_json::from_str(&text)?;
    Ok(Some(CacheHit {
        schedule: entry.schedule,
        info: SolveInfo {
            status: entry.status,
            objective: entry.objective,
            radius_bound: entry.radius_bound,
            budget: entry.budget,
            gap: entry.gap,
        },
    }))
}

fn write_cache(dir: &Path, key: &str, pattern: &PilotPattern, info: &SolveInfo) -> Result<()> {
    // Effort-limited incumbents are cacheable too: harness solves run under
    // deterministic node budgets, so the incumbent is reproducible.
    std::fs::create_dir_all(dir)?;
    let entry = CacheEntry {
        k: pattern.k(),
        schedule: pattern.schedule().to_vec(),
        status: info.status.clone(),
        objective: info.objective,
        radius_bound: info.radius_bound,
        budget: info.budget,
        gap: info.gap,
    };
    std::fs::write(
        dir.join(format!("{key}.json")),
        serde_json::to_string_pretty(&entry)?,
    )?;
    Ok(())
}

/// Runs a sweep with `jobs` worker threads.
pub fn run_sweep(
    spec: &SweepSpec,
    jobs: usize,
    cache_dir: Option<&Path>,
) -> Result<SweepOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid_argument(format!("worker pool: {e}")))?;

    // Resolve per-value configs and fixed patterns up front (solves cache).
    let mut value_plans = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        let sim = spec.resolve_sim(value)?;
        let mut patterns = Vec::new();
        for &sel in &spec.patterns {
            let (resolved, _) = resolve_pattern(sel, sim.dims.k, &spec.solver, cache_dir)?;
            patterns.push((sel, resolved));
        }
        value_plans.push((vi, value, sim, patterns));
    }

    // Independent task per (value, realization); results land in indexed
    // slots so aggregation order is fixed regardless of scheduling.
    struct Task<'a> {
        vi: usize,
        realization: usize,
        sim: &'a SimConfig,
        patterns: &'a [(PatternSelector, ResolvedPattern)],
    }
    let mut tasks = Vec::new();
    for (vi, _, sim, patterns) in &value_plans {
        for r in 0..spec.realizations {
            tasks.push(Task {
                vi: *vi,
                realization: r,
                sim,
                patterns,
            });
        }
    }

    let master = spec.seed;
    let rec = &spec.recovery;
    let results: Vec<Vec<std::result::Result<f64, String>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let sim = task.sim;
                let channel_seed = derive_seed(
                    master,
                    &[SEED_CHANNEL_STREAM, task.vi as u64, task.realization as u64],
                );
                let dicts = build_dictionaries(sim);
                let channel = match sample_channel(&sim.clone().with_seed(channel_seed)) {
                    Ok(c) => c,
                    Err(e) => {
                        return vec![Err(e.to_string()); task.patterns.len()];
                    }
                };
                task.patterns
                    .iter()
                    .map(|(sel, resolved)| {
                        let pattern = match resolved {
                            ResolvedPattern::Fixed(p) => p.clone(),
                            ResolvedPattern::RandomPerRealization => baseline_random(
                                sim.dims.k,
                                derive_seed(
                                    master,
                                    &[SEED_RANDOM_PATTERN, task.realization as u64],
                                ),
                            ),
                        };
                        let noise_base = derive_seed(
                            master,
                            &[task.vi as u64, task.realization as u64, 0x6e6f],
                        );
                        evaluate_pattern(&pattern, &channel, sim, rec, &dicts, noise_base)
                            .map_err(|e| format!("{sel:?}: {e}", sel = sel.as_str()))
                    })
                    .collect()
            })
            .collect()
    });

    // Aggregate.
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    let mut failures = 0usize;
    for (vi, value, _, patterns) in &value_plans {
        for (pi, (sel, _)) in patterns.iter().enumerate() {
            let mut scores = Vec::with_capacity(spec.realizations);
            for r in 0..spec.realizations {
                let task_idx = vi * spec.realizations + r;
                match &results[task_idx][pi] {
                    Ok(score) => {
                        scores.push(*score);
                        raw.push(RawScore {
                            pattern: sel.as_str().to_string(),
                            sweep_kind: spec.sweep_kind.as_str().to_string(),
                            sweep_value: *value,
                            realization: r,
                            value: *score,
                        });
                    }
                    Err(_) => failures += 1,
                }
            }
            let failed = spec.realizations - scores.len();
            if failed * 10 > spec.realizations {
                return Err(Error::SweepAborted(format!(
                    "{} of {} realizations failed for pattern {} at {}={}",
                    failed,
                    spec.realizations,
                    sel.as_str(),
                    spec.sweep_kind.as_str(),
                    value
                )));
            }
            rows.push(SweepRow {
                pattern: sel.as_str().to_string(),
                sweep_kind: spec.sweep_kind.as_str().to_string(),
                sweep_value: *value,
                metric: "median_worst_quarter_nmse".to_string(),
                value: median(&scores),
                realizations_used: scores.len(),
            });
        }
    }
    Ok(SweepOutput {
        rows,
        raw,
        failures,
    })
}

/// One row of the pattern comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub pattern: String,
    pub is_permutation: bool,
    pub radius: usize,
    pub coverage_total: usize,
    pub redundant_lines: usize,
    pub has_four_collinear: bool,
    pub symmetric_triples: usize,
    pub max_offpeak_coherence: f64,
    pub median_worst_quarter_nmse: Option<f64>,
    pub realizations_used: usize,
    pub solve: Option<SolveInfo>,
}

/// Comparison report across the six named pattern families.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub k: usize,
    pub rows: Vec<CompareRow>,
}

/// Builds all six named patterns at grid size `k`, tabulates geometry
/// metrics, and scores one default-configuration NMSE column per pattern.
pub fn compare_patterns(
    spec: &SweepSpec,
    jobs: usize,
    cache_dir: Option<&Path>,
) -> Result<CompareReport> {
    let k = spec.sim.dims.k;
    let lines = LineSet::new(k);

    let mut solve_infos: BTreeMap<&'static str, Option<SolveInfo>> = BTreeMap::new();
    let mut fixed: Vec<(PatternSelector, Option<PilotPattern>)> = Vec::new();
    for sel in PatternSelector::ALL {
        let (resolved, info) = resolve_pattern(sel, k, &spec.solver, cache_dir)?;
        solve_infos.insert(sel.as_str(), info);
        match resolved {
            ResolvedPattern::Fixed(p) => fixed.push((sel, Some(p))),
            ResolvedPattern::RandomPerRealization => fixed.push((sel, None)),
        }
    }

    // One default sweep point for the NMSE column.
    let nmse_spec = SweepSpec {
        sweep_kind: SweepKind::Snr,
        values: vec![spec.sim.snr_db],
        patterns: PatternSelector::ALL.to_vec(),
        ..spec.clone()
    };
    let sweep = run_sweep(&nmse_spec, jobs, cache_dir)?;

    let mut rows = Vec::new();
    for (sel, maybe_pattern) in &fixed {
        // Geometry metrics for the random family use a representative draw.
        let pattern = match maybe_pattern {
            Some(p) => p.clone(),
            None => baseline_random(k, derive_seed(spec.seed, &[SEED_RANDOM_PATTERN, 0])),
        };
        let cov = coverage(&pattern);
        let census = collinearity_census(&pattern, &lines);
        let triples = symmetric_triples(&pattern, &lines);
        let coh = coherence_map(&pattern);
        let sweep_row = sweep.rows.iter().find(|r| r.pattern == sel.as_str());
        rows.push(CompareRow {
            pattern: sel.as_str().to_string(),
            is_permutation: pattern.is_permutation(),
            radius: cov.radius,
            coverage_total: cov.total,
            redundant_lines: census.redundant_lines,
            has_four_collinear: census.has_four_collinear,
            symmetric_triples: triples.len(),
            max_offpeak_coherence: coh.max_offpeak,
            median_worst_quarter_nmse: sweep_row.map(|r| r.value),
            realizations_used: sweep_row.map_or(0, |r| r.realizations_used),
            solve: solve_infos.get(sel.as_str()).cloned().flatten(),
        });
    }
    Ok(CompareReport { k, rows })
}
