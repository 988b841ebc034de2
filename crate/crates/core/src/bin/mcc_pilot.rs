//! Command-line front end: pattern design, geometry metrics, channel
//! simulation, recovery, sweeps, and pattern comparison.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mcc_pilot::error::{Error, Result};
use mcc_pilot::geometry::{
    coherence_map, collinearity_census, coverage, symmetric_triples, LineSet,
};
use mcc_pilot::harness::{
    compare_patterns, run_sweep, PatternSelector, SolverOptions, SweepKind, SweepSpec,
};
use mcc_pilot::io::{
    self, MetricsReport, ObservationBundle, PatternFormat, RunMetadata,
};
use mcc_pilot::pattern::GridDims;
use mcc_pilot::recovery::{recover, RecoveryConfig};
use mcc_pilot::sim::{observe, sample_channel, SimConfig};
use mcc_pilot::solver::{export_lp, solve_mcc, tighten_budget, SolveStatus, SolverConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

// Exit codes of `design`, distinguishing solver terminal states.
const EXIT_GAP_TERMINATED: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mcc-pilot",
    version = VERSION,
    about = "MCC pilot pattern design and sliding-window delay-Doppler recovery toolkit"
)]
struct Cli {
    /// Master seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps and comparisons.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory for sweep/compare artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a pattern by the two-stage exact optimizer.
    Design(DesignArgs),
    /// Geometry report of a pattern file.
    Metrics(MetricsArgs),
    /// Generate a synthetic observation bundle.
    Simulate(SimulateArgs),
    /// Recover a channel from an observation bundle.
    Recover(RecoverArgs),
    /// Run a sweep from a JSON spec (or defaults).
    Sweep(SweepArgs),
    /// Compare the six named pattern families at one grid size.
    Compare(CompareArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Hopping period / subband count.
    #[arg(long)]
    k: usize,
    /// Redundant-collinearity budget; omit to auto-tighten from the
    /// coverage-only census.
    #[arg(long)]
    budget: Option<usize>,
    /// Drop the collinearity budget and symmetric-triple machinery entirely
    /// (coverage-only pattern).
    #[arg(long)]
    no_collinearity: bool,
    /// Allow symmetric pilot triples along a modular line.
    #[arg(long)]
    no_symmetry_exclusion: bool,
    /// Allow four or more pilots on one modular line (budget units then cost
    /// one per pilot past two).
    #[arg(long)]
    allow_four_collinear: bool,
    /// Coverage-degradation threshold of the auto-tightening loop, relative
    /// to the unconstrained optimum.
    #[arg(long, default_value_t = 0.05)]
    degradation_threshold: f64,
    /// Wall-clock limit in seconds (shared by both stages).
    #[arg(long, default_value_t = 120.0)]
    time_limit: f64,
    /// Relative optimality gap tolerance; 0 proves optimality.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    /// Deterministic node budget for the stage-2 search (reproducible
    /// effort limit, unlike the wall clock).
    #[arg(long)]
    node_limit: Option<u64>,
    /// Also export the integrated 0-1 model in LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Write the pattern here (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pattern file encoding.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for PatternFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => PatternFormat::Text,
            FormatArg::Json => PatternFormat::Json,
        }
    }
}

#[derive(Args)]
struct MetricsArgs {
    /// Pattern file (text or JSON).
    #[arg(long)]
    pattern: PathBuf,
    /// Also write the squared-coherence map as CSV (k rows x k columns, row
    /// index = delay offset).
    #[arg(long)]
    rho_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Pattern file (text or JSON).
    #[arg(long)]
    pattern: PathBuf,
    /// Cyclic shift under evaluation.
    #[arg(long, default_value_t = 0)]
    shift: i64,
    /// Subband width in subcarriers.
    #[arg(long, default_value_t = 24)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    n_tau: usize,
    #[arg(long, default_value_t = 16)]
    n_nu: usize,
    /// Number of sparse channel paths.
    #[arg(long, default_value_t = 6)]
    paths: usize,
    /// Maximum Doppler in cycles per slot at unit interval.
    #[arg(long, default_value_t = 0.05)]
    max_doppler: f64,
    /// Pilot transmission interval (slot-spacing multiplier).
    #[arg(long, default_value_t = 1.0)]
    interval: f64,
    /// Exponential power-delay-profile rate.
    #[arg(long, default_value_t = 0.1)]
    pdp_decay: f64,
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    /// Observation window length T.
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Bundle output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    /// Observation bundle produced by `simulate`.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    /// Fixed regularization weight (noise-calibrated rule if omitted).
    #[arg(long)]
    lambda: Option<f64>,
    /// Doppler truncation half-width in bins.
    #[arg(long)]
    doppler_trunc: Option<usize>,
    /// Disable support-restricted least-squares debiasing.
    #[arg(long)]
    no_debias: bool,
    /// Support detection threshold relative to the largest modulus.
    #[arg(long, default_value_t = 0.05)]
    support_threshold: f64,
    /// Also write the recovered latest-slot channel as CSV (re,im per line).
    #[arg(long)]
    latest_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec JSON; omit to use the desk-scale default for --kind.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Sweep kind when no spec file is given.
    #[arg(long, value_enum, default_value_t = KindArg::Snr)]
    kind: KindArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Snr,
    Interval,
    Subwindow,
    K,
}

impl From<KindArg> for SweepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Snr => SweepKind::Snr,
            KindArg::Interval => SweepKind::Interval,
            KindArg::Subwindow => SweepKind::Subwindow,
            KindArg::K => SweepKind::K,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 17)]
    k: usize,
    /// Channel realizations for the NMSE column.
    #[arg(long, default_value_t = 50)]
    realizations: usize,
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    /// Solver wall-clock limit per solve, seconds.
    #[arg(long, default_value_t = 120.0)]
    time_limit: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Design(args) => design(args),
        Command::Metrics(args) => metrics(args),
        Command::Simulate(args) => simulate(args, cli.seed),
        Command::Recover(args) => recover_cmd(args),
        Command::Sweep(args) => sweep(args, cli.seed, cli.jobs, cli.out_dir),
        Command::Compare(args) => compare(args, cli.seed, cli.jobs, cli.out_dir),
    }
}

fn design(args: DesignArgs) -> Result<ExitCode> {
    let time_limit = Duration::from_secs_f64(args.time_limit);
    let base = SolverConfig {
        k: args.k,
        budget: None,
        forbid_four_collinear: !args.allow_four_collinear,
        symmetric_exclusion: !args.no_symmetry_exclusion,
        time_limit,
        node_limit: args.node_limit,
        gap_tolerance: args.gap,
    };
    let (result, budget) = if args.no_collinearity {
        (
            solve_mcc(&SolverConfig {
                budget: None,
                forbid_four_collinear: false,
                symmetric_exclusion: false,
                ..base
            })?,
            None,
        )
    } else if let Some(b) = args.budget {
        (
            solve_mcc(&SolverConfig {
                budget: Some(b),
                ..base
            })?,
            Some(b),
        )
    } else {
        let t = tighten_budget(&base, None, args.degradation_threshold)?;
        (t.result, Some(t.budget))
    };

    eprintln!(
        "status: {:?}  radius_bound: {:?}  objective: {:?}  budget: {:?}  gap: {}  nodes: {}  wall: {:.2}s",
        result.status,
        result.radius_bound,
        result.objective,
        budget,
        result.gap,
        result.nodes_explored,
        result.wall_time.as_secs_f64()
    );

    if let Some(lp_path) = &args.export_lp {
        let radius = result.radius_bound.ok_or_else(|| {
            Error::InvalidArgument("no radius bound available for LP export".into())
        })?;
        let cfg = SolverConfig {
            budget: if args.no_collinearity { None } else { budget },
            forbid_four_collinear: !args.no_collinearity && !args.allow_four_collinear,
            symmetric_exclusion: !args.no_collinearity && !args.no_symmetry_exclusion,
            ..base
        };
        let stats = export_lp(&cfg, radius, lp_path)?;
        eprintln!(
            "lp: {} x-vars, {} e-vars, {} z-vars, {} constraints -> {}",
            stats.x_vars,
            stats.e_vars,
            stats.z_vars,
            stats.constraints,
            lp_path.display()
        );
    }

    if let Some(pattern) = &result.pattern {
        let text = io::format_pattern(pattern, args.format.into());
        match &args.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
    }

    Ok(match result.status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        SolveStatus::GapTerminated => ExitCode::from(EXIT_GAP_TERMINATED),
        SolveStatus::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
        SolveStatus::TimedOut => ExitCode::from(EXIT_TIMEOUT),
    })
}

fn metrics(args: MetricsArgs) -> Result<ExitCode> {
    let pattern = io::read_pattern(&args.pattern)?;
    let lines = LineSet::new(pattern.k());
    let cov = coverage(&pattern);
    let census = collinearity_census(&pattern, &lines);
    let triples = symmetric_triples(&pattern, &lines);
    let coh = coherence_map(&pattern);
    let report = MetricsReport {
        radius: cov.radius,
        total: cov.total,
        redundant_lines: census.redundant_lines,
        has_four_collinear: census.has_four_collinear,
        symmetric_triples: triples.len(),
        max_offpeak_coherence: coh.max_offpeak,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &args.rho_csv {
        let mut buf = Vec::new();
        io::write_rho_csv(&mut buf, &coh)?;
        std::fs::write(path, buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs, seed: u64) -> Result<ExitCode> {
    let pattern = io::read_pattern(&args.pattern)?;
    let dims = GridDims::new(pattern.k(), args.m)?;
    let sim = SimConfig {
        dims,
        n_tau: args.n_tau,
        n_nu: args.n_nu,
        num_paths: args.paths,
        max_doppler: args.max_doppler,
        pilot_interval: args.interval,
        pdp_decay: args.pdp_decay,
        snr_db: args.snr_db,
        window_len: args.window,
        seed,
    };
    let channel = sample_channel(&sim)?;
    let window = observe(&pattern, args.shift, &channel, &sim)?;
    let bundle = ObservationBundle::new(sim, pattern, args.shift, channel, &window)?;
    bundle.write(&args.out)?;
    eprintln!("bundle -> {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn recover_cmd(args: RecoverArgs) -> Result<ExitCode> {
    let bundle = ObservationBundle::read(&args.bundle)?;
    let config = RecoveryConfig {
        iterations: args.iterations,
        lambda_override: args.lambda,
        doppler_truncation: args.doppler_trunc,
        debias_on_support: !args.no_debias,
        support_threshold: args.support_threshold,
    };
    let window = bundle.window();
    let dicts = mcc_pilot::sim::build_dictionaries(&bundle.sim);
    let result = recover(&window, &dicts, bundle.sim.dims, &config)?;
    let truth = mcc_pilot::recovery::reconstruct_latest(
        &bundle.channel.dense(),
        &dicts,
        window.t0,
    );
    let score = mcc_pilot::recovery::nmse(&result.latest_channel, &truth)?;
    let report = serde_json::json!({
        "nmse": score,
        "lambda_used": result.lambda_used,
        "iterations": config.iterations,
        "objective_first": result.objective_trace.first(),
        "objective_last": result.objective_trace.last(),
        "degenerate_ls": result.degenerate_ls,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &args.latest_csv {
        let mut buf = String::new();
        for c in &result.latest_channel {
            buf.push_str(&format!("{},{}\n", c.re, c.im));
        }
        std::fs::write(path, buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs, seed: u64, jobs: usize, out_dir: PathBuf) -> Result<ExitCode> {
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_str::<SweepSpec>(&std::fs::read_to_string(path)?)?,
        None => {
            let mut s = SweepSpec::default_for(args.kind.into());
            s.seed = seed;
            s
        }
    };
    if args.spec.is_some() && seed != 0 {
        spec.seed = seed;
    }
    std::fs::create_dir_all(&out_dir)?;
    let cache_dir = out_dir.join("pattern-cache");
    let output = run_sweep(&spec, jobs, Some(&cache_dir))?;

    let kind = spec.sweep_kind.as_str();
    let csv_path = out_dir.join(format!("sweep_{kind}.csv"));
    let mut buf = Vec::new();
    io::write_sweep_csv(&mut buf, &output.rows)?;
    std::fs::write(&csv_path, buf)?;
    let mut raw_buf = Vec::new();
    io::write_raw_csv(&mut raw_buf, &output.raw)?;
    std::fs::write(out_dir.join(format!("sweep_{kind}_raw.csv")), raw_buf)?;
    io::write_run_metadata(
        &out_dir.join(format!("sweep_{kind}_meta.json")),
        &RunMetadata {
            tool_version: VERSION,
            seed: spec.seed,
            jobs,
            spec: &spec,
        },
    )?;
    for row in &output.rows {
        println!(
            "{} {}={} -> {} ({} realizations)",
            row.pattern, row.sweep_kind, row.sweep_value, row.value, row.realizations_used
        );
    }
    eprintln!("csv -> {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn compare(args: CompareArgs, seed: u64, jobs: usize, out_dir: PathBuf) -> Result<ExitCode> {
    let dims = GridDims::new(args.k, (408 / args.k).max(1))?;
    let mut sim = SimConfig::default_for(dims);
    sim.snr_db = args.snr_db;
    let spec = SweepSpec {
        sweep_kind: SweepKind::Snr,
        values: vec![args.snr_db],
        patterns: PatternSelector::ALL.to_vec(),
        realizations: args.realizations,
        seed,
        sim,
        recovery: RecoveryConfig::default(),
        solver: SolverOptions {
            time_limit_s: args.time_limit,
            ..SolverOptions::default()
        },
    };
    std::fs::create_dir_all(&out_dir)?;
    let cache_dir = out_dir.join("pattern-cache");
    let report = compare_patterns(&spec, jobs, Some(&cache_dir))?;

    println!(
        "{:<18} {:>5} {:>7} {:>10} {:>6} {:>8} {:>10} {:>14}",
        "pattern", "perm", "radius", "cov_total", "lines", "triples", "max_rho", "median_nmse"
    );
    for r in &report.rows {
        println!(
            "{:<18} {:>5} {:>7} {:>10} {:>6} {:>8} {:>10.4} {:>14}",
            r.pattern,
            r.is_permutation,
            r.radius,
            r.coverage_total,
            r.redundant_lines,
            r.symmetric_triples,
            r.max_offpeak_coherence,
            r.median_worst_quarter_nmse
                .map_or("-".to_string(), |v| format!("{v:.6}")),
        );
    }
    let mut buf = Vec::new();
    io::write_compare_csv(&mut buf, &report)?;
    let path = out_dir.join(format!("compare_k{}.csv", args.k));
    std::fs::write(&path, buf)?;
    std::fs::write(
        out_dir.join(format!("compare_k{}.json", args.k)),
        serde_json::to_string_pretty(&report)?,
    )?;
    eprintln!("csv -> {}", path.display());
    Ok(ExitCode::SUCCESS)
}
