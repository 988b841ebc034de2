//! File formats: pattern files, observation bundles, metric reports, CSV.
//!
//! Pattern files come in two interchangeable encodings, auto-detected on
//! read: plain text (line 1 = `k`, line 2 = space-separated schedule) and
//! JSON (`{"k": int, "schedule": [int, ...]}`).
//!
//! Observation bundles are JSON with every complex number encoded as a
//! `[re, im]` pair of decimals.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{CompareReport, RawScore, SweepRow};
use crate::pattern::PilotPattern;
use crate::sim::{DDChannel, ObservationWindow, SimConfig, SlotObservation};

/// Pattern file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternFormat {
    Text,
    Json,
}

/// Parses a pattern from either encoding (JSON when the first non-space
/// character is `{`).
pub fn parse_pattern(text: &str) -> Result<PilotPattern> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let k: usize = lines
        .next()
        .ok_or_else(|| parse_err("pattern", "missing k line"))?
        .trim()
        .parse()
        .map_err(|e| parse_err("pattern", format!("bad k: {e}")))?;
    let schedule = lines
        .next()
        .ok_or_else(|| parse_err("pattern", "missing schedule line"))?
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|e| parse_err("pattern", format!("bad schedule entry {tok:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    PilotPattern::from_schedule(k, schedule)
}

/// Serializes a pattern in the chosen encoding.
pub fn format_pattern(pattern: &PilotPattern, format: PatternFormat) -> String {
    match format {
        PatternFormat::Text => {
            let schedule: Vec<String> = pattern.schedule().iter().map(|f| f.to_string()).collect();
            format!("{}\n{}\n", pattern.k(), schedule.join(" "))
        }
        PatternFormat::Json => {
            let mut s = serde_json::to_string(pattern).expect("pattern serializes");
            s.push('\n');
            s
        }
    }
}

pub fn read_pattern(path: &Path) -> Result<PilotPattern> {
    parse_pattern(&fs::read_to_string(path)?)
}

pub fn write_pattern(path: &Path, pattern: &PilotPattern, format: PatternFormat) -> Result<()> {
    fs::write(path, format_pattern(pattern, format))?;
    Ok(())
}

fn parse_err(what: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        what: what.into(),
        msg: msg.into(),
    }
}

fn to_pairs(v: &DVector<Complex64>) -> Vec<(f64, f64)> {
    v.iter().map(|c| (c.re, c.im)).collect()
}

fn from_pairs(pairs: &[(f64, f64)]) -> DVector<Complex64> {
    DVector::from_iterator(pairs.len(), pairs.iter().map(|&(re, im)| Complex64::new(re, im)))
}

#[derive(Serialize, Deserialize)]
struct SlotJson {
    t: usize,
    subband: usize,
    sigma_sq: f64,
    /// Complex samples as `[re, im]` pairs.
    y: Vec<(f64, f64)>,
}

/// Self-contained simulate output: everything `recover` needs, including the
/// ground-truth channel for scoring.
#[derive(Serialize, Deserialize)]
pub struct ObservationBundle {
    pub format_version: u32,
    pub sim: SimConfig,
    pub pattern: PilotPattern,
    pub shift: i64,
    pub channel: DDChannel,
    #[serde(rename = "window")]
    window_json: WindowJson,
}

#[derive(Serialize, Deserialize)]
struct WindowJson {
    t0: usize,
    slots: Vec<SlotJson>,
}

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

impl ObservationBundle {
    pub fn new(
        sim: SimConfig,
        pattern: PilotPattern,
        shift: i64,
        channel: DDChannel,
        window: &ObservationWindow,
    ) -> Result<Self> {
        if !sim.snr_db.is_finite() {
            return Err(Error::invalid_argument(
                "bundles require a finite snr_db (JSON cannot carry infinities)",
            ));
        }
        Ok(ObservationBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            sim,
            pattern,
            shift,
            channel,
            window_json: WindowJson {
                t0: window.t0,
                slots: window
                    .slots
                    .iter()
                    .map(|s| SlotJson {
                        t: s.t,
                        subband: s.subband,
                        sigma_sq: s.sigma_sq,
                        y: to_pairs(&s.y),
                    })
                    .collect(),
            },
        })
    }

    pub fn window(&self) -> ObservationWindow {
        ObservationWindow {
            t0: self.window_json.t0,
            slots: self
                .window_json
                .slots
                .iter()
                .map(|s| SlotObservation {
                    t: s.t,
                    subband: s.subband,
                    sigma_sq: s.sigma_sq,
                    y: from_pairs(&s.y),
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bundle: ObservationBundle = serde_json::from_str(&fs::read_to_string(path)?)?;
        if bundle.format_version != BUNDLE_FORMAT_VERSION {
            return Err(parse_err(
                "bundle",
                format!("unsupported format_version {}", bundle.format_version),
            ));
        }
        Ok(bundle)
    }
}

/// JSON report of the `metrics` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub radius: usize,
    pub total: usize,
    pub redundant_lines: usize,
    pub has_four_collinear: bool,
    pub symmetric_triples: usize,
    pub max_offpeak_coherence: f64,
}

/// Writes a squared-coherence map as CSV: `k` rows by `k` columns, row index
/// = delay offset `i`.
pub fn write_rho_csv<W: Write>(out: &mut W, map: &crate::geometry::CoherenceMap) -> Result<()> {
    let k = map.k();
    for i in 0..k {
        let row: Vec<String> = (0..k).map(|j| format!("{}", map.rho_sq(i, j))).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub const SWEEP_CSV_HEADER: &str = "pattern,sweep_kind,sweep_value,metric,value,realizations_used";

/// Writes aggregated sweep rows with the fixed schema header.
pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.pattern, r.sweep_kind, r.sweep_value, r.metric, r.value, r.realizations_used
        )?;
    }
    Ok(())
}

/// Writes per-realization raw scores (companion file).
pub fn write_raw_csv<W: Write>(out: &mut W, rows: &[RawScore]) -> Result<()> {
    writeln!(out, "pattern,sweep_kind,sweep_value,realization,value")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.pattern, r.sweep_kind, r.sweep_value, r.realization, r.value
        )?;
    }
    Ok(())
}

/// Writes the comparison table as CSV.
pub fn write_compare_csv<W: Write>(out: &mut W, report: &CompareReport) -> Result<()> {
    writeln!(
        out,
        "pattern,is_permutation,radius,coverage_total,redundant_lines,has_four_collinear,symmetric_triples,max_offpeak_coherence,median_worst_quarter_nmse,realizations_used"
    )?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.pattern,
            r.is_permutation,
            r.radius,
            r.coverage_total,
            r.redundant_lines,
            r.has_four_collinear,
            r.symmetric_triples,
            r.max_offpeak_coherence,
            r.median_worst_quarter_nmse
                .map_or(String::new(), |v| v.to_string()),
            r.realizations_used
        )?;
    }
    Ok(())
}

/// Run metadata written next to sweep outputs: resolved configuration plus
/// tool version and seeds, for reproducibility.
#[derive(Serialize)]
pub struct RunMetadata<'a, T: Serialize> {
    pub tool_version: &'a str,
    pub seed: u64,
    pub jobs: usize,
    pub spec: &'a T,
}

pub fn write_run_metadata<T: Serialize>(path: &Path, meta: &RunMetadata<'_, T>) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}
