//! LP-format export of the integrated 0-1 model.
//!
//! Writes the exact linearization solved by the internal search so the same
//! model can be handed to an external MILP solver: assignment variables
//! `e_f_t__f'_t'` exist only for pairs within the stage-1 radius cap, pilot
//! variables `x_f_t` obey the slot/subband constraints, and line-activation
//! variables `z_l` implement the redundant-collinearity budget. Symmetric
//! point triples become explicit exclusion rows.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::geometry::{metric_cost_unchecked, LineSet};
use crate::solver::SolverConfig;

/// Size summary of an exported model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpStats {
    pub x_vars: usize,
    pub e_vars: usize,
    pub z_vars: usize,
    pub constraints: usize,
}

/// Writes the model for `config` with the stage-1 radius cap `radius_cap`
/// to `path` in LP text format.
pub fn export_lp(config: &SolverConfig, radius_cap: usize, path: &Path) -> Result<LpStats> {
    let lines = LineSet::new(config.k);
    let mut out = BufWriter::new(File::create(path)?);
    let stats = write_lp(config, radius_cap, &lines, &mut out)?;
    out.flush()?;
    Ok(stats)
}

/// Writer-based variant of [`export_lp`].
pub fn write_lp<W: Write>(
    config: &SolverConfig,
    radius_cap: usize,
    lines: &LineSet,
    out: &mut W,
) -> Result<LpStats> {
    let k = config.k;
    let mut constraints = 0usize;

    let x_name = |f: usize, t: usize| format!("x_{f}_{t}");
    let e_name = |f: usize, t: usize, fp: usize, tp: usize| format!("e_{f}_{t}__{fp}_{tp}");

    // Candidate pilot links per cell: pairs within the radius cap.
    let mut links: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); k * k];
    for f in 0..k {
        for t in 0..k {
            for fp in 0..k {
                for tp in 0..k {
                    let c = metric_cost_unchecked(f, t, fp, tp, k);
                    if c <= radius_cap {
                        links[f * k + t].push((fp, tp, c));
                    }
                }
            }
        }
    }
    let e_vars: usize = links.iter().map(|l| l.len()).sum();

    writeln!(
        out,
        "\\ MCC pilot pattern model: k={k}, radius cap {radius_cap}, budget {}, four-collinear {}, symmetric exclusion {}",
        match config.budget {
            Some(b) => b.to_string(),
            None => "off".into(),
        },
        if config.forbid_four_collinear { "forbidden" } else { "allowed" },
        if config.symmetric_exclusion { "on" } else { "off" },
    )?;

    // Objective: sum of metric costs over active assignment links.
    writeln!(out, "Minimize")?;
    let mut obj = String::from(" obj:");
    let mut first = true;
    for (cell, cands) in links.iter().enumerate() {
        let (f, t) = (cell / k, cell % k);
        for &(fp, tp, c) in cands {
            if c == 0 {
                continue;
            }
            let term = format!(
                " {}{c} {}",
                if first { "" } else { "+ " },
                e_name(f, t, fp, tp)
            );
            first = false;
            push_wrapped(out, &mut obj, &term)?;
        }
    }
    writeln!(out, "{obj}")?;

    writeln!(out, "Subject To")?;

    // Each cell is assigned to exactly one in-radius pilot location.
    for (cell, cands) in links.iter().enumerate() {
        let (f, t) = (cell / k, cell % k);
        let mut row = format!(" assign_{f}_{t}:");
        for (i, &(fp, tp, _)) in cands.iter().enumerate() {
            let term = format!(" {}{}", if i == 0 { "" } else { "+ " }, e_name(f, t, fp, tp));
            push_wrapped(out, &mut row, &term)?;
        }
        writeln!(out, "{row} = 1")?;
        constraints += 1;
    }

    // A link can only point at an active pilot.
    for (cell, cands) in links.iter().enumerate() {
        let (f, t) = (cell / k, cell % k);
        for &(fp, tp, _) in cands {
            writeln!(
                out,
                " link_{f}_{t}__{fp}_{tp}: {} - {} <= 0",
                e_name(f, t, fp, tp),
                x_name(fp, tp)
            )?;
            constraints += 1;
        }
    }

    // Feasibility: one subband per slot, each subband once per period.
    for t in 0..k {
        let mut row = format!(" slot_{t}:");
        for f in 0..k {
            let term = format!(" {}{}", if f == 0 { "" } else { "+ " }, x_name(f, t));
            push_wrapped(out, &mut row, &term)?;
        }
        writeln!(out, "{row} = 1")?;
        constraints += 1;
    }
    for f in 0..k {
        let mut row = format!(" band_{f}:");
        for t in 0..k {
            let term = format!(" {}{}", if t == 0 { "" } else { "+ " }, x_name(f, t));
            push_wrapped(out, &mut row, &term)?;
        }
        writeln!(out, "{row} = 1")?;
        constraints += 1;
    }

    // Collinearity: per-line pilot caps with activation variables and budget.
    let z_vars = if config.budget.is_some() { lines.len() } else { 0 };
    if config.budget.is_some() {
        for (l, line) in lines.lines().iter().enumerate() {
            let mut row = format!(" line_{l}:");
            for (i, &(f, t)) in line.points().iter().enumerate() {
                let term = format!(" {}{}", if i == 0 { "" } else { "+ " }, x_name(f, t));
                push_wrapped(out, &mut row, &term)?;
            }
            writeln!(out, "{row} - z_{l} <= 2")?;
            constraints += 1;
        }
        let mut row = String::from(" budget:");
        for l in 0..lines.len() {
            let term = format!(" {}z_{l}", if l == 0 { "" } else { "+ " });
            push_wrapped(out, &mut row, &term)?;
        }
        writeln!(out, "{row} <= {}", config.budget.unwrap())?;
        constraints += 1;
    } else if config.forbid_four_collinear {
        for (l, line) in lines.lines().iter().enumerate() {
            let mut row = format!(" line_{l}:");
            for (i, &(f, t)) in line.points().iter().enumerate() {
                let term = format!(" {}{}", if i == 0 { "" } else { "+ " }, x_name(f, t));
                push_wrapped(out, &mut row, &term)?;
            }
            writeln!(out, "{row} <= 3")?;
            constraints += 1;
        }
    }

    // Symmetric-triple exclusion rows.
    if config.symmetric_exclusion {
        for (i, triple) in lines.symmetric_point_triples().iter().enumerate() {
            let [a, b, c] = triple.points;
            writeln!(
                out,
                " sym_{i}: {} + {} + {} <= 2",
                x_name(a.0, a.1),
                x_name(b.0, b.1),
                x_name(c.0, c.1)
            )?;
            constraints += 1;
        }
    }

    // Variable domains.
    if z_vars > 0 && !config.forbid_four_collinear {
        writeln!(out, "Bounds")?;
        for l in 0..lines.len() {
            writeln!(out, " 0 <= z_{l} <= {}", k - 2)?;
        }
    }
    writeln!(out, "Binary")?;
    for f in 0..k {
        for t in 0..k {
            writeln!(out, " {}", x_name(f, t))?;
        }
    }
    for (cell, cands) in links.iter().enumerate() {
        let (f, t) = (cell / k, cell % k);
        for &(fp, tp, _) in cands {
            writeln!(out, " {}", e_name(f, t, fp, tp))?;
        }
    }
    if z_vars > 0 {
        if config.forbid_four_collinear {
            for l in 0..lines.len() {
                writeln!(out, " z_{l}")?;
            }
        } else {
            writeln!(out, "General")?;
            for l in 0..lines.len() {
                writeln!(out, " z_{l}")?;
            }
        }
    }
    writeln!(out, "End")?;

    Ok(LpStats {
        x_vars: k * k,
        e_vars,
        z_vars,
        constraints,
    })
}

/// Appends `term` to `row`, flushing `row` when it grows past 200 columns
/// (LP readers accept arbitrary line breaks between terms).
fn push_wrapped<W: Write>(out: &mut W, row: &mut String, term: &str) -> std::io::Result<()> {
    if row.len() + term.len() > 200 {
        writeln!(out, "{row}")?;
        row.clear();
        row.push(' ');
        let _ = write!(row, "  {}", term.trim_start());
    } else {
        row.push_str(term);
    }
    Ok(())
}
