//! LP export checks: variable counts against the emitted file, objective
//! coefficients against the grid metric, and a full round trip feeding the
//! solver's own solution through an independent constraint checker built on
//! a minimal LP-format parser.

use std::collections::HashMap;

use mcc_pilot::geometry::{collinearity_census, coverage, metric_cost, LineSet};
use mcc_pilot::solver::{solve_mcc, write_lp, SolverConfig};

#[derive(Debug, PartialEq)]
enum Relation {
    Le,
    Eq,
}

#[derive(Debug)]
struct Row {
    name: String,
    terms: Vec<(i64, String)>,
    relation: Relation,
    rhs: i64,
}

#[derive(Debug, Default)]
struct LpModel {
    objective: Vec<(i64, String)>,
    rows: Vec<Row>,
    binaries: Vec<String>,
    generals: Vec<String>,
    bounds: Vec<(String, i64, i64)>,
}

fn parse_terms(expr: &str) -> Vec<(i64, String)> {
    let mut terms = Vec::new();
    let mut sign = 1i64;
    let mut coef: Option<i64> = None;
    for tok in expr.split_whitespace() {
        match tok {
            "+" => sign = 1,
            "-" => sign = -1,
            _ => {
                if let Ok(v) = tok.parse::<i64>() {
                    coef = Some(v);
                } else {
                    terms.push((sign * coef.take().unwrap_or(1), tok.to_string()));
                    sign = 1;
                }
            }
        }
    }
    terms
}

fn parse_lp(text: &str) -> LpModel {
    let mut model = LpModel::default();
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Rows,
        Bounds,
        Binary,
        General,
    }
    let mut section = Section::Preamble;
    // Logical rows can wrap; a buffered line is flushed when the next row
    // header (or section) starts.
    let mut pending = String::new();
    let mut flush = |model: &mut LpModel, pending: &mut String, section: &Section| {
        let line = pending.trim();
        if line.is_empty() {
            return;
        }
        match section {
            Section::Objective => {
                let expr = line.split_once(':').map(|(_, e)| e).unwrap_or(line);
                model.objective = parse_terms(expr);
            }
            Section::Rows => {
                let (name, rest) = line.split_once(':').expect("row has a name");
                let (relation, split) = if rest.contains("<=") {
                    (Relation::Le, "<=")
                } else {
                    (Relation::Eq, "=")
                };
                let (expr, rhs) = rest.rsplit_once(split).expect("row has a relation");
                model.rows.push(Row {
                    name: name.trim().to_string(),
                    terms: parse_terms(expr),
                    relation,
                    rhs: rhs.trim().parse().expect("integer rhs"),
                });
            }
            _ => {}
        }
        pending.clear();
    };
    for raw in text.lines() {
        let trimmed = raw.trim();
        if trimmed.starts_with('\\') || trimmed.is_empty() {
            continue;
        }
        let new_section = match trimmed {
            "Minimize" => Some(Section::Objective),
            "Subject To" => Some(Section::Rows),
            "Bounds" => Some(Section::Bounds),
            "Binary" => Some(Section::Binary),
            "General" => Some(Section::General),
            "End" => Some(Section::Preamble),
            _ => None,
        };
        if let Some(s) = new_section {
            flush(&mut model, &mut pending, &section);
            section = s;
            continue;
        }
        match section {
            Section::Objective => {
                pending.push(' ');
                pending.push_str(trimmed);
            }
            Section::Rows => {
                // A new row starts with "name:"; anything else continues the
                // previous row (wrapped line).
                let is_new_row = trimmed
                    .split_once(':')
                    .is_some_and(|(name, _)| !name.contains(' '));
                if is_new_row {
                    flush(&mut model, &mut pending, &section);
                }
                pending.push(' ');
                pending.push_str(trimmed);
            }
            Section::Bounds => {
                // " lo <= name <= hi"
                let parts: Vec<&str> = trimmed.split("<=").collect();
                assert_eq!(parts.len(), 3, "bound line {trimmed:?}");
                model.bounds.push((
                    parts[1].trim().to_string(),
                    parts[0].trim().parse().unwrap(),
                    parts[2].trim().parse().unwrap(),
                ));
            }
            Section::Binary => model.binaries.push(trimmed.to_string()),
            Section::General => model.generals.push(trimmed.to_string()),
            Section::Preamble => {}
        }
    }
    model
}

fn export_to_string(config: &SolverConfig, radius: usize) -> (String, mcc_pilot::solver::LpStats) {
    let lines = LineSet::new(config.k);
    let mut buf = Vec::new();
    let stats = write_lp(config, radius, &lines, &mut buf).unwrap();
    (String::from_utf8(buf).unwrap(), stats)
}

#[test]
fn variable_counts_match_emitted_file() {
    let config = SolverConfig::mcc(3, 2);
    let result = solve_mcc(&config).unwrap();
    let r3 = result.radius_bound.unwrap();
    let (text, stats) = export_to_string(&config, r3);
    let model = parse_lp(&text);

    // Count candidate links within the radius cap directly.
    let k = 3;
    let mut expected_e = 0;
    for f in 0..k {
        for t in 0..k {
            for fp in 0..k {
                for tp in 0..k {
                    if metric_cost(f, t, fp, tp, k).unwrap() <= r3 {
                        expected_e += 1;
                    }
                }
            }
        }
    }
    let lines = LineSet::new(k);
    assert_eq!(stats.x_vars, k * k);
    assert_eq!(stats.e_vars, expected_e);
    assert_eq!(stats.z_vars, lines.len());

    let x_in_file = model.binaries.iter().filter(|n| n.starts_with("x_")).count();
    let e_in_file = model.binaries.iter().filter(|n| n.starts_with("e_")).count();
    let z_in_file = model.binaries.iter().filter(|n| n.starts_with("z_")).count();
    assert_eq!(x_in_file, stats.x_vars);
    assert_eq!(e_in_file, stats.e_vars);
    assert_eq!(z_in_file, stats.z_vars);
    assert_eq!(model.rows.len(), stats.constraints);
}

#[test]
fn objective_coefficients_equal_metric_costs() {
    let config = SolverConfig::coverage_only(4);
    let result = solve_mcc(&config).unwrap();
    let r4 = result.radius_bound.unwrap();
    let (text, _) = export_to_string(&config, r4);
    let model = parse_lp(&text);
    let coeffs: HashMap<&str, i64> = model
        .objective
        .iter()
        .map(|(c, n)| (n.as_str(), *c))
        .collect();
    let k = 4;
    for f in 0..k {
        for t in 0..k {
            for fp in 0..k {
                for tp in 0..k {
                    let c = metric_cost(f, t, fp, tp, k).unwrap();
                    if c > r4 {
                        continue;
                    }
                    let name = format!("e_{f}_{t}__{fp}_{tp}");
                    // Zero-cost links carry no objective term.
                    assert_eq!(
                        coeffs.get(name.as_str()).copied().unwrap_or(0),
                        c as i64,
                        "{name}"
                    );
                }
            }
        }
    }
}

/// Builds the 0-1 assignment implied by a solved pattern and checks every
/// row of the exported model.
fn check_solution_against_lp(config: &SolverConfig, radius: usize) {
    let result = solve_mcc(config).unwrap();
    let pattern = result.pattern.expect("feasible configuration");
    let k = config.k;
    let lines = LineSet::new(k);
    let (text, _) = export_to_string(config, radius);
    let model = parse_lp(&text);

    let mut values: HashMap<String, i64> = HashMap::new();
    for f in 0..k {
        for t in 0..k {
            values.insert(format!("x_{f}_{t}"), 0);
        }
    }
    for (f, t) in pattern.pilots() {
        values.insert(format!("x_{f}_{t}"), 1);
    }
    // Nearest-pilot assignment, ties to the lexicographically smallest pilot.
    let pilots: Vec<(usize, usize)> = pattern.pilots().collect();
    for f in 0..k {
        for t in 0..k {
            let (fp, tp, cost) = pilots
                .iter()
                .map(|&(fp, tp)| (fp, tp, metric_cost(f, t, fp, tp, k).unwrap()))
                .min_by_key(|&(fp, tp, c)| (c, fp, tp))
                .unwrap();
            assert!(cost <= radius);
            values.insert(format!("e_{f}_{t}__{fp}_{tp}"), 1);
        }
    }
    if config.budget.is_some() {
        let census = collinearity_census(&pattern, &lines);
        for (l, &count) in census.per_line.iter().enumerate() {
            values.insert(
                format!("z_{l}"),
                (count as i64 - 2).max(0),
            );
        }
    }

    let eval = |terms: &[(i64, String)]| -> i64 {
        terms
            .iter()
            .map(|(c, n)| c * values.get(n).copied().unwrap_or(0))
            .sum()
    };
    for row in &model.rows {
        let lhs = eval(&row.terms);
        match row.relation {
            Relation::Eq => assert_eq!(lhs, row.rhs, "row {} violated", row.name),
            Relation::Le => assert!(lhs <= row.rhs, "row {} violated: {lhs} > {}", row.name, row.rhs),
        }
    }
    // The objective row evaluates to the coverage sum.
    assert_eq!(eval(&model.objective), coverage(&pattern).total as i64);
    assert_eq!(eval(&model.objective), result.objective.unwrap() as i64);
}

#[test]
fn solver_solution_satisfies_every_exported_row() {
    let full = SolverConfig::mcc(7, 3);
    let radius = solve_mcc(&full).unwrap().radius_bound.unwrap();
    check_solution_against_lp(&full, radius);

    let coverage_only = SolverConfig::coverage_only(5);
    let radius = solve_mcc(&coverage_only).unwrap().radius_bound.unwrap();
    check_solution_against_lp(&coverage_only, radius);
}

#[test]
fn general_section_used_when_four_collinear_allowed() {
    let config = SolverConfig {
        forbid_four_collinear: false,
        ..SolverConfig::mcc(5, 4)
    };
    let (text, stats) = export_to_string(&config, 2);
    let model = parse_lp(&text);
    assert_eq!(stats.z_vars, 30);
    assert_eq!(model.generals.len(), 30);
    assert!(model.binaries.iter().all(|n| !n.starts_with("z_")));
    // Integer activations are bounded by k - 2.
    assert_eq!(model.bounds.len(), 30);
    assert!(model.bounds.iter().all(|(n, lo, hi)| n.starts_with("z_") && *lo == 0 && *hi == 3));
}
