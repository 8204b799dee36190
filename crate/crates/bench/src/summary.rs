//! Iterations-to-ε tables grouped by problem, method and bundle size.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::experiment::TraceMeta;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub method: String,
    pub m: usize,
    pub runs: usize,
    /// Runs that did not reach ε; they count with their full budget.
    pub unconverged: usize,
    /// Mean iterations to ε.
    pub iterations: f64,
    pub gradient_calls: usize,
    pub prox_calls: usize,
    pub objective_calls: usize,
}

pub fn summarize<'a>(metas: impl IntoIterator<Item = &'a TraceMeta>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, usize), Vec<&TraceMeta>> = BTreeMap::new();
    for m in metas {
        groups.entry((m.problem.clone(), m.method.clone(), m.m)).or_default().push(m);
    }
    groups
        .into_iter()
        .map(|((problem, method, m), runs)| {
            let n = runs.len();
            let iters: usize = runs.iter().map(|r| r.iterations_to_epsilon.unwrap_or(r.iterations)).sum();
            SummaryRow {
                problem,
                method,
                m,
                runs: n,
                unconverged: runs.iter().filter(|r| !r.converged).count(),
                iterations: iters as f64 / n as f64,
                gradient_calls: runs.iter().map(|r| r.gradient_calls).sum(),
                prox_calls: runs.iter().map(|r| r.prox_calls).sum(),
                objective_calls: runs.iter().map(|r| r.objective_calls).sum(),
            }
        })
        .collect()
}

fn iterations_cell(r: &SummaryRow) -> String {
    let marker = if r.unconverged > 0 { "*" } else { "" };
    if r.runs == 1 {
        format!("{}{marker}", r.iterations as usize)
    } else {
        format!("{:.1}{marker}", r.iterations)
    }
}

/// Aligned text table; `*` marks groups with runs that hit the budget.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let header = ["problem", "method", "m", "runs", "iterations", "grad", "prox", "F evals"];
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.problem.clone(),
                r.method.clone(),
                r.m.to_string(),
                r.runs.to_string(),
                iterations_cell(r),
                r.gradient_calls.to_string(),
                r.prox_calls.to_string(),
                r.objective_calls.to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, items: Vec<&str>| {
        let parts: Vec<String> = items
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", parts.join("  ").trim_end()).expect("writing to a String cannot fail");
    };
    line(&mut out, header.to_vec());
    for row in &cells {
        line(&mut out, row.iter().map(String::as_str).collect());
    }
    if rows.iter().any(|r| r.unconverged > 0) {
        out.push_str("* budget exhausted before reaching epsilon in at least one run\n");
    }
    out
}

pub fn render_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("problem,method,m,runs,unconverged,iterations,gradient_calls,prox_calls,objective_calls\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.problem, r.method, r.m, r.runs, r.unconverged, r.iterations, r.gradient_calls, r.prox_calls, r.objective_calls
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(method: &str, m: usize, seed: u64, iters: Option<usize>) -> TraceMeta {
        TraceMeta {
            problem: "LASSO".into(),
            rows: 10,
            cols: 10,
            seed,
            method: method.into(),
            m,
            replacement: "crs".into(),
            restart: "soft".into(),
            decrease_factor: 0.1,
            s: 4.0,
            epsilon: 1e-9,
            reference_objective: 0.0,
            initial_objective: 1.0,
            converged: iters.is_some(),
            iterations_to_epsilon: iters,
            iterations: iters.unwrap_or(500),
            gradient_calls: 3,
            prox_calls: 2,
            objective_calls: 1,
            wall_seconds: 0.0,
        }
    }

    #[test]
    fn single_trace_single_row() {
        let rows = summarize([&meta("GM", 1, 0, Some(42))]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].iterations, 42.0);
        let table = render_table(&rows);
        assert_eq!(table.lines().count(), 2);
        assert!(table.lines().nth(1).unwrap().contains("42"));
    }

    #[test]
    fn unconverged_marked_with_budget() {
        let rows = summarize([&meta("GMM", 16, 0, None)]);
        assert_eq!(rows[0].iterations, 500.0);
        assert_eq!(rows[0].unconverged, 1);
        assert!(render_table(&rows).contains("500*"));
    }

    #[test]
    fn groups_by_method_and_size() {
        let metas: Vec<TraceMeta> = ["GMM", "AGMM"]
            .iter()
            .flat_map(|m| [1, 16].map(|size| meta(m, size, 0, Some(10))))
            .chain([meta("GMM", 16, 1, Some(30))])
            .collect();
        let rows = summarize(&metas);
        assert_eq!(rows.len(), 4);
        let g = rows.iter().find(|r| r.method == "GMM" && r.m == 16).unwrap();
        assert_eq!((g.runs, g.iterations, g.gradient_calls), (2, 20.0, 6));
        assert_eq!(render_csv(&rows).lines().count(), 5);
    }
}
