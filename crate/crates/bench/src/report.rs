//! Table rendering: problems as rows, methods as columns.

use std::fmt::Write as _;

use bobd_core::testbed::{Reference, ReferenceSource};
use bobd_core::Method;

use crate::suite::{BenchmarkReport, ReportRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

struct Line<'a> {
    problem: &'a str,
    p: usize,
    q: usize,
    references: &'a [Reference],
    cells: Vec<Option<&'a ReportRow>>,
}

fn layout(report: &BenchmarkReport) -> (Vec<Method>, Vec<Line<'_>>) {
    let mut methods: Vec<Method> = report.rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let mut lines: Vec<Line> = Vec::new();
    for row in &report.rows {
        let at = lines
            .iter()
            .position(|l| l.problem == row.problem && l.p == row.p && l.q == row.q);
        let i = at.unwrap_or_else(|| {
            lines.push(Line {
                problem: &row.problem,
                p: row.p,
                q: row.q,
                references: &row.references,
                cells: vec![None; methods.len()],
            });
            lines.len() - 1
        });
        let m = methods.iter().position(|&m| m == row.method).expect("collected above");
        lines[i].cells[m] = Some(row);
    }
    (methods, lines)
}

fn reference_text(refs: &[Reference]) -> String {
    if refs.is_empty() {
        return "-".into();
    }
    refs.iter()
        .map(|r| match r.source {
            ReferenceSource::BestKnown => format!("{} (best known)", r.value),
            ReferenceSource::ReportedDecomposition => format!("{} (reported)", r.value),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn markdown_cell(row: Option<&ReportRow>) -> String {
    match row {
        None => "".into(),
        Some(r) => match (r.best_f, r.median_f, r.worst_f) {
            (Some(b), Some(m), Some(w)) => {
                format!("{b:.4} / {m:.4} / {w:.4} [{}/{}]", r.feasible_runs, r.runs)
            }
            _ => format!("IFL [0/{}]", r.runs),
        },
    }
}

fn csv_value(v: Option<f64>) -> String {
    v.map_or_else(|| "IFL".into(), |v| v.to_string())
}

fn reference_value(refs: &[Reference], source: ReferenceSource) -> String {
    refs.iter()
        .find(|r| r.source == source)
        .map_or_else(String::new, |r| r.value.to_string())
}

pub fn render_report(report: &BenchmarkReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("reports always serialize"),
        Format::Markdown => markdown(report),
        Format::Csv => csv(report),
    }
}

fn markdown(report: &BenchmarkReport) -> String {
    let (methods, lines) = layout(report);
    let show_refs = lines.iter().any(|l| l.p == 0 && l.q == 0);
    let mut out = format!("# Suite {}\n\n", report.suite);
    let mut header = vec!["problem".to_string(), "P".into(), "Q".into()];
    if show_refs {
        header.push("reference".into());
    }
    header.extend(methods.iter().map(|m| m.tag().to_string()));
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for l in &lines {
        let mut cells = vec![l.problem.to_string(), l.p.to_string(), l.q.to_string()];
        if show_refs {
            cells.push(reference_text(l.references));
        }
        cells.extend(l.cells.iter().map(|c| markdown_cell(*c)));
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out.push_str("\nCells: best / median / worst [feasible runs / runs].\n");
    for note in &report.notes {
        let _ = writeln!(out, "{note}");
    }
    for f in &report.failures {
        let _ = writeln!(out, "Failed run: {f}");
    }
    out
}

fn csv(report: &BenchmarkReport) -> String {
    let (methods, lines) = layout(report);
    let mut header = vec![
        "problem".to_string(),
        "P".into(),
        "Q".into(),
        "best_known".into(),
        "reported".into(),
    ];
    for m in &methods {
        for field in ["best", "median", "worst", "feasible_runs", "runs", "mean_wall_time"] {
            header.push(format!("{m}_{field}"));
        }
    }
    let mut out = header.join(",") + "\n";
    for l in &lines {
        let mut cells = vec![
            l.problem.to_string(),
            l.p.to_string(),
            l.q.to_string(),
            reference_value(l.references, ReferenceSource::BestKnown),
            reference_value(l.references, ReferenceSource::ReportedDecomposition),
        ];
        for c in &l.cells {
            match c {
                Some(r) => cells.extend([
                    csv_value(r.best_f),
                    csv_value(r.median_f),
                    csv_value(r.worst_f),
                    r.feasible_runs.to_string(),
                    r.runs.to_string(),
                    r.mean_wall_time.to_string(),
                ]),
                None => cells.extend(std::iter::repeat_n(String::new(), 6)),
            }
        }
        out += &(cells.join(",") + "\n");
    }
    for note in &report.notes {
        let _ = writeln!(out, "# {note}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(rows: Vec<ReportRow>) -> BenchmarkReport {
        BenchmarkReport {
            suite: "t0".into(),
            seeds: (1..=11).collect(),
            tol: 1e-2,
            rows,
            failures: vec![],
            notes: crate::suite::standard_notes(11, 1e-2),
        }
    }

    fn row(method: Method, best: Option<f64>) -> ReportRow {
        ReportRow {
            problem: "TP1".into(),
            p: 0,
            q: 0,
            method,
            runs: 11,
            feasible_runs: if best.is_some() { 11 } else { 0 },
            best_f: best,
            median_f: best,
            worst_f: best,
            mean_wall_time: 1.25,
            references: bobd_core::testbed::catalog_entry("TP1").unwrap().references,
        }
    }

    #[test]
    fn minimal_markdown_table() {
        let md = render_report(&report(vec![row(Method::Bobd, Some(-13.417))]), Format::Markdown);
        let table: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
        assert_eq!(table.len(), 3);
        assert_eq!(table[0], "| problem | P | Q | reference | bobd |");
        assert!(table[2].contains("-13.4170 / -13.4170 / -13.4170 [11/11]"));
        assert!(md.contains("substitute"));
    }

    #[test]
    fn infeasible_cell_prints_ifl() {
        let r = report(vec![row(Method::Bobd, Some(-13.4)), row(Method::Ga, None)]);
        assert!(render_report(&r, Format::Markdown).contains("IFL [0/11]"));
        let csv = render_report(&r, Format::Csv);
        assert!(csv.lines().nth(1).unwrap().contains("IFL,IFL,IFL,0,11"));
    }

    #[test]
    fn json_round_trip() {
        let r = report(vec![row(Method::Bobd, Some(-13.417_000_000_01)), row(Method::Classical, None)]);
        let back: BenchmarkReport = serde_json::from_str(&render_report(&r, Format::Json)).unwrap();
        assert_eq!(back, r);
    }
}
