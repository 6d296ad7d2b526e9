//! Independent re-evaluation of a persisted run.

use bobd_core::{make_problem, RunRecord};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub problem: String,
    pub claimed_feasible: bool,
    pub claimed_f: f64,
    pub recomputed_f: f64,
    pub recomputed_violation: f64,
    pub ok: bool,
    pub issues: Vec<String>,
}

/// Re-evaluates `record.best_x` from scratch. A record flagged feasible
/// must lie in the box, have zero violation and reproduce its objective.
pub fn check_record(record: &RunRecord, tol: f64) -> bobd_core::Result<CheckReport> {
    let instance = make_problem(&record.problem, record.p, record.q)?;
    let mut issues = Vec::new();
    let (f, v) = if record.best_x.is_empty() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        if !instance.spec.contains(&record.best_x) {
            issues.push("best_x lies outside the box".to_string());
        }
        let e = instance.spec.evaluate(&record.best_x, tol)?;
        (e.f, e.violation)
    };
    if record.feasible {
        if v != 0.0 {
            issues.push(format!("flagged feasible but violation is {v:e}"));
        }
        if (f - record.best_f).abs() > 1e-9 * (1.0 + f.abs()) {
            issues.push(format!("objective {f} differs from recorded {}", record.best_f));
        }
    }
    Ok(CheckReport {
        problem: record.problem.clone(),
        claimed_feasible: record.feasible,
        claimed_f: record.best_f,
        recomputed_f: f,
        recomputed_violation: v,
        ok: issues.is_empty(),
        issues,
    })
}
