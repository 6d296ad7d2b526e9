//! Single-level baselines: the GA over the full vector, and a classical
//! multistart over the full vector.

use std::time::{Duration, Instant};

use bobd_core::ga::{run_ga, GAConfig, GenerationRecord};
use bobd_core::lower::nlp::{self, AlSettings, AlStatus, Subproblem};
use bobd_core::{Method, ProblemInstance, Result, RunRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GA_POP: usize = 500;
pub const CLASSICAL_STARTS: usize = 10;

fn record(instance: &ProblemInstance, method: Method, seed: u64) -> RunRecord {
    RunRecord {
        problem: instance.id().to_string(),
        p: instance.spec.scalable_p(),
        q: instance.spec.scalable_q(),
        method,
        seed,
        best_x: vec![],
        best_f: f64::INFINITY,
        best_violation: f64::INFINITY,
        feasible: false,
        upper_evals: 0,
        lower_solves: 0,
        total_function_evals: 0,
        wall_time: 0.0,
        history: vec![],
    }
}

/// GA over all variables with no decomposition, stopped by `time_budget`.
pub fn solve_single_ga(instance: &ProblemInstance, seed: u64, time_budget: Duration, tol: f64) -> Result<RunRecord> {
    let start = Instant::now();
    let spec = &instance.spec;
    let config = GAConfig {
        pop_size: GA_POP,
        seed,
        time_budget: Some(time_budget),
        ..GAConfig::default()
    };
    let mut oracle = bobd_core::ga::pointwise(|x: &[f64]| spec.evaluate(x, tol).ok().map(|r| (r.f, r.violation)));
    let result = run_ga(&mut oracle, spec.lower_bounds(), spec.upper_bounds(), &config)?;
    let feasible = result.best.is_feasible() && result.best.fitness.is_finite();
    Ok(RunRecord {
        best_x: result.best.genome.clone(),
        best_f: if feasible { result.best.fitness } else { f64::INFINITY },
        best_violation: result.best.violation,
        feasible,
        upper_evals: result.evaluations,
        total_function_evals: result.evaluations,
        wall_time: start.elapsed().as_secs_f64(),
        history: result.history,
        ..record(instance, Method::Ga, seed)
    })
}

/// Augmented-Lagrangian multistart over the full vector. The best start is
/// the converged feasible one with the lowest objective; failing that, the
/// lowest violation.
pub fn solve_classical(instance: &ProblemInstance, seed: u64, starts: usize, tol: f64) -> Result<RunRecord> {
    if starts == 0 {
        return Err(bobd_core::Error::Contract("at least one start is required".into()));
    }
    let begin = Instant::now();
    let spec = &instance.spec;
    let settings = AlSettings::with_tol(tol);
    let all: Vec<usize> = (0..spec.dim()).collect();
    let sub = Subproblem::new(spec, spec.lower_bounds().to_vec(), all, settings.eq_band);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let rank = |o: &nlp::AlOutcome| {
        let ok = o.status == AlStatus::Converged && o.violation == 0.0 && o.f.is_finite();
        (!ok, if ok { o.f } else { o.violation })
    };
    let mut best: Option<nlp::AlOutcome> = None;
    let mut history = Vec::with_capacity(starts);
    for k in 0..starts {
        let x0: Vec<f64> = spec
            .lower_bounds()
            .iter()
            .zip(spec.upper_bounds())
            .map(|(&l, &h)| if l < h { rng.gen_range(l..=h) } else { l })
            .collect();
        let out = nlp::solve(&sub, &x0, &settings);
        let (a, b) = (rank(&out), best.as_ref().map(rank));
        if b.is_none_or(|b| !a.0 & b.0 || (a.0 == b.0 && a.1 < b.1)) {
            best = Some(out);
        }
        let cur = best.as_ref().expect("set above");
        let ok = !rank(cur).0;
        history.push(GenerationRecord {
            generation: k,
            best_f: if ok { cur.f } else { f64::INFINITY },
            best_violation: cur.violation,
            evals: sub.evals(),
        });
    }

    let best = best.expect("starts >= 1");
    let feasible = !rank(&best).0;
    Ok(RunRecord {
        best_f: if feasible { best.f } else { f64::INFINITY },
        best_violation: best.violation,
        best_x: sub.merged(&best.x),
        feasible,
        total_function_evals: sub.evals(),
        wall_time: begin.elapsed().as_secs_f64(),
        history,
        ..record(instance, Method::Classical, seed)
    })
}
