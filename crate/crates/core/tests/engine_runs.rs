use bobd_core::engine::score;
use bobd_core::ga::GAConfig;
use bobd_core::lower::{solve_lower, LowerConfig};
use bobd_core::{make_problem, make_problem_split, solve_bobd, BOBDConfig, RunRecord, DEFAULT_TOL};

fn short(pop: usize) -> BOBDConfig {
    BOBDConfig {
        ga: GAConfig {
            stall_generations: 10,
            max_generations: Some(40),
            ..GAConfig::default()
        },
        pop_size: Some(pop),
        ..BOBDConfig::default()
    }
}

fn assert_consistent(inst: &bobd_core::ProblemInstance, r: &RunRecord) {
    assert!(r.lower_solves <= r.upper_evals);
    assert_eq!(r.best_x.len(), inst.spec.dim());
    assert!(inst.spec.contains(&r.best_x));
    let e = inst.spec.evaluate(&r.best_x, DEFAULT_TOL).unwrap();
    assert_eq!(r.feasible, e.violation == 0.0, "feasible flag disagrees with re-evaluation");
    if r.feasible {
        assert_eq!(e.f, r.best_f);
    }
    for w in r.history.windows(2) {
        if w[0].best_violation == 0.0 {
            assert!(w[1].best_f <= w[0].best_f);
        }
        assert!(w[1].evals > w[0].evals);
    }
}

#[test]
fn tp1_short_run_is_feasible_and_consistent() {
    let tp1 = make_problem("TP1", 0, 0).unwrap();
    let r = solve_bobd(&tp1, &short(30), 4).unwrap();
    assert!(r.feasible);
    assert!(r.best_f < -12.0, "best {}", r.best_f);
    assert_consistent(&tp1, &r);
    let json = r.to_json();
    assert_eq!(RunRecord::from_json(&json).unwrap(), r);
}

#[test]
fn nonlinear_and_scaled_runs_are_consistent_and_deterministic() {
    for (id, split) in [("TP6", 4), ("TP7", 0), ("TP9", 2)] {
        let inst = make_problem_split(id, split).unwrap();
        let a = solve_bobd(&inst, &short(12), 2).unwrap();
        let b = solve_bobd(&inst, &short(12), 2).unwrap();
        assert!(a.same_outcome(&b), "{id} not deterministic");
        assert_consistent(&inst, &a);
    }
}

#[test]
fn strictly_infeasible_lower_level_is_never_scored_feasible() {
    // TP10 with x1 = 78, x3 = 29.97, x5 = 36.76 leaves the last constraint
    // positive but under the tolerance whatever x2, x4 are.
    let tp10 = make_problem("TP10", 0, 0).unwrap();
    let r = solve_lower(&tp10, &[78.0, 29.97, 36.76], None, &LowerConfig::default()).unwrap();
    let (f, v) = score(&r);
    assert!(f.is_infinite() && v > 0.0, "scored ({f}, {v})");
}
