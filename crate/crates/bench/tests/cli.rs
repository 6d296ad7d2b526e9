use std::process::Command;

fn bobd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bobd"))
}

#[test]
fn list_prints_every_problem() {
    let out = bobd().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in bobd_core::testbed::PROBLEM_IDS {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(id)), "{id} missing");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [&["bench", "--format", "xml"][..], &["solve"], &["solve", "--problem", "TP1", "--method", "sqp"], &["frobnicate"]] {
        let status = bobd().args(args).output().unwrap().status;
        assert_eq!(status.code(), Some(1), "{args:?}");
    }
    let status = bobd().args(["solve", "--problem", "TP99"]).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn solve_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = bobd()
        .args(["solve", "--problem", "TP3", "--seed", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let record = dir.path().join("TP3_bobd_2.json");
    assert!(record.exists());
    let out = bobd().arg("check").arg("--record").arg(&record).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // A tampered objective must be caught.
    let mut run = bobd_core::RunRecord::from_json(&std::fs::read_to_string(&record).unwrap()).unwrap();
    run.best_f -= 1.0;
    std::fs::write(&record, run.to_json()).unwrap();
    let out = bobd().arg("check").arg("--record").arg(&record).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn infeasible_solve_exits_with_two() {
    // With no time at all the GA keeps its random initial population, which
    // cannot satisfy TP2's five equalities.
    let out = bobd()
        .args(["solve", "--problem", "TP2", "--method", "ga", "--budget", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let run = bobd_core::RunRecord::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(!run.feasible);
    assert!(run.best_f.is_infinite());
}
