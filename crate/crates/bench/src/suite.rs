//! Seeded experiment driver: runs every (problem, method, seed) cell,
//! persists one JSON record per run and aggregates a report.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context};
use bobd_core::testbed::{catalog_entry, Reference};
use bobd_core::{make_problem, solve_bobd, BOBDConfig, Method, RunRecord, DEFAULT_TOL};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_classical, solve_single_ga, CLASSICAL_STARTS};
use crate::report::{render_report, Format};

/// One problem instance of a suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
}

impl Case {
    pub fn split(id: &str, split: usize) -> anyhow::Result<Self> {
        let entry = catalog_entry(id)?;
        let (p, q) = entry.scalable.allocate(split);
        if split > 0 && p + q == 0 {
            bail!("{id} has no scalable block");
        }
        Ok(Self {
            id: entry.id.to_string(),
            p,
            q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    T0,
    T20,
    T50,
    All,
}

impl Suite {
    /// `(tag, split)` of each table the suite covers.
    pub fn tables(self) -> Vec<(&'static str, usize)> {
        match self {
            Suite::T0 => vec![("t0", 0)],
            Suite::T20 => vec![("t20", 20)],
            Suite::T50 => vec![("t50", 50)],
            Suite::All => vec![("t0", 0), ("t20", 20), ("t50", 50)],
        }
    }

    /// Every catalog problem without scaling; the scalable ones otherwise.
    pub fn cases(split: usize) -> Vec<Case> {
        bobd_core::list_problems()
            .into_iter()
            .filter(|e| split == 0 || e.scalable.y || e.scalable.z)
            .map(|e| Case::split(e.id, split).expect("catalog problems scale"))
            .collect()
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "t0" => Ok(Suite::T0),
            "t20" => Ok(Suite::T20),
            "t50" => Ok(Suite::T50),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}` (expected t0, t20, t50 or all)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub name: String,
    pub problems: Vec<Case>,
    pub methods: Vec<Method>,
    /// Seeds are `1..=runs`.
    pub runs: usize,
    pub out_dir: PathBuf,
    pub format: Format,
    pub tol: f64,
    pub bobd: BOBDConfig,
    pub classical_starts: usize,
    /// GA budget when no BOBD run of the same cell exists.
    pub ga_fallback_budget: Duration,
}

impl SuiteConfig {
    pub fn new(name: &str, problems: Vec<Case>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            name: name.to_string(),
            problems,
            methods: Method::ALL.to_vec(),
            runs: 11,
            out_dir: out_dir.into(),
            format: Format::Markdown,
            tol: DEFAULT_TOL,
            bobd: BOBDConfig::default(),
            classical_starts: CLASSICAL_STARTS,
            ga_fallback_budget: Duration::from_secs(10),
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        1..=self.runs as u64
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.runs == 0 || self.methods.is_empty() || self.problems.is_empty() {
            bail!("a suite needs at least one problem, method and run");
        }
        for (i, c) in self.problems.iter().enumerate() {
            make_problem(&c.id, c.p, c.q).with_context(|| format!("suite case {c:?}"))?;
            if self.problems[..i].iter().any(|d| d.id == c.id) {
                bail!("{} appears twice; record file names would collide", c.id);
            }
        }
        Ok(())
    }
}

pub fn record_path(dir: &Path, problem: &str, method: Method, seed: u64) -> PathBuf {
    dir.join(format!("{problem}_{method}_{seed}.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub method: Method,
    pub runs: usize,
    pub feasible_runs: usize,
    pub best_f: Option<f64>,
    /// Lower median of the feasible objectives.
    pub median_f: Option<f64>,
    pub worst_f: Option<f64>,
    pub mean_wall_time: f64,
    /// Catalog reference values, only for unscaled instances.
    pub references: Vec<Reference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub suite: String,
    pub seeds: Vec<u64>,
    pub tol: f64,
    pub rows: Vec<ReportRow>,
    /// Cells whose run failed outright, as `problem/method/seed: error`.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

pub fn standard_notes(runs: usize, tol: f64) -> Vec<String> {
    vec![
        format!("Seeds 1..={runs}; best, median (lower) and worst over feasible runs; IFL = no feasible run."),
        format!("Constraint tolerance {tol:e}."),
        "classical: augmented-Lagrangian multistart over the full vector, a substitute for the SQP/IP baselines."
            .into(),
        "ga: single-level GA, population 500, wall-clock budget equal to the BOBD run of the same seed.".into(),
    ]
}

/// Groups records by (problem, P, Q, method) in first-seen order.
pub fn aggregate(suite: &str, records: &[RunRecord], runs: usize, tol: f64) -> BenchmarkReport {
    let mut order: Vec<(String, usize, usize, Method)> = Vec::new();
    let mut groups: HashMap<(String, usize, usize, Method), Vec<&RunRecord>> = HashMap::new();
    for r in records {
        let key = (r.problem.clone(), r.p, r.q, r.method);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    let rows = order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let mut feas: Vec<f64> = group.iter().filter(|r| r.feasible).map(|r| r.best_f).collect();
            feas.sort_by(f64::total_cmp);
            let references = if key.1 == 0 && key.2 == 0 {
                catalog_entry(&key.0).map(|e| e.references).unwrap_or_default()
            } else {
                vec![]
            };
            ReportRow {
                problem: key.0,
                p: key.1,
                q: key.2,
                method: key.3,
                runs: group.len(),
                feasible_runs: feas.len(),
                best_f: feas.first().copied(),
                median_f: (!feas.is_empty()).then(|| feas[(feas.len() - 1) / 2]),
                worst_f: feas.last().copied(),
                mean_wall_time: group.iter().map(|r| r.wall_time).sum::<f64>() / group.len() as f64,
                references,
            }
        })
        .collect();
    BenchmarkReport {
        suite: suite.to_string(),
        seeds: (1..=runs as u64).collect(),
        tol,
        rows,
        failures: vec![],
        notes: standard_notes(runs, tol),
    }
}

fn failed_record(case: &Case, method: Method, seed: u64) -> RunRecord {
    RunRecord {
        problem: case.id.clone(),
        p: case.p,
        q: case.q,
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

/// Runs the suite, writing `<out>/<problem>_<method>_<seed>.json` for
/// every cell and `<out>/report.<ext>`.
pub fn run_suite(config: &SuiteConfig) -> anyhow::Result<(BenchmarkReport, Vec<RunRecord>)> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).with_context(|| format!("creating {}", config.out_dir.display()))?;
    let mut records = Vec::new();
    let mut failures = Vec::new();

    // BOBD first within each problem so GA cells can inherit its wall time.
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();

    for case in &config.problems {
        let instance = make_problem(&case.id, case.p, case.q)?;
        let mut bobd_time: HashMap<u64, f64> = HashMap::new();
        for &method in &methods {
            for seed in config.seeds() {
                let outcome = match method {
                    Method::Bobd => solve_bobd(&instance, &config.bobd, seed),
                    Method::Ga => {
                        let budget = bobd_time
                            .get(&seed)
                            .map(|&s| Duration::from_secs_f64(s))
                            .unwrap_or(config.ga_fallback_budget);
                        solve_single_ga(&instance, seed, budget, config.tol)
                    }
                    Method::Classical => solve_classical(&instance, seed, config.classical_starts, config.tol),
                };
                let record = match outcome {
                    Ok(r) => r,
                    Err(e) => {
                        warn!("{} {method} seed {seed} failed: {e}", case.id);
                        failures.push(format!("{}/{method}/{seed}: {e}", case.id));
                        failed_record(case, method, seed)
                    }
                };
                if method == Method::Bobd {
                    bobd_time.insert(seed, record.wall_time);
                }
                info!(
                    "{} P={} Q={} {method} seed {seed}: f = {} ({:.2}s)",
                    case.id, case.p, case.q, record.best_f, record.wall_time
                );
                let path = record_path(&config.out_dir, &case.id, method, seed);
                fs::write(&path, record.to_json()).with_context(|| format!("writing {}", path.display()))?;
                records.push(record);
            }
        }
    }

    let mut report = aggregate(&config.name, &records, config.runs, config.tol);
    report.failures = failures;
    let path = config.out_dir.join(format!("report.{}", config.format.extension()));
    fs::write(&path, render_report(&report, config.format)).with_context(|| format!("writing {}", path.display()))?;
    Ok((report, records))
}

/// Loads every run record in `dir`.
pub fn load_records(dir: &Path) -> anyhow::Result<Vec<RunRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && !p.file_stem().is_some_and(|s| s == "report")
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            RunRecord::from_json(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}
