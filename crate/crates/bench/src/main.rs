use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use bobd_bench::suite::record_path;
use bobd_bench::{check_record, render_report, run_suite, Case, Format, Suite, SuiteConfig};
use bobd_core::{make_problem, solve_bobd, BOBDConfig, Method, RunRecord, DEFAULT_TOL};
use clap::{Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

/// Bilevel decomposition of constrained problems: solve, benchmark, audit.
#[derive(Parser)]
#[command(name = "bobd", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem.
    Solve {
        #[arg(long)]
        problem: String,
        /// Total scalable dimension |y| + |z|.
        #[arg(long, default_value_t = 0)]
        split: usize,
        #[arg(long, default_value = "bobd", value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Wall-clock budget in seconds for `--method ga`; by default the
        /// budget is the time of a BOBD run with the same seed.
        #[arg(long)]
        budget: Option<f64>,
        /// Starts for `--method classical`.
        #[arg(long, default_value_t = bobd_bench::baselines::CLASSICAL_STARTS)]
        starts: usize,
        /// Directory for the run record; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a table suite (seeds 1..=runs) and write records plus a report.
    Bench {
        #[arg(long, default_value = "t0", value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 11)]
        runs: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Restrict to these methods (comma separated).
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        methods: Vec<Method>,
        /// Restrict to these problems (comma separated).
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Print the problem catalog.
    List,
    /// Re-evaluate a run record and verify its feasibility and objective.
    Check {
        #[arg(long)]
        record: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Solve {
            problem,
            split,
            method,
            seed,
            tol,
            budget,
            starts,
            out,
        } => {
            let case = Case::split(&problem, split)?;
            let instance = make_problem(&case.id, case.p, case.q)?;
            let bobd = BOBDConfig {
                tol,
                ..BOBDConfig::default()
            };
            let record = match method {
                Method::Bobd => solve_bobd(&instance, &bobd, seed)?,
                Method::Ga => {
                    let budget = match budget {
                        Some(s) => Duration::try_from_secs_f64(s).context("--budget must be a non-negative number")?,
                        None => Duration::from_secs_f64(solve_bobd(&instance, &bobd, seed)?.wall_time),
                    };
                    bobd_bench::solve_single_ga(&instance, seed, budget, tol)?
                }
                Method::Classical => bobd_bench::solve_classical(&instance, seed, starts, tol)?,
            };
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let path = record_path(&dir, &record.problem, method, seed);
                    std::fs::write(&path, record.to_json())?;
                    println!(
                        "{} {} seed {}: f = {}, violation = {}, feasible = {} -> {}",
                        record.problem,
                        method,
                        seed,
                        record.best_f,
                        record.best_violation,
                        record.feasible,
                        path.display()
                    );
                }
                None => println!("{}", record.to_json()),
            }
            Ok(if record.feasible { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Bench {
            suite,
            runs,
            out,
            format,
            methods,
            problems,
            tol,
        } => {
            for (tag, split) in suite.tables() {
                let mut cases = Suite::cases(split);
                if !problems.is_empty() {
                    cases.retain(|c| problems.iter().any(|p| p.eq_ignore_ascii_case(&c.id)));
                }
                if cases.is_empty() {
                    continue;
                }
                let dir = if suite == Suite::All { out.join(tag) } else { out.clone() };
                let mut config = SuiteConfig::new(tag, cases, dir);
                config.runs = runs;
                config.format = format;
                config.tol = tol;
                config.bobd.tol = tol;
                if !methods.is_empty() {
                    config.methods = methods.clone();
                }
                let (report, _) = run_suite(&config)?;
                println!("{}", render_report(&report, format));
            }
            Ok(0)
        }
        Command::List => {
            println!("{:<6} {:>8} {:>4} {:>4}  references", "id", "base_dim", "y", "z");
            for e in bobd_core::list_problems() {
                let refs: Vec<String> = e.references.iter().map(|r| format!("{} ({:?})", r.value, r.source)).collect();
                println!(
                    "{:<6} {:>8} {:>4} {:>4}  {}",
                    e.id,
                    e.base_dim,
                    if e.scalable.y { "yes" } else { "-" },
                    if e.scalable.z { "yes" } else { "-" },
                    refs.join(", ")
                );
            }
            Ok(0)
        }
        Command::Check { record, tol } => {
            let text = std::fs::read_to_string(&record).with_context(|| format!("reading {}", record.display()))?;
            let run = RunRecord::from_json(&text).with_context(|| format!("parsing {}", record.display()))?;
            let report = check_record(&run, tol)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.ok { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}
