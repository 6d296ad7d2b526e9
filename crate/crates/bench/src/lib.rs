//! Baselines, the seeded experiment driver and report rendering for the
//! bilevel decomposition in `bobd-core`.

pub mod baselines;
pub mod check;
pub mod report;
pub mod suite;

pub use baselines::{solve_classical, solve_single_ga};
pub use check::{check_record, CheckReport};
pub use report::{render_report, Format};
pub use suite::{aggregate, load_records, run_suite, BenchmarkReport, Case, Suite, SuiteConfig};
