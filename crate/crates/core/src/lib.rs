//! Bilevel decomposition of constrained single-level problems.
//!
//! The variables of a problem are split into an upper level, searched by a
//! real-coded genetic algorithm, and a lower level, completed for each upper
//! candidate by a classical solver (bounded simplex when the lower level is
//! affine, augmented Lagrangian otherwise). Both levels minimize the same
//! objective, so the bilevel optimum is the single-level optimum.

pub mod engine;
pub mod error;
pub mod ga;
pub mod lower;
pub mod problem;
pub mod record;
pub mod testbed;

pub use error::{DomainFault, Error, Result, Site};
pub use problem::{violation, EvaluationResult, ProblemSpec, VariablePartition, DEFAULT_TOL};
pub use testbed::{list_problems, make_problem, make_problem_split, ProblemInstance};
pub use engine::{bilevel_fitness, solve_bobd, BOBDConfig, LowerCache};
pub use ga::{run_ga, GAConfig, GAResult, Individual};
pub use lower::{solve_lower, LowerConfig, LowerResult, LowerStatus};
pub use record::{Method, RunRecord};
