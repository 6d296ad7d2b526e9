//! The nested decomposition: the GA searches the upper variables and every
//! candidate is completed by a lower-level solve before it is scored.

use std::collections::HashMap;
use std::time::Instant;

use log::info;
use rayon::prelude::*;

use crate::error::Result;
use crate::ga::{run_ga, FitnessOracle, GAConfig};
use crate::lower::{solve_lower, LowerConfig, LowerResult, LowerStatus};
use crate::problem::{Level, DEFAULT_TOL};
use crate::record::{Method, RunRecord};
use crate::testbed::ProblemInstance;

/// Upper-level population per upper variable.
pub const POP_PER_UPPER_VAR: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct BOBDConfig {
    /// GA settings; `pop_size` and `seed` are overridden per run.
    pub ga: GAConfig,
    /// Population override; default is 25 per upper variable.
    pub pop_size: Option<usize>,
    pub tol: f64,
    pub cache_quantum: f64,
    pub warm_start: bool,
    pub multistarts: usize,
    /// Solve the lower levels of one generation on the rayon pool.
    pub parallel: bool,
}

impl Default for BOBDConfig {
    fn default() -> Self {
        Self {
            ga: GAConfig::default(),
            pop_size: None,
            tol: DEFAULT_TOL,
            cache_quantum: 1e-6,
            warm_start: true,
            multistarts: 5,
            parallel: true,
        }
    }
}

impl BOBDConfig {
    pub fn ga_for(&self, instance: &ProblemInstance, seed: u64) -> GAConfig {
        let n_upper = instance.partition.upper().len();
        GAConfig {
            pop_size: self.pop_size.unwrap_or(POP_PER_UPPER_VAR * n_upper).max(4),
            seed,
            ..self.ga.clone()
        }
    }

    pub fn lower_config(&self, seed: u64) -> LowerConfig {
        LowerConfig {
            multistarts: self.multistarts,
            seed,
            ..LowerConfig::with_tol(self.tol)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.cache_quantum > 0.0) {
            return Err(crate::Error::Contract("tol and cache_quantum must be positive".into()));
        }
        Ok(())
    }
}

/// Lower solutions keyed by the quantized upper vector.
#[derive(Debug, Clone)]
pub struct LowerCache {
    quantum: f64,
    index: HashMap<Vec<i64>, usize>,
    entries: Vec<(Vec<f64>, LowerResult)>,
    hits: u64,
}

impl LowerCache {
    pub fn new(quantum: f64) -> Self {
        Self {
            quantum,
            index: HashMap::new(),
            entries: Vec::new(),
            hits: 0,
        }
    }

    pub fn key(&self, x_upper: &[f64]) -> Vec<i64> {
        x_upper.iter().map(|v| (v / self.quantum).round() as i64).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    /// Exact match on the quantized key, returning the upper vector that
    /// was actually solved alongside its result.
    pub fn lookup(&mut self, x_upper: &[f64]) -> Option<(&[f64], &LowerResult)> {
        let i = *self.index.get(&self.key(x_upper))?;
        self.hits += 1;
        let (x, r) = &self.entries[i];
        Some((x, r))
    }

    fn peek(&self, x_upper: &[f64]) -> Option<usize> {
        self.index.get(&self.key(x_upper)).copied()
    }

    /// Keeps the first result stored under a key.
    pub fn insert(&mut self, x_upper: &[f64], result: LowerResult) {
        let key = self.key(x_upper);
        if !self.index.contains_key(&key) {
            self.index.insert(key, self.entries.len());
            self.entries.push((x_upper.to_vec(), result));
        }
    }

    /// Lower solution of the Euclidean-closest cached upper vector; the
    /// earliest entry wins ties.
    pub fn nearest(&self, x_upper: &[f64]) -> Option<&[f64]> {
        let dist = |x: &[f64]| x.iter().zip(x_upper).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        self.entries
            .iter()
            .fold(None::<(f64, &LowerResult)>, |best, (x, r)| {
                let d = dist(x);
                match best {
                    Some((bd, _)) if bd <= d => best,
                    _ => Some((d, r)),
                }
            })
            .map(|(_, r)| r.x_lower.as_slice())
    }
}

/// Score of a completed candidate. An optimal completion is scored by its
/// objective and the violation at the merged point. An iteration-limited
/// completion that is within tolerance is scored the same way. Anything
/// else gets the infinite sentinel with the lower residual as violation.
pub fn score(result: &LowerResult) -> (f64, f64) {
    let usable = match result.status {
        LowerStatus::Optimal => true,
        LowerStatus::MaxIter => result.residual == 0.0,
        LowerStatus::Infeasible | LowerStatus::DomainError => false,
    };
    if usable && result.f_lower.is_finite() {
        (result.f_lower, result.residual)
    } else {
        (f64::INFINITY, result.residual)
    }
}

/// Fitness, violation and merged point of one upper candidate.
pub fn bilevel_fitness(
    instance: &ProblemInstance,
    x_upper: &[f64],
    cache: &mut LowerCache,
    config: &LowerConfig,
    warm_start: bool,
) -> Result<(f64, f64, Vec<f64>)> {
    let (solved_upper, result) = match cache.lookup(x_upper) {
        Some((x, r)) => (x.to_vec(), r.clone()),
        None => {
            let warm = if warm_start { cache.nearest(x_upper).map(<[f64]>::to_vec) } else { None };
            let r = solve_lower(instance, x_upper, warm.as_deref(), config)?;
            cache.insert(x_upper, r.clone());
            (x_upper.to_vec(), r)
        }
    };
    let (f, v) = score(&result);
    let x_full = instance.partition.merge(&solved_upper, &result.x_lower)?;
    Ok((f, v, x_full))
}

/// Batch oracle over one generation. Lower solves run against a snapshot
/// of the cache; new results are inserted afterwards in batch order, so
/// the outcome does not depend on scheduling.
struct NestedOracle<'a> {
    instance: &'a ProblemInstance,
    lower: LowerConfig,
    warm_start: bool,
    parallel: bool,
    cache: LowerCache,
    lower_solves: u64,
    lower_evals: u64,
}

impl NestedOracle<'_> {
    fn solve(&self, x_upper: &[f64]) -> Option<LowerResult> {
        let warm = if self.warm_start { self.cache.nearest(x_upper) } else { None };
        solve_lower(self.instance, x_upper, warm, &self.lower).ok()
    }
}

impl FitnessOracle for NestedOracle<'_> {
    fn evaluate(&mut self, genomes: &[Vec<f64>]) -> Vec<Option<(f64, f64)>> {
        // First occurrence of each new key gets solved; repeats are hits.
        let mut pending: Vec<usize> = Vec::new();
        let mut seen = HashMap::new();
        for (i, g) in genomes.iter().enumerate() {
            if self.cache.peek(g).is_none() {
                seen.entry(self.cache.key(g)).or_insert_with(|| {
                    pending.push(i);
                    i
                });
            }
        }
        let solved: Vec<Option<LowerResult>> = if self.parallel {
            pending.par_iter().map(|&i| self.solve(&genomes[i])).collect()
        } else {
            pending.iter().map(|&i| self.solve(&genomes[i])).collect()
        };
        let mut failed = HashMap::new();
        for (&i, r) in pending.iter().zip(solved) {
            self.lower_solves += 1;
            match r {
                Some(r) => {
                    self.lower_evals += r.stats.fn_evals;
                    self.cache.insert(&genomes[i], r);
                }
                None => {
                    failed.insert(self.cache.key(&genomes[i]), ());
                }
            }
        }
        genomes
            .iter()
            .map(|g| {
                if failed.contains_key(&self.cache.key(g)) {
                    return None;
                }
                let i = self.cache.peek(g)?;
                Some(score(&self.cache.entries[i].1))
            })
            .collect()
    }
}

pub fn solve_bobd(instance: &ProblemInstance, config: &BOBDConfig, seed: u64) -> Result<RunRecord> {
    config.validate()?;
    let start = Instant::now();
    let ga = config.ga_for(instance, seed);
    let (lo, hi) = instance.partition.level_bounds(&instance.spec, Level::Upper);
    let mut oracle = NestedOracle {
        instance,
        lower: config.lower_config(seed),
        warm_start: config.warm_start,
        parallel: config.parallel,
        cache: LowerCache::new(config.cache_quantum),
        lower_solves: 0,
        lower_evals: 0,
    };
    let result = run_ga(&mut oracle, &lo, &hi, &ga)?;

    let best_x = match oracle.cache.peek(&result.best.genome) {
        Some(i) => {
            let (x, r) = &oracle.cache.entries[i];
            instance.partition.merge(x, &r.x_lower)?
        }
        None => {
            let mid: Vec<f64> = {
                let (l, h) = instance.partition.level_bounds(&instance.spec, Level::Lower);
                l.iter().zip(&h).map(|(a, b)| 0.5 * (a + b)).collect()
            };
            instance.partition.merge(&result.best.genome, &mid)?
        }
    };

    let feasible = result.best.is_feasible() && result.best.fitness.is_finite();
    let record = RunRecord {
        problem: instance.id().to_string(),
        p: instance.spec.scalable_p(),
        q: instance.spec.scalable_q(),
        method: Method::Bobd,
        seed,
        best_x,
        best_f: if feasible { result.best.fitness } else { f64::INFINITY },
        best_violation: result.best.violation,
        feasible,
        upper_evals: result.evaluations,
        lower_solves: oracle.lower_solves,
        total_function_evals: result.evaluations + oracle.lower_evals,
        wall_time: start.elapsed().as_secs_f64(),
        history: result.history,
    };
    info!(
        "bobd {} P={} Q={} seed={}: f={} feasible={} gens={} solves={} in {:.2}s",
        record.problem,
        record.p,
        record.q,
        seed,
        record.best_f,
        record.feasible,
        record.history.len(),
        record.lower_solves,
        record.wall_time
    );
    Ok(record)
}
