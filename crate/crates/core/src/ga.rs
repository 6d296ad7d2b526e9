//! Real-coded genetic algorithm: feasibility-rule binary tournament, SBX,
//! polynomial mutation and single elitism.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Improvement below this does not reset the stall counter.
pub const IMPROVEMENT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub pop_size: usize,
    pub stall_generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `None` means `1/d`.
    pub mutation_prob: Option<f64>,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    pub seed: u64,
    /// Wall-clock budget. When set it replaces the stall test.
    pub time_budget: Option<Duration>,
    /// Hard cap on generations after the initial one.
    pub max_generations: Option<usize>,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            pop_size: 100,
            stall_generations: 50,
            crossover_prob: 0.9,
            mutation_prob: None,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            seed: 0,
            time_budget: None,
            max_generations: None,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.pop_size < 4 {
            return Err(Error::Contract(format!("pop_size {} < 4", self.pop_size)));
        }
        if self.stall_generations < 1 {
            return Err(Error::Contract("stall_generations must be >= 1".into()));
        }
        if !prob(self.crossover_prob) || !self.mutation_prob.is_none_or(prob) {
            return Err(Error::Contract("probabilities must lie in [0, 1]".into()));
        }
        if !(self.sbx_eta > 0.0 && self.mutation_eta > 0.0) {
            return Err(Error::Contract("distribution indices must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub fitness: f64,
    pub violation: f64,
}

impl Individual {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

/// Feasibility rules: feasible beats infeasible, then lower fitness among
/// feasibles, lower violation among infeasibles. `Less` means `a` wins.
pub fn compare(a: &Individual, b: &Individual) -> Ordering {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a.fitness.total_cmp(&b.fitness),
        (false, false) => a.violation.total_cmp(&b.violation),
    }
}

/// Winner of a binary tournament between indices `i` and `j`; ties go to
/// the earlier index.
pub fn tournament(pop: &[Individual], i: usize, j: usize) -> usize {
    let (first, second) = if i <= j { (i, j) } else { (j, i) };
    match compare(&pop[second], &pop[first]) {
        Ordering::Less => second,
        _ => first,
    }
}

/// Two parents, each the winner of an independent binary tournament.
pub fn select<R: Rng>(pop: &[Individual], rng: &mut R) -> (usize, usize) {
    let mut pick = || {
        let i = rng.gen_range(0..pop.len());
        let j = rng.gen_range(0..pop.len());
        tournament(pop, i, j)
    };
    let a = pick();
    let b = pick();
    (a, b)
}

pub fn init_population<R: Rng>(lo: &[f64], hi: &[f64], pop_size: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..pop_size)
        .map(|_| {
            lo.iter()
                .zip(hi)
                .map(|(&l, &h)| if l < h { rng.gen_range(l..=h) } else { l })
                .collect()
        })
        .collect()
}

/// Simulated binary crossover followed by polynomial mutation.
pub fn vary<R: Rng>(
    p1: &[f64],
    p2: &[f64],
    lo: &[f64],
    hi: &[f64],
    config: &GAConfig,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.gen::<f64>() < config.crossover_prob {
        sbx(&mut c1, &mut c2, config.sbx_eta, rng);
    }
    let pm = config.mutation_prob.unwrap_or(1.0 / p1.len().max(1) as f64);
    for child in [&mut c1, &mut c2] {
        polynomial_mutation(child, lo, hi, pm, config.mutation_eta, rng);
        for ((v, &l), &h) in child.iter_mut().zip(lo).zip(hi) {
            *v = v.clamp(l, h);
        }
    }
    (c1, c2)
}

fn sbx<R: Rng>(c1: &mut [f64], c2: &mut [f64], eta: f64, rng: &mut R) {
    for k in 0..c1.len() {
        if rng.gen::<f64>() >= 0.5 || (c1[k] - c2[k]).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.gen();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let (a, b) = (c1[k], c2[k]);
        c1[k] = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
        c2[k] = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
    }
}

fn polynomial_mutation<R: Rng>(x: &mut [f64], lo: &[f64], hi: &[f64], pm: f64, eta: f64, rng: &mut R) {
    for k in 0..x.len() {
        if rng.gen::<f64>() >= pm || lo[k] >= hi[k] {
            continue;
        }
        let width = hi[k] - lo[k];
        let d1 = (x[k] - lo[k]) / width;
        let d2 = (hi[k] - x[k]) / width;
        let u: f64 = rng.gen();
        let power = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(power) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(power)
        };
        x[k] += dq * width;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    #[serde(with = "crate::record::float")]
    pub best_f: f64,
    #[serde(with = "crate::record::float")]
    pub best_violation: f64,
    /// Cumulative oracle evaluations.
    pub evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAResult {
    pub best: Individual,
    pub history: Vec<GenerationRecord>,
    pub evaluations: u64,
}

impl GAResult {
    /// Generations run, counting the initial population.
    pub fn generations(&self) -> usize {
        self.history.len()
    }
}

pub fn history_csv(history: &[GenerationRecord]) -> String {
    let mut out = String::from("generation,best_f,best_violation,evals\n");
    for r in history {
        let _ = writeln!(out, "{},{},{},{}", r.generation, r.best_f, r.best_violation, r.evals);
    }
    out
}

/// Maps genomes to `(fitness, violation)`. `None` marks an evaluation
/// failure. Called once per generation with the whole batch, so an
/// implementation may evaluate in parallel.
pub trait FitnessOracle {
    fn evaluate(&mut self, genomes: &[Vec<f64>]) -> Vec<Option<(f64, f64)>>;
}

impl<F> FitnessOracle for F
where
    F: FnMut(&[Vec<f64>]) -> Vec<Option<(f64, f64)>>,
{
    fn evaluate(&mut self, genomes: &[Vec<f64>]) -> Vec<Option<(f64, f64)>> {
        self(genomes)
    }
}

/// Adapts a per-genome function into a sequential batch oracle.
pub fn pointwise<F>(mut f: F) -> impl FitnessOracle
where
    F: FnMut(&[f64]) -> Option<(f64, f64)>,
{
    move |batch: &[Vec<f64>]| batch.iter().map(|g| f(g)).collect::<Vec<_>>()
}

fn evaluate_batch<O: FitnessOracle + ?Sized>(oracle: &mut O, genomes: Vec<Vec<f64>>) -> Vec<Individual> {
    let scores = oracle.evaluate(&genomes);
    assert_eq!(scores.len(), genomes.len(), "oracle returned a short batch");
    genomes
        .into_iter()
        .zip(scores)
        .map(|(genome, s)| {
            let (fitness, violation) = match s {
                Some((f, v)) if !f.is_nan() && !v.is_nan() => (f, v.max(0.0)),
                _ => (f64::INFINITY, f64::INFINITY),
            };
            Individual {
                genome,
                fitness,
                violation,
            }
        })
        .collect()
}

fn best_index(pop: &[Individual]) -> usize {
    (1..pop.len()).fold(0, |b, i| if compare(&pop[i], &pop[b]) == Ordering::Less { i } else { b })
}

fn improves(new: &Individual, old: &Individual) -> bool {
    match (new.is_feasible(), old.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => new.fitness < old.fitness - IMPROVEMENT_EPS,
        (false, false) => new.violation < old.violation - IMPROVEMENT_EPS,
    }
}

pub fn run_ga<O: FitnessOracle + ?Sized>(oracle: &mut O, lo: &[f64], hi: &[f64], config: &GAConfig) -> Result<GAResult> {
    config.validate()?;
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            found: hi.len(),
        });
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
        return Err(Error::Contract("GA bounds must be finite with lo <= hi".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut pop = evaluate_batch(oracle, init_population(lo, hi, config.pop_size, &mut rng));
    let mut evaluations = pop.len() as u64;
    let mut best = pop[best_index(&pop)].clone();
    let mut history = vec![GenerationRecord {
        generation: 0,
        best_f: best.fitness,
        best_violation: best.violation,
        evals: evaluations,
    }];
    let mut stall = 0;
    let mut generation = 0;

    loop {
        let stop = match config.time_budget {
            Some(budget) => start.elapsed() >= budget,
            None => stall >= config.stall_generations,
        };
        if stop || config.max_generations.is_some_and(|m| generation >= m) {
            break;
        }
        generation += 1;

        let elite = pop[best_index(&pop)].clone();
        let mut offspring = Vec::with_capacity(config.pop_size - 1);
        while offspring.len() < config.pop_size - 1 {
            let (a, b) = select(&pop, &mut rng);
            let (c1, c2) = vary(&pop[a].genome, &pop[b].genome, lo, hi, config, &mut rng);
            offspring.push(c1);
            if offspring.len() < config.pop_size - 1 {
                offspring.push(c2);
            }
        }
        evaluations += offspring.len() as u64;
        pop = std::iter::once(elite).chain(evaluate_batch(oracle, offspring)).collect();

        let candidate = &pop[best_index(&pop)];
        if improves(candidate, &best) {
            stall = 0;
        } else {
            stall += 1;
        }
        if compare(candidate, &best) == Ordering::Less {
            best = candidate.clone();
        }
        history.push(GenerationRecord {
            generation,
            best_f: best.fitness,
            best_violation: best.violation,
            evals: evaluations,
        });
    }

    Ok(GAResult {
        best,
        history,
        evaluations,
    })
}
