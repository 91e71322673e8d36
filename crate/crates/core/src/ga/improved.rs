//! Improved GA for the one-shot Off-RA problem.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::operators::{crossover, mutate, select_parents, self_crossover};
use super::problem::{Chromosome, OffRaProblem};
use crate::env::{OffRaDecision, SlotOutcome};
use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_stddev: f64,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 20,
            crossover_rate: 0.45,
            mutation_rate: 0.1,
            mutation_stddev: 0.1,
            elitism: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(format!("ga: {msg}")));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if !(self.mutation_stddev.is_finite() && self.mutation_stddev >= 0.0) {
            return bad("mutation stddev must be finite and non-negative");
        }
        if self.elitism >= self.population {
            return bad("elitism must be below the population size");
        }
        Ok(())
    }
}

/// Result of one GA run.
#[derive(Debug, Clone)]
pub struct GaResult {
    pub chromosome: Chromosome,
    pub decision: OffRaDecision,
    pub outcome: SlotOutcome,
    pub fitness: f64,
    /// Best fitness found so far, one entry per generation; entry 0 is the
    /// initial population.
    pub trace: Vec<f64>,
}

/// Indices of the `k` fittest individuals, ties broken by lower index.
pub(crate) fn top_indices(fitness: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Runs the Improved GA. The initial population holds one all-local
/// individual at index 0 and `P - 1` random ones.
pub fn solve<R: Rng + ?Sized>(problem: &OffRaProblem<'_>, params: &GaParams, rng: &mut R) -> GaResult {
    let n = problem.num_tds();
    let mut population: Vec<Chromosome> = std::iter::once(Chromosome::all_local(n))
        .chain((1..params.population).map(|_| problem.random_chromosome(rng)))
        .collect();
    let mut fit: Vec<f64> = population.iter().map(|c| problem.fitness(c)).collect();

    let first = top_indices(&fit, 1)[0];
    let mut best = (population[first].clone(), fit[first]);
    let mut trace = Vec::with_capacity(params.generations + 1);
    trace.push(best.1);

    for _ in 0..params.generations {
        let mut next: Vec<Chromosome> = top_indices(&fit, params.elitism)
            .into_iter()
            .map(|i| population[i].clone())
            .collect();
        let needed = params.population - next.len();
        let parents = select_parents(&fit, needed + needed % 2, rng);
        for pair in parents.chunks(2) {
            let (mut a, mut b) = crossover(&population[pair[0]], &population[pair[1]], params.crossover_rate, rng);
            for child in [&mut a, &mut b] {
                if rng.random_bool(params.crossover_rate) {
                    self_crossover(child, rng);
                }
                mutate(child, params.mutation_rate, params.mutation_stddev, |i| problem.allowed_genes(i), rng);
            }
            next.push(a);
            next.push(b);
        }
        next.truncate(params.population);
        population = next;
        fit = population.iter().map(|c| problem.fitness(c)).collect();

        let top = top_indices(&fit, 1)[0];
        if fit[top] > best.1 {
            best = (population[top].clone(), fit[top]);
        }
        trace.push(best.1);
    }

    let eval = problem.evaluate(&best.0);
    GaResult {
        chromosome: best.0,
        decision: eval.decision,
        outcome: eval.outcome,
        fitness: best.1,
        trace,
    }
}
