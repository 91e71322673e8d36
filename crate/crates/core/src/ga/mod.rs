//! Genetic algorithms for the per-slot offloading and resource allocation problem.

mod discrete;
mod improved;
mod operators;
mod problem;

pub use discrete::{decode_grid, grid_value, offra_domains, run_discrete, solve_plain, DiscreteResult, GRID_POINTS};
pub use improved::{solve, GaParams, GaResult};
pub use operators::{crossover, mutate, perturb, select_parents, selection_probabilities, self_crossover};
pub use problem::{
    raw_fitness, selection_fitness, Chromosome, Evaluation, OffRaProblem, ShareMode, TargetDomain, VIOLATION_FITNESS,
};
