//! Traditional GA over integer genes, used by the plain-GA reference and the
//! joint caching/offloading baseline. Continuous fractions are coded on a grid.

use rand::Rng;

use super::improved::{top_indices, GaParams, GaResult};
use super::operators::select_parents;
use super::problem::{Chromosome, OffRaProblem};

/// Number of points of the fraction grid `{0, 0.1, ..., 1.0}`.
pub const GRID_POINTS: usize = 11;

pub fn grid_value(index: usize) -> f64 {
    index.min(GRID_POINTS - 1) as f64 / (GRID_POINTS - 1) as f64
}

/// Best individual of a discrete GA run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteResult {
    pub genes: Vec<usize>,
    pub fitness: f64,
    pub trace: Vec<f64>,
}

/// Discrete GA with roulette selection, uniform crossover and redraw
/// mutation. Gene `i` takes values in `0..domains[i]`; `seeds` are placed at
/// the front of the initial population.
pub fn run_discrete<R, F>(domains: &[usize], seeds: &[Vec<usize>], params: &GaParams, fitness: F, rng: &mut R) -> DiscreteResult
where
    R: Rng + ?Sized,
    F: Fn(&[usize]) -> f64,
{
    assert!(domains.iter().all(|&d| d >= 1), "every gene needs a non-empty domain");
    let random = |rng: &mut R| -> Vec<usize> { domains.iter().map(|&d| rng.random_range(0..d)).collect() };
    let mut population: Vec<Vec<usize>> = seeds.iter().take(params.population).cloned().collect();
    while population.len() < params.population {
        population.push(random(rng));
    }
    let mut fit: Vec<f64> = population.iter().map(|g| fitness(g)).collect();
    let first = top_indices(&fit, 1)[0];
    let mut best = (population[first].clone(), fit[first]);
    let mut trace = vec![best.1];

    for _ in 0..params.generations {
        let mut next: Vec<Vec<usize>> = top_indices(&fit, params.elitism)
            .into_iter()
            .map(|i| population[i].clone())
            .collect();
        let needed = params.population - next.len();
        let parents = select_parents(&fit, needed + needed % 2, rng);
        for pair in parents.chunks(2) {
            let mut a = population[pair[0]].clone();
            let mut b = population[pair[1]].clone();
            if rng.random_bool(params.crossover_rate) {
                for i in 0..a.len() {
                    if rng.random_bool(0.5) {
                        std::mem::swap(&mut a[i], &mut b[i]);
                    }
                }
            }
            for child in [&mut a, &mut b] {
                for (gene, &d) in child.iter_mut().zip(domains) {
                    if rng.random_bool(params.mutation_rate) {
                        *gene = rng.random_range(0..d);
                    }
                }
            }
            next.push(a);
            next.push(b);
        }
        next.truncate(params.population);
        population = next;
        fit = population.iter().map(|g| fitness(g)).collect();
        let top = top_indices(&fit, 1)[0];
        if fit[top] > best.1 {
            best = (population[top].clone(), fit[top]);
        }
        trace.push(best.1);
    }
    DiscreteResult {
        genes: best.0,
        fitness: best.1,
        trace,
    }
}

/// Gene domains of a grid-coded Off-RA chromosome: targets, then compute
/// indices, then bandwidth indices.
pub fn offra_domains(problem: &OffRaProblem<'_>) -> Vec<usize> {
    let n = problem.num_tds();
    let mut d = vec![problem.num_es() + 2; n];
    d.extend(std::iter::repeat_n(GRID_POINTS, 2 * n));
    d
}

/// Maps grid-coded genes to the hybrid chromosome.
pub fn decode_grid(genes: &[usize], n: usize) -> Chromosome {
    assert_eq!(genes.len(), 3 * n, "grid chromosome must hold 3N genes");
    Chromosome {
        targets: genes[..n].to_vec(),
        compute: genes[n..2 * n].iter().map(|&i| grid_value(i)).collect(),
        bandwidth: genes[2 * n..].iter().map(|&i| grid_value(i)).collect(),
    }
}

/// Plain GA on the Off-RA problem with grid-coded fractions.
pub fn solve_plain<R: Rng + ?Sized>(problem: &OffRaProblem<'_>, params: &GaParams, rng: &mut R) -> GaResult {
    let n = problem.num_tds();
    let domains = offra_domains(problem);
    let seeds = [vec![0; 3 * n]];
    let res = run_discrete(&domains, &seeds, params, |g| problem.fitness(&decode_grid(g, n)), rng);
    let chromosome = decode_grid(&res.genes, n);
    let eval = problem.evaluate(&chromosome);
    GaResult {
        chromosome,
        decision: eval.decision,
        outcome: eval.outcome,
        fitness: res.fitness,
        trace: res.trace,
    }
}
