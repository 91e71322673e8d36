//! Selection, crossover and mutation for the hybrid chromosome.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::problem::Chromosome;

/// Roulette-wheel sampling of `count` indices with probability proportional
/// to fitness. Falls back to uniform sampling when the wheel is degenerate.
pub fn select_parents<R: Rng + ?Sized>(fitnesses: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    assert!(!fitnesses.is_empty(), "cannot select from an empty population");
    let total: f64 = fitnesses.iter().sum();
    let degenerate = !(total.is_finite() && total > 0.0) || fitnesses.iter().any(|&f| f < 0.0 || !f.is_finite());
    (0..count)
        .map(|_| {
            if degenerate {
                return rng.random_range(0..fitnesses.len());
            }
            let mut spin = rng.random::<f64>() * total;
            for (i, &f) in fitnesses.iter().enumerate() {
                if spin < f {
                    return i;
                }
                spin -= f;
            }
            fitnesses.len() - 1
        })
        .collect()
}

/// Selection probabilities of the roulette wheel.
pub fn selection_probabilities(fitnesses: &[f64]) -> Vec<f64> {
    let total: f64 = fitnesses.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return vec![1.0 / fitnesses.len() as f64; fitnesses.len()];
    }
    fitnesses.iter().map(|f| f / total).collect()
}

/// With probability `rate`: targets are uniformly swapped gene by gene, and
/// each continuous gene picked for exchange is replaced in both offspring by
/// the parents' mean.
pub fn crossover<R: Rng + ?Sized>(a: &Chromosome, b: &Chromosome, rate: f64, rng: &mut R) -> (Chromosome, Chromosome) {
    assert_eq!(a.len(), b.len(), "parents differ in shape");
    let mut x = a.clone();
    let mut y = b.clone();
    if !rng.random_bool(rate.clamp(0.0, 1.0)) {
        return (x, y);
    }
    for i in 0..a.len() {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut x.targets[i], &mut y.targets[i]);
        }
        if rng.random_bool(0.5) {
            let mean = 0.5 * (a.compute[i] + b.compute[i]);
            x.compute[i] = mean;
            y.compute[i] = mean;
        }
        if rng.random_bool(0.5) {
            let mean = 0.5 * (a.bandwidth[i] + b.bandwidth[i]);
            x.bandwidth[i] = mean;
            y.bandwidth[i] = mean;
        }
    }
    (x, y)
}

/// Swaps two random positions inside each block of one individual.
pub fn self_crossover<R: Rng + ?Sized>(chrom: &mut Chromosome, rng: &mut R) {
    let n = chrom.len();
    if n < 2 {
        return;
    }
    let (i, j) = two_positions(n, rng);
    chrom.targets.swap(i, j);
    let (i, j) = two_positions(n, rng);
    chrom.compute.swap(i, j);
    let (i, j) = two_positions(n, rng);
    chrom.bandwidth.swap(i, j);
}

fn two_positions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Per-gene mutation with probability `rate`: target genes are redrawn from
/// `allowed(position)`, share genes get Gaussian noise and are clipped to [0, 1].
pub fn mutate<R, A>(chrom: &mut Chromosome, rate: f64, stddev: f64, allowed: A, rng: &mut R)
where
    R: Rng + ?Sized,
    A: Fn(usize) -> Vec<usize>,
{
    let rate = rate.clamp(0.0, 1.0);
    if rate == 0.0 {
        return;
    }
    let noise = Normal::new(0.0, stddev.max(0.0)).expect("finite stddev");
    for i in 0..chrom.len() {
        if rng.random_bool(rate) {
            let genes = allowed(i);
            chrom.targets[i] = genes[rng.random_range(0..genes.len())];
        }
    }
    for gene in chrom.compute.iter_mut().chain(chrom.bandwidth.iter_mut()) {
        if rng.random_bool(rate) {
            *gene = perturb(*gene, noise.sample(rng));
        }
    }
}

/// Gaussian step clipped to the unit interval.
pub fn perturb(gene: f64, step: f64) -> f64 {
    (gene + step).clamp(0.0, 1.0)
}
