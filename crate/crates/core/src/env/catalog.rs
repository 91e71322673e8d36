use rand::Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;

/// Per-service static properties, drawn once per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCatalog {
    /// Storage footprint of each service model (bits).
    pub cache_bits: Vec<f64>,
    /// CPU cycles needed per input bit.
    pub density: Vec<f64>,
    pub input_min_bits: f64,
    pub input_max_bits: f64,
}

impl ServiceCatalog {
    pub fn generate<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Self {
        let f = cfg.num_services;
        let cache_bits = (0..f).map(|_| uniform(rng, cfg.cache_min_bits, cfg.cache_max_bits)).collect();
        let density = (0..f).map(|_| uniform(rng, cfg.density_min, cfg.density_max)).collect();
        Self {
            cache_bits,
            density,
            input_min_bits: cfg.input_min_bits,
            input_max_bits: cfg.input_max_bits,
        }
    }

    pub fn len(&self) -> usize {
        self.cache_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache_bits.is_empty()
    }
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One TD's job for one small slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub service: usize,
    pub input_bits: f64,
    pub comp_cycles: f64,
}

impl Task {
    pub fn new(service: usize, input_bits: f64, catalog: &ServiceCatalog) -> Self {
        Self {
            service,
            input_bits,
            comp_cycles: input_bits * catalog.density[service],
        }
    }
}

/// Draws service types by popularity rank: type 0 is the most requested.
#[derive(Debug, Clone)]
pub struct TaskGenerator {
    zipf: Zipf<f64>,
}

impl TaskGenerator {
    pub fn new(num_services: usize, exponent: f64) -> Self {
        Self {
            zipf: Zipf::new(num_services as f64, exponent).expect("zipf parameters validated by config"),
        }
    }

    pub fn sample_type<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.zipf.sample(rng) as usize - 1
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, catalog: &ServiceCatalog, rng: &mut R) -> Vec<Task> {
        (0..n)
            .map(|_| {
                let service = self.sample_type(rng);
                let input = uniform(rng, catalog.input_min_bits, catalog.input_max_bits);
                Task::new(service, input, catalog)
            })
            .collect()
    }
}

/// Convenience wrapper over [`TaskGenerator`].
pub fn generate_tasks<R: Rng + ?Sized>(cfg: &SystemConfig, catalog: &ServiceCatalog, rng: &mut R) -> Vec<Task> {
    TaskGenerator::new(cfg.num_services, cfg.zipf_s).generate(cfg.num_tds, catalog, rng)
}
