use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::ServiceCatalog;

/// Binary `M x F` service placement, row-major by ES.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheDecision {
    num_es: usize,
    num_services: usize,
    bits: Vec<bool>,
}

impl CacheDecision {
    pub fn empty(num_es: usize, num_services: usize) -> Self {
        Self {
            num_es,
            num_services,
            bits: vec![false; num_es * num_services],
        }
    }

    pub fn full(num_es: usize, num_services: usize) -> Self {
        Self {
            num_es,
            num_services,
            bits: vec![true; num_es * num_services],
        }
    }

    pub fn from_bits(num_es: usize, num_services: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), num_es * num_services, "cache matrix must be M x F");
        Self { num_es, num_services, bits }
    }

    pub fn num_es(&self) -> usize {
        self.num_es
    }

    pub fn num_services(&self) -> usize {
        self.num_services
    }

    pub fn get(&self, m: usize, f: usize) -> bool {
        self.bits[m * self.num_services + f]
    }

    pub fn set(&mut self, m: usize, f: usize, on: bool) {
        self.bits[m * self.num_services + f] = on;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn row(&self, m: usize) -> &[bool] {
        &self.bits[m * self.num_services..(m + 1) * self.num_services]
    }

    /// Bits of storage used at ES `m`.
    pub fn used_bits(&self, m: usize, catalog: &ServiceCatalog) -> f64 {
        self.row(m)
            .iter()
            .zip(&catalog.cache_bits)
            .filter(|(on, _)| **on)
            .map(|(_, s)| s)
            .sum()
    }

    /// Capacity constraint on every ES.
    pub fn fits(&self, catalog: &ServiceCatalog, capacity_bits: f64) -> bool {
        (0..self.num_es).all(|m| self.used_bits(m, catalog) <= capacity_bits)
    }

    /// Total storage above capacity, summed over ESs (bits).
    pub fn overflow_bits(&self, catalog: &ServiceCatalog, capacity_bits: f64) -> f64 {
        (0..self.num_es)
            .map(|m| (self.used_bits(m, catalog) - capacity_bits).max(0.0))
            .sum()
    }

    pub fn is_cached_anywhere(&self, f: usize) -> bool {
        (0..self.num_es).any(|m| self.get(m, f))
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Download delay of services newly placed between two consecutive large slots.
/// Evictions are free.
pub fn switching_cost(prev: &CacheDecision, next: &CacheDecision, catalog: &ServiceCatalog, backhaul_bps: f64) -> f64 {
    assert_eq!(prev.bits.len(), next.bits.len(), "cache matrices differ in shape");
    let mut cost = 0.0;
    for m in 0..next.num_es {
        for f in 0..next.num_services {
            if next.get(m, f) && !prev.get(m, f) {
                cost += catalog.cache_bits[f] / backhaul_bps;
            }
        }
    }
    cost
}

/// Where a task is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Local,
    /// Zero-based ES index.
    Edge(usize),
    Cloud,
}

impl Target {
    /// Gene encoding: 0 = local, 1..=M = ES, M+1 = cloud.
    pub fn to_gene(self, num_es: usize) -> usize {
        match self {
            Target::Local => 0,
            Target::Edge(m) => m + 1,
            Target::Cloud => num_es + 1,
        }
    }

    pub fn from_gene(gene: usize, num_es: usize) -> Self {
        match gene {
            0 => Target::Local,
            g if g <= num_es => Target::Edge(g - 1),
            _ => Target::Cloud,
        }
    }

    pub fn is_offloaded(self) -> bool {
        !matches!(self, Target::Local)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Local => write!(f, "local"),
            Target::Edge(m) => write!(f, "es{m}"),
            Target::Cloud => write!(f, "cloud"),
        }
    }
}

/// Small-timescale offloading plus compute and bandwidth shares for every TD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffRaDecision {
    pub targets: Vec<Target>,
    /// Share of the executing ES's compute.
    pub compute: Vec<f64>,
    /// Share of the associated ES's bandwidth.
    pub bandwidth: Vec<f64>,
}

impl OffRaDecision {
    pub fn all_local(n: usize) -> Self {
        Self {
            targets: vec![Target::Local; n],
            compute: vec![0.0; n],
            bandwidth: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}
