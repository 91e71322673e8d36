use crate::config::SystemConfig;
use crate::env::{switching_cost, CacheDecision, ServiceCatalog};

/// Binary placement read off the actor scores, before and after capacity repair.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Thresholded selection, possibly over capacity.
    pub raw: CacheDecision,
    /// Capacity-feasible placement that is executed.
    pub cache: CacheDecision,
}

/// Thresholds `M x F` scores at 0.5, then at each over-full ES evicts the
/// cached service with the lowest score until it fits. Among equal scores the
/// higher service index goes first.
pub fn project_action(scores: &[f64], catalog: &ServiceCatalog, cfg: &SystemConfig) -> Projection {
    let (m_count, f_count) = (cfg.num_es, cfg.num_services);
    assert_eq!(scores.len(), m_count * f_count, "scores must be M x F");
    let raw = CacheDecision::from_bits(m_count, f_count, scores.iter().map(|&s| s >= 0.5).collect());
    let mut cache = raw.clone();
    for m in 0..m_count {
        let row = &scores[m * f_count..(m + 1) * f_count];
        let mut order: Vec<usize> = (0..f_count).filter(|&f| cache.get(m, f)).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)));
        let mut used = cache.used_bits(m, catalog);
        for f in order {
            if used <= cfg.es_cache_bits {
                break;
            }
            cache.set(m, f, false);
            used -= catalog.cache_bits[f];
        }
    }
    Projection { raw, cache }
}

/// Reward terms of one large slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    pub qos: f64,
    /// Download time of newly cached services (s).
    pub cost: f64,
    /// Time to move the over-capacity part of the raw selection (s).
    pub penalty: f64,
}

impl Reward {
    pub fn total(&self) -> f64 {
        self.qos - self.cost - self.penalty
    }
}

/// `r = sum Q - switching cost - overflow / R_back`, the cost computed on the
/// executed placement and the penalty on the raw selection.
pub fn compute_reward(
    qos_sum: f64,
    prev: &CacheDecision,
    raw: &CacheDecision,
    next: &CacheDecision,
    catalog: &ServiceCatalog,
    cfg: &SystemConfig,
) -> Reward {
    Reward {
        qos: qos_sum,
        cost: switching_cost(prev, next, catalog, cfg.backhaul_bps),
        penalty: raw.overflow_bits(catalog, cfg.es_cache_bits) / cfg.backhaul_bps,
    }
}
