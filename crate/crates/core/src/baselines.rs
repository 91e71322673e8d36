//! Comparison schemes: fixed caching rules, random and equal-split Off-RA,
//! and the joint caching/offloading GA.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::env::{switching_cost, CacheDecision, OffRaDecision, ServiceCatalog, SlotContext, SlotOutcome};
use crate::error::ConfigError;
use crate::ga::{
    decode_grid, offra_domains, run_discrete, selection_fitness, GaParams, OffRaProblem, VIOLATION_FITNESS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeId {
    DglDdpg,
    Ddpg,
    GaAll,
    NoCooperation,
    AveResource,
    PopularCache,
    RandomCache,
    RandomOff,
}

/// Who picks the cache placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheRule {
    LstmAgent,
    PlainAgent,
    Popular,
    Random,
    JointGa,
}

/// Who picks offloading and resource shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffRaRule {
    ImprovedGa,
    NoCooperation,
    EqualSplit,
    Random,
    PlainGa,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::DglDdpg,
        SchemeId::Ddpg,
        SchemeId::GaAll,
        SchemeId::NoCooperation,
        SchemeId::AveResource,
        SchemeId::PopularCache,
        SchemeId::RandomCache,
        SchemeId::RandomOff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::DglDdpg => "DGL_DDPG",
            SchemeId::Ddpg => "DDPG",
            SchemeId::GaAll => "GA_ALL",
            SchemeId::NoCooperation => "NO_COOPERATION",
            SchemeId::AveResource => "AVE_RESOURCE",
            SchemeId::PopularCache => "POPULAR_CACHE",
            SchemeId::RandomCache => "RANDOM_CACHE",
            SchemeId::RandomOff => "RANDOM_OFF",
        }
    }

    /// Stable tag for seed derivation.
    pub fn tag(self) -> u64 {
        self as u64 + 1
    }

    pub fn cache_rule(self) -> CacheRule {
        match self {
            SchemeId::DglDdpg | SchemeId::NoCooperation | SchemeId::AveResource | SchemeId::RandomOff => {
                CacheRule::LstmAgent
            }
            SchemeId::Ddpg => CacheRule::PlainAgent,
            SchemeId::GaAll => CacheRule::JointGa,
            SchemeId::PopularCache => CacheRule::Popular,
            SchemeId::RandomCache => CacheRule::Random,
        }
    }

    pub fn offra_rule(self) -> OffRaRule {
        match self {
            SchemeId::DglDdpg | SchemeId::Ddpg | SchemeId::PopularCache | SchemeId::RandomCache => OffRaRule::ImprovedGa,
            SchemeId::NoCooperation => OffRaRule::NoCooperation,
            SchemeId::AveResource => OffRaRule::EqualSplit,
            SchemeId::RandomOff => OffRaRule::Random,
            SchemeId::GaAll => OffRaRule::PlainGa,
        }
    }

    pub fn learns(self) -> bool {
        matches!(self.cache_rule(), CacheRule::LstmAgent | CacheRule::PlainAgent)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::UnknownScheme(s.to_string()))
    }
}

/// Requests of each service seen by each ES from its associated TDs, `M x F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestStats {
    pub num_services: usize,
    pub counts: Vec<f64>,
}

impl RequestStats {
    pub fn new(num_es: usize, num_services: usize) -> Self {
        Self {
            num_services,
            counts: vec![0.0; num_es * num_services],
        }
    }

    pub fn record(&mut self, ctx: &SlotContext<'_>) {
        for (n, task) in ctx.tasks.iter().enumerate() {
            self.counts[ctx.assoc(n) * self.num_services + task.service] += 1.0;
        }
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.counts[m * self.num_services..(m + 1) * self.num_services]
    }
}

/// Adds services in `order` while they fit; services that do not fit are skipped.
fn fill_in_order(cache: &mut CacheDecision, m: usize, order: &[usize], catalog: &ServiceCatalog, capacity: f64) {
    let mut used = cache.used_bits(m, catalog);
    for &f in order {
        if !cache.get(m, f) && used + catalog.cache_bits[f] <= capacity {
            cache.set(m, f, true);
            used += catalog.cache_bits[f];
        }
    }
}

/// Per ES, most requested services first (ties by lower index) until full.
pub fn popular_cache(stats: &RequestStats, catalog: &ServiceCatalog, cfg: &SystemConfig) -> CacheDecision {
    let mut cache = CacheDecision::empty(cfg.num_es, cfg.num_services);
    for m in 0..cfg.num_es {
        let row = stats.row(m);
        let mut order: Vec<usize> = (0..cfg.num_services).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        fill_in_order(&mut cache, m, &order, catalog, cfg.es_cache_bits);
    }
    cache
}

/// Per ES, a uniformly shuffled service list added greedily while it fits.
pub fn random_cache<R: Rng + ?Sized>(catalog: &ServiceCatalog, cfg: &SystemConfig, rng: &mut R) -> CacheDecision {
    let mut cache = CacheDecision::empty(cfg.num_es, cfg.num_services);
    for m in 0..cfg.num_es {
        let mut order: Vec<usize> = (0..cfg.num_services).collect();
        order.shuffle(rng);
        fill_in_order(&mut cache, m, &order, catalog, cfg.es_cache_bits);
    }
    cache
}

/// Repairs an arbitrary placement by keeping each ES's selected services in
/// index order while they fit.
pub fn repair_cache(selection: &CacheDecision, catalog: &ServiceCatalog, cfg: &SystemConfig) -> CacheDecision {
    let mut cache = CacheDecision::empty(cfg.num_es, cfg.num_services);
    for m in 0..cfg.num_es {
        let order: Vec<usize> = (0..cfg.num_services).filter(|&f| selection.get(m, f)).collect();
        fill_in_order(&mut cache, m, &order, catalog, cfg.es_cache_bits);
    }
    cache
}

/// Uniform random targets and shares, passed through the GA decoder's repair.
pub fn random_off<R: Rng + ?Sized>(problem: &OffRaProblem<'_>, rng: &mut R) -> OffRaDecision {
    problem.decode(&problem.random_chromosome(rng))
}

/// Outcome of the joint caching and offloading GA on one slot.
#[derive(Debug, Clone)]
pub struct JointResult {
    pub cache: CacheDecision,
    pub decision: OffRaDecision,
    pub outcome: SlotOutcome,
    pub fitness: f64,
    pub trace: Vec<f64>,
}

/// Traditional GA over `[cache bits | targets | compute grid | bandwidth grid]`.
/// Fitness is the slot's QoS sum less the delta-weighted switching cost from
/// `prev`, floored at `e^-3`, and `e^-3` on a threshold violation.
pub fn ga_all<R: Rng + ?Sized>(
    ctx: &SlotContext<'_>,
    prev: &CacheDecision,
    params: &GaParams,
    rng: &mut R,
) -> JointResult {
    let cfg = ctx.cfg;
    let (m_count, f_count) = (cfg.num_es, cfg.num_services);
    let cache_genes = m_count * f_count;
    let n = ctx.num_tds();
    let decode_cache = |genes: &[usize]| {
        let sel = CacheDecision::from_bits(m_count, f_count, genes[..cache_genes].iter().map(|&g| g == 1).collect());
        repair_cache(&sel, ctx.catalog, cfg)
    };
    let evaluate = |genes: &[usize]| {
        let cache = decode_cache(genes);
        let problem = OffRaProblem::new(ctx, &cache);
        let eval = problem.evaluate(&decode_grid(&genes[cache_genes..], n));
        let cost = switching_cost(prev, &cache, ctx.catalog, cfg.backhaul_bps);
        let fitness = if eval.outcome.all_within_thresholds() {
            (eval.outcome.qos_sum() - cfg.cost_balance * cost).max(VIOLATION_FITNESS)
        } else {
            selection_fitness(&eval.outcome)
        };
        (cache, eval, fitness)
    };

    let empty = CacheDecision::empty(m_count, f_count);
    let probe = OffRaProblem::new(ctx, &empty);
    let mut domains = vec![2; cache_genes];
    domains.extend(offra_domains(&probe));
    let mut keep_prev: Vec<usize> = prev.bits().iter().map(|&b| usize::from(b)).collect();
    keep_prev.extend(std::iter::repeat_n(0, 3 * n));
    let res = run_discrete(&domains, &[keep_prev], params, |g| evaluate(g).2, rng);
    let (cache, eval, fitness) = evaluate(&res.genes);
    JointResult {
        cache,
        decision: eval.decision,
        outcome: eval.outcome,
        fitness,
        trace: res.trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use crate::units::gb_to_bits;

    fn catalog(sizes_gb: &[f64]) -> ServiceCatalog {
        ServiceCatalog {
            cache_bits: sizes_gb.iter().map(|&g| gb_to_bits(g)).collect(),
            density: vec![500.0; sizes_gb.len()],
            input_min_bits: 4e6,
            input_max_bits: 4e7,
        }
    }

    fn cfg(num_es: usize, f: usize, cap_gb: f64) -> SystemConfig {
        SystemConfig {
            num_es,
            num_services: f,
            es_cache_bits: gb_to_bits(cap_gb),
            ..SystemConfig::default()
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.name()));
        }
        assert!("FOO".parse::<SchemeId>().is_err());
    }

    #[test]
    fn popular_uniform_takes_lowest_indices() {
        let c = cfg(1, 4, 30.0);
        let stats = RequestStats::new(1, 4);
        let cache = popular_cache(&stats, &catalog(&[10.0; 4]), &c);
        assert_eq!(cache.bits(), &[true, true, true, false]);
    }

    #[test]
    fn popular_hand_trace() {
        // counts (5, 9, 7), sizes (20, 25, 15) GB, capacity 45 GB:
        // take 1 (25 GB), then 2 (40 GB), then 0 does not fit
        let c = cfg(1, 3, 45.0);
        let stats = RequestStats {
            num_services: 3,
            counts: vec![5.0, 9.0, 7.0],
        };
        let cache = popular_cache(&stats, &catalog(&[20.0, 25.0, 15.0]), &c);
        assert_eq!(cache.bits(), &[false, true, true]);
    }

    #[test]
    fn dominant_service_cached_everywhere() {
        let c = cfg(2, 3, 20.0);
        let stats = RequestStats {
            num_services: 3,
            counts: vec![1.0, 50.0, 0.0, 2.0, 40.0, 1.0],
        };
        let cache = popular_cache(&stats, &catalog(&[12.0, 12.0, 12.0]), &c);
        assert!(cache.get(0, 1) && cache.get(1, 1));
    }

    #[test]
    fn random_cache_extremes_and_feasibility() {
        let cat = catalog(&[5.0, 12.0, 8.0, 20.0]);
        let mut rng = SeedStream::new(1).rng();
        assert_eq!(random_cache(&cat, &cfg(2, 4, 0.0), &mut rng), CacheDecision::empty(2, 4));
        assert_eq!(random_cache(&cat, &cfg(2, 4, 45.0), &mut rng), CacheDecision::full(2, 4));
        let c = cfg(2, 4, 21.0);
        for _ in 0..10_000 {
            assert!(random_cache(&cat, &c, &mut rng).fits(&cat, c.es_cache_bits));
        }
    }

    #[test]
    fn repair_keeps_index_order() {
        let c = cfg(1, 3, 30.0);
        let sel = CacheDecision::full(1, 3);
        let cache = repair_cache(&sel, &catalog(&[20.0, 15.0, 10.0]), &c);
        assert_eq!(cache.bits(), &[true, false, true]);
    }
}
