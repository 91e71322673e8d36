use serde::{Deserialize, Serialize};

use super::decision::{CacheDecision, OffRaDecision, Target};
use super::model::{SlotContext, SlotOutcome};
use crate::config::SystemConfig;

/// Observation `{c, g, p}` taken once per small slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallState {
    pub cache: CacheDecision,
    /// Cumulative QoS gain over local computing, per service.
    pub gain: Vec<f64>,
    /// Cumulative count of tasks of service `f` executed at ES `m`, row-major `M x F`.
    pub popularity: Vec<f64>,
    /// Tasks observed since the episode started.
    pub tasks_seen: u64,
}

impl SmallState {
    pub fn initial(cfg: &SystemConfig, cache: CacheDecision) -> Self {
        Self {
            cache,
            gain: vec![0.0; cfg.num_services],
            popularity: vec![0.0; cfg.num_es * cfg.num_services],
            tasks_seen: 0,
        }
    }

    pub fn popularity_at(&self, m: usize, f: usize) -> f64 {
        self.popularity[m * self.cache.num_services() + f]
    }

    /// Fold one evaluated slot into the running statistics.
    pub fn update(&self, ctx: &SlotContext<'_>, cache: &CacheDecision, offra: &OffRaDecision, outcome: &SlotOutcome) -> Self {
        let mut next = self.clone();
        let f_count = cache.num_services();
        for (n, task) in ctx.tasks.iter().enumerate() {
            next.gain[task.service] += outcome.qos[n] - ctx.local_qos(n);
            if let Target::Edge(m) = offra.targets[n] {
                next.popularity[m * f_count + task.service] += 1.0;
            }
        }
        next.cache = cache.clone();
        next.tasks_seen += ctx.num_tds() as u64;
        next
    }

    /// Flattened network input `[c, g, p]`; `g` and `p` are divided by the
    /// number of tasks seen so their scale does not drift over an episode.
    pub fn features(&self) -> Vec<f64> {
        let norm = (self.tasks_seen as f64).max(1.0);
        let mut out = self.cache.as_f64();
        out.extend(self.gain.iter().map(|g| g / norm));
        out.extend(self.popularity.iter().map(|p| p / norm));
        out
    }
}
