//! Fixtures shared by the benchmarks.

use edgecache::env::{CacheDecision, SlotInputs};
use edgecache::harness::{Phase, World};
use edgecache::rng::SeedStream;
use edgecache::SystemConfig;

/// Default world plus the inputs of its first slot.
pub fn default_slot(seed: u64) -> (World, SlotInputs) {
    let world = World::new(SystemConfig::default(), SeedStream::new(seed), 0);
    let episode = world.episode(Phase::Train, 0);
    let inputs = world.slot_inputs(&episode, 0, 0);
    (world, inputs)
}

/// Caches the first `per_es` services at every ES.
pub fn leading_services(cfg: &SystemConfig, per_es: usize) -> CacheDecision {
    let mut cache = CacheDecision::empty(cfg.num_es, cfg.num_services);
    for m in 0..cfg.num_es {
        for f in 0..per_es.min(cfg.num_services) {
            cache.set(m, f, true);
        }
    }
    cache
}
