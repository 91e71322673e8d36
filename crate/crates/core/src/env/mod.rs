//! Seeded model of the collaborative MEC system.

mod catalog;
mod decision;
mod model;
mod state;
mod topology;

pub use catalog::{generate_tasks, ServiceCatalog, Task, TaskGenerator};
pub use decision::{switching_cost, CacheDecision, OffRaDecision, Target};
pub use model::{
    check_feasibility, evaluate_slot, local_delay_energy, qos, structural_violations, ConstraintId, SlotContext,
    SlotOutcome, SHARE_TOLERANCE,
};
pub use state::SmallState;
pub use topology::{channel_gain, draw_gains, sample_channel_gain, sample_fading, uplink_rate, Topology};

use crate::config::SystemConfig;
use crate::rng::{purpose, SeedStream};

/// Per-episode environment: topology plus the exogenous task and fading
/// streams. Each `(large, small)` slot has its own child stream so the
/// exogenous inputs never depend on decisions.
#[derive(Debug, Clone)]
pub struct Episode {
    pub topology: Topology,
    generator: TaskGenerator,
    stream: SeedStream,
}

/// Exogenous inputs of one small slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInputs {
    pub tasks: Vec<Task>,
    pub gains: Vec<f64>,
}

impl Episode {
    pub fn new(cfg: &SystemConfig, stream: SeedStream) -> Self {
        let topology = Topology::generate(cfg, &mut stream.child(purpose::TOPOLOGY).rng());
        Self::with_topology(cfg, topology, stream)
    }

    /// Episode over a fixed topology; tasks and fading come from `stream`.
    pub fn with_topology(cfg: &SystemConfig, topology: Topology, stream: SeedStream) -> Self {
        Self {
            topology,
            generator: TaskGenerator::new(cfg.num_services, cfg.zipf_s),
            stream,
        }
    }

    pub fn slot_inputs(&self, cfg: &SystemConfig, catalog: &ServiceCatalog, large: usize, small: usize) -> SlotInputs {
        let slot = self.stream.derive(&[large as u64, small as u64]);
        let tasks = self
            .generator
            .generate(cfg.num_tds, catalog, &mut slot.child(purpose::TASKS).rng());
        let gains = draw_gains(&self.topology, cfg.path_loss_exp, &mut slot.child(purpose::CHANNEL).rng());
        SlotInputs { tasks, gains }
    }
}
