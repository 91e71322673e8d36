//! Delay, energy and QoS of one small-timescale slot.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::{ServiceCatalog, Task};
use super::decision::{CacheDecision, OffRaDecision, Target};
use super::topology::{uplink_rate, Topology};
use crate::config::SystemConfig;
use crate::error::EvalError;

/// Slack allowed on per-ES share sums before they count as over-allocated.
pub const SHARE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    /// Edge execution needs the service cached and a compute share.
    EdgeService,
    /// Bandwidth only for offloaded tasks.
    IdleBandwidth,
    /// Exactly one execution target.
    SingleTarget,
    /// Cache capacity.
    CacheCapacity,
    /// Per-ES compute shares sum to at most 1.
    ComputeShare,
    /// Per-ES bandwidth shares sum to at most 1.
    BandwidthShare,
    /// Energy threshold.
    Energy,
    /// Delay threshold.
    Delay,
}

impl ConstraintId {
    /// Energy or delay threshold, as opposed to a structural constraint.
    pub fn is_threshold(self) -> bool {
        matches!(self, ConstraintId::Energy | ConstraintId::Delay)
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintId::EdgeService => "edge_service",
            ConstraintId::IdleBandwidth => "idle_bandwidth",
            ConstraintId::SingleTarget => "single_target",
            ConstraintId::CacheCapacity => "cache_capacity",
            ConstraintId::ComputeShare => "compute_share",
            ConstraintId::BandwidthShare => "bandwidth_share",
            ConstraintId::Energy => "energy",
            ConstraintId::Delay => "delay",
        };
        f.write_str(s)
    }
}

/// Everything fixed during one small slot: tasks, fading, topology.
#[derive(Debug, Clone)]
pub struct SlotContext<'a> {
    pub cfg: &'a SystemConfig,
    pub catalog: &'a ServiceCatalog,
    pub topology: &'a Topology,
    pub tasks: &'a [Task],
    pub gains: &'a [f64],
    /// Full-band uplink rate of each TD (`b = 1`).
    full_rate: Vec<f64>,
}

impl<'a> SlotContext<'a> {
    pub fn new(
        cfg: &'a SystemConfig,
        catalog: &'a ServiceCatalog,
        topology: &'a Topology,
        tasks: &'a [Task],
        gains: &'a [f64],
    ) -> Self {
        let full_rate = gains
            .iter()
            .map(|&h| uplink_rate(1.0, cfg.es_bandwidth_hz, cfg.td_tx_power_w, h, cfg.noise_power_w))
            .collect();
        Self {
            cfg,
            catalog,
            topology,
            tasks,
            gains,
            full_rate,
        }
    }

    pub fn num_tds(&self) -> usize {
        self.tasks.len()
    }

    pub fn assoc(&self, n: usize) -> usize {
        self.topology.assoc[n]
    }

    pub fn full_rate(&self, n: usize) -> f64 {
        self.full_rate[n]
    }

    /// Delay and energy of TD `n` under one target and share pair.
    /// Offloading with a zero rate or an ES with a zero compute share yields infinite delay.
    pub fn delay_energy(&self, n: usize, target: Target, compute: f64, bandwidth: f64) -> (f64, f64) {
        let cfg = self.cfg;
        let task = &self.tasks[n];
        if target == Target::Local {
            return local_delay_energy(cfg, task);
        }
        let rate = bandwidth * self.full_rate[n];
        let t_up = task.input_bits / rate;
        let e_up = cfg.td_tx_power_w * t_up;
        let t = match target {
            Target::Local => unreachable!(),
            Target::Edge(m) => {
                let t_comp = task.comp_cycles / (compute * cfg.es_compute_hz);
                if m == self.assoc(n) {
                    t_up + t_comp
                } else {
                    t_up + task.input_bits / cfg.coop_bps + t_comp
                }
            }
            Target::Cloud => t_up + task.input_bits / cfg.backhaul_bps + task.comp_cycles / cfg.cloud_compute_hz,
        };
        (t, e_up)
    }

    /// QoS the task would score if computed on the device.
    pub fn local_qos(&self, n: usize) -> f64 {
        let (t, e) = local_delay_energy(self.cfg, &self.tasks[n]);
        qos(self.cfg, t, e)
    }
}

pub fn local_delay_energy(cfg: &SystemConfig, task: &Task) -> (f64, f64) {
    let t = task.comp_cycles / cfg.td_compute_hz;
    let e = cfg.energy_coeff * cfg.td_compute_hz * cfg.td_compute_hz * task.comp_cycles;
    (t, e)
}

/// Weighted normalized slack below the delay and energy thresholds.
pub fn qos(cfg: &SystemConfig, delay: f64, energy: f64) -> f64 {
    let t_th = cfg.delay_threshold_s;
    let e_th = cfg.energy_threshold_j;
    cfg.qos_delay_weight * (t_th - delay) / t_th + cfg.qos_energy_weight * (e_th - energy) / e_th
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub delay: Vec<f64>,
    pub energy: Vec<f64>,
    pub qos: Vec<f64>,
    pub energy_ok: Vec<bool>,
    pub delay_ok: Vec<bool>,
}

impl SlotOutcome {
    pub fn qos_sum(&self) -> f64 {
        self.qos.iter().sum()
    }

    /// Number of TDs breaking at least one threshold.
    pub fn violations(&self) -> usize {
        self.energy_ok
            .iter()
            .zip(&self.delay_ok)
            .filter(|(e, t)| !(**e && **t))
            .count()
    }

    pub fn all_within_thresholds(&self) -> bool {
        self.violations() == 0
    }
}

/// Structural constraints, everything but the two thresholds. Returns each violated id once, sorted.
pub fn structural_violations(ctx: &SlotContext<'_>, cache: &CacheDecision, offra: &OffRaDecision) -> Vec<ConstraintId> {
    let mut out = Vec::new();
    let n = ctx.num_tds();
    let m_count = ctx.cfg.num_es;
    if offra.targets.len() != n || offra.compute.len() != n || offra.bandwidth.len() != n {
        out.push(ConstraintId::SingleTarget);
        return out;
    }
    let mut compute_sum = vec![0.0; m_count];
    let mut band_sum = vec![0.0; m_count];
    let in_unit = |x: f64| (0.0..=1.0).contains(&x);
    for i in 0..n {
        let (target, f, b) = (offra.targets[i], offra.compute[i], offra.bandwidth[i]);
        match target {
            Target::Edge(m) if m >= m_count => out.push(ConstraintId::SingleTarget),
            Target::Edge(m) => {
                if !cache.get(m, ctx.tasks[i].service) || f <= 0.0 {
                    out.push(ConstraintId::EdgeService);
                }
                compute_sum[m] += f;
            }
            _ => {
                if f != 0.0 {
                    out.push(ConstraintId::EdgeService);
                }
            }
        }
        if !in_unit(f) {
            out.push(ConstraintId::ComputeShare);
        }
        if !in_unit(b) {
            out.push(ConstraintId::BandwidthShare);
        }
        if target == Target::Local {
            if b != 0.0 {
                out.push(ConstraintId::IdleBandwidth);
            }
        } else {
            band_sum[ctx.assoc(i)] += b;
        }
    }
    if !cache.fits(ctx.catalog, ctx.cfg.es_cache_bits) {
        out.push(ConstraintId::CacheCapacity);
    }
    if compute_sum.iter().any(|&s| s > 1.0 + SHARE_TOLERANCE) {
        out.push(ConstraintId::ComputeShare);
    }
    if band_sum.iter().any(|&s| s > 1.0 + SHARE_TOLERANCE) {
        out.push(ConstraintId::BandwidthShare);
    }
    out.sort();
    out.dedup();
    out
}

/// Per-TD delay, energy and QoS. Rejects structurally infeasible decisions.
pub fn evaluate_slot(ctx: &SlotContext<'_>, cache: &CacheDecision, offra: &OffRaDecision) -> Result<SlotOutcome, EvalError> {
    if let Some(&id) = structural_violations(ctx, cache, offra).first() {
        let td = first_offender(ctx, cache, offra, id);
        return Err(EvalError::Constraint(id, td));
    }
    let n = ctx.num_tds();
    let mut out = SlotOutcome {
        delay: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        qos: Vec::with_capacity(n),
        energy_ok: Vec::with_capacity(n),
        delay_ok: Vec::with_capacity(n),
    };
    for i in 0..n {
        let target = offra.targets[i];
        if target.is_offloaded() && offra.bandwidth[i] * ctx.full_rate(i) <= 0.0 {
            return Err(EvalError::ZeroRate(i));
        }
        let (t, e) = ctx.delay_energy(i, target, offra.compute[i], offra.bandwidth[i]);
        out.delay.push(t);
        out.energy.push(e);
        out.qos.push(qos(ctx.cfg, t, e));
        out.energy_ok.push(e <= ctx.cfg.energy_threshold_j);
        out.delay_ok.push(t <= ctx.cfg.delay_threshold_s);
    }
    Ok(out)
}

fn first_offender(ctx: &SlotContext<'_>, cache: &CacheDecision, offra: &OffRaDecision, id: ConstraintId) -> usize {
    (0..offra.targets.len().min(ctx.num_tds()))
        .find(|&i| match (id, offra.targets[i]) {
            (ConstraintId::EdgeService, Target::Edge(m)) => {
                m < cache.num_es() && (!cache.get(m, ctx.tasks[i].service) || offra.compute[i] <= 0.0)
            }
            (ConstraintId::EdgeService, _) => offra.compute[i] != 0.0,
            (ConstraintId::IdleBandwidth, Target::Local) => offra.bandwidth[i] != 0.0,
            (ConstraintId::SingleTarget, Target::Edge(m)) => m >= cache.num_es(),
            _ => false,
        })
        .unwrap_or(0)
}

/// Every violated constraint, thresholds included; empty iff feasible.
pub fn check_feasibility(ctx: &SlotContext<'_>, cache: &CacheDecision, offra: &OffRaDecision) -> Vec<ConstraintId> {
    let mut ids = structural_violations(ctx, cache, offra);
    if !ids.is_empty() {
        return ids;
    }
    match evaluate_slot(ctx, cache, offra) {
        Ok(outcome) => {
            if outcome.energy_ok.iter().any(|ok| !ok) {
                ids.push(ConstraintId::Energy);
            }
            if outcome.delay_ok.iter().any(|ok| !ok) {
                ids.push(ConstraintId::Delay);
            }
        }
        // a zero-rate offload never finishes
        Err(_) => ids.push(ConstraintId::Delay),
    }
    ids
}
