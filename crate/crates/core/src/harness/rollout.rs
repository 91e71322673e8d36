//! The two-timescale loop: a caching decision per large slot, then Off-RA
//! and a state update per small slot.

use std::time::Instant;

use crate::agent::{compute_reward, Agent, Encoder, ReplayBuffer, Transition};
use crate::baselines::{ga_all, popular_cache, random_cache, random_off, CacheRule, OffRaRule, RequestStats, SchemeId};
use crate::config::SystemConfig;
use crate::env::{
    evaluate_slot, CacheDecision, Episode, OffRaDecision, ServiceCatalog, SlotContext, SlotInputs, SlotOutcome,
    SmallState, Topology,
};
use crate::error::{Error, Result};
use crate::ga::{solve, solve_plain, GaParams, OffRaProblem, ShareMode, TargetDomain};
use crate::rng::{purpose, SeedStream};

use super::metrics::{episode_metrics, MetricsRow, SlotLog};
use super::spec::ExperimentSpec;

/// Whether an episode trains the agent (noisy actions, updates) or only scores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Train => purpose::TRAIN,
            Phase::Eval => purpose::EVAL,
        }
    }
}

/// Exogenous world of one replication, shared by every scheme and grid point
/// so that schemes are compared on common random numbers.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: SystemConfig,
    pub catalog: ServiceCatalog,
    pub topology: Topology,
    stream: SeedStream,
}

impl World {
    pub fn new(cfg: SystemConfig, root: SeedStream, replication: usize) -> Self {
        let stream = root.derive(&[purpose::ENV, replication as u64]);
        let catalog = ServiceCatalog::generate(&cfg, &mut stream.child(purpose::CATALOG).rng());
        let topology = Topology::generate(&cfg, &mut stream.child(purpose::TOPOLOGY).rng());
        Self {
            cfg,
            catalog,
            topology,
            stream,
        }
    }

    pub fn episode(&self, phase: Phase, index: usize) -> Episode {
        Episode::with_topology(
            &self.cfg,
            self.topology.clone(),
            self.stream.derive(&[phase.tag(), index as u64]),
        )
    }

    pub fn slot_inputs(&self, episode: &Episode, large: usize, small: usize) -> SlotInputs {
        episode.slot_inputs(&self.cfg, &self.catalog, large, small)
    }

    pub fn context<'a>(&'a self, inputs: &'a SlotInputs) -> SlotContext<'a> {
        SlotContext::new(&self.cfg, &self.catalog, &self.topology, &inputs.tasks, &inputs.gains)
    }
}

/// Mutable caching side of a scheme.
#[derive(Debug)]
pub enum CachePolicy {
    Agent { agent: Box<Agent>, buffer: ReplayBuffer },
    Popular(RequestStats),
    Random,
    Joint,
}

impl CachePolicy {
    pub fn new(scheme: SchemeId, spec: &ExperimentSpec, cfg: &SystemConfig, stream: SeedStream) -> Result<Self> {
        let agent = |encoder| -> Result<Self> {
            let agent = Agent::new(cfg, spec.agent, encoder, &mut stream.child(purpose::AGENT_INIT).rng())?;
            Ok(CachePolicy::Agent {
                agent: Box::new(agent),
                buffer: ReplayBuffer::new(spec.agent.buffer_capacity),
            })
        };
        match scheme.cache_rule() {
            CacheRule::LstmAgent => agent(Encoder::Lstm),
            CacheRule::PlainAgent => agent(Encoder::LastState),
            CacheRule::Popular => Ok(CachePolicy::Popular(RequestStats::new(cfg.num_es, cfg.num_services))),
            CacheRule::Random => Ok(CachePolicy::Random),
            CacheRule::JointGa => Ok(CachePolicy::Joint),
        }
    }

    pub fn agent(&self) -> Option<&Agent> {
        match self {
            CachePolicy::Agent { agent, .. } => Some(agent),
            _ => None,
        }
    }
}

/// Off-RA decision and its outcome for one small slot.
pub fn solve_offra(
    rule: OffRaRule,
    ctx: &SlotContext<'_>,
    cache: &CacheDecision,
    ga: &GaParams,
    stream: SeedStream,
) -> Result<(OffRaDecision, SlotOutcome)> {
    let mut rng = stream.rng();
    let problem = OffRaProblem::new(ctx, cache);
    let res = match rule {
        OffRaRule::ImprovedGa => solve(&problem, ga, &mut rng),
        OffRaRule::NoCooperation => solve(&problem.with_domain(TargetDomain::NoCooperation), ga, &mut rng),
        OffRaRule::EqualSplit => solve(&problem.with_shares(ShareMode::EqualSplit), ga, &mut rng),
        OffRaRule::PlainGa => solve_plain(&problem, ga, &mut rng),
        OffRaRule::Random => {
            let decision = random_off(&problem, &mut rng);
            let outcome = evaluate_slot(ctx, cache, &decision)?;
            return Ok((decision, outcome));
        }
    };
    Ok((res.decision, res.outcome))
}

/// Runs one episode and returns its per-large-slot log.
pub fn run_episode(
    world: &World,
    scheme: SchemeId,
    policy: &mut CachePolicy,
    ga: &GaParams,
    phase: Phase,
    index: usize,
    stream: SeedStream,
) -> Result<Vec<SlotLog>> {
    let cfg = &world.cfg;
    let episode = world.episode(phase, index);
    let decisions = stream.derive(&[phase.tag(), index as u64]);
    let train = phase == Phase::Train;

    let mut prev = CacheDecision::empty(cfg.num_es, cfg.num_services);
    let mut state = SmallState::initial(cfg, prev.clone());
    let mut seq = vec![state.features(); cfg.small_slots];
    let mut logs = Vec::with_capacity(cfg.large_slots);

    for large in 0..cfg.large_slots {
        let slot_stream = decisions.derive(&[large as u64]);
        let inputs: Vec<SlotInputs> = (0..cfg.small_slots)
            .map(|k| world.slot_inputs(&episode, large, k))
            .collect();

        let mut first = None;
        let (raw, cache) = match policy {
            CachePolicy::Agent { agent, .. } => {
                let mut rng = slot_stream.child(purpose::AGENT_NOISE).rng();
                let p = agent.act(&seq, train, &world.catalog, cfg, &mut rng)?.projection;
                (p.raw, p.cache)
            }
            CachePolicy::Popular(stats) => {
                let c = popular_cache(stats, &world.catalog, cfg);
                (c.clone(), c)
            }
            CachePolicy::Random => {
                let c = random_cache(&world.catalog, cfg, &mut slot_stream.child(purpose::CACHE).rng());
                (c.clone(), c)
            }
            CachePolicy::Joint => {
                let ctx = world.context(&inputs[0]);
                let r = ga_all(&ctx, &prev, ga, &mut slot_stream.child(purpose::CACHE).rng());
                first = Some((r.decision, r.outcome));
                (r.cache.clone(), r.cache)
            }
        };

        let mut qos = Vec::with_capacity(cfg.small_slots);
        let mut violations = Vec::with_capacity(cfg.small_slots);
        let mut next_seq = Vec::with_capacity(cfg.small_slots);
        for (k, slot) in inputs.iter().enumerate() {
            let ctx = world.context(slot);
            let (decision, outcome) = match first.take() {
                Some(d) => d,
                None => solve_offra(
                    scheme.offra_rule(),
                    &ctx,
                    &cache,
                    ga,
                    slot_stream.derive(&[k as u64]).child(purpose::OFFRA),
                )?,
            };
            state = state.update(&ctx, &cache, &decision, &outcome);
            if let CachePolicy::Popular(stats) = policy {
                stats.record(&ctx);
            }
            next_seq.push(state.features());
            qos.push(outcome.qos_sum());
            violations.push(outcome.violations());
        }

        let reward = compute_reward(qos.iter().sum(), &prev, &raw, &cache, &world.catalog, cfg);
        if let (CachePolicy::Agent { agent, buffer }, true) = (&mut *policy, train) {
            buffer.push(Transition {
                state: std::mem::take(&mut seq),
                action: cache.as_f64(),
                reward: reward.total(),
                next_state: next_seq.clone(),
            });
            let mut rng = slot_stream.child(purpose::AGENT_REPLAY).rng();
            if let Some(batch) = buffer.sample(agent.params.batch_size, &mut rng) {
                agent.train_step(&batch)?;
            }
        }
        logs.push(SlotLog {
            episode: index,
            large,
            switch_cost: reward.cost,
            penalty: reward.penalty,
            qos,
            violations,
        });
        seq = next_seq;
        prev = cache;
    }
    if let (CachePolicy::Agent { agent, .. }, true) = (policy, train) {
        agent.episode += 1;
    }
    Ok(logs)
}

/// One sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub scheme: SchemeId,
    pub value_index: usize,
    pub replication: usize,
}

impl Cell {
    /// File stem for per-cell artifacts.
    pub fn stem(&self) -> String {
        format!("{}_v{}_r{}", self.scheme, self.value_index, self.replication)
    }
}

#[derive(Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub value: Option<f64>,
    pub cfg: SystemConfig,
    pub rows: Vec<MetricsRow>,
    /// Reward sum of each training episode.
    pub rewards: Vec<f64>,
    pub slots: Vec<SlotLog>,
    pub policy: CachePolicy,
}

/// Trains (learning schemes only) and then evaluates one cell.
///
/// Training episodes are numbered `0..episodes` and evaluation episodes
/// follow them, so evaluation rows of every scheme share episode numbers.
pub fn run_cell(spec: &ExperimentSpec, cell: Cell, keep_slots: bool, timing: bool) -> Result<CellResult> {
    let value = spec.grid()[cell.value_index];
    let cfg = spec.system_at(value)?;
    let root = SeedStream::new(spec.seed);
    let world = World::new(cfg, root, cell.replication);
    let stream = root.derive(&[
        purpose::DECISION,
        cell.scheme.tag(),
        cell.value_index as u64,
        cell.replication as u64,
    ]);
    let mut policy = CachePolicy::new(cell.scheme, spec, &world.cfg, stream)?;

    let mut episodes = Vec::new();
    if cell.scheme.learns() {
        episodes.extend((0..spec.episodes).map(|e| (Phase::Train, e, e)));
    }
    episodes.extend((0..spec.eval_episodes).map(|e| (Phase::Eval, e, spec.episodes + e)));

    let mut rows = Vec::with_capacity(episodes.len());
    let mut rewards = Vec::new();
    let mut slots = Vec::new();
    for (phase, index, number) in episodes {
        let start = timing.then(Instant::now);
        let mut log = run_episode(&world, cell.scheme, &mut policy, &spec.ga, phase, index, stream)?;
        for s in &mut log {
            s.episode = number;
        }
        let m = episode_metrics(&log, world.cfg.cost_balance, world.cfg.num_tds);
        let mut row = MetricsRow::new(cell.scheme, value, cell.replication, number, &m);
        if let Some(t) = start {
            row.wall_time = t.elapsed().as_secs_f64();
        }
        row.check_finite()?;
        if phase == Phase::Train {
            if !m.reward.is_finite() {
                return Err(Error::Diverged(format!("reward {} in {} episode {number}", m.reward, cell.stem())));
            }
            rewards.push(m.reward);
        }
        rows.push(row);
        if keep_slots {
            slots.extend(log);
        }
    }
    Ok(CellResult {
        cell,
        value,
        cfg: world.cfg,
        rows,
        rewards,
        slots,
        policy,
    })
}

/// Best-fitness trace of one GA on one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct GaTrace {
    pub solver: &'static str,
    pub run: usize,
    pub trace: Vec<f64>,
}

/// Improved-GA and plain-GA traces on the first slot of `runs` replications,
/// each slot under a random feasible placement.
pub fn ga_traces(spec: &ExperimentSpec, runs: usize, generations: usize) -> Result<Vec<GaTrace>> {
    let cfg = spec.system_at(None)?;
    let root = SeedStream::new(spec.seed);
    let params = GaParams {
        generations,
        ..spec.ga
    };
    let mut out = Vec::with_capacity(2 * runs);
    for run in 0..runs {
        let world = World::new(cfg.clone(), root, run);
        let episode = world.episode(Phase::Train, 0);
        let inputs = world.slot_inputs(&episode, 0, 0);
        let ctx = world.context(&inputs);
        let stream = root.derive(&[purpose::DECISION, 0, run as u64]);
        let cache = random_cache(&world.catalog, &cfg, &mut stream.child(purpose::CACHE).rng());
        let problem = OffRaProblem::new(&ctx, &cache);
        let improved = solve(&problem, &params, &mut stream.child(purpose::OFFRA).rng());
        let plain = solve_plain(&problem, &params, &mut stream.child(purpose::OFFRA + 1).rng());
        out.push(GaTrace {
            solver: "improved",
            run,
            trace: improved.trace,
        });
        out.push(GaTrace {
            solver: "plain",
            run,
            trace: plain.trace,
        });
    }
    Ok(out)
}
