use std::io::{Read, Write};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::projection::{project_action, Projection};
use super::replay::Transition;
use crate::config::SystemConfig;
use crate::env::ServiceCatalog;
use crate::error::{CheckpointError, ConfigError, Error, NnError, Result};
use crate::nn::{batch_of_one, stack_rows, Adam, CheckpointReader, CheckpointWriter, Head, NetSpec, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentParams {
    pub gamma: f64,
    /// Soft-update factor.
    pub zeta: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub noise_init: f64,
    pub noise_decay: f64,
    pub noise_floor: f64,
    pub hidden: [usize; 2],
    pub recurrent: usize,
    /// Multiplies rewards before they enter the critic target.
    pub reward_scale: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            zeta: 0.05,
            buffer_capacity: 10_000,
            batch_size: 32,
            actor_lr: 0.001,
            critic_lr: 0.002,
            noise_init: 0.2,
            noise_decay: 0.995,
            noise_floor: 0.01,
            hidden: [128, 64],
            recurrent: 64,
            reward_scale: 0.01,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(format!("agent: {msg}")));
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return bad("zeta must lie in (0, 1]");
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("need 0 < batch size <= buffer capacity");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.noise_init >= 0.0 && self.noise_floor >= 0.0 && self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return bad("invalid noise schedule");
        }
        if self.hidden.contains(&0) || self.recurrent == 0 {
            return bad("layer widths must be positive");
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return bad("reward scale must be positive");
        }
        Ok(())
    }

    /// Exploration stddev during episode `episode`.
    pub fn noise_sigma(&self, episode: u64) -> f64 {
        let e = i32::try_from(episode).unwrap_or(i32::MAX);
        (self.noise_init * self.noise_decay.powi(e)).max(self.noise_floor)
    }
}

/// How the K small-slot observations are condensed into one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoder {
    Lstm,
    /// Only the last observation; no recurrent layer.
    LastState,
}

/// Actor output for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    /// Scores after exploration noise.
    pub scores: Vec<f64>,
    pub projection: Projection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    pub mean_q: f64,
}

/// Actor-critic caching agent with target networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub params: AgentParams,
    pub encoder: Encoder,
    pub actor: Network,
    pub actor_target: Network,
    pub critic: Network,
    pub critic_target: Network,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    /// Episodes completed; drives the noise schedule.
    pub episode: u64,
}

pub fn actor_spec(cfg: &SystemConfig, params: &AgentParams, encoder: Encoder) -> NetSpec {
    NetSpec {
        input: cfg.state_width(),
        extra: 0,
        recurrent: (encoder == Encoder::Lstm).then_some(params.recurrent),
        hidden: params.hidden,
        output: cfg.action_width(),
        head: Head::Sigmoid,
    }
}

pub fn critic_spec(cfg: &SystemConfig, params: &AgentParams, encoder: Encoder) -> NetSpec {
    NetSpec {
        extra: cfg.action_width(),
        output: 1,
        head: Head::Identity,
        ..actor_spec(cfg, params, encoder)
    }
}

fn batch_seq(batch: &[&Transition], pick: impl Fn(&Transition) -> &Vec<Vec<f64>>) -> Vec<Array2<f64>> {
    let k = pick(batch[0]).len();
    (0..k)
        .map(|i| {
            let rows: Vec<&[f64]> = batch.iter().map(|t| pick(t)[i].as_slice()).collect();
            stack_rows(&rows)
        })
        .collect()
}

fn ensure_finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Diverged(format!("{what} is {x}")))
    }
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(cfg: &SystemConfig, params: AgentParams, encoder: Encoder, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let actor = Network::new(actor_spec(cfg, &params, encoder), rng)?;
        let critic = Network::new(critic_spec(cfg, &params, encoder), rng)?;
        Ok(Self {
            actor_opt: Adam::new(actor.params.len(), params.actor_lr),
            critic_opt: Adam::new(critic.params.len(), params.critic_lr),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            params,
            encoder,
            episode: 0,
        })
    }

    pub fn noise_sigma(&self) -> f64 {
        self.params.noise_sigma(self.episode)
    }

    /// Deterministic actor scores for one observation sequence.
    pub fn scores(&self, seq: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.actor.forward(&batch_of_one(seq), None)?.into_raw_vec_and_offset().0)
    }

    /// Caching decision; Gaussian noise is added to the scores when exploring.
    pub fn act<R: Rng + ?Sized>(
        &self,
        seq: &[Vec<f64>],
        explore: bool,
        catalog: &ServiceCatalog,
        cfg: &SystemConfig,
        rng: &mut R,
    ) -> Result<Action> {
        let mut scores = self.scores(seq)?;
        let sigma = self.noise_sigma();
        if explore && sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).expect("finite sigma");
            for s in &mut scores {
                *s += noise.sample(rng);
            }
        }
        let projection = project_action(&scores, catalog, cfg);
        Ok(Action { scores, projection })
    }

    /// Bellman targets `Y = scale * r + gamma * Q'(s', mu'(s'))`.
    pub fn critic_targets(&self, batch: &[&Transition]) -> Result<Array2<f64>> {
        let next = batch_seq(batch, |t| &t.next_state);
        let next_action = self.actor_target.forward(&next, None)?;
        let q_next = self.critic_target.forward(&next, Some(&next_action))?;
        let mut y = q_next * self.params.gamma;
        for (yi, t) in y.iter_mut().zip(batch) {
            *yi += self.params.reward_scale * t.reward;
        }
        Ok(y)
    }

    /// Mean squared Bellman error of the current critic.
    pub fn critic_loss(&self, batch: &[&Transition], targets: &Array2<f64>) -> Result<f64> {
        let seq = batch_seq(batch, |t| &t.state);
        let actions = stack_rows(&batch.iter().map(|t| t.action.as_slice()).collect::<Vec<_>>());
        let q = self.critic.forward(&seq, Some(&actions))?;
        Ok((&q - targets).mapv(|d| d * d).mean().unwrap_or(0.0))
    }

    /// One Adam step on the critic loss; returns the loss before the step.
    pub fn critic_step(&mut self, batch: &[&Transition], targets: &Array2<f64>) -> Result<TrainStats> {
        let seq = batch_seq(batch, |t| &t.state);
        let actions = stack_rows(&batch.iter().map(|t| t.action.as_slice()).collect::<Vec<_>>());
        let tape = self.critic.forward_tape(&seq, Some(&actions))?;
        let diff = &tape.output - targets;
        let n = batch.len() as f64;
        let loss = ensure_finite(diff.mapv(|d| d * d).sum() / n, "critic loss")?;
        let mean_q = tape.output.mean().unwrap_or(0.0);
        let d_out = diff * (2.0 / n);
        let (grads, _) = self.critic.backward(&tape, &d_out)?;
        self.critic_opt.apply(&mut self.critic.params, &grads)?;
        Ok(TrainStats { critic_loss: loss, mean_q })
    }

    /// One Adam step ascending `Q(s, mu(s))` through the critic's action gradient.
    pub fn actor_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        let seq = batch_seq(batch, |t| &t.state);
        let actor_tape = self.actor.forward_tape(&seq, None)?;
        let critic_tape = self.critic.forward_tape(&seq, Some(&actor_tape.output))?;
        let n = batch.len() as f64;
        let objective = ensure_finite(critic_tape.output.mean().unwrap_or(0.0), "actor objective")?;
        let d_q = Array2::from_elem(critic_tape.output.dim(), -1.0 / n);
        let (_, d_action) = self.critic.backward(&critic_tape, &d_q)?;
        let (grads, _) = self.actor.backward(&actor_tape, &d_action)?;
        self.actor_opt.apply(&mut self.actor.params, &grads)?;
        Ok(objective)
    }

    pub fn soft_update(&mut self) {
        self.actor_target.params.soft_update(&self.actor.params, self.params.zeta);
        self.critic_target.params.soft_update(&self.critic.params, self.params.zeta);
    }

    /// Critic step, actor step, then both soft updates.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<TrainStats> {
        if batch.is_empty() {
            return Err(NnError::Shape("empty mini-batch".into()).into());
        }
        let targets = self.critic_targets(batch)?;
        let stats = self.critic_step(batch, &targets)?;
        self.actor_step(batch)?;
        self.soft_update();
        Ok(stats)
    }

    pub fn save<W: Write>(&self, w: W) -> Result<W> {
        let mut ck = CheckpointWriter::new(w)?;
        let meta = serde_json::to_vec(&(self.params, self.encoder)).map_err(|e| CheckpointError::Format(e.to_string()))?;
        ck.bytes(&meta)?;
        for net in [&self.actor, &self.actor_target, &self.critic, &self.critic_target] {
            ck.network(net)?;
        }
        ck.adam(&self.actor_opt)?;
        ck.adam(&self.critic_opt)?;
        ck.u64(self.episode)?;
        Ok(ck.finish()?)
    }

    pub fn load<R: Read>(r: R, cfg: &SystemConfig) -> Result<Self> {
        let mut ck = CheckpointReader::new(r)?;
        let (params, encoder): (AgentParams, Encoder) =
            serde_json::from_slice(&ck.bytes()?).map_err(|e| CheckpointError::Format(e.to_string()))?;
        let a_spec = actor_spec(cfg, &params, encoder);
        let c_spec = critic_spec(cfg, &params, encoder);
        let actor = ck.network(&a_spec)?;
        let actor_target = ck.network(&a_spec)?;
        let critic = ck.network(&c_spec)?;
        let critic_target = ck.network(&c_spec)?;
        let actor_opt = ck.adam(actor.params.len())?;
        let critic_opt = ck.adam(critic.params.len())?;
        let episode = ck.u64()?;
        Ok(Self {
            params,
            encoder,
            actor,
            actor_target,
            critic,
            critic_target,
            actor_opt,
            critic_opt,
            episode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn small() -> (SystemConfig, AgentParams) {
        let cfg = SystemConfig {
            num_services: 3,
            ..SystemConfig::default()
        };
        let params = AgentParams {
            hidden: [8, 6],
            recurrent: 5,
            batch_size: 4,
            ..AgentParams::default()
        };
        (cfg, params)
    }

    fn transitions(cfg: &SystemConfig, n: usize, seed: u64) -> Vec<Transition> {
        let mut rng = SeedStream::new(seed).rng();
        let w = cfg.state_width();
        let seq = |rng: &mut crate::rng::SimRng| -> Vec<Vec<f64>> {
            (0..3).map(|_| (0..w).map(|_| rng.random::<f64>()).collect()).collect()
        };
        (0..n)
            .map(|_| Transition {
                state: seq(&mut rng),
                action: (0..cfg.action_width()).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect(),
                reward: rng.random_range(-5.0..5.0),
                next_state: seq(&mut rng),
            })
            .collect()
    }

    #[test]
    fn noise_schedule() {
        let p = AgentParams::default();
        assert_eq!(p.noise_sigma(0), 0.2);
        assert!((p.noise_sigma(1) - 0.199).abs() < 1e-15);
        assert_eq!(p.noise_sigma(5000), 0.01);
    }

    #[test]
    fn zero_actor_gives_degenerate_scores() {
        let (cfg, params) = small();
        let mut rng = SeedStream::new(1).rng();
        let mut agent = Agent::new(&cfg, params, Encoder::Lstm, &mut rng).unwrap();
        agent.actor = Network::zeros(*agent.actor.spec()).unwrap();
        let seq = vec![vec![0.3; cfg.state_width()]; 5];
        let catalog = ServiceCatalog {
            cache_bits: vec![2e10; 3],
            density: vec![500.0; 3],
            input_min_bits: 4e6,
            input_max_bits: 4e7,
        };
        let a = agent.act(&seq, false, &catalog, &cfg, &mut rng).unwrap();
        assert!(a.scores.iter().all(|&s| s == 0.5));
        // 3 x 20 Gbit at a 400 Gbit ES all fit
        assert!(a.projection.cache.bits().iter().all(|&b| b));
        let b = agent.act(&seq, false, &catalog, &cfg, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gamma_zero_targets_are_rewards() {
        let (cfg, params) = small();
        let mut rng = SeedStream::new(2).rng();
        let agent = Agent::new(&cfg, AgentParams { gamma: 0.0, reward_scale: 1.0, ..params }, Encoder::Lstm, &mut rng).unwrap();
        let ts = transitions(&cfg, 4, 3);
        let batch: Vec<&Transition> = ts.iter().collect();
        let y = agent.critic_targets(&batch).unwrap();
        for (yi, t) in y.iter().zip(&ts) {
            assert_eq!(*yi, t.reward);
        }
    }

    #[test]
    fn unit_zeta_copies_networks() {
        let (cfg, params) = small();
        let mut rng = SeedStream::new(4).rng();
        let mut agent = Agent::new(&cfg, AgentParams { zeta: 1.0, ..params }, Encoder::LastState, &mut rng).unwrap();
        let ts = transitions(&cfg, 4, 5);
        let batch: Vec<&Transition> = ts.iter().collect();
        agent.train_step(&batch).unwrap();
        assert_eq!(agent.actor_target.params, agent.actor.params);
        assert_eq!(agent.critic_target.params, agent.critic.params);
    }

    #[test]
    fn critic_loss_descends_and_checkpoint_round_trips() {
        let (cfg, params) = small();
        let mut rng = SeedStream::new(6).rng();
        let mut agent = Agent::new(&cfg, AgentParams { critic_lr: 1e-4, ..params }, Encoder::Lstm, &mut rng).unwrap();
        let ts = transitions(&cfg, 8, 7);
        let batch: Vec<&Transition> = ts.iter().collect();
        let y = agent.critic_targets(&batch).unwrap();
        let before = agent.critic_step(&batch, &y).unwrap().critic_loss;
        assert!((before - agent.critic_loss(&batch, &y).unwrap()) > 0.0);
        agent.episode = 12;
        let buf = agent.save(Vec::new()).unwrap();
        let back = Agent::load(buf.as_slice(), &cfg).unwrap();
        assert_eq!(back, agent);
    }
}
