//! Hybrid chromosome, structural repair and fitness of the one-shot Off-RA problem.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{evaluate_slot, qos, CacheDecision, OffRaDecision, SlotContext, SlotOutcome, Target};

/// Fitness of any individual breaking a delay or energy threshold.
pub const VIOLATION_FITNESS: f64 = 0.049_787_068_367_863_944; // e^-3

/// Three blocks of length N: target genes, compute shares, bandwidth shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub targets: Vec<usize>,
    pub compute: Vec<f64>,
    pub bandwidth: Vec<f64>,
}

impl Chromosome {
    pub fn all_local(n: usize) -> Self {
        Self {
            targets: vec![0; n],
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

    pub fn encode(decision: &OffRaDecision, num_es: usize) -> Self {
        Self {
            targets: decision.targets.iter().map(|t| t.to_gene(num_es)).collect(),
            compute: decision.compute.clone(),
            bandwidth: decision.bandwidth.clone(),
        }
    }
}

/// Which offload targets a TD may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TargetDomain {
    /// Local, any ES, cloud.
    #[default]
    Cooperative,
    /// Local, the associated ES, cloud.
    NoCooperation,
}

/// How compute and bandwidth shares are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ShareMode {
    /// Taken from the continuous gene blocks.
    #[default]
    Genes,
    /// Equal split among the TDs using each ES; fraction genes are ignored.
    EqualSplit,
}

/// One Off-RA instance: a slot context under a fixed cache placement.
#[derive(Debug, Clone)]
pub struct OffRaProblem<'a> {
    pub ctx: &'a SlotContext<'a>,
    pub cache: &'a CacheDecision,
    pub domain: TargetDomain,
    pub shares: ShareMode,
}

/// Evaluated individual.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub decision: OffRaDecision,
    pub outcome: SlotOutcome,
    pub fitness: f64,
}

impl<'a> OffRaProblem<'a> {
    pub fn new(ctx: &'a SlotContext<'a>, cache: &'a CacheDecision) -> Self {
        Self {
            ctx,
            cache,
            domain: TargetDomain::Cooperative,
            shares: ShareMode::Genes,
        }
    }

    pub fn with_domain(mut self, domain: TargetDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_shares(mut self, shares: ShareMode) -> Self {
        self.shares = shares;
        self
    }

    pub fn num_tds(&self) -> usize {
        self.ctx.num_tds()
    }

    pub fn num_es(&self) -> usize {
        self.ctx.cfg.num_es
    }

    /// Target genes TD `n` may carry.
    pub fn allowed_genes(&self, n: usize) -> Vec<usize> {
        let m = self.num_es();
        match self.domain {
            TargetDomain::Cooperative => (0..m + 2).collect(),
            TargetDomain::NoCooperation => vec![0, self.ctx.assoc(n) + 1, m + 1],
        }
    }

    pub fn random_chromosome<R: Rng + ?Sized>(&self, rng: &mut R) -> Chromosome {
        let n = self.num_tds();
        let targets = (0..n)
            .map(|i| {
                let allowed = self.allowed_genes(i);
                allowed[rng.random_range(0..allowed.len())]
            })
            .collect();
        let compute = (0..n).map(|_| rng.random::<f64>()).collect();
        let bandwidth = (0..n).map(|_| rng.random::<f64>()).collect();
        Chromosome {
            targets,
            compute,
            bandwidth,
        }
    }

    /// Maps a chromosome onto a structurally feasible decision.
    ///
    /// Repairs, in order: disallowed or uncached ES targets and ES targets
    /// without compute go to the cloud; offloads without bandwidth stay local;
    /// shares that a target cannot use are zeroed; per-ES share sums above 1
    /// are divided by the sum.
    pub fn decode(&self, chrom: &Chromosome) -> OffRaDecision {
        let n = self.num_tds();
        let m_count = self.num_es();
        assert_eq!(chrom.len(), n, "chromosome length must equal the number of TDs");
        let equal = self.shares == ShareMode::EqualSplit;
        let mut targets = Vec::with_capacity(n);
        let mut compute = Vec::with_capacity(n);
        let mut bandwidth = Vec::with_capacity(n);
        for i in 0..n {
            let mut f = chrom.compute[i].clamp(0.0, 1.0);
            let mut b = chrom.bandwidth[i].clamp(0.0, 1.0);
            let mut t = Target::from_gene(chrom.targets[i], m_count);
            if let Target::Edge(m) = t {
                let disallowed = self.domain == TargetDomain::NoCooperation && m != self.ctx.assoc(i);
                if disallowed || !self.cache.get(m, self.ctx.tasks[i].service) || (!equal && f <= 0.0) {
                    t = Target::Cloud;
                }
            }
            if t.is_offloaded() && !equal && b <= 0.0 {
                t = Target::Local;
            }
            match t {
                Target::Local => {
                    f = 0.0;
                    b = 0.0;
                }
                Target::Cloud => f = 0.0,
                Target::Edge(_) => {}
            }
            targets.push(t);
            compute.push(f);
            bandwidth.push(b);
        }

        let mut compute_load = vec![0.0; m_count];
        let mut band_load = vec![0.0; m_count];
        let mut compute_users = vec![0usize; m_count];
        let mut band_users = vec![0usize; m_count];
        for i in 0..n {
            if let Target::Edge(m) = targets[i] {
                compute_load[m] += compute[i];
                compute_users[m] += 1;
            }
            if targets[i].is_offloaded() {
                let a = self.ctx.assoc(i);
                band_load[a] += bandwidth[i];
                band_users[a] += 1;
            }
        }
        for i in 0..n {
            if let Target::Edge(m) = targets[i] {
                if equal {
                    compute[i] = 1.0 / compute_users[m] as f64;
                } else if compute_load[m] > 1.0 + 1e-12 {
                    compute[i] /= compute_load[m];
                }
            }
            if targets[i].is_offloaded() {
                let a = self.ctx.assoc(i);
                if equal {
                    bandwidth[i] = 1.0 / band_users[a] as f64;
                } else if band_load[a] > 1.0 + 1e-12 {
                    bandwidth[i] /= band_load[a];
                }
            }
        }
        OffRaDecision {
            targets,
            compute,
            bandwidth,
        }
    }

    pub fn evaluate(&self, chrom: &Chromosome) -> Evaluation {
        let decision = self.decode(chrom);
        let outcome = evaluate_slot(self.ctx, self.cache, &decision).expect("decode yields structurally feasible decisions");
        let fitness = selection_fitness(&outcome);
        Evaluation {
            decision,
            outcome,
            fitness,
        }
    }

    /// Same value as `evaluate(chrom).fitness` without building the outcome.
    pub fn fitness(&self, chrom: &Chromosome) -> f64 {
        let d = self.decode(chrom);
        let cfg = self.ctx.cfg;
        let mut sum = -0.0;
        for i in 0..d.len() {
            let (t, e) = self.ctx.delay_energy(i, d.targets[i], d.compute[i], d.bandwidth[i]);
            if !(t <= cfg.delay_threshold_s && e <= cfg.energy_threshold_j) {
                return VIOLATION_FITNESS;
            }
            sum += qos(cfg, t, e);
        }
        sum.max(VIOLATION_FITNESS)
    }
}

/// Piecewise fitness: `e^-3` on any threshold violation, otherwise the QoS sum.
pub fn raw_fitness(outcome: &SlotOutcome) -> f64 {
    if outcome.all_within_thresholds() {
        outcome.qos_sum()
    } else {
        VIOLATION_FITNESS
    }
}

/// [`raw_fitness`] floored at `e^-3` so roulette probabilities stay positive.
pub fn selection_fitness(outcome: &SlotOutcome) -> f64 {
    raw_fitness(outcome).max(VIOLATION_FITNESS)
}
