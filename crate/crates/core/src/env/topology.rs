use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::EvalError;

/// Closest a TD may sit to its ES; keeps path loss finite.
const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub es_pos: Vec<[f64; 2]>,
    pub td_pos: Vec<[f64; 2]>,
    /// Associated ES of each TD.
    pub assoc: Vec<usize>,
    /// `dist[n][m]`, metres.
    pub dist: Vec<Vec<f64>>,
}

impl Topology {
    /// ESs on an even grid over the square, TDs uniform, nearest-ES association.
    pub fn generate<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Self {
        let side = cfg.area_side_m;
        let es_pos = es_grid(cfg.num_es, side);
        let td_pos = (0..cfg.num_tds)
            .map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)])
            .collect();
        Self::from_positions(es_pos, td_pos)
    }

    pub fn from_positions(es_pos: Vec<[f64; 2]>, td_pos: Vec<[f64; 2]>) -> Self {
        let dist: Vec<Vec<f64>> = td_pos
            .iter()
            .map(|td| {
                es_pos
                    .iter()
                    .map(|es| {
                        let d = ((td[0] - es[0]).powi(2) + (td[1] - es[1]).powi(2)).sqrt();
                        d.max(MIN_DISTANCE_M)
                    })
                    .collect()
            })
            .collect();
        let assoc = dist
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (m, &d)| if d < best.1 { (m, d) } else { best })
                    .0
            })
            .collect();
        Self { es_pos, td_pos, assoc, dist }
    }

    pub fn num_tds(&self) -> usize {
        self.td_pos.len()
    }

    pub fn num_es(&self) -> usize {
        self.es_pos.len()
    }

    /// Distance from each TD to its associated ES.
    pub fn uplink_distance(&self, n: usize) -> f64 {
        self.dist[n][self.assoc[n]]
    }
}

fn es_grid(m: usize, side: f64) -> Vec<[f64; 2]> {
    let cols = (m as f64).sqrt().ceil() as usize;
    let rows = m.div_ceil(cols);
    let (cw, rh) = (side / cols as f64, side / rows as f64);
    (0..m)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            [(c as f64 + 0.5) * cw, (r as f64 + 0.5) * rh]
        })
        .collect()
}

/// Path loss times a small-scale fading power sample.
pub fn channel_gain(dis: f64, alpha_pl: f64, fading: f64) -> Result<f64, EvalError> {
    if dis.is_nan() || dis <= 0.0 {
        return Err(EvalError::NonPositiveDistance(dis));
    }
    Ok(fading * dis.powf(-alpha_pl))
}

/// Rayleigh amplitude fading gives an exponential power gain with unit mean.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

pub fn sample_channel_gain<R: Rng + ?Sized>(dis: f64, alpha_pl: f64, rng: &mut R) -> Result<f64, EvalError> {
    channel_gain(dis, alpha_pl, sample_fading(rng))
}

/// Uplink gains for every TD towards its associated ES for one small slot.
pub fn draw_gains<R: Rng + ?Sized>(topo: &Topology, alpha_pl: f64, rng: &mut R) -> Vec<f64> {
    (0..topo.num_tds())
        .map(|n| sample_channel_gain(topo.uplink_distance(n), alpha_pl, rng).expect("distances clamped positive"))
        .collect()
}

/// Shannon rate of a bandwidth share: `b * W * log2(1 + p h / sigma^2)`.
pub fn uplink_rate(b_frac: f64, bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_w: f64) -> f64 {
    if b_frac <= 0.0 {
        return 0.0;
    }
    b_frac * bandwidth_hz * (1.0 + tx_power_w * gain / noise_w).log2()
}
