//! Static system parameters.
//!
//! Field names double as the JSON config schema consumed by the harness.
//! Every quantity is stored in base SI units (bits, Hz, W, J, s, m).

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::units::{dbm_to_watts, gb_to_bits, kb_to_bits, BPS_PER_MBPS, HZ_PER_GHZ, HZ_PER_MHZ};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Number of edge servers (M).
    pub num_es: usize,
    /// Number of terminal devices (N).
    pub num_tds: usize,
    /// Number of service / task types (F).
    pub num_services: usize,
    pub es_bandwidth_hz: f64,
    pub es_compute_hz: f64,
    pub es_cache_bits: f64,
    pub cloud_compute_hz: f64,
    pub td_compute_hz: f64,
    pub td_tx_power_w: f64,
    /// Effective switched capacitance of the TD chip.
    pub energy_coeff: f64,
    pub noise_power_w: f64,
    pub path_loss_exp: f64,
    /// ES to cloud wired rate.
    pub backhaul_bps: f64,
    /// ES to ES wired rate.
    pub coop_bps: f64,
    pub qos_delay_weight: f64,
    pub qos_energy_weight: f64,
    /// Weight of the switching cost in the long-term utility.
    pub cost_balance: f64,
    pub delay_threshold_s: f64,
    pub energy_threshold_j: f64,
    pub zipf_s: f64,
    /// Large timescale slots per episode (I).
    pub large_slots: usize,
    /// Small timescale slots per large slot (K).
    pub small_slots: usize,
    pub area_side_m: f64,
    pub input_min_bits: f64,
    pub input_max_bits: f64,
    pub cache_min_bits: f64,
    pub cache_max_bits: f64,
    pub density_min: f64,
    pub density_max: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_es: 2,
            num_tds: 20,
            num_services: 10,
            es_bandwidth_hz: 20.0 * HZ_PER_MHZ,
            es_compute_hz: 20.0 * HZ_PER_GHZ,
            es_cache_bits: gb_to_bits(50.0),
            cloud_compute_hz: 5.0 * HZ_PER_GHZ,
            td_compute_hz: 1.0 * HZ_PER_GHZ,
            td_tx_power_w: dbm_to_watts(20.0),
            energy_coeff: 5.0e-27,
            noise_power_w: dbm_to_watts(-114.0),
            path_loss_exp: 2.0,
            backhaul_bps: 200.0 * BPS_PER_MBPS,
            coop_bps: 20.0 * BPS_PER_MBPS,
            qos_delay_weight: 0.5,
            qos_energy_weight: 0.5,
            cost_balance: 0.001,
            delay_threshold_s: DEFAULT_DELAY_THRESHOLD_S,
            energy_threshold_j: DEFAULT_ENERGY_THRESHOLD_J,
            zipf_s: 0.8,
            large_slots: 20,
            small_slots: 5,
            area_side_m: 500.0,
            input_min_bits: kb_to_bits(500.0),
            input_max_bits: kb_to_bits(5000.0),
            cache_min_bits: gb_to_bits(2.0),
            cache_max_bits: gb_to_bits(20.0),
            density_min: 400.0,
            density_max: 1000.0,
        }
    }
}

/// Local delay of the median default task (about 1.44e10 cycles at 1 GHz), rounded up.
pub const DEFAULT_DELAY_THRESHOLD_S: f64 = 15.0;
/// Local energy of the same median task, rounded up.
pub const DEFAULT_ENERGY_THRESHOLD_J: f64 = 75.0;

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("num_es", self.num_es),
            ("num_tds", self.num_tds),
            ("num_services", self.num_services),
            ("large_slots", self.large_slots),
            ("small_slots", self.small_slots),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        if self.num_es + 2 > u8::MAX as usize {
            return Err(ConfigError::Invalid("num_es too large".into()));
        }
        let positive = [
            ("es_bandwidth_hz", self.es_bandwidth_hz),
            ("es_compute_hz", self.es_compute_hz),
            ("cloud_compute_hz", self.cloud_compute_hz),
            ("td_compute_hz", self.td_compute_hz),
            ("td_tx_power_w", self.td_tx_power_w),
            ("energy_coeff", self.energy_coeff),
            ("noise_power_w", self.noise_power_w),
            ("path_loss_exp", self.path_loss_exp),
            ("backhaul_bps", self.backhaul_bps),
            ("coop_bps", self.coop_bps),
            ("delay_threshold_s", self.delay_threshold_s),
            ("energy_threshold_j", self.energy_threshold_j),
            ("zipf_s", self.zipf_s),
            ("area_side_m", self.area_side_m),
            ("input_min_bits", self.input_min_bits),
            ("cache_min_bits", self.cache_min_bits),
            ("density_min", self.density_min),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.es_cache_bits.is_finite() && self.es_cache_bits >= 0.0) {
            return Err(ConfigError::Invalid("es_cache_bits must be >= 0".into()));
        }
        if !(self.cost_balance.is_finite() && self.cost_balance >= 0.0) {
            return Err(ConfigError::Invalid("cost_balance must be >= 0".into()));
        }
        for (name, lo, hi) in [
            ("input", self.input_min_bits, self.input_max_bits),
            ("cache", self.cache_min_bits, self.cache_max_bits),
            ("density", self.density_min, self.density_max),
        ] {
            if !(hi.is_finite() && hi >= lo) {
                return Err(ConfigError::Invalid(format!("{name} range is empty: [{lo}, {hi}]")));
            }
        }
        let (a, b) = (self.qos_delay_weight, self.qos_energy_weight);
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || (a + b - 1.0).abs() > 1e-12 {
            return Err(ConfigError::Invalid(format!(
                "QoS weights must lie in [0,1] and sum to 1, got {a} + {b}"
            )));
        }
        Ok(())
    }

    /// Number of distinct offload targets: local, each ES, cloud.
    pub fn num_targets(&self) -> usize {
        self.num_es + 2
    }

    /// Width of one flattened small-timescale state `{c, g, p}`.
    pub fn state_width(&self) -> usize {
        2 * self.num_es * self.num_services + self.num_services
    }

    pub fn action_width(&self) -> usize {
        self.num_es * self.num_services
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.state_width(), 2 * 2 * 10 + 10);
        assert_eq!(cfg.num_targets(), 4);
    }

    #[test]
    fn rejects_bad_weights() {
        let cfg = SystemConfig { qos_delay_weight: 0.6, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_zero_counts() {
        let cfg = SystemConfig { num_tds: 0, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig { small_slots: 0, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: SystemConfig = serde_json::from_str(r#"{"num_es": 3}"#).unwrap();
        assert_eq!(cfg.num_es, 3);
        assert_eq!(cfg.num_tds, 20);
        assert!(serde_json::from_str::<SystemConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
