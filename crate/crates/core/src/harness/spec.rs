use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agent::AgentParams;
use crate::baselines::SchemeId;
use crate::config::SystemConfig;
use crate::error::ConfigError;
use crate::ga::GaParams;
use crate::units::{gb_to_bits, HZ_PER_GHZ, HZ_PER_MHZ};

/// System parameter varied across a sweep, in the unit of its grid values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    CacheCapacityGb,
    EsCount,
    TdCount,
    BandwidthMhz,
    EsComputeGhz,
}

impl SweepVariable {
    pub fn apply(self, cfg: &mut SystemConfig, value: f64) -> Result<(), ConfigError> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(ConfigError::Invalid(format!("{self} must be a positive integer, got {value}")))
            }
        };
        match self {
            SweepVariable::CacheCapacityGb => cfg.es_cache_bits = gb_to_bits(value),
            SweepVariable::EsCount => cfg.num_es = count()?,
            SweepVariable::TdCount => cfg.num_tds = count()?,
            SweepVariable::BandwidthMhz => cfg.es_bandwidth_hz = value * HZ_PER_MHZ,
            SweepVariable::EsComputeGhz => cfg.es_compute_hz = value * HZ_PER_GHZ,
        }
        Ok(())
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// Dump of Improved-GA and plain-GA best-fitness traces on default slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaTraceSpec {
    pub generations: usize,
    /// Independent slots (and GA seeds) to trace.
    pub runs: usize,
}

impl Default for GaTraceSpec {
    fn default() -> Self {
        Self { generations: 40, runs: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub name: String,
    pub system: SystemConfig,
    pub schemes: Vec<SchemeId>,
    pub sweep: Option<Sweep>,
    /// Training episodes of the learning schemes.
    pub episodes: usize,
    /// Greedy episodes every scheme is scored on after training.
    pub eval_episodes: usize,
    pub replications: usize,
    pub seed: u64,
    pub ga: GaParams,
    pub agent: AgentParams,
    pub ga_trace: Option<GaTraceSpec>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            system: SystemConfig::default(),
            schemes: vec![SchemeId::DglDdpg],
            sweep: None,
            episodes: 300,
            eval_episodes: 10,
            replications: 10,
            seed: 0,
            ga: GaParams::default(),
            agent: AgentParams::default(),
            ga_trace: None,
        }
    }
}

impl ExperimentSpec {
    /// Applies a JSON overlay; nested objects merge field by field and
    /// anything else replaces the base value.
    pub fn with_overlay(&self, overlay: &Value) -> Result<Self, ConfigError> {
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overlay);
        let spec: Self = serde_json::from_value(base).map_err(classify)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let overlay: Value = serde_json::from_str(text)?;
        Self::default().with_overlay(&overlay)
    }

    /// Grid values; a spec without a sweep has one unnamed point.
    pub fn grid(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    /// System configuration at a grid point.
    pub fn system_at(&self, value: Option<f64>) -> Result<SystemConfig, ConfigError> {
        let mut cfg = self.system.clone();
        if let (Some(sweep), Some(v)) = (&self.sweep, value) {
            sweep.variable.apply(&mut cfg, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.replications == 0 {
            return Err(ConfigError::Invalid("replications must be at least 1".into()));
        }
        if self.schemes.is_empty() && self.ga_trace.is_none() {
            return Err(ConfigError::Invalid("nothing to run: no schemes and no ga_trace".into()));
        }
        if !self.schemes.is_empty() && self.eval_episodes == 0 {
            return Err(ConfigError::Invalid("eval_episodes must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(ConfigError::Invalid("sweep grid is empty".into()));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::Invalid("sweep values must be finite".into()));
            }
        }
        if let Some(t) = &self.ga_trace {
            if t.runs == 0 {
                return Err(ConfigError::Invalid("ga_trace.runs must be at least 1".into()));
            }
        }
        self.ga.validate()?;
        self.agent.validate()?;
        for v in self.grid() {
            self.system_at(v)?;
        }
        Ok(())
    }
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

fn classify(e: serde_json::Error) -> ConfigError {
    let msg = e.to_string();
    let quoted = || msg.split('`').nth(1).unwrap_or_default().to_string();
    if msg.starts_with("unknown field") {
        ConfigError::UnknownField(quoted())
    } else if msg.starts_with("unknown variant") {
        ConfigError::UnknownScheme(quoted())
    } else {
        ConfigError::Parse(e)
    }
}

/// Named experiment setups.
pub fn presets() -> Vec<ExperimentSpec> {
    let sweep = |name: &str, variable, values: &[f64]| ExperimentSpec {
        name: name.into(),
        schemes: SchemeId::ALL.to_vec(),
        sweep: Some(Sweep {
            variable,
            values: values.to_vec(),
        }),
        ..ExperimentSpec::default()
    };
    vec![
        ExperimentSpec {
            name: "fig4".into(),
            schemes: vec![],
            ga_trace: Some(GaTraceSpec::default()),
            ..ExperimentSpec::default()
        },
        ExperimentSpec {
            name: "fig_train".into(),
            schemes: vec![SchemeId::DglDdpg, SchemeId::Ddpg],
            ..ExperimentSpec::default()
        },
        sweep("fig5", SweepVariable::CacheCapacityGb, &[20.0, 30.0, 40.0, 50.0, 60.0]),
        sweep("fig6", SweepVariable::EsCount, &[2.0, 3.0, 4.0, 5.0]),
        sweep("fig7", SweepVariable::TdCount, &[20.0, 30.0, 40.0, 50.0]),
        sweep("fig8", SweepVariable::BandwidthMhz, &[10.0, 15.0, 20.0, 25.0, 30.0]),
        sweep("fig9", SweepVariable::EsComputeGhz, &[20.0, 22.5, 25.0, 27.5, 30.0]),
    ]
}

pub fn preset(name: &str) -> Result<ExperimentSpec, ConfigError> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn presets_are_valid() {
        for p in presets() {
            p.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
        assert_eq!(preset("fig6").unwrap().sweep.unwrap().values, vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(preset("fig7").unwrap().sweep.unwrap().values, vec![20.0, 30.0, 40.0, 50.0]);
        let fig9 = preset("fig9").unwrap().sweep.unwrap().values;
        assert_eq!((fig9[0], fig9[fig9.len() - 1]), (20.0, 30.0));
        assert!(preset("fig10").is_err());
    }

    #[test]
    fn overlay_merges_nested_fields() {
        let base = preset("fig6").unwrap();
        let spec = base
            .with_overlay(&json!({"system": {"num_tds": 7}, "replications": 2, "schemes": ["DDPG"]}))
            .unwrap();
        assert_eq!(spec.system.num_tds, 7);
        assert_eq!(spec.system.num_services, base.system.num_services);
        assert_eq!(spec.replications, 2);
        assert_eq!(spec.schemes, vec![SchemeId::Ddpg]);
        assert_eq!(spec.sweep, base.sweep);
    }

    #[test]
    fn unknown_names_are_rejected() {
        let e = ExperimentSpec::from_json(r#"{"system": {"num_edges": 3}}"#).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownField(_)), "{e:?}");
        let e = ExperimentSpec::from_json(r#"{"schemes": ["BEST"]}"#).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownScheme(_)), "{e:?}");
        let e = ExperimentSpec::from_json(r#"{"replications": 0}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)), "{e:?}");
        let e = ExperimentSpec::from_json(r#"{"sweep": {"variable": "es_count", "values": []}}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)), "{e:?}");
        let e = ExperimentSpec::from_json(r#"{"sweep": {"variable": "es_count", "values": [2.5]}}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)), "{e:?}");
    }

    #[test]
    fn sweep_units() {
        let mut cfg = SystemConfig::default();
        SweepVariable::BandwidthMhz.apply(&mut cfg, 15.0).unwrap();
        assert_eq!(cfg.es_bandwidth_hz, 15e6);
        SweepVariable::CacheCapacityGb.apply(&mut cfg, 20.0).unwrap();
        assert_eq!(cfg.es_cache_bits, gb_to_bits(20.0));
        SweepVariable::EsComputeGhz.apply(&mut cfg, 22.5).unwrap();
        assert_eq!(cfg.es_compute_hz, 22.5e9);
        assert_eq!(SweepVariable::TdCount.to_string(), "td_count");
    }
}
