use thiserror::Error;

use crate::env::ConstraintId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown config field `{0}`")]
    UnknownField(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("decision violates constraint {0} for TD {1}")]
    Constraint(ConstraintId, usize),
    #[error("TD {0} offloads with zero uplink rate")]
    ZeroRate(usize),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("distance must be > 0, got {0}")]
    NonPositiveDistance(f64),
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input sequence")]
    EmptySequence,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint does not match network: {0}")]
    Mismatch(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("log integrity check failed: {0}")]
    Integrity(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
