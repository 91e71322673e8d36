//! Two-timescale resource allocation for collaborative multi-edge MEC systems.
//!
//! Per small slot an improved genetic algorithm picks offloading targets and
//! compute / bandwidth shares; per large slot an LSTM-augmented deterministic
//! policy-gradient agent picks which services each edge server caches.

pub mod agent;
pub mod baselines;
pub mod config;
pub mod env;
pub mod error;
pub mod ga;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod units;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use baselines::SchemeId;
pub use harness::{ExperimentSpec, RunOptions};
