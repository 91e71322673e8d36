//! Actor-critic service-caching agent.

mod ddpg;
mod projection;
mod replay;

pub use ddpg::{actor_spec, critic_spec, Action, Agent, AgentParams, Encoder, TrainStats};
pub use projection::{compute_reward, project_action, Projection, Reward};
pub use replay::{ReplayBuffer, Transition};
