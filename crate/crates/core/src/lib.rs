//! Decentralized multi-agent reinforcement learning with learned reward
//! sharing over a communication graph.
//!
//! Each agent runs two policies. A high-level policy maps its observation to
//! sharing weights over its neighborhood; a low-level Q-learner picks actions
//! given the observation and the weights its neighbors send it. Rewards are
//! redistributed along the sharing weights, and the two levels are trained
//! alternately, with each agent's critic gradient routed back to the
//! neighbors that control its incoming weights.

pub mod env;
pub mod error;
pub mod harness;
pub mod high_level;
pub mod low_level;
pub mod nn;
pub mod oracle;
pub mod sharing;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
pub use sharing::{selfishness, share_rewards, NeighborMap, WeightAssignment};
pub use topology::{AgentId, SharingGraph};
