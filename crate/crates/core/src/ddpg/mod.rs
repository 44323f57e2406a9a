//! Off-policy actor-critic training.

pub mod agent;
pub mod milestone;
pub mod noise;
pub mod replay;
pub mod train;

pub use agent::{actor_update_with, Agent};
pub use milestone::{rolling_mean, MilestoneRecord, MilestoneRule};
pub use noise::OuNoise;
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{LogRow, TrainConfig, TrainSummary, Trainer};
