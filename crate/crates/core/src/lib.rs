//! Vehicular semantic-communication simulator with a GAE-PPO learner,
//! exhaustive oracle and semantic-extraction boundary.

pub mod channel;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod extractor;
pub mod oracle;
pub mod par;
pub mod rl;
pub mod seeding;
pub mod semantics;
pub mod units;

pub use config::{load_config, ExperimentConfig, ScenarioConfig, TrainConfig};
pub use error::{Error, Result};
