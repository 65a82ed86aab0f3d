//! Deep Q-learning on classic-control tasks with Chebyshev polynomial state
//! features.
//!
//! The crate provides:
//!
//! - [`chebyshev`]: `T_n` by recurrence and the per-dimension feature map
//! - [`nn`]: dense ReLU networks, backpropagation, Adam, checkpoints
//! - [`env`]: CartPole, MountainCar, Acrobot, normalization, reward shaping
//! - [`replay`]: FIFO replay memory with uniform sampling
//! - [`agent`]: the DQN agent shared by the Chebyshev and MLP variants
//! - [`config`] and [`harness`]: multi-seed experiments, CSV curves, summaries
//! - [`check`]: the self-verification suite
//! - [`cli`]: the `chebdqn` command line

pub mod agent;
pub mod chebyshev;
pub mod check;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod replay;

pub use agent::{Agent, AgentConfig, Architecture, EpisodeRecord, EpsilonSchedule, RunRngs};
pub use chebyshev::{ChebyshevBasis, FeatureVector};
pub use config::ExperimentConfig;
pub use env::{EnvId, EnvState, Environment, NormalizationSpec, ShapingSpec};
pub use error::{Error, Result};
pub use nn::{NetworkSpec, QNetwork};
pub use replay::{ReplayBuffer, Transition};
