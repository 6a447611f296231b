//! No-regret, no-violation learning in repeated contextual games whose
//! rewards and constraints are unknown and observed only through noisy
//! bandit feedback.
//!
//! Each player models its reward and constraint functions with Gaussian
//! processes, filters out actions whose constraint lower confidence bound is
//! positive, and runs a sleeping-experts algorithm per context on the reward
//! upper confidence bounds.

pub mod error;
pub mod experts;
pub mod game;
pub mod gp;
pub mod kernels;
pub mod metrics;
pub mod strategy;

pub use error::{Error, Result};
pub use experts::{HedgeState, SleepingExpertState};
pub use game::{
    context_schedule, generate_continuous_game, generate_random_game, run, Context, ContextSpace, Feedback,
    GameDefinition, GeneratorParams, Payoff, RoundRecord, RunStatus, ScheduleMode, Trajectory,
};
pub use gp::{beta, ConfidenceParams, GpModel};
pub use kernels::KernelSpec;
pub use metrics::{MetricsReport, RegretConvention};
pub use strategy::{Algorithm, ContextMode, EpsilonChoice, ExpertRule, PlayerConfig, PlayerState, Selection};
