//! Agent-based trial simulation: synthetic cohort, step response model and
//! the day-tick loop that runs all four arms side by side.

pub mod config;
pub mod population;
pub mod trial;

pub use config::{AttritionConfig, ConfigError, PolicyConfig, PopulationConfig, ResponseConfig, TrialConfig};
pub use population::{generate_population, sample_feedback, simulate_day, Delivery, SimParticipant, UserResponseModel};
pub use trial::{run_trial, run_trial_with, GreedyChoice, LearnerDay, SimError, TrialLog, Withdrawal};
