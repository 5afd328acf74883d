//! Adaptive physical-activity nudging.
//!
//! Four delivery policies (no nudges, uniformly random nudges, a fixed
//! barrier-weighted policy, and an ε-greedy contextual bandit over learned
//! per-action reward models) share one action space of 6 behavioral themes
//! × 2 delivery times. Around them sit the proximal-reward and feature
//! pipeline, a boosted-tree learner, an agent-based trial simulator and the
//! statistics used to compare arms.
//!
//! The `examples/` directory walks through each piece; the `pearl` binary
//! wraps [`cli`] for `simulate`, `analyze` and `report`.

pub mod baseline;
pub mod cli;
pub mod domain;
pub mod features;
pub mod gbrt;
pub mod io;
pub mod learner;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod stats;

pub use baseline::{compute_baseline, BaselinePattern, Period};
pub use domain::{Action, Arm, DecisionRecord, DeliveryTime, NudgeTheme, ParticipantProfile, StepRecord};
pub use features::{compute_reward, FeatureVector};
pub use learner::{fit_reward_models, greedy_action, LearnerConfig, RewardModel};
pub use sim::{run_trial, TrialConfig, TrialLog};
