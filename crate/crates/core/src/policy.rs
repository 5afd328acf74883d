//! The four arm policies. Each returns the action it picked together with
//! the probability it had of picking it, which is what gets logged for
//! importance weighting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Action, CombSurvey, DeliveryTime, NudgeTheme, TimePreference, N_ACTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    /// `None` for the control arm.
    pub action: Option<Action>,
    pub propensity: f64,
}

/// Probability of the preferred delivery slot in the fixed arm.
pub const PREFERRED_TIME_PROB: f64 = 0.7;

pub fn control_policy() -> PolicyDecision {
    PolicyDecision { action: None, propensity: 1.0 }
}

pub fn random_policy<R: Rng + ?Sized>(rng: &mut R) -> PolicyDecision {
    let action = Action::from_index(rng.random_range(0..N_ACTIONS)).expect("index in range");
    PolicyDecision { action: Some(action), propensity: 1.0 / N_ACTIONS as f64 }
}

/// Per-participant sampling distribution of the fixed arm, set once from
/// the onboarding survey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPolicyState {
    theme_probs: [f64; 6],
    time_probs: [f64; 2],
}

impl FixedPolicyState {
    /// Normalizes barrier scores into theme probabilities. All-zero barriers
    /// give the uniform distribution.
    pub fn from_barriers(barriers: [f64; 6], time_preference: TimePreference) -> Self {
        let total: f64 = barriers.iter().map(|b| b.max(0.0)).sum();
        let theme_probs = if total > 0.0 {
            barriers.map(|b| b.max(0.0) / total)
        } else {
            [1.0 / 6.0; 6]
        };
        let time_probs = match time_preference {
            TimePreference::Morning => [PREFERRED_TIME_PROB, 1.0 - PREFERRED_TIME_PROB],
            TimePreference::Afternoon => [1.0 - PREFERRED_TIME_PROB, PREFERRED_TIME_PROB],
            TimePreference::NoPreference => [0.5, 0.5],
        };
        FixedPolicyState { theme_probs, time_probs }
    }

    pub fn theme_probs(&self) -> &[f64; 6] {
        &self.theme_probs
    }

    pub fn time_probs(&self) -> &[f64; 2] {
        &self.time_probs
    }

    pub fn probability(&self, action: Action) -> f64 {
        self.theme_probs[action.theme.code()] * self.time_probs[action.time.code()]
    }
}

/// Barrier score per theme: 5 minus the theme's mean Likert answer.
pub fn barrier_scores(survey: &CombSurvey) -> [f64; 6] {
    survey.theme_means().map(|m| 5.0 - m)
}

pub fn build_fixed_state(survey: &CombSurvey, time_preference: TimePreference) -> FixedPolicyState {
    FixedPolicyState::from_barriers(barrier_scores(survey), time_preference)
}

fn sample_weighted<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// Theme from the barrier-weighted multinomial, time from the preference
/// Bernoulli, drawn independently.
pub fn fixed_policy<R: Rng + ?Sized>(state: &FixedPolicyState, rng: &mut R) -> PolicyDecision {
    let theme = NudgeTheme::ALL[sample_weighted(&state.theme_probs, rng)];
    let time = DeliveryTime::ALL[sample_weighted(&state.time_probs, rng)];
    let action = Action::new(theme, time);
    PolicyDecision { action: Some(action), propensity: state.probability(action) }
}

/// Probability that ε-greedy with recommendation `greedy` plays `action`.
pub fn egreedy_probability(greedy: Action, epsilon: f64, action: Action) -> f64 {
    let explore = epsilon / N_ACTIONS as f64;
    if action == greedy {
        (1.0 - epsilon) + explore
    } else {
        explore
    }
}

/// With probability ε plays a uniform action over all 12 (the greedy one
/// included), otherwise the greedy recommendation.
pub fn egreedy_policy<R: Rng + ?Sized>(greedy: Action, epsilon: f64, rng: &mut R) -> PolicyDecision {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    let action = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        Action::from_index(rng.random_range(0..N_ACTIONS)).expect("index in range")
    } else {
        greedy
    };
    PolicyDecision { action: Some(action), propensity: egreedy_probability(greedy, epsilon, action) }
}
