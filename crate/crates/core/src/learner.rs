//! Per-action reward models, the greedy recommendation, importance-sampling
//! policy evaluation and the exploration rate.
//!
//! Maximizing the importance-sampled value of a policy over the logged
//! history decomposes into one inverse-propensity-weighted regression per
//! action followed by an argmax, which is what [`fit_reward_models`] and
//! [`greedy_action`] implement.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Action, DecisionRecord, N_ACTIONS};
use crate::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::gbrt::{fit_matrix, BoostedEnsemble, GbrtConfig};
use crate::rng::{stream, Purpose};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("logged propensity at record {index} is {propensity}, must be > 0")]
    ZeroPropensity { index: usize, propensity: f64 },
    #[error("no rewarded records to evaluate")]
    EmptyHistory,
    #[error("model JSON: {0}")]
    Json(String),
    #[error("unsupported model format version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Number of bootstrap refits used to measure decision disagreement.
    pub ensemble_count: usize,
    pub epsilon_low: f64,
    pub epsilon_high: f64,
    pub disagreement_threshold: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            rounds: 50,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 20,
            ensemble_count: 5,
            epsilon_low: 0.7,
            epsilon_high: 0.8,
            disagreement_threshold: 0.3,
        }
    }
}

impl LearnerConfig {
    pub fn gbrt(&self) -> GbrtConfig {
        GbrtConfig {
            rounds: self.rounds,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            min_samples_leaf: self.min_samples_leaf,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rounds == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err("rounds, max_depth and min_samples_leaf must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(format!("learning_rate {} not in (0, 1]", self.learning_rate));
        }
        if !(0.0 < self.epsilon_low && self.epsilon_low < self.epsilon_high && self.epsilon_high <= 1.0) {
            return Err("need 0 < epsilon_low < epsilon_high <= 1".into());
        }
        if !(0.0..=1.0).contains(&self.disagreement_threshold) {
            return Err("disagreement_threshold must be in [0, 1]".into());
        }
        Ok(())
    }

    /// Rewarded records needed before the greedy model is trusted.
    pub fn warm_start_records(&self) -> usize {
        N_ACTIONS * self.min_samples_leaf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionModel {
    pub action: Action,
    /// Number of records for this action used in the fit.
    pub samples: usize,
    /// True when too few records existed and the model is the global mean.
    pub fallback: bool,
    pub ensemble: BoostedEnsemble,
}

/// One boosted ensemble per action, indexed by action index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub format_version: u32,
    pub config: LearnerConfig,
    pub global_mean: f64,
    pub actions: Vec<ActionModel>,
}

impl RewardModel {
    pub fn predict(&self, x: &FeatureVector) -> [f64; N_ACTIONS] {
        let mut out = [0.0; N_ACTIONS];
        for (k, m) in self.actions.iter().enumerate() {
            out[k] = m.ensemble.predict(x.as_slice());
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LearnerError> {
        let m: RewardModel = serde_json::from_str(s).map_err(|e| LearnerError::Json(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::Version(m.format_version));
        }
        if m.actions.len() != N_ACTIONS {
            return Err(LearnerError::Json(format!("expected {N_ACTIONS} action models, got {}", m.actions.len())));
        }
        Ok(m)
    }
}

fn usable(r: &DecisionRecord) -> Option<f64> {
    r.reward.filter(|v| v.is_finite() && r.propensity > 0.0)
}

/// Fits the 12 per-action models on `records`, weighting each by
/// 1 / propensity. Actions with fewer than `min_samples_leaf` records get a
/// constant model at the global mean reward.
pub fn fit_reward_models(history: &[DecisionRecord], config: &LearnerConfig) -> RewardModel {
    let rows: Vec<&DecisionRecord> = history.iter().collect();
    fit_reward_models_on(&rows, config)
}

/// [`fit_reward_models`] over borrowed records.
pub fn fit_reward_models_on(history: &[&DecisionRecord], config: &LearnerConfig) -> RewardModel {
    let rows: Vec<&DecisionRecord> = history.iter().copied().filter(|r| usable(r).is_some()).collect();
    fit_on_rows(&rows, config)
}

fn fit_on_rows(rows: &[&DecisionRecord], config: &LearnerConfig) -> RewardModel {
    let global_mean = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.reward.unwrap_or(0.0)).sum::<f64>() / rows.len() as f64
    };
    let gcfg = config.gbrt();
    let actions: Vec<ActionModel> = (0..N_ACTIONS)
        .into_par_iter()
        .map(|k| {
            let action = Action::from_index(k).expect("index in range");
            let mine: Vec<&&DecisionRecord> = rows.iter().filter(|r| r.action == action).collect();
            let x: Vec<&[f64]> = mine.iter().map(|r| r.features.as_slice()).collect();
            let y: Vec<f64> = mine.iter().map(|r| r.reward.unwrap_or(0.0)).collect();
            let w: Vec<f64> = mine.iter().map(|r| 1.0 / r.propensity).collect();
            match fit_matrix(&x, &y, &w, &gcfg) {
                Ok(ensemble) => ActionModel { action, samples: mine.len(), fallback: false, ensemble },
                Err(_) => ActionModel {
                    action,
                    samples: mine.len(),
                    fallback: true,
                    ensemble: BoostedEnsemble::constant(global_mean, N_FEATURES),
                },
            }
        })
        .collect();
    RewardModel { format_version: MODEL_FORMAT_VERSION, config: *config, global_mean, actions }
}

/// Fits `k` models, each on a bootstrap resample of the rewarded records.
/// Resample `b` draws from the stream keyed by `(seed, b)`.
pub fn bootstrap_reward_models(
    history: &[DecisionRecord],
    config: &LearnerConfig,
    k: usize,
    seed: u64,
) -> Vec<RewardModel> {
    let rows: Vec<&DecisionRecord> = history.iter().collect();
    bootstrap_reward_models_on(&rows, config, k, seed)
}

pub fn bootstrap_reward_models_on(
    history: &[&DecisionRecord],
    config: &LearnerConfig,
    k: usize,
    seed: u64,
) -> Vec<RewardModel> {
    let rows: Vec<&DecisionRecord> = history.iter().copied().filter(|r| usable(r).is_some()).collect();
    (0..k)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64, 0, Purpose::Bootstrap);
            let mut sample: Vec<&DecisionRecord> = Vec::with_capacity(rows.len());
            for _ in 0..rows.len() {
                sample.push(rows[rng.random_range(0..rows.len())]);
            }
            fit_on_rows(&sample, config)
        })
        .collect()
}

/// Index of the largest prediction; ties go to the lowest index.
pub fn argmax(predictions: &[f64; N_ACTIONS]) -> usize {
    let mut best = 0;
    for k in 1..N_ACTIONS {
        if predictions[k] > predictions[best] {
            best = k;
        }
    }
    best
}

pub fn greedy_action(model: &RewardModel, x: &FeatureVector) -> Action {
    Action::from_index(argmax(&model.predict(x))).expect("index in range")
}

/// Importance-sampling estimate of the value of `target`:
/// mean over rewarded records of `r * pi(a | x) / propensity`.
pub fn is_value_estimate<F>(history: &[DecisionRecord], target: F) -> Result<f64, LearnerError>
where
    F: Fn(&FeatureVector) -> [f64; N_ACTIONS],
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for (index, r) in history.iter().enumerate() {
        let Some(reward) = r.reward else { continue };
        if !(r.propensity > 0.0) {
            return Err(LearnerError::ZeroPropensity { index, propensity: r.propensity });
        }
        sum += reward * target(&r.features)[r.action.index()] / r.propensity;
        n += 1;
    }
    if n == 0 {
        return Err(LearnerError::EmptyHistory);
    }
    Ok(sum / n as f64)
}

/// Fraction of probe states on which the models' greedy actions are not
/// all the same.
pub fn ensemble_disagreement(models: &[RewardModel], probe: &[FeatureVector]) -> f64 {
    if models.len() < 2 || probe.is_empty() {
        return 0.0;
    }
    let split = probe
        .iter()
        .filter(|x| {
            let first = greedy_action(&models[0], x);
            models[1..].iter().any(|m| greedy_action(m, x) != first)
        })
        .count();
    split as f64 / probe.len() as f64
}

/// The high exploration rate when disagreement strictly exceeds the threshold.
pub fn choose_epsilon(disagreement: f64, config: &LearnerConfig) -> f64 {
    if disagreement > config.disagreement_threshold {
        config.epsilon_high
    } else {
        config.epsilon_low
    }
}

/// Total split gain per feature over all trees of all actions, normalized
/// to sum to one and sorted descending (ties by feature order). All zero
/// when no tree has a split.
pub fn feature_importance(model: &RewardModel) -> Vec<(String, f64)> {
    let mut acc = vec![0.0; N_FEATURES];
    for m in &model.actions {
        for t in &m.ensemble.trees {
            t.accumulate_gain(&mut acc);
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        for v in &mut acc {
            *v /= total;
        }
    }
    let mut ranked: Vec<(String, f64)> =
        FEATURE_NAMES.iter().zip(acc).map(|(n, v)| (n.to_string(), v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}
