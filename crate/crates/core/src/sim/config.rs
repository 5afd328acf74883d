use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{Arm, N_ACTIONS};
use crate::features::FeatureConfig;
use crate::learner::LearnerConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
}

/// Cumulative probability of withdrawing before the end of the study, per arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttritionConfig {
    pub control: f64,
    pub random: f64,
    pub fixed: f64,
    pub rl: f64,
}

impl Default for AttritionConfig {
    fn default() -> Self {
        // 13.5% in control; the intervention arms share the remainder so the
        // four-arm total is 11.3%.
        AttritionConfig { control: 0.135, random: 0.1057, fixed: 0.1057, rl: 0.1057 }
    }
}

impl AttritionConfig {
    pub fn cumulative(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Control => self.control,
            Arm::Random => self.random,
            Arm::Fixed => self.fixed,
            Arm::Rl => self.rl,
        }
    }

    /// Constant daily hazard reaching the cumulative rate after `days` days.
    pub fn daily_hazard(&self, arm: Arm, days: u32) -> f64 {
        1.0 - (1.0 - self.cumulative(arm)).powf(1.0 / f64::from(days.max(1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// Target cohort mean of pre-study daily steps after eligibility screening.
    pub baseline_mean: f64,
    /// Target cohort SD of pre-study daily steps after eligibility screening.
    pub baseline_sd: f64,
    pub female_share: f64,
    pub age_mean: f64,
    pub age_sd: f64,
    pub weight_mean: f64,
    pub weight_sd: f64,
    /// Urban, suburban, rural.
    pub area_shares: [f64; 3],
    pub smartwatch_share: f64,
    /// High school, some college, bachelor, graduate.
    pub education_shares: [f64; 4],
    /// Morning, afternoon, no preference.
    pub time_preference_shares: [f64; 3],
    /// Mean latent barrier per theme (theme code order), each in (0, 1).
    pub barrier_means: [f64; 6],
    /// Beta concentration of the latent barriers; lower is more heterogeneous.
    pub barrier_concentration: f64,
    /// SD of the answer noise when turning barriers into Likert responses.
    pub survey_noise_sd: f64,
    /// Epoch day of the first possible enrollment (2024-02-01).
    pub enrollment_start: i64,
    pub enrollment_span_days: i64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            baseline_mean: 5_618.2,
            baseline_sd: 1_502.5,
            female_share: 0.863,
            age_mean: 42.1,
            age_sd: 9.0,
            weight_mean: 90.8,
            weight_sd: 25.5,
            area_shares: [0.151, 0.632, 0.217],
            smartwatch_share: 0.35,
            education_shares: [0.2, 0.3, 0.3, 0.2],
            time_preference_shares: [0.4, 0.35, 0.25],
            // Ability, PerceivedBenefit, PhysicalOpportunity, Planning, Prioritization, SocialOpportunity
            barrier_means: [0.2, 0.15, 0.3, 0.3, 0.3, 0.3],
            barrier_concentration: 1.0,
            survey_noise_sd: 0.6,
            enrollment_start: 19_754,
            enrollment_span_days: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseConfig {
    /// SD of the additive daily step noise.
    pub noise_sd: f64,
    /// Secular change in expected steps per study day.
    pub drift_per_day: f64,
    /// Relative jump in everyone's level from study day 1 on (enrollment effect).
    pub study_entry_lift: f64,
    /// Relative step lift per unit barrier, per theme.
    pub theme_gain: [f64; 6],
    /// Log-normal SD of the per-participant multiplier on each theme gain.
    pub gain_heterogeneity: f64,
    pub morning_receptivity: f64,
    pub afternoon_receptivity: f64,
    /// Extra relative receptivity in the participant's stated preferred slot.
    pub preferred_time_bonus: f64,
    /// Multiplier applied per same-theme nudge in the previous 7 days.
    pub habituation_decay: f64,
    pub weekend_factor_mean: f64,
    pub weekend_factor_sd: f64,
    /// Mean share of daily steps taken before noon.
    pub morning_share_mean: f64,
    pub feedback_response_rate: f64,
    /// Probability that a rating is a thumbs up, per theme.
    pub favorability: [f64; 6],
    /// Additional relative lift per action index, on top of the theme model.
    pub action_bonus: [f64; N_ACTIONS],
}

impl Default for ResponseConfig {
    fn default() -> Self {
        ResponseConfig {
            noise_sd: 1_200.0,
            drift_per_day: -4.5,
            study_entry_lift: 0.09,
            // Only Ability and Planning move steps much; the average random nudge
            // is worth about 1.5% of baseline.
            theme_gain: [0.2, 0.02, 0.02, 0.25, 0.02, 0.02],
            gain_heterogeneity: 0.25,
            morning_receptivity: 0.6,
            afternoon_receptivity: 1.0,
            preferred_time_bonus: 0.2,
            habituation_decay: 0.9,
            weekend_factor_mean: 0.88,
            weekend_factor_sd: 0.08,
            morning_share_mean: 0.4,
            feedback_response_rate: 0.05,
            favorability: [0.8, 0.75, 0.45, 0.7, 0.7, 0.6],
            action_bonus: [0.0; N_ACTIONS],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Fixed exploration rate for the RL arm; adaptive from ensemble
    /// disagreement when absent.
    pub rl_epsilon: Option<f64>,
    pub messages_per_theme: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { rl_epsilon: None, messages_per_theme: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub n_per_arm: usize,
    pub study_days: u32,
    pub seed: Option<u64>,
    pub arms: Vec<Arm>,
    pub attrition: AttritionConfig,
    pub population: PopulationConfig,
    pub response: ResponseConfig,
    pub learner: LearnerConfig,
    pub features: FeatureConfig,
    pub policy: PolicyConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            n_per_arm: 500,
            study_days: 60,
            seed: None,
            arms: Arm::ALL.to_vec(),
            attrition: AttritionConfig::default(),
            population: PopulationConfig::default(),
            response: ResponseConfig::default(),
            learner: LearnerConfig::default(),
            features: FeatureConfig::default(),
            policy: PolicyConfig::default(),
        }
    }
}

fn prob(name: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {p} is not a probability")))
    }
}

fn shares(name: &str, s: &[f64]) -> Result<(), ConfigError> {
    for p in s {
        prob(name, *p)?;
    }
    let total: f64 = s.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(ConfigError::Invalid(format!("{name} sums to {total}, expected 1")));
    }
    Ok(())
}

impl TrialConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_per_arm == 0 {
            return Err(ConfigError::Invalid("n_per_arm must be >= 1".into()));
        }
        if self.study_days == 0 {
            return Err(ConfigError::Invalid("study_days must be >= 1".into()));
        }
        if self.arms.is_empty() {
            return Err(ConfigError::Invalid("arms must list at least one arm".into()));
        }
        let mut seen = self.arms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.arms.len() {
            return Err(ConfigError::Invalid("arms contains duplicates".into()));
        }
        for arm in Arm::ALL {
            prob("attrition", self.attrition.cumulative(arm))?;
            if self.attrition.cumulative(arm) >= 1.0 {
                return Err(ConfigError::Invalid(format!("attrition for {arm} must be < 1")));
            }
        }
        let p = &self.population;
        if !(p.baseline_mean > 0.0 && p.baseline_mean < crate::baseline::ELIGIBILITY_THRESHOLD) {
            return Err(ConfigError::Invalid("population.baseline_mean must be in (0, 8000)".into()));
        }
        if !(p.baseline_sd > 0.0) || !(p.age_sd >= 0.0) || !(p.weight_sd >= 0.0) {
            return Err(ConfigError::Invalid("population SDs must be non-negative (baseline_sd positive)".into()));
        }
        prob("population.female_share", p.female_share)?;
        prob("population.smartwatch_share", p.smartwatch_share)?;
        shares("population.area_shares", &p.area_shares)?;
        shares("population.education_shares", &p.education_shares)?;
        shares("population.time_preference_shares", &p.time_preference_shares)?;
        for m in p.barrier_means {
            if !(m > 0.0 && m < 1.0) {
                return Err(ConfigError::Invalid(format!("population.barrier_means entry {m} not in (0, 1)")));
            }
        }
        if !(p.barrier_concentration > 0.0) || p.enrollment_span_days < 1 {
            return Err(ConfigError::Invalid("barrier_concentration and enrollment_span_days must be positive".into()));
        }
        let r = &self.response;
        if !(r.noise_sd >= 0.0) || !(r.gain_heterogeneity >= 0.0) || !(r.weekend_factor_sd >= 0.0) {
            return Err(ConfigError::Invalid("response SDs must be non-negative".into()));
        }
        if !(r.habituation_decay > 0.0 && r.habituation_decay <= 1.0) {
            return Err(ConfigError::Invalid("response.habituation_decay must be in (0, 1]".into()));
        }
        if !(r.study_entry_lift > -1.0 && r.study_entry_lift.is_finite()) {
            return Err(ConfigError::Invalid("response.study_entry_lift must be finite and > -1".into()));
        }
        prob("response.feedback_response_rate", r.feedback_response_rate)?;
        prob("response.morning_share_mean", r.morning_share_mean)?;
        for f in r.favorability {
            prob("response.favorability", f)?;
        }
        if !(r.weekend_factor_mean > 0.0 && r.weekend_factor_mean < 3.5) {
            return Err(ConfigError::Invalid("response.weekend_factor_mean must be in (0, 3.5)".into()));
        }
        self.learner.validate().map_err(|e| ConfigError::Invalid(format!("learner: {e}")))?;
        if let Some(eps) = self.policy.rl_epsilon {
            prob("policy.rl_epsilon", eps)?;
        }
        if self.policy.messages_per_theme == 0 {
            return Err(ConfigError::Invalid("policy.messages_per_theme must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: TrialConfig = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&serde_json::to_value(self).expect("config serializes"))
            .expect("json value serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_attrition_totals_eleven_point_three() {
        let a = AttritionConfig::default();
        let overall = Arm::ALL.iter().map(|arm| a.cumulative(*arm)).sum::<f64>() / 4.0;
        assert!((overall - 0.113).abs() < 5e-4, "{overall}");
        let h = a.daily_hazard(Arm::Control, 60);
        assert!((1.0 - (1.0 - h).powi(60) - 0.135).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = TrialConfig::default();
        assert!(cfg.validate().is_ok());
        let back = TrialConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());

        let small = TrialConfig::from_toml_str("n_per_arm = 8\nstudy_days = 5\n[learner]\nrounds = 10\n").unwrap();
        assert_eq!(small.n_per_arm, 8);
        assert_eq!(small.learner.rounds, 10);
        assert_eq!(small.learner.max_depth, 3);
        assert_ne!(small.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(TrialConfig::from_toml_str("n_per_arm = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(TrialConfig::from_toml_str("n_per_arm = \"x\""), Err(ConfigError::Parse(_))));
        assert!(matches!(TrialConfig::from_toml_str("bogus = 1"), Err(ConfigError::Parse(_))));
        assert!(matches!(
            TrialConfig::from_toml_str("[learner]\nepsilon_low = 0.9\nepsilon_high = 0.8"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(TrialConfig::from_toml_str("[attrition]\ncontrol = 1.5"), Err(ConfigError::Invalid(_))));
    }
}
