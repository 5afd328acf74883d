//! Proximal reward and the per-day state vector fed to the reward models.
//!
//! The state has a static block fixed at onboarding and a dynamic block
//! computed from the seven days strictly before the decision day. Days with
//! fewer than 500 steps are treated as non-wear and excluded, never imputed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{BaselineError, BaselinePattern, WEAR_THRESHOLD};
use crate::domain::{
    day_of_week, Action, AreaType, DeviceType, Education, FeedbackEvent, ParticipantProfile, Rating, Sex,
    StepRecord, Weather, SURVEY_QUESTIONS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("need at least {needed} observed days, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("decision day must be >= 1, got {0}")]
    InvalidDay(i32),
}

/// Relative change in post-nudge steps against the matching baseline cell.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Reward {
    pub value: f64,
}

/// `(y - y0) / y0` where `y0` is the baseline cell for the delivery slot and
/// weekday class of the decision day.
pub fn compute_reward(
    post_window_steps: f64,
    baseline: &BaselinePattern,
    is_morning: bool,
    is_weekday: bool,
) -> Result<Reward, BaselineError> {
    let y0 = baseline.checked_cell(is_morning, is_weekday)?;
    Ok(Reward { value: (post_window_steps - y0) / y0 })
}

/// OLS slope of steps on day position. `None` entries are missing days.
pub fn recent_slope(last7: &[Option<f64>]) -> Result<f64, FeatureError> {
    let pts: Vec<(f64, f64)> = last7
        .iter()
        .enumerate()
        .filter_map(|(i, y)| y.map(|y| (i as f64, y)))
        .collect();
    if pts.len() < 2 {
        return Err(FeatureError::InsufficientData { needed: 2, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Volume {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    Regular,
    Irregular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Mean daily steps at or above which a walker is "high".
    pub volume_cutoff: f64,
    /// Day-of-week coefficient of variation at or below which a walker is "regular".
    pub regularity_cv_cutoff: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { volume_cutoff: 5_000.0, regularity_cv_cutoff: 0.25 }
    }
}

fn is_worn(r: &StepRecord) -> bool {
    r.total_steps() >= WEAR_THRESHOLD
}

/// Volume from mean daily steps; regularity from the coefficient of
/// variation (population SD / mean) of the per-weekday means.
pub fn classify_walk_pattern(
    window: &[StepRecord],
    enrollment_day: i64,
    cfg: &FeatureConfig,
) -> (Volume, Regularity) {
    let worn: Vec<&StepRecord> = window.iter().filter(|r| is_worn(r)).collect();
    if worn.is_empty() {
        return (Volume::Low, Regularity::Regular);
    }
    let mean = worn.iter().map(|r| f64::from(r.total_steps())).sum::<f64>() / worn.len() as f64;
    let volume = if mean >= cfg.volume_cutoff { Volume::High } else { Volume::Low };

    let mut sum = [0.0; 7];
    let mut n = [0usize; 7];
    for r in &worn {
        let d = usize::from(day_of_week(enrollment_day + i64::from(r.day)));
        sum[d] += f64::from(r.total_steps());
        n[d] += 1;
    }
    let dow_means: Vec<f64> = (0..7).filter(|&d| n[d] > 0).map(|d| sum[d] / n[d] as f64).collect();
    let m = dow_means.iter().sum::<f64>() / dow_means.len() as f64;
    let var = dow_means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / dow_means.len() as f64;
    let cv = if m > 0.0 { var.sqrt() / m } else { 0.0 };
    let regularity = if cv <= cfg.regularity_cv_cutoff { Regularity::Regular } else { Regularity::Irregular };
    (volume, regularity)
}

pub const FEATURE_NAMES: [&str; 49] = [
    "age",
    "sex",
    "device_type",
    "education",
    "area_type",
    "weather",
    "survey_q01",
    "survey_q02",
    "survey_q03",
    "survey_q04",
    "survey_q05",
    "survey_q06",
    "survey_q07",
    "survey_q08",
    "survey_q09",
    "survey_q10",
    "survey_q11",
    "survey_q12",
    "survey_q13",
    "survey_q14",
    "survey_q15",
    "survey_q16",
    "survey_q17",
    "survey_q18",
    "survey_q19",
    "survey_q20",
    "pre_mean_steps",
    "pre_sd_steps",
    "pre_high_walker",
    "pre_irregular_walker",
    "recent_mean_steps",
    "recent_sd_steps",
    "recent_slope",
    "feedback_up_7d",
    "feedback_down_7d",
    "day_of_week",
    "recent_high_walker",
    "recent_irregular_walker",
    "recent_morning_mean",
    "recent_evening_mean",
    "missing_pct_7d",
    "nudges_ability_7d",
    "nudges_perceived_benefit_7d",
    "nudges_physical_opportunity_7d",
    "nudges_planning_7d",
    "nudges_prioritization_7d",
    "nudges_social_opportunity_7d",
    "nudges_morning_7d",
    "nudges_afternoon_7d",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();
const STATIC_LEN: usize = 30;
/// Index of the pre-study mean steps feature.
pub const PRE_MEAN_FEATURE: usize = 26;
/// Index of the missing-data percentage feature.
pub const MISSING_PCT_FEATURE: usize = 40;

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// A participant-day state, laid out as [`FEATURE_NAMES`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector(vec![0.0; N_FEATURES])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).and_then(|i| self.0.get(i).copied())
    }
}

fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, sd))
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Caches a participant's static block so daily extraction only touches
/// the trailing week.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    static_block: [f64; STATIC_LEN],
    pre_mean: f64,
    pre_morning: f64,
    pre_evening: f64,
    enrollment_day: i64,
    cfg: FeatureConfig,
}

impl FeatureExtractor {
    /// `history` may contain any days; the static block reads only `day < 0`.
    pub fn new(
        profile: &ParticipantProfile,
        history: &[StepRecord],
        cfg: FeatureConfig,
    ) -> Result<Self, FeatureError> {
        let pre: Vec<StepRecord> = history.iter().copied().filter(|r| r.day < 0).collect();
        if pre.is_empty() {
            return Err(FeatureError::InsufficientData { needed: 1, got: 0 });
        }
        let worn: Vec<&StepRecord> = pre.iter().filter(|r| is_worn(r)).collect();
        let totals: Vec<f64> = worn.iter().map(|r| f64::from(r.total_steps())).collect();
        let (pre_mean, pre_sd) = mean_sd(&totals).unwrap_or((0.0, 0.0));
        let pre_morning = mean_sd(&worn.iter().map(|r| f64::from(r.morning_steps)).collect::<Vec<_>>())
            .map_or(0.0, |m| m.0);
        let pre_evening = mean_sd(&worn.iter().map(|r| f64::from(r.evening_steps)).collect::<Vec<_>>())
            .map_or(0.0, |m| m.0);
        let (vol, reg) = classify_walk_pattern(&pre, profile.enrollment_day, &cfg);

        let mut s = [0.0; STATIC_LEN];
        s[0] = profile.age;
        s[1] = match profile.sex {
            Sex::Female => 0.0,
            Sex::Male => 1.0,
        };
        s[2] = match profile.device_type {
            DeviceType::Tracker => 0.0,
            DeviceType::Smartwatch => 1.0,
        };
        s[3] = match profile.education {
            Education::HighSchool => 0.0,
            Education::SomeCollege => 1.0,
            Education::Bachelor => 2.0,
            Education::Graduate => 3.0,
        };
        s[4] = match profile.location {
            AreaType::Urban => 0.0,
            AreaType::Suburban => 1.0,
            AreaType::Rural => 2.0,
        };
        s[5] = match profile.weather {
            Weather::Mild => 0.0,
            Weather::Hot => 1.0,
            Weather::Cold => 2.0,
        };
        for (q, r) in profile.comb_survey.responses().iter().enumerate() {
            s[6 + q] = f64::from(*r);
        }
        debug_assert_eq!(6 + SURVEY_QUESTIONS, PRE_MEAN_FEATURE);
        s[26] = pre_mean;
        s[27] = pre_sd;
        s[28] = flag(vol == Volume::High);
        s[29] = flag(reg == Regularity::Irregular);

        Ok(FeatureExtractor {
            static_block: s,
            pre_mean,
            pre_morning,
            pre_evening,
            enrollment_day: profile.enrollment_day,
            cfg,
        })
    }

    /// State for decision day `day`, reading only days `day-7 ..= day-1`.
    /// `steps` must be sorted by day; `nudges` are `(day, action)` pairs.
    pub fn extract(
        &self,
        steps: &[StepRecord],
        nudges: &[(i32, Action)],
        feedback: &[FeedbackEvent],
        day: i32,
    ) -> FeatureVector {
        let lo = day - 7;
        let in_window = |d: i32| d >= lo && d < day;
        let start = steps.partition_point(|r| r.day < lo);
        let end = steps.partition_point(|r| r.day < day);
        let window = &steps[start..end];

        let mut slots: [Option<f64>; 7] = [None; 7];
        let mut worn: Vec<&StepRecord> = Vec::with_capacity(7);
        for r in window.iter().filter(|r| is_worn(r)) {
            slots[(r.day - lo) as usize] = Some(f64::from(r.total_steps()));
            worn.push(r);
        }
        let totals: Vec<f64> = worn.iter().map(|r| f64::from(r.total_steps())).collect();
        let (recent_mean, recent_sd) = mean_sd(&totals).unwrap_or((self.pre_mean, 0.0));
        let slope = recent_slope(&slots).unwrap_or(0.0);
        let morning = mean_sd(&worn.iter().map(|r| f64::from(r.morning_steps)).collect::<Vec<_>>())
            .map_or(self.pre_morning, |m| m.0);
        let evening = mean_sd(&worn.iter().map(|r| f64::from(r.evening_steps)).collect::<Vec<_>>())
            .map_or(self.pre_evening, |m| m.0);
        let missing_pct = 100.0 * (7 - worn.len()) as f64 / 7.0;
        let (vol, reg) = classify_walk_pattern(window, self.enrollment_day, &self.cfg);

        let (mut up, mut down) = (0.0, 0.0);
        for f in feedback.iter().filter(|f| in_window(f.day)) {
            match f.rating {
                Rating::Up => up += 1.0,
                Rating::Down => down += 1.0,
                Rating::None => {}
            }
        }
        let mut theme_counts = [0.0; 6];
        let mut time_counts = [0.0; 2];
        for (_, a) in nudges.iter().filter(|(d, _)| in_window(*d)) {
            theme_counts[a.theme.code()] += 1.0;
            time_counts[a.time.code()] += 1.0;
        }

        let mut v = Vec::with_capacity(N_FEATURES);
        v.extend_from_slice(&self.static_block);
        v.extend_from_slice(&[
            recent_mean,
            recent_sd,
            slope,
            up,
            down,
            f64::from(day_of_week(self.enrollment_day + i64::from(day))),
            flag(vol == Volume::High),
            flag(reg == Regularity::Irregular),
            morning,
            evening,
            missing_pct,
        ]);
        v.extend_from_slice(&theme_counts);
        v.extend_from_slice(&time_counts);
        debug_assert_eq!(v.len(), N_FEATURES);
        FeatureVector(v)
    }
}

/// One-shot extraction for day `day >= 1`. `steps` need not be sorted.
pub fn extract_features(
    profile: &ParticipantProfile,
    steps: &[StepRecord],
    nudges: &[(i32, Action)],
    feedback: &[FeedbackEvent],
    day: i32,
    cfg: FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    if day < 1 {
        return Err(FeatureError::InvalidDay(day));
    }
    let mut sorted = steps.to_vec();
    sorted.sort_by_key(|r| r.day);
    let extractor = FeatureExtractor::new(profile, &sorted, cfg)?;
    Ok(extractor.extract(&sorted, nudges, feedback, day))
}
