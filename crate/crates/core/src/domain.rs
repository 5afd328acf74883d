//! Shared vocabulary: nudge themes, delivery times, actions, messages,
//! participants, step records, feedback and decision logs.
//!
//! Everything here is an immutable value type. Integer codes (`code()`) are
//! stable and are what the CSV exports use; JSON uses the PascalCase names.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("message bucket for theme {0} is empty")]
    EmptyBucket(NudgeTheme),
    #[error("duplicate message id {0:?}")]
    DuplicateMessageId(String),
    #[error("action index {0} out of range 0..12")]
    ActionIndex(usize),
    #[error("unknown {kind} {value:?}")]
    UnknownName { kind: &'static str, value: String },
    #[error("invalid survey: {0}")]
    InvalidSurvey(String),
    #[error("invalid message repository JSON: {0}")]
    RepositoryJson(String),
}

/// COM-B sub-theme a nudge acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NudgeTheme {
    Ability,
    PerceivedBenefit,
    PhysicalOpportunity,
    Planning,
    Prioritization,
    SocialOpportunity,
}

impl NudgeTheme {
    pub const ALL: [NudgeTheme; 6] = [
        NudgeTheme::Ability,
        NudgeTheme::PerceivedBenefit,
        NudgeTheme::PhysicalOpportunity,
        NudgeTheme::Planning,
        NudgeTheme::Prioritization,
        NudgeTheme::SocialOpportunity,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NudgeTheme::Ability => "Ability",
            NudgeTheme::PerceivedBenefit => "PerceivedBenefit",
            NudgeTheme::PhysicalOpportunity => "PhysicalOpportunity",
            NudgeTheme::Planning => "Planning",
            NudgeTheme::Prioritization => "Prioritization",
            NudgeTheme::SocialOpportunity => "SocialOpportunity",
        }
    }
}

impl fmt::Display for NudgeTheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NudgeTheme {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| DomainError::UnknownName { kind: "theme", value: s.to_string() })
    }
}

/// Nudge delivery slot. Morning is anchored at 06:00, afternoon at 15:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeliveryTime {
    Morning,
    Afternoon,
}

impl DeliveryTime {
    pub const ALL: [DeliveryTime; 2] = [DeliveryTime::Morning, DeliveryTime::Afternoon];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    /// Local clock hour of the delivery anchor.
    pub fn anchor_hour(self) -> u32 {
        match self {
            DeliveryTime::Morning => 6,
            DeliveryTime::Afternoon => 15,
        }
    }

    pub fn is_morning(self) -> bool {
        self == DeliveryTime::Morning
    }
}

/// One of the 12 theme × time combinations the bandit chooses between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub theme: NudgeTheme,
    pub time: DeliveryTime,
}

pub const N_ACTIONS: usize = 12;

impl Action {
    pub const fn new(theme: NudgeTheme, time: DeliveryTime) -> Self {
        Action { theme, time }
    }

    /// `theme_code * 2 + time_code`.
    pub fn index(self) -> usize {
        self.theme.code() * 2 + self.time.code()
    }

    pub fn from_index(index: usize) -> Result<Self, DomainError> {
        if index >= N_ACTIONS {
            return Err(DomainError::ActionIndex(index));
        }
        Ok(Action {
            theme: NudgeTheme::ALL[index / 2],
            time: DeliveryTime::ALL[index % 2],
        })
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..N_ACTIONS).map(|k| Action::from_index(k).expect("index in range"))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.theme, self.time)
    }
}

pub fn action_index(a: Action) -> usize {
    a.index()
}

pub fn action_from_index(k: usize) -> Result<Action, DomainError> {
    Action::from_index(k)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NudgeMessage {
    pub id: String,
    pub theme: NudgeTheme,
    pub text: String,
}

/// Messages grouped by theme. Every theme bucket is non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRepository {
    buckets: BTreeMap<NudgeTheme, Vec<NudgeMessage>>,
}

impl MessageRepository {
    pub fn new(messages: impl IntoIterator<Item = NudgeMessage>) -> Result<Self, DomainError> {
        let mut buckets: BTreeMap<NudgeTheme, Vec<NudgeMessage>> = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();
        for m in messages {
            if !seen.insert(m.id.clone()) {
                return Err(DomainError::DuplicateMessageId(m.id));
            }
            buckets.entry(m.theme).or_default().push(m);
        }
        for theme in NudgeTheme::ALL {
            if buckets.get(&theme).is_none_or(|b| b.is_empty()) {
                return Err(DomainError::EmptyBucket(theme));
            }
        }
        Ok(MessageRepository { buckets })
    }

    /// Placeholder copy, `per_theme` messages for each theme.
    pub fn synthetic(per_theme: usize) -> Self {
        let per_theme = per_theme.max(1);
        let messages = NudgeTheme::ALL.into_iter().flat_map(|theme| {
            (0..per_theme).map(move |k| NudgeMessage {
                id: format!("{}-{:03}", theme.name(), k + 1),
                theme,
                text: format!("{} nudge #{}", theme.name(), k + 1),
            })
        });
        Self::new(messages).expect("synthetic repository is complete")
    }

    /// Parses the `[{"theme": .., "id": .., "text": ..}]` array format.
    pub fn from_json_str(json: &str) -> Result<Self, DomainError> {
        let messages: Vec<NudgeMessage> =
            serde_json::from_str(json).map_err(|e| DomainError::RepositoryJson(e.to_string()))?;
        Self::new(messages)
    }

    pub fn to_json_string(&self) -> String {
        let all: Vec<&NudgeMessage> = self.buckets.values().flatten().collect();
        serde_json::to_string_pretty(&all).expect("messages serialize")
    }

    pub fn bucket(&self, theme: NudgeTheme) -> &[NudgeMessage] {
        self.buckets.get(&theme).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws a message uniformly from the theme's bucket.
pub fn sample_message<'a, R: Rng + ?Sized>(
    repo: &'a MessageRepository,
    theme: NudgeTheme,
    rng: &mut R,
) -> Result<&'a NudgeMessage, DomainError> {
    let bucket = repo.bucket(theme);
    if bucket.is_empty() {
        return Err(DomainError::EmptyBucket(theme));
    }
    Ok(&bucket[rng.random_range(0..bucket.len())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arm {
    Control,
    Random,
    Fixed,
    #[serde(rename = "RL")]
    Rl,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Control, Arm::Random, Arm::Fixed, Arm::Rl];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Control => "Control",
            Arm::Random => "Random",
            Arm::Fixed => "Fixed",
            Arm::Rl => "RL",
        }
    }

    pub fn code(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DomainError::UnknownName { kind: "arm", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AreaType {
    Urban,
    Suburban,
    Rural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceType {
    Tracker,
    Smartwatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Education {
    HighSchool,
    SomeCollege,
    Bachelor,
    Graduate,
}

/// Categorical weather placeholder supplied by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weather {
    Mild,
    Hot,
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimePreference {
    Morning,
    Afternoon,
    NoPreference,
}

pub const SURVEY_QUESTIONS: usize = 20;

/// Questions 1-4 Ability, 5-7 Planning, 8-11 PerceivedBenefit,
/// 12-14 Prioritization, 15-17 PhysicalOpportunity, 18-20 SocialOpportunity.
pub fn default_question_map() -> [NudgeTheme; SURVEY_QUESTIONS] {
    use NudgeTheme::*;
    [
        Ability,
        Ability,
        Ability,
        Ability,
        Planning,
        Planning,
        Planning,
        PerceivedBenefit,
        PerceivedBenefit,
        PerceivedBenefit,
        PerceivedBenefit,
        Prioritization,
        Prioritization,
        Prioritization,
        PhysicalOpportunity,
        PhysicalOpportunity,
        PhysicalOpportunity,
        SocialOpportunity,
        SocialOpportunity,
        SocialOpportunity,
    ]
}

/// Onboarding COM-B questionnaire: 20 Likert answers (1..=5), each mapped to
/// a sub-theme. Higher answers mean the theme is less of a barrier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombSurvey {
    responses: [u8; SURVEY_QUESTIONS],
    question_map: [NudgeTheme; SURVEY_QUESTIONS],
}

impl CombSurvey {
    pub fn new(responses: [u8; SURVEY_QUESTIONS]) -> Result<Self, DomainError> {
        Self::with_map(responses, default_question_map())
    }

    pub fn with_map(
        responses: [u8; SURVEY_QUESTIONS],
        question_map: [NudgeTheme; SURVEY_QUESTIONS],
    ) -> Result<Self, DomainError> {
        if let Some((q, r)) = responses.iter().enumerate().find(|(_, r)| !(1..=5).contains(*r)) {
            return Err(DomainError::InvalidSurvey(format!(
                "question {} has response {r}, expected 1..=5",
                q + 1
            )));
        }
        for theme in NudgeTheme::ALL {
            if !question_map.contains(&theme) {
                return Err(DomainError::InvalidSurvey(format!("no question mapped to {theme}")));
            }
        }
        Ok(CombSurvey { responses, question_map })
    }

    pub fn responses(&self) -> &[u8; SURVEY_QUESTIONS] {
        &self.responses
    }

    pub fn question_map(&self) -> &[NudgeTheme; SURVEY_QUESTIONS] {
        &self.question_map
    }

    /// Mean Likert score per theme, indexed by theme code.
    pub fn theme_means(&self) -> [f64; 6] {
        let mut sum = [0.0; 6];
        let mut n = [0usize; 6];
        for (r, t) in self.responses.iter().zip(self.question_map.iter()) {
            sum[t.code()] += f64::from(*r);
            n[t.code()] += 1;
        }
        let mut out = [0.0; 6];
        for k in 0..6 {
            out[k] = sum[k] / n[k] as f64;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParticipantId(pub u32);

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub id: ParticipantId,
    /// Years, within 22..=60.
    pub age: f64,
    pub sex: Sex,
    /// Kilograms, positive.
    pub weight: f64,
    pub location: AreaType,
    pub device_type: DeviceType,
    pub education: Education,
    pub weather: Weather,
    pub comb_survey: CombSurvey,
    pub time_preference: TimePreference,
    pub arm: Arm,
    /// Days since 1970-01-01 of study day 0.
    pub enrollment_day: i64,
}

impl ParticipantProfile {
    /// Calendar day-of-week of a study day, Monday = 0.
    pub fn day_of_week(&self, study_day: i32) -> u8 {
        day_of_week(self.enrollment_day + i64::from(study_day))
    }

    pub fn is_weekday(&self, study_day: i32) -> bool {
        self.day_of_week(study_day) < 5
    }
}

/// Day-of-week (Monday = 0) of an epoch day. 1970-01-01 was a Thursday.
pub fn day_of_week(epoch_day: i64) -> u8 {
    (epoch_day + 3).rem_euclid(7) as u8
}

/// Daily steps split at the 12:00 local boundary.
/// Study day 0 is onboarding; negative days are the pre-study window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub participant_id: ParticipantId,
    pub day: i32,
    pub morning_steps: u32,
    pub evening_steps: u32,
}

impl StepRecord {
    pub fn new(participant_id: ParticipantId, day: i32, morning_steps: u32, evening_steps: u32) -> Self {
        StepRecord { participant_id, day, morning_steps, evening_steps }
    }

    pub fn total_steps(&self) -> u32 {
        self.morning_steps + self.evening_steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rating {
    Up,
    Down,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub participant_id: ParticipantId,
    pub day: i32,
    pub message_id: String,
    pub rating: Rating,
    pub free_text: Option<String>,
}

/// One delivered nudge: the unit of learning, logging and off-policy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub participant_id: ParticipantId,
    pub arm: Arm,
    pub day: i32,
    pub features: FeatureVector,
    pub action: Action,
    /// Probability the logging policy had of choosing `action`, in (0, 1].
    pub propensity: f64,
    pub message_id: String,
    /// Filled once the 24h window after delivery has been observed.
    pub reward: Option<f64>,
    pub feedback: Option<FeedbackEvent>,
}
