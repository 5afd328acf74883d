//! The day-tick trial loop.
//!
//! Each simulated day runs: close reward windows, retrain the RL model on
//! all RL-arm history, decide per participant, deliver and collect feedback,
//! simulate steps, apply attrition. Retraining is the only synchronization
//! point; everything per participant runs in parallel on counter-keyed
//! random streams.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, TrialConfig};
use super::population::{generate_population, sample_feedback, simulate_day, Delivery, UserResponseModel};
use crate::baseline::{compute_baseline, window_steps, BaselinePattern, WEAR_THRESHOLD};
use crate::domain::{
    sample_message, Action, Arm, DecisionRecord, DeliveryTime, FeedbackEvent, MessageRepository, ParticipantId,
    ParticipantProfile, StepRecord,
};
use crate::features::{compute_reward, FeatureExtractor, FeatureVector};
use crate::learner::{
    bootstrap_reward_models_on, choose_epsilon, ensemble_disagreement, fit_reward_models_on, greedy_action,
    RewardModel,
};
use crate::policy::{build_fixed_state, control_policy, egreedy_policy, fixed_policy, random_policy, FixedPolicyState};
use crate::rng::{stream, stream_key, Purpose};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid trial config: {0}")]
    ConfigInvalid(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Withdrawal {
    pub participant_id: ParticipantId,
    /// Last study day with data.
    pub day: i32,
}

/// RL learner state for one midnight step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerDay {
    pub day: i32,
    /// Rewarded RL-arm records available to the retrain.
    pub rewarded_records: usize,
    pub epsilon: f64,
    /// `None` before the warm-start threshold or when ε is pinned.
    pub disagreement: Option<f64>,
}

/// Greedy recommendation the fitted model made for an RL participant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyChoice {
    pub participant_id: ParticipantId,
    pub day: i32,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub config: TrialConfig,
    pub participants: Vec<ParticipantProfile>,
    pub responses: Vec<UserResponseModel>,
    /// Pre-study and study days, ordered by participant then day.
    pub steps: Vec<StepRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub feedback: Vec<FeedbackEvent>,
    pub withdrawals: Vec<Withdrawal>,
    pub learner_days: Vec<LearnerDay>,
    pub greedy_choices: Vec<GreedyChoice>,
}

impl TrialLog {
    pub fn profile(&self, id: ParticipantId) -> Option<&ParticipantProfile> {
        self.participants.get(id.0 as usize).filter(|p| p.id == id)
    }
}

struct State {
    profile: ParticipantProfile,
    response: UserResponseModel,
    baseline: BaselinePattern,
    extractor: FeatureExtractor,
    fixed: Option<FixedPolicyState>,
    steps: Vec<StepRecord>,
    nudges: Vec<(i32, Action)>,
    feedback: Vec<FeedbackEvent>,
    decisions: Vec<DecisionRecord>,
    /// Decisions whose reward window has not closed yet.
    open: Vec<usize>,
    withdrawn: Option<i32>,
}

impl State {
    fn active(&self) -> bool {
        self.withdrawn.is_none()
    }

    /// Fills rewards whose 24h window ended before `day`. A window that
    /// touches a non-wear day yields no reward; so does one cut by withdrawal.
    fn close_windows(&mut self, day: i32) {
        let steps = &self.steps;
        let decisions = &mut self.decisions;
        let baseline = &self.baseline;
        let enrollment = self.profile.enrollment_day;
        let withdrawn = self.withdrawn;
        self.open.retain(|&k| {
            let d = &mut decisions[k];
            let last = match d.action.time {
                DeliveryTime::Morning => d.day,
                DeliveryTime::Afternoon => d.day + 1,
            };
            if withdrawn.is_some_and(|w| last > w) {
                return false;
            }
            if last >= day {
                return true;
            }
            let worn = (d.day..=last).all(|x| {
                steps
                    .binary_search_by_key(&x, |r| r.day)
                    .is_ok_and(|i| steps[i].total_steps() >= WEAR_THRESHOLD)
            });
            if worn {
                if let Some(y) = window_steps(steps, d.day, d.action.time) {
                    let weekday = crate::domain::day_of_week(enrollment + i64::from(d.day)) < 5;
                    d.reward = compute_reward(y, baseline, d.action.time.is_morning(), weekday).ok().map(|r| r.value);
                }
            }
            false
        });
    }

    fn features(&self, day: i32) -> FeatureVector {
        self.extractor.extract(&self.steps, &self.nudges, &self.feedback, day)
    }

    fn prior_same_theme(&self, action: Action, day: i32) -> u32 {
        self.nudges
            .iter()
            .rev()
            .take_while(|(d, _)| *d >= day - 7)
            .filter(|(d, a)| *d < day && a.theme == action.theme)
            .count() as u32
    }
}

/// Today's policy for the RL arm.
enum RlPolicy {
    Uniform,
    Greedy { model: RewardModel, epsilon: f64 },
}

pub fn run_trial(config: &TrialConfig) -> Result<TrialLog, SimError> {
    let repo = MessageRepository::synthetic(config.policy.messages_per_theme);
    run_trial_with(config, &repo)
}

pub fn run_trial_with(config: &TrialConfig, repo: &MessageRepository) -> Result<TrialLog, SimError> {
    config.validate()?;
    let seed = config.seed();
    let population = generate_population(config);

    let mut states: Vec<State> = population
        .into_par_iter()
        .map(|p| {
            let baseline = compute_baseline(&p.pre_study, p.profile.enrollment_day)
                .expect("population generation guarantees a usable baseline");
            let extractor = FeatureExtractor::new(&p.profile, &p.pre_study, config.features)
                .expect("population generation guarantees pre-study data");
            let fixed = (p.profile.arm == Arm::Fixed)
                .then(|| build_fixed_state(&p.profile.comb_survey, p.profile.time_preference));
            State {
                baseline,
                extractor,
                fixed,
                steps: p.pre_study,
                nudges: Vec::new(),
                feedback: Vec::new(),
                decisions: Vec::new(),
                open: Vec::new(),
                withdrawn: None,
                profile: p.profile,
                response: p.response,
            }
        })
        .collect();

    let lcfg = &config.learner;
    let mut learner_days = Vec::new();
    let mut greedy_choices = Vec::new();
    let study_days = config.study_days as i32;

    for day in 1..=study_days {
        // (1) close reward windows.
        states.par_iter_mut().for_each(|s| s.close_windows(day));

        // States for today's decisions depend only on days before `day`.
        let features: Vec<Option<FeatureVector>> = states
            .par_iter()
            .map(|s| (s.active() && s.profile.arm != Arm::Control).then(|| s.features(day)))
            .collect();

        // (2) midnight retrain on the full RL-arm history.
        let rl_policy = if config.arms.contains(&Arm::Rl) {
            let history: Vec<&DecisionRecord> = states
                .iter()
                .filter(|s| s.profile.arm == Arm::Rl)
                .flat_map(|s| s.decisions.iter())
                .collect();
            let rewarded = history.iter().filter(|r| r.reward.is_some()).count();
            if rewarded < lcfg.warm_start_records() {
                learner_days.push(LearnerDay { day, rewarded_records: rewarded, epsilon: 1.0, disagreement: None });
                RlPolicy::Uniform
            } else {
                let model = fit_reward_models_on(&history, lcfg);
                let (epsilon, disagreement) = match config.policy.rl_epsilon {
                    Some(e) => (e, None),
                    None => {
                        let probe: Vec<FeatureVector> = states
                            .iter()
                            .zip(&features)
                            .filter(|(s, _)| s.profile.arm == Arm::Rl)
                            .filter_map(|(_, f)| f.clone())
                            .collect();
                        let boot_seed = stream_key(seed, u64::MAX, i64::from(day), Purpose::Bootstrap);
                        let boots = bootstrap_reward_models_on(&history, lcfg, lcfg.ensemble_count, boot_seed);
                        let rate = ensemble_disagreement(&boots, &probe);
                        (choose_epsilon(rate, lcfg), Some(rate))
                    }
                };
                learner_days.push(LearnerDay { day, rewarded_records: rewarded, epsilon, disagreement });
                RlPolicy::Greedy { model, epsilon }
            }
        } else {
            RlPolicy::Uniform
        };

        // (3)-(6) decide, deliver, simulate, attrition.
        let greedy_today: Vec<Option<GreedyChoice>> = states
            .par_iter_mut()
            .zip(features.into_par_iter())
            .map(|(s, x)| step_participant(s, x, &rl_policy, repo, config, seed, day))
            .collect();
        greedy_choices.extend(greedy_today.into_iter().flatten());
    }

    let mut log = TrialLog {
        config: config.clone(),
        participants: Vec::with_capacity(states.len()),
        responses: Vec::with_capacity(states.len()),
        steps: Vec::new(),
        decisions: Vec::new(),
        feedback: Vec::new(),
        withdrawals: Vec::new(),
        learner_days,
        greedy_choices,
    };
    for mut s in states {
        // Close whatever the final day completed.
        s.close_windows(study_days + 1);
        if let Some(day) = s.withdrawn {
            log.withdrawals.push(Withdrawal { participant_id: s.profile.id, day });
        }
        log.steps.append(&mut s.steps);
        log.decisions.append(&mut s.decisions);
        log.feedback.append(&mut s.feedback);
        log.participants.push(s.profile);
        log.responses.push(s.response);
    }
    Ok(log)
}

fn step_participant(
    s: &mut State,
    features: Option<FeatureVector>,
    rl: &RlPolicy,
    repo: &MessageRepository,
    config: &TrialConfig,
    seed: u64,
    day: i32,
) -> Option<GreedyChoice> {
    if !s.active() {
        return None;
    }
    let id = s.profile.id;
    let entity = u64::from(id.0);
    let day_key = i64::from(day);
    let mut greedy_choice = None;

    let mut policy_rng = stream(seed, entity, day_key, Purpose::Policy);
    let decision = match s.profile.arm {
        Arm::Control => control_policy(),
        Arm::Random => random_policy(&mut policy_rng),
        Arm::Fixed => fixed_policy(s.fixed.as_ref().expect("fixed arm has a state"), &mut policy_rng),
        Arm::Rl => match rl {
            RlPolicy::Uniform => random_policy(&mut policy_rng),
            RlPolicy::Greedy { model, epsilon } => {
                let x = features.as_ref().expect("intervention arms have features");
                let greedy = greedy_action(model, x);
                greedy_choice = Some(GreedyChoice { participant_id: id, day, action: greedy });
                egreedy_policy(greedy, *epsilon, &mut policy_rng)
            }
        },
    };

    let delivery = decision.action.map(|action| {
        let mut msg_rng = stream(seed, entity, day_key, Purpose::Message);
        let message = sample_message(repo, action.theme, &mut msg_rng).expect("repository buckets are non-empty");
        let mut fb_rng = stream(seed, entity, day_key, Purpose::Feedback);
        let event = sample_feedback(id, day, &message.id, action.theme, &s.response, &mut fb_rng);
        (Delivery { action, prior_same_theme: s.prior_same_theme(action, day) }, message.id.clone(), event)
    });

    let mut step_rng = stream(seed, entity, day_key, Purpose::Steps);
    let record = simulate_day(&s.profile, &s.response, delivery.as_ref().map(|d| &d.0), day, &mut step_rng);
    s.steps.push(record);

    if let Some((d, message_id, event)) = delivery {
        s.nudges.push((day, d.action));
        s.open.push(s.decisions.len());
        s.decisions.push(DecisionRecord {
            participant_id: id,
            arm: s.profile.arm,
            day,
            features: features.expect("intervention arms have features"),
            action: d.action,
            propensity: decision.propensity,
            message_id,
            reward: None,
            feedback: Some(event.clone()),
        });
        s.feedback.push(event);
    }

    let hazard = config.attrition.daily_hazard(s.profile.arm, config.study_days);
    let mut attrition_rng = stream(seed, entity, day_key, Purpose::Attrition);
    if attrition_rng.random::<f64>() < hazard {
        s.withdrawn = Some(day);
    }
    greedy_choice
}
