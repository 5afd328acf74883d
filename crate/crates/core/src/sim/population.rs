//! Synthetic cohort generation and the per-participant step response model.
//!
//! Every generator parameter here is synthetic. Population defaults are
//! calibrated to the reported cohort aggregates (baseline steps, sex ratio,
//! age, weight); the response model encodes the causal path the reward is
//! meant to pick up: a nudge on theme `j` lifts expected steps in proportion
//! to the participant's latent barrier on `j`.

use rand::Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use super::config::{PopulationConfig, ResponseConfig, TrialConfig};
use crate::baseline::{check_eligibility, compliance, compute_baseline, Period, ELIGIBILITY_THRESHOLD, PRE_STUDY_DAYS};
use crate::domain::{
    Action, AreaType, Arm, CombSurvey, DeliveryTime, DeviceType, Education, FeedbackEvent, NudgeTheme,
    ParticipantId, ParticipantProfile, Rating, Sex, StepRecord, TimePreference, Weather, N_ACTIONS,
    SURVEY_QUESTIONS,
};
use crate::rng::{stream, Purpose};

/// Latent behavioral parameters of one synthetic participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserResponseModel {
    /// Expected weekday-averaged daily steps with no intervention.
    pub personal_baseline: f64,
    /// Latent barrier per theme in [0, 1].
    pub barriers: [f64; 6],
    /// Relative lift per unit barrier, per theme.
    pub gains: [f64; 6],
    /// Multiplier on the lift for morning and afternoon deliveries.
    pub receptivity: [f64; 2],
    /// In (0, 1]; applied once per same-theme nudge in the prior 7 days.
    pub habituation_decay: f64,
    /// Indexed Monday = 0; averages to one over a week.
    pub dow_multipliers: [f64; 7],
    pub drift_per_day: f64,
    /// Relative level shift on study days (`day >= 1`).
    pub study_entry_lift: f64,
    pub noise_sd: f64,
    /// Share of un-nudged daily steps taken before noon.
    pub morning_share: f64,
    pub favorability: [f64; 6],
    pub response_rate: f64,
    pub action_bonus: [f64; N_ACTIONS],
}

impl UserResponseModel {
    /// Relative step lift of a delivered nudge.
    pub fn lift(&self, delivery: &Delivery) -> f64 {
        let a = delivery.action;
        let theme = a.theme.code();
        let habituation = self.habituation_decay.powi(delivery.prior_same_theme as i32);
        self.gains[theme] * self.barriers[theme] * self.receptivity[a.time.code()] * habituation
            + self.action_bonus[a.index()]
    }

    /// Expected steps on `day` without any nudge, before noise.
    pub fn expected_steps(&self, dow: u8, day: i32) -> f64 {
        let b = if day >= 1 { self.personal_baseline * (1.0 + self.study_entry_lift) } else { self.personal_baseline };
        let drift = self.drift_per_day * f64::from(day.max(0));
        (b * self.dow_multipliers[usize::from(dow)] * (1.0 + drift / b)).max(0.0)
    }
}

/// A nudge delivered on the simulated day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub action: Action,
    /// Nudges on the same theme in the 7 days before this one.
    pub prior_same_theme: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParticipant {
    pub profile: ParticipantProfile,
    pub response: UserResponseModel,
    /// Days `-30 ..= 0`.
    pub pre_study: Vec<StepRecord>,
}

/// Simulates one day of steps. Draws the same random numbers whether or not
/// a nudge was delivered, so a zero-lift nudge reproduces the no-nudge day.
pub fn simulate_day<R: Rng + ?Sized>(
    profile: &ParticipantProfile,
    response: &UserResponseModel,
    delivered: Option<&Delivery>,
    day: i32,
    rng: &mut R,
) -> StepRecord {
    let mu = response.expected_steps(profile.day_of_week(day), day);
    let noise = if response.noise_sd > 0.0 {
        Normal::new(0.0, response.noise_sd).expect("valid sd").sample(rng)
    } else {
        0.0
    };
    let base = (mu + noise).max(0.0);
    let mut morning = response.morning_share * base;
    let mut evening = base - morning;
    if let Some(d) = delivered {
        let extra = mu * response.lift(d);
        match d.action.time {
            DeliveryTime::Morning => {
                morning += response.morning_share * extra;
                evening += (1.0 - response.morning_share) * extra;
            }
            DeliveryTime::Afternoon => evening += extra,
        }
    }
    StepRecord::new(
        profile.id,
        day,
        morning.max(0.0).round() as u32,
        evening.max(0.0).round() as u32,
    )
}

/// Up with probability `favorability * response_rate`, down with
/// `(1 - favorability) * response_rate`, otherwise no rating.
pub fn sample_rating<R: Rng + ?Sized>(favorability: f64, response_rate: f64, rng: &mut R) -> Rating {
    let u: f64 = rng.random();
    if u < favorability * response_rate {
        Rating::Up
    } else if u < response_rate {
        Rating::Down
    } else {
        Rating::None
    }
}

pub fn sample_feedback<R: Rng + ?Sized>(
    participant_id: ParticipantId,
    day: i32,
    message_id: &str,
    theme: NudgeTheme,
    response: &UserResponseModel,
    rng: &mut R,
) -> FeedbackEvent {
    FeedbackEvent {
        participant_id,
        day,
        message_id: message_id.to_string(),
        rating: sample_rating(response.favorability[theme.code()], response.response_rate, rng),
        free_text: None,
    }
}

fn truncated_lognormal_moments(mu: f64, sigma: f64, upper: f64) -> (f64, f64) {
    let phi = StdNormal::standard();
    let lc = upper.ln();
    let p = phi.cdf((lc - mu) / sigma).max(1e-300);
    let m1 = (mu + sigma * sigma / 2.0).exp() * phi.cdf((lc - mu - sigma * sigma) / sigma) / p;
    let m2 = (2.0 * mu + 2.0 * sigma * sigma).exp() * phi.cdf((lc - mu - 2.0 * sigma * sigma) / sigma) / p;
    (m1, (m2 - m1 * m1).max(0.0).sqrt())
}

/// Log-normal `(mu, sigma)` whose truncation below `upper` has the given
/// mean and SD, found by nested bisection.
pub fn calibrate_truncated_lognormal(mean: f64, sd: f64, upper: f64) -> (f64, f64) {
    let mu_for = |sigma: f64| {
        let (mut lo, mut hi) = (mean.ln() - 3.0, upper.ln() + 3.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if truncated_lognormal_moments(mid, sigma, upper).0 < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (mut lo, mut hi) = (1e-3, 2.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let mu = mu_for(mid);
        if truncated_lognormal_moments(mu, mid, upper).1 < sd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    (mu_for(sigma), sigma)
}

fn pick<R: Rng + ?Sized>(shares: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, s) in shares.iter().enumerate() {
        acc += s;
        if u < acc {
            return k;
        }
    }
    shares.len() - 1
}

fn normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    if sd > 0.0 {
        Normal::new(mean, sd).expect("valid sd").sample(rng)
    } else {
        mean
    }
}

struct Draw {
    profile: ParticipantProfile,
    response: UserResponseModel,
}

fn draw_participant<R: Rng + ?Sized>(
    id: ParticipantId,
    arm: Arm,
    pop: &PopulationConfig,
    resp: &ResponseConfig,
    baseline_dist: &LogNormal<f64>,
    rng: &mut R,
) -> Draw {
    let personal_baseline = loop {
        let b = baseline_dist.sample(rng);
        if b < ELIGIBILITY_THRESHOLD {
            break b;
        }
    };
    let barriers: [f64; 6] = std::array::from_fn(|j| {
        let m = pop.barrier_means[j];
        Beta::new(pop.barrier_concentration * m, pop.barrier_concentration * (1.0 - m))
            .expect("valid beta")
            .sample(rng)
    });
    let map = crate::domain::default_question_map();
    let mut answers = [0u8; SURVEY_QUESTIONS];
    for (q, theme) in map.iter().enumerate() {
        let raw = 5.0 - 4.0 * barriers[theme.code()] + normal(0.0, pop.survey_noise_sd, rng);
        answers[q] = raw.round().clamp(1.0, 5.0) as u8;
    }
    let comb_survey = CombSurvey::with_map(answers, map).expect("answers clamped to 1..=5");

    let time_preference = [TimePreference::Morning, TimePreference::Afternoon, TimePreference::NoPreference]
        [pick(&pop.time_preference_shares, rng)];
    let profile = ParticipantProfile {
        id,
        age: normal(pop.age_mean, pop.age_sd, rng).clamp(22.0, 60.0),
        sex: if rng.random::<f64>() < pop.female_share { Sex::Female } else { Sex::Male },
        weight: normal(pop.weight_mean, pop.weight_sd, rng).max(35.0),
        location: [AreaType::Urban, AreaType::Suburban, AreaType::Rural][pick(&pop.area_shares, rng)],
        device_type: if rng.random::<f64>() < pop.smartwatch_share { DeviceType::Smartwatch } else { DeviceType::Tracker },
        education: [Education::HighSchool, Education::SomeCollege, Education::Bachelor, Education::Graduate]
            [pick(&pop.education_shares, rng)],
        weather: [Weather::Mild, Weather::Hot, Weather::Cold][rng.random_range(0..3)],
        comb_survey,
        time_preference,
        arm,
        enrollment_day: pop.enrollment_start + rng.random_range(0..pop.enrollment_span_days),
    };

    let het = LogNormal::new(0.0, resp.gain_heterogeneity.max(1e-12)).expect("valid lognormal");
    let gains: [f64; 6] = std::array::from_fn(|j| {
        let mult = if resp.gain_heterogeneity > 0.0 { het.sample(rng) } else { 1.0 };
        resp.theme_gain[j] * mult
    });
    let mut receptivity = [resp.morning_receptivity, resp.afternoon_receptivity];
    match time_preference {
        TimePreference::Morning => receptivity[0] *= 1.0 + resp.preferred_time_bonus,
        TimePreference::Afternoon => receptivity[1] *= 1.0 + resp.preferred_time_bonus,
        TimePreference::NoPreference => {}
    }
    let weekend = normal(resp.weekend_factor_mean, resp.weekend_factor_sd, rng).clamp(0.3, 1.6);
    let weekday = (7.0 - 2.0 * weekend) / 5.0;
    let dow_multipliers = [weekday, weekday, weekday, weekday, weekday, weekend, weekend];
    let morning_share = normal(resp.morning_share_mean, 0.05, rng).clamp(0.1, 0.9);

    let response = UserResponseModel {
        personal_baseline,
        barriers,
        gains,
        receptivity,
        habituation_decay: resp.habituation_decay,
        dow_multipliers,
        drift_per_day: resp.drift_per_day,
        study_entry_lift: resp.study_entry_lift,
        noise_sd: resp.noise_sd,
        morning_share,
        favorability: resp.favorability,
        response_rate: resp.feedback_response_rate,
        action_bonus: resp.action_bonus,
    };
    Draw { profile, response }
}

/// Arm of participant `index`: arms are interleaved so every arm gets
/// exactly `n_per_arm` participants.
pub fn arm_of(config: &TrialConfig, index: usize) -> Arm {
    config.arms[index % config.arms.len()]
}

/// Draws `n_per_arm` eligible participants per configured arm.
///
/// Each participant is drawn from its own stream, re-drawn until the
/// simulated pre-study month passes the eligibility screen, has a usable
/// baseline and meets the baseline wear-time rule.
pub fn generate_population(config: &TrialConfig) -> Vec<SimParticipant> {
    use rayon::prelude::*;

    let pop = &config.population;
    // The eligibility screen acts on the 30-day observed mean, which carries
    // daily noise on top of the personal level.
    let level_var = pop.baseline_sd.powi(2) - config.response.noise_sd.powi(2) / f64::from(PRE_STUDY_DAYS as u32);
    let (mu, sigma) =
        calibrate_truncated_lognormal(pop.baseline_mean, level_var.max(1.0).sqrt(), ELIGIBILITY_THRESHOLD);
    let baseline_dist = LogNormal::new(mu, sigma).expect("valid lognormal");
    let seed = config.seed();
    let n = config.n_per_arm * config.arms.len();

    (0..n)
        .into_par_iter()
        .map(|index| {
            let id = ParticipantId(index as u32);
            let arm = arm_of(config, index);
            let mut rng = stream(seed, u64::from(id.0), 0, Purpose::Population);
            loop {
                let Draw { profile, response } =
                    draw_participant(id, arm, pop, &config.response, &baseline_dist, &mut rng);
                let pre_study: Vec<StepRecord> = (-PRE_STUDY_DAYS..=0)
                    .map(|day| simulate_day(&profile, &response, None, day, &mut rng))
                    .collect();
                let window = &pre_study[..PRE_STUDY_DAYS as usize];
                let eligible = check_eligibility(window).unwrap_or(false);
                if eligible
                    && compliance(window, Period::Baseline).compliant
                    && compute_baseline(&pre_study, profile.enrollment_day).is_ok()
                {
                    break SimParticipant { profile, response, pre_study };
                }
            }
        })
        .collect()
}
