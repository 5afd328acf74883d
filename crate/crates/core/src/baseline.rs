//! Eligibility screening, wear-time compliance and the pre-study walking
//! pattern the reward is measured against.
//!
//! Step records only split the day at 12:00, so the 24h windows that start at
//! the nudge anchors are reconstructed from the two buckets:
//!
//! * 06:00 window on day `d`: the whole of day `d` (no steps are assumed
//!   before 06:00).
//! * 15:00 window on day `d`: [`AFTERNOON_SHARE`] of day `d`'s evening bucket,
//!   the morning bucket of `d + 1` and the remaining 12:00-15:00 share of
//!   `d + 1`'s evening bucket.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{day_of_week, DeliveryTime, StepRecord};

/// Eligible participants average strictly fewer steps than this pre-study.
pub const ELIGIBILITY_THRESHOLD: f64 = 8_000.0;
/// A day with at least this many steps counts as a wear day.
pub const WEAR_THRESHOLD: u32 = 500;
/// Wear days required per period for a participant to be analysed.
pub const MIN_COMPLIANT_DAYS: usize = 7;
/// Fraction of the 12:00-24:00 bucket that falls after 15:00.
pub const AFTERNOON_SHARE: f64 = 9.0 / 12.0;
/// Baseline cells below this make the relative reward ill-conditioned.
pub const BASELINE_FLOOR: f64 = 100.0;
/// Length of the pre-study window in days.
pub const PRE_STUDY_DAYS: i32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("only {days} days of pre-study data, need at least {MIN_COMPLIANT_DAYS}")]
    InsufficientHistory { days: usize },
    #[error("baseline cell (morning={is_morning}, weekday={is_weekday}) is {value:.1} steps, below the {BASELINE_FLOOR} floor")]
    DegenerateBaseline { is_morning: bool, is_weekday: bool, value: f64 },
}

/// Mean steps in the 24h window after each anchor, split by weekday/weekend,
/// over the pre-study month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePattern {
    pub morning_weekday: f64,
    pub morning_weekend: f64,
    pub afternoon_weekday: f64,
    pub afternoon_weekend: f64,
    pub daily_mean: f64,
    pub daily_sd: f64,
}

impl BaselinePattern {
    pub fn cell(&self, is_morning: bool, is_weekday: bool) -> f64 {
        match (is_morning, is_weekday) {
            (true, true) => self.morning_weekday,
            (true, false) => self.morning_weekend,
            (false, true) => self.afternoon_weekday,
            (false, false) => self.afternoon_weekend,
        }
    }

    pub fn cells(&self) -> [(bool, bool, f64); 4] {
        [
            (true, true, self.morning_weekday),
            (true, false, self.morning_weekend),
            (false, true, self.afternoon_weekday),
            (false, false, self.afternoon_weekend),
        ]
    }

    /// Errors with `DegenerateBaseline` if the given cell is below the floor.
    pub fn checked_cell(&self, is_morning: bool, is_weekday: bool) -> Result<f64, BaselineError> {
        let value = self.cell(is_morning, is_weekday);
        if value < BASELINE_FLOOR || !value.is_finite() {
            return Err(BaselineError::DegenerateBaseline { is_morning, is_weekday, value });
        }
        Ok(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Period {
    Baseline,
    Month1,
    Month2,
}

impl Period {
    pub const ALL: [Period; 3] = [Period::Baseline, Period::Month1, Period::Month2];

    /// Inclusive study-day range.
    pub fn days(self) -> (i32, i32) {
        match self {
            Period::Baseline => (-PRE_STUDY_DAYS, -1),
            Period::Month1 => (1, 30),
            Period::Month2 => (31, 60),
        }
    }

    pub fn contains(self, day: i32) -> bool {
        let (lo, hi) = self.days();
        (lo..=hi).contains(&day)
    }

    pub fn name(self) -> &'static str {
        match self {
            Period::Baseline => "baseline",
            Period::Month1 => "month1",
            Period::Month2 => "month2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub period: Period,
    pub qualifying_days: usize,
    pub compliant: bool,
}

/// True iff mean daily steps over the supplied pre-study days is below 8,000.
pub fn check_eligibility(pre_study: &[StepRecord]) -> Result<bool, BaselineError> {
    if pre_study.len() < MIN_COMPLIANT_DAYS {
        return Err(BaselineError::InsufficientHistory { days: pre_study.len() });
    }
    let mean = pre_study.iter().map(|r| f64::from(r.total_steps())).sum::<f64>() / pre_study.len() as f64;
    Ok(mean < ELIGIBILITY_THRESHOLD)
}

/// Counts wear days (>= 500 steps) in `records`, which the caller restricts to `period`.
pub fn compliance(records: &[StepRecord], period: Period) -> ComplianceReport {
    let qualifying_days = records.iter().filter(|r| r.total_steps() >= WEAR_THRESHOLD).count();
    ComplianceReport { period, qualifying_days, compliant: qualifying_days >= MIN_COMPLIANT_DAYS }
}

/// Steps in the 24h window that opens at `time` on `day`. `None` when a
/// needed day is absent from `records` (which must be sorted by day).
pub fn window_steps(records: &[StepRecord], day: i32, time: DeliveryTime) -> Option<f64> {
    let find = |d: i32| records.binary_search_by_key(&d, |r| r.day).ok().map(|i| &records[i]);
    let today = find(day)?;
    match time {
        DeliveryTime::Morning => Some(f64::from(today.total_steps())),
        DeliveryTime::Afternoon => {
            let next = find(day + 1)?;
            Some(
                AFTERNOON_SHARE * f64::from(today.evening_steps)
                    + f64::from(next.morning_steps)
                    + (1.0 - AFTERNOON_SHARE) * f64::from(next.evening_steps),
            )
        }
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Builds the four-cell baseline from the pre-study days (`day < 0`).
///
/// Records for day 0 may be included; they only feed the tail of the last
/// afternoon window. `enrollment_day` is the epoch day of study day 0 and
/// fixes which days are weekdays.
pub fn compute_baseline(records: &[StepRecord], enrollment_day: i64) -> Result<BaselinePattern, BaselineError> {
    let mut sorted: Vec<StepRecord> = records.iter().copied().filter(|r| r.day <= 0).collect();
    sorted.sort_by_key(|r| r.day);
    sorted.dedup_by_key(|r| r.day);

    let pre: Vec<&StepRecord> = sorted.iter().filter(|r| r.day < 0).collect();
    if pre.is_empty() {
        return Err(BaselineError::InsufficientHistory { days: 0 });
    }
    let totals: Vec<f64> = pre.iter().map(|r| f64::from(r.total_steps())).collect();
    let (daily_mean, daily_sd) = mean_sd(&totals);

    // [is_morning][is_weekday] -> window totals
    let mut buckets: [[Vec<f64>; 2]; 2] = Default::default();
    for r in &pre {
        let weekday = day_of_week(enrollment_day + i64::from(r.day)) < 5;
        for time in DeliveryTime::ALL {
            if let Some(y) = window_steps(&sorted, r.day, time) {
                buckets[usize::from(time.is_morning())][usize::from(weekday)].push(y);
            }
        }
    }
    let cell = |m: bool, w: bool| {
        let xs = &buckets[usize::from(m)][usize::from(w)];
        if xs.is_empty() {
            daily_mean
        } else {
            mean_sd(xs).0
        }
    };
    let pattern = BaselinePattern {
        morning_weekday: cell(true, true),
        morning_weekend: cell(true, false),
        afternoon_weekday: cell(false, true),
        afternoon_weekend: cell(false, false),
        daily_mean,
        daily_sd,
    };
    for (m, w, _) in pattern.cells() {
        pattern.checked_cell(m, w)?;
    }
    Ok(pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ParticipantId;

    const PID: ParticipantId = ParticipantId(1);
    // Epoch day 19754 (2024-02-01) is a Thursday, so study day -3 is a Monday.
    const ENROLL: i64 = 19754;

    fn days(f: impl Fn(i32) -> (u32, u32)) -> Vec<StepRecord> {
        (-30..=0).map(|d| {
            let (m, e) = f(d);
            StepRecord::new(PID, d, m, e)
        })
        .collect()
    }

    #[test]
    fn eligibility_threshold_is_strict() {
        let below = days(|_| (2500, 2500));
        assert_eq!(check_eligibility(&below[..30]), Ok(true));
        let at = days(|_| (4000, 4000));
        assert_eq!(check_eligibility(&at[..30]), Ok(false));
        assert_eq!(
            check_eligibility(&at[..6]),
            Err(BaselineError::InsufficientHistory { days: 6 })
        );
    }

    #[test]
    fn eligibility_at_reported_cohort_mean() {
        // 30 days averaging 5,618.2: 24 days of 5,618 and 6 days of 5,619.
        let recs: Vec<StepRecord> = (0..30)
            .map(|k| StepRecord::new(PID, -30 + k, 2809, if k < 6 { 2810 } else { 2809 }))
            .collect();
        let mean = recs.iter().map(|r| r.total_steps() as f64).sum::<f64>() / 30.0;
        assert!((mean - 5618.2).abs() < 1e-9);
        assert_eq!(check_eligibility(&recs), Ok(true));
    }

    #[test]
    fn compliance_rules() {
        let mut recs: Vec<StepRecord> = (1..=7).map(|d| StepRecord::new(PID, d, 250, 250)).collect();
        recs.extend((8..=30).map(|d| StepRecord::new(PID, d, 0, 0)));
        let r = compliance(&recs, Period::Month1);
        assert_eq!(r.qualifying_days, 7);
        assert!(r.compliant);

        let heavy: Vec<StepRecord> = (1..=6).map(|d| StepRecord::new(PID, d, 5000, 5000)).collect();
        assert!(!compliance(&heavy, Period::Month1).compliant);

        let low: Vec<StepRecord> = (1..=30).map(|d| StepRecord::new(PID, d, 249, 250)).collect();
        let r = compliance(&low, Period::Month1);
        assert_eq!(r.qualifying_days, 0);
        assert!(!r.compliant);
    }

    #[test]
    fn constant_signal_gives_constant_cells() {
        let recs = days(|_| (1200, 1800));
        let b = compute_baseline(&recs, ENROLL).unwrap();
        for (_, _, v) in b.cells() {
            assert!((v - 3000.0).abs() < 1e-9, "{v}");
        }
        assert!((b.daily_mean - 3000.0).abs() < 1e-9);
        assert_eq!(b.daily_sd, 0.0);
    }

    #[test]
    fn weekday_weekend_split_hand_computed() {
        // Weekdays 6,000 (2,400 morning / 3,600 evening), weekends 2,000 (800 / 1,200).
        let split = |d: i32| {
            if day_of_week(ENROLL + d as i64) < 5 {
                (2400, 3600)
            } else {
                (800, 1200)
            }
        };
        let recs = days(split);
        let b = compute_baseline(&recs, ENROLL).unwrap();
        assert!((b.morning_weekday - 6000.0).abs() < 1e-9);
        assert!((b.morning_weekend - 2000.0).abs() < 1e-9);

        // Afternoon windows: 0.75 * evening(d) + morning(d+1) + 0.25 * evening(d+1).
        // Enumerate directly over the 30 pre-study days.
        let mut wd = Vec::new();
        let mut we = Vec::new();
        for d in -30..=-1 {
            let (_, e0) = split(d);
            let (m1, e1) = split(d + 1);
            let y = 0.75 * e0 as f64 + m1 as f64 + 0.25 * e1 as f64;
            if day_of_week(ENROLL + d as i64) < 5 {
                wd.push(y)
            } else {
                we.push(y)
            }
        }
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((b.afternoon_weekday - avg(&wd)).abs() < 1e-9);
        assert!((b.afternoon_weekend - avg(&we)).abs() < 1e-9);
        // Friday carries into Saturday and Sunday into Monday, so the
        // afternoon cells sit between the two levels.
        assert!(b.afternoon_weekday < 6000.0 && b.afternoon_weekday > 5000.0);
        assert!(b.afternoon_weekend > 2000.0 && b.afternoon_weekend < 4200.0);
    }

    #[test]
    fn zero_history_is_degenerate() {
        let recs = days(|_| (0, 0));
        assert!(matches!(
            compute_baseline(&recs, ENROLL),
            Err(BaselineError::DegenerateBaseline { .. })
        ));
    }

    #[test]
    fn missing_weekend_falls_back_to_daily_mean() {
        let recs: Vec<StepRecord> = days(|_| (1000, 1000))
            .into_iter()
            .filter(|r| r.day == 0 || day_of_week(ENROLL + r.day as i64) < 5)
            .collect();
        let b = compute_baseline(&recs, ENROLL).unwrap();
        assert_eq!(b.morning_weekend, b.daily_mean);
        assert_eq!(b.afternoon_weekend, b.daily_mean);
    }

    #[test]
    fn window_needs_next_day_for_afternoon() {
        let recs = days(|_| (1000, 1200));
        assert_eq!(window_steps(&recs, 0, DeliveryTime::Morning), Some(2200.0));
        assert_eq!(window_steps(&recs, 0, DeliveryTime::Afternoon), None);
        assert_eq!(window_steps(&recs, -1, DeliveryTime::Afternoon), Some(900.0 + 1000.0 + 300.0));
    }
}
