use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baseline::{Period, MIN_COMPLIANT_DAYS, WEAR_THRESHOLD};
use crate::domain::{Arm, ParticipantId, StepRecord};
use crate::sim::TrialLog;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantSeries {
    pub id: ParticipantId,
    pub arm: Arm,
    /// Sorted by day.
    pub records: Vec<StepRecord>,
}

impl ParticipantSeries {
    /// Mean total steps over the period's wear days, or `None` when the
    /// participant has fewer than the required number of wear days.
    pub fn period_mean(&self, period: Period) -> Option<f64> {
        let (lo, hi) = period.days();
        let start = self.records.partition_point(|r| r.day < lo);
        let end = self.records.partition_point(|r| r.day <= hi);
        let (sum, n) = self.records[start..end]
            .iter()
            .map(|r| r.total_steps())
            .filter(|&t| t >= WEAR_THRESHOLD)
            .fold((0.0, 0usize), |(s, n), t| (s + f64::from(t), n + 1));
        (n >= MIN_COMPLIANT_DAYS).then(|| sum / n as f64)
    }

    /// Period mean minus baseline mean, when both periods are compliant.
    pub fn change(&self, period: Period) -> Option<f64> {
        Some(self.period_mean(period)? - self.period_mean(Period::Baseline)?)
    }
}

/// Daily step records grouped by participant, ordered by participant id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepPanel {
    pub participants: Vec<ParticipantSeries>,
}

impl StepPanel {
    pub fn from_log(log: &TrialLog) -> Self {
        let arms: BTreeMap<ParticipantId, Arm> = log.participants.iter().map(|p| (p.id, p.arm)).collect();
        Self::from_records(log.steps.iter().filter_map(|r| arms.get(&r.participant_id).map(|a| (*a, *r))))
    }

    /// Groups `(arm, record)` pairs. A participant's arm is taken from its
    /// first record.
    pub fn from_records(records: impl IntoIterator<Item = (Arm, StepRecord)>) -> Self {
        let mut by_id: BTreeMap<ParticipantId, ParticipantSeries> = BTreeMap::new();
        for (arm, r) in records {
            by_id
                .entry(r.participant_id)
                .or_insert_with(|| ParticipantSeries { id: r.participant_id, arm, records: Vec::new() })
                .records
                .push(r);
        }
        let mut participants: Vec<ParticipantSeries> = by_id.into_values().collect();
        for p in &mut participants {
            p.records.sort_by_key(|r| r.day);
        }
        StepPanel { participants }
    }

    pub fn arm(&self, arm: Arm) -> impl Iterator<Item = &ParticipantSeries> {
        self.participants.iter().filter(move |p| p.arm == arm)
    }

    /// Arms with at least one participant, in canonical order.
    pub fn arms(&self) -> Vec<Arm> {
        Arm::ALL.into_iter().filter(|a| self.arm(*a).next().is_some()).collect()
    }

    pub fn max_day(&self) -> i32 {
        self.participants.iter().filter_map(|p| p.records.last()).map(|r| r.day).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyMean {
    pub arm: Arm,
    pub day: i32,
    pub mean_steps: f64,
    /// Participants with a wear day on `day`.
    pub n: usize,
}

/// Mean steps per arm and study day over wear days, for days `1..=last_day`.
/// Arm-days with no wear data are skipped.
pub fn daily_means(panel: &StepPanel, last_day: i32) -> Vec<DailyMean> {
    let mut out = Vec::new();
    for arm in panel.arms() {
        let mut acc = vec![(0.0, 0usize); last_day.max(0) as usize];
        for p in panel.arm(arm) {
            for r in p.records.iter().filter(|r| r.day >= 1 && r.day <= last_day) {
                if r.total_steps() >= WEAR_THRESHOLD {
                    let slot = &mut acc[(r.day - 1) as usize];
                    slot.0 += f64::from(r.total_steps());
                    slot.1 += 1;
                }
            }
        }
        for (k, (sum, n)) in acc.into_iter().enumerate() {
            if n > 0 {
                out.push(DailyMean { arm, day: k as i32 + 1, mean_steps: sum / n as f64, n });
            }
        }
    }
    out
}
