//! Helpers shared by the integration tests: hand-built step panels and
//! textbook reference statistics.

#![allow(dead_code)]

use pearl::domain::{Arm, ParticipantId, StepRecord};
use pearl::stats::StepPanel;

/// Splits a daily total into the two half-day buckets.
pub fn record(id: u32, day: i32, total: u32) -> StepRecord {
    let morning = total * 2 / 5;
    StepRecord::new(ParticipantId(id), day, morning, total - morning)
}

/// A participant series covering the baseline month and `study_days` days.
pub fn series(id: u32, baseline: &[u32], study: &[u32]) -> Vec<StepRecord> {
    let mut out: Vec<StepRecord> = baseline.iter().enumerate().map(|(i, s)| record(id, -30 + i as i32, *s)).collect();
    out.extend(study.iter().enumerate().map(|(i, s)| record(id, 1 + i as i32, *s)));
    out
}

pub fn panel_of(rows: Vec<(Arm, Vec<StepRecord>)>) -> StepPanel {
    StepPanel::from_records(rows.into_iter().flat_map(|(arm, recs)| recs.into_iter().map(move |r| (arm, r))))
}

/// Mean of days with at least 500 steps within `lo..=hi`, if there are at
/// least 7 of them.
pub fn wear_mean(records: &[StepRecord], lo: i32, hi: i32) -> Option<f64> {
    let v: Vec<f64> = records
        .iter()
        .filter(|r| r.day >= lo && r.day <= hi && r.total_steps() >= 500)
        .map(|r| f64::from(r.total_steps()))
        .collect();
    (v.len() >= 7).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// One-sample Kolmogorov–Smirnov test against U(0, 1): returns `(D, p)`
/// with the asymptotic Kolmogorov distribution and Stephens' correction.
pub fn ks_uniform(sample: &[f64]) -> (f64, f64) {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in s.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - x).max(x - i as f64 / n);
    }
    let t = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1.0f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
    }
    (d, p.clamp(0.0, 1.0))
}
