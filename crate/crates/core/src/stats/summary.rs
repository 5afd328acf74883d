use serde::{Deserialize, Serialize};

use super::panel::StepPanel;
use crate::baseline::Period;
use crate::domain::Arm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodCell {
    pub arm: Arm,
    pub period: Period,
    pub mean: f64,
    /// Sample SD (n - 1) of the per-participant means; 0 when n = 1.
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub cells: Vec<PeriodCell>,
}

impl PeriodSummary {
    pub fn cell(&self, arm: Arm, period: Period) -> Option<&PeriodCell> {
        self.cells.iter().find(|c| c.arm == arm && c.period == period)
    }
}

/// Per-participant period means over wear days, then arm-level mean and SD.
/// Participants failing a period's compliance rule are left out of that
/// cell; cells with nobody in them are omitted.
pub fn summarize_periods(panel: &StepPanel) -> PeriodSummary {
    let mut cells = Vec::new();
    for arm in panel.arms() {
        for period in Period::ALL {
            let means: Vec<f64> = panel.arm(arm).filter_map(|p| p.period_mean(period)).collect();
            if means.is_empty() {
                continue;
            }
            let n = means.len();
            let mean = means.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            cells.push(PeriodCell { arm, period, mean, sd, n });
        }
    }
    PeriodSummary { cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ParticipantId, StepRecord};

    fn panel(levels: &[(u32, u32)]) -> StepPanel {
        StepPanel::from_records(levels.iter().flat_map(|&(id, steps)| {
            (-30..=60).map(move |d| (Arm::Control, StepRecord::new(ParticipantId(id), d, steps / 2, steps - steps / 2)))
        }))
    }

    #[test]
    fn constant_participant() {
        let s = summarize_periods(&panel(&[(0, 5_000)]));
        assert_eq!(s.cells.len(), 3);
        for c in &s.cells {
            assert_eq!((c.mean, c.sd, c.n), (5_000.0, 0.0, 1));
        }
    }

    #[test]
    fn two_participants_sample_sd() {
        let s = summarize_periods(&panel(&[(0, 4_000), (1, 6_000)]));
        let c = s.cell(Arm::Control, Period::Month1).unwrap();
        assert_eq!(c.mean, 5_000.0);
        // sqrt(2 * 1000^2 / 1)
        assert!((c.sd - 1_414.213_562_373_095).abs() < 1e-9);
    }
}
