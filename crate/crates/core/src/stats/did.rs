use serde::{Deserialize, Serialize};

use super::panel::StepPanel;
use super::{bh_adjust, normal_p_value, StatsError};
use crate::baseline::Period;
use crate::domain::Arm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// E.g. `"RL vs Random"`.
    pub label: String,
    pub treated: Arm,
    pub reference: Arm,
    pub period: Period,
    pub b: f64,
    /// HC1 robust standard error.
    pub se: f64,
    pub p: f64,
    pub adjusted_p: Option<f64>,
    pub n_treated: usize,
    pub n_reference: usize,
}

/// Change-score difference-in-differences: OLS of each participant's
/// (period mean - baseline mean) on an indicator for `treated`, with `reference`
/// as the intercept group. Only participants compliant in both the baseline
/// and `period` contribute.
pub fn did_regression(
    panel: &StepPanel,
    treated: Arm,
    reference: Arm,
    period: Period,
) -> Result<RegressionResult, StatsError> {
    if period == Period::Baseline {
        return Err(StatsError::DegenerateDesign("the baseline period has no change score".into()));
    }
    if treated == reference {
        return Err(StatsError::DegenerateDesign(format!("{treated} compared with itself")));
    }
    let ca: Vec<f64> = panel.arm(treated).filter_map(|p| p.change(period)).collect();
    let cb: Vec<f64> = panel.arm(reference).filter_map(|p| p.change(period)).collect();
    for (arm, c) in [(treated, &ca), (reference, &cb)] {
        if c.len() < 2 {
            return Err(StatsError::DegenerateDesign(format!(
                "{arm} has {} participants with a {} change score",
                c.len(),
                period.name()
            )));
        }
    }
    // With a single dummy regressor the OLS coefficient is the difference of
    // group means and the HC1 variance is n/(n-2) * sum_g SSR_g / n_g^2.
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&ca), mean(&cb));
    let b = ma - mb;
    let hc0 = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64).powi(2);
    let n = (ca.len() + cb.len()) as f64;
    let se = ((hc0(&ca, ma) + hc0(&cb, mb)) * n / (n - 2.0)).sqrt();
    Ok(RegressionResult {
        label: format!("{treated} vs {reference}"),
        treated,
        reference,
        period,
        b,
        se,
        p: normal_p_value(b / se),
        adjusted_p: None,
        n_treated: ca.len(),
        n_reference: cb.len(),
    })
}

/// The month-2 comparisons forming the primary family for the BH adjustment.
pub fn primary_comparisons() -> [(Arm, Arm); 4] {
    [(Arm::Random, Arm::Control), (Arm::Fixed, Arm::Random), (Arm::Rl, Arm::Random), (Arm::Rl, Arm::Fixed)]
}

/// All pairwise comparisons among the arms present, for months 1 and 2,
/// with BH-adjusted p-values on the primary month-2 family.
pub fn table4(panel: &StepPanel) -> Result<Vec<RegressionResult>, StatsError> {
    let pairs = [
        (Arm::Random, Arm::Control),
        (Arm::Fixed, Arm::Control),
        (Arm::Rl, Arm::Control),
        (Arm::Fixed, Arm::Random),
        (Arm::Rl, Arm::Random),
        (Arm::Rl, Arm::Fixed),
    ];
    let present = panel.arms();
    let mut out = Vec::new();
    for period in [Period::Month1, Period::Month2] {
        for (a, b) in pairs {
            if present.contains(&a) && present.contains(&b) {
                out.push(did_regression(panel, a, b, period)?);
            }
        }
    }
    if out.is_empty() {
        return Err(StatsError::DegenerateDesign(format!("need two arms, found {}", present.len())));
    }
    let primary: Vec<usize> = out
        .iter()
        .enumerate()
        .filter(|(_, r)| r.period == Period::Month2 && primary_comparisons().contains(&(r.treated, r.reference)))
        .map(|(i, _)| i)
        .collect();
    let adjusted = bh_adjust(&primary.iter().map(|&i| out[i].p).collect::<Vec<_>>());
    for (i, adj) in primary.into_iter().zip(adjusted) {
        out[i].adjusted_p = Some(adj);
    }
    Ok(out)
}
