//! A small four-arm trial: cohort, daily loop with retraining, attrition,
//! and what the RL arm's learner did.

use pearl::domain::Arm;
use pearl::sim::{run_trial, TrialConfig};

fn main() {
    let cfg = TrialConfig { n_per_arm: 100, study_days: 20, seed: Some(42), ..Default::default() };
    let log = run_trial(&cfg).expect("valid config");
    println!(
        "{} participants, {} step records, {} decisions, {} ratings, {} withdrawals",
        log.participants.len(),
        log.steps.len(),
        log.decisions.len(),
        log.feedback.iter().filter(|f| f.rating != pearl::domain::Rating::None).count(),
        log.withdrawals.len()
    );
    for arm in Arm::ALL {
        let d: Vec<_> = log.decisions.iter().filter(|d| d.arm == arm).collect();
        let rewarded: Vec<f64> = d.iter().filter_map(|d| d.reward).collect();
        let mean = rewarded.iter().sum::<f64>() / rewarded.len().max(1) as f64;
        println!("{arm:<8} {:>5} nudges, mean reward {mean:+.4}", d.len());
    }
    for l in log.learner_days.iter().step_by(4) {
        println!(
            "day {:>2}: {:>5} rewarded RL records, epsilon {:.1}, disagreement {}",
            l.day,
            l.rewarded_records,
            l.epsilon,
            l.disagreement.map(|d| format!("{d:.2}")).unwrap_or_else(|| "-".into())
        );
    }
}
