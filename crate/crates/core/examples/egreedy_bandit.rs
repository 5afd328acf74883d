//! Per-action reward models on a logged contextual bandit, the greedy
//! action they imply, ensemble disagreement and the resulting ε.

use pearl::domain::{Action, Arm, DecisionRecord, ParticipantId, N_ACTIONS};
use pearl::features::{FeatureVector, PRE_MEAN_FEATURE};
use pearl::learner::{bootstrap_reward_models, choose_epsilon, ensemble_disagreement, feature_importance};
use pearl::policy::egreedy_probability;
use pearl::{fit_reward_models, greedy_action, LearnerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Action 3 pays off for low walkers, action 8 for high walkers.
fn true_reward(action: usize, pre_mean: f64) -> f64 {
    match action {
        3 if pre_mean < 5_000.0 => 0.15,
        8 if pre_mean >= 5_000.0 => 0.12,
        _ => 0.0,
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let history: Vec<DecisionRecord> = (0..12_000)
        .map(|i| {
            let mut x = FeatureVector::zeros();
            x.0[PRE_MEAN_FEATURE] = rng.random_range(2_000.0..8_000.0);
            let a = rng.random_range(0..N_ACTIONS);
            DecisionRecord {
                participant_id: ParticipantId(i % 300),
                arm: Arm::Rl,
                day: 1 + (i / 300) as i32,
                reward: Some(true_reward(a, x.0[PRE_MEAN_FEATURE]) + noise.sample(&mut rng)),
                features: x,
                action: Action::from_index(a).unwrap(),
                propensity: 1.0 / N_ACTIONS as f64,
                message_id: String::new(),
                feedback: None,
            }
        })
        .collect();

    let cfg = LearnerConfig::default();
    let model = fit_reward_models(&history, &cfg);
    for steps in [3_000.0, 7_000.0] {
        let mut x = FeatureVector::zeros();
        x.0[PRE_MEAN_FEATURE] = steps;
        let g = greedy_action(&model, &x);
        println!(
            "pre-study mean {steps:.0}: greedy action {} ({} {:?}); P(greedy) at eps 0.7 = {:.3}",
            g.index(),
            g.theme.name(),
            g.time,
            egreedy_probability(g, 0.7, g)
        );
    }
    println!("top feature: {:?}", feature_importance(&model)[0]);

    let boots = bootstrap_reward_models(&history, &cfg, cfg.ensemble_count, 99);
    let probe: Vec<FeatureVector> = history.iter().take(200).map(|r| r.features.clone()).collect();
    let d = ensemble_disagreement(&boots, &probe);
    println!("disagreement over {} probe states: {d:.3} -> epsilon {}", probe.len(), choose_epsilon(d, &cfg));
}
