//! Importance-sampling value estimates of candidate policies from data
//! logged by a uniform random policy, against the known truth.

use pearl::domain::{Action, Arm, DecisionRecord, ParticipantId, N_ACTIONS};
use pearl::features::FeatureVector;
use pearl::learner::is_value_estimate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let means: Vec<f64> = (0..N_ACTIONS).map(|k| 0.01 * k as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let history: Vec<DecisionRecord> = (0..50_000)
        .map(|_| {
            let a = rng.random_range(0..N_ACTIONS);
            DecisionRecord {
                participant_id: ParticipantId(0),
                arm: Arm::Random,
                day: 1,
                features: FeatureVector::zeros(),
                action: Action::from_index(a).unwrap(),
                propensity: 1.0 / N_ACTIONS as f64,
                message_id: String::new(),
                reward: Some(means[a] + noise.sample(&mut rng)),
                feedback: None,
            }
        })
        .collect();

    let uniform = [1.0 / N_ACTIONS as f64; N_ACTIONS];
    let mut best = [0.0; N_ACTIONS];
    best[N_ACTIONS - 1] = 1.0;
    let mut egreedy = [0.8 / N_ACTIONS as f64; N_ACTIONS];
    egreedy[N_ACTIONS - 1] += 0.2;
    for (name, pi) in [("uniform", uniform), ("always best", best), ("eps-greedy 0.8", egreedy)] {
        let truth: f64 = pi.iter().zip(&means).map(|(p, m)| p * m).sum();
        let est = is_value_estimate(&history, |_| pi).unwrap();
        println!("{name:<15} IS estimate {est:.4}  truth {truth:.4}");
    }
}
