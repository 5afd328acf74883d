//! Reward models, greedy choice, importance sampling and disagreement on
//! bandits with known generators.

use pearl::domain::{Action, Arm, DecisionRecord, ParticipantId, N_ACTIONS};
use pearl::features::{FeatureVector, N_FEATURES};
use pearl::gbrt::{fit_gbrt, GbrtConfig, GbrtError};
use pearl::learner::{
    argmax, bootstrap_reward_models, choose_epsilon, ensemble_disagreement, feature_importance, is_value_estimate,
    LearnerError,
};
use pearl::{fit_reward_models, greedy_action, LearnerConfig, RewardModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn rec(action: usize, propensity: f64, reward: f64, x: FeatureVector) -> DecisionRecord {
    DecisionRecord {
        participant_id: ParticipantId(0),
        arm: Arm::Rl,
        day: 1,
        features: x,
        action: Action::from_index(action).unwrap(),
        propensity,
        message_id: String::new(),
        reward: Some(reward),
        feedback: None,
    }
}

fn stateless() -> FeatureVector {
    FeatureVector(vec![0.0; N_FEATURES])
}

fn noisy_features(rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector((0..N_FEATURES).map(|_| rng.random::<f64>()).collect())
}

#[test]
fn stateless_bandit_recovers_best_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let history: Vec<DecisionRecord> = (0..10_000)
        .map(|_| {
            let a = rng.random_range(0..N_ACTIONS);
            let mean = if a == 0 { 0.5 } else { 0.0 };
            rec(a, 1.0 / 12.0, mean + noise.sample(&mut rng), stateless())
        })
        .collect();
    let model = fit_reward_models(&history, &LearnerConfig::default());
    let p = model.predict(&stateless());
    assert!((p[0] - 0.5).abs() < 0.05, "{}", p[0]);
    assert!(p[1..].iter().all(|v| v.abs() < 0.05), "{p:?}");
    assert_eq!(greedy_action(&model, &stateless()).index(), 0);
}

#[test]
fn irrelevant_features_keep_the_best_action_on_top() {
    // Same bandit, but every record carries 49 uniform noise features the
    // trees can (wrongly) split on.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let history: Vec<DecisionRecord> = (0..10_000)
        .map(|_| {
            let a = rng.random_range(0..N_ACTIONS);
            let mean = if a == 0 { 0.5 } else { 0.0 };
            rec(a, 1.0 / 12.0, mean + noise.sample(&mut rng), noisy_features(&mut rng))
        })
        .collect();
    let model = fit_reward_models(&history, &LearnerConfig::default());
    for _ in 0..50 {
        let x = noisy_features(&mut rng);
        let p = model.predict(&x);
        assert!((p[0] - 0.5).abs() < 0.25, "{}", p[0]);
        assert_eq!(greedy_action(&model, &x).index(), 0);
    }
}

#[test]
fn constant_propensity_equals_unweighted_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<(usize, f64, FeatureVector)> =
        (0..3_000).map(|_| (rng.random_range(0..N_ACTIONS), rng.random::<f64>(), noisy_features(&mut rng))).collect();
    let cfg = LearnerConfig::default();
    let model = fit_reward_models(&rows.iter().map(|(a, r, x)| rec(*a, 1.0 / 12.0, *r, x.clone())).collect::<Vec<_>>(), &cfg);
    for k in 0..N_ACTIONS {
        let mine: Vec<(FeatureVector, f64, f64)> =
            rows.iter().filter(|(a, _, _)| *a == k).map(|(_, r, x)| (x.clone(), *r, 1.0)).collect();
        let direct = fit_gbrt(&mine, &cfg.gbrt()).unwrap();
        for (x, _, _) in mine.iter().take(20) {
            assert!((direct.predict(x.as_slice()) - model.actions[k].ensemble.predict(x.as_slice())).abs() < 1e-12);
        }
    }
}

#[test]
fn missing_action_falls_back_to_global_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let history: Vec<DecisionRecord> = (0..2_000)
        .map(|_| {
            let mut a = rng.random_range(0..N_ACTIONS - 1);
            if a >= 7 {
                a += 1;
            }
            rec(a, 1.0 / 11.0, rng.random::<f64>(), noisy_features(&mut rng))
        })
        .collect();
    let model = fit_reward_models(&history, &LearnerConfig::default());
    let mean = history.iter().map(|r| r.reward.unwrap()).sum::<f64>() / history.len() as f64;
    assert!(model.actions[7].fallback);
    assert_eq!(model.actions[7].samples, 0);
    assert!((model.predict(&noisy_features(&mut rng))[7] - mean).abs() < 1e-12);
}

#[test]
fn unrewarded_records_are_ignored() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut history: Vec<DecisionRecord> =
        (0..1_500).map(|_| rec(rng.random_range(0..N_ACTIONS), 1.0 / 12.0, rng.random(), noisy_features(&mut rng))).collect();
    let cfg = LearnerConfig::default();
    let base = fit_reward_models(&history, &cfg);
    history.push(DecisionRecord { reward: None, ..history[0].clone() });
    assert_eq!(fit_reward_models(&history, &cfg), base);
}

#[test]
fn fitting_is_deterministic_and_serializes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let history: Vec<DecisionRecord> =
        (0..2_000).map(|_| rec(rng.random_range(0..N_ACTIONS), 0.25, rng.random(), noisy_features(&mut rng))).collect();
    let cfg = LearnerConfig::default();
    let a = fit_reward_models(&history, &cfg);
    let b = fit_reward_models(&history, &cfg);
    assert_eq!(a, b);
    let back = RewardModel::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    assert!(RewardModel::from_json(&a.to_json().replacen("\"format_version\": 1", "\"format_version\": 99", 1)).is_err());
    assert_eq!(bootstrap_reward_models(&history, &cfg, 3, 7), bootstrap_reward_models(&history, &cfg, 3, 7));
}

#[test]
fn gbrt_step_function() {
    let rows: Vec<(FeatureVector, f64, f64)> = (0..500)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / 499.0;
            (FeatureVector(vec![x]), if x < 0.0 { 0.0 } else { 1.0 }, 1.0)
        })
        .collect();
    let m = fit_gbrt(&rows, &GbrtConfig::default()).unwrap();
    let mse = rows.iter().map(|(x, y, _)| (m.predict(x.as_slice()) - y).powi(2)).sum::<f64>() / 500.0;
    assert!(mse < 0.01, "{mse}");
    assert!(matches!(fit_gbrt(&rows[..5], &GbrtConfig::default()), Err(GbrtError::TooFewSamples { .. })));
}

#[test]
fn importance_sampling_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let history: Vec<DecisionRecord> =
        (0..500).map(|_| rec(rng.random_range(0..N_ACTIONS), 1.0 / 12.0, rng.random(), FeatureVector::zeros())).collect();
    let mean = history.iter().map(|r| r.reward.unwrap()).sum::<f64>() / 500.0;
    let same = is_value_estimate(&history, |_| [1.0 / 12.0; N_ACTIONS]).unwrap();
    assert!((same - mean).abs() < 1e-12);

    let only0: Vec<DecisionRecord> = history.iter().filter(|r| r.action.index() != 0).cloned().collect();
    let mut pi = [0.0; N_ACTIONS];
    pi[0] = 1.0;
    assert_eq!(is_value_estimate(&only0, |_| pi).unwrap(), 0.0);

    let mut bad = history.clone();
    bad[3].propensity = 0.0;
    assert!(matches!(is_value_estimate(&bad, |_| pi), Err(LearnerError::ZeroPropensity { index: 3, .. })));
    assert!(matches!(is_value_estimate(&[], |_| pi), Err(LearnerError::EmptyHistory)));
}

#[test]
fn disagreement_and_epsilon() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let history: Vec<DecisionRecord> =
        (0..3_000).map(|_| rec(rng.random_range(0..N_ACTIONS), 1.0 / 12.0, rng.random(), noisy_features(&mut rng))).collect();
    let cfg = LearnerConfig::default();
    let m = fit_reward_models(&history, &cfg);
    let probe: Vec<FeatureVector> = (0..100).map(|_| noisy_features(&mut rng)).collect();
    assert_eq!(ensemble_disagreement(&[m.clone(), m.clone(), m.clone()], &probe), 0.0);

    // Pure-noise rewards: bootstrap refits disagree somewhere, and the rate
    // is what direct enumeration says.
    let boots = bootstrap_reward_models(&history, &cfg, 5, 1);
    let d = ensemble_disagreement(&boots, &probe);
    let direct = probe
        .iter()
        .filter(|x| {
            let picks: Vec<usize> = boots.iter().map(|b| argmax(&b.predict(x))).collect();
            picks.iter().any(|p| *p != picks[0])
        })
        .count() as f64
        / probe.len() as f64;
    assert_eq!(d, direct);
    assert!(d > 0.0 && d <= 1.0);

    assert_eq!(choose_epsilon(0.0, &cfg), 0.7);
    assert_eq!(choose_epsilon(1.0, &cfg), 0.8);
    assert_eq!(choose_epsilon(0.3, &cfg), 0.7);
}

#[test]
fn feature_importance_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let constant: Vec<DecisionRecord> =
        (0..1_200).map(|_| rec(rng.random_range(0..N_ACTIONS), 1.0 / 12.0, 0.25, noisy_features(&mut rng))).collect();
    let ranking = feature_importance(&fit_reward_models(&constant, &LearnerConfig::default()));
    assert!(ranking.iter().all(|(_, s)| *s == 0.0));

    let signal: Vec<DecisionRecord> = (0..6_000)
        .map(|_| {
            let x = noisy_features(&mut rng);
            let r = 2.0 * x.0[33] + 0.05 * rng.random::<f64>();
            rec(rng.random_range(0..N_ACTIONS), 1.0 / 12.0, r, x)
        })
        .collect();
    let ranking = feature_importance(&fit_reward_models(&signal, &LearnerConfig::default()));
    assert_eq!(ranking[0].0, "feedback_up_7d");
    assert!(ranking.iter().all(|(_, s)| *s >= 0.0));
    assert!((ranking.iter().map(|(_, s)| s).sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn argmax_ties_go_low() {
    assert_eq!(argmax(&[0.3; N_ACTIONS]), 0);
    let inc: [f64; N_ACTIONS] = std::array::from_fn(|k| k as f64);
    assert_eq!(argmax(&inc), 11);
    assert_eq!(argmax(&inc.map(|v| v + 100.0)), 11);
}
