//! Monte-Carlo checks of the arm policies and message sampling.

use pearl::domain::{sample_message, Action, CombSurvey, DeliveryTime, MessageRepository, NudgeTheme, TimePreference, N_ACTIONS};
use pearl::policy::{
    build_fixed_state, control_policy, egreedy_policy, egreedy_probability, fixed_policy, random_policy,
    FixedPolicyState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi2_p(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let stat: f64 = counts.iter().zip(probs).map(|(c, p)| (*c as f64 - p * n as f64).powi(2) / (p * n as f64)).sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

#[test]
fn messages_are_uniform_within_a_bucket() {
    let repo = MessageRepository::synthetic(10);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bucket = repo.bucket(NudgeTheme::Prioritization);
    let mut counts = vec![0usize; bucket.len()];
    for _ in 0..20_000 {
        let m = sample_message(&repo, NudgeTheme::Prioritization, &mut rng).unwrap();
        assert_eq!(m.theme, NudgeTheme::Prioritization);
        counts[bucket.iter().position(|b| b.id == m.id).unwrap()] += 1;
    }
    assert!(chi2_p(&counts, &vec![0.1; 10]) > 0.001);
}

#[test]
fn control_never_acts() {
    let d = control_policy();
    assert!(d.action.is_none());
}

#[test]
fn random_policy_is_uniform_over_twelve() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = [0usize; N_ACTIONS];
    for _ in 0..60_000 {
        let d = random_policy(&mut rng);
        assert_eq!(d.propensity, 1.0 / 12.0);
        counts[d.action.unwrap().index()] += 1;
    }
    assert!(chi2_p(&counts, &[1.0 / 12.0; N_ACTIONS]) > 0.001);
}

#[test]
fn fixed_arm_follows_barriers() {
    // Ability answered 1 everywhere (barrier 4), everything else 5 (barrier 0).
    let map = pearl::domain::default_question_map();
    let responses = map.map(|t| if t == NudgeTheme::Ability { 1 } else { 5 });
    let state = build_fixed_state(&CombSurvey::new(responses).unwrap(), TimePreference::Afternoon);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut afternoon = 0;
    for _ in 0..5_000 {
        let a = fixed_policy(&state, &mut rng).action.unwrap();
        assert_eq!(a.theme, NudgeTheme::Ability);
        afternoon += usize::from(a.time == DeliveryTime::Afternoon);
    }
    assert!((afternoon as f64 / 5_000.0 - 0.7).abs() < 0.03);

    // All 5s: no barrier anywhere, so themes are uniform.
    let flat = build_fixed_state(&CombSurvey::new([5; 20]).unwrap(), TimePreference::NoPreference);
    for p in flat.theme_probs() {
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
    }
    assert_eq!(flat.time_probs(), &[0.5, 0.5]);
}

#[test]
fn fixed_probabilities_sum_to_one() {
    let s = FixedPolicyState::from_barriers([0.5, 1.5, 0.0, 2.0, 3.25, 0.75], TimePreference::Morning);
    let total: f64 = Action::all().map(|a| s.probability(a)).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let d = fixed_policy(&s, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(d.propensity, s.probability(d.action.unwrap()));
}

#[test]
fn egreedy_boundaries() {
    let greedy = Action::from_index(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1_000 {
        let d = egreedy_policy(greedy, 0.0, &mut rng);
        assert_eq!(d.action, Some(greedy));
        assert_eq!(d.propensity, 1.0);
    }
    let mut counts = [0usize; N_ACTIONS];
    for _ in 0..24_000 {
        let d = egreedy_policy(greedy, 1.0, &mut rng);
        assert!((d.propensity - 1.0 / 12.0).abs() < 1e-15);
        counts[d.action.unwrap().index()] += 1;
    }
    assert!(chi2_p(&counts, &[1.0 / 12.0; N_ACTIONS]) > 0.001);
}

#[test]
fn egreedy_probabilities_match_definition() {
    let greedy = Action::from_index(9).unwrap();
    for eps in [0.7, 0.8] {
        let total: f64 = Action::all().map(|a| egreedy_probability(greedy, eps, a)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((egreedy_probability(greedy, eps, greedy) - (1.0 - eps + eps / 12.0)).abs() < 1e-15);
    }
}
