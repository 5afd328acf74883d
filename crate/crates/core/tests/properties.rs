//! Property-based invariants.

use pearl::baseline::BaselinePattern;
use pearl::compute_reward;
use pearl::domain::{Action, TimePreference, N_ACTIONS};
use pearl::policy::{egreedy_probability, FixedPolicyState};
use pearl::stats::bh_adjust;
use proptest::prelude::*;

fn pattern(c: [f64; 4]) -> BaselinePattern {
    BaselinePattern {
        morning_weekday: c[0],
        morning_weekend: c[1],
        afternoon_weekday: c[2],
        afternoon_weekend: c[3],
        daily_mean: 0.0,
        daily_sd: 0.0,
    }
}

proptest! {
    #[test]
    fn reward_bounded_and_zero_at_baseline(
        cells in prop::array::uniform4(100.0f64..30_000.0),
        y in 0.0f64..60_000.0,
        m: bool,
        w: bool,
    ) {
        let b = pattern(cells);
        prop_assert_eq!(compute_reward(b.cell(m, w), &b, m, w).unwrap().value, 0.0);
        prop_assert!(compute_reward(y, &b, m, w).unwrap().value >= -1.0);
    }

    #[test]
    fn reward_rejects_sub_floor_cells(cell in 0.0f64..100.0, y in 0.0f64..10_000.0) {
        let b = pattern([cell, 5_000.0, 5_000.0, 5_000.0]);
        prop_assert!(compute_reward(y, &b, true, true).is_err());
    }

    #[test]
    fn bh_is_monotone_and_permutation_equivariant(
        p in prop::collection::vec(0.0f64..=1.0, 1..12),
        seed in any::<u64>(),
    ) {
        let adj = bh_adjust(&p);
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|a, b| p[*a].total_cmp(&p[*b]));
        for w in order.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]]);
        }
        prop_assert!(adj.iter().zip(&p).all(|(a, q)| *a >= *q * (1.0 - 1e-15) && *a <= 1.0));

        let mut perm: Vec<usize> = (0..p.len()).collect();
        let mut s = seed;
        for i in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let adj2 = bh_adjust(&permuted);
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(adj2[k], adj[i]);
        }
    }

    #[test]
    fn policy_distributions_sum_to_one(
        barriers in prop::array::uniform6(0.0f64..4.0),
        greedy in 0..N_ACTIONS,
        eps in 0.0f64..=1.0,
        pref in 0..3usize,
    ) {
        let pref = [TimePreference::Morning, TimePreference::Afternoon, TimePreference::NoPreference][pref];
        let s = FixedPolicyState::from_barriers(barriers, pref);
        let total: f64 = Action::all().map(|a| s.probability(a)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let g = Action::from_index(greedy).unwrap();
        let total: f64 = Action::all().map(|a| egreedy_probability(g, eps, a)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(Action::all().all(|a| egreedy_probability(g, eps, a) >= eps / 12.0 - 1e-15));
    }
}
