//! The survey-driven fixed arm: barrier scores, the implied action
//! distribution, and what 10,000 draws look like.

use pearl::domain::{CombSurvey, NudgeTheme, TimePreference};
use pearl::policy::{barrier_scores, build_fixed_state, fixed_policy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let survey = CombSurvey::new([2, 4, 1, 3, 5, 2, 3, 4, 4, 1, 2, 5, 3, 3, 4, 2, 1, 4, 5, 3]).unwrap();
    let state = build_fixed_state(&survey, TimePreference::Morning);
    let barriers = barrier_scores(&survey);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000;
    let mut counts = [0usize; 6];
    let mut morning = 0;
    for _ in 0..n {
        let a = fixed_policy(&state, &mut rng).action.unwrap();
        counts[a.theme.code()] += 1;
        morning += usize::from(a.time.is_morning());
    }
    println!("{:<22} {:>7} {:>7} {:>9}", "theme", "barrier", "p", "observed");
    for t in NudgeTheme::ALL {
        let k = t.code();
        println!("{:<22} {:>7.2} {:>7.3} {:>9.3}", t.name(), barriers[k], state.theme_probs()[k], counts[k] as f64 / n as f64);
    }
    println!("morning share {:.3} (preference weight 0.7)", morning as f64 / n as f64);
}
