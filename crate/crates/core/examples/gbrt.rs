//! The in-repo gradient-boosted trees on a noisy step function, with the
//! training loss per round.

use pearl::gbrt::{fit_matrix, GbrtConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<[f64; 2]> = (0..2_000).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[0] >= 0.0)) + 0.1 * rng.random::<f64>()).collect();
    let x: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let w = vec![1.0; rows.len()];
    let model = fit_matrix(&x, &y, &w, &GbrtConfig::default()).unwrap();

    for (round, loss) in model.train_loss.iter().enumerate().step_by(10) {
        println!("round {round:>3}: weighted MSE {loss:.5}");
    }
    let mut gain = vec![0.0; 2];
    for t in &model.trees {
        t.accumulate_gain(&mut gain);
    }
    println!("{} trees; split gain x0 {:.1}, x1 {:.3}", model.trees.len(), gain[0], gain[1]);
    for x0 in [-0.5, -0.01, 0.01, 0.5] {
        println!("f({x0:+.2}, 0) = {:.3}", model.predict(&[x0, 0.0]));
    }
}
