//! Builds a message repository, round-trips it through JSON and samples a
//! message for every action.

use pearl::domain::{sample_message, Action, MessageRepository};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let repo = MessageRepository::synthetic(3);
    let json = repo.to_json_string();
    let back = MessageRepository::from_json_str(&json).expect("round trip");
    assert_eq!(back, repo);
    println!("{} messages, {} bytes of JSON", repo.len(), json.len());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for action in Action::all() {
        let m = sample_message(&repo, action.theme, &mut rng).expect("bucket is non-empty");
        println!("{:>2} {:<9} {:<20} {}", action.index(), format!("{:?}", action.time), action.theme.name(), m.id);
    }
}
