//! Grows the subspaces of a passing family of lines one dimension at a time.
//! Every intermediate family is checked by the sample tier.
//!
//! cargo run --release --example lift

use prframes::construct::{lift_to_dims, random_family, AugmentOptions, DimProfile};
use prframes::projection::margin;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> prframes::Result<()> {
    let lines = random_family(&DimProfile::uniform(4, 7, 1)?, 0);
    println!("start: dims {:?}, margin {:.4}", lines.dims(), margin(&lines, 2000, 16, 0).value);

    let target = DimProfile::new(4, vec![3, 2, 2, 1, 1, 2, 3])?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let lift = lift_to_dims(&lines, &target, &mut rng, &AugmentOptions::default())?;
    for s in &lift.steps {
        let m = s.margin.map_or("-".into(), |v| format!("{v:.4}"));
        println!("  W{} -> dim {} after {} attempt(s), margin {m}", s.index + 1, s.new_dim, s.attempts);
    }
    println!("end: dims {:?}, first attempt everywhere: {}", lift.family.dims(), lift.first_attempt_everywhere());
    Ok(())
}
