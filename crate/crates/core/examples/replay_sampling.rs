//! Fills a small replay buffer past capacity and histograms uniform samples.

use chebdqn::replay::{ReplayBuffer, Transition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> chebdqn::Result<()> {
    let mut buffer = ReplayBuffer::new(5)?;
    for i in 0..8 {
        buffer.push(Transition {
            state: vec![i as f64],
            action: i % 2,
            reward: -1.0,
            next_state: vec![i as f64 + 1.0],
            terminal: false,
        });
    }
    let kept: Vec<f64> = buffer.iter().map(|t| t.state[0]).collect();
    println!("capacity {}, {} insertions, oldest first: {kept:?}", buffer.capacity(), buffer.insertions());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..10_000 {
        for t in buffer.sample(5, &mut rng)? {
            *counts.entry(t.state[0] as usize).or_insert(0usize) += 1;
        }
    }
    for (state, n) in counts {
        println!("  transition {state}: {n:>6} draws ({:.2}%)", 100.0 * n as f64 / 50_000.0);
    }
    Ok(())
}
