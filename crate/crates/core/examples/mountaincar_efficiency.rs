//! Trains Ch-DQN (N = 4) and the MLP baseline on MountainCar for one seed and
//! reports how many episodes each needs to reach a trailing-100 mean of -130.
//!
//! Each run takes a few minutes in release mode:
//!
//! ```bash
//! cargo run --release -p chebdqn --example mountaincar_efficiency -- [seed] [episodes]
//! ```

use chebdqn::agent::Architecture;
use chebdqn::config::ExperimentConfig;
use chebdqn::env::EnvId;
use chebdqn::harness::{episodes_to_threshold, run_single};

fn main() -> chebdqn::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let episodes: Option<usize> = args.next().and_then(|a| a.parse().ok());
    let out = std::env::temp_dir().join("chebdqn-mountaincar");

    for arch in [Architecture::Chebyshev { degree: 4 }, Architecture::Mlp] {
        let mut cfg = ExperimentConfig::defaults_for(EnvId::MountainCar, arch);
        cfg.out_dir = out.clone();
        if let Some(e) = episodes {
            cfg.agent.episodes = e;
        }
        let run = run_single(&cfg, seed)?;
        let returns = run.returns();
        println!(
            "{arch:<14} episodes to -130: {:?}, to -110: {:?}, final score {:?} ({:.0}s)",
            episodes_to_threshold(&returns, 100, -130.0),
            episodes_to_threshold(&returns, 100, -110.0),
            run.final_score,
            run.wall_clock_secs
        );
    }
    println!("learning curves in {}", out.display());
    Ok(())
}
