//! Trains a degree-4 Chebyshev agent and the MLP baseline on CartPole for one
//! seed each and prints their learning progress.
//!
//! ```bash
//! cargo run --release -p chebdqn --example train_cartpole -- [episodes] [seed]
//! ```

use chebdqn::agent::{run_episode, Agent, AgentConfig, Architecture, RunRngs};
use chebdqn::env::EnvId;
use chebdqn::harness::{final_score, trailing_means};

fn main() -> chebdqn::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(300);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    for arch in [Architecture::Chebyshev { degree: 4 }, Architecture::Mlp] {
        let started = std::time::Instant::now();
        let mut rngs = RunRngs::from_seed(seed);
        let config = AgentConfig::defaults_for(EnvId::CartPole, arch);
        let mut agent = Agent::new(config, EnvId::CartPole, &mut rngs.init)?;
        let mut env = EnvId::CartPole.make();
        let mut returns = Vec::with_capacity(episodes);
        for episode in 1..=episodes {
            env.reset(&mut rngs.env);
            let record = run_episode(&mut agent, env.as_mut(), None, &mut rngs)?;
            returns.push(record.raw_return);
            if episode % 50 == 0 {
                let mean = trailing_means(&returns, 100)[episode - 1];
                println!("{arch:<14} episode {episode:>4}  trailing-100 mean {mean:>6.1}  epsilon {:.3}", record.epsilon);
            }
        }
        println!(
            "{arch}: final score {:?} after {} environment steps in {:.1}s\n",
            final_score(&returns, 100),
            agent.global_step(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
