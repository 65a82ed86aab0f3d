//! Rolls out a random policy in each environment, then compares raw and
//! shaped Acrobot returns.

use chebdqn::env::{shaped_step, EnvId, ShapingSpec, DEFAULT_SHAPING_COEFFICIENT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chebdqn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for id in EnvId::ALL {
        let mut env = id.make();
        let mut state = env.reset(&mut rng);
        let mut ret = 0.0;
        while !state.done() {
            let (next, reward) = env.step(rng.gen_range(0..id.num_actions()))?;
            ret += reward;
            state = next;
        }
        let how = if state.terminated { "terminated" } else { "truncated" };
        println!(
            "{id:<15} {how} after {:>3} steps, return {ret:>6}, last obs {:.3?}",
            env.elapsed_steps(),
            state.observation
        );
    }

    let spec = ShapingSpec::new(DEFAULT_SHAPING_COEFFICIENT, 0.99)?;
    let mut env = EnvId::Acrobot.make();
    env.reset(&mut rng);
    let (mut raw, mut shaped) = (0.0, 0.0);
    loop {
        let step = shaped_step(env.as_mut(), rng.gen_range(0..3), &spec)?;
        raw += step.raw_reward;
        shaped += step.shaped_reward;
        if step.state.done() {
            break;
        }
    }
    println!("\nacrobot with shaping k = {}: raw return {raw}, shaped return {shaped:.3}", spec.coefficient);
    Ok(())
}
