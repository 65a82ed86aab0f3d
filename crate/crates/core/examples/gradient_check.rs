//! Compares backpropagated gradients of a small Q-network with central finite
//! differences, then takes one Adam step.

use chebdqn::nn::{Adam, AdamConfig, Gradients, NetworkSpec, QNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> chebdqn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = QNetwork::new(NetworkSpec::new(3, vec![5, 4], 2), &mut rng)?;
    let (x, action, target) = ([0.2, -0.7, 0.4], 1, 1.5);

    let mut grads = Gradients::zeros_like(&net);
    let loss = net.backward_and_accumulate(&x, action, target, &mut grads)?;
    let analytic = grads.flatten();

    let h = 1e-5;
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let p = *net.parameter_mut(i).expect("index in range");
        let mut loss_at = |v: f64| -> chebdqn::Result<f64> {
            *net.parameter_mut(i).expect("index in range") = v;
            Ok((target - net.forward(&x)?[action]).powi(2))
        };
        let numeric = (loss_at(p + h)? - loss_at(p - h)?) / (2.0 * h);
        *net.parameter_mut(i).expect("index in range") = p;
        worst = worst.max((numeric - a).abs());
    }
    println!("{} parameters, loss {loss:.6}", net.parameter_count());
    println!("max |analytic - numeric| = {worst:.3e}");

    let mut adam = Adam::new(AdamConfig::with_learning_rate(1e-2), &net);
    adam.step(&mut net, &grads)?;
    let after = (target - net.forward(&x)?[action]).powi(2);
    println!("loss after one Adam step: {after:.6}");
    Ok(())
}
