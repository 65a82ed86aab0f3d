//! Fast self-verification suite behind the `check` command.
//!
//! Each check compares an implementation path against an independent oracle:
//! closed forms, quadrature, finite differences, frozen reference vectors or
//! a goodness-of-fit statistic.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::Architecture;
use crate::chebyshev::{eval_polynomial, orthogonality_check};
use crate::env::{shaped_step, Acrobot, CartPole, EnvId, Environment, MountainCar, ShapingSpec};
use crate::harness::count_parameters;
use crate::nn::{Gradients, NetworkSpec, QNetwork};
use crate::replay::{ReplayBuffer, Transition};

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    /// Fault injection: scale analytic gradients by `1 + perturb_gradient`
    /// before comparing them with finite differences.
    pub perturb_gradient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

pub fn run_checks(options: &CheckOptions) -> Vec<CheckOutcome> {
    vec![
        polynomial_oracle(),
        orthogonality(),
        gradient_check(options.perturb_gradient),
        environment_fixtures(),
        replay_buffer(),
        parameter_table(),
        shaping_telescopes(),
    ]
}

fn polynomial_oracle() -> CheckOutcome {
    let mut worst = 0.0f64;
    for n in 0..=12 {
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            let rec = eval_polynomial(n, x).unwrap_or(f64::NAN);
            let trig = (n as f64 * x.acos()).cos();
            worst = worst.max((rec - trig).abs());
        }
    }
    CheckOutcome::new(
        "polynomial-oracle",
        worst < 1e-12,
        format!("max |recurrence - cos(n acos x)| = {worst:.3e} (n <= 12, 1001 points)"),
    )
}

fn orthogonality() -> CheckOutcome {
    let mut worst = 0.0f64;
    for n in 0..=8 {
        for m in 0..=8 {
            let expected = match (n, m) {
                (0, 0) => PI,
                _ if n == m => PI / 2.0,
                _ => 0.0,
            };
            worst = worst.max((orthogonality_check(n, m, 32) - expected).abs());
        }
    }
    CheckOutcome::new(
        "orthogonality",
        worst < 1e-10,
        format!("max quadrature deviation = {worst:.3e} (n, m <= 8, 32 nodes)"),
    )
}

/// Relative error `‖a - b‖ / max(‖a‖ + ‖b‖, 1e-12)` between gradient vectors.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-12)
}

fn gradient_check(perturb: f64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let input_dim = rng.gen_range(1..=6);
        let hidden: Vec<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(1..=8)).collect();
        let outputs = rng.gen_range(1..=4);
        let mut net = match QNetwork::new(NetworkSpec::new(input_dim, hidden, outputs), &mut rng) {
            Ok(net) => net,
            Err(e) => return CheckOutcome::new("gradient-check", false, e.to_string()),
        };
        // Non-zero biases keep pre-activations off the ReLU kink at exactly 0.
        for layer in net.layers_mut() {
            for b in layer.biases_mut() {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let x: Vec<f64> = (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let action = rng.gen_range(0..outputs);
        let target = rng.gen_range(-2.0..2.0);
        let mut grads = Gradients::zeros_like(&net);
        if let Err(e) = net.backward_and_accumulate(&x, action, target, &mut grads) {
            return CheckOutcome::new("gradient-check", false, e.to_string());
        }
        let analytic: Vec<f64> = grads.flatten().iter().map(|g| g * (1.0 + perturb)).collect();
        let loss = |net: &QNetwork| {
            let q = net.forward(&x).expect("checked input")[action];
            (target - q).powi(2)
        };
        let numeric: Vec<f64> = (0..net.parameter_count())
            .map(|i| {
                let p = *net.parameter_mut(i).expect("index in range");
                *net.parameter_mut(i).expect("index in range") = p + h;
                let up = loss(&net);
                *net.parameter_mut(i).expect("index in range") = p - h;
                let down = loss(&net);
                *net.parameter_mut(i).expect("index in range") = p;
                (up - down) / (2.0 * h)
            })
            .collect();
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    CheckOutcome::new(
        "gradient-check",
        worst < 1e-5,
        format!("max relative error = {worst:.3e} over 100 random networks (h = 1e-5)"),
    )
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn environment_fixtures() -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut notes = Vec::new();

    let mut cp = CartPole::new();
    cp.set_state([0.0; 4]);
    if let Ok((s, _)) = cp.step(1) {
        worst = worst.max(max_abs_diff(
            &s.observation,
            &[0.0, 0.1951219512195122, 0.0, -0.2926829268292683],
        ));
    }
    let mut mc = MountainCar::new();
    mc.set_state(-0.5, 0.0);
    if let Ok((s, _)) = mc.step(1) {
        worst = worst.max(max_abs_diff(
            &s.observation,
            &[-0.5001768430041692, -0.00017684300416925727],
        ));
    }
    let mut ac = Acrobot::new();
    ac.set_state([0.1, -0.05, 0.02, 0.03]);
    if ac.step(2).is_ok() {
        worst = worst.max(max_abs_diff(
            &ac.internal_state(),
            &[0.07757165579337588, 0.004515209387585137, -0.23773391900562166, 0.5017548079364877],
        ));
    }

    let mut caps_ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for id in EnvId::ALL {
        let mut env = id.make();
        env.reset(&mut rng);
        let (steps, last) = run_until_done(env.as_mut(), |obs| match id {
            // Balancing controller; MountainCar and Acrobot just idle.
            EnvId::CartPole => usize::from(obs[2] + 0.5 * obs[3] > 0.0),
            _ => 1,
        });
        if steps != id.time_limit() || !last.is_some_and(|s| s.truncated && !s.terminated) {
            caps_ok = false;
        }
        notes.push(format!("{id}: truncated after {steps} steps"));
    }
    CheckOutcome::new(
        "environment-fixtures",
        worst < 1e-9 && caps_ok,
        format!("max fixture deviation = {worst:.3e}; {}", notes.join(", ")),
    )
}

fn run_until_done(
    env: &mut dyn Environment,
    policy: impl Fn(&[f64]) -> usize,
) -> (usize, Option<crate::env::EnvState>) {
    let mut obs = env.observation();
    let mut steps = 0;
    loop {
        match env.step(policy(&obs)) {
            Ok((s, _)) => {
                steps += 1;
                if s.done() {
                    return (steps, Some(s));
                }
                obs = s.observation;
            }
            Err(_) => return (steps, None),
        }
    }
}

fn replay_buffer() -> CheckOutcome {
    let tr = |i: usize| Transition {
        state: vec![i as f64],
        action: 0,
        reward: i as f64,
        next_state: vec![i as f64],
        terminal: false,
    };
    let mut fifo = ReplayBuffer::new(3).expect("non-zero capacity");
    for i in 0..7 {
        fifo.push(tr(i));
    }
    let kept: Vec<f64> = fifo.iter().map(|t| t.reward).collect();
    let fifo_ok = kept == [4.0, 5.0, 6.0];

    let mut buf = ReplayBuffer::new(4).expect("non-zero capacity");
    for i in 0..4 {
        buf.push(tr(i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 4];
    let draws = 10_000;
    for _ in 0..draws {
        let t = buf.sample(1, &mut rng).expect("non-empty");
        counts[t[0].reward as usize] += 1;
    }
    let expected = draws as f64 / 4.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // chi-square, 3 degrees of freedom, 99th percentile
    let critical = 11.345;
    CheckOutcome::new(
        "replay-buffer",
        fifo_ok && chi2 < critical,
        format!("FIFO eviction {}; chi2 = {chi2:.3} < {critical} on counts {counts:?}", if fifo_ok { "ok" } else { "wrong" }),
    )
}

fn parameter_table() -> CheckOutcome {
    let computed: Vec<usize> = crate::harness::REFERENCE_MODELS
        .iter()
        .map(|&a| count_parameters(EnvId::CartPole, a))
        .collect();
    let arithmetic = NetworkSpec::new(4, vec![64, 64], 2).parameter_count();
    CheckOutcome::new(
        "parameter-table",
        computed == [4_610, 5_634, 6_146, 6_658] && arithmetic == 4_610,
        format!("cartpole-v1 counts {computed:?}; baseline {:?}", Architecture::Mlp),
    )
}

fn shaping_telescopes() -> CheckOutcome {
    let spec = ShapingSpec {
        coefficient: 0.1,
        gamma: 0.99,
    };
    let mut env = Acrobot::new();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    env.reset(&mut rng);
    let mut potentials = vec![spec.potential(&env.observation())];
    let mut diff_sum = 0.0;
    let terminated = loop {
        let action = rng.gen_range(0..3);
        let Ok(out) = shaped_step(&mut env, action, &spec) else {
            return CheckOutcome::new("shaping-telescoping", false, "step failed".into());
        };
        diff_sum += out.shaped_reward - out.raw_reward;
        potentials.push(spec.potential(&out.state.observation));
        if out.state.done() {
            break out.state.terminated;
        }
    };
    if terminated {
        *potentials.last_mut().expect("non-empty") = 0.0;
    }
    let t = potentials.len() - 1;
    let interior: f64 = potentials[1..t].iter().sum();
    let telescoped = spec.gamma * potentials[t] - potentials[0] + (spec.gamma - 1.0) * interior;
    let err = (diff_sum - telescoped).abs();
    CheckOutcome::new(
        "shaping-telescoping",
        err < 1e-9,
        format!("|sum(shaped - raw) - telescoped| = {err:.3e} over {t} steps"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_suite_passes() {
        let outcomes = run_checks(&CheckOptions::default());
        assert!(outcomes.len() >= 5);
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    #[test]
    fn perturbed_gradient_is_caught() {
        let o = gradient_check(0.01);
        assert!(!o.passed, "{}", o.detail);
    }
}
