//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use chebdqn::env::{Acrobot, CartPole, EnvId, Environment, MountainCar};
use chebdqn::nn::{NetworkSpec, QNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One step from a fixed internal state, with the expected observation.
/// Values come from `tests/fixtures/gen_env_fixtures.py`.
pub struct EnvFixture {
    pub env: EnvId,
    pub state: &'static [f64],
    pub action: usize,
    pub next_obs: &'static [f64],
    /// Expected Acrobot angles/velocities after the step.
    pub next_internal: Option<[f64; 4]>,
}

pub const ENV_FIXTURES: &[EnvFixture] = &[
    EnvFixture {
        env: EnvId::CartPole,
        state: &[0.0, 0.0, 0.0, 0.0],
        action: 1,
        next_obs: &[0.0, 0.1951219512195122, 0.0, -0.2926829268292683],
        next_internal: None,
    },
    EnvFixture {
        env: EnvId::CartPole,
        state: &[0.01, -0.2, 0.03, 0.4],
        action: 0,
        next_obs: &[0.006, -0.3955343820057583, 0.038, 0.7019882742589485],
        next_internal: None,
    },
    EnvFixture {
        env: EnvId::MountainCar,
        state: &[-0.5, 0.0],
        action: 1,
        next_obs: &[-0.5001768430041692, -0.00017684300416925727],
        next_internal: None,
    },
    EnvFixture {
        env: EnvId::MountainCar,
        state: &[-1.19, -0.02],
        action: 0,
        next_obs: &[-1.2, 0.0],
        next_internal: None,
    },
    EnvFixture {
        env: EnvId::MountainCar,
        state: &[0.45, 0.06],
        action: 2,
        next_obs: &[0.5104524832822674, 0.06045248328226739],
        next_internal: None,
    },
    EnvFixture {
        env: EnvId::Acrobot,
        state: &[0.1, -0.05, 0.02, 0.03],
        action: 2,
        next_obs: &[
            0.9969928274996086,
            0.07749388307689614,
            0.9999898064594113,
            0.004515194045584658,
            -0.23773391900562166,
            0.5017548079364877,
        ],
        next_internal: Some([
            0.07757165579337588,
            0.004515209387585137,
            -0.23773391900562166,
            0.5017548079364877,
        ]),
    },
    EnvFixture {
        env: EnvId::Acrobot,
        state: &[1.0, 2.0, -3.0, 5.0],
        action: 0,
        next_obs: &[
            0.951682240792116,
            0.3070845365056612,
            -0.9879960640847215,
            0.15447905150245744,
            -3.784932254607667,
            4.891168324188465,
        ],
        next_internal: Some([
            0.31212802780978166,
            2.9864924999147884,
            -3.784932254607667,
            4.891168324188465,
        ]),
    },
];

/// Steps a fresh environment from the fixture state; returns the largest
/// absolute deviation from the expected values.
pub fn fixture_error(f: &EnvFixture) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (obs, internal) = match f.env {
        EnvId::CartPole => {
            let mut env = CartPole::new();
            env.reset(&mut rng);
            env.set_state(f.state.try_into().unwrap());
            (env.step(f.action).unwrap().0.observation, None)
        }
        EnvId::MountainCar => {
            let mut env = MountainCar::new();
            env.reset(&mut rng);
            env.set_state(f.state[0], f.state[1]);
            (env.step(f.action).unwrap().0.observation, None)
        }
        EnvId::Acrobot => {
            let mut env = Acrobot::new();
            env.reset(&mut rng);
            env.set_state(f.state.try_into().unwrap());
            let obs = env.step(f.action).unwrap().0.observation;
            (obs, Some(env.internal_state()))
        }
    };
    assert_eq!(obs.len(), f.next_obs.len());
    let mut err = max_abs_diff(&obs, f.next_obs);
    if let (Some(got), Some(want)) = (internal, f.next_internal) {
        err = err.max(max_abs_diff(&got, &want));
    }
    err
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random network (with non-zero biases), input, action and target.
pub fn random_case(rng: &mut ChaCha8Rng) -> (QNetwork, Vec<f64>, usize, f64) {
    let input_dim = rng.gen_range(1..=8);
    let hidden: Vec<usize> = (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(1..=8)).collect();
    let outputs = rng.gen_range(1..=4);
    let mut net = QNetwork::new(NetworkSpec::new(input_dim, hidden, outputs), rng).unwrap();
    for layer in net.layers_mut() {
        for b in layer.biases_mut() {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let x = (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (net, x, rng.gen_range(0..outputs), rng.gen_range(-3.0..3.0))
}

/// Central differences of `(target - Q(x)[action])²` with step `h`.
pub fn numeric_gradient(net: &mut QNetwork, x: &[f64], action: usize, target: f64, h: f64) -> Vec<f64> {
    let loss = |net: &QNetwork| (target - net.forward(x).unwrap()[action]).powi(2);
    (0..net.parameter_count())
        .map(|i| {
            let p = *net.parameter_mut(i).unwrap();
            *net.parameter_mut(i).unwrap() = p + h;
            let up = loss(net);
            *net.parameter_mut(i).unwrap() = p - h;
            let down = loss(net);
            *net.parameter_mut(i).unwrap() = p;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / (‖a‖ + ‖b‖)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / (norm(a) + norm(b)).max(1e-12)
}

/// Σ(out·in + out) over the layers of `input → hidden → outputs`.
pub fn dense_parameter_count(input: usize, hidden: &[usize], outputs: usize) -> usize {
    let mut dims = vec![input];
    dims.extend_from_slice(hidden);
    dims.push(outputs);
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}
