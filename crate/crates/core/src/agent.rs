//! Deep Q-learning agent: ε-greedy acting, replay, frozen target network and
//! periodic hard synchronization.
//!
//! The Chebyshev agent and the MLP baseline share all of this code and differ
//! only in how an observation becomes a network input.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::ChebyshevBasis;
use crate::env::{shaped_step, EnvId, Environment, NormalizationSpec, ShapingSpec};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, ForwardTrace, Gradients, NetworkSpec, QNetwork};
use crate::replay::{ReplayBuffer, Transition};

/// Input representation of the Q-network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    /// Normalized observation fed straight into the MLP.
    Mlp,
    /// Normalized observation expanded into Chebyshev features of degree `degree`.
    Chebyshev { degree: usize },
}

impl Architecture {
    /// Short label used in file names: `mlp`, `cheb4`, ...
    pub fn label(self) -> String {
        match self {
            Architecture::Mlp => "mlp".to_owned(),
            Architecture::Chebyshev { degree } => format!("cheb{degree}"),
        }
    }

    pub fn parse_label(s: &str) -> Result<Self> {
        if s == "mlp" {
            return Ok(Architecture::Mlp);
        }
        s.strip_prefix("cheb")
            .and_then(|d| d.parse().ok())
            .map(|degree| Architecture::Chebyshev { degree })
            .ok_or_else(|| Error::config(format!("unknown architecture label `{s}`")))
    }

    /// Network input width for an observation of `obs_dim` components.
    pub fn input_dim(self, obs_dim: usize) -> usize {
        match self {
            Architecture::Mlp => obs_dim,
            Architecture::Chebyshev { degree } => obs_dim * (degree + 1),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Mlp => f.write_str("Standard DQN"),
            Architecture::Chebyshev { degree } => write!(f, "Ch-DQN (N={degree})"),
        }
    }
}

/// Linear ε decay from `start` to `end` over `decay_steps` environment steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            end: epsilon,
            decay_steps: 0,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub architecture: Architecture,
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Target network period `C`, in environment steps.
    pub target_update: u64,
    pub epsilon: EpsilonSchedule,
    /// Minimum buffer size before the first update.
    pub warmup: usize,
    /// Training budget in episodes.
    pub episodes: usize,
    /// Per-episode step cap; the environment's own time limit still applies.
    pub max_steps: usize,
    /// Bootstrap through time-limit truncation instead of treating it as terminal.
    pub bootstrap_on_truncation: bool,
    /// Optional global-norm gradient clip.
    pub grad_clip: Option<f64>,
}

impl AgentConfig {
    /// Defaults for `env`: shared core values plus the per-environment learning
    /// rate, exploration schedule, budget and hidden width.
    pub fn defaults_for(env: EnvId, architecture: Architecture) -> Self {
        let (learning_rate, decay_steps, episodes, width) = match env {
            EnvId::CartPole => (1e-3, 10_000, 500, 64),
            EnvId::MountainCar => (1e-3, 10_000, 2_000, 64),
            EnvId::Acrobot => (5e-4, 20_000, 1_000, 128),
        };
        Self {
            architecture,
            hidden: vec![width, width],
            gamma: 0.99,
            learning_rate,
            batch_size: 64,
            buffer_capacity: 50_000,
            target_update: 500,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps,
            },
            warmup: 1_000,
            episodes,
            max_steps: env.time_limit(),
            bootstrap_on_truncation: true,
            grad_clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.target_update == 0 {
            return bad("target update period must be at least 1".into());
        }
        let EpsilonSchedule { start, end, .. } = self.epsilon;
        if !(start >= end && end >= 0.0 && start <= 1.0) {
            return bad(format!(
                "epsilon schedule needs 1 >= start >= end >= 0, got {start} -> {end}"
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("batch size and buffer capacity must be at least 1".into());
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch size exceeds buffer capacity".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must have at least one unit".into());
        }
        if self.max_steps == 0 {
            return bad("max steps per episode must be at least 1".into());
        }
        if let Some(c) = self.grad_clip {
            if c.is_nan() || c <= 0.0 {
                return bad(format!("gradient clip must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn network_spec(&self, env: EnvId) -> NetworkSpec {
        NetworkSpec::new(
            self.architecture.input_dim(env.obs_dim()),
            self.hidden.clone(),
            env.num_actions(),
        )
    }
}

/// Observation → network input.
#[derive(Debug, Clone)]
pub struct InputPipeline {
    normalization: NormalizationSpec,
    basis: Option<ChebyshevBasis>,
    normalized: Vec<f64>,
}

impl InputPipeline {
    pub fn new(env: EnvId, architecture: Architecture) -> Result<Self> {
        let normalization = NormalizationSpec::for_env(env);
        let basis = match architecture {
            Architecture::Mlp => None,
            Architecture::Chebyshev { degree } => Some(ChebyshevBasis::new(degree, env.obs_dim())?),
        };
        Ok(Self {
            normalized: vec![0.0; normalization.dim()],
            normalization,
            basis,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.basis
            .map_or(self.normalization.dim(), |b| b.feature_dim())
    }

    pub fn encode_into(&mut self, observation: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.basis {
            None => self.normalization.normalize_into(observation, out),
            Some(basis) => {
                self.normalization
                    .normalize_into(observation, &mut self.normalized)?;
                basis.featurize_into(&self.normalized, out)
            }
        }
    }

    pub fn encode(&mut self, observation: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.input_dim()];
        self.encode_into(observation, &mut out)?;
        Ok(out)
    }
}

/// Independent random streams of one run, all derived from its seed.
///
/// Each consumer owns a separate ChaCha stream, so e.g. a larger network
/// initialization never shifts the exploration or environment draws.
#[derive(Debug, Clone)]
pub struct RunRngs {
    /// Network initialization.
    pub init: ChaCha8Rng,
    /// ε-greedy decisions.
    pub explore: ChaCha8Rng,
    /// Minibatch sampling.
    pub sample: ChaCha8Rng,
    /// Environment resets.
    pub env: ChaCha8Rng,
}

impl RunRngs {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self {
            init: stream(0),
            explore: stream(1),
            sample: stream(2),
            env: stream(3),
        }
    }
}

/// Outcome of one episode. Returns are always raw (unshaped) rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub steps: usize,
    pub raw_return: f64,
    /// Sum of the rewards the agent learned from.
    pub learning_return: f64,
    /// ε in effect at the last step of the episode.
    pub epsilon: f64,
    /// Global step counter after the episode.
    pub global_step: u64,
    /// Mean minibatch loss over the episode's updates, if any ran.
    pub loss_mean: Option<f64>,
    pub terminated: bool,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    input: Vec<f64>,
    trace: ForwardTrace,
    target_trace: ForwardTrace,
    indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    env: EnvId,
    pipeline: InputPipeline,
    policy: QNetwork,
    target: QNetwork,
    optimizer: Adam,
    grads: Gradients,
    buffer: ReplayBuffer,
    global_step: u64,
    scratch: Scratch,
}

impl Agent {
    /// Builds an agent; the policy network is drawn from `init_rng` and the
    /// target network starts as an exact copy.
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, env: EnvId, init_rng: &mut R) -> Result<Self> {
        config.validate()?;
        let pipeline = InputPipeline::new(env, config.architecture)?;
        let policy = QNetwork::new(config.network_spec(env), init_rng)?;
        let target = policy.clone();
        let optimizer = Adam::new(AdamConfig::with_learning_rate(config.learning_rate), &policy);
        let grads = Gradients::zeros_like(&policy);
        let buffer = ReplayBuffer::new(config.buffer_capacity)?;
        let scratch = Scratch {
            input: vec![0.0; pipeline.input_dim()],
            ..Scratch::default()
        };
        Ok(Self {
            config,
            env,
            pipeline,
            policy,
            target,
            optimizer,
            grads,
            buffer,
            global_step: 0,
            scratch,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn env_id(&self) -> EnvId {
        self.env
    }

    pub fn policy(&self) -> &QNetwork {
        &self.policy
    }

    /// Direct access to the policy network, e.g. to load weights.
    pub fn policy_mut(&mut self) -> &mut QNetwork {
        &mut self.policy
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut QNetwork {
        &mut self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn optimizer(&self) -> &Adam {
        &self.optimizer
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.value(self.global_step)
    }

    pub fn encode(&mut self, observation: &[f64]) -> Result<Vec<f64>> {
        self.pipeline.encode(observation)
    }

    /// `Q(s, ·; θ)` for a raw observation.
    pub fn q_values(&mut self, observation: &[f64]) -> Result<Vec<f64>> {
        let input = self.pipeline.encode(observation)?;
        self.policy.forward(&input)
    }

    /// `argmax_a Q(s, a; θ)`, lowest index on ties.
    pub fn greedy_action(&mut self, observation: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(observation)?))
    }

    /// ε-greedy action at the current global step.
    pub fn select_action<R: Rng + ?Sized>(&mut self, observation: &[f64], rng: &mut R) -> Result<usize> {
        let eps = self.epsilon();
        if rng.gen::<f64>() < eps {
            Ok(rng.gen_range(0..self.env.num_actions()))
        } else {
            self.greedy_action(observation)
        }
    }

    /// Appends a transition to replay memory and advances the global step.
    pub fn observe(&mut self, transition: Transition) {
        self.buffer.push(transition);
        self.global_step += 1;
    }

    /// TD target `r` (terminal) or `r + γ max_a' Q(s', a'; θ⁻)`.
    pub fn compute_target(&mut self, transition: &Transition) -> Result<f64> {
        td_target(
            self.config.gamma,
            &mut self.pipeline,
            &self.target,
            &mut self.scratch,
            transition,
        )
    }

    /// One Adam update on the mean squared TD error of a sampled minibatch.
    ///
    /// Returns `None` without touching any state when the buffer holds fewer
    /// than `max(warmup, batch_size)` transitions.
    pub fn learn_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        let need = self.config.warmup.max(self.config.batch_size);
        if self.buffer.len() < need {
            return Ok(None);
        }
        let Self {
            config,
            pipeline,
            policy,
            target,
            grads,
            buffer,
            scratch,
            ..
        } = self;
        let mut indices = std::mem::take(&mut scratch.indices);
        buffer.sample_indices(config.batch_size, rng, &mut indices)?;
        grads.clear();
        let weight = 1.0 / indices.len() as f64;
        let mut loss = 0.0;
        for &slot in &indices {
            let transition = buffer
                .get(slot)
                .ok_or_else(|| Error::usage(format!("replay slot {slot} is empty")))?;
            let y = td_target(config.gamma, pipeline, target, scratch, transition)?;
            pipeline.encode_into(&transition.state, &mut scratch.input)?;
            policy.trace_into(&scratch.input, &mut scratch.trace)?;
            loss += policy.accumulate_gradient(
                &mut scratch.trace,
                transition.action,
                y,
                weight,
                grads,
            )?;
        }
        scratch.indices = indices;
        if let Some(max_norm) = self.config.grad_clip {
            self.grads.clip_global_norm(max_norm);
        }
        self.optimizer.step(&mut self.policy, &self.grads)?;
        Ok(Some(loss * weight))
    }

    /// Hard-copies θ into θ⁻ when the global step is a multiple of `C`.
    pub fn maybe_sync_target(&mut self) -> bool {
        if self.global_step > 0 && self.global_step.is_multiple_of(self.config.target_update) {
            self.sync_target();
            true
        } else {
            false
        }
    }

    pub fn sync_target(&mut self) {
        self.target
            .copy_weights_from(&self.policy)
            .expect("policy and target share a spec");
    }

    /// Stores, learns and syncs for one completed environment step.
    fn after_step<R: Rng + ?Sized>(&mut self, transition: Transition, rng: &mut R) -> Result<Option<f64>> {
        self.observe(transition);
        let loss = self.learn_step(rng)?;
        self.maybe_sync_target();
        Ok(loss)
    }
}

/// Plays one episode, learning after every step.
///
/// `env` must have just been reset. With `shaping` set, the agent learns from
/// shaped rewards while the record keeps the raw return.
pub fn run_episode(
    agent: &mut Agent,
    env: &mut dyn Environment,
    shaping: Option<&ShapingSpec>,
    rngs: &mut RunRngs,
) -> Result<EpisodeRecord> {
    if env.id() != agent.env {
        return Err(Error::config(format!(
            "agent was built for {} but the environment is {}",
            agent.env,
            env.id()
        )));
    }
    if env.elapsed_steps() != 0 {
        return Err(Error::usage("run_episode expects a freshly reset environment"));
    }
    let mut obs = env.observation();
    let mut record = EpisodeRecord {
        steps: 0,
        raw_return: 0.0,
        learning_return: 0.0,
        epsilon: agent.epsilon(),
        global_step: agent.global_step,
        loss_mean: None,
        terminated: false,
    };
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);
    loop {
        record.epsilon = agent.epsilon();
        let action = agent.select_action(&obs, &mut rngs.explore)?;
        let (state, raw, learn_reward) = match shaping {
            Some(spec) => {
                let out = shaped_step(env, action, spec)?;
                (out.state, out.raw_reward, out.shaped_reward)
            }
            None => {
                let (state, r) = env.step(action)?;
                (state, r, r)
            }
        };
        record.steps += 1;
        record.raw_return += raw;
        record.learning_return += learn_reward;
        let capped = record.steps >= agent.config.max_steps;
        let truncated = state.truncated || (capped && !state.terminated);
        let terminal = state.terminated || (truncated && !agent.config.bootstrap_on_truncation);
        let transition = Transition {
            state: obs,
            action,
            reward: learn_reward,
            next_state: state.observation.clone(),
            terminal,
        };
        if let Some(loss) = agent.after_step(transition, &mut rngs.sample)? {
            loss_sum += loss;
            loss_count += 1;
        }
        obs = state.observation;
        if state.terminated || truncated {
            record.terminated = state.terminated;
            break;
        }
    }
    record.global_step = agent.global_step;
    record.loss_mean = (loss_count > 0).then(|| loss_sum / loss_count as f64);
    Ok(record)
}

fn td_target(
    gamma: f64,
    pipeline: &mut InputPipeline,
    target: &QNetwork,
    scratch: &mut Scratch,
    transition: &Transition,
) -> Result<f64> {
    if transition.terminal {
        return Ok(transition.reward);
    }
    pipeline.encode_into(&transition.next_state, &mut scratch.input)?;
    target.trace_into(&scratch.input, &mut scratch.target_trace)?;
    Ok(transition.reward + gamma * max_value(scratch.target_trace.output()))
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn max_value(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
