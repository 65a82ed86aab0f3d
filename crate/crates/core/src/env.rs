//! Classic-control environments with a common stepping interface, observation
//! normalization and potential-based reward shaping for Acrobot.
//!
//! Dynamics follow the public CartPole-v1, MountainCar-v0 and Acrobot-v1
//! definitions. Every environment pays −1 (MountainCar, Acrobot) or +1
//! (CartPole) on every step, including the last one, so the raw return of an
//! episode is always ± its length.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one of the supported environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EnvId {
    CartPole,
    MountainCar,
    Acrobot,
}

impl EnvId {
    pub const ALL: [EnvId; 3] = [EnvId::CartPole, EnvId::MountainCar, EnvId::Acrobot];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::CartPole => "cartpole-v1",
            EnvId::MountainCar => "mountaincar-v0",
            EnvId::Acrobot => "acrobot-v1",
        }
    }

    pub fn obs_dim(self) -> usize {
        match self {
            EnvId::CartPole => 4,
            EnvId::MountainCar => 2,
            EnvId::Acrobot => 6,
        }
    }

    pub fn num_actions(self) -> usize {
        match self {
            EnvId::CartPole => 2,
            EnvId::MountainCar | EnvId::Acrobot => 3,
        }
    }

    /// Episode length at which the time limit truncates.
    pub fn time_limit(self) -> usize {
        match self {
            EnvId::CartPole | EnvId::Acrobot => 500,
            EnvId::MountainCar => 200,
        }
    }

    pub fn make(self) -> Box<dyn Environment> {
        match self {
            EnvId::CartPole => Box::new(CartPole::new()),
            EnvId::MountainCar => Box::new(MountainCar::new()),
            EnvId::Acrobot => Box::new(Acrobot::new()),
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown environment `{s}` (expected cartpole-v1, mountaincar-v0 or acrobot-v1)"
                ))
            })
    }
}

impl TryFrom<String> for EnvId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EnvId> for String {
    fn from(id: EnvId) -> String {
        id.as_str().to_owned()
    }
}

/// Observation plus episode-end flags after a reset or step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub observation: Vec<f64>,
    /// The MDP reached a failure or goal state.
    pub terminated: bool,
    /// The time limit ended the episode.
    pub truncated: bool,
}

impl EnvState {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Environment: Send {
    fn id(&self) -> EnvId;

    /// Starts a new episode from a randomized initial state.
    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvState;

    /// Advances one step and returns the new state and the raw reward.
    fn step(&mut self, action: usize) -> Result<(EnvState, f64)>;

    /// Current (raw) observation.
    fn observation(&self) -> Vec<f64>;

    /// Steps taken in the current episode.
    fn elapsed_steps(&self) -> usize;

    fn obs_dim(&self) -> usize {
        self.id().obs_dim()
    }

    fn num_actions(&self) -> usize {
        self.id().num_actions()
    }
}

/// Step counter, time limit and end-of-episode guard shared by all environments.
#[derive(Debug, Clone)]
struct Episode {
    steps: usize,
    limit: usize,
    over: bool,
}

impl Episode {
    fn new(limit: usize) -> Self {
        Self {
            steps: 0,
            limit,
            over: true,
        }
    }

    fn restart(&mut self) {
        self.steps = 0;
        self.over = false;
    }

    fn check(&self, id: EnvId, action: usize) -> Result<()> {
        if self.over {
            return Err(Error::usage(format!(
                "{id}: step called on a finished episode; reset first"
            )));
        }
        if action >= id.num_actions() {
            return Err(Error::usage(format!(
                "{id}: action {action} outside 0..{}",
                id.num_actions()
            )));
        }
        Ok(())
    }

    fn advance(&mut self, terminated: bool) -> (bool, bool) {
        self.steps += 1;
        let truncated = !terminated && self.steps >= self.limit;
        self.over = terminated || truncated;
        (terminated, truncated)
    }
}

// ---------------------------------------------------------------- CartPole

const CP_GRAVITY: f64 = 9.8;
const CP_CART_MASS: f64 = 1.0;
const CP_POLE_MASS: f64 = 0.1;
const CP_HALF_LENGTH: f64 = 0.5;
const CP_FORCE: f64 = 10.0;
const CP_TAU: f64 = 0.02;
const CP_X_LIMIT: f64 = 2.4;
const CP_THETA_LIMIT: f64 = 12.0 * 2.0 * PI / 360.0;

/// Cart-pole balancing; observation `(x, ẋ, θ, θ̇)`, actions push left/right.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: [f64; 4],
    episode: Episode,
}

impl CartPole {
    pub fn new() -> Self {
        Self::with_time_limit(EnvId::CartPole.time_limit())
    }

    pub fn with_time_limit(limit: usize) -> Self {
        Self {
            state: [0.0; 4],
            episode: Episode::new(limit),
        }
    }

    /// Places the system in `state` and starts a fresh episode from there.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.episode.restart();
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for CartPole {
    fn id(&self) -> EnvId {
        EnvId::CartPole
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvState {
        for s in &mut self.state {
            *s = rng.gen_range(-0.05..=0.05);
        }
        self.episode.restart();
        EnvState {
            observation: self.observation(),
            terminated: false,
            truncated: false,
        }
    }

    fn step(&mut self, action: usize) -> Result<(EnvState, f64)> {
        self.episode.check(EnvId::CartPole, action)?;
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { CP_FORCE } else { -CP_FORCE };
        let total_mass = CP_CART_MASS + CP_POLE_MASS;
        let pole_moment = CP_POLE_MASS * CP_HALF_LENGTH;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (CP_GRAVITY * sin - cos * temp)
            / (CP_HALF_LENGTH * (4.0 / 3.0 - CP_POLE_MASS * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;

        self.state = [
            x + CP_TAU * x_dot,
            x_dot + CP_TAU * x_acc,
            theta + CP_TAU * theta_dot,
            theta_dot + CP_TAU * theta_acc,
        ];
        let failed = self.state[0].abs() > CP_X_LIMIT || self.state[2].abs() > CP_THETA_LIMIT;
        let (terminated, truncated) = self.episode.advance(failed);
        Ok((
            EnvState {
                observation: self.observation(),
                terminated,
                truncated,
            },
            1.0,
        ))
    }

    fn observation(&self) -> Vec<f64> {
        self.state.to_vec()
    }

    fn elapsed_steps(&self) -> usize {
        self.episode.steps
    }
}

// ------------------------------------------------------------- MountainCar

const MC_MIN_POS: f64 = -1.2;
const MC_MAX_POS: f64 = 0.6;
const MC_MAX_SPEED: f64 = 0.07;
const MC_GOAL: f64 = 0.5;
const MC_FORCE: f64 = 0.001;
const MC_GRAVITY: f64 = 0.0025;

/// Under-powered car in a valley; observation `(position, velocity)`,
/// actions accelerate left / coast / accelerate right.
#[derive(Debug, Clone)]
pub struct MountainCar {
    position: f64,
    velocity: f64,
    episode: Episode,
}

impl MountainCar {
    pub fn new() -> Self {
        Self::with_time_limit(EnvId::MountainCar.time_limit())
    }

    pub fn with_time_limit(limit: usize) -> Self {
        Self {
            position: -0.5,
            velocity: 0.0,
            episode: Episode::new(limit),
        }
    }

    pub fn set_state(&mut self, position: f64, velocity: f64) {
        self.position = position;
        self.velocity = velocity;
        self.episode.restart();
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for MountainCar {
    fn id(&self) -> EnvId {
        EnvId::MountainCar
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvState {
        self.position = rng.gen_range(-0.6..=-0.4);
        self.velocity = 0.0;
        self.episode.restart();
        EnvState {
            observation: self.observation(),
            terminated: false,
            truncated: false,
        }
    }

    fn step(&mut self, action: usize) -> Result<(EnvState, f64)> {
        self.episode.check(EnvId::MountainCar, action)?;
        let mut v = self.velocity + (action as f64 - 1.0) * MC_FORCE
            - (3.0 * self.position).cos() * MC_GRAVITY;
        v = v.clamp(-MC_MAX_SPEED, MC_MAX_SPEED);
        let mut p = (self.position + v).clamp(MC_MIN_POS, MC_MAX_POS);
        if p == MC_MIN_POS && v < 0.0 {
            v = 0.0;
            p = MC_MIN_POS;
        }
        self.position = p;
        self.velocity = v;
        let (terminated, truncated) = self.episode.advance(p >= MC_GOAL);
        Ok((
            EnvState {
                observation: self.observation(),
                terminated,
                truncated,
            },
            -1.0,
        ))
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }

    fn elapsed_steps(&self) -> usize {
        self.episode.steps
    }
}

// ----------------------------------------------------------------- Acrobot

const AC_DT: f64 = 0.2;
const AC_LINK_LENGTH_1: f64 = 1.0;
const AC_LINK_MASS_1: f64 = 1.0;
const AC_LINK_MASS_2: f64 = 1.0;
const AC_LINK_COM_1: f64 = 0.5;
const AC_LINK_COM_2: f64 = 0.5;
const AC_LINK_MOI: f64 = 1.0;
const AC_GRAVITY: f64 = 9.8;
const AC_MAX_VEL_1: f64 = 4.0 * PI;
const AC_MAX_VEL_2: f64 = 9.0 * PI;
const AC_TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];

/// Two-link under-actuated pendulum.
///
/// Internal state is `(θ1, θ2, θ̇1, θ̇2)`; the observation is
/// `(cos θ1, sin θ1, cos θ2, sin θ2, θ̇1, θ̇2)`. One step integrates the
/// equations of motion with a single fourth-order Runge–Kutta step of 0.2 s.
#[derive(Debug, Clone)]
pub struct Acrobot {
    state: [f64; 4],
    episode: Episode,
}

impl Acrobot {
    pub fn new() -> Self {
        Self::with_time_limit(EnvId::Acrobot.time_limit())
    }

    pub fn with_time_limit(limit: usize) -> Self {
        Self {
            state: [0.0; 4],
            episode: Episode::new(limit),
        }
    }

    /// Sets the internal `(θ1, θ2, θ̇1, θ̇2)` state and starts a fresh episode.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.episode.restart();
    }

    pub fn internal_state(&self) -> [f64; 4] {
        self.state
    }

    fn derivatives(s: [f64; 4], torque: f64) -> [f64; 4] {
        let (m1, m2) = (AC_LINK_MASS_1, AC_LINK_MASS_2);
        let (l1, lc1, lc2) = (AC_LINK_LENGTH_1, AC_LINK_COM_1, AC_LINK_COM_2);
        let (i1, i2, g) = (AC_LINK_MOI, AC_LINK_MOI, AC_GRAVITY);
        let [theta1, theta2, dtheta1, dtheta2] = s;

        let d1 = m1 * lc1 * lc1
            + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos())
            + i1
            + i2;
        let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
        let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
        let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
            - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
            + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
            + phi2;
        let ddtheta2 = (torque + d2 / d1 * phi1
            - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin()
            - phi2)
            / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
        let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
        [dtheta1, dtheta2, ddtheta1, ddtheta2]
    }

    fn rk4(s: [f64; 4], torque: f64, dt: f64) -> [f64; 4] {
        let shift = |base: [f64; 4], k: [f64; 4], h: f64| {
            std::array::from_fn(|i| base[i] + h * k[i])
        };
        let k1 = Self::derivatives(s, torque);
        let k2 = Self::derivatives(shift(s, k1, dt / 2.0), torque);
        let k3 = Self::derivatives(shift(s, k2, dt / 2.0), torque);
        let k4 = Self::derivatives(shift(s, k3, dt), torque);
        std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }

    fn wrap_angle(mut x: f64) -> f64 {
        let span = 2.0 * PI;
        while x > PI {
            x -= span;
        }
        while x < -PI {
            x += span;
        }
        x
    }

    /// `-cos θ1 - cos(θ1 + θ2)`, the height of the tip above the pivot.
    pub fn tip_height_of(state: [f64; 4]) -> f64 {
        -state[0].cos() - (state[0] + state[1]).cos()
    }
}

impl Default for Acrobot {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Acrobot {
    fn id(&self) -> EnvId {
        EnvId::Acrobot
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvState {
        for s in &mut self.state {
            *s = rng.gen_range(-0.1..=0.1);
        }
        self.episode.restart();
        EnvState {
            observation: self.observation(),
            terminated: false,
            truncated: false,
        }
    }

    fn step(&mut self, action: usize) -> Result<(EnvState, f64)> {
        self.episode.check(EnvId::Acrobot, action)?;
        let next = Self::rk4(self.state, AC_TORQUES[action], AC_DT);
        self.state = [
            Self::wrap_angle(next[0]),
            Self::wrap_angle(next[1]),
            next[2].clamp(-AC_MAX_VEL_1, AC_MAX_VEL_1),
            next[3].clamp(-AC_MAX_VEL_2, AC_MAX_VEL_2),
        ];
        let (terminated, truncated) = self.episode.advance(Self::tip_height_of(self.state) > 1.0);
        Ok((
            EnvState {
                observation: self.observation(),
                terminated,
                truncated,
            },
            -1.0,
        ))
    }

    fn observation(&self) -> Vec<f64> {
        let [t1, t2, d1, d2] = self.state;
        vec![t1.cos(), t1.sin(), t2.cos(), t2.sin(), d1, d2]
    }

    fn elapsed_steps(&self) -> usize {
        self.episode.steps
    }
}

// ----------------------------------------------------------- normalization

/// Per-dimension `(low, high)` bounds for the affine map onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationSpec {
    bounds: Vec<(f64, f64)>,
    clip: bool,
}

impl NormalizationSpec {
    pub fn new(bounds: Vec<(f64, f64)>, clip: bool) -> Result<Self> {
        if let Some((i, b)) = bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(Error::config(format!(
                "normalization bound {i} must satisfy low < high, got {b:?}"
            )));
        }
        Ok(Self { bounds, clip })
    }

    /// Default bounds for each environment, with clipping enabled.
    ///
    /// MountainCar uses its exact state bounds. CartPole velocities are
    /// unbounded, so `±3.0` and `±3.5` are heuristic ranges and clipping keeps
    /// rare excursions inside the interval.
    pub fn for_env(id: EnvId) -> Self {
        let bounds = match id {
            EnvId::CartPole => vec![(-2.4, 2.4), (-3.0, 3.0), (-0.2095, 0.2095), (-3.5, 3.5)],
            EnvId::MountainCar => vec![(MC_MIN_POS, MC_MAX_POS), (-MC_MAX_SPEED, MC_MAX_SPEED)],
            EnvId::Acrobot => vec![
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-AC_MAX_VEL_1, AC_MAX_VEL_1),
                (-AC_MAX_VEL_2, AC_MAX_VEL_2),
            ],
        };
        Self { bounds, clip: true }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn clip(&self) -> bool {
        self.clip
    }

    pub fn normalize(&self, observation: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; observation.len()];
        self.normalize_into(observation, &mut out)?;
        Ok(out)
    }

    /// Maps `x ↦ 2 (x - low) / (high - low) - 1`, clipping if enabled.
    pub fn normalize_into(&self, observation: &[f64], out: &mut [f64]) -> Result<()> {
        if observation.len() != self.bounds.len() || out.len() != self.bounds.len() {
            return Err(Error::config(format!(
                "observation has {} components, normalization expects {}",
                observation.len(),
                self.bounds.len()
            )));
        }
        for ((o, &x), &(lo, hi)) in out.iter_mut().zip(observation).zip(&self.bounds) {
            if !x.is_finite() {
                return Err(Error::data(format!("non-finite observation component {x}")));
            }
            let y = 2.0 * (x - lo) / (hi - lo) - 1.0;
            *o = if self.clip { y.clamp(-1.0, 1.0) } else { y };
        }
        Ok(())
    }

    /// Inverse of the affine map (clipping is not undone).
    pub fn denormalize(&self, normalized: &[f64]) -> Result<Vec<f64>> {
        if normalized.len() != self.bounds.len() {
            return Err(Error::config("normalized state has the wrong dimension"));
        }
        Ok(normalized
            .iter()
            .zip(&self.bounds)
            .map(|(&y, &(lo, hi))| lo + (y + 1.0) * (hi - lo) / 2.0)
            .collect())
    }
}

// ----------------------------------------------------------------- shaping

/// Potential-based shaping for Acrobot: `r + γ Φ(s') - Φ(s)` with
/// `Φ(s) = k · tip_height(s)` and `Φ := 0` at genuine termination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingSpec {
    pub coefficient: f64,
    pub gamma: f64,
}

pub const DEFAULT_SHAPING_COEFFICIENT: f64 = 0.1;

impl ShapingSpec {
    pub fn new(coefficient: f64, gamma: f64) -> Result<Self> {
        if !(coefficient >= 0.0 && coefficient.is_finite()) {
            return Err(Error::config(format!(
                "shaping coefficient must be finite and >= 0, got {coefficient}"
            )));
        }
        Ok(Self { coefficient, gamma })
    }

    /// Potential of an Acrobot observation.
    pub fn potential(&self, observation: &[f64]) -> f64 {
        self.coefficient * tip_height(observation)
    }

    /// Shaped reward for a transition; `raw` is the environment's reward.
    pub fn shape(&self, raw: f64, obs: &[f64], next: &EnvState) -> f64 {
        let next_potential = if next.terminated {
            0.0
        } else {
            self.potential(&next.observation)
        };
        raw + self.gamma * next_potential - self.potential(obs)
    }
}

/// Tip height `-cos θ1 - cos(θ1 + θ2)` from an Acrobot observation.
pub fn tip_height(observation: &[f64]) -> f64 {
    let (c1, s1, c2, s2) = (observation[0], observation[1], observation[2], observation[3]);
    -c1 - (c1 * c2 - s1 * s2)
}

/// Result of a shaped step: the environment state, its raw reward and the
/// shaped reward used for learning.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedStep {
    pub state: EnvState,
    pub raw_reward: f64,
    pub shaped_reward: f64,
}

/// Steps an Acrobot environment and applies potential-based shaping.
pub fn shaped_step(
    env: &mut dyn Environment,
    action: usize,
    spec: &ShapingSpec,
) -> Result<ShapedStep> {
    if env.id() != EnvId::Acrobot {
        return Err(Error::config(format!(
            "reward shaping is only defined for acrobot-v1, not {}",
            env.id()
        )));
    }
    let obs = env.observation();
    let (state, raw_reward) = env.step(action)?;
    let shaped_reward = if spec.coefficient == 0.0 {
        raw_reward
    } else {
        spec.shape(raw_reward, &obs, &state)
    };
    Ok(ShapedStep {
        state,
        raw_reward,
        shaped_reward,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn ids_round_trip() {
        for id in EnvId::ALL {
            assert_eq!(id.as_str().parse::<EnvId>().unwrap(), id);
            assert_eq!(id.make().id(), id);
        }
        assert!("nosuch".parse::<EnvId>().is_err());
    }

    #[test]
    fn cartpole_reset_bounds_and_determinism() {
        let mut env = CartPole::new();
        let a = env.reset(&mut ChaCha8Rng::seed_from_u64(7));
        assert!(a.observation.iter().all(|x| x.abs() <= 0.05));
        let b = env.reset(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn mountaincar_reset_velocity_zero() {
        let mut env = MountainCar::new();
        for seed in 0..20 {
            let s = env.reset(&mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(s.observation[1], 0.0);
            assert!((-0.6..=-0.4).contains(&s.observation[0]));
        }
    }

    #[test]
    fn acrobot_reset_bounds() {
        let mut env = Acrobot::new();
        env.reset(&mut ChaCha8Rng::seed_from_u64(1));
        assert!(env.internal_state().iter().all(|x| x.abs() <= 0.1));
    }

    #[test]
    fn cartpole_push_right_from_rest() {
        let mut env = CartPole::new();
        env.set_state([0.0; 4]);
        let (s, r) = env.step(1).unwrap();
        assert_close(
            &s.observation,
            &[0.0, 0.1951219512195122, 0.0, -0.2926829268292683],
            1e-12,
        );
        assert_eq!(r, 1.0);
    }

    #[test]
    fn mountaincar_coast() {
        let mut env = MountainCar::new();
        env.set_state(-0.5, 0.0);
        let (s, r) = env.step(1).unwrap();
        let v = -(-1.5f64).cos() * 0.0025;
        assert_close(&s.observation, &[-0.5 + v, v], 1e-15);
        assert_eq!(r, -1.0);
    }

    #[test]
    fn mountaincar_left_wall_stops_car() {
        let mut env = MountainCar::new();
        env.set_state(-1.19, -0.02);
        let (s, _) = env.step(0).unwrap();
        assert_eq!(s.observation, vec![-1.2, 0.0]);
    }

    #[test]
    fn acrobot_hanging_equilibrium() {
        let mut env = Acrobot::new();
        env.set_state([0.0; 4]);
        env.step(1).unwrap();
        assert!(env.internal_state().iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn invalid_action_and_finished_episode() {
        let mut env = MountainCar::new();
        assert!(matches!(env.step(0), Err(Error::Usage(_))));
        env.reset(&mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(env.step(3), Err(Error::Usage(_))));
        let mut cp = CartPole::new();
        cp.set_state([2.39, 5.0, 0.0, 0.0]);
        let (s, _) = cp.step(1).unwrap();
        assert!(s.terminated && !s.truncated);
        assert!(matches!(cp.step(1), Err(Error::Usage(_))));
    }

    #[test]
    fn time_limits_are_exact() {
        for id in EnvId::ALL {
            let mut env = id.make();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            env.reset(&mut rng);
            // Only MountainCar stays alive under a fixed action for long enough.
            if id != EnvId::MountainCar {
                continue;
            }
            let mut steps = 0;
            loop {
                let (s, _) = env.step(1).unwrap();
                steps += 1;
                if s.done() {
                    assert!(s.truncated && !s.terminated);
                    break;
                }
            }
            assert_eq!(steps, 200);
        }
    }

    #[test]
    fn normalization_examples() {
        let mc = NormalizationSpec::for_env(EnvId::MountainCar);
        assert_eq!(mc.normalize(&[-1.2, 0.0]).unwrap()[0], -1.0);
        assert!(mc.normalize(&[-0.3, 0.0]).unwrap()[0].abs() < 1e-15);
        let cp = NormalizationSpec::for_env(EnvId::CartPole);
        assert_eq!(cp.normalize(&[0.0, 5.0, 0.0, 0.0]).unwrap()[1], 1.0);
        assert!(matches!(
            cp.normalize(&[0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::Data(_))
        ));
        assert!(matches!(cp.normalize(&[0.0]), Err(Error::Config(_))));
        assert!(NormalizationSpec::new(vec![(1.0, 1.0)], true).is_err());
    }

    #[test]
    fn shaping_rejected_off_acrobot() {
        let mut env = CartPole::new();
        env.reset(&mut ChaCha8Rng::seed_from_u64(0));
        let spec = ShapingSpec::new(0.1, 0.99).unwrap();
        assert!(matches!(shaped_step(&mut env, 0, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn shaping_rewards_rising_tip() {
        let spec = ShapingSpec::new(0.1, 1.0).unwrap();
        let mut env = Acrobot::new();
        env.set_state([0.0, 0.0, 3.0, 0.0]);
        let before = Acrobot::tip_height_of(env.internal_state());
        let out = shaped_step(&mut env, 2, &spec).unwrap();
        assert!(Acrobot::tip_height_of(env.internal_state()) > before);
        assert!(out.shaped_reward > out.raw_reward);
    }

    #[test]
    fn tip_height_from_observation_matches_internal_state() {
        let mut env = Acrobot::new();
        env.set_state([0.7, -2.1, 0.0, 0.0]);
        let h = tip_height(&env.observation());
        assert!((h - Acrobot::tip_height_of(env.internal_state())).abs() < 1e-12);
    }
}
