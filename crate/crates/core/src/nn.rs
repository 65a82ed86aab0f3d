//! Dense feed-forward Q-networks with hand-written backpropagation and Adam.
//!
//! Hidden layers use ReLU, the output layer is linear. All arithmetic is `f64`.
//! The training loss for one sample is `(y - Q(s, a))²`, which only involves
//! the output unit of the chosen action.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::data(format!("unknown activation `{other}`"))),
        }
    }
}

/// Layer sizes of a network. Hidden layers are ReLU, the output is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden,
            output_dim,
        }
    }

    /// `(in, out, activation)` for every layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, Activation)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(self.output_dim);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                (w[0], w[1], act)
            })
            .collect()
    }

    /// Σ over layers of `out * in + out`.
    pub fn parameter_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|&(i, o, _)| o * i + o)
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::config(format!(
                "network layers must be non-empty: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Free-function form of [`NetworkSpec::parameter_count`].
pub fn parameter_count(spec: &NetworkSpec) -> usize {
    spec.parameter_count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `[out × in]`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != in_dim * out_dim || biases.len() != out_dim {
            return Err(Error::config(format!(
                "layer {in_dim}->{out_dim} got {} weights and {} biases",
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases,
            activation,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    /// Uniform Glorot weights in `±sqrt(6 / (in + out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Writes pre-activations into `pre` and activations into `post`.
    fn forward_into(&self, input: &[f64], pre: &mut [f64], post: &mut [f64]) {
        for (o, (p, q)) in pre.iter_mut().zip(post.iter_mut()).enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let z = dot(row, input) + self.biases[o];
            *p = z;
            *q = match self.activation {
                Activation::Relu => z.max(0.0),
                Activation::Identity => z,
            };
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
///
/// A trace is reusable: [`QNetwork::trace_into`] overwrites it in place.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Output of the traced pass (the Q-values).
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Pre-activation values of layer `layer`.
    pub fn pre_activation(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }

    fn shape_for(&mut self, spec: &NetworkSpec) {
        let shapes = spec.layer_shapes();
        let matches = self.activations.len() == shapes.len() + 1
            && self.activations[0].len() == spec.input_dim
            && shapes
                .iter()
                .zip(&self.pre)
                .all(|(&(_, o, _), p)| p.len() == o);
        if matches {
            return;
        }
        self.activations = std::iter::once(spec.input_dim)
            .chain(shapes.iter().map(|s| s.1))
            .map(|d| vec![0.0; d])
            .collect();
        self.pre = shapes.iter().map(|s| vec![0.0; s.1]).collect();
        self.delta = shapes.iter().map(|s| vec![0.0; s.1]).collect();
    }

    fn is_for(&self, spec: &NetworkSpec) -> bool {
        let shapes = spec.layer_shapes();
        self.activations.len() == shapes.len() + 1
            && self.activations[0].len() == spec.input_dim
            && shapes
                .iter()
                .zip(&self.pre)
                .all(|(&(_, o, _), p)| p.len() == o)
    }
}

/// Gradient buffers shaped like a network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().flatten().for_each(|g| *g = 0.0);
        self.biases.iter_mut().flatten().for_each(|g| *g = 0.0);
    }

    pub fn layer_weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn layer_biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    /// All gradient entries in the same order as [`QNetwork::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn global_norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flatten()
            .for_each(|g| *g *= factor);
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
    }

    fn same_shape(&self, net: &QNetwork) -> bool {
        self.weights.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(i, l)| {
                self.weights[i].len() == l.weights.len() && self.biases[i].len() == l.biases.len()
            })
    }
}

/// A feed-forward network mapping an input vector to one value per action.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    spec: NetworkSpec,
    layers: Vec<DenseLayer>,
}

impl QNetwork {
    /// Glorot-initialized network drawn from `rng`.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(i, o, act)| DenseLayer::glorot(i, o, act, rng))
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(i, o, act)| DenseLayer::zeros(i, o, act))
            .collect();
        Ok(Self { spec, layers })
    }

    /// Builds a network from explicit layers. The layer chain must be
    /// consistent; activations are taken as given.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::config("a network needs at least one layer")),
        };
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::config(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        let spec = NetworkSpec {
            input_dim: first.in_dim,
            hidden: layers[..layers.len() - 1].iter().map(|l| l.out_dim).collect(),
            output_dim: last.out_dim,
        };
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    /// Flattened parameters: per layer, weights (row-major) then biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
            .collect()
    }

    /// Mutable access to parameter `index` in [`parameters`](Self::parameters) order.
    pub fn parameter_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for layer in &mut self.layers {
            if index < layer.weights.len() {
                return layer.weights.get_mut(index);
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return layer.biases.get_mut(index);
            }
            index -= layer.biases.len();
        }
        None
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_dim {
            return Err(Error::config(format!(
                "network input has length {}, expected {}",
                input.len(),
                self.spec.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = ForwardTrace::new();
        self.trace_into(input, &mut trace)?;
        Ok(trace.output().to_vec())
    }

    /// Forward pass that keeps every intermediate value in `trace`.
    pub fn trace_into(&self, input: &[f64], trace: &mut ForwardTrace) -> Result<()> {
        self.check_input(input)?;
        trace.shape_for(&self.spec);
        trace.activations[0].copy_from_slice(input);
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = trace.activations.split_at_mut(l + 1);
            layer.forward_into(&done[l], &mut trace.pre[l], &mut rest[0]);
        }
        Ok(())
    }

    /// Adds `weight * ∂(y - Q(s, action))² / ∂θ` to `grads` and returns the
    /// squared error. `trace` must come from [`trace_into`](Self::trace_into)
    /// on this network with the current parameters.
    pub fn accumulate_gradient(
        &self,
        trace: &mut ForwardTrace,
        action: usize,
        target: f64,
        weight: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        if !trace.is_for(&self.spec) {
            return Err(Error::usage(
                "backward pass needs a forward trace recorded on this network",
            ));
        }
        if action >= self.spec.output_dim {
            return Err(Error::usage(format!(
                "action {action} out of range for {} outputs",
                self.spec.output_dim
            )));
        }
        if !grads.same_shape(self) {
            return Err(Error::config("gradient buffers do not match the network"));
        }
        let last = self.layers.len() - 1;
        let err = target - trace.activations[last + 1][action];
        let delta = &mut trace.delta[last];
        delta.iter_mut().for_each(|d| *d = 0.0);
        delta[action] = -2.0 * err * weight;

        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            if layer.activation == Activation::Relu {
                for (d, &z) in trace.delta[l].iter_mut().zip(&trace.pre[l]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &trace.activations[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            let (lower, upper) = trace.delta.split_at_mut(l);
            let delta = &upper[0];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                axpy(d, input, &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim]);
            }
            if l > 0 {
                let prev = &mut lower[l - 1];
                prev.iter_mut().for_each(|p| *p = 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    axpy(d, &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim], prev);
                }
            }
        }
        Ok(err * err)
    }

    /// Runs a forward pass and accumulates the gradient of one sample's loss.
    pub fn backward_and_accumulate(
        &self,
        input: &[f64],
        action: usize,
        target: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let mut trace = ForwardTrace::new();
        self.trace_into(input, &mut trace)?;
        self.accumulate_gradient(&mut trace, action, target, 1.0, grads)
    }

    /// Overwrites this network's parameters with those of `src`.
    pub fn copy_weights_from(&mut self, src: &QNetwork) -> Result<()> {
        if self.spec != src.spec {
            return Err(Error::config(format!(
                "cannot copy weights between {:?} and {:?}",
                src.spec, self.spec
            )));
        }
        for (dst, s) in self.layers.iter_mut().zip(&src.layers) {
            dst.weights.copy_from_slice(&s.weights);
            dst.biases.copy_from_slice(&s.biases);
        }
        Ok(())
    }

    /// Serializes the network in the text checkpoint format.
    ///
    /// ```text
    /// chebdqn-checkpoint 1
    /// layers <L>
    /// layer <in> <out> <relu|identity>
    /// w <out*in row-major values>
    /// b <out values>
    /// ...
    /// ```
    /// Values use the shortest decimal form that parses back to the same `f64`.
    pub fn to_checkpoint(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "chebdqn-checkpoint 1");
        let _ = writeln!(s, "layers {}", self.layers.len());
        for layer in &self.layers {
            let _ = writeln!(
                s,
                "layer {} {} {}",
                layer.in_dim,
                layer.out_dim,
                layer.activation.name()
            );
            for (tag, values) in [("w", &layer.weights), ("b", &layer.biases)] {
                s.push_str(tag);
                for v in values.iter() {
                    let _ = write!(s, " {v}");
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::data(format!("checkpoint truncated before {what}")))
        };
        if next("header")?.trim() != "chebdqn-checkpoint 1" {
            return Err(Error::data("not a version 1 checkpoint"));
        }
        let count: usize = parse_tagged(next("layer count")?, "layers")?
            .first()
            .copied()
            .ok_or_else(|| Error::data("missing layer count"))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let header = next("layer header")?;
            let fields: Vec<&str> = header.split_whitespace().collect();
            let [tag, i, o, act] = fields[..] else {
                return Err(Error::data(format!("bad layer header `{header}`")));
            };
            if tag != "layer" {
                return Err(Error::data(format!("expected `layer`, got `{tag}`")));
            }
            let parse_dim = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::data(format!("bad dimension `{s}`: {e}")))
            };
            let (i, o) = (parse_dim(i)?, parse_dim(o)?);
            let weights = parse_tagged(next("weights")?, "w")?;
            let biases = parse_tagged(next("biases")?, "b")?;
            layers.push(
                DenseLayer::new(i, o, weights, biases, Activation::parse(act)?)
                    .map_err(|e| Error::data(e.to_string()))?,
            );
        }
        Self::from_layers(layers).map_err(|e| Error::data(e.to_string()))
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint())?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&fs::read_to_string(path)?)
    }
}

fn parse_tagged<T: std::str::FromStr>(line: &str, tag: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::data(format!("expected `{tag}` line, got `{line}`")));
    }
    parts
        .map(|p| {
            p.parse::<T>()
                .map_err(|e| Error::data(format!("bad value `{p}`: {e}")))
        })
        .collect()
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    t: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(config: AdamConfig, net: &QNetwork) -> Self {
        Self {
            config,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &Gradients {
        &self.m
    }

    pub fn second_moment(&self) -> &Gradients {
        &self.v
    }

    /// Applies one update `θ ← θ - α m̂ / (sqrt(v̂) + ε)`.
    pub fn step(&mut self, net: &mut QNetwork, grads: &Gradients) -> Result<()> {
        if !grads.same_shape(net) || !self.m.same_shape(net) {
            return Err(Error::config(
                "optimizer state, gradients and parameters differ in shape",
            ));
        }
        self.t += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let groups = [
                (&mut layer.weights, &grads.weights[l], &mut self.m.weights[l], &mut self.v.weights[l]),
                (&mut layer.biases, &grads.biases[l], &mut self.m.biases[l], &mut self.v.biases[l]),
            ];
            for (params, g, m, v) in groups {
                for (((p, &g), m), v) in params.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn two_two_one() -> QNetwork {
        QNetwork::from_layers(vec![
            DenseLayer::new(2, 2, vec![1.0, -1.0, 0.5, 2.0], vec![0.0, -1.0], Activation::Relu)
                .unwrap(),
            DenseLayer::new(2, 1, vec![1.0, -2.0], vec![0.5], Activation::Identity).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(NetworkSpec::new(5, vec![7, 3], 4)).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn identity_layer_passes_through() {
        let eye = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let net = QNetwork::from_layers(vec![
            DenseLayer::new(3, 3, eye, vec![0.0; 3], Activation::Identity).unwrap(),
        ])
        .unwrap();
        assert_eq!(net.forward(&[0.25, -4.0, 7.5]).unwrap(), vec![0.25, -4.0, 7.5]);
    }

    #[test]
    fn hand_evaluated_forward() {
        // hidden pre = [1 - 2, 0.5 + 4 - 1] = [-1, 3.5] -> relu [0, 3.5]
        // out = 0 - 7 + 0.5
        assert_eq!(two_two_one().forward(&[1.0, 2.0]).unwrap(), vec![-6.5]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        assert!(matches!(two_two_one().forward(&[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn zero_gradient_at_loss_minimum() {
        let net = two_two_one();
        let mut g = Gradients::zeros_like(&net);
        let loss = net.backward_and_accumulate(&[1.0, 2.0], 0, -6.5, &mut g).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_linear_unit_gradient() {
        let (w, x, y) = (0.7, 1.5, 2.0);
        let net = QNetwork::from_layers(vec![
            DenseLayer::new(1, 1, vec![w], vec![0.0], Activation::Identity).unwrap(),
        ])
        .unwrap();
        let mut g = Gradients::zeros_like(&net);
        net.backward_and_accumulate(&[x], 0, y, &mut g).unwrap();
        let expected = -2.0 * x * (y - w * x);
        assert!((g.layer_weights(0)[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn unselected_outputs_get_no_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(NetworkSpec::new(3, vec![4], 3), &mut rng).unwrap();
        let mut g = Gradients::zeros_like(&net);
        net.backward_and_accumulate(&[0.1, 0.2, -0.3], 1, 5.0, &mut g).unwrap();
        let gw = g.layer_weights(1);
        assert!(gw[0..4].iter().chain(&gw[8..12]).all(|&x| x == 0.0));
        assert_eq!(g.layer_biases(1)[0], 0.0);
        assert_eq!(g.layer_biases(1)[2], 0.0);
        assert_ne!(g.layer_biases(1)[1], 0.0);
    }

    #[test]
    fn mismatched_trace_is_usage_error() {
        let net = two_two_one();
        let other = QNetwork::zeros(NetworkSpec::new(3, vec![2], 1)).unwrap();
        let mut trace = ForwardTrace::new();
        other.trace_into(&[0.0; 3], &mut trace).unwrap();
        let mut g = Gradients::zeros_like(&net);
        assert!(matches!(
            net.accumulate_gradient(&mut trace, 0, 1.0, 1.0, &mut g),
            Err(Error::Usage(_))
        ));
        let mut empty = ForwardTrace::new();
        assert!(matches!(
            net.accumulate_gradient(&mut empty, 0, 1.0, 1.0, &mut g),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(parameter_count(&NetworkSpec::new(4, vec![64, 64], 2)), 4610);
        assert_eq!(parameter_count(&NetworkSpec::new(20, vec![64, 64], 2)), 5634);
        assert_eq!(parameter_count(&NetworkSpec::new(1, vec![], 1)), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = QNetwork::new(NetworkSpec::new(20, vec![64, 64], 2), &mut rng).unwrap();
        assert_eq!(net.parameter_count(), 5634);
        assert_eq!(net.parameters().len(), 5634);
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = QNetwork::new(NetworkSpec::new(3, vec![4], 2), &mut rng).unwrap();
        let before = net.parameters();
        let mut adam = Adam::new(AdamConfig::default(), &net);
        let g = Gradients::zeros_like(&net);
        adam.step(&mut net, &g).unwrap();
        assert_eq!(net.parameters(), before);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn adam_first_step_matches_hand_value() {
        let mut net = QNetwork::from_layers(vec![
            DenseLayer::new(1, 1, vec![0.0], vec![0.0], Activation::Identity).unwrap(),
        ])
        .unwrap();
        let mut adam = Adam::new(AdamConfig::with_learning_rate(0.1), &net);
        let mut g = Gradients::zeros_like(&net);
        g.weights[0][0] = 0.5;
        adam.step(&mut net, &g).unwrap();
        // -α g / (|g| + ε) with α = 0.1, g = 0.5
        assert!((net.layers()[0].weights()[0] - -0.09999999800000003).abs() < 1e-15);
        assert_eq!(net.layers()[0].biases()[0], 0.0);
    }

    #[test]
    fn adam_constant_gradient_step_tends_to_learning_rate() {
        let mut net = QNetwork::from_layers(vec![
            DenseLayer::new(1, 1, vec![0.0], vec![0.0], Activation::Identity).unwrap(),
        ])
        .unwrap();
        let mut adam = Adam::new(AdamConfig::with_learning_rate(0.01), &net);
        let mut g = Gradients::zeros_like(&net);
        g.weights[0][0] = -3.0;
        let mut last = 0.0;
        for _ in 0..2000 {
            let before = net.layers()[0].weights()[0];
            adam.step(&mut net, &g).unwrap();
            last = net.layers()[0].weights()[0] - before;
        }
        assert!((last - 0.01).abs() < 1e-6, "step {last}");
    }

    #[test]
    fn adam_shape_mismatch() {
        let a = QNetwork::zeros(NetworkSpec::new(2, vec![], 1)).unwrap();
        let mut b = QNetwork::zeros(NetworkSpec::new(3, vec![], 1)).unwrap();
        let mut adam = Adam::new(AdamConfig::default(), &a);
        let g = Gradients::zeros_like(&b);
        assert!(matches!(adam.step(&mut b, &g), Err(Error::Config(_))));
    }

    #[test]
    fn copy_weights_makes_outputs_equal_and_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = NetworkSpec::new(20, vec![64, 64], 2);
        let mut src = QNetwork::new(spec.clone(), &mut rng).unwrap();
        let mut dst = QNetwork::new(spec, &mut rng).unwrap();
        dst.copy_weights_from(&src).unwrap();
        assert_eq!(dst.parameters(), src.parameters());
        assert_eq!(dst.parameter_count(), 5634);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let frozen = dst.forward(&x).unwrap();
        assert_eq!(frozen, src.forward(&x).unwrap());

        let mut adam = Adam::new(AdamConfig::default(), &src);
        let mut g = Gradients::zeros_like(&src);
        src.backward_and_accumulate(&x, 0, 10.0, &mut g).unwrap();
        adam.step(&mut src, &g).unwrap();
        assert_ne!(src.forward(&x).unwrap(), frozen);
        assert_eq!(dst.forward(&x).unwrap(), frozen);
    }

    #[test]
    fn copy_weights_rejects_other_spec() {
        let src = QNetwork::zeros(NetworkSpec::new(2, vec![3], 1)).unwrap();
        let mut dst = QNetwork::zeros(NetworkSpec::new(2, vec![4], 1)).unwrap();
        assert!(matches!(dst.copy_weights_from(&src), Err(Error::Config(_))));
    }

    #[test]
    fn relu_gradient_zero_where_inactive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = QNetwork::new(NetworkSpec::new(4, vec![16], 2), &mut rng).unwrap();
        let x = [0.3, -0.8, 0.5, 0.9];
        let mut trace = ForwardTrace::new();
        net.trace_into(&x, &mut trace).unwrap();
        let pre = trace.pre_activation(0).to_vec();
        let mut g = Gradients::zeros_like(&net);
        net.accumulate_gradient(&mut trace, 1, 3.0, 1.0, &mut g).unwrap();
        assert!(pre.iter().any(|&z| z < 0.0));
        for (o, &z) in pre.iter().enumerate() {
            if z < 0.0 {
                assert_eq!(g.layer_biases(0)[o], 0.0);
                assert!(g.layer_weights(0)[o * 4..(o + 1) * 4].iter().all(|&w| w == 0.0));
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = QNetwork::new(NetworkSpec::new(6, vec![5, 3], 3), &mut rng).unwrap();
        let back = QNetwork::from_checkpoint(&net.to_checkpoint()).unwrap();
        assert_eq!(back, net);
        assert!(QNetwork::from_checkpoint("garbage").is_err());
    }
}
