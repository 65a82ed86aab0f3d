//! Chebyshev polynomials of the first kind and the per-dimension feature map.
//!
//! A normalized state `s ∈ [-1, 1]^D` is expanded into
//! `[T_0(s_1) .. T_N(s_1), T_0(s_2) .. T_N(s_2), ..., T_0(s_D) .. T_N(s_D)]`,
//! a vector of length `D * (N + 1)`. Each dimension carries its own `T_0`
//! slot, so the constant feature is repeated `D` times.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Inputs this close to the interval are clamped onto it instead of rejected.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

fn clamp_to_domain(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_TOLERANCE {
        return Err(Error::Domain(format!(
            "Chebyshev argument {x} lies outside [-1, 1]"
        )));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Evaluates `T_n(x)` with the three-term recurrence
/// `T_{k+1} = 2x T_k - T_{k-1}`.
pub fn eval_polynomial(n: usize, x: f64) -> Result<f64> {
    let x = clamp_to_domain(x)?;
    Ok(recurrence(n, x))
}

#[inline]
fn recurrence(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..n {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Writes `T_0(x) .. T_N(x)` into `out` (`out.len() == N + 1`).
#[inline]
fn fill_series(x: f64, out: &mut [f64]) {
    let mut iter = out.iter_mut();
    let (Some(t0), rest) = (iter.next(), iter) else {
        return;
    };
    *t0 = 1.0;
    let (mut prev, mut cur) = (1.0, x);
    for (k, slot) in rest.enumerate() {
        if k == 0 {
            *slot = x;
            continue;
        }
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
        *slot = cur;
    }
}

/// Feature map parameters: maximum degree `N` and state dimension `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChebyshevBasis {
    degree: usize,
    state_dim: usize,
}

impl ChebyshevBasis {
    pub fn new(degree: usize, state_dim: usize) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::config("state dimension must be at least 1"));
        }
        Ok(Self { degree, state_dim })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// `D * (N + 1)`.
    pub fn feature_dim(&self) -> usize {
        self.state_dim * (self.degree + 1)
    }

    /// Expands a normalized state into its Chebyshev features.
    pub fn featurize(&self, state: &[f64]) -> Result<FeatureVector> {
        let mut values = vec![0.0; self.feature_dim()];
        self.featurize_into(state, &mut values)?;
        Ok(FeatureVector(values))
    }

    /// Allocation-free variant of [`featurize`](Self::featurize).
    pub fn featurize_into(&self, state: &[f64], out: &mut [f64]) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(Error::config(format!(
                "state has {} components, basis expects {}",
                state.len(),
                self.state_dim
            )));
        }
        if out.len() != self.feature_dim() {
            return Err(Error::config(format!(
                "feature buffer has length {}, expected {}",
                out.len(),
                self.feature_dim()
            )));
        }
        for (&s, chunk) in state.iter().zip(out.chunks_exact_mut(self.degree + 1)) {
            fill_series(clamp_to_domain(s)?, chunk);
        }
        Ok(())
    }
}

/// Concatenated Chebyshev features of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `K`-node Gauss–Chebyshev estimate of `∫ T_n T_m / sqrt(1 - x²) dx`.
///
/// Exact (up to rounding) whenever `K >= n + m + 1`, in which case the result is
/// `0` for `n != m`, `π` for `n = m = 0` and `π/2` otherwise.
pub fn orthogonality_check(n: usize, m: usize, nodes: usize) -> f64 {
    if nodes == 0 {
        return 0.0;
    }
    let k_f = nodes as f64;
    let sum: f64 = (1..=nodes)
        .map(|k| {
            let x = ((2 * k - 1) as f64 * PI / (2.0 * k_f)).cos();
            recurrence(n, x) * recurrence(m, x)
        })
        .sum();
    PI / k_f * sum
}
