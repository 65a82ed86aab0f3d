//! Evaluates Chebyshev polynomials, featurizes a normalized CartPole state and
//! shows the discrete orthogonality of the basis.
//!
//! ```bash
//! cargo run -p chebdqn --example chebyshev_features -- [degree]
//! ```

use chebdqn::chebyshev::{eval_polynomial, orthogonality_check, ChebyshevBasis};
use chebdqn::env::{EnvId, NormalizationSpec};

fn main() -> chebdqn::Result<()> {
    let degree: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);

    println!("T_n(x) for x in {{-1, -0.5, 0, 0.5, 1}}:");
    for n in 0..=degree {
        let row: Vec<String> = [-1.0, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|&x| eval_polynomial(n, x).map(|t| format!("{t:>7.3}")))
            .collect::<Result<_, _>>()?;
        println!("  T_{n}: {}", row.join(" "));
    }

    let raw = [0.5, -1.0, 0.05, 0.8];
    let normalized = NormalizationSpec::for_env(EnvId::CartPole).normalize(&raw)?;
    let basis = ChebyshevBasis::new(degree, normalized.len())?;
    let features = basis.featurize(&normalized)?;
    println!("\nCartPole state {raw:?}");
    println!("normalized      {normalized:.3?}");
    for (dim, chunk) in features.as_slice().chunks(degree + 1).enumerate() {
        println!("  dim {dim}: {chunk:.3?}");
    }
    println!("{} features = {} dims x (N + 1)", features.len(), normalized.len());

    println!("\nGauss-Chebyshev inner products <T_n, T_m> (K = 32):");
    for n in 0..=degree.min(4) {
        let row: Vec<String> = (0..=degree.min(4))
            .map(|m| format!("{:>7.4}", orthogonality_check(n, m, 32)))
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
