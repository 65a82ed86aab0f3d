//! Runs a tiny grid (two models x two seeds on CartPole) through the
//! experiment harness, writes the markdown summary and rebuilds it from disk.

use chebdqn::config::ConfigLayer;
use chebdqn::harness::{load_runs, render_summary, run_all, write_summary};

const GRID: &str = r#"
seeds = [0, 1]
episodes = 40
warmup = 200
window = 10

[[cells]]
env = "cartpole-v1"
arch = "mlp"

[[cells]]
env = "cartpole-v1"
arch = "cheb"
degree = 4
"#;

fn main() -> chebdqn::Result<()> {
    let out = std::env::temp_dir().join("chebdqn-sweep-example");
    let layer = ConfigLayer::from_toml(GRID)?.overlay(ConfigLayer {
        out: Some(out.clone()),
        ..ConfigLayer::default()
    });
    let cells = layer.resolve_cells()?;
    let tasks: Vec<_> = cells
        .iter()
        .flat_map(|c| c.seeds.iter().map(move |&s| (c.clone(), s)))
        .collect();
    let results = run_all(&tasks, 1)?;
    for r in &results {
        println!("{:<6} seed {} final score {:?} -> {}", r.architecture.label(), r.seed, r.final_score, r.curve_path.display());
    }
    let summaries: Vec<_> = results.iter().map(|r| r.summary()).collect();
    write_summary(&out, &summaries)?;

    // The summary can always be regenerated from the CSV and manifest files.
    let rebuilt = render_summary(&load_runs(&out)?)?;
    println!("\n{rebuilt}");
    Ok(())
}
