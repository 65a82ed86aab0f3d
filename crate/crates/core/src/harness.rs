//! Multi-seed training runs, learning-curve files and summary metrics.
//!
//! Every run writes `<stem>.csv` (one row per episode, flushed as it goes) and
//! `<stem>.run.toml` (the resolved settings) into the output directory, where
//! `<stem>` is `<env>__<model>__seed<k>`. Aggregated results go to
//! `summary.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agent::{run_episode, Agent, AgentConfig, Architecture, EpisodeRecord, RunRngs};
use crate::config::ExperimentConfig;
use crate::env::EnvId;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "episode,steps,raw_return,trailing_mean,epsilon,global_step,loss_mean";
pub const SUMMARY_FILE: &str = "summary.md";

// ------------------------------------------------------------------ metrics

/// Mean of the last `window` returns of `returns[..end]` (fewer at the start).
fn window_mean(returns: &[f64], end: usize, window: usize) -> f64 {
    let from = end.saturating_sub(window);
    returns[from..end].iter().sum::<f64>() / (end - from) as f64
}

/// Mean of the returns over episodes `max(1, k - W + 1) ..= k`, for every `k`.
pub fn trailing_means(returns: &[f64], window: usize) -> Vec<f64> {
    (1..=returns.len())
        .map(|end| window_mean(returns, end, window.max(1)))
        .collect()
}

/// Mean return of the last `window` episodes; `None` with fewer episodes.
pub fn final_score(returns: &[f64], window: usize) -> Option<f64> {
    (window > 0 && returns.len() >= window).then(|| window_mean(returns, returns.len(), window))
}

/// First episode (1-based) at which a full trailing window averages at least
/// `threshold`.
pub fn episodes_to_threshold(returns: &[f64], window: usize, threshold: f64) -> Option<usize> {
    if window == 0 {
        return None;
    }
    (window..=returns.len()).find(|&end| window_mean(returns, end, window) >= threshold)
}

// ------------------------------------------------------------ learning curve

/// One parsed row of a learning-curve CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    pub steps: usize,
    pub raw_return: f64,
    pub trailing_mean: f64,
    pub epsilon: f64,
    pub global_step: u64,
    /// `NaN` when no update ran during the episode.
    pub loss_mean: f64,
}

impl CurveRow {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.steps,
            self.raw_return,
            self.trailing_mean,
            self.epsilon,
            self.global_step,
            self.loss_mean
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        let [episode, steps, raw_return, trailing_mean, epsilon, global_step, loss_mean] = fields[..]
        else {
            return Err(Error::data(format!("expected 7 CSV fields in `{line}`")));
        };
        fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse()
                .map_err(|_| Error::data(format!("cannot parse CSV field `{s}`")))
        }
        Ok(Self {
            episode: num(episode)?,
            steps: num(steps)?,
            raw_return: num(raw_return)?,
            trailing_mean: num(trailing_mean)?,
            epsilon: num(epsilon)?,
            global_step: num(global_step)?,
            loss_mean: num(loss_mean)?,
        })
    }
}

fn curve_rows(records: &[EpisodeRecord], window: usize) -> Vec<CurveRow> {
    let returns: Vec<f64> = records.iter().map(|r| r.raw_return).collect();
    trailing_means(&returns, window)
        .into_iter()
        .zip(records)
        .enumerate()
        .map(|(i, (trailing_mean, r))| CurveRow {
            episode: i + 1,
            steps: r.steps,
            raw_return: r.raw_return,
            trailing_mean,
            epsilon: r.epsilon,
            global_step: r.global_step,
            loss_mean: r.loss_mean.unwrap_or(f64::NAN),
        })
        .collect()
}

/// Appends rows to a learning-curve CSV, flushing after each one.
struct CurveWriter {
    out: BufWriter<File>,
    returns: Vec<f64>,
    window: usize,
}

impl CurveWriter {
    fn create(path: &Path, window: usize) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(Self {
            out,
            returns: Vec::new(),
            window,
        })
    }

    fn append(&mut self, record: &EpisodeRecord) -> Result<()> {
        self.returns.push(record.raw_return);
        let n = self.returns.len();
        let trailing_mean = window_mean(&self.returns, n, self.window);
        let row = CurveRow {
            episode: n,
            steps: record.steps,
            raw_return: record.raw_return,
            trailing_mean,
            epsilon: record.epsilon,
            global_step: record.global_step,
            loss_mean: record.loss_mean.unwrap_or(f64::NAN),
        };
        writeln!(self.out, "{}", row.to_line())?;
        self.out.flush()?;
        Ok(())
    }
}

/// Writes the full learning curve of `result` to `path`.
pub fn emit_learning_curve(result: &RunResult, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for row in curve_rows(&result.episodes, result.window) {
        writeln!(out, "{}", row.to_line())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_learning_curve(path: impl AsRef<Path>) -> Result<Vec<CurveRow>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(CSV_HEADER) {
        return Err(Error::data(format!(
            "{} does not start with the learning-curve header",
            path.display()
        )));
    }
    lines
        .filter(|l| l.as_ref().map_or(true, |l| !l.is_empty()))
        .map(|l| CurveRow::parse(&l?))
        .collect()
}

// ---------------------------------------------------------------------- runs

/// Everything recorded about one training run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub env: EnvId,
    pub architecture: Architecture,
    pub seed: u64,
    pub window: usize,
    pub threshold: f64,
    pub episodes: Vec<EpisodeRecord>,
    pub final_score: Option<f64>,
    pub episodes_to_threshold: Option<usize>,
    pub parameter_count: usize,
    pub wall_clock_secs: f64,
    pub curve_path: PathBuf,
}

impl RunResult {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.raw_return).collect()
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            env: self.env,
            architecture: self.architecture,
            seed: self.seed,
            window: self.window,
            threshold: self.threshold,
            final_score: self.final_score,
            episodes_to_threshold: self.episodes_to_threshold,
            parameter_count: self.parameter_count,
        }
    }
}

/// Resolved settings of a run, stored next to its CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub env: EnvId,
    pub model: String,
    pub seed: u64,
    pub window: usize,
    pub threshold: f64,
    pub parameter_count: usize,
    pub shaping: Option<f64>,
    pub agent: AgentConfig,
}

/// Trains one agent for `config.agent.episodes` episodes with `seed`.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    config.validate()?;
    let started = Instant::now();
    let stem = config.run_stem(seed);
    fs::create_dir_all(&config.out_dir)?;
    let curve_path = config.out_dir.join(format!("{stem}.csv"));

    let mut rngs = RunRngs::from_seed(seed);
    let mut agent = Agent::new(config.agent.clone(), config.env, &mut rngs.init)?;
    let parameter_count = agent.policy().parameter_count();
    let manifest = RunManifest {
        env: config.env,
        model: config.agent.architecture.label(),
        seed,
        window: config.window,
        threshold: config.threshold,
        parameter_count,
        shaping: config.shaping,
        agent: config.agent.clone(),
    };
    let manifest_text = toml::to_string(&manifest)
        .map_err(|e| Error::data(format!("cannot serialize run manifest: {e}")))?;
    fs::write(config.out_dir.join(format!("{stem}.run.toml")), manifest_text)?;

    let mut writer = CurveWriter::create(&curve_path, config.window)?;
    let mut env = config.env.make();
    let shaping = config.shaping_spec();
    let mut episodes = Vec::with_capacity(config.agent.episodes);
    for episode in 1..=config.agent.episodes {
        env.reset(&mut rngs.env);
        let record = run_episode(&mut agent, env.as_mut(), shaping.as_ref(), &mut rngs)?;
        writer.append(&record)?;
        episodes.push(record);
        if episode % config.window == 0 || episode == config.agent.episodes {
            let last = *writer.returns.last().unwrap_or(&f64::NAN);
            let mean = window_mean(&writer.returns, writer.returns.len(), config.window);
            log::info!(
                "{stem}: episode {episode}/{} return {last} trailing mean {mean:.2} epsilon {:.3}",
                config.agent.episodes,
                agent.epsilon()
            );
        }
    }
    let returns: Vec<f64> = episodes.iter().map(|e| e.raw_return).collect();
    Ok(RunResult {
        env: config.env,
        architecture: config.agent.architecture,
        seed,
        window: config.window,
        threshold: config.threshold,
        final_score: final_score(&returns, config.window),
        episodes_to_threshold: episodes_to_threshold(&returns, config.window, config.threshold),
        episodes,
        parameter_count,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        curve_path,
    })
}

/// Runs every `(config, seed)` pair, at most `jobs` at a time. Results come
/// back in input order.
pub fn run_all(tasks: &[(ExperimentConfig, u64)], jobs: usize) -> Result<Vec<RunResult>> {
    for (cfg, _) in tasks {
        cfg.validate()?;
    }
    let jobs = jobs.max(1).min(tasks.len().max(1));
    if jobs == 1 {
        return tasks.iter().map(|(c, s)| run_single(c, *s)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunResult>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((cfg, seed)) = tasks.get(i) else {
                    break;
                };
                let result = run_single(cfg, *seed);
                slots.lock().expect("result slots poisoned")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every task produces a result"))
        .collect()
}

/// One run per configured seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    let tasks: Vec<_> = config.seeds.iter().map(|&s| (config.clone(), s)).collect();
    run_all(&tasks, config.jobs)
}

// --------------------------------------------------------------- aggregation

/// Per-run metrics needed for the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub env: EnvId,
    pub architecture: Architecture,
    pub seed: u64,
    pub window: usize,
    pub threshold: f64,
    pub final_score: Option<f64>,
    pub episodes_to_threshold: Option<usize>,
    pub parameter_count: usize,
}

/// Cross-seed statistics of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub runs: usize,
    /// Runs that had at least `W` episodes and therefore a final score.
    pub scored_runs: usize,
    pub mean_final_score: Option<f64>,
    /// Sample standard deviation; 0 when fewer than two runs are scored.
    pub std_final_score: f64,
    /// Set when the deviation is not meaningful (a single scored run).
    pub single_seed: bool,
    /// Median episodes-to-threshold, counting unsolved runs as +∞.
    /// `None` means the median itself is +∞.
    pub median_episodes_to_threshold: Option<f64>,
}

/// Mean ± sample std of final scores and the median episodes-to-threshold.
pub fn aggregate<'a, I>(results: I) -> Result<AggregateResult>
where
    I: IntoIterator<Item = &'a RunSummary>,
{
    let results: Vec<&RunSummary> = results.into_iter().collect();
    if results.is_empty() {
        return Err(Error::usage("cannot aggregate an empty set of runs"));
    }
    let scores: Vec<f64> = results.iter().filter_map(|r| r.final_score).collect();
    let n = scores.len();
    let mean = (n > 0).then(|| scores.iter().sum::<f64>() / n as f64);
    let std = match (mean, n) {
        (Some(m), n) if n > 1 => {
            (scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
        _ => 0.0,
    };
    let mut solved: Vec<Option<usize>> = results.iter().map(|r| r.episodes_to_threshold).collect();
    // None (never reached) sorts after every finite count.
    solved.sort_by_key(|v| v.map_or((1, 0), |e| (0, e)));
    let mid = solved.len() / 2;
    let median = if solved.len() % 2 == 1 {
        solved[mid].map(|e| e as f64)
    } else {
        match (solved[mid - 1], solved[mid]) {
            (Some(a), Some(b)) => Some((a + b) as f64 / 2.0),
            _ => None,
        }
    };
    Ok(AggregateResult {
        runs: results.len(),
        scored_runs: n,
        mean_final_score: mean,
        std_final_score: std,
        single_seed: n == 1,
        median_episodes_to_threshold: median,
    })
}

// ------------------------------------------------------------ parameter table

/// Hidden widths used for `env` in the reference experiments.
pub fn default_hidden(env: EnvId) -> Vec<usize> {
    AgentConfig::defaults_for(env, Architecture::Mlp).hidden
}

/// Trainable parameters of the default network for `(env, architecture)`.
pub fn count_parameters(env: EnvId, architecture: Architecture) -> usize {
    AgentConfig::defaults_for(env, architecture)
        .network_spec(env)
        .parameter_count()
}

/// Published parameter counts for the four reference models of each
/// environment (baseline, then N = 4, 6, 8).
pub fn reference_parameter_count(env: EnvId, architecture: Architecture) -> Option<usize> {
    let table = match env {
        EnvId::CartPole => [4_610, 5_634, 6_146, 6_658],
        EnvId::MountainCar => [4_483, 5_027, 5_355, 5_683],
        EnvId::Acrobot => [17_411, 19_715, 21_251, 22_787],
    };
    let row = match architecture {
        Architecture::Mlp => 0,
        Architecture::Chebyshev { degree: 4 } => 1,
        Architecture::Chebyshev { degree: 6 } => 2,
        Architecture::Chebyshev { degree: 8 } => 3,
        Architecture::Chebyshev { .. } => return None,
    };
    Some(table[row])
}

/// The four reference models: baseline and Chebyshev N = 4, 6, 8.
pub const REFERENCE_MODELS: [Architecture; 4] = [
    Architecture::Mlp,
    Architecture::Chebyshev { degree: 4 },
    Architecture::Chebyshev { degree: 6 },
    Architecture::Chebyshev { degree: 8 },
];

/// Formats `n` with thousands separators.
pub fn with_commas(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Plain-text parameter table for `env`, with mismatches against the
/// published counts called out.
pub fn parameter_table(env: EnvId) -> String {
    let mut s = String::new();
    let hidden = default_hidden(env);
    let _ = writeln!(
        s,
        "{env} (state dim {}, hidden {:?}, {} actions)",
        env.obs_dim(),
        hidden,
        env.num_actions()
    );
    let _ = writeln!(s, "{:<16} {:>10} {:>10}", "Model", "Computed", "Published");
    let mut mismatches = 0;
    for arch in REFERENCE_MODELS {
        let computed = count_parameters(env, arch);
        let published = reference_parameter_count(env, arch).expect("reference model");
        let flag = if computed == published {
            ""
        } else {
            mismatches += 1;
            "  *"
        };
        let _ = writeln!(
            s,
            "{:<16} {:>10} {:>10}{flag}",
            arch.to_string(),
            with_commas(computed),
            with_commas(published)
        );
    }
    if mismatches > 0 {
        let _ = writeln!(
            s,
            "* the published count differs from sum(out*in + out) over the stated layers; \
             the computed value is authoritative"
        );
    }
    s
}

// ------------------------------------------------------------------ summary

fn fmt_score(v: f64) -> String {
    format!("{v:.1}")
}

/// Markdown summary: one table per environment, one row per model.
pub fn render_summary(runs: &[RunSummary]) -> Result<String> {
    let mut groups: BTreeMap<EnvId, BTreeMap<Architecture, Vec<&RunSummary>>> = BTreeMap::new();
    for r in runs {
        groups
            .entry(r.env)
            .or_default()
            .entry(r.architecture)
            .or_default()
            .push(r);
    }
    let mut s = String::from("# Results\n");
    for (env, models) in &groups {
        let _ = writeln!(s, "\n## {env}\n");
        let mut settings: Vec<(usize, f64)> = models
            .values()
            .flatten()
            .map(|r| (r.window, r.threshold))
            .collect();
        settings.dedup();
        for (w, t) in &settings {
            let _ = writeln!(s, "Final score: mean return over the last {w} episodes. Threshold: trailing-{w} mean >= {t}.");
        }
        s.push('\n');
        s.push_str("| Model | Final Score (mean ± std) | Episodes-to-Threshold (median) | Parameters | Seeds |\n");
        s.push_str("|---|---|---|---|---|\n");
        for (arch, rs) in models {
            let mut rs = rs.clone();
            rs.sort_by_key(|r| r.seed);
            let agg = aggregate(rs.iter().copied())?;
            let score = match agg.mean_final_score {
                None => "n/a (fewer episodes than the window)".to_owned(),
                Some(m) if agg.single_seed => format!("{} ± 0.0 (single seed)", fmt_score(m)),
                Some(m) => format!("{} ± {}", fmt_score(m), fmt_score(agg.std_final_score)),
            };
            let median = match agg.median_episodes_to_threshold {
                None => "not reached".to_owned(),
                Some(m) if m.fract() == 0.0 => format!("{m:.0}"),
                Some(m) => format!("{m:.1}"),
            };
            let params = rs[0].parameter_count;
            let seeds: Vec<String> = rs.iter().map(|r| r.seed.to_string()).collect();
            let _ = writeln!(
                s,
                "| {arch} | {score} | {median} | {} | {} |",
                with_commas(params),
                seeds.join(", ")
            );
        }
    }
    Ok(s)
}

pub fn write_summary(dir: impl AsRef<Path>, runs: &[RunSummary]) -> Result<PathBuf> {
    let path = dir.as_ref().join(SUMMARY_FILE);
    fs::write(&path, render_summary(runs)?)?;
    Ok(path)
}

/// Rebuilds run summaries from the `*.run.toml` / `*.csv` pairs in `dir`.
pub fn load_runs(dir: impl AsRef<Path>) -> Result<Vec<RunSummary>> {
    let dir = dir.as_ref();
    let mut manifests: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".run.toml"))
        .collect();
    manifests.sort();
    let mut runs = Vec::with_capacity(manifests.len());
    for path in manifests {
        let text = fs::read_to_string(&path)?;
        let manifest: RunManifest = toml::from_str(&text)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let name = path.to_string_lossy();
        let curve = PathBuf::from(format!("{}.csv", &name[..name.len() - ".run.toml".len()]));
        let returns: Vec<f64> = read_learning_curve(&curve)?
            .iter()
            .map(|r| r.raw_return)
            .collect();
        runs.push(RunSummary {
            env: manifest.env,
            architecture: Architecture::parse_label(&manifest.model)?,
            seed: manifest.seed,
            window: manifest.window,
            threshold: manifest.threshold,
            final_score: final_score(&returns, manifest.window),
            episodes_to_threshold: episodes_to_threshold(
                &returns,
                manifest.window,
                manifest.threshold,
            ),
            parameter_count: manifest.parameter_count,
        });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(score: Option<f64>, solved: Option<usize>) -> RunSummary {
        RunSummary {
            env: EnvId::CartPole,
            architecture: Architecture::Mlp,
            seed: 0,
            window: 100,
            threshold: 195.0,
            final_score: score,
            episodes_to_threshold: solved,
            parameter_count: 4_610,
        }
    }

    #[test]
    fn aggregate_identical_scores() {
        let rs = vec![summary(Some(10.0), None); 3];
        let a = aggregate(&rs).unwrap();
        assert_eq!(a.mean_final_score, Some(10.0));
        assert_eq!(a.std_final_score, 0.0);
        assert!(!a.single_seed);
    }

    #[test]
    fn aggregate_sample_std() {
        let rs = vec![summary(Some(100.0), None), summary(Some(200.0), None)];
        let a = aggregate(&rs).unwrap();
        assert_eq!(a.mean_final_score, Some(150.0));
        assert!((a.std_final_score - 70.71067811865476).abs() < 1e-10);
    }

    #[test]
    fn median_counts_unsolved_as_infinite() {
        let rs = vec![
            summary(None, Some(400)),
            summary(None, Some(550)),
            summary(None, None),
        ];
        assert_eq!(aggregate(&rs).unwrap().median_episodes_to_threshold, Some(550.0));
        let rs = vec![summary(None, Some(400)), summary(None, None), summary(None, None)];
        assert_eq!(aggregate(&rs).unwrap().median_episodes_to_threshold, None);
    }

    #[test]
    fn single_seed_flagged() {
        let a = aggregate(&[summary(Some(3.0), None)]).unwrap();
        assert!(a.single_seed);
        assert_eq!(a.std_final_score, 0.0);
        assert!(matches!(aggregate(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn window_metrics() {
        let returns = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(trailing_means(&returns, 2), vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(final_score(&returns, 2), Some(3.5));
        assert_eq!(final_score(&returns, 5), None);
        assert_eq!(final_score(&[-7.0], 1), Some(-7.0));
        assert_eq!(episodes_to_threshold(&returns, 2, 2.5), Some(3));
        assert_eq!(episodes_to_threshold(&returns, 2, 9.0), None);
    }

    #[test]
    fn parameter_counts_per_env() {
        assert_eq!(count_parameters(EnvId::CartPole, Architecture::Mlp), 4_610);
        assert_eq!(count_parameters(EnvId::CartPole, Architecture::Chebyshev { degree: 8 }), 6_658);
        assert_eq!(count_parameters(EnvId::MountainCar, Architecture::Mlp), 4_547);
        assert_eq!(count_parameters(EnvId::Acrobot, Architecture::Mlp), 17_795);
        assert_eq!(with_commas(17_795), "17,795");
        assert_eq!(with_commas(999), "999");
    }

    #[test]
    fn summary_layout() {
        let text = render_summary(&[summary(Some(10.0), Some(120))]).unwrap();
        assert!(text.contains("| Model | Final Score (mean ± std) | Episodes-to-Threshold (median) | Parameters |"));
        assert!(text.contains("| Standard DQN | 10.0 ± 0.0 (single seed) | 120 | 4,610 | 0 |"));
    }
}
