//! Training, evaluation, simulation, and reporting over run directories.
//!
//! A training run directory holds:
//!
//! | path | contents |
//! |---|---|
//! | `config.toml` | the resolved run configuration |
//! | `rewards.csv` | one row per training episode: noisy return and the deterministic return on the same seed |
//! | `summary.json` | outcome counts, safety ratio, evaluation block |
//! | `evaluation.csv` | one row per post-training evaluation episode |
//! | `episodes/` | per-step CSV for every training (`train_NNNN.csv`) and evaluation (`eval_NNNN.csv`) episode |
//! | `checkpoints/` | periodic `episode_NNNN.ckpt` and `final.ckpt` |
//!
//! Nothing written depends on wall-clock time, so identical configs produce
//! byte-identical directories.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::dynamics::EvaderAction;
use crate::env::{EnvError, Episode, EpisodeRecord, Outcome};
use crate::geometry::angle_diff;
use crate::learner::{
    observe, CheckpointError, PolicyAction, ReplayBuffer, Td3Agent, Transition, WarmupPolicy, REACH_REWARD,
};
use crate::policy::{rollout, Builtin, Learned, Policy, StraightToTarget};

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REWARDS_FILE: &str = "rewards.csv";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const EVALUATION_SUMMARY_FILE: &str = "evaluation.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EPISODES_DIR: &str = "episodes";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Independent seed streams derived from the run seed.
const TRAIN_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;
const AGENT_STREAM: u64 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("run directory {} is incomplete, missing:\n  - {}", .dir.display(), .missing.join("\n  - "))]
    MissingArtifacts { dir: PathBuf, missing: Vec<String> },
}

impl RunError {
    /// 1 for bad input (configuration, arguments, incompatible artifacts),
    /// 2 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Usage(_) | RunError::MissingArtifacts { .. } => 1,
            RunError::Checkpoint {
                source: CheckpointError::ConfigMismatch { .. },
                ..
            } => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv {
        path: path.to_owned(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| RunError::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_record(path: &Path, record: &EpisodeRecord) -> Result<(), RunError> {
    let mut w = create(path)?;
    record.write_csv(&mut w)?;
    w.flush().map_err(io_err(path))
}

/// The `index`-th seed of `stream` under run seed `seed`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * u128::from(index));
    rng.next_u64()
}

pub fn training_seed(run_seed: u64, episode: usize) -> u64 {
    derive_seed(run_seed, TRAIN_STREAM, episode as u64)
}

pub fn evaluation_seed(run_seed: u64, episode: usize) -> u64 {
    derive_seed(run_seed, EVAL_STREAM, episode as u64)
}

pub fn agent_seed(run_seed: u64) -> u64 {
    derive_seed(run_seed, AGENT_STREAM, 0)
}

/// `"100%"`, `"75%"`, `"66.7%"`; `"n/a"` for zero episodes.
pub fn format_ratio(part: usize, total: usize) -> String {
    if total == 0 {
        return "n/a".into();
    }
    if (100 * part) % total == 0 {
        format!("{}%", 100 * part / total)
    } else {
        format!("{:.1}%", 100.0 * part as f64 / total as f64)
    }
}

fn mean_deviation(record: &EpisodeRecord) -> f64 {
    let corrected: Vec<f64> = record
        .rows
        .iter()
        .filter(|r| r.corrected)
        .map(|r| r.deviation)
        .collect();
    if corrected.is_empty() {
        0.0
    } else {
        corrected.iter().sum::<f64>() / corrected.len() as f64
    }
}

fn reached_with_bonus(record: &EpisodeRecord) -> bool {
    record.rows.last().is_some_and(|r| r.reward == REACH_REWARD)
}

/// One line of `rewards.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRow {
    pub episode: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub safe: bool,
    pub infeasible_steps: usize,
    pub corrected_steps: usize,
    pub mean_deviation_rad: f64,
    pub eval_outcome: Outcome,
    pub eval_return: f64,
}

/// One line of `evaluation.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub episode: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub safe: bool,
    pub terminal_reward: bool,
    pub infeasible_steps: usize,
    pub min_h_pv: f64,
    pub min_h_oc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub episodes: usize,
    pub reached_target: usize,
    pub success_rate: f64,
    pub terminal_reward_episodes: usize,
    pub safe_episodes: usize,
    pub infeasible_steps: usize,
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub code_version: String,
    pub seed: u64,
    pub td3_config_hash: String,
    pub episodes: usize,
    pub safe_episodes: usize,
    pub safety_ratio: String,
    pub infeasible_steps: usize,
    pub corrected_steps: usize,
    pub reached_rate: f64,
    pub outcomes: BTreeMap<String, usize>,
    pub evaluation: Option<EvaluationSummary>,
}

fn outcome_counts<'a>(outcomes: impl Iterator<Item = &'a Outcome>) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = [
        Outcome::ReachedTarget,
        Outcome::Captured,
        Outcome::Collided,
        Outcome::Timeout,
    ]
    .iter()
    .map(|o| (o.as_str().to_string(), 0))
    .collect();
    for o in outcomes {
        *counts.entry(o.as_str().to_string()).or_default() += 1;
    }
    counts
}

/// Everything a finished training run hands back to its caller.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub agent: Td3Agent,
    pub rewards: Vec<RewardRow>,
    pub summary: Summary,
}

/// Runs the full training loop and writes the run directory `out`.
///
/// `progress` sees each reward row as soon as its episode finishes.
pub fn train(cfg: &RunConfig, out: &Path, progress: &mut dyn FnMut(&RewardRow)) -> Result<TrainOutput, RunError> {
    cfg.validate()?;
    let episodes_dir = out.join(EPISODES_DIR);
    let checkpoint_dir = out.join(CHECKPOINT_DIR);
    for dir in [out, &episodes_dir, &checkpoint_dir] {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let config_path = out.join(CONFIG_FILE);
    fs::write(&config_path, cfg.to_toml()).map_err(io_err(&config_path))?;

    let params = cfg.world_params();
    let scale = cfg.td3.observation_scale_m;
    let mut agent = Td3Agent::new(cfg.td3.clone(), agent_seed(cfg.seed));
    let mut buffer = ReplayBuffer::new(cfg.td3.buffer_capacity);
    let mut total_steps = 0usize;

    let rewards_path = out.join(REWARDS_FILE);
    let mut rewards_csv = csv::Writer::from_writer(create(&rewards_path)?);
    let mut rewards = Vec::with_capacity(cfg.episode.episodes);
    let mut records_outcomes = Vec::with_capacity(cfg.episode.episodes);
    let mut infeasible = 0;
    let mut corrected = 0;

    for i in 0..cfg.episode.episodes {
        let seed = training_seed(cfg.seed, i);
        let mut episode = Episode::new(cfg.episode_config(seed), params)?;
        let mut obs = observe(episode.world(), scale);
        while episode.outcome().is_none() {
            let action = if total_steps < cfg.td3.warmup_steps {
                match cfg.td3.warmup_policy {
                    WarmupPolicy::Uniform => agent.random_action(),
                    WarmupPolicy::StraightToTarget => {
                        let heading = StraightToTarget.nominal(episode.world()).heading();
                        agent.perturb(PolicyAction::from_heading(heading))
                    }
                }
            } else {
                agent.act(&obs, false)
            };
            let mut executed = None;
            let mut reward = 0.0;
            let mut terminal = false;
            for _ in 0..cfg.td3.action_repeat {
                let step = episode.step(EvaderAction::new(action.heading()))?;
                executed.get_or_insert(PolicyAction::from_heading(step.filter.safe_action.heading()));
                reward += step.reward;
                total_steps += 1;
                if step.done.is_some() {
                    terminal = step.done != Some(Outcome::Timeout);
                    break;
                }
            }
            let next = observe(episode.world(), scale);
            buffer.push(Transition {
                obs: obs.0,
                action: executed.expect("at least one step").raw(),
                reward: cfg.td3.reward_scale * reward,
                next_obs: next.0,
                done: terminal,
            });
            for _ in 0..cfg.td3.updates_per_step {
                agent.update(&buffer);
            }
            obs = next;
        }
        let record = episode.finish();
        write_record(&episodes_dir.join(format!("train_{i:04}.csv")), &record)?;

        let eval = rollout(cfg.episode_config(seed), params, &mut Learned::new(&agent))?;
        let row = RewardRow {
            episode: i,
            seed,
            outcome: record.outcome,
            steps: record.rows.len(),
            episode_return: record.total_reward(),
            safe: record.is_safe(),
            infeasible_steps: record.infeasible_steps(),
            corrected_steps: record.corrected_steps(),
            mean_deviation_rad: mean_deviation(&record),
            eval_outcome: eval.outcome,
            eval_return: eval.total_reward(),
        };
        rewards_csv.serialize(&row).map_err(csv_err(&rewards_path))?;
        infeasible += row.infeasible_steps;
        corrected += row.corrected_steps;
        records_outcomes.push(record.outcome);
        progress(&row);
        rewards.push(row);

        let every = cfg.evaluation.checkpoint_every_episodes;
        if every > 0 && (i + 1) % every == 0 {
            save_checkpoint(&agent, &checkpoint_dir.join(format!("episode_{:04}.ckpt", i + 1)))?;
        }
    }
    rewards_csv.flush().map_err(io_err(&rewards_path))?;
    save_checkpoint(&agent, &checkpoint_dir.join(FINAL_CHECKPOINT))?;

    let evaluation = if cfg.evaluation.episodes > 0 {
        Some(evaluate_agent(cfg, &agent, out)?)
    } else {
        None
    };

    let n = rewards.len();
    let safe = rewards.iter().filter(|r| r.safe).count();
    let reached = records_outcomes
        .iter()
        .filter(|o| **o == Outcome::ReachedTarget)
        .count();
    let summary = Summary {
        run_id: cfg.run_id.clone(),
        code_version: CODE_VERSION.into(),
        seed: cfg.seed,
        td3_config_hash: cfg.td3.hash_hex(),
        episodes: n,
        safe_episodes: safe,
        safety_ratio: format_ratio(safe, n),
        infeasible_steps: infeasible,
        corrected_steps: corrected,
        reached_rate: reached as f64 / n as f64,
        outcomes: outcome_counts(records_outcomes.iter()),
        evaluation,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(TrainOutput {
        agent,
        rewards,
        summary,
    })
}

fn save_checkpoint(agent: &Td3Agent, path: &Path) -> Result<(), RunError> {
    let mut w = create(path)?;
    agent.save(&mut w).map_err(|source| RunError::Checkpoint {
        path: path.to_owned(),
        source,
    })?;
    w.flush().map_err(io_err(path))
}

/// Loads a checkpoint, refusing one written under a different learner config.
pub fn load_checkpoint(cfg: &RunConfig, path: &Path) -> Result<Td3Agent, RunError> {
    let file = File::open(path).map_err(io_err(path))?;
    Td3Agent::load(BufReader::new(file), cfg.td3.clone(), agent_seed(cfg.seed)).map_err(|source| RunError::Checkpoint {
        path: path.to_owned(),
        source,
    })
}

/// Deterministic rollouts of `agent` on the evaluation seed stream; writes
/// `evaluation.csv` and per-episode CSVs under `out`.
pub fn evaluate_agent(cfg: &RunConfig, agent: &Td3Agent, out: &Path) -> Result<EvaluationSummary, RunError> {
    let episodes_dir = out.join(EPISODES_DIR);
    fs::create_dir_all(&episodes_dir).map_err(io_err(&episodes_dir))?;
    let params = cfg.world_params();
    let path = out.join(EVALUATION_FILE);
    let mut csv_out = csv::Writer::from_writer(create(&path)?);
    let mut rows = Vec::with_capacity(cfg.evaluation.episodes);
    for k in 0..cfg.evaluation.episodes {
        let seed = evaluation_seed(cfg.seed, k);
        let record = rollout(cfg.episode_config(seed), params, &mut Learned::new(agent))?;
        write_record(&episodes_dir.join(format!("eval_{k:04}.csv")), &record)?;
        let row = EvaluationRow {
            episode: k,
            seed,
            outcome: record.outcome,
            steps: record.rows.len(),
            episode_return: record.total_reward(),
            safe: record.is_safe(),
            terminal_reward: reached_with_bonus(&record),
            infeasible_steps: record.infeasible_steps(),
            min_h_pv: record.min_h_pursuer(),
            min_h_oc: record.min_h_obstacles(),
        };
        csv_out.serialize(&row).map_err(csv_err(&path))?;
        rows.push(row);
    }
    csv_out.flush().map_err(io_err(&path))?;
    Ok(summarize_evaluation(&rows))
}

pub fn summarize_evaluation(rows: &[EvaluationRow]) -> EvaluationSummary {
    let n = rows.len();
    let reached = rows.iter().filter(|r| r.outcome == Outcome::ReachedTarget).count();
    EvaluationSummary {
        episodes: n,
        reached_target: reached,
        success_rate: if n == 0 { 0.0 } else { reached as f64 / n as f64 },
        terminal_reward_episodes: rows.iter().filter(|r| r.terminal_reward).count(),
        safe_episodes: rows.iter().filter(|r| r.safe).count(),
        infeasible_steps: rows.iter().map(|r| r.infeasible_steps).sum(),
        mean_return: if n == 0 {
            0.0
        } else {
            rows.iter().map(|r| r.episode_return).sum::<f64>() / n as f64
        },
    }
}

/// Evaluates a saved checkpoint into `out`, adding `evaluation.json`.
pub fn evaluate_checkpoint(cfg: &RunConfig, checkpoint: &Path, out: &Path) -> Result<EvaluationSummary, RunError> {
    cfg.validate()?;
    let agent = load_checkpoint(cfg, checkpoint)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let summary = evaluate_agent(cfg, &agent, out)?;
    write_json(&out.join(EVALUATION_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Where a simulated rollout takes its nominal headings from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySource {
    Builtin(Builtin),
    Checkpoint(PathBuf),
}

/// One rollout on the config's own seed; writes `trajectory.csv` into `out`.
pub fn simulate(cfg: &RunConfig, source: &PolicySource, out: &Path) -> Result<EpisodeRecord, RunError> {
    cfg.validate()?;
    let agent;
    let mut policy: Box<dyn Policy + '_>;
    match source {
        PolicySource::Builtin(b) => policy = b.instantiate(cfg.seed),
        PolicySource::Checkpoint(path) => {
            agent = load_checkpoint(cfg, path)?;
            policy = Box::new(Learned::new(&agent));
        }
    }
    let record = rollout(cfg.episode_config(cfg.seed), cfg.world_params(), policy.as_mut())?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_record(&out.join(TRAJECTORY_FILE), &record)?;
    Ok(record)
}

/// One point of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub eval_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub episodes: usize,
    pub safe_episodes: usize,
    pub safety_ratio: String,
    pub reached_rate: f64,
    pub infeasible_steps: usize,
    pub corrected_steps: usize,
    pub mean_deviation_rad: f64,
    pub median_deviation_rad: f64,
    pub evaluation: Option<EvaluationSummary>,
    pub reward_curve: Vec<CurvePoint>,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "run: {}", self.run_id)?;
        writeln!(f, "episodes: {}", self.episodes)?;
        writeln!(f, "safe episodes: {}", self.safe_episodes)?;
        writeln!(f, "safety ratio: {}", self.safety_ratio)?;
        writeln!(f, "reached-target rate: {:.3}", self.reached_rate)?;
        writeln!(f, "infeasible filter steps: {}", self.infeasible_steps)?;
        writeln!(f, "corrected steps: {}", self.corrected_steps)?;
        writeln!(
            f,
            "shield deviation [rad]: mean {:.4}, median {:.4}",
            self.mean_deviation_rad, self.median_deviation_rad
        )?;
        if let Some(e) = &self.evaluation {
            writeln!(
                f,
                "evaluation: {} of {} reached ({:.3}), {} with terminal reward, {} safe",
                e.reached_target, e.episodes, e.success_rate, e.terminal_reward_episodes, e.safe_episodes
            )?;
        }
        writeln!(f, "episode,return,eval_return")?;
        for p in &self.reward_curve {
            writeln!(f, "{},{},{}", p.episode, p.episode_return, p.eval_return)?;
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Shield deviations of every corrected step in one episode CSV.
fn corrected_deviations(path: &Path) -> Result<Vec<f64>, RunError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| RunError::Csv {
            path: path.to_owned(),
            source: csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("missing column {name}"),
            )),
        })
    };
    let (nominal, safe, corrected) = (column("nominal_theta")?, column("safe_theta")?, column("corrected")?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let parse = |i: usize| -> Result<f64, RunError> {
            record[i].parse::<f64>().map_err(|e| RunError::Csv {
                path: path.to_owned(),
                source: csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, e)),
            })
        };
        if matches!(&record[corrected], "true" | "1") {
            out.push(angle_diff(parse(safe)?, parse(nominal)?).abs());
        }
    }
    Ok(out)
}

/// Summarizes a training run directory; reads files only.
pub fn report(dir: &Path) -> Result<Report, RunError> {
    let required = [CONFIG_FILE, SUMMARY_FILE, REWARDS_FILE, EPISODES_DIR];
    let missing: Vec<String> = required
        .iter()
        .filter(|name| !dir.join(name).exists())
        .map(|name| name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(RunError::MissingArtifacts {
            dir: dir.to_owned(),
            missing,
        });
    }
    let summary_path = dir.join(SUMMARY_FILE);
    let summary_text = fs::read_to_string(&summary_path).map_err(io_err(&summary_path))?;
    let summary: Summary = serde_json::from_str(&summary_text).map_err(|source| RunError::Json {
        path: summary_path.clone(),
        source,
    })?;

    let rewards_path = dir.join(REWARDS_FILE);
    let mut reader = csv::Reader::from_path(&rewards_path).map_err(csv_err(&rewards_path))?;
    let rows = reader
        .deserialize::<RewardRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_err(&rewards_path))?;

    let mut deviations = Vec::new();
    for row in &rows {
        let path = dir.join(EPISODES_DIR).join(format!("train_{:04}.csv", row.episode));
        if !path.exists() {
            return Err(RunError::MissingArtifacts {
                dir: dir.to_owned(),
                missing: vec![format!("{EPISODES_DIR}/train_{:04}.csv", row.episode)],
            });
        }
        deviations.extend(corrected_deviations(&path)?);
    }
    let mean_deviation = if deviations.is_empty() {
        0.0
    } else {
        deviations.iter().sum::<f64>() / deviations.len() as f64
    };

    let n = rows.len();
    let safe = rows.iter().filter(|r| r.safe).count();
    let reached = rows.iter().filter(|r| r.outcome == Outcome::ReachedTarget).count();
    Ok(Report {
        run_id: summary.run_id,
        episodes: n,
        safe_episodes: safe,
        safety_ratio: format_ratio(safe, n),
        reached_rate: if n == 0 { 0.0 } else { reached as f64 / n as f64 },
        infeasible_steps: rows.iter().map(|r| r.infeasible_steps).sum(),
        corrected_steps: rows.iter().map(|r| r.corrected_steps).sum(),
        mean_deviation_rad: mean_deviation,
        median_deviation_rad: median(&mut deviations),
        evaluation: summary.evaluation,
        reward_curve: rows
            .iter()
            .map(|r| CurvePoint {
                episode: r.episode,
                episode_return: r.episode_return,
                eval_return: r.eval_return,
            })
            .collect(),
    })
}
