//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::policy::Builtin;
use crate::runner::{self, PolicySource, RunError};

#[derive(Debug, Parser)]
#[command(
    name = "pursuit-shield",
    version,
    about = "Shielded pursuit-evasion training and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the evader policy and write a run directory.
    Train(RunArgs),
    /// Roll out one seeded episode and write its trajectory CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Trained checkpoint to drive the evader.
        #[arg(long, conflicts_with = "policy")]
        checkpoint: Option<PathBuf>,
        /// Builtin policy: straight-to-target or random.
        #[arg(long)]
        policy: Option<String>,
    },
    /// Deterministic evaluation episodes of a trained checkpoint.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Summarize a training run directory.
    Report {
        dir: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, RunError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Executes a parsed command, printing results to stdout and progress to stderr.
pub fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let out = runner::train(&cfg, &cfg.out_dir, &mut |row| {
                eprintln!(
                    "episode {:>4}  {:<14} return {:>10.3}  eval {:<14} {:>10.3}  corrected {:>4}  infeasible {}",
                    row.episode,
                    row.outcome.as_str(),
                    row.episode_return,
                    row.eval_outcome.as_str(),
                    row.eval_return,
                    row.corrected_steps,
                    row.infeasible_steps
                );
            })?;
            print_summary_line(&out.summary, &cfg.out_dir);
        }
        Command::Simulate {
            run,
            checkpoint,
            policy,
        } => {
            let cfg = run.resolve()?;
            let source = match (checkpoint, policy) {
                (Some(path), None) => PolicySource::Checkpoint(path),
                (None, Some(name)) => PolicySource::Builtin(name.parse().map_err(RunError::Usage)?),
                (None, None) => PolicySource::Builtin(Builtin::StraightToTarget),
                (Some(_), Some(_)) => return Err(RunError::Usage("--checkpoint and --policy are exclusive".into())),
            };
            let record = runner::simulate(&cfg, &source, &cfg.out_dir)?;
            println!(
                "outcome {}  safe {}  steps {}  return {:.3}  corrected {}  infeasible {}  min h_pv {:.4}  min h_oc {:.4}",
                record.outcome,
                record.is_safe(),
                record.rows.len(),
                record.total_reward(),
                record.corrected_steps(),
                record.infeasible_steps(),
                record.min_h_pursuer(),
                record.min_h_obstacles()
            );
            println!("trajectory: {}", cfg.out_dir.join(runner::TRAJECTORY_FILE).display());
        }
        Command::Evaluate { run, checkpoint } => {
            let cfg = run.resolve()?;
            let e = runner::evaluate_checkpoint(&cfg, &checkpoint, &cfg.out_dir)?;
            println!(
                "evaluation: {} of {} reached ({:.3}), {} with terminal reward, {} safe, {} infeasible steps, mean return {:.3}",
                e.reached_target,
                e.episodes,
                e.success_rate,
                e.terminal_reward_episodes,
                e.safe_episodes,
                e.infeasible_steps,
                e.mean_return
            );
        }
        Command::Report { dir, json } => {
            let report = runner::report(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{report}");
            }
        }
    }
    Ok(())
}

fn print_summary_line(summary: &runner::Summary, out: &Path) {
    println!(
        "{} episodes, {} safe ({}), {} infeasible filter steps; artifacts in {}",
        summary.episodes,
        summary.safe_episodes,
        summary.safety_ratio,
        summary.infeasible_steps,
        out.display()
    );
    if let Some(e) = &summary.evaluation {
        println!(
            "evaluation: {} of {} reached, {} with terminal reward",
            e.reached_target, e.episodes, e.terminal_reward_episodes
        );
    }
}
