//! Episode orchestration.
//!
//! One tick runs a fixed pipeline on a frozen snapshot of the world:
//! assemble barrier constraints, filter the nominal heading, compute the
//! pursuer command, advance every body by `dt`, score the new state, and
//! check termination. Bodies never observe each other's post-step state
//! within a tick.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    step_ddr, step_obstacle, step_or, DdrParams, DdrState, DynamicsError, EvaderAction, ObstacleState, OrParams,
    OrState,
};
use crate::geometry::Vec2;
use crate::learner::reward;
use crate::pursuit::{pursue, PursuitConfig};
use crate::safefilter::{filter, FilterError, FilterResult};
use crate::shield::{assemble, barrier_values, BarrierKind, ShieldConfig, ShieldError};

/// Attempts at drawing a target clear of every body before giving up.
pub const TARGET_RETRIES: usize = 100;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Shield(#[from] ShieldError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("no target clear of the other bodies after {0} draws")]
    TargetSampling(usize),
    #[error("episode already finished ({0})")]
    Finished(Outcome),
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub evader: OrState,
    pub pursuer: DdrState,
    pub obstacles: Vec<ObstacleState>,
    pub target: Vec2,
    /// Elapsed time [s]; always `step_index * dt`.
    pub t: f64,
    pub step_index: usize,
}

impl WorldState {
    pub fn target_distance(&self) -> f64 {
        (self.evader.position() - self.target).norm()
    }

    pub fn pursuer_distance(&self) -> f64 {
        (self.evader.position() - self.pursuer.position()).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TargetSpec {
    Fixed {
        x_m: f64,
        y_m: f64,
    },
    Region {
        x_min_m: f64,
        x_max_m: f64,
        y_min_m: f64,
        y_max_m: f64,
    },
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Region {
            x_min_m: 0.0,
            x_max_m: 3.0,
            y_min_m: -1.5,
            y_max_m: 1.5,
        }
    }
}

/// Bodies' physical parameters and the safety layer; shared by every episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub evader: OrParams,
    pub pursuer: DdrParams,
    pub pursuit: PursuitConfig,
    pub shield: ShieldConfig,
    /// Distance at which the target counts as reached [m].
    pub reach_distance: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            evader: OrParams { speed: 0.1574 },
            pursuer: DdrParams::with_default_wheel_bound(0.2, 1.0),
            pursuit: PursuitConfig::default(),
            shield: ShieldConfig::default(),
            reach_distance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub evader_start: OrState,
    pub pursuer_start: DdrState,
    pub obstacles: Vec<ObstacleState>,
    pub target: TargetSpec,
    pub seed: u64,
    pub shield_enabled: bool,
}

impl Default for EpisodeConfig {
    /// The reference scene: evader at the origin, pursuer at (1.0, -0.5)
    /// facing +x, one obstacle at (1.5, 0) drifting along +x.
    fn default() -> Self {
        Self {
            dt: crate::dynamics::DEFAULT_DT,
            max_steps: 1500,
            evader_start: OrState::new(0.0, 0.0),
            pursuer_start: DdrState::new(1.0, -0.5, 0.0),
            obstacles: vec![ObstacleState::new(1.5, 0.0, 0.02, 0.0)],
            target: TargetSpec::default(),
            seed: 0,
            shield_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    ReachedTarget,
    Captured,
    Collided,
    Timeout,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::ReachedTarget => "reached-target",
            Outcome::Captured => "captured",
            Outcome::Collided => "collided",
            Outcome::Timeout => "timeout",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reached-target" => Ok(Outcome::ReachedTarget),
            "captured" => Ok(Outcome::Captured),
            "collided" => Ok(Outcome::Collided),
            "timeout" => Ok(Outcome::Timeout),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// State after one tick, with the actions and barrier values that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub time: f64,
    pub evader: OrState,
    pub pursuer: DdrState,
    pub obstacles: Vec<ObstacleState>,
    pub nominal_theta: f64,
    pub safe_theta: f64,
    pub corrected: bool,
    pub feasible: bool,
    pub deviation: f64,
    pub h_pursuer: f64,
    pub h_obstacles: Vec<f64>,
    pub margin: f64,
    pub reward: f64,
}

impl StepRow {
    pub fn min_h(&self) -> f64 {
        self.h_obstacles.iter().copied().fold(self.h_pursuer, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub target: Vec2,
    pub rows: Vec<StepRow>,
    pub outcome: Outcome,
}

impl EpisodeRecord {
    /// No recorded state left any safe set.
    pub fn is_safe(&self) -> bool {
        self.rows.iter().all(|r| r.min_h() >= 0.0)
    }

    pub fn total_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.reward).sum()
    }

    pub fn infeasible_steps(&self) -> usize {
        self.rows.iter().filter(|r| !r.feasible).count()
    }

    pub fn corrected_steps(&self) -> usize {
        self.rows.iter().filter(|r| r.corrected).count()
    }

    pub fn min_h_pursuer(&self) -> f64 {
        self.rows.iter().map(|r| r.h_pursuer).fold(f64::INFINITY, f64::min)
    }

    pub fn min_h_obstacles(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.h_obstacles.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn csv_header(obstacles: usize) -> Vec<String> {
        let mut cols: Vec<String> = ["time", "x_o", "y_o", "x_d", "y_d", "theta_d"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for i in 0..obstacles {
            cols.push(format!("x_c_{i}"));
            cols.push(format!("y_c_{i}"));
        }
        cols.extend(
            ["nominal_theta", "safe_theta", "corrected", "h_pv"]
                .iter()
                .map(|s| s.to_string()),
        );
        for i in 0..obstacles {
            cols.push(format!("h_oc_{i}"));
        }
        cols.push("margin".into());
        cols.push("reward".into());
        cols
    }

    /// One row per tick; column order given by [`EpisodeRecord::csv_header`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EnvError> {
        let n = self.rows.first().map_or(0, |r| r.obstacles.len());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(n))?;
        for r in &self.rows {
            let mut rec: Vec<String> = vec![
                r.time.to_string(),
                r.evader.x.to_string(),
                r.evader.y.to_string(),
                r.pursuer.x.to_string(),
                r.pursuer.y.to_string(),
                r.pursuer.heading.to_string(),
            ];
            for o in &r.obstacles {
                rec.push(o.x.to_string());
                rec.push(o.y.to_string());
            }
            rec.push(r.nominal_theta.to_string());
            rec.push(r.safe_theta.to_string());
            rec.push(u8::from(r.corrected).to_string());
            rec.push(r.h_pursuer.to_string());
            rec.extend(r.h_obstacles.iter().map(|h| h.to_string()));
            rec.push(r.margin.to_string());
            rec.push(r.reward.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn validate(cfg: &EpisodeConfig) -> Result<(), EnvError> {
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(EnvError::Config(format!("dt must be positive, got {}", cfg.dt)));
    }
    if cfg.max_steps == 0 {
        return Err(EnvError::Config("max_steps must be at least 1".into()));
    }
    Ok(())
}

fn target_is_clear(target: Vec2, cfg: &EpisodeConfig, params: &WorldParams) -> bool {
    let clear_of_pursuer = (target - cfg.pursuer_start.position()).norm() > params.shield.capture_distance;
    let clear_of_obstacles = cfg
        .obstacles
        .iter()
        .all(|o| (target - o.position()).norm() > params.shield.collision_distance);
    clear_of_pursuer && clear_of_obstacles
}

/// Initial world for `cfg`; region targets are drawn from the episode seed.
pub fn reset(cfg: &EpisodeConfig, params: &WorldParams) -> Result<WorldState, EnvError> {
    validate(cfg)?;
    let target = match cfg.target {
        TargetSpec::Fixed { x_m, y_m } => Vec2::new(x_m, y_m),
        TargetSpec::Region {
            x_min_m,
            x_max_m,
            y_min_m,
            y_max_m,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut drawn = None;
            for _ in 0..TARGET_RETRIES {
                let t = Vec2::new(rng.random_range(x_min_m..=x_max_m), rng.random_range(y_min_m..=y_max_m));
                if target_is_clear(t, cfg, params) {
                    drawn = Some(t);
                    break;
                }
            }
            drawn.ok_or(EnvError::TargetSampling(TARGET_RETRIES))?
        }
    };
    Ok(WorldState {
        evader: cfg.evader_start,
        pursuer: cfg.pursuer_start,
        obstacles: cfg.obstacles.clone(),
        target,
        t: 0.0,
        step_index: 0,
    })
}

/// Result of one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub filter: FilterResult,
    pub done: Option<Outcome>,
}

/// A running episode: owns the world and accumulates the record.
#[derive(Debug, Clone)]
pub struct Episode {
    cfg: EpisodeConfig,
    params: WorldParams,
    world: WorldState,
    rows: Vec<StepRow>,
    outcome: Option<Outcome>,
}

impl Episode {
    pub fn new(cfg: EpisodeConfig, params: WorldParams) -> Result<Self, EnvError> {
        let world = reset(&cfg, &params)?;
        Ok(Self {
            cfg,
            params,
            world,
            rows: Vec::new(),
            outcome: None,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.cfg
    }

    pub fn params(&self) -> &WorldParams {
        &self.params
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn rows(&self) -> &[StepRow] {
        &self.rows
    }

    /// Advances the world by one tick under the nominal heading.
    pub fn step(&mut self, nominal: EvaderAction) -> Result<StepOutcome, EnvError> {
        if let Some(done) = self.outcome {
            return Err(EnvError::Finished(done));
        }
        let (next, row, filtered, done) = advance(&self.world, nominal, &self.cfg, &self.params)?;
        let reward = row.reward;
        self.world = next;
        self.outcome = done;
        self.rows.push(row);
        Ok(StepOutcome {
            reward,
            filter: filtered,
            done,
        })
    }

    /// Closes the episode; an unfinished episode is recorded as a timeout.
    pub fn finish(self) -> EpisodeRecord {
        EpisodeRecord {
            seed: self.cfg.seed,
            target: self.world.target,
            rows: self.rows,
            outcome: self.outcome.unwrap_or(Outcome::Timeout),
        }
    }
}

fn advance(
    world: &WorldState,
    nominal: EvaderAction,
    cfg: &EpisodeConfig,
    params: &WorldParams,
) -> Result<(WorldState, StepRow, FilterResult, Option<Outcome>), EnvError> {
    let constraints = assemble(world, &params.pursuer, &params.shield)?;
    let filtered = if cfg.shield_enabled {
        filter(nominal, &constraints, params.evader.speed)?
    } else {
        // unshielded: execute the nominal heading, still report its margin
        let margin = constraints
            .iter()
            .map(|k| k.margin(nominal.velocity(params.evader.speed)))
            .fold(f64::INFINITY, f64::min);
        FilterResult {
            safe_action: nominal,
            corrected: false,
            deviation: 0.0,
            feasible: true,
            margin,
        }
    };
    let command = pursue(&world.pursuer, &params.pursuer, &world.evader, &params.pursuit);

    let evader = step_or(world.evader, params.evader, filtered.safe_action, cfg.dt)?;
    let pursuer = step_ddr(world.pursuer, params.pursuer, command, cfg.dt)?;
    let obstacles = world
        .obstacles
        .iter()
        .map(|o| step_obstacle(*o, cfg.dt))
        .collect::<Result<Vec<_>, _>>()?;
    let step_index = world.step_index + 1;
    let next = WorldState {
        evader,
        pursuer,
        obstacles,
        target: world.target,
        t: step_index as f64 * cfg.dt,
        step_index,
    };

    let r = reward(&next, next.target, params.reach_distance);
    let hs = barrier_values(&next, &params.shield)?;
    let mut h_pursuer = f64::INFINITY;
    let mut h_obstacles = vec![0.0; next.obstacles.len()];
    for b in &hs {
        match b.kind {
            BarrierKind::Pursuer => h_pursuer = b.h,
            BarrierKind::Obstacle(i) => h_obstacles[i] = b.h,
        }
    }

    let done = if h_pursuer < 0.0 {
        Some(Outcome::Captured)
    } else if h_obstacles.iter().any(|h| *h < 0.0) {
        Some(Outcome::Collided)
    } else if next.target_distance() <= params.reach_distance {
        Some(Outcome::ReachedTarget)
    } else if step_index >= cfg.max_steps {
        Some(Outcome::Timeout)
    } else {
        None
    };

    let row = StepRow {
        time: next.t,
        evader: next.evader,
        pursuer: next.pursuer,
        obstacles: next.obstacles.clone(),
        nominal_theta: nominal.heading(),
        safe_theta: filtered.safe_action.heading(),
        corrected: filtered.corrected,
        feasible: filtered.feasible,
        deviation: filtered.deviation,
        h_pursuer,
        h_obstacles,
        margin: filtered.margin,
        reward: r,
    };
    Ok((next, row, filtered, done))
}
