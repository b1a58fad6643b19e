//! TD3 learner for the evader's nominal heading policy.
//!
//! Networks, optimizer, replay, and checkpointing are implemented here from
//! first principles; `ndarray` supplies only the dense matrix products.

pub mod adam;
pub mod checkpoint;
pub mod mlp;
pub mod replay;
pub mod td3;

use std::f64::consts::PI;

use crate::env::WorldState;
use crate::geometry::Vec2;

pub use checkpoint::CheckpointError;
pub use replay::{Batch, ReplayBuffer, Transition};
pub use td3::{LossReport, Td3Agent, Td3Config, WarmupPolicy};

pub const OBS_DIM: usize = 10;

/// Bonus for reaching the target.
pub const REACH_REWARD: f64 = 1000.0;
/// Per-metre distance penalty while the target is not reached.
pub const DISTANCE_PENALTY: f64 = 0.01;

/// Egocentric observation: target offset, pursuer offset, pursuer heading as
/// (cos, sin), nearest-obstacle offset, and that obstacle's velocity [m/s].
/// Offsets are divided by a fixed length scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

pub fn observe(world: &WorldState, scale: f64) -> Observation {
    let me = world.evader.position();
    let to_target = (world.target - me) * (1.0 / scale);
    let to_pursuer = (world.pursuer.position() - me) * (1.0 / scale);
    let nearest = world.obstacles.iter().min_by(|a, b| {
        let da = (a.position() - me).norm();
        let db = (b.position() - me).norm();
        da.total_cmp(&db)
    });
    let (to_obstacle, obstacle_velocity) = match nearest {
        Some(o) => ((o.position() - me) * (1.0 / scale), o.velocity()),
        None => (Vec2::ZERO, Vec2::ZERO),
    };
    let (s, c) = world.pursuer.heading.sin_cos();
    Observation([
        to_target.x,
        to_target.y,
        to_pursuer.x,
        to_pursuer.y,
        c,
        s,
        to_obstacle.x,
        to_obstacle.y,
        obstacle_velocity.x,
        obstacle_velocity.y,
    ])
}

/// Actor output in `[-1, 1]`; heading is `pi * raw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyAction {
    raw: f64,
}

impl PolicyAction {
    pub fn new(raw: f64) -> Self {
        Self {
            raw: raw.clamp(-1.0, 1.0),
        }
    }

    pub fn from_heading(heading: f64) -> Self {
        Self::new(crate::geometry::wrap_angle(heading) / PI)
    }

    pub fn raw(&self) -> f64 {
        self.raw
    }

    pub fn heading(&self) -> f64 {
        PI * self.raw
    }
}

/// Terminal bonus inside `reach_distance` of the target, otherwise a small
/// penalty proportional to the remaining distance.
pub fn reward(world: &WorldState, target: Vec2, reach_distance: f64) -> f64 {
    let d = (world.evader.position() - target).norm();
    if d <= reach_distance {
        REACH_REWARD
    } else {
        -DISTANCE_PENALTY * d
    }
}
