//! Kinematics of the three moving bodies in the arena.
//!
//! * the omnidirectional robot (OR, the evader) moves at a fixed speed along a
//!   freely chosen heading;
//! * the differential-drive robot (DDR, the pursuer) is driven by two wheel
//!   speeds, turning by their difference;
//! * obstacles translate at a constant velocity.
//!
//! Every step function is a pure explicit-Euler update.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Vec2};

/// Default integration step [s].
pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("time step must be finite and positive, got {0}")]
    InvalidStep(f64),
    #[error("non-finite {0} state")]
    NonFinite(&'static str),
    #[error("wheel command ({left}, {right}) exceeds bound {bound} rad/s")]
    WheelBound { left: f64, right: f64, bound: f64 },
}

/// Position of the omnidirectional robot [m].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OrState {
    pub x: f64,
    pub y: f64,
}

impl OrState {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrParams {
    /// Constant translational speed [m/s].
    pub speed: f64,
}

/// Pose of the differential-drive robot; heading is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DdrState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl DdrState {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdrParams {
    /// Cruise (and maximum) translational speed [m/s].
    pub speed: f64,
    /// Distance from the robot center to each wheel [m].
    pub half_axle: f64,
    /// Bound on each wheel's angular speed [rad/s].
    pub max_wheel_speed: f64,
}

impl DdrParams {
    /// Parameters with the wheel bound set to twice the cruise speed.
    pub fn with_default_wheel_bound(speed: f64, half_axle: f64) -> Self {
        Self {
            speed,
            half_axle,
            max_wheel_speed: 2.0 * speed,
        }
    }
}

/// Wheel angular velocities [rad/s]: `left` is u1, `right` is u2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdrCommand {
    pub left: f64,
    pub right: f64,
}

impl DdrCommand {
    pub fn translational_speed(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn turn_rate(&self, half_axle: f64) -> f64 {
        (self.right - self.left) / (2.0 * half_axle)
    }

    pub fn within(&self, bound: f64) -> bool {
        self.left.abs() <= bound && self.right.abs() <= bound
    }
}

/// Obstacle moving with a constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObstacleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl ObstacleState {
    pub const fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self { x, y, vx, vy }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }
}

/// Commanded evader heading [rad], kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaderAction {
    heading: f64,
}

impl EvaderAction {
    pub fn new(heading: f64) -> Self {
        Self {
            heading: wrap_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// Velocity vector produced at speed `speed`.
    pub fn velocity(&self, speed: f64) -> Vec2 {
        Vec2::from_angle(self.heading) * speed
    }
}

fn check_dt(dt: f64) -> Result<(), DynamicsError> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::InvalidStep(dt))
    }
}

pub fn step_or(state: OrState, params: OrParams, action: EvaderAction, dt: f64) -> Result<OrState, DynamicsError> {
    check_dt(dt)?;
    if !state.position().is_finite() || !action.heading.is_finite() {
        return Err(DynamicsError::NonFinite("evader"));
    }
    let (s, c) = action.heading.sin_cos();
    Ok(OrState {
        x: state.x + params.speed * c * dt,
        y: state.y + params.speed * s * dt,
    })
}

pub fn step_ddr(state: DdrState, params: DdrParams, command: DdrCommand, dt: f64) -> Result<DdrState, DynamicsError> {
    check_dt(dt)?;
    if !state.position().is_finite() || !state.heading.is_finite() {
        return Err(DynamicsError::NonFinite("pursuer"));
    }
    if !command.within(params.max_wheel_speed) {
        return Err(DynamicsError::WheelBound {
            left: command.left,
            right: command.right,
            bound: params.max_wheel_speed,
        });
    }
    let v = command.translational_speed();
    let omega = command.turn_rate(params.half_axle);
    let (s, c) = state.heading.sin_cos();
    Ok(DdrState {
        x: state.x + v * c * dt,
        y: state.y + v * s * dt,
        heading: wrap_angle(state.heading + omega * dt),
    })
}

pub fn step_obstacle(state: ObstacleState, dt: f64) -> Result<ObstacleState, DynamicsError> {
    check_dt(dt)?;
    if !state.position().is_finite() || !state.velocity().is_finite() {
        return Err(DynamicsError::NonFinite("obstacle"));
    }
    Ok(ObstacleState {
        x: state.x + state.vx * dt,
        y: state.y + state.vy * dt,
        ..state
    })
}
