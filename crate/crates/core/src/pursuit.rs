//! Pursuer steering.
//!
//! `TurnThenChase` stands in for a time-optimal differential-drive pursuit:
//! such strategies are built from rotation in place and straight-line
//! translation, so the proxy uses exactly those two motions. `PurePursuit`
//! is a proportional-heading alternative.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DdrCommand, DdrParams, DdrState, OrState};
use crate::geometry::angle_diff;

/// Heading error beyond which the turn-then-chase pursuer stops to rotate [rad].
pub const DEFAULT_ANGLE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PursuitMode {
    TurnThenChase,
    PurePursuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PursuitConfig {
    pub mode: PursuitMode,
    /// Turn-rate gain per radian of bearing error; pure pursuit only.
    pub angular_gain: f64,
    /// Rotate/drive switching threshold; turn-then-chase only [rad].
    pub angle_tolerance: f64,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        Self {
            mode: PursuitMode::TurnThenChase,
            angular_gain: 2.0,
            angle_tolerance: DEFAULT_ANGLE_TOLERANCE,
        }
    }
}

/// Signed angle the pursuer must turn through to face the evader.
pub fn bearing_error(pursuer: &DdrState, evader: &OrState) -> f64 {
    let to_evader = evader.position() - pursuer.position();
    angle_diff(to_evader.angle(), pursuer.heading)
}

pub fn pursue(pursuer: &DdrState, params: &DdrParams, evader: &OrState, cfg: &PursuitConfig) -> DdrCommand {
    let error = bearing_error(pursuer, evader);
    let bound = params.max_wheel_speed;
    let cruise = params.speed.min(bound);
    match cfg.mode {
        PursuitMode::TurnThenChase => {
            if error.abs() > cfg.angle_tolerance {
                // positive error turns counterclockwise: right wheel forward
                let w = bound.copysign(error);
                DdrCommand { left: -w, right: w }
            } else {
                DdrCommand {
                    left: cruise,
                    right: cruise,
                }
            }
        }
        PursuitMode::PurePursuit => {
            let omega = cfg.angular_gain * error;
            let spread = omega * params.half_axle;
            DdrCommand {
                left: (cruise - spread).clamp(-bound, bound),
                right: (cruise + spread).clamp(-bound, bound),
            }
        }
    }
}
