//! Control barrier functions for the evader.
//!
//! Each barrier is a distance margin `h = |dp| - d_min` between the evader and
//! another body. With a linear class-K term `alpha(h) = gamma * h`, the
//! forward-invariance condition `dh/dt + gamma * h >= 0` is linear in the
//! evader velocity `u`:
//!
//! ```text
//! c . u + d >= 0,   c = dp / |dp|,   d = -c . v_other + gamma * h
//! ```
//!
//! where `v_other` is the other body's velocity (obstacle drift, or the
//! pursuer moving at its cruise speed along its heading). Several barriers are
//! combined by conjunction: the evader must satisfy every constraint at once,
//! which keeps `min_i h_i` nonnegative.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DdrParams, DdrState, ObstacleState, OrState};
use crate::env::WorldState;
use crate::geometry::Vec2;

/// Separations below this are treated as coincident [m].
pub const SINGULAR_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShieldError {
    #[error("evader coincides with {0}; barrier gradient undefined")]
    Singular(BarrierKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShieldConfig {
    /// Class-K slope for every obstacle barrier.
    pub gamma_obstacle: f64,
    /// Class-K slope for the pursuer barrier.
    pub gamma_pursuer: f64,
    /// Collision distance to obstacles [m].
    pub collision_distance: f64,
    /// Capture distance to the pursuer [m].
    pub capture_distance: f64,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        Self {
            gamma_obstacle: 1.0,
            gamma_pursuer: 1.2,
            collision_distance: 0.2,
            capture_distance: 0.2,
        }
    }
}

impl ShieldConfig {
    pub fn is_valid(&self) -> bool {
        [
            self.gamma_obstacle,
            self.gamma_pursuer,
            self.collision_distance,
            self.capture_distance,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierKind {
    Obstacle(usize),
    Pursuer,
}

impl std::fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BarrierKind::Obstacle(i) => write!(f, "obstacle {i}"),
            BarrierKind::Pursuer => write!(f, "pursuer"),
        }
    }
}

/// Barrier value; `h >= 0` exactly when the evader is in the safe set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierValue {
    pub h: f64,
    pub kind: BarrierKind,
}

/// Half-plane `c . u + d >= 0` on the evader velocity `u`, with `|c| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConstraint {
    pub c: Vec2,
    pub d: f64,
    pub kind: BarrierKind,
}

impl BarrierConstraint {
    /// Slack of the constraint at velocity `u`.
    pub fn margin(&self, u: Vec2) -> f64 {
        self.c.dot(u) + self.d
    }
}

fn offset(evader: Vec2, other: Vec2, kind: BarrierKind) -> Result<(Vec2, f64), ShieldError> {
    let dp = evader - other;
    let dist = dp.norm();
    if !(dist >= SINGULAR_DISTANCE) {
        return Err(ShieldError::Singular(kind));
    }
    Ok((dp, dist))
}

fn constraint(
    dp: Vec2,
    dist: f64,
    other_velocity: Vec2,
    gamma: f64,
    min_distance: f64,
    kind: BarrierKind,
) -> BarrierConstraint {
    let c = dp * (1.0 / dist);
    BarrierConstraint {
        c,
        d: -c.dot(other_velocity) + gamma * (dist - min_distance),
        kind,
    }
}

pub fn h_obstacle(
    index: usize,
    evader: &OrState,
    obstacle: &ObstacleState,
    cfg: &ShieldConfig,
) -> Result<BarrierValue, ShieldError> {
    let kind = BarrierKind::Obstacle(index);
    let (_, dist) = offset(evader.position(), obstacle.position(), kind)?;
    Ok(BarrierValue {
        h: dist - cfg.collision_distance,
        kind,
    })
}

pub fn h_pursuer(evader: &OrState, pursuer: &DdrState, cfg: &ShieldConfig) -> Result<BarrierValue, ShieldError> {
    let kind = BarrierKind::Pursuer;
    let (_, dist) = offset(evader.position(), pursuer.position(), kind)?;
    Ok(BarrierValue {
        h: dist - cfg.capture_distance,
        kind,
    })
}

pub fn constraint_obstacle(
    index: usize,
    evader: &OrState,
    obstacle: &ObstacleState,
    cfg: &ShieldConfig,
) -> Result<BarrierConstraint, ShieldError> {
    let kind = BarrierKind::Obstacle(index);
    let (dp, dist) = offset(evader.position(), obstacle.position(), kind)?;
    Ok(constraint(
        dp,
        dist,
        obstacle.velocity(),
        cfg.gamma_obstacle,
        cfg.collision_distance,
        kind,
    ))
}

/// The pursuer is modelled as moving at its cruise speed along its heading.
pub fn constraint_pursuer(
    evader: &OrState,
    pursuer: &DdrState,
    params: &DdrParams,
    cfg: &ShieldConfig,
) -> Result<BarrierConstraint, ShieldError> {
    let kind = BarrierKind::Pursuer;
    let (dp, dist) = offset(evader.position(), pursuer.position(), kind)?;
    let pursuer_velocity = Vec2::from_angle(pursuer.heading) * params.speed;
    Ok(constraint(
        dp,
        dist,
        pursuer_velocity,
        cfg.gamma_pursuer,
        cfg.capture_distance,
        kind,
    ))
}

/// Barrier values in assembly order: obstacles by index, then the pursuer.
pub fn barrier_values(world: &WorldState, cfg: &ShieldConfig) -> Result<Vec<BarrierValue>, ShieldError> {
    let mut out = Vec::with_capacity(world.obstacles.len() + 1);
    for (i, obs) in world.obstacles.iter().enumerate() {
        out.push(h_obstacle(i, &world.evader, obs, cfg)?);
    }
    out.push(h_pursuer(&world.evader, &world.pursuer, cfg)?);
    Ok(out)
}

/// One constraint per obstacle (by index) followed by the pursuer constraint.
pub fn assemble(
    world: &WorldState,
    pursuer_params: &DdrParams,
    cfg: &ShieldConfig,
) -> Result<Vec<BarrierConstraint>, ShieldError> {
    let mut out = Vec::with_capacity(world.obstacles.len() + 1);
    for (i, obs) in world.obstacles.iter().enumerate() {
        out.push(constraint_obstacle(i, &world.evader, obs, cfg)?);
    }
    out.push(constraint_pursuer(&world.evader, &world.pursuer, pursuer_params, cfg)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg() -> ShieldConfig {
        ShieldConfig::default()
    }

    fn ddr_params() -> DdrParams {
        DdrParams::with_default_wheel_bound(0.2, 0.2)
    }

    fn world(evader: OrState, pursuer: DdrState, obstacles: Vec<ObstacleState>) -> WorldState {
        WorldState {
            evader,
            pursuer,
            obstacles,
            target: Vec2::new(2.5, 0.0),
            t: 0.0,
            step_index: 0,
        }
    }

    #[test]
    fn obstacle_barrier_values() {
        let h = h_obstacle(
            0,
            &OrState::new(0.0, 0.0),
            &ObstacleState::new(1.5, 0.0, 0.02, 0.0),
            &cfg(),
        )
        .unwrap();
        assert_relative_eq!(h.h, 1.3, epsilon = 1e-15);
        assert_eq!(h.kind, BarrierKind::Obstacle(0));

        let boundary = h_obstacle(0, &OrState::new(0.2, 0.0), &ObstacleState::default(), &cfg()).unwrap();
        assert_eq!(boundary.h, 0.0);

        let h = h_obstacle(0, &OrState::new(0.3, 0.4), &ObstacleState::default(), &cfg()).unwrap();
        assert_relative_eq!(h.h, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn pursuer_barrier_values() {
        let h = h_pursuer(&OrState::new(0.0, 0.0), &DdrState::new(1.0, -0.5, 0.0), &cfg()).unwrap();
        assert_relative_eq!(h.h, 1.25f64.sqrt() - 0.2, epsilon = 1e-15);
        assert!((h.h - 0.9180).abs() < 1e-4);

        let boundary = h_pursuer(&OrState::new(0.0, 0.2), &DdrState::new(0.0, 0.0, 1.0), &cfg()).unwrap();
        assert_eq!(boundary.h, 0.0);

        let h = h_pursuer(&OrState::new(2.0, 0.0), &DdrState::new(2.0, 1.0, 0.0), &cfg()).unwrap();
        assert_relative_eq!(h.h, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn coincident_positions_are_singular() {
        let e = h_obstacle(
            3,
            &OrState::new(1.0, 1.0),
            &ObstacleState::new(1.0, 1.0, 0.0, 0.0),
            &cfg(),
        );
        assert_eq!(e, Err(ShieldError::Singular(BarrierKind::Obstacle(3))));
        let e = constraint_pursuer(
            &OrState::new(0.0, 0.0),
            &DdrState::new(0.0, 0.0, 0.0),
            &ddr_params(),
            &cfg(),
        );
        assert_eq!(e, Err(ShieldError::Singular(BarrierKind::Pursuer)));
    }

    #[test]
    fn obstacle_constraint_by_hand() {
        let k = constraint_obstacle(
            0,
            &OrState::new(0.0, 0.0),
            &ObstacleState::new(1.5, 0.0, 0.02, 0.0),
            &cfg(),
        )
        .unwrap();
        assert_eq!(k.c, Vec2::new(-1.0, 0.0));
        assert_relative_eq!(k.d, 1.32, epsilon = 1e-15);
    }

    #[test]
    fn static_obstacle_offset_is_gamma_h() {
        let or = OrState::new(-0.4, 0.9);
        let obs = ObstacleState::new(0.7, 0.1, 0.0, 0.0);
        let cfg = ShieldConfig {
            gamma_obstacle: 0.7,
            ..cfg()
        };
        let k = constraint_obstacle(0, &or, &obs, &cfg).unwrap();
        let h = h_obstacle(0, &or, &obs, &cfg).unwrap();
        assert_eq!(k.d, 0.7 * h.h);
    }

    #[test]
    fn receding_obstacle_relaxes_by_its_speed() {
        let or = OrState::new(0.0, 0.0);
        let still = constraint_obstacle(0, &or, &ObstacleState::new(1.5, 0.0, 0.0, 0.0), &cfg()).unwrap();
        let away = constraint_obstacle(0, &or, &ObstacleState::new(1.5, 0.0, 0.05, 0.0), &cfg()).unwrap();
        assert_relative_eq!(away.d - still.d, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn pursuer_constraint_by_hand() {
        let k = constraint_pursuer(
            &OrState::new(0.0, 0.0),
            &DdrState::new(1.0, -0.5, 0.0),
            &ddr_params(),
            &cfg(),
        )
        .unwrap();
        let n = 1.25f64.sqrt();
        assert_relative_eq!(k.c.x, -1.0 / n, epsilon = 1e-15);
        assert_relative_eq!(k.c.y, 0.5 / n, epsilon = 1e-15);
        let expected = 0.2 / n + 1.2 * (n - 0.2);
        assert_relative_eq!(k.d, expected, epsilon = 1e-14);
        assert!((k.d - 1.2805).abs() < 1e-4);
    }

    #[test]
    fn pursuer_term_matches_finite_difference() {
        // Evader still; pursuer moving straight away at cruise speed.
        let or = OrState::new(0.0, 0.0);
        let ddr = DdrState::new(1.0, -0.5, (-0.5f64).atan2(1.0));
        let k = constraint_pursuer(&or, &ddr, &ddr_params(), &cfg()).unwrap();
        let h0 = h_pursuer(&or, &ddr, &cfg()).unwrap().h;
        let dt = 1e-6;
        let moved = DdrState::new(
            ddr.x + 0.2 * ddr.heading.cos() * dt,
            ddr.y + 0.2 * ddr.heading.sin() * dt,
            ddr.heading,
        );
        let h1 = h_pursuer(&or, &moved, &cfg()).unwrap().h;
        let hdot = (h1 - h0) / dt;
        // the drift part of d is -c . v_ddr, which must equal dh/dt at u = 0
        let drift = k.d - cfg().gamma_pursuer * h0;
        assert_relative_eq!(hdot, drift, epsilon = 1e-6);
        assert!(hdot > 0.0);
    }

    #[test]
    fn static_pursuer_small_gamma_means_do_not_approach() {
        let cfg = ShieldConfig {
            gamma_pursuer: 1e-12,
            ..cfg()
        };
        let still = DdrParams {
            speed: 0.0,
            ..ddr_params()
        };
        let k = constraint_pursuer(&OrState::new(0.0, 0.0), &DdrState::new(1.0, 0.0, 0.3), &still, &cfg).unwrap();
        assert!(k.d.abs() < 1e-11);
        assert_eq!(k.c, Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn assembly_order_and_cardinality() {
        let pursuer = DdrState::new(1.0, -0.5, 0.0);
        let w = world(OrState::new(0.0, 0.0), pursuer, vec![]);
        assert_eq!(assemble(&w, &ddr_params(), &cfg()).unwrap().len(), 1);

        let obstacles: Vec<_> = (0..4)
            .map(|i| ObstacleState::new(1.0 + i as f64, 2.0, 0.0, 0.0))
            .collect();
        let w = world(OrState::new(0.0, 0.0), pursuer, obstacles);
        let ks = assemble(&w, &ddr_params(), &cfg()).unwrap();
        let kinds: Vec<_> = ks.iter().map(|k| k.kind).collect();
        assert_eq!(
            kinds,
            vec![
                BarrierKind::Obstacle(0),
                BarrierKind::Obstacle(1),
                BarrierKind::Obstacle(2),
                BarrierKind::Obstacle(3),
                BarrierKind::Pursuer
            ]
        );
    }

    #[test]
    fn assembly_reports_offending_entity() {
        let obstacles = vec![
            ObstacleState::new(3.0, 0.0, 0.0, 0.0),
            ObstacleState::new(0.0, 0.0, 0.0, 0.0),
        ];
        let w = world(OrState::new(0.0, 0.0), DdrState::new(1.0, 1.0, 0.0), obstacles);
        assert_eq!(
            assemble(&w, &ddr_params(), &cfg()),
            Err(ShieldError::Singular(BarrierKind::Obstacle(1)))
        );
    }

    fn entity() -> impl Strategy<Value = (f64, f64)> {
        (-5.0f64..5.0, -5.0f64..5.0)
    }

    proptest! {
        #[test]
        fn unit_normal_and_invariances(
            e in entity(), o in entity(), ov in entity(), p in entity(), ph in -PI..PI,
            shift in entity(), phi in -PI..PI,
        ) {
            let or = OrState::new(e.0, e.1);
            let obs = ObstacleState::new(o.0, o.1, ov.0 * 0.01, ov.1 * 0.01);
            let ddr = DdrState::new(p.0, p.1, ph);
            prop_assume!((or.position() - obs.position()).norm() > 1e-3);
            prop_assume!((or.position() - ddr.position()).norm() > 1e-3);
            let w = world(or, ddr, vec![obs]);
            let base = assemble(&w, &ddr_params(), &cfg()).unwrap();
            let hs = barrier_values(&w, &cfg()).unwrap();
            for k in &base {
                prop_assert!((k.c.norm() - 1.0).abs() < 1e-12);
            }

            let moved = world(
                OrState::new(e.0 + shift.0, e.1 + shift.1),
                DdrState::new(p.0 + shift.0, p.1 + shift.1, ph),
                vec![ObstacleState { x: o.0 + shift.0, y: o.1 + shift.1, ..obs }],
            );
            let shifted = assemble(&moved, &ddr_params(), &cfg()).unwrap();
            let shifted_h = barrier_values(&moved, &cfg()).unwrap();
            for (a, b) in base.iter().zip(&shifted) {
                prop_assert!((a.c - b.c).norm() < 1e-9);
                prop_assert!((a.d - b.d).abs() < 1e-9);
            }
            for (a, b) in hs.iter().zip(&shifted_h) {
                prop_assert!((a.h - b.h).abs() < 1e-9);
            }

            let rot = |v: Vec2| v.rotated(phi);
            let re = rot(or.position());
            let ro = rot(obs.position());
            let rv = rot(obs.velocity());
            let rp = rot(ddr.position());
            let turned = world(
                OrState::new(re.x, re.y),
                DdrState::new(rp.x, rp.y, ph + phi),
                vec![ObstacleState::new(ro.x, ro.y, rv.x, rv.y)],
            );
            let rotated = assemble(&turned, &ddr_params(), &cfg()).unwrap();
            let rotated_h = barrier_values(&turned, &cfg()).unwrap();
            for (a, b) in base.iter().zip(&rotated) {
                prop_assert!((rot(a.c) - b.c).norm() < 1e-9);
                prop_assert!((a.d - b.d).abs() < 1e-9);
            }
            for (a, b) in hs.iter().zip(&rotated_h) {
                prop_assert!((a.h - b.h).abs() < 1e-9);
            }
        }

        #[test]
        fn farther_means_larger_h_and_d(
            dir in -PI..PI, r in 0.05f64..4.0, extra in 0.01f64..2.0, ph in -PI..PI,
        ) {
            let or = OrState::new(0.0, 0.0);
            let near = Vec2::from_angle(dir) * r;
            let far = Vec2::from_angle(dir) * (r + extra);
            let a = constraint_pursuer(&or, &DdrState::new(near.x, near.y, ph), &ddr_params(), &cfg()).unwrap();
            let b = constraint_pursuer(&or, &DdrState::new(far.x, far.y, ph), &ddr_params(), &cfg()).unwrap();
            prop_assert!(b.d > a.d);
            let ha = h_pursuer(&or, &DdrState::new(near.x, near.y, ph), &cfg()).unwrap().h;
            let hb = h_pursuer(&or, &DdrState::new(far.x, far.y, ph), &cfg()).unwrap().h;
            prop_assert!(hb > ha);

            let oa = constraint_obstacle(0, &or, &ObstacleState::new(near.x, near.y, 0.01, -0.02), &cfg()).unwrap();
            let ob = constraint_obstacle(0, &or, &ObstacleState::new(far.x, far.y, 0.01, -0.02), &cfg()).unwrap();
            prop_assert!(ob.d > oa.d);
        }
    }
}
