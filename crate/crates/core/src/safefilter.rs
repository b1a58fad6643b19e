//! Minimal-deviation safe heading for a fixed-speed evader.
//!
//! The evader velocity is `u = v (cos t, sin t)`, so the projection
//! `argmin |u - u_nominal|^2` subject to `c_i . u + d_i >= 0` is a search over
//! the heading `t` alone. Each half-plane cuts the speed circle in a closed
//! arc centred on the direction of `c_i` with half-width
//! `acos(-d_i / v)`. The arcs are intersected exactly and the feasible
//! heading nearest the nominal one (by angular distance, which is monotone in
//! `|u - u_nominal|` on the circle) is returned.
//!
//! When the arcs do not intersect, the heading maximizing the worst margin
//! `min_i (c_i . u + d_i)` is returned instead and the result is flagged
//! infeasible.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::EvaderAction;
use crate::geometry::{angle_diff, wrap_angle, Vec2};
use crate::shield::BarrierConstraint;

/// Slack allowed when reporting a constraint as satisfied.
pub const MARGIN_TOLERANCE: f64 = 1e-9;
const UNIT_TOLERANCE: f64 = 1e-9;
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("evader speed must be finite and positive, got {0}")]
    InvalidSpeed(f64),
    #[error("constraint {index} has |c| = {norm}, expected 1")]
    NonUnitNormal { index: usize, norm: f64 },
    #[error("constraint {index} has non-finite coefficients")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub safe_action: EvaderAction,
    pub corrected: bool,
    /// Angular distance between nominal and safe heading [rad].
    pub deviation: f64,
    pub feasible: bool,
    /// Smallest constraint slack at the returned action [m/s].
    pub margin: f64,
}

/// A closed interval of headings `[lo, hi]` with `-pi <= lo <= hi <= pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    lo: f64,
    hi: f64,
}

enum Arc {
    Full,
    Empty,
    Around { center: f64, half_width: f64 },
}

fn arc_of(k: &BarrierConstraint, speed: f64) -> Arc {
    // c . u = v cos(t - center), so the constraint reads cos(t - center) >= -d / v
    let threshold = -k.d / speed;
    if threshold <= -1.0 {
        Arc::Full
    } else if threshold > 1.0 {
        Arc::Empty
    } else {
        Arc::Around {
            center: k.c.angle(),
            half_width: threshold.acos(),
        }
    }
}

/// Splits an arc into at most two intervals of `[-pi, pi]`.
fn unwrap_arc(center: f64, half_width: f64) -> Vec<Interval> {
    if half_width >= PI {
        return vec![Interval { lo: -PI, hi: PI }];
    }
    let lo = wrap_angle(center - half_width);
    let hi = lo + 2.0 * half_width;
    if hi <= PI {
        vec![Interval { lo, hi }]
    } else {
        vec![
            Interval {
                lo: -PI,
                hi: hi - 2.0 * PI,
            },
            Interval { lo, hi: PI },
        ]
    }
}

fn intersect(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].lo.max(b[j].lo);
        let hi = a[i].hi.min(b[j].hi);
        if lo <= hi {
            out.push(Interval { lo, hi });
        }
        if a[i].hi < b[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Feasible headings as sorted, disjoint closed intervals; `None` if empty.
fn feasible_set(constraints: &[BarrierConstraint], speed: f64) -> Option<Vec<Interval>> {
    let mut set = vec![Interval { lo: -PI, hi: PI }];
    for k in constraints {
        let arc = match arc_of(k, speed) {
            Arc::Full => continue,
            Arc::Empty => return None,
            Arc::Around { center, half_width } => {
                let mut parts = unwrap_arc(center, half_width);
                parts.sort_by(|x, y| x.lo.total_cmp(&y.lo));
                parts
            }
        };
        set = intersect(&set, &arc);
        if set.is_empty() {
            return None;
        }
    }
    Some(set)
}

/// Prefers the smaller angular distance to `nominal`, then the
/// counterclockwise side.
fn better(candidate: f64, incumbent: f64, nominal: f64) -> bool {
    let dc = angle_diff(candidate, nominal);
    let di = angle_diff(incumbent, nominal);
    if (dc.abs() - di.abs()).abs() > TIE_TOLERANCE {
        dc.abs() < di.abs()
    } else {
        dc > di
    }
}

fn worst_margin(constraints: &[BarrierConstraint], u: Vec2) -> f64 {
    constraints.iter().map(|k| k.margin(u)).fold(f64::INFINITY, f64::min)
}

/// Heading maximizing the smallest constraint slack.
///
/// The lower envelope of sinusoids peaks either at the peak of one sinusoid
/// or where two of them cross, so those headings are the only candidates.
fn least_violating(constraints: &[BarrierConstraint], speed: f64, nominal: f64) -> f64 {
    let mut candidates: Vec<f64> = constraints.iter().map(|k| k.c.angle()).collect();
    for (i, a) in constraints.iter().enumerate() {
        for b in &constraints[i + 1..] {
            // v (a.c - b.c) . (cos t, sin t) = b.d - a.d
            let diff = a.c - b.c;
            let r = diff.norm();
            if r < 1e-15 {
                continue;
            }
            let k = (b.d - a.d) / (speed * r);
            if k.abs() > 1.0 {
                continue;
            }
            let base = diff.angle();
            let spread = k.acos();
            candidates.push(wrap_angle(base + spread));
            candidates.push(wrap_angle(base - spread));
        }
    }
    let mut best = nominal;
    let mut best_value = f64::NEG_INFINITY;
    for t in candidates {
        let value = worst_margin(constraints, Vec2::from_angle(t) * speed);
        if value > best_value + TIE_TOLERANCE
            || ((value - best_value).abs() <= TIE_TOLERANCE && better(t, best, nominal))
        {
            best = t;
            best_value = value;
        }
    }
    best
}

fn validate(constraints: &[BarrierConstraint], speed: f64) -> Result<(), FilterError> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(FilterError::InvalidSpeed(speed));
    }
    for (index, k) in constraints.iter().enumerate() {
        if !k.c.is_finite() || !k.d.is_finite() {
            return Err(FilterError::NonFinite { index });
        }
        let norm = k.c.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(FilterError::NonUnitNormal { index, norm });
        }
    }
    Ok(())
}

fn result(nominal: f64, safe: f64, feasible: bool, constraints: &[BarrierConstraint], speed: f64) -> FilterResult {
    let safe_action = EvaderAction::new(safe);
    let deviation = angle_diff(safe_action.heading(), nominal).abs();
    FilterResult {
        safe_action,
        corrected: deviation > 0.0,
        deviation,
        feasible,
        margin: worst_margin(constraints, safe_action.velocity(speed)),
    }
}

/// Returns the feasible heading closest to `nominal`.
pub fn filter(
    nominal: EvaderAction,
    constraints: &[BarrierConstraint],
    speed: f64,
) -> Result<FilterResult, FilterError> {
    validate(constraints, speed)?;
    let t0 = nominal.heading();

    if worst_margin(constraints, nominal.velocity(speed)) >= 0.0 {
        return Ok(result(t0, t0, true, constraints, speed));
    }

    let Some(set) = feasible_set(constraints, speed) else {
        let t = least_violating(constraints, speed, t0);
        return Ok(result(t0, t, false, constraints, speed));
    };

    let mut best: Option<f64> = None;
    for iv in &set {
        if iv.lo <= t0 && t0 <= iv.hi {
            // nominal inside the closed arc but its margin rounded below zero
            best = Some(t0);
            break;
        }
        for end in [iv.lo, iv.hi] {
            best = match best {
                Some(b) if !better(end, b, t0) => Some(b),
                _ => Some(end),
            };
        }
    }
    let safe = best.expect("non-empty feasible set");
    Ok(result(t0, safe, true, constraints, speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shield::BarrierKind;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn k(cx: f64, cy: f64, d: f64) -> BarrierConstraint {
        let n = cx.hypot(cy);
        BarrierConstraint {
            c: Vec2::new(cx / n, cy / n),
            d,
            kind: BarrierKind::Pursuer,
        }
    }

    #[test]
    fn feasible_nominal_passes_through() {
        let ks = [k(-1.0, 0.0, 1.32), k(-0.8944, 0.4472, 1.28)];
        let r = filter(EvaderAction::new(0.3), &ks, 0.1574).unwrap();
        assert_eq!(r.safe_action, EvaderAction::new(0.3));
        assert!(!r.corrected);
        assert_eq!(r.deviation, 0.0);
        assert!(r.feasible);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn empty_constraint_list_returns_nominal() {
        let r = filter(EvaderAction::new(-2.0), &[], 1.0).unwrap();
        assert_eq!(r.safe_action.heading(), -2.0);
        assert!(!r.corrected);
        assert!(r.feasible);
    }

    #[test]
    fn single_half_plane_tie_goes_counterclockwise() {
        let r = filter(EvaderAction::new(0.0), &[k(-1.0, 0.0, 0.0)], 1.0).unwrap();
        assert!((r.safe_action.heading() - FRAC_PI_2).abs() < 1e-12);
        assert!(r.corrected);
        assert!(r.feasible);
        assert!(r.margin.abs() < 1e-12);
    }

    #[test]
    fn two_arcs_pick_the_near_endpoint() {
        // arc 1: cos(t - 5pi/12) >= cos(pi/12) -> [pi/3, pi/2]
        // arc 2: cos(t - pi/2) >= cos(pi/3)    -> [pi/6, 5pi/6]
        let c1 = Vec2::from_angle(5.0 * PI / 12.0);
        let c2 = Vec2::from_angle(FRAC_PI_2);
        let ks = [
            BarrierConstraint {
                c: c1,
                d: -(PI / 12.0).cos(),
                kind: BarrierKind::Obstacle(0),
            },
            BarrierConstraint {
                c: c2,
                d: -(PI / 3.0).cos(),
                kind: BarrierKind::Pursuer,
            },
        ];
        let r = filter(EvaderAction::new(0.0), &ks, 1.0).unwrap();
        assert!((r.safe_action.heading() - PI / 3.0).abs() < 1e-12);
        assert!(r.feasible);
        assert!(r.margin >= -MARGIN_TOLERANCE);
    }

    #[test]
    fn opposing_half_planes_fall_back_to_least_violation() {
        // need c.u >= 0.8 along +x and along -x at once
        let ks = [k(1.0, 0.0, -0.8), k(-1.0, 0.0, -0.8)];
        let r = filter(EvaderAction::new(0.2), &ks, 1.0).unwrap();
        assert!(!r.feasible);
        // best worst-margin is -0.8 at t = +-pi/2; counterclockwise from 0.2 wins
        assert!((r.safe_action.heading() - FRAC_PI_2).abs() < 1e-12);
        assert!((r.margin + 0.8).abs() < 1e-12);
    }

    #[test]
    fn unreachable_single_constraint_runs_straight_at_it() {
        let r = filter(EvaderAction::new(0.0), &[k(0.0, 1.0, -2.0)], 1.0).unwrap();
        assert!(!r.feasible);
        assert!((r.safe_action.heading() - FRAC_PI_2).abs() < 1e-12);
        assert!((r.margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn wraparound_arc() {
        // feasible headings: within 0.3 rad of pi
        let ks = [k(-1.0, 0.0, -(0.3f64).cos())];
        let r = filter(EvaderAction::new(-2.0), &ks, 1.0).unwrap();
        assert!((r.safe_action.heading() - (-PI + 0.3)).abs() < 1e-12);
        let r = filter(EvaderAction::new(2.0), &ks, 1.0).unwrap();
        assert!((r.safe_action.heading() - (PI - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = BarrierConstraint {
            c: Vec2::new(2.0, 0.0),
            d: 0.0,
            kind: BarrierKind::Pursuer,
        };
        assert!(matches!(
            filter(EvaderAction::new(0.0), &[k(1.0, 0.0, 0.0), bad], 1.0),
            Err(FilterError::NonUnitNormal { index: 1, .. })
        ));
        assert_eq!(
            filter(EvaderAction::new(0.0), &[], 0.0),
            Err(FilterError::InvalidSpeed(0.0))
        );
    }

    fn constraint_set() -> impl Strategy<Value = Vec<BarrierConstraint>> {
        prop::collection::vec((-PI..PI, -1.2f64..1.2), 1..=6).prop_map(|v| {
            v.into_iter()
                .map(|(a, d)| BarrierConstraint {
                    c: Vec2::from_angle(a),
                    d,
                    kind: BarrierKind::Pursuer,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn feasible_results_satisfy_everything(ks in constraint_set(), t in -PI..PI) {
            let r = filter(EvaderAction::new(t), &ks, 1.0).unwrap();
            if r.feasible {
                for c in &ks {
                    prop_assert!(c.margin(r.safe_action.velocity(1.0)) >= -MARGIN_TOLERANCE);
                }
            }
            prop_assert_eq!(r.corrected, r.deviation > 0.0);
        }

        #[test]
        fn mirroring_mirrors_the_heading(ks in constraint_set(), t in -PI..PI) {
            let mirrored: Vec<_> = ks
                .iter()
                .map(|c| BarrierConstraint { c: Vec2::new(c.c.x, -c.c.y), ..*c })
                .collect();
            let a = filter(EvaderAction::new(t), &ks, 1.0).unwrap();
            let b = filter(EvaderAction::new(-t), &mirrored, 1.0).unwrap();
            prop_assert_eq!(a.feasible, b.feasible);
            // exact ties resolve counterclockwise on both sides, so compare the
            // achieved deviation rather than the heading in that case
            let same = angle_diff(-a.safe_action.heading(), b.safe_action.heading()).abs() < 1e-9;
            prop_assert!(same || (a.deviation - b.deviation).abs() < 1e-9);
        }

        #[test]
        fn deterministic(ks in constraint_set(), t in -PI..PI) {
            let a = filter(EvaderAction::new(t), &ks, 1.0).unwrap();
            let b = filter(EvaderAction::new(t), &ks, 1.0).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
