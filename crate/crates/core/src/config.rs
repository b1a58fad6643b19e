//! Run configuration: one TOML file holding every parameter of a run.
//!
//! Keys carry their unit as a suffix (`_m`, `_s`, `_m_per_s`, `_rad`,
//! `_rad_per_s`). Missing keys take the defaults below; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DdrParams, DdrState, ObstacleState, OrParams, OrState, DEFAULT_DT};
use crate::env::{EpisodeConfig, TargetSpec, WorldParams};
use crate::learner::{Td3Config, WarmupPolicy};
use crate::pursuit::{PursuitConfig, PursuitMode, DEFAULT_ANGLE_TOLERANCE};
use crate::shield::ShieldConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub episode: EpisodeSection,
    pub evaluation: EvaluationSection,
    pub evader: EvaderSection,
    pub pursuer: PursuerSection,
    pub obstacles: Vec<ObstacleSection>,
    pub target: TargetSpec,
    pub shield: ShieldSection,
    pub td3: Td3Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    /// Training episodes.
    pub episodes: usize,
    pub max_steps: usize,
    pub dt_s: f64,
    pub shield_enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Deterministic episodes run after training on fresh seeds.
    pub episodes: usize,
    /// Checkpoint period in training episodes; 0 keeps only the final one.
    pub checkpoint_every_episodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaderSection {
    pub v_o_m_per_s: f64,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PursuerSection {
    pub v_d_m_per_s: f64,
    pub half_axle_m: f64,
    pub max_wheel_speed_rad_per_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    pub mode: PursuitMode,
    /// Pure pursuit only.
    pub angular_gain: f64,
    /// Turn-then-chase only.
    pub angle_tolerance_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub vx_m_per_s: f64,
    #[serde(default)]
    pub vy_m_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShieldSection {
    pub gamma_oc: f64,
    pub gamma_pv: f64,
    pub d_oc_m: f64,
    pub d_pv_m: f64,
    /// Target reach distance.
    pub d_t_m: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run_id: "desk".into(),
            seed: 0,
            out_dir: PathBuf::from("runs/desk"),
            episode: EpisodeSection::default(),
            evaluation: EvaluationSection::default(),
            evader: EvaderSection::default(),
            pursuer: PursuerSection::default(),
            obstacles: vec![ObstacleSection::default()],
            target: TargetSpec::default(),
            shield: ShieldSection::default(),
            td3: desk_td3(),
        }
    }
}

/// Learner defaults sized for a single-core desk run: narrow networks, a
/// straight-to-target warm-up, headings held for ten steps and several
/// updates per stored transition.
pub fn desk_td3() -> Td3Config {
    Td3Config {
        hidden_widths: vec![32, 32],
        warmup_steps: 10_000,
        warmup_policy: WarmupPolicy::StraightToTarget,
        reward_scale: 0.01,
        action_repeat: 10,
        updates_per_step: 16,
        ..Td3Config::default()
    }
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self {
            episodes: 150,
            max_steps: 1500,
            dt_s: DEFAULT_DT,
            shield_enabled: true,
        }
    }
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            episodes: 50,
            checkpoint_every_episodes: 50,
        }
    }
}

impl Default for EvaderSection {
    fn default() -> Self {
        Self {
            v_o_m_per_s: 0.1574,
            x_m: 0.0,
            y_m: 0.0,
        }
    }
}

impl Default for PursuerSection {
    fn default() -> Self {
        Self {
            v_d_m_per_s: 0.2,
            half_axle_m: 1.0,
            max_wheel_speed_rad_per_s: 0.4,
            x_m: 1.0,
            y_m: -0.5,
            heading_rad: 0.0,
            mode: PursuitMode::TurnThenChase,
            angular_gain: 2.0,
            angle_tolerance_rad: DEFAULT_ANGLE_TOLERANCE,
        }
    }
}

impl Default for ObstacleSection {
    fn default() -> Self {
        Self {
            x_m: 1.5,
            y_m: 0.0,
            vx_m_per_s: 0.02,
            vy_m_per_s: 0.0,
        }
    }
}

impl Default for ShieldSection {
    fn default() -> Self {
        Self {
            gamma_oc: 1.0,
            gamma_pv: 1.2,
            d_oc_m: 0.2,
            d_pv_m: 0.2,
            d_t_m: 0.05,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let cfg = Self::from_toml(&text).map_err(|message| ConfigError::Parse {
            path: path.to_owned(),
            message,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    /// Every violated constraint, one line each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be positive, got {v}"));
            }
        };
        positive("episode.dt_s", self.episode.dt_s);
        positive("evader.v_o_m_per_s", self.evader.v_o_m_per_s);
        positive("pursuer.v_d_m_per_s", self.pursuer.v_d_m_per_s);
        positive("pursuer.half_axle_m", self.pursuer.half_axle_m);
        positive(
            "pursuer.max_wheel_speed_rad_per_s",
            self.pursuer.max_wheel_speed_rad_per_s,
        );
        positive("shield.gamma_oc", self.shield.gamma_oc);
        positive("shield.gamma_pv", self.shield.gamma_pv);
        positive("shield.d_oc_m", self.shield.d_oc_m);
        positive("shield.d_pv_m", self.shield.d_pv_m);
        positive("shield.d_t_m", self.shield.d_t_m);

        if self.run_id.is_empty() {
            out.push("run_id must not be empty".into());
        }
        if self.episode.episodes == 0 {
            out.push("episode.episodes must be at least 1".into());
        }
        if self.episode.max_steps == 0 {
            out.push("episode.max_steps must be at least 1".into());
        }
        if self.pursuer.max_wheel_speed_rad_per_s < self.pursuer.v_d_m_per_s {
            out.push(format!(
                "pursuer.max_wheel_speed_rad_per_s ({}) must be at least pursuer.v_d_m_per_s ({})",
                self.pursuer.max_wheel_speed_rad_per_s, self.pursuer.v_d_m_per_s
            ));
        }
        if !(self.pursuer.angular_gain.is_finite() && self.pursuer.angular_gain >= 0.0) {
            out.push(format!(
                "pursuer.angular_gain must be non-negative, got {}",
                self.pursuer.angular_gain
            ));
        }
        if !(self.pursuer.angle_tolerance_rad.is_finite() && self.pursuer.angle_tolerance_rad >= 0.0) {
            out.push(format!(
                "pursuer.angle_tolerance_rad must be non-negative, got {}",
                self.pursuer.angle_tolerance_rad
            ));
        }
        let finite = [
            ("evader.x_m", self.evader.x_m),
            ("evader.y_m", self.evader.y_m),
            ("pursuer.x_m", self.pursuer.x_m),
            ("pursuer.y_m", self.pursuer.y_m),
            ("pursuer.heading_rad", self.pursuer.heading_rad),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if ![o.x_m, o.y_m, o.vx_m_per_s, o.vy_m_per_s].iter().all(|v| v.is_finite()) {
                out.push(format!("obstacles[{i}] has a non-finite field"));
            }
        }
        match self.target {
            TargetSpec::Fixed { x_m, y_m } => {
                if !(x_m.is_finite() && y_m.is_finite()) {
                    out.push("target.x_m and target.y_m must be finite".into());
                }
            }
            TargetSpec::Region {
                x_min_m,
                x_max_m,
                y_min_m,
                y_max_m,
            } => {
                if ![x_min_m, x_max_m, y_min_m, y_max_m].iter().all(|v| v.is_finite()) {
                    out.push("target region bounds must be finite".into());
                } else if x_min_m > x_max_m || y_min_m > y_max_m {
                    out.push(format!(
                        "target region is empty: x [{x_min_m}, {x_max_m}], y [{y_min_m}, {y_max_m}]"
                    ));
                }
            }
        }
        out.extend(self.td3.problems());
        out
    }

    pub fn world_params(&self) -> WorldParams {
        WorldParams {
            evader: OrParams {
                speed: self.evader.v_o_m_per_s,
            },
            pursuer: DdrParams {
                speed: self.pursuer.v_d_m_per_s,
                half_axle: self.pursuer.half_axle_m,
                max_wheel_speed: self.pursuer.max_wheel_speed_rad_per_s,
            },
            pursuit: PursuitConfig {
                mode: self.pursuer.mode,
                angular_gain: self.pursuer.angular_gain,
                angle_tolerance: self.pursuer.angle_tolerance_rad,
            },
            shield: ShieldConfig {
                gamma_obstacle: self.shield.gamma_oc,
                gamma_pursuer: self.shield.gamma_pv,
                collision_distance: self.shield.d_oc_m,
                capture_distance: self.shield.d_pv_m,
            },
            reach_distance: self.shield.d_t_m,
        }
    }

    /// Episode layout for one rollout with the given seed.
    pub fn episode_config(&self, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            dt: self.episode.dt_s,
            max_steps: self.episode.max_steps,
            evader_start: OrState::new(self.evader.x_m, self.evader.y_m),
            pursuer_start: DdrState::new(self.pursuer.x_m, self.pursuer.y_m, self.pursuer.heading_rad),
            obstacles: self
                .obstacles
                .iter()
                .map(|o| ObstacleState::new(o.x_m, o.y_m, o.vx_m_per_s, o.vy_m_per_s))
                .collect(),
            target: self.target,
            seed,
            shield_enabled: self.episode.shield_enabled,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_parameters() {
        let cfg = RunConfig::default();
        let p = cfg.world_params();
        assert_eq!(p.pursuer.speed, 0.2);
        assert_eq!(p.evader.speed, 0.1574);
        assert_eq!(p.shield.gamma_obstacle, 1.0);
        assert_eq!(p.shield.gamma_pursuer, 1.2);
        assert_eq!(p.shield.collision_distance, 0.2);
        assert_eq!(p.shield.capture_distance, 0.2);
        assert_eq!(p.reach_distance, 0.05);
        let e = cfg.episode_config(0);
        assert_eq!(e.obstacles, vec![ObstacleState::new(1.5, 0.0, 0.02, 0.0)]);
        assert_eq!(e.pursuer_start, DdrState::new(1.0, -0.5, 0.0));
        assert_eq!(e.max_steps, 1500);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::from_toml(
            "seed = 7\n[episode]\nepisodes = 200\nmax_steps = 5000\n[target]\nmode = \"fixed\"\nx_m = 2.5\ny_m = 0.0\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.episode.episodes, 200);
        assert_eq!(cfg.episode.dt_s, DEFAULT_DT);
        assert_eq!(cfg.target, TargetSpec::Fixed { x_m: 2.5, y_m: 0.0 });
        assert_eq!(cfg.obstacles.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[evader]\nv_o = 0.3\n").is_err());
    }

    #[test]
    fn problems_are_itemized() {
        let mut cfg = RunConfig::default();
        cfg.episode.dt_s = 0.0;
        cfg.shield.gamma_pv = -1.0;
        cfg.td3.policy_delay = 0;
        let problems = cfg.problems();
        assert_eq!(problems.len(), 3, "{problems:?}");
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("episode.dt_s"));
        assert!(msg.contains("shield.gamma_pv"));
        assert!(msg.contains("td3.policy_delay"));
    }

    #[test]
    fn empty_region_is_invalid() {
        let cfg = RunConfig {
            target: TargetSpec::Region {
                x_min_m: 1.0,
                x_max_m: 0.0,
                y_min_m: 0.0,
                y_max_m: 0.0,
            },
            ..Default::default()
        };
        assert_eq!(cfg.problems().len(), 1);
    }
}
