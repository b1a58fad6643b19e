//! Pursuit-evasion simulation with a barrier-function safety shield.
//!
//! An omnidirectional evader steers toward a target under a learned TD3
//! policy while a differential-drive pursuer chases it and obstacles drift
//! across the arena. Before every tick the nominal heading is passed through
//! a minimal-deviation filter that enforces one control-barrier constraint
//! per hazard.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod geometry;
pub mod learner;
pub mod policy;
pub mod pursuit;
pub mod runner;
pub mod safefilter;
pub mod shield;
