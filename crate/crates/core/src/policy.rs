//! Nominal evader policies and single-episode rollouts.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::EvaderAction;
use crate::env::{EnvError, Episode, EpisodeConfig, EpisodeRecord, WorldParams, WorldState};
use crate::learner::{observe, Td3Agent};

/// Maps the current world to a nominal heading; the shield runs afterwards.
pub trait Policy {
    fn nominal(&mut self, world: &WorldState) -> EvaderAction;
}

/// Heads straight at the target, ignoring every other body.
#[derive(Debug, Clone, Copy, Default)]
pub struct StraightToTarget;

impl Policy for StraightToTarget {
    fn nominal(&mut self, world: &WorldState) -> EvaderAction {
        EvaderAction::new((world.target - world.evader.position()).angle())
    }
}

/// Uniform heading on every tick.
#[derive(Debug, Clone)]
pub struct RandomHeading {
    rng: ChaCha8Rng,
}

impl RandomHeading {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomHeading {
    fn nominal(&mut self, _world: &WorldState) -> EvaderAction {
        EvaderAction::new(self.rng.random_range(-PI..PI))
    }
}

/// Noise-free actor of a trained agent, queried every `action_repeat` steps.
#[derive(Debug, Clone)]
pub struct Learned<'a> {
    agent: &'a Td3Agent,
    held: Option<(EvaderAction, usize)>,
}

impl<'a> Learned<'a> {
    pub fn new(agent: &'a Td3Agent) -> Self {
        Self { agent, held: None }
    }
}

impl Policy for Learned<'_> {
    fn nominal(&mut self, world: &WorldState) -> EvaderAction {
        if let Some((action, left)) = self.held.as_mut() {
            if *left > 0 {
                *left -= 1;
                return *action;
            }
        }
        let obs = observe(world, self.agent.config().observation_scale_m);
        let action = EvaderAction::new(self.agent.policy(&obs).heading());
        self.held = Some((action, self.agent.config().action_repeat - 1));
        action
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    StraightToTarget,
    Random,
}

impl Builtin {
    pub const NAMES: [&'static str; 2] = ["straight-to-target", "random"];

    pub fn as_str(&self) -> &'static str {
        match self {
            Builtin::StraightToTarget => "straight-to-target",
            Builtin::Random => "random",
        }
    }

    /// Instantiates the policy; `seed` drives the random variant only.
    pub fn instantiate(&self, seed: u64) -> Box<dyn Policy> {
        match self {
            Builtin::StraightToTarget => Box::new(StraightToTarget),
            Builtin::Random => Box::new(RandomHeading::new(seed)),
        }
    }
}

impl std::str::FromStr for Builtin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straight-to-target" => Ok(Builtin::StraightToTarget),
            "random" => Ok(Builtin::Random),
            other => Err(format!(
                "unknown builtin policy {other:?}, expected one of {}",
                Builtin::NAMES.join(", ")
            )),
        }
    }
}

/// Runs one episode to termination under `policy`.
pub fn rollout(cfg: EpisodeConfig, params: WorldParams, policy: &mut dyn Policy) -> Result<EpisodeRecord, EnvError> {
    let mut episode = Episode::new(cfg, params)?;
    while episode.outcome().is_none() {
        let action = policy.nominal(episode.world());
        episode.step(action)?;
    }
    Ok(episode.finish())
}
