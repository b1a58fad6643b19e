//! Twin Delayed DDPG.
//!
//! Two critics are regressed onto `r + discount * (1 - done) * min(Q1', Q2')`
//! evaluated at a noise-smoothed target action; the actor and all target
//! networks are updated once every `policy_delay` critic updates.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::Adam;
use super::mlp::{Activation, Mlp};
use super::replay::{Batch, ReplayBuffer};
use super::{Observation, PolicyAction, OBS_DIM};

/// Behaviour policy during warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarmupPolicy {
    /// Uniform random actions.
    Uniform,
    /// Heading straight at the target, plus behaviour noise.
    StraightToTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Config {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Std-dev of the smoothing noise on target actions (raw units).
    pub target_noise: f64,
    pub target_noise_clip: f64,
    /// Critic updates per actor update.
    pub policy_delay: usize,
    /// Soft-update rate of the target networks.
    pub tau: f64,
    /// Std-dev of the behaviour noise (raw units).
    pub exploration_noise: f64,
    pub hidden_widths: Vec<usize>,
    /// Environment steps driven by `warmup_policy` before the actor takes over.
    pub warmup_steps: usize,
    pub warmup_policy: WarmupPolicy,
    /// Length dividing every offset in the observation [m].
    pub observation_scale_m: f64,
    /// Factor applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Environment steps each chosen heading is held for; rewards are summed.
    pub action_repeat: usize,
    /// Gradient updates per stored transition.
    pub updates_per_step: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            discount: 0.99,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            policy_delay: 2,
            tau: 0.005,
            exploration_noise: 0.1,
            hidden_widths: vec![256, 256],
            warmup_steps: 25_000,
            warmup_policy: WarmupPolicy::Uniform,
            observation_scale_m: 5.0,
            reward_scale: 1.0,
            action_repeat: 1,
            updates_per_step: 1,
        }
    }
}

impl Td3Config {
    /// Itemized list of violated constraints; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("tau", self.tau),
            ("observation_scale_m", self.observation_scale_m),
            ("reward_scale", self.reward_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("td3.{name} must be positive, got {v}"));
            }
        }
        let nonneg = [
            ("target_noise", self.target_noise),
            ("target_noise_clip", self.target_noise_clip),
            ("exploration_noise", self.exploration_noise),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("td3.{name} must be non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.discount) {
            out.push(format!("td3.discount must lie in [0, 1], got {}", self.discount));
        }
        if self.tau > 1.0 {
            out.push(format!("td3.tau must be at most 1, got {}", self.tau));
        }
        if self.batch_size == 0 {
            out.push("td3.batch_size must be at least 1".into());
        }
        if self.buffer_capacity == 0 {
            out.push("td3.buffer_capacity must be at least 1".into());
        }
        if self.action_repeat == 0 {
            out.push("td3.action_repeat must be at least 1".into());
        }
        if self.updates_per_step == 0 {
            out.push("td3.updates_per_step must be at least 1".into());
        }
        if self.policy_delay == 0 {
            out.push("td3.policy_delay must be at least 1".into());
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            out.push("td3.hidden_widths must be a non-empty list of positive widths".into());
        }
        out
    }

    /// SHA-256 over the canonical JSON form; identifies compatible checkpoints.
    pub fn hash(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).into()
    }

    pub fn hash_hex(&self) -> String {
        self.hash().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// Critic mean-squared errors; `None` when the buffer was too small.
    pub critic: Option<(f64, f64)>,
    /// Actor loss `-mean Q1(s, pi(s))`, on delayed steps only.
    pub actor: Option<f64>,
}

impl LossReport {
    pub fn skipped(&self) -> bool {
        self.critic.is_none()
    }
}

/// `r + discount * (1 - done) * min(q1, q2)`, elementwise.
pub fn td_targets(
    rewards: &Array1<f64>,
    dones: &Array1<f64>,
    q1: &Array1<f64>,
    q2: &Array1<f64>,
    discount: f64,
) -> Array1<f64> {
    let mut y = Array1::zeros(rewards.len());
    for i in 0..y.len() {
        y[i] = rewards[i] + discount * (1.0 - dones[i]) * q1[i].min(q2[i]);
    }
    y
}

fn critic_input(obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[obs, actions]).expect("matching batch sizes")
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub(crate) cfg: Td3Config,
    pub(crate) actor: Mlp,
    pub(crate) actor_target: Mlp,
    pub(crate) critic1: Mlp,
    pub(crate) critic2: Mlp,
    pub(crate) critic1_target: Mlp,
    pub(crate) critic2_target: Mlp,
    pub(crate) actor_opt: Adam,
    pub(crate) critic1_opt: Adam,
    pub(crate) critic2_opt: Adam,
    pub(crate) updates: u64,
    rng: ChaCha8Rng,
}

impl Td3Agent {
    pub fn new(cfg: Td3Config, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actor_sizes = vec![OBS_DIM];
        actor_sizes.extend(&cfg.hidden_widths);
        actor_sizes.push(1);
        let mut critic_sizes = vec![OBS_DIM + 1];
        critic_sizes.extend(&cfg.hidden_widths);
        critic_sizes.push(1);

        let actor = Mlp::new(&actor_sizes, Activation::Relu, Activation::Tanh, &mut rng);
        let critic1 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng);
        let critic2 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng);
        Self {
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic1_opt: Adam::new(&critic1, cfg.critic_lr),
            critic2_opt: Adam::new(&critic2, cfg.critic_lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            cfg,
            updates: 0,
            rng,
        }
    }

    pub fn config(&self) -> &Td3Config {
        &self.cfg
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Mlp {
        &mut self.actor
    }

    pub fn critics(&self) -> (&Mlp, &Mlp) {
        (&self.critic1, &self.critic2)
    }

    pub fn targets(&self) -> (&Mlp, &Mlp, &Mlp) {
        (&self.actor_target, &self.critic1_target, &self.critic2_target)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Reseeds the agent's private noise and sampling stream.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Noise-free actor output.
    pub fn policy(&self, obs: &Observation) -> PolicyAction {
        let x = Array2::from_shape_vec((1, OBS_DIM), obs.0.to_vec()).expect("observation shape");
        PolicyAction::new(self.actor.forward(x.view())[[0, 0]])
    }

    /// Actor output, plus clipped Gaussian behaviour noise unless `deterministic`.
    pub fn act(&mut self, obs: &Observation, deterministic: bool) -> PolicyAction {
        let a = self.policy(obs);
        if deterministic {
            return a;
        }
        self.perturb(a)
    }

    /// Uniform random action from the agent's stream (warm-up exploration).
    pub fn random_action(&mut self) -> PolicyAction {
        PolicyAction::new(self.rng.random_range(-1.0..=1.0))
    }

    /// `base` plus clipped Gaussian behaviour noise from the agent's stream.
    pub fn perturb(&mut self, base: PolicyAction) -> PolicyAction {
        if self.cfg.exploration_noise == 0.0 {
            return base;
        }
        let noise = Normal::new(0.0, self.cfg.exploration_noise).expect("finite std-dev");
        PolicyAction::new(base.raw() + noise.sample(&mut self.rng))
    }

    /// Samples a minibatch and runs one update; a no-op until the buffer
    /// holds a full batch.
    pub fn update(&mut self, buffer: &ReplayBuffer) -> LossReport {
        if buffer.len() < self.cfg.batch_size {
            return LossReport {
                critic: None,
                actor: None,
            };
        }
        let batch = buffer.sample(self.cfg.batch_size, &mut self.rng);
        self.update_on_batch(&batch)
    }

    /// Regression targets for `batch` under the current target networks.
    pub fn critic_targets(&mut self, batch: &Batch) -> Array1<f64> {
        let n = batch.len();
        let next_pi = self.actor_target.forward(batch.next_obs.view());
        let noise = Normal::new(0.0, self.cfg.target_noise.max(f64::MIN_POSITIVE)).expect("finite std-dev");
        let clip = self.cfg.target_noise_clip;
        let mut next_actions = Array2::zeros((n, 1));
        for i in 0..n {
            let eps = if self.cfg.target_noise > 0.0 {
                noise.sample(&mut self.rng).clamp(-clip, clip)
            } else {
                0.0
            };
            next_actions[[i, 0]] = (next_pi[[i, 0]] + eps).clamp(-1.0, 1.0);
        }
        let next_input = critic_input(batch.next_obs.view(), next_actions.view());
        let q1 = self.critic1_target.forward(next_input.view()).column(0).to_owned();
        let q2 = self.critic2_target.forward(next_input.view()).column(0).to_owned();
        td_targets(&batch.rewards, &batch.dones, &q1, &q2, self.cfg.discount)
    }

    pub fn update_on_batch(&mut self, batch: &Batch) -> LossReport {
        let n = batch.len() as f64;
        let y = self.critic_targets(batch);
        let input = critic_input(batch.obs.view(), batch.actions.view());

        let mut losses = [0.0; 2];
        for (k, (critic, opt)) in [
            (&mut self.critic1, &mut self.critic1_opt),
            (&mut self.critic2, &mut self.critic2_opt),
        ]
        .into_iter()
        .enumerate()
        {
            let cache = critic.forward_cached(input.view());
            let q = cache.output().column(0);
            let diff = &q - &y;
            losses[k] = diff.mapv(|d| d * d).sum() / n;
            let d_q = diff.mapv(|d| 2.0 * d / n).insert_axis(Axis(1));
            let (grads, _) = critic.backward(&cache, d_q.view());
            opt.apply(critic, &grads);
        }
        self.updates += 1;

        let mut actor_loss = None;
        if self.updates % self.cfg.policy_delay as u64 == 0 {
            let actor_cache = self.actor.forward_cached(batch.obs.view());
            let pi = actor_cache.output().clone();
            let critic_cache = self
                .critic1
                .forward_cached(critic_input(batch.obs.view(), pi.view()).view());
            let q = critic_cache.output();
            actor_loss = Some(-q.sum() / n);
            let d_q = Array2::from_elem((batch.len(), 1), -1.0 / n);
            let (_, d_input) = self.critic1.backward(&critic_cache, d_q.view());
            let d_action = d_input.slice(s![.., OBS_DIM..]).to_owned();
            let (grads, _) = self.actor.backward(&actor_cache, d_action.view());
            self.actor_opt.apply(&mut self.actor, &grads);

            let tau = self.cfg.tau;
            self.actor_target.soft_update_from(&self.actor, tau);
            self.critic1_target.soft_update_from(&self.critic1, tau);
            self.critic2_target.soft_update_from(&self.critic2, tau);
        }

        LossReport {
            critic: Some((losses[0], losses[1])),
            actor: actor_loss,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::replay::Transition;
    use ndarray::array;

    fn small_cfg() -> Td3Config {
        Td3Config {
            batch_size: 8,
            buffer_capacity: 64,
            hidden_widths: vec![8, 8],
            ..Default::default()
        }
    }

    fn transition(i: usize, reward: f64) -> Transition {
        let mut obs = [0.0; OBS_DIM];
        obs[0] = i as f64 * 0.1;
        obs[1] = -(i as f64) * 0.05;
        Transition {
            obs,
            action: ((i % 7) as f64 - 3.0) / 3.0,
            reward,
            next_obs: obs,
            done: i % 5 == 0,
        }
    }

    #[test]
    fn twin_minimum_target() {
        let y = td_targets(&array![0.0], &array![0.0], &array![2.0], &array![3.0], 0.99);
        assert!((y[0] - 1.98).abs() < 1e-15);
        let y = td_targets(&array![1.0], &array![1.0], &array![2.0], &array![3.0], 0.99);
        assert_eq!(y[0], 1.0);
    }

    #[test]
    fn zero_discount_targets_are_rewards() {
        let mut agent = Td3Agent::new(
            Td3Config {
                discount: 0.0,
                ..small_cfg()
            },
            3,
        );
        let items: Vec<_> = (0..16).map(|i| transition(i, 1.0)).collect();
        let batch = Batch::from_transitions(&items);
        assert!(agent.critic_targets(&batch).iter().all(|&y| y == 1.0));
    }

    #[test]
    fn zero_output_layer_acts_zero() {
        let mut agent = Td3Agent::new(small_cfg(), 4);
        agent.actor_mut().zero_output_layer();
        let obs = Observation([0.3; OBS_DIM]);
        assert_eq!(agent.act(&obs, true).raw(), 0.0);
        assert_eq!(agent.policy(&obs), agent.act(&obs, true));
    }

    #[test]
    fn stochastic_actions_replay_under_same_seed() {
        let obs = Observation([0.1; OBS_DIM]);
        let mut a = Td3Agent::new(small_cfg(), 11);
        let mut b = Td3Agent::new(small_cfg(), 11);
        let xs: Vec<f64> = (0..5).map(|_| a.act(&obs, false).raw()).collect();
        let ys: Vec<f64> = (0..5).map(|_| b.act(&obs, false).raw()).collect();
        assert_eq!(xs, ys);
        assert!(xs.windows(2).any(|w| w[0] != w[1]));
        assert!(xs.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn targets_start_equal_to_online_networks() {
        let agent = Td3Agent::new(small_cfg(), 5);
        let (a, c1, c2) = agent.targets();
        assert_eq!(a, agent.actor());
        assert_eq!((c1, c2), agent.critics());
    }

    #[test]
    fn update_waits_for_a_full_batch() {
        let mut agent = Td3Agent::new(small_cfg(), 6);
        let mut buf = ReplayBuffer::new(64);
        for i in 0..7 {
            buf.push(transition(i, -0.1));
        }
        assert!(agent.update(&buf).skipped());
        assert_eq!(agent.updates(), 0);
        buf.push(transition(7, -0.1));
        let first = agent.update(&buf);
        assert!(first.critic.is_some());
        assert!(first.actor.is_none());
        let second = agent.update(&buf);
        assert!(second.actor.is_some());
        let (l1, l2) = second.critic.unwrap();
        assert!(l1.is_finite() && l2.is_finite());
    }

    #[test]
    fn critic_learns_constant_reward() {
        let mut agent = Td3Agent::new(
            Td3Config {
                discount: 0.0,
                critic_lr: 1e-2,
                ..small_cfg()
            },
            7,
        );
        let items: Vec<_> = (0..32).map(|i| transition(i, 2.5)).collect();
        let batch = Batch::from_transitions(&items);
        let mut last = f64::INFINITY;
        for _ in 0..400 {
            last = agent.update_on_batch(&batch).critic.unwrap().0;
        }
        assert!(last < 1e-3, "critic loss {last}");
    }

    #[test]
    fn hash_tracks_config() {
        let a = Td3Config::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.tau = 0.01;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash_hex().len(), 64);
    }

    #[test]
    fn invalid_config_is_itemized() {
        let cfg = Td3Config {
            policy_delay: 0,
            batch_size: 0,
            actor_lr: -1.0,
            ..Default::default()
        };
        assert_eq!(cfg.problems().len(), 3);
        assert!(Td3Config::default().problems().is_empty());
    }
}
