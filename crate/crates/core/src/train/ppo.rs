//! Clipped-surrogate PPO over a shared actor-critic trunk.

use super::adam::Adam;
use super::gae::compute_gae;
use super::TrainError;
use crate::policy::network::{cast, ActorCritic, PolicyWeights};
use crate::policy::{gaussian_entropy, gaussian_log_prob, ACTION_DIM};
use crate::sensors::OBSERVATION_LEN;
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub lr: f64,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub clip: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub rollout_horizon: usize,
    pub total_timesteps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub adam_betas: [f64; 2],
    pub adam_eps: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            lr: 1e-4,
            gamma: 0.99,
            entropy_coef: 1e-2,
            clip: 0.2,
            gae_lambda: 0.95,
            epochs: 10,
            minibatches: 32,
            rollout_horizon: 2048,
            total_timesteps: 1_000_000,
            eval_every: 10_000,
            eval_episodes: 5,
            adam_betas: [0.9, 0.999],
            adam_eps: 1e-8,
            value_coef: 0.5,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    /// Returns the name of the first invalid field.
    pub fn validate(&self) -> Result<(), &'static str> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err("lr");
        }
        if !unit(self.gamma) {
            return Err("gamma");
        }
        if !(self.entropy_coef.is_finite() && self.entropy_coef >= 0.0) {
            return Err("entropy_coef");
        }
        if !(self.clip.is_finite() && self.clip > 0.0) {
            return Err("clip");
        }
        if !unit(self.gae_lambda) {
            return Err("gae_lambda");
        }
        if self.epochs == 0 {
            return Err("epochs");
        }
        if self.minibatches == 0 || self.minibatches > self.rollout_horizon {
            return Err("minibatches");
        }
        if self.rollout_horizon == 0 {
            return Err("rollout_horizon");
        }
        if self.eval_every == 0 {
            return Err("eval_every");
        }
        if self.eval_episodes == 0 {
            return Err("eval_episodes");
        }
        if !self.adam_betas.iter().all(|&b| (0.0..1.0).contains(&b)) {
            return Err("adam_betas");
        }
        if !(self.adam_eps.is_finite() && self.adam_eps >= 0.0) {
            return Err("adam_eps");
        }
        if !(self.value_coef.is_finite() && self.value_coef >= 0.0) {
            return Err("value_coef");
        }
        if !(self.max_grad_norm > 0.0) {
            return Err("max_grad_norm");
        }
        Ok(())
    }
}

/// One control step as seen by the learner. Values computed by the f32
/// network are stored widened, so they convert back exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub obs: [f64; OBSERVATION_LEN],
    pub action: [f64; ACTION_DIM],
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub capacity: usize,
    pub steps: Vec<Transition>,
    /// Value estimate of the state after the last step.
    pub bootstrap_value: f64,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        RolloutBuffer {
            capacity,
            steps: Vec::with_capacity(capacity),
            bootstrap_value: 0.0,
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.steps.len() == self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        assert!(!self.is_full(), "rollout buffer over capacity");
        self.steps.push(t);
    }

    pub fn finish(&mut self, gamma: f64, lambda: f64) -> Result<(), TrainError> {
        if !self.is_full() {
            return Err(TrainError::BufferNotFull);
        }
        let r: Vec<f64> = self.steps.iter().map(|s| s.reward).collect();
        let v: Vec<f64> = self.steps.iter().map(|s| s.value).collect();
        let d: Vec<bool> = self.steps.iter().map(|s| s.done).collect();
        let (a, ret) = compute_gae(&r, &v, &d, self.bootstrap_value, gamma, lambda)?;
        self.advantages = a;
        self.returns = ret;
        Ok(())
    }
}

/// Shifts and scales to zero mean, unit (population) standard deviation.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    adv.iter().map(|a| (a - mean) / std).collect()
}

/// A minibatch sample with its (normalized) advantage and return target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSample {
    pub obs: [f64; OBSERVATION_LEN],
    pub action: [f64; ACTION_DIM],
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Mean minibatch loss `−surrogate − c_ent·H + c_v·(V − R)²`; when `grad`
/// is given, its exact gradient is accumulated into it.
pub fn ppo_loss<T: Float>(
    net: &ActorCritic<T>,
    batch: &[LossSample],
    clip: f64,
    entropy_coef: f64,
    value_coef: f64,
    mut grad: Option<&mut [T]>,
) -> Result<LossTerms, TrainError> {
    let n = batch.len() as f64;
    let inv_n: T = cast(1.0 / n);
    let (lo, hi) = (cast::<T>(1.0 - clip), cast::<T>(1.0 + clip));
    let mut terms = LossTerms::default();
    let mut obs = vec![T::zero(); net.shape.input];
    for s in batch {
        for (o, &v) in obs.iter_mut().zip(s.obs.iter()) {
            *o = cast(v);
        }
        let (out, cache) = net.forward_cached(&obs)?;
        let action: [T; ACTION_DIM] = s.action.map(cast);
        let adv: T = cast(s.advantage);
        let logp = gaussian_log_prob(&out.mean, &out.log_std, &action);
        let log_ratio = logp - cast(s.old_log_prob);
        let ratio = log_ratio.exp();
        let unclipped = ratio * adv;
        let clipped = ratio.max(lo).min(hi) * adv;
        let surrogate = unclipped.min(clipped);
        let v_err = out.value - cast(s.ret);

        terms.policy_loss -= to_f64(surrogate);
        terms.value_loss += to_f64(v_err * v_err);
        terms.approx_kl += to_f64((ratio - T::one()) - log_ratio);
        if (ratio - T::one()).abs() > cast(clip) {
            terms.clip_fraction += 1.0;
        }

        if let Some(g) = grad.as_deref_mut() {
            // d(-surrogate)/d log π, nonzero only on the unclipped branch
            let d_logp = if unclipped <= clipped { -unclipped * inv_n } else { T::zero() };
            let mut d_mean = [T::zero(); ACTION_DIM];
            let mut d_log_std = [T::zero(); ACTION_DIM];
            for i in 0..ACTION_DIM {
                let var = (out.log_std[i] + out.log_std[i]).exp();
                let diff = action[i] - out.mean[i];
                d_mean[i] = d_logp * diff / var;
                d_log_std[i] = d_logp * (diff * diff / var - T::one());
            }
            let d_value = cast::<T>(2.0 * value_coef) * v_err * inv_n;
            net.backward(&cache, &d_mean, &d_log_std, d_value, g);
        }
    }
    let log_std = net.log_std();
    terms.entropy = to_f64(gaussian_entropy(&log_std));
    if let Some(g) = grad {
        let offset = log_std_offset(net);
        for i in 0..ACTION_DIM {
            g[offset + i] = g[offset + i] - cast::<T>(entropy_coef);
        }
    }
    terms.policy_loss /= n;
    terms.value_loss /= n;
    terms.approx_kl /= n;
    terms.clip_fraction /= n;
    terms.total = terms.policy_loss - entropy_coef * terms.entropy + value_coef * terms.value_loss;
    Ok(terms)
}

fn to_f64<T: Float>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn log_std_offset<T: Float>(net: &ActorCritic<T>) -> usize {
    let tensors = net.shape.tensors();
    let idx = tensors.iter().position(|t| t.name == "log_std").expect("log_std tensor");
    tensors[..idx].iter().map(|t| t.len()).sum()
}

/// Mean of per-minibatch statistics over a whole update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Ratio-derived statistics of the very first minibatch.
    pub first_clip_fraction: f64,
    pub first_approx_kl: f64,
}

/// Optimizer plus learner weights.
#[derive(Debug, Clone)]
pub struct Learner {
    pub weights: PolicyWeights,
    pub optimizer: Adam<f32>,
}

impl Learner {
    pub fn new(weights: PolicyWeights, cfg: &PpoConfig) -> Self {
        let n = weights.params.len();
        Learner {
            weights,
            optimizer: Adam::new(n, cfg.lr, cfg.adam_betas, cfg.adam_eps),
        }
    }
}

/// Epochs of shuffled minibatch descent on a finished buffer. On a
/// non-finite gradient the learner is restored to its state on entry.
pub fn ppo_update<R: Rng + ?Sized>(
    learner: &mut Learner,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<PpoStats, TrainError> {
    if buffer.advantages.len() != buffer.steps.len() || buffer.steps.is_empty() {
        return Err(TrainError::BufferNotFull);
    }
    let adv = normalize_advantages(&buffer.advantages);
    let samples: Vec<LossSample> = buffer
        .steps
        .iter()
        .zip(adv.iter().zip(&buffer.returns))
        .map(|(t, (&a, &r))| LossSample {
            obs: t.obs,
            action: t.action,
            old_log_prob: t.log_prob,
            advantage: a,
            ret: r,
        })
        .collect();

    let saved = learner.clone();
    let n = samples.len();
    let mb = cfg.minibatches.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = PpoStats::default();
    let mut count = 0.0;
    let mut grad = vec![0.0f32; learner.weights.params.len()];
    let mut batch = Vec::with_capacity(n / mb + 1);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for k in 0..mb {
            let (a, b) = (k * n / mb, (k + 1) * n / mb);
            batch.clear();
            batch.extend(order[a..b].iter().map(|&i| samples[i]));
            grad.iter_mut().for_each(|g| *g = 0.0);
            let t = ppo_loss(&learner.weights, &batch, cfg.clip, cfg.entropy_coef, cfg.value_coef, Some(&mut grad))?;
            let norm = grad.iter().map(|&g| f64::from(g).powi(2)).sum::<f64>().sqrt();
            if !norm.is_finite() || !t.total.is_finite() {
                *learner = saved;
                return Err(TrainError::NonFiniteGradient);
            }
            if norm > cfg.max_grad_norm {
                let s = (cfg.max_grad_norm / norm) as f32;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            learner.optimizer.step(&mut learner.weights.params, &grad);
            if count == 0.0 {
                stats.first_clip_fraction = t.clip_fraction;
                stats.first_approx_kl = t.approx_kl;
            }
            stats.policy_loss += t.policy_loss;
            stats.value_loss += t.value_loss;
            stats.entropy += t.entropy;
            stats.approx_kl += t.approx_kl;
            stats.clip_fraction += t.clip_fraction;
            count += 1.0;
        }
    }
    if !learner.weights.is_finite() {
        *learner = saved;
        return Err(TrainError::NonFiniteGradient);
    }
    stats.policy_loss /= count;
    stats.value_loss /= count;
    stats.entropy /= count;
    stats.approx_kl /= count;
    stats.clip_fraction /= count;
    Ok(stats)
}
