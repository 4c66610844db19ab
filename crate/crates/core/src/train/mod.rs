//! Reward, advantage estimation, PPO and the curriculum training loop.

pub mod adam;
pub mod curriculum;
pub mod env;
pub mod gae;
pub mod ppo;
pub mod reward;

pub use adam::Adam;
pub use curriculum::{default_curriculum, CurriculumStage, Layout};
pub use env::{EnvConfig, Guidance, NavEnv, StepOutcome};
pub use gae::compute_gae;
pub use ppo::{ppo_loss, ppo_update, Learner, LossSample, PpoConfig, PpoStats, RolloutBuffer, Transition};
pub use reward::{compute_reward, ContactAggregate, RewardConfig, StepState};

use crate::policy::{gaussian_log_prob, sample_action, NetShape, PolicyError, PolicyWeights};
use crate::sensors::SCAN_NOISE_STD;
use crate::sim::SimError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("sequence lengths differ: rewards {rewards}, values {values}, dones {dones}")]
    LengthMismatch { rewards: usize, values: usize, dones: usize },
    #[error("non-finite gradient; update discarded")]
    NonFiniteGradient,
    #[error("rollout buffer is not full")]
    BufferNotFull,
    #[error("episode already terminated")]
    EpisodeOver,
    #[error("invalid config field `{0}`")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Everything a training run depends on besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub ppo: PpoConfig,
    pub reward: RewardConfig,
    pub curriculum: Vec<CurriculumStage>,
    /// Eval success rate that moves training to the next stage.
    pub advance_threshold: f64,
    pub scan_noise_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            ppo: PpoConfig::default(),
            reward: RewardConfig::default(),
            curriculum: default_curriculum(),
            advance_threshold: 0.8,
            scan_noise_std: SCAN_NOISE_STD,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |f: &str| TrainError::InvalidConfig(f.to_string());
        self.ppo.validate().map_err(bad)?;
        self.reward.validate().map_err(bad)?;
        if self.curriculum.is_empty() {
            return Err(bad("curriculum"));
        }
        for s in &self.curriculum {
            s.validate().map_err(bad)?;
        }
        if self
            .curriculum
            .windows(2)
            .any(|w| w[0].difficulty() > w[1].difficulty())
        {
            return Err(bad("curriculum"));
        }
        if !(0.0..=1.0).contains(&self.advance_threshold) {
            return Err(bad("advance_threshold"));
        }
        if !(self.scan_noise_std.is_finite() && self.scan_noise_std >= 0.0) {
            return Err(bad("scan_noise_std"));
        }
        Ok(())
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            reward: self.reward.clone(),
            scan_noise_std: self.scan_noise_std,
            ..EnvConfig::default()
        }
    }
}

/// Environment that resamples a scenario from its stage on every reset.
#[derive(Debug, Clone)]
pub struct CurriculumEnv {
    pub stage: CurriculumStage,
    pub env: NavEnv,
    cfg: EnvConfig,
    rng: ChaCha8Rng,
}

impl CurriculumEnv {
    pub fn new(stage: CurriculumStage, cfg: EnvConfig, seed: u64) -> Result<Self, TrainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = Self::fresh(&stage, &cfg, &mut rng)?;
        Ok(CurriculumEnv { stage, env, cfg, rng })
    }

    fn fresh(stage: &CurriculumStage, cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> Result<NavEnv, TrainError> {
        let scenario = stage.sample_scenario(rng);
        NavEnv::new(&scenario, rng.random(), cfg.clone())
    }

    pub fn reset(&mut self) -> Result<(), TrainError> {
        self.env = Self::fresh(&self.stage, &self.cfg, &mut self.rng)?;
        Ok(())
    }

    pub fn set_stage(&mut self, stage: CurriculumStage) -> Result<(), TrainError> {
        self.stage = stage;
        self.reset()
    }
}

/// Reward and outcome of a finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub reward: f64,
    pub success: bool,
    pub collision_steps: u32,
    pub length: u32,
}

/// Runs `net` on one control step of `env`: returns the executed command,
/// the raw action and its log-probability, and the value estimate.
pub fn act<R: Rng + ?Sized>(
    net: &PolicyWeights,
    env: &NavEnv,
    rng: &mut R,
    deterministic: bool,
) -> Result<PolicyStep, TrainError> {
    let obs = env.observation().to_f32();
    let out = net.forward(&obs)?;
    let mean = out.mean.map(f64::from);
    let log_std = out.log_std.map(f64::from);
    let (raw, _) = sample_action(&mean, &log_std, rng, deterministic);
    let action = raw.map(|a| a as f32);
    let log_prob = gaussian_log_prob(&out.mean, &out.log_std, &action);
    let action = action.map(f64::from);
    Ok(PolicyStep {
        obs: obs.map(f64::from),
        action,
        log_prob: f64::from(log_prob),
        value: f64::from(out.value),
        command: env.policy_command(&action),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyStep {
    pub obs: [f64; crate::sensors::OBSERVATION_LEN],
    pub action: [f64; 3],
    pub log_prob: f64,
    pub value: f64,
    pub command: crate::sim::Velocity2D,
}

/// Collects `horizon` control steps, resetting finished episodes. Returns
/// the buffer (advantages not yet computed), the executed commands, and
/// the episodes that ended inside it.
pub fn collect_rollout<R: Rng + ?Sized>(
    cenv: &mut CurriculumEnv,
    net: &PolicyWeights,
    horizon: usize,
    rng: &mut R,
    deterministic: bool,
    episode_reward: &mut f64,
) -> Result<(RolloutBuffer, Vec<crate::sim::Velocity2D>, Vec<EpisodeSummary>), TrainError> {
    let mut buf = RolloutBuffer::new(horizon);
    let mut commands = Vec::with_capacity(horizon);
    let mut episodes = Vec::new();
    for _ in 0..horizon {
        let step = act(net, &cenv.env, rng, deterministic)?;
        let out = cenv.env.step(step.command)?;
        *episode_reward += out.reward;
        let done = out.status.is_terminal();
        buf.push(Transition {
            obs: step.obs,
            action: step.action,
            log_prob: step.log_prob,
            value: step.value,
            reward: out.reward,
            done,
        });
        commands.push(step.command);
        if done {
            episodes.push(EpisodeSummary {
                reward: *episode_reward,
                success: cenv.env.goal_reached(),
                collision_steps: out.status.collision_step_count,
                length: out.status.step_count,
            });
            *episode_reward = 0.0;
            cenv.reset()?;
        }
    }
    buf.bootstrap_value = if buf.steps.last().is_some_and(|t| t.done) {
        0.0
    } else {
        let obs = cenv.env.observation().to_f32();
        f64::from(net.forward(&obs)?.value)
    };
    Ok((buf, commands, episodes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub timestep: u64,
    pub mean_eval_reward: f64,
    pub success_rate: f64,
    pub mean_collision_steps: f64,
    pub mean_episode_len: f64,
}

pub const CURVE_HEADER: &str = "timestep,mean_eval_reward,success_rate,mean_collision_steps,mean_episode_len";

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.timestep, r.mean_eval_reward, r.success_rate, r.mean_collision_steps, r.mean_episode_len
        );
    }
    s
}

/// Deterministic-policy episodes on fixed scenario draws from `stage`.
pub fn evaluate(
    net: &PolicyWeights,
    stage: &CurriculumStage,
    cfg: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeSummary>, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let scenario = stage.sample_scenario(&mut rng);
        let mut env = NavEnv::new(&scenario, rng.random(), cfg.clone())?;
        let mut total = 0.0;
        while !env.is_done() {
            let step = act(net, &env, &mut rng, true)?;
            total += env.step(step.command)?.reward;
        }
        out.push(EpisodeSummary {
            reward: total,
            success: env.goal_reached(),
            collision_steps: env.status.collision_step_count,
            length: env.status.step_count,
        });
    }
    Ok(out)
}

fn summarize(timestep: u64, eps: &[EpisodeSummary]) -> CurveRow {
    let n = eps.len().max(1) as f64;
    CurveRow {
        timestep,
        mean_eval_reward: eps.iter().map(|e| e.reward).sum::<f64>() / n,
        success_rate: eps.iter().filter(|e| e.success).count() as f64 / n,
        mean_collision_steps: eps.iter().map(|e| f64::from(e.collision_steps)).sum::<f64>() / n,
        mean_episode_len: eps.iter().map(|e| f64::from(e.length)).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: PolicyWeights,
    /// Best evaluation at the most advanced stage reached.
    pub best: PolicyWeights,
    pub curve: Vec<CurveRow>,
    /// Index into the curriculum of the final stage.
    pub final_stage: usize,
    pub updates: Vec<PpoStats>,
    pub skipped_updates: usize,
}

/// Fixed seeds for the evaluation episodes of a run.
fn eval_seed(seed: u64, stage: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (0xE7A1_0000 + stage as u64)
}

/// Alternates rollouts and PPO updates for `cfg.ppo.total_timesteps`
/// control steps, evaluating at the start, every `eval_every` steps and at
/// the end, and advancing the curriculum on successful evaluations.
pub fn train(cfg: &TrainConfig, seed: u64, initial: Option<PolicyWeights>) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let env_cfg = cfg.env_config();
    let weights = initial.unwrap_or_else(|| PolicyWeights::init(NetShape::standard(), seed));
    let mut learner = Learner::new(weights, &cfg.ppo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA11C_E5ED);
    let mut stage = 0usize;
    let mut cenv = CurriculumEnv::new(cfg.curriculum[0].clone(), env_cfg.clone(), rng.random())?;

    let mut curve = Vec::new();
    let mut updates = Vec::new();
    let mut skipped = 0;
    let mut best = learner.weights.clone();
    let mut best_reward = f64::NEG_INFINITY;
    let total = cfg.ppo.total_timesteps;
    if total == 0 {
        return Ok(TrainOutcome {
            weights: learner.weights,
            best,
            curve,
            final_stage: 0,
            updates,
            skipped_updates: 0,
        });
    }

    let mut eval = |t: u64,
                    w: &PolicyWeights,
                    stage: &mut usize,
                    cenv: &mut CurriculumEnv,
                    curve: &mut Vec<CurveRow>|
     -> Result<(), TrainError> {
        let eps = evaluate(w, &cfg.curriculum[*stage], &env_cfg, cfg.ppo.eval_episodes, eval_seed(seed, *stage))?;
        let row = summarize(t, &eps);
        log::info!(
            "t={t} stage={} reward={:.3} success={:.2} collisions={:.1}",
            cfg.curriculum[*stage].id,
            row.mean_eval_reward,
            row.success_rate,
            row.mean_collision_steps
        );
        curve.push(row);
        if row.mean_eval_reward > best_reward {
            best_reward = row.mean_eval_reward;
            best = w.clone();
        }
        if row.success_rate >= cfg.advance_threshold && *stage + 1 < cfg.curriculum.len() {
            *stage += 1;
            best_reward = f64::NEG_INFINITY;
            cenv.set_stage(cfg.curriculum[*stage].clone())?;
            log::info!("advancing to stage {}", cfg.curriculum[*stage].id);
        }
        Ok(())
    };

    eval(0, &learner.weights, &mut stage, &mut cenv, &mut curve)?;
    let mut t = 0u64;
    let mut next_eval = cfg.ppo.eval_every;
    let mut episode_reward = 0.0;
    while t < total {
        let horizon = (cfg.ppo.rollout_horizon as u64).min(total - t) as usize;
        let (mut buf, _, _) = collect_rollout(&mut cenv, &learner.weights, horizon, &mut rng, false, &mut episode_reward)?;
        buf.finish(cfg.ppo.gamma, cfg.ppo.gae_lambda)?;
        match ppo_update(&mut learner, &buf, &cfg.ppo, &mut rng) {
            Ok(s) => updates.push(s),
            Err(TrainError::NonFiniteGradient) => {
                log::warn!("non-finite gradient at t={t}; update skipped");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
        t += horizon as u64;
        if t >= next_eval && t < total {
            while next_eval <= t {
                next_eval += cfg.ppo.eval_every;
            }
            eval(t, &learner.weights, &mut stage, &mut cenv, &mut curve)?;
            episode_reward = 0.0;
        }
    }
    eval(t, &learner.weights, &mut stage, &mut cenv, &mut curve)?;
    drop(eval);
    Ok(TrainOutcome {
        weights: learner.weights,
        best,
        curve,
        final_stage: stage,
        updates,
        skipped_updates: skipped,
    })
}
