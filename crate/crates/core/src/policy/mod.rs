//! Policy/value network, Gaussian action sampling, and the blend of the
//! learned velocity with the elastic-band velocity.

pub mod checkpoint;
pub mod network;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use network::{ActorCritic, NetShape, PolicyOutput, PolicyWeights};

use crate::sim::Velocity2D;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const ACTION_DIM: usize = 3;
pub const MAX_LINEAR_SPEED: f64 = 0.5;
pub const MAX_ANGULAR_SPEED: f64 = 1.0;
pub const ACTION_SCALE: [f64; ACTION_DIM] = [MAX_LINEAR_SPEED, MAX_LINEAR_SPEED, MAX_ANGULAR_SPEED];
pub const LINEAR_DEADZONE: f64 = 0.01;
pub const ANGULAR_DEADZONE: f64 = 0.02;
pub const POLICY_WEIGHT: f64 = 1.0;
pub const EBAND_WEIGHT: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("bad magic bytes: expected {:?}", std::str::from_utf8(checkpoint::MAGIC).unwrap_or_default())]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("malformed tensor table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Sum of per-axis Gaussian log densities of `action`.
pub fn gaussian_log_prob<T: Float>(mean: &[T; ACTION_DIM], log_std: &[T; ACTION_DIM], action: &[T; ACTION_DIM]) -> T {
    let half_ln_2pi = network::cast::<T>(0.5 * (2.0 * std::f64::consts::PI).ln());
    let half = network::cast::<T>(0.5);
    (0..ACTION_DIM).fold(T::zero(), |acc, i| {
        let z = (action[i] - mean[i]) / log_std[i].exp();
        acc - half * z * z - log_std[i] - half_ln_2pi
    })
}

/// Entropy of the diagonal Gaussian.
pub fn gaussian_entropy<T: Float>(log_std: &[T; ACTION_DIM]) -> T {
    let c = network::cast::<T>(0.5 * (1.0 + (2.0 * std::f64::consts::PI).ln()));
    log_std.iter().fold(T::zero(), |acc, &l| acc + l + c)
}

/// Draws from the diagonal Gaussian; `deterministic` returns the mean.
pub fn sample_action<R: Rng + ?Sized>(
    mean: &[f64; ACTION_DIM],
    log_std: &[f64; ACTION_DIM],
    rng: &mut R,
    deterministic: bool,
) -> ([f64; ACTION_DIM], f64) {
    let action = if deterministic {
        *mean
    } else {
        std::array::from_fn(|i| {
            let n: f64 = StandardNormal.sample(rng);
            mean[i] + log_std[i].exp() * n
        })
    };
    (action, gaussian_log_prob(mean, log_std, &action))
}

/// `w₁·v_policy + w₂·v_eband`; a missing elastic-band velocity counts as zero.
pub fn blend_velocity(v_policy: &Velocity2D, v_eband: Option<&Velocity2D>) -> Velocity2D {
    let e = v_eband.copied().unwrap_or(Velocity2D::ZERO);
    Velocity2D::new(
        POLICY_WEIGHT * v_policy.vx + EBAND_WEIGHT * e.vx,
        POLICY_WEIGHT * v_policy.vy + EBAND_WEIGHT * e.vy,
        POLICY_WEIGHT * v_policy.wz + EBAND_WEIGHT * e.wz,
    )
}

/// Clips to motor limits, then zeroes components inside the deadzone.
pub fn clip_and_deadzone(v: &Velocity2D) -> Velocity2D {
    let f = |x: f64, max: f64, dead: f64| {
        let c = x.clamp(-max, max);
        if c.abs() < dead {
            0.0
        } else {
            c
        }
    };
    Velocity2D::new(
        f(v.vx, MAX_LINEAR_SPEED, LINEAR_DEADZONE),
        f(v.vy, MAX_LINEAR_SPEED, LINEAR_DEADZONE),
        f(v.wz, MAX_ANGULAR_SPEED, ANGULAR_DEADZONE),
    )
}
