//! Per-step reward: goal bonus, progress, heading, proximity and contact terms.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactAggregate {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub goal_radius: f64,
    pub r_goal: f64,
    pub r_away: f64,
    pub r_toward: f64,
    /// Minimum decrease in goal distance that counts as progress.
    pub progress_eps: f64,
    pub a_heading_grow: f64,
    /// Heading error growth below this is treated as steady.
    pub heading_growth_tol: f64,
    pub heading_cone: f64,
    pub a_offcone_gain: f64,
    pub k_p: f64,
    pub k_f: f64,
    pub d_p: f64,
    pub contact_aggregate: ContactAggregate,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            goal_radius: 0.3,
            r_goal: 10.0,
            r_away: -0.05,
            r_toward: 0.01,
            progress_eps: 1e-4,
            a_heading_grow: -0.02,
            heading_growth_tol: 1e-6,
            heading_cone: 0.5235,
            a_offcone_gain: -0.1,
            k_p: 0.1,
            k_f: 0.01,
            d_p: 0.5,
            contact_aggregate: ContactAggregate::Max,
        }
    }
}

impl RewardConfig {
    /// Returns the name of the first invalid field.
    pub fn validate(&self) -> Result<(), &'static str> {
        let finite = [
            ("goal_radius", self.goal_radius),
            ("r_goal", self.r_goal),
            ("r_away", self.r_away),
            ("r_toward", self.r_toward),
            ("progress_eps", self.progress_eps),
            ("a_heading_grow", self.a_heading_grow),
            ("heading_growth_tol", self.heading_growth_tol),
            ("heading_cone", self.heading_cone),
            ("a_offcone_gain", self.a_offcone_gain),
            ("k_p", self.k_p),
            ("k_f", self.k_f),
            ("d_p", self.d_p),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(name);
        }
        if self.goal_radius <= 0.0 {
            return Err("goal_radius");
        }
        if self.d_p <= 0.0 {
            return Err("d_p");
        }
        if !(self.heading_cone > 0.0 && self.heading_cone < std::f64::consts::PI) {
            return Err("heading_cone");
        }
        if self.progress_eps < 0.0 {
            return Err("progress_eps");
        }
        if self.heading_growth_tol < 0.0 {
            return Err("heading_growth_tol");
        }
        Ok(())
    }
}

/// The quantities the reward looks at, sampled after a control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub d_g: f64,
    pub theta_g: f64,
    /// Minimum of the pooled scan.
    pub min_d_l: f64,
    pub forces: [f64; crate::sim::PLATE_COUNT],
}

pub fn compute_reward(cfg: &RewardConfig, prev: &StepState, cur: &StepState) -> f64 {
    let terminal = if cur.d_g < cfg.goal_radius { cfg.r_goal } else { 0.0 };

    let progress = if prev.d_g - cur.d_g > cfg.progress_eps {
        cfg.r_toward
    } else {
        cfg.r_away
    };

    let heading = if cur.theta_g.abs() > cfg.heading_cone {
        cfg.a_offcone_gain * cur.theta_g.abs()
    } else if cur.theta_g.abs() > prev.theta_g.abs() + cfg.heading_growth_tol {
        cfg.a_heading_grow
    } else {
        0.0
    };

    let proximity = if cur.min_d_l < cfg.d_p {
        -cfg.k_p * (cfg.d_p - cur.min_d_l)
    } else {
        0.0
    };

    let contact = if cur.forces.iter().any(|&f| f > 0.0) {
        let agg = match cfg.contact_aggregate {
            ContactAggregate::Max => cur.forces.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ContactAggregate::Min => cur.forces.iter().copied().fold(f64::INFINITY, f64::min),
        };
        -cfg.k_f * agg
    } else {
        0.0
    };

    terminal + progress + heading + proximity + contact
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(d_g: f64, theta_g: f64, min_d_l: f64, f: f64) -> StepState {
        StepState {
            d_g,
            theta_g,
            min_d_l,
            forces: [f, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn goal_bonus() {
        let cfg = RewardConfig::default();
        let r = compute_reward(&cfg, &state(0.4, 0.0, 5.0, 0.0), &state(0.25, 0.0, 5.0, 0.0));
        assert!((r - 10.01).abs() < 1e-12);
    }

    #[test]
    fn stationary_off_cone() {
        let cfg = RewardConfig::default();
        let s = state(3.0, 1.0, 5.0, 0.0);
        assert!((compute_reward(&cfg, &s, &s) - (-0.15)).abs() < 1e-12);
    }

    #[test]
    fn near_obstacle_moving_in() {
        let cfg = RewardConfig::default();
        let r = compute_reward(&cfg, &state(3.0, 0.1, 0.3, 0.0), &state(2.95, 0.1, 0.3, 0.0));
        assert!((r - (-0.01)).abs() < 1e-12);
    }

    #[test]
    fn saturated_contact_dominates_an_episode() {
        let cfg = RewardConfig::default();
        let prev = state(3.0, 0.0, 5.0, 0.0);
        let cur = state(3.0, 0.0, 5.0, 98.1);
        let per_step = compute_reward(&cfg, &prev, &cur) - compute_reward(&cfg, &prev, &prev);
        assert!((per_step + 0.981).abs() < 1e-12);
        assert!(per_step * 100.0 < -98.0 + 1e-9);
    }

    #[test]
    fn min_aggregate_ignores_single_plate_contact() {
        let cfg = RewardConfig {
            contact_aggregate: ContactAggregate::Min,
            ..RewardConfig::default()
        };
        let s = state(3.0, 0.0, 5.0, 50.0);
        assert!((compute_reward(&cfg, &s, &s) - (-0.05)).abs() < 1e-12);
    }

    #[test]
    fn validation_names_field() {
        let cfg = RewardConfig {
            d_p: 0.0,
            ..RewardConfig::default()
        };
        assert_eq!(cfg.validate(), Err("d_p"));
    }
}
