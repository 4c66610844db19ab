//! `compute_reward` against a separately written evaluator over a 10⁴ grid.

use tactile_nav::train::{compute_reward, RewardConfig, StepState};

fn evaluator(prev: &StepState, cur: &StepState) -> f64 {
    let goal = if cur.d_g < 0.3 { 10.0 } else { 0.0 };
    let progress = if prev.d_g - cur.d_g > 1e-4 { 0.01 } else { -0.05 };
    let a = if cur.theta_g.abs() > 0.5235 {
        -0.1 * cur.theta_g.abs()
    } else if cur.theta_g.abs() > prev.theta_g.abs() {
        -0.02
    } else {
        0.0
    };
    let nearest = cur.min_d_l;
    let proximity = if nearest < 0.5 { -0.1 * (0.5 - nearest) } else { 0.0 };
    let mut fmax = 0.0f64;
    let mut touching = false;
    for &f in &cur.forces {
        if f > 0.0 {
            touching = true;
        }
        fmax = fmax.max(f);
    }
    let contact = if touching { -0.01 * fmax } else { 0.0 };
    goal + progress + a + proximity + contact
}

#[test]
fn reward_matches_evaluator_on_grid() {
    check_reward_matches_evaluator_on_grid();
}

pub fn check_reward_matches_evaluator_on_grid() {
    let cfg = RewardConfig::default();
    let progress = [-0.5, -0.01, -1e-4, 0.0, 5e-5, 1e-4, 2e-4, 0.01, 0.05, 0.3];
    let theta = [-3.0, -1.0, -0.5235, -0.3, -0.05, 0.0, 0.05, 0.4, 0.6, 3.1];
    let ranges = [0.0, 0.05, 0.2, 0.3, 0.4999, 0.5, 0.7, 2.0, 10.0, 30.0];
    let forces = [0.0, 1e-9, 0.5, 1.0, 5.0, 20.0, 49.05, 80.0, 98.0, 98.1];
    let mut checked = 0;
    for (i, &dp) in progress.iter().enumerate() {
        for (j, &th) in theta.iter().enumerate() {
            for &r in &ranges {
                for (l, &f) in forces.iter().enumerate() {
                    // vary the goal distance so the terminal branch is covered
                    let d_prev = 0.2 + 0.1 * ((i + l) % 5) as f64;
                    let mut fs = [0.0; 6];
                    fs[l % 6] = f;
                    fs[(l + 2) % 6] = 0.5 * f;
                    let prev = StepState {
                        d_g: d_prev,
                        theta_g: theta[(j + 3) % 10],
                        min_d_l: 1.0,
                        forces: [0.0; 6],
                    };
                    let cur = StepState {
                        d_g: d_prev - dp,
                        theta_g: th,
                        min_d_l: r,
                        forces: fs,
                    };
                    assert_eq!(
                        compute_reward(&cfg, &prev, &cur),
                        evaluator(&prev, &cur),
                        "{prev:?} -> {cur:?}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 10_000);
}

#[test]
fn terminal_bonus_iff_inside_goal_radius() {
    check_terminal_bonus_iff_inside_goal_radius();
}

pub fn check_terminal_bonus_iff_inside_goal_radius() {
    let cfg = RewardConfig::default();
    for k in 0..=600 {
        let d = k as f64 * 0.001;
        let prev = StepState { d_g: d, theta_g: 0.0, min_d_l: 30.0, forces: [0.0; 6] };
        let cur = prev;
        let r = compute_reward(&cfg, &prev, &cur);
        // stationary: progress −0.05 only, plus the bonus
        let expect = if d < 0.3 { 10.0 - 0.05 } else { -0.05 };
        assert_eq!(r, expect, "d_g = {d}");
    }
}
