//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 regardless of individual verdicts unless
//! `TACTILE_NAV_ACCEPTANCE_STRICT=1` is set.

#![allow(dead_code)]

#[path = "../../core/tests/astar_oracle.rs"]
mod astar_oracle;
#[path = "../../core/tests/numeric_oracles.rs"]
mod numeric_oracles;
#[path = "../../core/tests/reward_table.rs"]
mod reward_table;
#[path = "../../core/tests/sensor_oracle.rs"]
mod sensor_oracle;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;
use tactile_nav::bench::{self, Comparison, MetricsReport, Outcome, PlannerVariant, Policy};
use tactile_nav::nav::{dwa_velocity, NavError};
use tactile_nav::scenarios;
use tactile_nav::sensors::{Normalization, FORCE_SATURATION};
use tactile_nav::sim::Velocity2D;
use tactile_nav::train::{self, TrainConfig, TrainOutcome};
use tactile_nav_cli::{cmd_bench, cmd_train};

const SEED: u64 = 0;
const LEARNING_STEPS: u64 = 100_000;
const CURRICULUM_STEPS: u64 = 500_000;
const DETERMINISM_STEPS: &str = "ppo.total_timesteps=10000";
const LAB_TRIALS: usize = 6;
const CORRIDOR_TRIALS: usize = 3;
const SPEED_BAND: [f64; 2] = [0.1, 0.5];

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    println!(
        "{} criterion {} ({}): {}",
        if v.pass { "PASS" } else { "FAIL" },
        v.id,
        v.name,
        v.detail
    );
}

/// Runs a panicking check and turns the outcome into a verdict.
fn oracle(id: u32, name: &'static str, checks: &[fn()]) -> Verdict {
    let t0 = Instant::now();
    let prev = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failure = None;
    for check in checks {
        if let Err(e) = panic::catch_unwind(AssertUnwindSafe(check)) {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            failure = Some(msg);
            break;
        }
    }
    panic::set_hook(prev);
    let secs = t0.elapsed().as_secs_f64();
    Verdict {
        id,
        name,
        pass: failure.is_none() && secs < 60.0,
        detail: match failure {
            None => format!("{secs:.1} s"),
            Some(m) => m,
        },
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(tmp: &Path) -> Verdict {
    let t0 = Instant::now();
    let set = [DETERMINISM_STEPS.to_string()];
    let (a, b) = (tmp.join("train_a"), tmp.join("train_b"));
    cmd_train(None, Some(SEED), &a, &set).unwrap();
    cmd_train(None, Some(SEED), &b, &set).unwrap();
    let curves_equal = fs::read(a.join("curve.csv")).unwrap() == fs::read(b.join("curve.csv")).unwrap();

    let ckpt = a.join("policy.ckpt");
    let scen = ["lab".to_string()];
    let variants: Vec<String> = PlannerVariant::ALL.iter().map(|v| v.name().to_string()).collect();
    let (x, y) = (tmp.join("bench_a"), tmp.join("bench_b"));
    cmd_bench(&scen, &variants, 2, Some(&ckpt), &x, SEED, 1).unwrap();
    cmd_bench(&scen, &variants, 2, Some(&ckpt), &y, SEED, 4).unwrap();
    let logs_equal = dir_bytes(&x.join("logs")) == dir_bytes(&y.join("logs"))
        && fs::read(x.join("report.csv")).unwrap() == fs::read(y.join("report.csv")).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    Verdict {
        id: 5,
        name: "determinism",
        pass: curves_equal && logs_equal && secs < 600.0,
        detail: format!("curves identical {curves_equal}, bench logs identical {logs_equal}, {secs:.0} s"),
    }
}

fn learning(out: &TrainOutcome) -> Verdict {
    let first = out.curve.first().expect("curve has the initial evaluation");
    let last = out.curve.last().expect("curve has a final evaluation");
    let pass = last.success_rate >= 0.8
        && last.mean_eval_reward > first.mean_eval_reward
        && (-10.0..=10.0).contains(&last.mean_eval_reward);
    Verdict {
        id: 6,
        name: "learning on stage 1",
        pass,
        detail: format!(
            "success {:.2} -> {:.2}, eval reward {:.3} -> {:.3}",
            first.success_rate, last.success_rate, first.mean_eval_reward, last.mean_eval_reward
        ),
    }
}

fn metrics<'a>(cmp: &'a Comparison, scenario: &str, v: PlannerVariant) -> &'a MetricsReport {
    &cmp.rows
        .iter()
        .find(|r| r.scenario == scenario && r.variant == v)
        .expect("row present")
        .metrics
}

fn replication(lab: &Comparison) -> Verdict {
    let rl = metrics(lab, "lab", PlannerVariant::AstarEBandRL);
    let eband = metrics(lab, "lab", PlannerVariant::AstarEBand);
    let dwa = metrics(lab, "lab", PlannerVariant::AstarDWA);
    let apf = metrics(lab, "lab", PlannerVariant::AstarEBandAPF);
    Verdict {
        id: 7,
        name: "lab ordering",
        pass: rl.collision_instances < eband.collision_instances
            && rl.collision_instances < dwa.collision_instances
            && rl.success_rate >= apf.success_rate,
        detail: format!(
            "collisions rl {:.1} / eband {:.1} / dwa {:.1}; success rl {:.2} vs apf {:.2}",
            rl.collision_instances, eband.collision_instances, dwa.collision_instances, rl.success_rate, apf.success_rate
        ),
    }
}

fn squeeze(corridor: &Comparison) -> Verdict {
    let spec = scenarios::corridor();
    let rl: Vec<_> = corridor
        .episodes
        .iter()
        .filter(|e| e.variant == PlannerVariant::AstarEBandRL)
        .collect();
    let reached = rl.iter().all(|e| e.log.success());
    let max_fc = rl
        .iter()
        .flat_map(|e| e.log.rows.iter().flat_map(|r| r.f_c))
        .fold(0.0f64, f64::max);
    let grid = bench::static_map(&spec);
    let direct = dwa_velocity(&spec.start_pose, &Velocity2D::ZERO, spec.goal, &grid);
    let dwa_refuses = matches!(direct, Err(NavError::AllTrajectoriesCollide) | Err(NavError::NoPath));
    let dwa_logged = corridor
        .episodes
        .iter()
        .filter(|e| e.variant == PlannerVariant::AstarDWA)
        .all(|e| !e.log.success() && e.log.rows.iter().any(|r| r.outcome == Outcome::PlannerError));
    Verdict {
        id: 8,
        name: "corridor squeeze",
        pass: reached && max_fc < FORCE_SATURATION && dwa_refuses && dwa_logged,
        detail: format!(
            "rl reached {reached}, max F_c {max_fc:.2} N, dwa at start {:?}, dwa logged errors {dwa_logged}",
            direct.err()
        ),
    }
}

fn speed(lab: &Comparison) -> Verdict {
    let v = metrics(lab, "lab", PlannerVariant::AstarEBandRL).mean_speed;
    let all: Vec<String> = lab
        .rows
        .iter()
        .map(|r| format!("{} {:.3}", r.variant.name(), r.metrics.mean_speed))
        .collect();
    Verdict {
        id: 9,
        name: "mean speed",
        pass: (SPEED_BAND[0]..=SPEED_BAND[1]).contains(&v),
        detail: format!("trained variant {v:.3} m/s; {}", all.join(", ")),
    }
}

fn main() {
    let tmp = tempfile::TempDir::new().unwrap();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut verdicts = vec![
        oracle(
            1,
            "sensor oracle",
            &[
                sensor_oracle::check_analytic_lidar_matches_ray_marching,
                sensor_oracle::check_min_pool_matches_brute_force,
            ],
        ),
        oracle(2, "planner oracle", &[astar_oracle::check_astar_cost_equals_dijkstra]),
        oracle(
            3,
            "numeric oracles",
            &[
                numeric_oracles::check_forward_matches_naive_oracle,
                numeric_oracles::check_loss_gradient_matches_finite_differences,
                numeric_oracles::check_gae_matches_hand_unrolled_recursion,
                numeric_oracles::check_adam_matches_closed_form_iteration,
            ],
        ),
        oracle(
            4,
            "reward table",
            &[
                reward_table::check_reward_matches_evaluator_on_grid,
                reward_table::check_terminal_bonus_iff_inside_goal_radius,
            ],
        ),
    ];
    for v in &verdicts {
        report(v);
    }

    let (det, stage1, full) = std::thread::scope(|s| {
        let det = s.spawn(|| determinism(tmp.path()));
        let stage1 = s.spawn(|| {
            let mut cfg = TrainConfig::default();
            cfg.curriculum.truncate(1);
            cfg.ppo.total_timesteps = LEARNING_STEPS;
            train::train(&cfg, SEED, None).unwrap()
        });
        let full = s.spawn(|| {
            let mut cfg = TrainConfig::default();
            cfg.ppo.total_timesteps = CURRICULUM_STEPS;
            train::train(&cfg, SEED, None).unwrap()
        });
        (det.join().unwrap(), stage1.join().unwrap(), full.join().unwrap())
    });
    for v in [det, learning(&stage1)] {
        report(&v);
        verdicts.push(v);
    }

    let policy = Policy {
        weights: full.best.clone(),
        norm: Normalization::default(),
    };
    let variants = [
        PlannerVariant::AstarEBandRL,
        PlannerVariant::AstarEBandAPF,
        PlannerVariant::AstarEBand,
        PlannerVariant::AstarDWA,
    ];
    let lab = bench::compare_variants(&[scenarios::lab()], &variants, LAB_TRIALS, SEED, Some(&policy), jobs).unwrap();
    let corridor =
        bench::compare_variants(&[scenarios::corridor()], &variants, CORRIDOR_TRIALS, SEED, Some(&policy), jobs)
            .unwrap();
    for v in [replication(&lab), squeeze(&corridor), speed(&lab)] {
        report(&v);
        verdicts.push(v);
    }

    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 && std::env::var("TACTILE_NAV_ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
