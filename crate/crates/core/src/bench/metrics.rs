use super::log::EpisodeLog;
use super::BenchError;
use crate::geometry::{Segment, Vec2};
use serde::{Deserialize, Serialize};

/// Published A*-EBand-RL results, shown next to measured rows in reports.
pub const PUBLISHED_RL_SUCCESS_RATE: f64 = 0.83;
pub const PUBLISHED_RL_COLLISIONS: f64 = 8.2;
pub const PUBLISHED_RL_TIME_TO_GOAL: f64 = 16.5;
pub const PUBLISHED_RL_PATH_LENGTH: f64 = 14.6;
pub const PUBLISHED_RL_RMSE: f64 = 2.31;
/// Range of published mean speeds across variants.
pub const PUBLISHED_SPEED_BAND: [f64; 2] = [0.27, 0.31];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trials: usize,
    pub success_rate: f64,
    /// Mean number of steps with any plate in contact, over all runs.
    pub collision_instances: f64,
    /// Mean over successful runs; NaN when none succeeded.
    pub time_to_goal: f64,
    /// Mean over successful runs; NaN when none succeeded.
    pub path_length: f64,
    pub final_position_error: f64,
    pub rmse_vs_reference: f64,
    /// Mean over runs of path length divided by duration.
    pub mean_speed: f64,
}

pub fn polyline_distance(p: Vec2, line: &[Vec2]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [a] => p.distance(*a),
        _ => line
            .windows(2)
            .map(|w| Segment::new(w[0], w[1]).distance_to(p))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Root mean square of each trajectory sample's distance to `reference`.
pub fn trajectory_rmse(log: &EpisodeLog, reference: &[Vec2]) -> f64 {
    let n = log.rows.len().max(1) as f64;
    let ss: f64 = log
        .rows
        .iter()
        .map(|r| polyline_distance(r.pose.position(), reference).powi(2))
        .sum();
    (ss / n).sqrt()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn compute_metrics(logs: &[EpisodeLog], goal: Vec2, reference: &[Vec2]) -> Result<MetricsReport, BenchError> {
    if logs.is_empty() || logs.iter().any(|l| l.rows.is_empty()) || reference.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let successes = || logs.iter().filter(|l| l.success());
    let n = logs.len();
    Ok(MetricsReport {
        trials: n,
        success_rate: successes().count() as f64 / n as f64,
        collision_instances: mean(logs.iter().map(|l| l.collision_steps() as f64)),
        time_to_goal: mean(successes().map(EpisodeLog::duration)),
        path_length: mean(successes().map(EpisodeLog::path_length)),
        final_position_error: mean(
            logs.iter()
                .map(|l| l.rows.last().expect("non-empty").pose.position().distance(goal)),
        ),
        rmse_vs_reference: mean(logs.iter().map(|l| trajectory_rmse(l, reference))),
        mean_speed: mean(logs.iter().map(|l| {
            let d = l.duration();
            if d > 0.0 {
                l.path_length() / d
            } else {
                0.0
            }
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::log::{LogRow, Outcome};
    use crate::sim::{Pose2D, Velocity2D};

    fn straight(offset: f64, outcome: Outcome, contacts: &[usize]) -> EpisodeLog {
        let rows = (0..=10)
            .map(|i| LogRow {
                t: i as f64 * 0.1,
                pose: Pose2D::new(i as f64 * 0.05, offset, 0.0),
                cmd: Velocity2D::ZERO,
                nav: Velocity2D::ZERO,
                reward: 0.0,
                n_contacts: contacts.get(i).copied().unwrap_or(0),
                f_c: [0.0; 6],
                d_l: [30.0; 18],
                outcome: if i == 10 { outcome } else { Outcome::Running },
            })
            .collect();
        EpisodeLog { rows }
    }

    fn reference() -> Vec<Vec2> {
        vec![Vec2::new(-1.0, 0.0), Vec2::new(2.0, 0.0)]
    }

    #[test]
    fn success_counting() {
        let mut logs = vec![straight(0.0, Outcome::GoalReached, &[]); 5];
        logs.push(straight(0.0, Outcome::Timeout, &[]));
        let m = compute_metrics(&logs, Vec2::new(0.5, 0.0), &reference()).unwrap();
        assert!((m.success_rate - 5.0 / 6.0).abs() < 1e-12);
        assert!((m.success_rate * 6.0 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_zero_and_constant_offset() {
        let on = straight(0.0, Outcome::GoalReached, &[]);
        let off = straight(1.0, Outcome::GoalReached, &[]);
        assert!(trajectory_rmse(&on, &reference()) < 1e-12);
        assert!((trajectory_rmse(&off, &reference()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multi_plate_step_counts_once() {
        let log = straight(0.0, Outcome::GoalReached, &[0, 3, 0, 1]);
        let m = compute_metrics(&[log], Vec2::new(0.5, 0.0), &reference()).unwrap();
        assert_eq!(m.collision_instances, 2.0);
        assert!((m.mean_speed - 0.5).abs() < 1e-12);
        assert!((m.path_length - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(compute_metrics(&[], Vec2::ZERO, &reference()), Err(BenchError::EmptyInput)));
    }
}
