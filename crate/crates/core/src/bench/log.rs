//! Per-episode logs and their CSV form.

use super::BenchError;
use crate::sensors::SECTOR_COUNT;
use crate::sim::{Pose2D, Velocity2D, PLATE_COUNT};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Running,
    /// The planner failed on this step but the episode went on.
    PlannerError,
    GoalReached,
    CollisionLimit,
    Timeout,
    PlannerFailure,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::PlannerError => "planner_error",
            Outcome::GoalReached => "goal_reached",
            Outcome::CollisionLimit => "collision_limit",
            Outcome::Timeout => "timeout",
            Outcome::PlannerFailure => "planner_failure",
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, Outcome::Running | Outcome::PlannerError)
    }
}

impl FromStr for Outcome {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "running" => Outcome::Running,
            "planner_error" => Outcome::PlannerError,
            "goal_reached" => Outcome::GoalReached,
            "collision_limit" => Outcome::CollisionLimit,
            "timeout" => Outcome::Timeout,
            "planner_failure" => Outcome::PlannerFailure,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub pose: Pose2D,
    pub cmd: Velocity2D,
    pub nav: Velocity2D,
    pub reward: f64,
    /// Plates registering contact during the step.
    pub n_contacts: usize,
    pub f_c: [f64; PLATE_COUNT],
    pub d_l: [f64; SECTOR_COUNT],
    pub outcome: Outcome,
}

/// Rows at 0.1 s spacing starting from the initial state at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
}

impl EpisodeLog {
    pub fn outcome(&self) -> Outcome {
        self.rows.last().map_or(Outcome::Running, |r| r.outcome)
    }

    pub fn success(&self) -> bool {
        self.outcome() == Outcome::GoalReached
    }

    /// Steps with at least one plate in contact.
    pub fn collision_steps(&self) -> usize {
        self.rows.iter().skip(1).filter(|r| r.n_contacts > 0).count()
    }

    pub fn planner_errors(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::PlannerError | Outcome::PlannerFailure))
            .count()
    }

    pub fn max_force(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.f_c.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn duration(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    pub fn path_length(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[0].pose.position().distance(w[1].pose.position()))
            .sum()
    }
}

pub fn csv_header() -> String {
    let mut cols = vec![
        "t", "x", "y", "theta", "cmd_vx", "cmd_vy", "cmd_wz", "nav_vx", "nav_vy", "nav_wz", "reward", "n_contacts",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    cols.extend((0..PLATE_COUNT).map(|i| format!("fc_{i}")));
    cols.extend((0..SECTOR_COUNT).map(|i| format!("dl_{i}")));
    cols.push("outcome".into());
    cols.join(",")
}

/// Floats are written in shortest round-trip form, so parsing restores
/// them bit for bit.
pub fn to_csv(log: &EpisodeLog) -> String {
    let mut s = csv_header();
    s.push('\n');
    for r in &log.rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.pose.x,
            r.pose.y,
            r.pose.theta,
            r.cmd.vx,
            r.cmd.vy,
            r.cmd.wz,
            r.nav.vx,
            r.nav.vy,
            r.nav.wz,
            r.reward,
            r.n_contacts
        );
        for f in r.f_c {
            let _ = write!(s, ",{f}");
        }
        for d in r.d_l {
            let _ = write!(s, ",{d}");
        }
        let _ = writeln!(s, ",{}", r.outcome.as_str());
    }
    s
}

pub fn from_csv(text: &str) -> Result<EpisodeLog, BenchError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let want = csv_header();
    let got: Vec<&str> = header.split(',').collect();
    for (i, w) in want.split(',').enumerate() {
        if got.get(i) != Some(&w) {
            return Err(BenchError::Schema(w.to_string()));
        }
    }
    if got.len() != want.split(',').count() {
        return Err(BenchError::Schema(got[want.split(',').count()].to_string()));
    }
    let names: Vec<&str> = want.split(',').collect();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(BenchError::Parse {
                line: ln + 2,
                column: names.get(cells.len()).unwrap_or(&"outcome").to_string(),
            });
        }
        let num = |i: usize| -> Result<f64, BenchError> {
            cells[i].parse().map_err(|_| BenchError::Parse {
                line: ln + 2,
                column: names[i].to_string(),
            })
        };
        let n_contacts = cells[11].parse().map_err(|_| BenchError::Parse {
            line: ln + 2,
            column: "n_contacts".into(),
        })?;
        let mut f_c = [0.0; PLATE_COUNT];
        for (k, f) in f_c.iter_mut().enumerate() {
            *f = num(12 + k)?;
        }
        let mut d_l = [0.0; SECTOR_COUNT];
        for (k, d) in d_l.iter_mut().enumerate() {
            *d = num(12 + PLATE_COUNT + k)?;
        }
        let last = names.len() - 1;
        let outcome = cells[last].parse().map_err(|_| BenchError::Parse {
            line: ln + 2,
            column: "outcome".into(),
        })?;
        rows.push(LogRow {
            t: num(0)?,
            pose: Pose2D {
                x: num(1)?,
                y: num(2)?,
                theta: num(3)?,
            },
            cmd: Velocity2D::new(num(4)?, num(5)?, num(6)?),
            nav: Velocity2D::new(num(7)?, num(8)?, num(9)?),
            reward: num(10)?,
            n_contacts,
            f_c,
            d_l,
            outcome,
        });
    }
    Ok(EpisodeLog { rows })
}
