//! Built-in scenarios for benchmarking and the generators behind the
//! training curriculum.

use crate::geometry::{Bounds, Segment, Vec2};
use crate::sim::{ObstacleSpec, Pose2D, ScenarioSpec};
use rand::Rng;
use std::f64::consts::PI;

pub const BUILTIN: [&str; 5] = ["empty", "lab", "lab_static", "open_ground", "corridor"];

pub const OBSTACLE_RADIUS: f64 = 0.3;
pub const LAB_OBSTACLE_SPEED: f64 = 0.5;

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    match name {
        "empty" => Some(empty()),
        "lab" => Some(lab()),
        "lab_static" => Some(lab_static()),
        "open_ground" => Some(open_ground()),
        "corridor" => Some(corridor()),
        _ => None,
    }
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> [Segment; 4] {
    Bounds::new(Vec2::new(x0, y0), Vec2::new(x1, y1)).edges()
}

pub fn empty() -> ScenarioSpec {
    ScenarioSpec {
        name: "empty".into(),
        bounds: Bounds::new(Vec2::ZERO, Vec2::new(8.0, 6.0)),
        walls: vec![],
        obstacles: vec![],
        start_pose: Pose2D::new(1.0, 3.0, 0.0),
        goal: Vec2::new(7.0, 3.0),
    }
}

pub const LAB_BOUNDS: Bounds = Bounds::new(Vec2::ZERO, Vec2::new(10.0, 8.0));

/// Furniture of the 10 m × 8 m lab: a partition off the south wall, a
/// table, a desk and a shelf along the north wall.
pub fn lab_walls() -> Vec<Segment> {
    let mut w = vec![Segment::new(Vec2::new(5.0, 0.0), Vec2::new(5.0, 3.0))];
    w.extend(rect(3.0, 5.5, 4.5, 6.5));
    w.extend(rect(6.5, 2.0, 8.0, 3.0));
    w.extend(rect(6.5, 7.4, 9.5, 8.0));
    w
}

fn lab_obstacles(speed: f64) -> Vec<ObstacleSpec> {
    [(3.0, 3.5), (6.0, 4.5), (8.5, 5.0), (2.0, 6.5)]
        .iter()
        .map(|&(x, y)| ObstacleSpec {
            center: Vec2::new(x, y),
            radius: OBSTACLE_RADIUS,
            speed_range: [-speed, speed],
            resample_prob: crate::sim::DEFAULT_RESAMPLE_PROB,
            velocity: None,
        })
        .collect()
}

/// Cluttered room with four wandering discs.
pub fn lab() -> ScenarioSpec {
    ScenarioSpec {
        name: "lab".into(),
        bounds: LAB_BOUNDS,
        walls: lab_walls(),
        obstacles: lab_obstacles(LAB_OBSTACLE_SPEED),
        start_pose: Pose2D::new(1.0, 1.0, 0.0),
        goal: Vec2::new(9.0, 6.5),
    }
}

/// The lab without moving discs.
pub fn lab_static() -> ScenarioSpec {
    ScenarioSpec {
        name: "lab_static".into(),
        obstacles: vec![],
        ..lab()
    }
}

/// Wide open field crossed by discs on fixed straight-line courses.
pub fn open_ground() -> ScenarioSpec {
    let courses = [
        ((6.0, 4.0), (0.0, 0.3)),
        ((8.0, 16.0), (0.0, -0.3)),
        ((10.0, 7.0), (0.2, 0.2)),
        ((12.0, 13.0), (-0.2, -0.2)),
        ((14.0, 5.0), (-0.1, 0.3)),
        ((15.0, 15.0), (0.1, -0.3)),
    ];
    ScenarioSpec {
        name: "open_ground".into(),
        bounds: Bounds::new(Vec2::ZERO, Vec2::new(20.0, 20.0)),
        walls: vec![],
        obstacles: courses
            .iter()
            .map(|&((x, y), (vx, vy))| ObstacleSpec {
                center: Vec2::new(x, y),
                radius: OBSTACLE_RADIUS,
                speed_range: [-0.3, 0.3],
                resample_prob: 0.0,
                velocity: Some(Vec2::new(vx, vy)),
            })
            .collect(),
        start_pose: Pose2D::new(2.0, 10.0, 0.0),
        goal: Vec2::new(18.0, 10.0),
    }
}

/// Corridor 0.8 m wide, 1.6 footprint diameters; the robot starts inside.
pub fn corridor() -> ScenarioSpec {
    ScenarioSpec {
        name: "corridor".into(),
        bounds: Bounds::new(Vec2::ZERO, Vec2::new(8.0, 0.8)),
        walls: vec![],
        obstacles: vec![],
        start_pose: Pose2D::new(0.6, 0.4, 0.0),
        goal: Vec2::new(7.4, 0.4),
    }
}

fn wall_clearance(p: Vec2, walls: &[Segment]) -> f64 {
    walls.iter().map(|w| w.distance_to(p)).fold(f64::INFINITY, f64::min)
}

/// Start pose with random heading and a goal at a distance drawn from
/// `goal_range`, both at least `margin` from the bounds and every wall.
pub fn sample_start_goal<R: Rng + ?Sized>(
    rng: &mut R,
    bounds: &Bounds,
    walls: &[Segment],
    goal_range: [f64; 2],
    margin: f64,
) -> (Pose2D, Vec2) {
    let inner = Bounds::new(
        bounds.min + Vec2::new(margin, margin),
        bounds.max - Vec2::new(margin, margin),
    );
    let ok = |p: Vec2| inner.contains(p) && wall_clearance(p, walls) >= margin;
    loop {
        let s = Vec2::new(
            rng.random_range(inner.min.x..inner.max.x),
            rng.random_range(inner.min.y..inner.max.y),
        );
        let heading = rng.random_range(-PI..PI);
        let d = rng.random_range(goal_range[0]..=goal_range[1]);
        let phi = rng.random_range(-PI..PI);
        let g = s + Vec2::from_angle(phi) * d;
        if ok(s) && ok(g) {
            return (Pose2D::new(s.x, s.y, heading), g);
        }
    }
}

/// `count` discs away from the start, the goal and the walls.
pub fn sample_obstacles<R: Rng + ?Sized>(
    rng: &mut R,
    bounds: &Bounds,
    walls: &[Segment],
    start: Vec2,
    goal: Vec2,
    count: usize,
    speed: f64,
) -> Vec<ObstacleSpec> {
    let margin = OBSTACLE_RADIUS + 0.1;
    let mut out: Vec<ObstacleSpec> = Vec::with_capacity(count);
    while out.len() < count {
        let c = Vec2::new(
            rng.random_range(bounds.min.x + margin..bounds.max.x - margin),
            rng.random_range(bounds.min.y + margin..bounds.max.y - margin),
        );
        let clear = c.distance(start) >= 1.5
            && c.distance(goal) >= 0.8
            && wall_clearance(c, walls) >= margin
            && out.iter().all(|o| o.center.distance(c) >= 2.0 * OBSTACLE_RADIUS + 0.1);
        if clear {
            out.push(ObstacleSpec {
                center: c,
                radius: OBSTACLE_RADIUS,
                speed_range: [-speed, speed],
                resample_prob: crate::sim::DEFAULT_RESAMPLE_PROB,
                velocity: None,
            });
        }
    }
    out
}
