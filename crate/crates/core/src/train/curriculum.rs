use crate::geometry::{Bounds, Segment, Vec2};
use crate::scenarios::{lab_walls, sample_obstacles, sample_start_goal, LAB_BOUNDS};
use crate::sim::ScenarioSpec;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// 10 m square, no interior walls.
    Open,
    /// 10 m square with two random interior wall segments.
    Walls,
    /// The furnished lab room.
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumStage {
    pub id: u32,
    pub layout: Layout,
    pub goal_distance: [f64; 2],
    pub obstacle_count: usize,
    /// Per-axis obstacle speed bound.
    pub obstacle_speed: f64,
}

const OPEN_BOUNDS: Bounds = Bounds::new(Vec2::ZERO, Vec2::new(10.0, 10.0));
const ENDPOINT_MARGIN: f64 = 0.8;

impl CurriculumStage {
    pub fn validate(&self) -> Result<(), &'static str> {
        let [lo, hi] = self.goal_distance;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi && hi <= 7.0) {
            return Err("goal_distance");
        }
        if self.obstacle_count > 12 {
            return Err("obstacle_count");
        }
        if !(self.obstacle_speed.is_finite() && self.obstacle_speed >= 0.0) {
            return Err("obstacle_speed");
        }
        Ok(())
    }

    /// Difficulty key: moving obstacles dominate, then wall complexity,
    /// then goal distance.
    pub fn difficulty(&self) -> (usize, u64, u8, u64) {
        let layout = match self.layout {
            Layout::Open => 0,
            Layout::Walls => 1,
            Layout::Lab => 2,
        };
        (
            self.obstacle_count,
            (self.obstacle_speed * 1e6) as u64,
            layout,
            (self.goal_distance[1] * 1e6) as u64,
        )
    }

    pub fn sample_scenario<R: Rng + ?Sized>(&self, rng: &mut R) -> ScenarioSpec {
        let (bounds, walls) = match self.layout {
            Layout::Open => (OPEN_BOUNDS, vec![]),
            Layout::Walls => (OPEN_BOUNDS, random_walls(rng)),
            Layout::Lab => (LAB_BOUNDS, lab_walls()),
        };
        let (start, goal) = sample_start_goal(rng, &bounds, &walls, self.goal_distance, ENDPOINT_MARGIN);
        let obstacles = sample_obstacles(
            rng,
            &bounds,
            &walls,
            start.position(),
            goal,
            self.obstacle_count,
            self.obstacle_speed,
        );
        ScenarioSpec {
            name: format!("stage{}", self.id),
            bounds,
            walls,
            obstacles,
            start_pose: start,
            goal,
        }
    }
}

/// Two axis-aligned segments kept 1.5 m away from the outer walls so the
/// room stays connected.
fn random_walls<R: Rng + ?Sized>(rng: &mut R) -> Vec<Segment> {
    (0..2)
        .map(|_| {
            let len = rng.random_range(2.0..3.5);
            let horizontal = rng.random_bool(0.5);
            let (w, h) = if horizontal { (len, 0.0) } else { (0.0, len) };
            let a = Vec2::new(rng.random_range(1.5..8.5 - w), rng.random_range(1.5..8.5 - h));
            Segment::new(a, a + Vec2::new(w, h))
        })
        .collect()
}

/// Open room, walls, moving discs, then the furnished lab with discs.
pub fn default_curriculum() -> Vec<CurriculumStage> {
    vec![
        CurriculumStage {
            id: 1,
            layout: Layout::Open,
            goal_distance: [3.0, 6.0],
            obstacle_count: 0,
            obstacle_speed: 0.0,
        },
        CurriculumStage {
            id: 2,
            layout: Layout::Walls,
            goal_distance: [4.0, 7.0],
            obstacle_count: 0,
            obstacle_speed: 0.0,
        },
        CurriculumStage {
            id: 3,
            layout: Layout::Open,
            goal_distance: [4.0, 7.0],
            obstacle_count: 4,
            obstacle_speed: 0.5,
        },
        CurriculumStage {
            id: 4,
            layout: Layout::Lab,
            goal_distance: [4.0, 7.0],
            obstacle_count: 4,
            obstacle_speed: 0.5,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_stages_are_ordered_and_valid() {
        let c = default_curriculum();
        for s in &c {
            s.validate().unwrap();
        }
        for w in c.windows(2) {
            assert!(w[0].difficulty() <= w[1].difficulty());
        }
    }

    #[test]
    fn sampled_scenarios_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for stage in default_curriculum() {
            for _ in 0..20 {
                let s = stage.sample_scenario(&mut rng);
                s.validate().unwrap();
                assert_eq!(s.obstacles.len(), stage.obstacle_count);
            }
        }
    }
}
