//! 8-connected A* over the inflated occupancy grid.
//!
//! Path costs are kept exactly as `straight + diagonal·√2` with integer
//! parts, so equal-cost paths compare equal regardless of summation order.

use super::grid::OccupancyGrid;
use super::NavError;
use crate::geometry::Vec2;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::Add;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub straight: u64,
    pub diagonal: u64,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost {
        straight: 0,
        diagonal: 0,
    };

    pub fn value(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }
}

impl Add for PathCost {
    type Output = PathCost;
    fn add(self, o: PathCost) -> PathCost {
        PathCost {
            straight: self.straight + o.straight,
            diagonal: self.diagonal + o.diagonal,
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of x + y·√2 with integer x, y
        let x = self.straight as i128 - other.straight as i128;
        let y = self.diagonal as i128 - other.diagonal as i128;
        match (x.cmp(&0), y.cmp(&0)) {
            (Ordering::Equal, o) | (o, Ordering::Equal) => o,
            (a, b) if a == b => a,
            (Ordering::Greater, _) => (x * x).cmp(&(2 * y * y)),
            _ => (2 * y * y).cmp(&(x * x)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPath {
    /// Cell centres from the start cell to the goal cell.
    pub waypoints: Vec<Vec2>,
    pub cells: Vec<(usize, usize)>,
    pub cost: PathCost,
}

impl GlobalPath {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

pub(crate) const NEIGHBOURS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Cost of stepping from `(x, y)` by `(dx, dy)`, or `None` when the target is
/// blocked or the move cuts an Occupied corner.
pub(crate) fn step_cost(grid: &OccupancyGrid, x: usize, y: usize, dx: i64, dy: i64) -> Option<((usize, usize), PathCost)> {
    let nx = x as i64 + dx;
    let ny = y as i64 + dy;
    if nx < 0 || ny < 0 || nx as usize >= grid.width || ny as usize >= grid.height {
        return None;
    }
    let (nx, ny) = (nx as usize, ny as usize);
    let c = u64::from(grid.traversal_cost(nx, ny)?);
    if dx != 0 && dy != 0 {
        grid.traversal_cost(nx, y)?;
        grid.traversal_cost(x, ny)?;
        Some(((nx, ny), PathCost { straight: 0, diagonal: c }))
    } else {
        Some(((nx, ny), PathCost { straight: c, diagonal: 0 }))
    }
}

fn octile(a: (usize, usize), b: (usize, usize)) -> PathCost {
    let dx = a.0.abs_diff(b.0) as u64;
    let dy = a.1.abs_diff(b.1) as u64;
    PathCost {
        straight: dx.max(dy) - dx.min(dy),
        diagonal: dx.min(dy),
    }
}

pub fn plan_global_astar_cells(
    grid: &OccupancyGrid,
    start: (usize, usize),
    goal: (usize, usize),
) -> Result<GlobalPath, NavError> {
    if grid.traversal_cost(start.0, start.1).is_none() {
        return Err(NavError::StartOccupied);
    }
    if grid.traversal_cost(goal.0, goal.1).is_none() {
        return Err(NavError::NoPath);
    }
    let n = grid.width * grid.height;
    let mut g = vec![None::<PathCost>; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let si = grid.index(start.0, start.1);
    g[si] = Some(PathCost::ZERO);
    open.push(Reverse((octile(start, goal), si)));
    let gi = grid.index(goal.0, goal.1);

    while let Some(Reverse((_, i))) = open.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if i == gi {
            break;
        }
        let (x, y) = (i % grid.width, i / grid.width);
        let gc = g[i].expect("expanded nodes have a cost");
        for &(dx, dy) in &NEIGHBOURS {
            if let Some(((nx, ny), c)) = step_cost(grid, x, y, dx, dy) {
                let ni = grid.index(nx, ny);
                if closed[ni] {
                    continue;
                }
                let cand = gc + c;
                if g[ni].is_none_or(|old| cand < old) {
                    g[ni] = Some(cand);
                    parent[ni] = i;
                    open.push(Reverse((cand + octile((nx, ny), goal), ni)));
                }
            }
        }
    }

    let cost = g[gi].ok_or(NavError::NoPath)?;
    let mut cells = vec![goal];
    let mut i = gi;
    while i != si {
        i = parent[i];
        cells.push((i % grid.width, i / grid.width));
    }
    cells.reverse();
    let waypoints = cells.iter().map(|&(x, y)| grid.cell_center(x, y)).collect();
    Ok(GlobalPath { waypoints, cells, cost })
}

/// Minimal-cost path between the cells containing `start` and `goal`.
pub fn plan_global_astar(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<GlobalPath, NavError> {
    let s = grid.world_to_cell(start).ok_or(NavError::OutOfGrid)?;
    let g = grid.world_to_cell(goal).ok_or(NavError::OutOfGrid)?;
    plan_global_astar_cells(grid, s, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::grid::Cell;
    use proptest::prelude::*;

    fn free_grid(w: usize, h: usize) -> Vec<Cell> {
        vec![Cell::Free; w * h]
    }

    #[test]
    fn cost_ordering_is_exact() {
        let a = PathCost { straight: 3, diagonal: 0 };
        let b = PathCost { straight: 0, diagonal: 2 };
        assert!(a > b); // 3 > 2.828
        let c = PathCost { straight: 0, diagonal: 3 };
        assert!(a < c); // 3 < 4.243
        assert_eq!(a.cmp(&a), Ordering::Equal);
    }

    #[test]
    fn diagonal_on_empty_grid() {
        let g = OccupancyGrid::from_cells(Vec2::ZERO, 10, 10, 1.0, free_grid(10, 10));
        let p = plan_global_astar_cells(&g, (0, 0), (9, 9)).unwrap();
        assert_eq!(p.cost, PathCost { straight: 0, diagonal: 9 });
        assert!((p.cost.value() - 9.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(p.cells.first(), Some(&(0, 0)));
        assert_eq!(p.cells.last(), Some(&(9, 9)));
        for w in p.cells.windows(2) {
            assert!(w[0].0.abs_diff(w[1].0) <= 1 && w[0].1.abs_diff(w[1].1) <= 1);
        }
    }

    #[test]
    fn sealed_goal_has_no_path() {
        let mut cells = free_grid(10, 10);
        for x in 5..10 {
            cells[5 * 10 + x] = Cell::Occupied;
        }
        for y in 5..10 {
            cells[y * 10 + 5] = Cell::Occupied;
        }
        let g = OccupancyGrid::from_cells(Vec2::ZERO, 10, 10, 1.0, cells);
        assert!(matches!(plan_global_astar_cells(&g, (0, 0), (8, 8)), Err(NavError::NoPath)));
    }

    #[test]
    fn occupied_start_rejected() {
        let mut cells = free_grid(4, 4);
        cells[0] = Cell::Occupied;
        let g = OccupancyGrid::from_cells(Vec2::ZERO, 4, 4, 1.0, cells);
        assert!(matches!(plan_global_astar_cells(&g, (0, 0), (3, 3)), Err(NavError::StartOccupied)));
    }

    proptest! {
        #[test]
        fn cost_order_agrees_with_floats(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000, d in 0u64..1000) {
            let x = PathCost { straight: a, diagonal: b };
            let y = PathCost { straight: c, diagonal: d };
            let (fx, fy) = (x.value(), y.value());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), fx.partial_cmp(&fy).unwrap());
            }
        }
    }
}
