//! Tri-state occupancy grid built from range scans, with a Euclidean
//! distance field over Occupied cells used for inflation and clearance.

use crate::geometry::{Bounds, Vec2};
use crate::sensors::LidarScan;
use crate::sim::Pose2D;
use std::io::Write;
use std::path::Path;

pub const GRID_RESOLUTION: f64 = 0.05;
pub const INFLATION_RADIUS: f64 = 0.3;
/// Clearances are capped here; also used where no obstacle is known.
pub const MAX_CLEARANCE: f64 = 10.0;
/// Extra traversal cost, in Free-cell units, at zero clearance.
pub const INFLATION_COST: u32 = 10;
pub const MAP_MARGIN: f64 = 0.5;
/// Beams stop clearing this far short of their hit point.
pub const CLEARING_MARGIN: f64 = 0.1;

const FAR: f64 = 1e20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Unknown,
    Free,
    Occupied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    /// World coordinates of the lower-left corner of cell (0, 0).
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    pub inflation_radius: f64,
    cells: Vec<Cell>,
    /// Distance from each cell centre to the nearest Occupied cell centre (m).
    clearance: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(origin: Vec2, width: usize, height: usize, resolution: f64) -> Self {
        Self::from_cells(origin, width, height, resolution, vec![Cell::Unknown; width * height])
    }

    pub fn from_cells(origin: Vec2, width: usize, height: usize, resolution: f64, cells: Vec<Cell>) -> Self {
        assert_eq!(cells.len(), width * height, "cell count must match dimensions");
        let mut g = OccupancyGrid {
            resolution,
            origin,
            width,
            height,
            inflation_radius: INFLATION_RADIUS,
            cells,
            clearance: vec![MAX_CLEARANCE; width * height],
        };
        g.refresh_distance_field();
        g
    }

    /// Unknown grid covering `bounds` plus [`MAP_MARGIN`] on every side, so
    /// scan endpoints on the boundary walls land inside the grid. The origin
    /// is shifted half a cell so walls at multiples of the resolution run
    /// through cell centres rather than along cell edges.
    pub fn covering(bounds: &Bounds) -> Self {
        let pad = MAP_MARGIN + 0.5 * GRID_RESOLUTION;
        let w = ((bounds.width() + 2.0 * pad) / GRID_RESOLUTION).ceil() as usize;
        let h = ((bounds.height() + 2.0 * pad) / GRID_RESOLUTION).ceil() as usize;
        let origin = bounds.min - Vec2::new(pad, pad);
        Self::new(origin, w.max(1), h.max(1), GRID_RESOLUTION)
    }

    pub fn index(&self, cx: usize, cy: usize) -> usize {
        cy * self.width + cx
    }

    pub fn cell(&self, cx: usize, cy: usize) -> Cell {
        self.cells[self.index(cx, cy)]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn set(&mut self, cx: usize, cy: usize, c: Cell) {
        let i = self.index(cx, cy);
        self.cells[i] = c;
    }

    pub fn world_to_cell(&self, p: Vec2) -> Option<(usize, usize)> {
        let (x, y) = self.world_to_cell_signed(p);
        self.in_grid(x, y).then_some((x as usize, y as usize))
    }

    fn world_to_cell_signed(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    fn in_grid(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (cx as f64 + 0.5) * self.resolution,
            self.origin.y + (cy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_clearance(&self, cx: usize, cy: usize) -> f64 {
        self.clearance[self.index(cx, cy)]
    }

    /// Bilinearly interpolated clearance at a world point. Points outside the
    /// grid read zero.
    pub fn clearance_at(&self, p: Vec2) -> f64 {
        let gx = (p.x - self.origin.x) / self.resolution - 0.5;
        let gy = (p.y - self.origin.y) / self.resolution - 0.5;
        if gx < -0.5 || gy < -0.5 || gx > self.width as f64 - 0.5 || gy > self.height as f64 - 0.5 {
            return 0.0;
        }
        let x0 = gx.floor().clamp(0.0, (self.width - 1) as f64);
        let y0 = gy.floor().clamp(0.0, (self.height - 1) as f64);
        let (ix, iy) = (x0 as usize, y0 as usize);
        let ix1 = (ix + 1).min(self.width - 1);
        let iy1 = (iy + 1).min(self.height - 1);
        let tx = (gx - x0).clamp(0.0, 1.0);
        let ty = (gy - y0).clamp(0.0, 1.0);
        let c = |x, y| self.clearance[self.index(x, y)];
        let a = c(ix, iy) * (1.0 - tx) + c(ix1, iy) * tx;
        let b = c(ix, iy1) * (1.0 - tx) + c(ix1, iy1) * tx;
        a * (1.0 - ty) + b * ty
    }

    /// Central-difference gradient of [`clearance_at`](Self::clearance_at).
    pub fn clearance_gradient(&self, p: Vec2) -> Vec2 {
        let h = self.resolution;
        Vec2::new(
            (self.clearance_at(p + Vec2::new(h, 0.0)) - self.clearance_at(p - Vec2::new(h, 0.0))) / (2.0 * h),
            (self.clearance_at(p + Vec2::new(0.0, h)) - self.clearance_at(p - Vec2::new(0.0, h))) / (2.0 * h),
        )
    }

    pub fn is_occupied_at(&self, p: Vec2) -> bool {
        self.world_to_cell(p)
            .map(|(x, y)| self.cell(x, y) == Cell::Occupied)
            .unwrap_or(true)
    }

    /// Traversal cost of entering a cell, in Free-cell units; `None` if blocked.
    pub fn traversal_cost(&self, cx: usize, cy: usize) -> Option<u32> {
        let i = self.index(cx, cy);
        let base = match self.cells[i] {
            Cell::Occupied => return None,
            Cell::Free => 1,
            Cell::Unknown => 2,
        };
        let d = self.clearance[i];
        let inflation = if d < self.inflation_radius {
            (f64::from(INFLATION_COST) * (1.0 - d / self.inflation_radius)).ceil() as u32
        } else {
            0
        };
        Some(base + inflation)
    }

    /// Rebuilds the distance field; call after editing cells directly.
    pub fn refresh_distance_field(&mut self) {
        let (w, h) = (self.width, self.height);
        let mut sq = vec![0.0f64; w * h];
        for (s, c) in sq.iter_mut().zip(&self.cells) {
            *s = if *c == Cell::Occupied { 0.0 } else { FAR };
        }
        let n = w.max(h);
        let mut f = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut v = vec![0usize; n];
        let mut z = vec![0.0; n + 1];
        for x in 0..w {
            for y in 0..h {
                f[y] = sq[y * w + x];
            }
            edt_1d(&f[..h], &mut d[..h], &mut v, &mut z);
            for y in 0..h {
                sq[y * w + x] = d[y];
            }
        }
        for y in 0..h {
            f[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
            edt_1d(&f[..w], &mut d[..w], &mut v, &mut z);
            for x in 0..w {
                self.clearance[y * w + x] = (d[x].sqrt() * self.resolution).min(MAX_CLEARANCE);
            }
        }
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = Vec::with_capacity(self.width * self.height + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        for cy in (0..self.height).rev() {
            for cx in 0..self.width {
                out.push(match self.cell(cx, cy) {
                    Cell::Free => 254,
                    Cell::Occupied => 0,
                    Cell::Unknown => 205,
                });
            }
        }
        std::fs::write(path, out)
    }

    /// YAML-style metadata describing the PGM written by [`write_pgm`](Self::write_pgm).
    pub fn metadata_yaml(&self, image_name: &str) -> String {
        format!(
            "image: {image_name}\nresolution: {}\norigin: [{}, {}, 0.0]\nwidth: {}\nheight: {}\nnegate: 0\noccupied_thresh: 0.65\nfree_thresh: 0.196\n",
            self.resolution, self.origin.x, self.origin.y, self.width, self.height
        )
    }

    /// Carves every beam as Free up to its endpoint, then marks endpoints
    /// closer than the maximum range as Occupied, then refreshes the
    /// distance field.
    pub fn update_occupancy(&mut self, pose: &Pose2D, scan: &LidarScan) {
        let origin = pose.position();
        let (sx, sy) = self.world_to_cell_signed(origin);
        let mut endpoints = Vec::with_capacity(scan.ranges.len());
        for (k, &range) in scan.ranges.iter().enumerate() {
            let dir = Vec2::from_angle(pose.theta + LidarScan::beam_bearing(k));
            let (ex, ey) = self.world_to_cell_signed(origin + dir * range);
            let (cx, cy) = self.world_to_cell_signed(origin + dir * (range - CLEARING_MARGIN).max(0.0));
            self.carve(sx, sy, cx, cy);
            if range < scan.max_range {
                endpoints.push((ex, ey));
            }
        }
        for (ex, ey) in endpoints {
            if self.in_grid(ex, ey) {
                let i = self.index(ex as usize, ey as usize);
                self.cells[i] = Cell::Occupied;
            }
        }
        self.refresh_distance_field();
    }

    /// Bresenham walk marking every cell before the endpoint Free.
    fn carve(&mut self, x0: i64, y0: i64, x1: i64, y1: i64) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let (mut x, mut y) = (x0, y0);
        let mut err = dx + dy;
        while !(x == x1 && y == y1) {
            if !self.in_grid(x, y) {
                return;
            }
            let i = self.index(x as usize, y as usize);
            self.cells[i] = Cell::Free;
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }
}

/// Felzenszwalb–Huttenlocher 1D squared distance transform.
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        loop {
            let p = v[k] as f64;
            let s = ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        *out = (qf - p) * (qf - p) + f[v[k]];
    }
}

/// Updates `grid` from a scan taken at `pose`; see [`OccupancyGrid::update_occupancy`].
pub fn update_occupancy(grid: &mut OccupancyGrid, pose: &Pose2D, scan: &LidarScan) {
    grid.update_occupancy(pose, scan);
}
