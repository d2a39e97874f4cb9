//! Ray marching over the cell grid.

use crate::geometry::{self, Point, Rect};
use crate::scene::{Building, CellMask, Grid, Scene};

/// A reflecting wall: one footprint edge of a building at least as tall as
/// the launch height.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Wall {
    a: Point,
    b: Point,
    /// Unit normal (either side; reflection is symmetric).
    normal: Point,
}

/// Walls bucketed by the grid cells their segment crosses (CSR layout).
pub(crate) struct WallIndex {
    walls: Vec<Wall>,
    offsets: Vec<u32>,
    entries: Vec<u32>,
}

/// Liang–Barsky test of segment `a → b` against a closed rectangle.
fn segment_touches_rect(a: Point, b: Point, r: &Rect) -> bool {
    let d = b - a;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-d.x, a.x - r.x_min),
        (d.x, r.x_max - a.x),
        (-d.y, a.y - r.y_min),
        (d.y, r.y_max - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

impl WallIndex {
    pub(crate) fn build(scene: &Scene, grid: &Grid, min_height: f64) -> WallIndex {
        let mut walls = Vec::new();
        for b in scene.buildings().iter().filter(|b| b.height_m() >= min_height) {
            for (a, e) in geometry::edges(b.footprint()) {
                let dir = e - a;
                let len = dir.norm();
                if len > 0.0 {
                    walls.push(Wall { a, b: e, normal: Point::new(-dir.y / len, dir.x / len) });
                }
            }
        }
        let n = grid.len();
        let cs = grid.cell_size_m;
        let slack = 1e-9 * cs;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (w_idx, w) in walls.iter().enumerate() {
            let bb = Rect::of_segment(w.a, w.b);
            let i0 = (((bb.x_min - slack - grid.origin.x) / cs).floor().max(0.0)) as usize;
            let j0 = (((bb.y_min - slack - grid.origin.y) / cs).floor().max(0.0)) as usize;
            let i1 = (((bb.x_max + slack - grid.origin.x) / cs).floor() as usize).min(grid.width - 1);
            let j1 = (((bb.y_max + slack - grid.origin.y) / cs).floor() as usize).min(grid.height - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let x = grid.origin.x + i as f64 * cs;
                    let y = grid.origin.y + j as f64 * cs;
                    let cell = Rect::new(x - slack, y - slack, x + cs + slack, y + cs + slack);
                    if segment_touches_rect(w.a, w.b, &cell) {
                        buckets[grid.index(i, j)].push(w_idx as u32);
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for bucket in buckets {
            entries.extend(bucket);
            offsets.push(entries.len() as u32);
        }
        WallIndex { walls, offsets, entries }
    }

    fn in_cell(&self, idx: usize) -> &[u32] {
        &self.entries[self.offsets[idx] as usize..self.offsets[idx + 1] as usize]
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.walls.len()
    }
}

/// Distance along unit ray `o + t·d` to wall `w`, if hit ahead of the origin.
fn ray_wall(o: Point, d: Point, w: &Wall) -> Option<f64> {
    let s = w.b - w.a;
    let denom = d.cross(s);
    if denom == 0.0 {
        return None;
    }
    let ao = w.a - o;
    let t = ao.cross(s) / denom;
    let u = ao.cross(d) / denom;
    if t > 1e-7 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Per-launch constants shared by every ray of one transmitter.
pub(crate) struct RayContext<'a> {
    pub grid: &'a Grid,
    pub mask: &'a CellMask,
    pub walls: &'a WallIndex,
    pub height_diff_m: f64,
    /// `20·log10(f) − 147.55`.
    pub freq_term_db: f64,
    pub max_depth: u32,
    pub max_range_m: f64,
    pub reflection_loss_db: f64,
    pub min_deposit_bounces: u32,
}

pub(crate) fn friis_from_terms(d3_m: f64, freq_term_db: f64) -> f64 {
    20.0 * d3_m.max(MIN_LINK_DISTANCE_M).log10() + freq_term_db
}

/// Links shorter than this are evaluated at this distance.
pub(crate) const MIN_LINK_DISTANCE_M: f64 = 1e-3;

impl RayContext<'_> {
    /// Traces one ray from `origin` along unit `dir`, lowering `best` with
    /// every candidate it deposits.
    pub(crate) fn trace(&self, origin: Point, dir: Point, best: &mut [f64]) {
        let grid = self.grid;
        let cs = grid.cell_size_m;
        let mut o = origin;
        let mut d = dir;
        let mut travelled = 0.0;
        let mut bounces = 0u32;
        let mut last_wall: Option<u32> = None;

        loop {
            let remaining = self.max_range_m - travelled;
            if remaining <= 0.0 {
                return;
            }
            let Some((mut i, mut j)) = grid.cell_of(o + d * (1e-9 * cs)) else {
                return;
            };
            let step_i: i64 = if d.x > 0.0 { 1 } else { -1 };
            let step_j: i64 = if d.y > 0.0 { 1 } else { -1 };
            let boundary = |k: usize, step: i64, origin: f64| origin + (k as f64 + if step > 0 { 1.0 } else { 0.0 }) * cs;
            let mut t_max_x = if d.x != 0.0 { (boundary(i, step_i, grid.origin.x) - o.x) / d.x } else { f64::INFINITY };
            let mut t_max_y = if d.y != 0.0 { (boundary(j, step_j, grid.origin.y) - o.y) / d.y } else { f64::INFINITY };
            let t_dx = if d.x != 0.0 { cs / d.x.abs() } else { f64::INFINITY };
            let t_dy = if d.y != 0.0 { cs / d.y.abs() } else { f64::INFINITY };
            let mut t_enter = 0.0;
            let mut hit: Option<(f64, u32)> = None;

            loop {
                let idx = grid.index(i, j);
                let t_exit = t_max_x.min(t_max_y);
                for &w in self.walls.in_cell(idx) {
                    if Some(w) == last_wall {
                        continue;
                    }
                    if let Some(t) = ray_wall(o, d, &self.walls.walls[w as usize]) {
                        if t <= t_exit + 1e-9 && hit.is_none_or(|(bt, bw)| t < bt || (t == bt && w < bw)) {
                            hit = Some((t, w));
                        }
                    }
                }
                if t_enter <= remaining && bounces >= self.min_deposit_bounces && self.mask.is_outdoor(idx) {
                    let c = grid.center(i, j);
                    let horizontal = travelled + (c - o).norm();
                    let d3 = horizontal.hypot(self.height_diff_m);
                    let loss = friis_from_terms(d3, self.freq_term_db) + bounces as f64 * self.reflection_loss_db;
                    if loss < best[idx] {
                        best[idx] = loss;
                    }
                }
                if hit.is_some() || t_exit >= remaining {
                    break;
                }
                if t_max_x < t_max_y {
                    let ni = i as i64 + step_i;
                    if ni < 0 || ni >= grid.width as i64 {
                        break;
                    }
                    i = ni as usize;
                    t_enter = t_max_x;
                    t_max_x += t_dx;
                } else {
                    let nj = j as i64 + step_j;
                    if nj < 0 || nj >= grid.height as i64 {
                        break;
                    }
                    j = nj as usize;
                    t_enter = t_max_y;
                    t_max_y += t_dy;
                }
            }

            let Some((t_hit, w)) = hit else { return };
            if t_hit > remaining || bounces >= self.max_depth {
                return;
            }
            let n = self.walls.walls[w as usize].normal;
            o = o + d * t_hit;
            d = d - n * (2.0 * d.dot(n));
            travelled += t_hit;
            bounces += 1;
            last_wall = Some(w);
        }
    }
}

/// Height-gated line-of-sight test from `(tx, tx_h)` to `(rx, rx_h)`: a
/// building blocks the link if, anywhere its footprint meets the 2D segment,
/// its roof is above the straight line between the two heights.
pub(crate) fn line_of_sight(buildings: &[Building], tx: Point, tx_h: f64, rx: Point, rx_h: f64, scratch: &mut Vec<f64>) -> bool {
    let seg_box = Rect::of_segment(tx, rx);
    for b in buildings {
        if b.height_m() <= tx_h.min(rx_h) || !b.bbox().intersects(&seg_box) {
            continue;
        }
        if !segment_touches_rect(tx, rx, b.bbox()) {
            continue;
        }
        geometry::segment_polygon_params(b.footprint(), tx, rx, scratch);
        if scratch.iter().any(|&t| b.height_m() > tx_h + (rx_h - tx_h) * t) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{rasterize, GridSpec};

    fn wall_scene() -> Scene {
        let wall = Building::rectangle(Rect::new(50.0, 20.0, 52.0, 80.0), 100.0).unwrap();
        Scene::new("wall", Rect::new(0.0, 0.0, 100.0, 100.0), vec![wall]).unwrap()
    }

    #[test]
    fn tall_wall_blocks_sight() {
        let scene = wall_scene();
        let mut s = Vec::new();
        assert!(!line_of_sight(scene.buildings(), Point::new(20.0, 50.0), 15.0, Point::new(80.0, 50.0), 1.5, &mut s));
        assert!(line_of_sight(scene.buildings(), Point::new(20.0, 50.0), 15.0, Point::new(60.0, 99.0), 1.5, &mut s));
    }

    #[test]
    fn short_building_gated_by_line_height() {
        let block = Building::rectangle(Rect::new(40.0, 40.0, 60.0, 60.0), 10.0).unwrap();
        let scene = Scene::new("b", Rect::new(0.0, 0.0, 200.0, 200.0), vec![block]).unwrap();
        let mut s = Vec::new();
        // Line from 50 m falls to 1.5 m over 100 m; at x = 60 it is at 30.9 m.
        assert!(line_of_sight(scene.buildings(), Point::new(0.0, 50.0), 50.0, Point::new(100.0, 50.0), 1.5, &mut s));
        // From 15 m the line is at 6.3 m where it leaves the block.
        assert!(!line_of_sight(scene.buildings(), Point::new(0.0, 50.0), 15.0, Point::new(100.0, 50.0), 1.5, &mut s));
    }

    #[test]
    fn walls_indexed_only_above_launch_height() {
        let scene = wall_scene();
        let grid = Grid::new(scene.bounds(), &GridSpec::default()).unwrap();
        assert_eq!(WallIndex::build(&scene, &grid, 15.0).len(), 4);
        assert_eq!(WallIndex::build(&scene, &grid, 150.0).len(), 0);
    }

    #[test]
    fn ray_bounces_back_from_wall() {
        let scene = wall_scene();
        let spec = GridSpec::default();
        let mask = rasterize(&scene, &spec).unwrap();
        let grid = *mask.grid();
        let walls = WallIndex::build(&scene, &grid, 15.0);
        let ctx = RayContext {
            grid: &grid,
            mask: &mask,
            walls: &walls,
            height_diff_m: 0.0,
            freq_term_db: 0.0,
            max_depth: 1,
            max_range_m: 1000.0,
            reflection_loss_db: 6.0,
            min_deposit_bounces: 1,
        };
        let mut best = vec![f64::INFINITY; grid.len()];
        ctx.trace(Point::new(20.0, 52.5), Point::new(1.0, 0.0), &mut best);
        // After bouncing at x = 50 the ray returns along y = 52.5; the cell
        // at x = 12.5 is 30 + 37.5 = 67.5 m of unfolded path from the source.
        let idx = grid.index(2, 10);
        let expected = 20.0 * 67.5f64.log10() + 6.0;
        assert!((best[idx] - expected).abs() < 1e-9, "{} vs {}", best[idx], expected);
        // Nothing deposited behind the wall.
        assert!(best[grid.index(12, 10)].is_infinite());
    }
}
