//! Scene geometry: building footprints with heights inside a rectangular
//! area, and the square-cell grid every other module indexes by.

mod io;
mod synthetic;

pub use io::{load_scene, parse_scene, save_scene, scene_to_string};
pub use synthetic::{generate_synthetic_scene, SyntheticKind, SyntheticParams};

use crate::geometry::{self, Point, Rect};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Default cap on `width · height` cells for [`rasterize`].
pub const DEFAULT_MAX_CELLS: usize = 4_000_000;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scene file: {0}")]
    Parse(String),
    #[error("invalid bounds: width and height must be positive and finite")]
    InvalidBounds,
    #[error("building {index}: {defect}")]
    Building { index: usize, defect: BuildingDefect },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid of {cells} cells exceeds the limit of {limit}")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("invalid synthetic scene parameters: {0}")]
    InvalidParams(String),
    #[error("cannot place buildings at density {density}: {reason}")]
    InfeasibleDensity { density: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildingDefect {
    #[error("vertex ({x}, {y}) lies outside the scene bounds")]
    VertexOutOfBounds { x: f64, y: f64 },
    #[error("footprint has {0} vertices, at least 3 are required")]
    TooFewVertices(usize),
    #[error("footprint is self-intersecting")]
    SelfIntersecting,
    #[error("footprint has zero area")]
    ZeroArea,
    #[error("height {0} m is not positive")]
    NonPositiveHeight(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A building: a simple counter-clockwise footprint and a flat roof height.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    footprint: Vec<Point>,
    height_m: f64,
    bbox: Rect,
}

impl Building {
    /// Validates and normalizes a footprint. Clockwise input is reversed.
    pub fn new(footprint: Vec<Point>, height_m: f64) -> Result<Self, BuildingDefect> {
        let mut footprint = footprint;
        if footprint.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(BuildingDefect::NonFinite);
        }
        if !(height_m > 0.0 && height_m.is_finite()) {
            return Err(BuildingDefect::NonPositiveHeight(height_m));
        }
        if footprint.len() < 3 {
            return Err(BuildingDefect::TooFewVertices(footprint.len()));
        }
        let area = geometry::signed_area(&footprint);
        if area == 0.0 {
            return Err(BuildingDefect::ZeroArea);
        }
        if !geometry::is_simple(&footprint) {
            return Err(BuildingDefect::SelfIntersecting);
        }
        if area < 0.0 {
            log::warn!("clockwise building footprint re-oriented to counter-clockwise");
            footprint.reverse();
        }
        let bbox = Rect::bounding(&footprint);
        Ok(Building { footprint, height_m, bbox })
    }

    /// Axis-aligned rectangular building.
    pub fn rectangle(rect: Rect, height_m: f64) -> Result<Self, BuildingDefect> {
        Building::new(
            vec![
                Point::new(rect.x_min, rect.y_min),
                Point::new(rect.x_max, rect.y_min),
                Point::new(rect.x_max, rect.y_max),
                Point::new(rect.x_min, rect.y_max),
            ],
            height_m,
        )
    }

    pub fn footprint(&self) -> &[Point] {
        &self.footprint
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn bbox(&self) -> &Rect {
        &self.bbox
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.footprint)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.bbox.contains(p) && geometry::contains_point(&self.footprint, p)
    }
}

/// Validated scene. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    name: String,
    bounds: Rect,
    buildings: Vec<Building>,
}

impl Scene {
    pub fn new(name: impl Into<String>, bounds: Rect, buildings: Vec<Building>) -> Result<Self, SceneError> {
        let ok = |v: f64| v.is_finite();
        if !(ok(bounds.x_min) && ok(bounds.y_min) && ok(bounds.x_max) && ok(bounds.y_max))
            || bounds.width() <= 0.0
            || bounds.height() <= 0.0
        {
            return Err(SceneError::InvalidBounds);
        }
        for (index, b) in buildings.iter().enumerate() {
            if let Some(p) = b.footprint.iter().find(|p| !bounds.contains(**p)) {
                return Err(SceneError::Building {
                    index,
                    defect: BuildingDefect::VertexOutOfBounds { x: p.x, y: p.y },
                });
            }
        }
        Ok(Scene { name: name.into(), bounds, buildings })
    }

    /// Scene with no buildings.
    pub fn empty(name: impl Into<String>, bounds: Rect) -> Result<Self, SceneError> {
        Scene::new(name, bounds, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> &Rect {
        &self.bounds
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    /// Index of the first building whose footprint contains `p`.
    pub fn building_at(&self, p: Point) -> Option<usize> {
        self.buildings.iter().position(|b| b.contains(p))
    }
}

/// Grid discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_cell_size")]
    pub cell_size_m: f64,
    #[serde(default = "GridSpec::default_receiver_height")]
    pub receiver_height_m: f64,
}

impl GridSpec {
    fn default_cell_size() -> f64 {
        5.0
    }
    fn default_receiver_height() -> f64 {
        1.5
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.cell_size_m > 0.0 && self.cell_size_m.is_finite()) {
            return Err(SceneError::InvalidGrid(format!("cell_size_m must be positive, got {}", self.cell_size_m)));
        }
        if !(self.receiver_height_m >= 0.0 && self.receiver_height_m.is_finite()) {
            return Err(SceneError::InvalidGrid(format!(
                "receiver_height_m must be non-negative, got {}",
                self.receiver_height_m
            )));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { cell_size_m: 5.0, receiver_height_m: 1.5 }
    }
}

/// A grid spec resolved against scene bounds. Cell `(i, j)` has linear
/// index `j · width + i`; `i` runs along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Point,
    pub cell_size_m: f64,
    pub width: usize,
    pub height: usize,
    pub receiver_height_m: f64,
}

impl Grid {
    pub fn new(bounds: &Rect, spec: &GridSpec) -> Result<Self, SceneError> {
        spec.validate()?;
        let nx = (bounds.width() / spec.cell_size_m).ceil();
        let ny = (bounds.height() / spec.cell_size_m).ceil();
        if !(nx.is_finite() && ny.is_finite()) || nx * ny > usize::MAX as f64 / 2.0 {
            return Err(SceneError::GridTooLarge { cells: usize::MAX, limit: DEFAULT_MAX_CELLS });
        }
        Ok(Grid {
            origin: Point::new(bounds.x_min, bounds.y_min),
            cell_size_m: spec.cell_size_m,
            width: (nx as usize).max(1),
            height: (ny as usize).max(1),
            receiver_height_m: spec.receiver_height_m,
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size_m,
            self.origin.y + (j as f64 + 0.5) * self.cell_size_m,
        )
    }

    pub fn center_of(&self, index: usize) -> Point {
        let (i, j) = self.coords(index);
        self.center(i, j)
    }

    /// Cell containing `p`, if any. Points on a shared edge belong to the
    /// cell with the larger index.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.cell_size_m).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size_m).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Extent covered by the cells (may exceed scene bounds by less than a cell).
    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width as f64 * self.cell_size_m,
            self.origin.y + self.height as f64 * self.cell_size_m,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Outdoor,
    Building,
}

/// Outdoor/building classification of every grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    grid: Grid,
    cells: Vec<CellKind>,
    outdoor: usize,
}

impl CellMask {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn kind(&self, index: usize) -> CellKind {
        self.cells[index]
    }

    pub fn is_outdoor(&self, index: usize) -> bool {
        self.cells[index] == CellKind::Outdoor
    }

    pub fn cells(&self) -> &[CellKind] {
        &self.cells
    }

    pub fn outdoor_count(&self) -> usize {
        self.outdoor
    }

    pub fn building_count(&self) -> usize {
        self.cells.len() - self.outdoor
    }
}

/// Classifies each cell by whether its center lies in a footprint.
pub fn rasterize(scene: &Scene, spec: &GridSpec) -> Result<CellMask, SceneError> {
    rasterize_with_limit(scene, spec, DEFAULT_MAX_CELLS)
}

pub fn rasterize_with_limit(scene: &Scene, spec: &GridSpec, max_cells: usize) -> Result<CellMask, SceneError> {
    let grid = Grid::new(scene.bounds(), spec)?;
    let cells = grid.width.saturating_mul(grid.height);
    if cells > max_cells {
        return Err(SceneError::GridTooLarge { cells, limit: max_cells });
    }
    let mut kinds = vec![CellKind::Outdoor; cells];
    let cs = grid.cell_size_m;
    for b in scene.buildings() {
        let bb = b.bbox();
        // Range of cells whose centers can fall inside the bbox.
        let lo = |v: f64, o: f64| (((v - o) / cs - 0.5).ceil().max(0.0)) as usize;
        let hi = |v: f64, o: f64, n: usize| ((((v - o) / cs - 0.5).floor()) as i64).min(n as i64 - 1);
        let (i0, j0) = (lo(bb.x_min, grid.origin.x), lo(bb.y_min, grid.origin.y));
        let (i1, j1) = (hi(bb.x_max, grid.origin.x, grid.width), hi(bb.y_max, grid.origin.y, grid.height));
        if i1 < 0 || j1 < 0 {
            continue;
        }
        for j in j0..=(j1 as usize) {
            for i in i0..=(i1 as usize) {
                let idx = grid.index(i, j);
                if kinds[idx] == CellKind::Outdoor && geometry::contains_point(b.footprint(), grid.center(i, j)) {
                    kinds[idx] = CellKind::Building;
                }
            }
        }
    }
    let outdoor = kinds.iter().filter(|k| **k == CellKind::Outdoor).count();
    Ok(CellMask { grid, cells: kinds, outdoor })
}
