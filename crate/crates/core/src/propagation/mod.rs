//! Per-transmitter coverage maps.
//!
//! A map combines two sources of per-cell path loss and keeps the smaller:
//!
//! * the direct path, evaluated analytically for every outdoor cell with
//!   height-gated line of sight;
//! * launched rays, flying horizontally at the transmitter height and
//!   reflecting specularly off walls at least that tall. Every outdoor cell a
//!   ray segment crosses receives the Friis loss at the unfolded length
//!   `travelled + |segment origin − cell center|`, lifted to 3D by the
//!   antenna height difference, plus a fixed loss per bounce.
//!
//! Evaluating at the cell center keeps every candidate at or above the
//! straight-line Friis loss (triangle inequality on the unfolded path).

mod coverage;
mod export;
mod launch;
mod trace;
#[cfg(test)]
mod properties;

pub use coverage::{coverage_ratio, coverage_set, overlap_and_blind, CoverageSet};
pub use export::{coverage_csv, coverage_pgm, write_coverage_csv, write_coverage_pgm};
pub use launch::launch_fractions;

use crate::geometry::Point;
use crate::scene::{CellMask, Grid, Scene};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use trace::{friis_from_terms, line_of_sight, RayContext, WallIndex};

/// Friis constant for isotropic antennas: `20·log10(4π/c)`.
pub const FRIIS_CONSTANT_DB: f64 = -147.55;

const RAYS_PER_TASK: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum PropagationError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("transmitter at ({x}, {y}) lies outside the scene bounds")]
    TxOutOfBounds { x: f64, y: f64 },
    #[error("invalid transmitter: {0}")]
    InvalidTransmitter(String),
    #[error("invalid ray tracer config: {0}")]
    InvalidConfig(String),
    #[error("coverage inputs are defined on different grids")]
    GridMismatch,
    #[error("scene has no outdoor cells")]
    NoOutdoorCells,
}

/// Free-space loss in dB: `20·log10(d) + 20·log10(f) − 147.55`.
pub fn free_space_path_loss_db(d_m: f64, f_hz: f64) -> Result<f64, PropagationError> {
    if !(d_m > 0.0 && d_m.is_finite()) {
        return Err(PropagationError::Domain(format!("distance must be positive, got {d_m}")));
    }
    if !(f_hz > 0.0 && f_hz.is_finite()) {
        return Err(PropagationError::Domain(format!("frequency must be positive, got {f_hz}")));
    }
    Ok(20.0 * d_m.log10() + (20.0 * f_hz.log10() + FRIIS_CONSTANT_DB))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transmitter {
    pub position: Point,
    pub height_m: f64,
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
}

impl Transmitter {
    pub fn validate(&self, scene: &Scene) -> Result<(), PropagationError> {
        if !(self.height_m > 0.0 && self.height_m.is_finite()) {
            return Err(PropagationError::InvalidTransmitter(format!("height_m must be positive, got {}", self.height_m)));
        }
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(PropagationError::InvalidTransmitter(format!(
                "frequency_hz must be positive, got {}",
                self.frequency_hz
            )));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(PropagationError::InvalidTransmitter("tx_power_dbm must be finite".into()));
        }
        if !scene.bounds().contains(self.position) {
            return Err(PropagationError::TxOutOfBounds { x: self.position.x, y: self.position.y });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayTracerConfig {
    pub num_samples: u64,
    pub max_depth: u32,
    pub reflection_loss_db: f64,
    pub max_range_m: f64,
    pub seed: u64,
    pub stratified: bool,
    /// Evaluate the analytic direct path. Disabling it leaves only ray
    /// candidates, which is how the ray launcher is benchmarked.
    pub direct_path: bool,
    /// Rays deposit only after at least this many bounces.
    pub min_deposit_bounces: u32,
}

impl Default for RayTracerConfig {
    fn default() -> Self {
        RayTracerConfig {
            num_samples: 1_000_000,
            max_depth: 25,
            reflection_loss_db: 6.0,
            max_range_m: 5_000.0,
            seed: 0,
            stratified: true,
            direct_path: true,
            min_deposit_bounces: 0,
        }
    }
}

impl RayTracerConfig {
    pub fn validate(&self) -> Result<(), PropagationError> {
        if self.num_samples == 0 {
            return Err(PropagationError::InvalidConfig("num_samples must be at least 1".into()));
        }
        if !(self.reflection_loss_db >= 0.0 && self.reflection_loss_db.is_finite()) {
            return Err(PropagationError::InvalidConfig("reflection_loss_db must be non-negative".into()));
        }
        if !(self.max_range_m > 0.0) {
            return Err(PropagationError::InvalidConfig("max_range_m must be positive".into()));
        }
        Ok(())
    }
}

/// Path loss per cell for one transmitter. `None` means no path reached the
/// cell; building cells are never reached.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    grid: Grid,
    tx: Transmitter,
    path_loss_db: Vec<f64>,
    building: Vec<bool>,
}

impl CoverageMap {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tx(&self) -> &Transmitter {
        &self.tx
    }

    pub fn len(&self) -> usize {
        self.path_loss_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path_loss_db.is_empty()
    }

    pub fn path_loss_db(&self, index: usize) -> Option<f64> {
        let v = self.path_loss_db[index];
        v.is_finite().then_some(v)
    }

    pub fn rx_power_dbm(&self, index: usize) -> Option<f64> {
        self.path_loss_db(index).map(|pl| self.tx.tx_power_dbm - pl)
    }

    pub fn is_building(&self, index: usize) -> bool {
        self.building[index]
    }

    pub fn reached_count(&self) -> usize {
        self.path_loss_db.iter().filter(|v| v.is_finite()).count()
    }

    /// Same geometry, different transmit power.
    pub fn with_tx_power(&self, tx_power_dbm: f64) -> CoverageMap {
        CoverageMap { tx: Transmitter { tx_power_dbm, ..self.tx }, ..self.clone() }
    }

    /// 3D transmitter-to-cell-center distance.
    pub fn distance_3d(&self, index: usize) -> f64 {
        let c = self.grid.center_of(index);
        (self.tx.position - c).norm().hypot(self.tx.height_m - self.grid.receiver_height_m)
    }
}

/// Computes the coverage map of `tx` over the rasterized scene.
///
/// The output is a pure function of the inputs: rays are traced in fixed
/// batches and combined with an elementwise minimum, so the thread count
/// does not change a single bit.
pub fn compute_coverage_map(
    scene: &Scene,
    mask: &CellMask,
    tx: &Transmitter,
    cfg: &RayTracerConfig,
) -> Result<CoverageMap, PropagationError> {
    tx.validate(scene)?;
    cfg.validate()?;
    let grid = *mask.grid();
    if grid.origin.x != scene.bounds().x_min || grid.origin.y != scene.bounds().y_min {
        return Err(PropagationError::GridMismatch);
    }
    let n = grid.len();
    let freq_term_db = 20.0 * tx.frequency_hz.log10() + FRIIS_CONSTANT_DB;
    let height_diff_m = tx.height_m - grid.receiver_height_m;

    let mut best = vec![f64::INFINITY; n];
    if cfg.direct_path {
        best.par_iter_mut().enumerate().for_each_init(Vec::new, |scratch, (idx, slot)| {
            if !mask.is_outdoor(idx) {
                return;
            }
            let c = grid.center_of(idx);
            if line_of_sight(scene.buildings(), tx.position, tx.height_m, c, grid.receiver_height_m, scratch) {
                let d3 = (tx.position - c).norm().hypot(height_diff_m);
                *slot = friis_from_terms(d3, freq_term_db);
            }
        });
    }

    let walls = WallIndex::build(scene, &grid, tx.height_m);
    let ctx = RayContext {
        grid: &grid,
        mask,
        walls: &walls,
        height_diff_m,
        freq_term_db,
        max_depth: cfg.max_depth,
        max_range_m: cfg.max_range_m,
        reflection_loss_db: cfg.reflection_loss_db,
        min_deposit_bounces: cfg.min_deposit_bounces,
    };
    let fractions = launch_fractions(cfg.num_samples, cfg.seed, cfg.stratified);
    let rays = fractions
        .par_chunks(RAYS_PER_TASK)
        .fold(
            || vec![f64::INFINITY; n],
            |mut acc, chunk| {
                for &f in chunk {
                    let (s, c) = (std::f64::consts::TAU * f).sin_cos();
                    ctx.trace(tx.position, Point::new(c, s), &mut acc);
                }
                acc
            },
        )
        .reduce(
            || vec![f64::INFINITY; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x = x.min(y));
                a
            },
        );
    for (b, r) in best.iter_mut().zip(rays) {
        *b = b.min(r);
    }

    let building: Vec<bool> = (0..n).map(|i| !mask.is_outdoor(i)).collect();
    for (b, &is_b) in best.iter_mut().zip(&building) {
        if is_b {
            *b = f64::INFINITY;
        }
    }
    Ok(CoverageMap { grid, tx: *tx, path_loss_db: best, building })
}
