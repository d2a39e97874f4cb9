//! Log-distance path-loss fitting: `PL(d) = K_dB + 10·γ·log10(d)`.

use crate::geometry::Point;
use crate::pgm::{encode_pgm, scale_to_grey};
use crate::propagation::{compute_coverage_map, CoverageMap, RayTracerConfig, Transmitter};
use crate::scene::{CellMask, Scene};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PleError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("all samples share one distance; the exponent is undetermined")]
    RankDeficient,
    #[error("sample {index} has invalid distance {distance_m}")]
    InvalidSample { index: usize, distance_m: f64 },
    #[error("no candidate positions given")]
    NoCandidates,
    #[error("heatmap has {entries} entries, expected {width}x{height}")]
    ShapeMismatch { entries: usize, width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSample {
    pub distance_m: f64,
    pub path_loss_db: f64,
}

/// Least-squares log-distance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossFit {
    pub k_db: f64,
    pub gamma: f64,
    pub rmse_db: f64,
    #[serde(rename = "n")]
    pub sample_count: usize,
}

impl PathLossFit {
    pub fn predict_db(&self, distance_m: f64) -> f64 {
        self.k_db + 10.0 * self.gamma * distance_m.log10()
    }

    /// One-line JSON record `{"k_db":…,"gamma":…,"rmse_db":…,"n":…}`.
    pub fn report_line(&self) -> String {
        serde_json::to_string(self).expect("fit serializes")
    }
}

/// Ordinary least squares of `PL` on `10·log10(d)`, solved in closed form
/// with centered sums.
pub fn fit_ple(samples: &[PathLossSample]) -> Result<PathLossFit, PleError> {
    let n = samples.len();
    if n < 2 {
        return Err(PleError::InsufficientSamples(n));
    }
    if let Some((index, s)) = samples.iter().enumerate().find(|(_, s)| !(s.distance_m > 0.0 && s.distance_m.is_finite())) {
        return Err(PleError::InvalidSample { index, distance_m: s.distance_m });
    }
    let first = samples[0].distance_m;
    if samples.iter().all(|s| s.distance_m == first) {
        return Err(PleError::RankDeficient);
    }
    let xs: Vec<f64> = samples.iter().map(|s| 10.0 * s.distance_m.log10()).collect();
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = samples.iter().map(|s| s.path_loss_db).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, s) in xs.iter().zip(samples) {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (s.path_loss_db - y_mean);
    }
    if sxx == 0.0 {
        return Err(PleError::RankDeficient);
    }
    let gamma = sxy / sxx;
    let k_db = y_mean - gamma * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| {
            let r = s.path_loss_db - (k_db + gamma * x);
            r * r
        })
        .sum();
    Ok(PathLossFit { k_db, gamma, rmse_db: (sse / nf).sqrt(), sample_count: n })
}

/// One sample per reached outdoor cell whose horizontal distance to the
/// transmitter lies in `[min_distance_m, max_radius_m]`; the sample distance
/// is the 3D one.
pub fn samples_from_coverage(map: &CoverageMap, mask: &CellMask, max_radius_m: f64, min_distance_m: f64) -> Vec<PathLossSample> {
    let tx = map.tx().position;
    (0..map.len())
        .filter(|&idx| mask.is_outdoor(idx))
        .filter_map(|idx| {
            let pl = map.path_loss_db(idx)?;
            let horizontal = (map.grid().center_of(idx) - tx).norm();
            (horizontal >= min_distance_m && horizontal <= max_radius_m)
                .then(|| PathLossSample { distance_m: map.distance_3d(idx), path_loss_db: pl })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapParams {
    pub max_radius_m: f64,
    pub min_distance_m: f64,
    pub min_samples: usize,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        HeatmapParams { max_radius_m: 700.0, min_distance_m: 10.0, min_samples: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeatmapOutcome {
    Fit(PathLossFit),
    InsufficientData { samples: usize },
    InsideBuilding { building: usize },
    Failed(String),
}

impl HeatmapOutcome {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            HeatmapOutcome::Fit(f) => Some(f.gamma),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            HeatmapOutcome::Fit(_) => "ok",
            HeatmapOutcome::InsufficientData { .. } => "insufficient-data",
            HeatmapOutcome::InsideBuilding { .. } => "inside-building",
            HeatmapOutcome::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapEntry {
    pub position: Point,
    pub outcome: HeatmapOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PleHeatmap {
    pub max_radius_m: f64,
    pub entries: Vec<HeatmapEntry>,
}

/// Fits the exponent seen from every candidate transmitter position.
pub fn ple_heatmap(
    scene: &Scene,
    mask: &CellMask,
    candidates: &[Point],
    tx_template: &Transmitter,
    cfg: &RayTracerConfig,
    params: &HeatmapParams,
) -> Result<PleHeatmap, PleError> {
    if candidates.is_empty() {
        return Err(PleError::NoCandidates);
    }
    let entries = candidates
        .par_iter()
        .map(|&position| {
            let outcome = match scene.building_at(position) {
                Some(building) => HeatmapOutcome::InsideBuilding { building },
                None => evaluate_candidate(scene, mask, &Transmitter { position, ..*tx_template }, cfg, params),
            };
            HeatmapEntry { position, outcome }
        })
        .collect();
    Ok(PleHeatmap { max_radius_m: params.max_radius_m, entries })
}

fn evaluate_candidate(scene: &Scene, mask: &CellMask, tx: &Transmitter, cfg: &RayTracerConfig, params: &HeatmapParams) -> HeatmapOutcome {
    let map = match compute_coverage_map(scene, mask, tx, cfg) {
        Ok(m) => m,
        Err(e) => return HeatmapOutcome::Failed(e.to_string()),
    };
    let samples = samples_from_coverage(&map, mask, params.max_radius_m, params.min_distance_m);
    if samples.len() < params.min_samples.max(2) {
        return HeatmapOutcome::InsufficientData { samples: samples.len() };
    }
    match fit_ple(&samples) {
        Ok(fit) => HeatmapOutcome::Fit(fit),
        Err(_) => HeatmapOutcome::InsufficientData { samples: samples.len() },
    }
}

/// CSV `x,y,gamma,status`; gamma is empty where no fit exists.
pub fn heatmap_csv(map: &PleHeatmap) -> String {
    let mut out = String::from("x,y,gamma,status\n");
    for e in &map.entries {
        write!(out, "{:.3},{:.3},", e.position.x, e.position.y).unwrap();
        if let Some(g) = e.outcome.gamma() {
            write!(out, "{g:.6}").unwrap();
        }
        writeln!(out, ",{}", e.outcome.status()).unwrap();
    }
    out
}

/// Greyscale rendering of gamma over `[2.0, 4.5]` for a row-major candidate
/// lattice; entries without a fit are 0.
pub fn heatmap_pgm(map: &PleHeatmap, width: usize, height: usize) -> Result<Vec<u8>, PleError> {
    if map.entries.len() != width * height {
        return Err(PleError::ShapeMismatch { entries: map.entries.len(), width, height });
    }
    let pixels: Vec<u8> = map.entries.iter().map(|e| e.outcome.gamma().map_or(0, |g| scale_to_grey(g, 2.0, 4.5))).collect();
    Ok(encode_pgm(width, height, &pixels))
}
