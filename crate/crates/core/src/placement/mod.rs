//! Minimum-count station placement against a coverage-ratio target.
//!
//! Candidate sites come from a square lattice snapped to outdoor cell
//! centers. Each candidate's coverage set is computed once into a
//! [`CandidateCache`]; every search algorithm then works on bitsets only.

mod report;
mod search;

pub use report::{overlay_pgm, ratio_curve_csv, PlacementReport};
pub use search::{brute_force_placement, greedy_placement, hill_climb_placement, uniform_placement};

use crate::geometry::Point;
use crate::propagation::{compute_coverage_map, coverage_set, CoverageSet, PropagationError, RayTracerConfig, Transmitter};
use crate::scene::{CellMask, Scene};
use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest candidate count the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("invalid placement problem: {0}")]
    InvalidProblem(String),
    #[error("no outdoor candidate sites on the lattice")]
    NoCandidates,
    #[error("{count} candidates exceed the exhaustive-search limit of {max}; use a smaller scene or a coarser candidate spacing")]
    TooManyCandidates { count: usize, max: usize },
    #[error("target ratio {target} unreachable: {} reached {:.4} with {} sites", solution.algorithm, solution.final_ratio, solution.sites.len())]
    TargetUnreachable { target: f64, solution: Box<PlacementSolution> },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Transmitter parameters shared by every placed station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationTemplate {
    pub height_m: f64,
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
}

impl StationTemplate {
    pub fn at(&self, position: Point) -> Transmitter {
        Transmitter { position, height_m: self.height_m, tx_power_dbm: self.tx_power_dbm, frequency_hz: self.frequency_hz }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PlacementProblem<'a> {
    pub scene: &'a Scene,
    pub mask: &'a CellMask,
    pub candidate_spacing_m: f64,
    pub station: StationTemplate,
    pub sensitivity_dbm: f64,
    /// Halt once the union covers at least this fraction of outdoor cells.
    /// Callers fold any overshoot factor in beforehand.
    pub target_ratio: f64,
    pub tracer: RayTracerConfig,
}

impl PlacementProblem<'_> {
    pub fn validate(&self) -> Result<(), PlacementError> {
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(PlacementError::InvalidProblem(format!("target_ratio must lie in (0, 1], got {}", self.target_ratio)));
        }
        if !(self.candidate_spacing_m > 0.0 && self.candidate_spacing_m.is_finite()) {
            return Err(PlacementError::InvalidProblem(format!(
                "candidate_spacing_m must be positive, got {}",
                self.candidate_spacing_m
            )));
        }
        if !self.sensitivity_dbm.is_finite() {
            return Err(PlacementError::InvalidProblem("sensitivity_dbm must be finite".into()));
        }
        if self.mask.outdoor_count() == 0 {
            return Err(PlacementError::Propagation(PropagationError::NoOutdoorCells));
        }
        self.tracer.validate()?;
        Ok(())
    }

    /// Lattice points at `spacing/2 + k·spacing` from the lower-left corner,
    /// snapped to the center of their cell, row-major from the south-west.
    /// Points landing in building cells are dropped, as are repeats of an
    /// already-listed cell.
    pub fn candidate_sites(&self) -> Vec<Point> {
        let grid = self.mask.grid();
        let b = self.scene.bounds();
        let s = self.candidate_spacing_m;
        let mut seen = FixedBitSet::with_capacity(grid.len());
        let mut sites = Vec::new();
        let mut y = b.y_min + s / 2.0;
        while y < b.y_max {
            let mut x = b.x_min + s / 2.0;
            while x < b.x_max {
                if let Some((i, j)) = grid.cell_of(Point::new(x, y)) {
                    let idx = grid.index(i, j);
                    if self.mask.is_outdoor(idx) && !seen.put(idx) {
                        sites.push(grid.center(i, j));
                    }
                }
                x += s;
            }
            y += s;
        }
        sites
    }
}

/// Coverage ratio of a reference macro station and its coverage set, used as
/// the yardstick the small-cell network has to match.
pub fn macro_reference(
    problem: &PlacementProblem,
    macro_tx: &Transmitter,
    macro_sensitivity_dbm: f64,
) -> Result<(f64, CoverageSet), PlacementError> {
    let map = compute_coverage_map(problem.scene, problem.mask, macro_tx, &problem.tracer)?;
    let set = coverage_set(&map, problem.mask, macro_sensitivity_dbm)?;
    let e_m = set.count() as f64 / problem.mask.outdoor_count() as f64;
    Ok((e_m, set))
}

/// Coverage set of every candidate site.
#[derive(Debug, Clone)]
pub struct CandidateCache {
    sites: Vec<Point>,
    sets: Vec<CoverageSet>,
    outdoor: usize,
    evaluations: usize,
}

impl CandidateCache {
    /// Computes one coverage map per candidate, in parallel.
    pub fn build(problem: &PlacementProblem) -> Result<Self, PlacementError> {
        problem.validate()?;
        let sites = problem.candidate_sites();
        if sites.is_empty() {
            return Err(PlacementError::NoCandidates);
        }
        let sets = sites
            .par_iter()
            .map(|&p| {
                let map = compute_coverage_map(problem.scene, problem.mask, &problem.station.at(p), &problem.tracer)?;
                coverage_set(&map, problem.mask, problem.sensitivity_dbm)
            })
            .collect::<Result<Vec<_>, _>>()?;
        log::info!("built coverage sets for {} candidates", sites.len());
        let evaluations = sites.len();
        Ok(CandidateCache { sites, sets, outdoor: problem.mask.outdoor_count(), evaluations })
    }

    /// Wraps precomputed sets, for instances that do not come from a scene.
    pub fn from_sets(mask: &CellMask, sites: Vec<Point>, sets: Vec<CoverageSet>) -> Result<Self, PlacementError> {
        if sites.is_empty() {
            return Err(PlacementError::NoCandidates);
        }
        if sites.len() != sets.len() {
            return Err(PlacementError::InvalidProblem(format!("{} sites but {} coverage sets", sites.len(), sets.len())));
        }
        if mask.outdoor_count() == 0 {
            return Err(PlacementError::Propagation(PropagationError::NoOutdoorCells));
        }
        if sets.iter().any(|s| s.grid() != mask.grid()) {
            return Err(PlacementError::Propagation(PropagationError::GridMismatch));
        }
        Ok(CandidateCache { sites, sets, outdoor: mask.outdoor_count(), evaluations: 0 })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn sets(&self) -> &[CoverageSet] {
        &self.sets
    }

    pub fn outdoor_count(&self) -> usize {
        self.outdoor
    }

    /// Coverage-map computations spent building the cache.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub(crate) fn bits(&self, c: usize) -> &FixedBitSet {
        self.sets[c].bits()
    }

    pub(crate) fn empty_union(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.sets[0].bits().len())
    }

    pub(crate) fn ratio(&self, covered: usize) -> f64 {
        covered as f64 / self.outdoor as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    Hill,
    Uniform,
    Brute,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Hill => "hill",
            Algorithm::Uniform => "uniform",
            Algorithm::Brute => "brute",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "hill" => Ok(Algorithm::Hill),
            "uniform" => Ok(Algorithm::Uniform),
            "brute" => Ok(Algorithm::Brute),
            other => Err(format!("unknown algorithm `{other}` (expected greedy, hill, uniform or brute)")),
        }
    }
}

/// Ratio reached by a `k × k` uniform layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformStep {
    pub k: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementSolution {
    pub algorithm: Algorithm,
    pub sites: Vec<Point>,
    /// Index of each site in the candidate cache.
    pub candidates: Vec<usize>,
    /// Union coverage ratio after each site is added.
    pub ratio_curve: Vec<f64>,
    pub final_ratio: f64,
    pub evaluations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub uniform_trajectory: Vec<UniformStep>,
}

impl PlacementSolution {
    pub(crate) fn from_candidates(algorithm: Algorithm, cache: &CandidateCache, candidates: Vec<usize>) -> Self {
        let mut union = cache.empty_union();
        let ratio_curve: Vec<f64> = candidates
            .iter()
            .map(|&c| {
                union.union_with(cache.bits(c));
                cache.ratio(union.count_ones(..))
            })
            .collect();
        PlacementSolution {
            algorithm,
            sites: candidates.iter().map(|&c| cache.sites[c]).collect(),
            final_ratio: ratio_curve.last().copied().unwrap_or(0.0),
            candidates,
            ratio_curve,
            evaluations: cache.evaluations,
            uniform_trajectory: Vec::new(),
        }
    }

    pub fn station_count(&self) -> usize {
        self.sites.len()
    }

    pub fn coverage_sets(&self, cache: &CandidateCache) -> Vec<CoverageSet> {
        self.candidates.iter().map(|&c| cache.sets[c].clone()).collect()
    }
}
