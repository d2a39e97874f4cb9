use super::{CandidateCache, PlacementError, PlacementSolution};
use crate::pgm::encode_pgm;
use crate::propagation::{overlap_and_blind, CoverageSet};
use crate::scene::CellMask;
use fixedbitset::FixedBitSet;
use serde::Serialize;
use std::fmt::Write as _;

const BUILDING: u8 = 0;
const BLIND: u8 = 48;
const UNCOVERED: u8 = 96;
const COVERED: u8 = 160;
const OVERLAP: u8 = 230;

/// Solution summary measured against the macro reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementReport {
    pub solution: PlacementSolution,
    pub station_count: usize,
    pub e_m: f64,
    pub target_ratio: f64,
    pub overlap_ratio: f64,
    /// Fraction of outdoor cells the macro covers but the network misses.
    pub blind_ratio: f64,
    pub candidate_count: usize,
}

impl PlacementReport {
    pub fn new(
        solution: PlacementSolution,
        cache: &CandidateCache,
        mask: &CellMask,
        e_m: f64,
        target_ratio: f64,
        reference: &CoverageSet,
    ) -> Result<Self, PlacementError> {
        let (overlap_ratio, blind_ratio) = overlap_and_blind(&solution.coverage_sets(cache), reference, mask)?;
        Ok(PlacementReport {
            station_count: solution.station_count(),
            solution,
            e_m,
            target_ratio,
            overlap_ratio,
            blind_ratio,
            candidate_count: cache.len(),
        })
    }
}

/// CSV `n,ratio`, one row per placed station.
pub fn ratio_curve_csv(solution: &PlacementSolution) -> String {
    let mut out = String::from("n,ratio\n");
    for (k, r) in solution.ratio_curve.iter().enumerate() {
        writeln!(out, "{},{r:.6}", k + 1).unwrap();
    }
    out
}

/// Greyscale overlay: buildings black, cells the macro covers but the
/// network misses dark, otherwise-uncovered cells darker grey, covered cells
/// mid grey, cells covered by two or more stations light.
pub fn overlay_pgm(solution: &PlacementSolution, cache: &CandidateCache, mask: &CellMask, reference: &CoverageSet) -> Vec<u8> {
    let n = mask.grid().len();
    let mut once = FixedBitSet::with_capacity(n);
    let mut twice = FixedBitSet::with_capacity(n);
    for &c in &solution.candidates {
        let mut again = once.clone();
        again.intersect_with(cache.bits(c));
        twice.union_with(&again);
        once.union_with(cache.bits(c));
    }
    let pixels: Vec<u8> = (0..n)
        .map(|idx| match () {
            _ if !mask.is_outdoor(idx) => BUILDING,
            _ if twice.contains(idx) => OVERLAP,
            _ if once.contains(idx) => COVERED,
            _ if reference.contains(idx) => BLIND,
            _ => UNCOVERED,
        })
        .collect();
    encode_pgm(mask.width(), mask.height(), &pixels)
}
