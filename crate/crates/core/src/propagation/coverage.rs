use super::{CoverageMap, PropagationError};
use crate::scene::{CellMask, Grid};
use fixedbitset::FixedBitSet;

/// Outdoor cells whose received power meets a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSet {
    grid: Grid,
    covered: FixedBitSet,
    threshold_dbm: f64,
}

impl CoverageSet {
    /// Builds a set directly from cell indices; cells must be outdoor.
    pub fn from_cells(mask: &CellMask, cells: impl IntoIterator<Item = usize>, threshold_dbm: f64) -> Self {
        let mut covered = FixedBitSet::with_capacity(mask.grid().len());
        for c in cells {
            debug_assert!(mask.is_outdoor(c));
            covered.insert(c);
        }
        CoverageSet { grid: *mask.grid(), covered, threshold_dbm }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.covered
    }

    pub fn threshold_dbm(&self) -> f64 {
        self.threshold_dbm
    }

    pub fn contains(&self, index: usize) -> bool {
        self.covered.contains(index)
    }

    pub fn count(&self) -> usize {
        self.covered.count_ones(..)
    }

    pub fn is_subset(&self, other: &CoverageSet) -> bool {
        self.covered.is_subset(&other.covered)
    }
}

pub fn coverage_set(map: &CoverageMap, mask: &CellMask, threshold_dbm: f64) -> Result<CoverageSet, PropagationError> {
    if map.grid() != mask.grid() {
        return Err(PropagationError::GridMismatch);
    }
    let mut covered = FixedBitSet::with_capacity(map.len());
    for idx in 0..map.len() {
        if mask.is_outdoor(idx) && map.rx_power_dbm(idx).is_some_and(|rx| rx >= threshold_dbm) {
            covered.insert(idx);
        }
    }
    Ok(CoverageSet { grid: *mask.grid(), covered, threshold_dbm })
}

fn check_grid<'a>(sets: impl IntoIterator<Item = &'a CoverageSet>, mask: &CellMask) -> Result<(), PropagationError> {
    if sets.into_iter().any(|s| &s.grid != mask.grid()) {
        return Err(PropagationError::GridMismatch);
    }
    Ok(())
}

/// `|⋃ covered| / |outdoor|`; zero for an empty list.
pub fn coverage_ratio(sets: &[CoverageSet], mask: &CellMask) -> Result<f64, PropagationError> {
    if mask.outdoor_count() == 0 {
        return Err(PropagationError::NoOutdoorCells);
    }
    check_grid(sets, mask)?;
    let Some((first, rest)) = sets.split_first() else {
        return Ok(0.0);
    };
    let mut union = first.covered.clone();
    for s in rest {
        union.union_with(&s.covered);
    }
    Ok(union.count_ones(..) as f64 / mask.outdoor_count() as f64)
}

/// Fraction of outdoor cells covered by two or more of `sets`, and fraction
/// covered by `reference` but by none of `sets`.
pub fn overlap_and_blind(sets: &[CoverageSet], reference: &CoverageSet, mask: &CellMask) -> Result<(f64, f64), PropagationError> {
    if mask.outdoor_count() == 0 {
        return Err(PropagationError::NoOutdoorCells);
    }
    check_grid(sets.iter().chain(std::iter::once(reference)), mask)?;
    let n = mask.grid().len();
    let mut once = FixedBitSet::with_capacity(n);
    let mut twice = FixedBitSet::with_capacity(n);
    for s in sets {
        let mut again = once.clone();
        again.intersect_with(&s.covered);
        twice.union_with(&again);
        once.union_with(&s.covered);
    }
    let outdoor = mask.outdoor_count() as f64;
    let blind = reference.covered.difference_count(&once);
    Ok((twice.count_ones(..) as f64 / outdoor, blind as f64 / outdoor))
}
