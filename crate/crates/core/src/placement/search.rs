use super::{Algorithm, CandidateCache, PlacementError, PlacementProblem, PlacementSolution, UniformStep, BRUTE_FORCE_LIMIT};
use crate::geometry::Point;
use fixedbitset::FixedBitSet;
use itertools::Itertools;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Reverse;

fn check_target(target: f64) -> Result<(), PlacementError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(PlacementError::InvalidProblem(format!("target_ratio must lie in (0, 1], got {target}")));
    }
    Ok(())
}

/// Best `(gain, candidate)` among `pool`; equal gains go to the lowest index.
/// The key is a total order, so the parallel reduction is schedule-free.
fn best_gain(cache: &CandidateCache, union: &FixedBitSet, pool: impl IndexedParallelIterator<Item = usize>) -> (usize, usize) {
    let (gain, Reverse(c)) = pool
        .map(|c| (cache.bits(c).difference_count(union), Reverse(c)))
        .max()
        .expect("candidate pool is never empty");
    (gain, c)
}

fn unreachable(target: f64, solution: PlacementSolution) -> PlacementError {
    PlacementError::TargetUnreachable { target, solution: Box::new(solution) }
}

/// Repeatedly adds the candidate contributing the most uncovered outdoor
/// cells until the union reaches `target`.
pub fn greedy_placement(cache: &CandidateCache, target: f64) -> Result<PlacementSolution, PlacementError> {
    check_target(target)?;
    let mut union = cache.empty_union();
    let mut chosen = Vec::new();
    while cache.ratio(union.count_ones(..)) < target {
        let (gain, c) = best_gain(cache, &union, (0..cache.len()).into_par_iter());
        if gain == 0 {
            return Err(unreachable(target, PlacementSolution::from_candidates(Algorithm::Greedy, cache, chosen)));
        }
        union.union_with(cache.bits(c));
        chosen.push(c);
    }
    Ok(PlacementSolution::from_candidates(Algorithm::Greedy, cache, chosen))
}

/// Adds stations one at a time; each new station starts at a random
/// candidate and is moved to the best of `iters_per_station` further
/// candidates drawn without replacement. Earlier stations stay put.
///
/// If no drawn candidate adds anything the step falls back to a full scan,
/// so the search only gives up when the target is truly out of reach.
pub fn hill_climb_placement(cache: &CandidateCache, target: f64, iters_per_station: usize, seed: u64) -> Result<PlacementSolution, PlacementError> {
    check_target(target)?;
    if iters_per_station == 0 {
        return Err(PlacementError::InvalidProblem("iters_per_station must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cache.len();
    let mut union = cache.empty_union();
    let mut chosen = Vec::new();
    while cache.ratio(union.count_ones(..)) < target {
        let start = rng.random_range(0..n);
        let mut pool = index::sample(&mut rng, n, iters_per_station.min(n)).into_vec();
        pool.push(start);
        let (mut gain, mut c) = best_gain(cache, &union, pool.into_par_iter());
        if gain == 0 {
            (gain, c) = best_gain(cache, &union, (0..n).into_par_iter());
            if gain == 0 {
                return Err(unreachable(target, PlacementSolution::from_candidates(Algorithm::Hill, cache, chosen)));
            }
        }
        union.union_with(cache.bits(c));
        chosen.push(c);
    }
    Ok(PlacementSolution::from_candidates(Algorithm::Hill, cache, chosen))
}

/// Nearest candidate to `p`; ties go to the lowest index.
fn nearest_candidate(sites: &[Point], p: Point) -> usize {
    sites
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.distance(p).total_cmp(&b.distance(p)).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("cache is never empty")
}

/// Places `k²` stations at the cell centers of a `k × k` partition of the
/// scene bounds, for `k = 1, 2, ...`, until the target is met. Each center
/// snaps to its nearest candidate; two centers may share a candidate and
/// still count as two stations.
pub fn uniform_placement(problem: &PlacementProblem, cache: &CandidateCache, k_max: usize) -> Result<PlacementSolution, PlacementError> {
    check_target(problem.target_ratio)?;
    if k_max == 0 {
        return Err(PlacementError::InvalidProblem("k_max must be at least 1".into()));
    }
    let b = problem.scene.bounds();
    let mut trajectory = Vec::new();
    let mut last = None;
    for k in 1..=k_max {
        let (w, h) = (b.width() / k as f64, b.height() / k as f64);
        let chosen: Vec<usize> = (0..k)
            .flat_map(|j| (0..k).map(move |i| (i, j)))
            .map(|(i, j)| nearest_candidate(cache.sites(), Point::new(b.x_min + (i as f64 + 0.5) * w, b.y_min + (j as f64 + 0.5) * h)))
            .collect();
        let mut sol = PlacementSolution::from_candidates(Algorithm::Uniform, cache, chosen);
        trajectory.push(UniformStep { k, ratio: sol.final_ratio });
        sol.uniform_trajectory = trajectory.clone();
        if sol.final_ratio >= problem.target_ratio {
            return Ok(sol);
        }
        last = Some(sol);
    }
    Err(unreachable(problem.target_ratio, last.expect("k_max >= 1")))
}

/// Smallest candidate subset reaching `target`, searched by increasing size
/// in lexicographic order, so the first hit is the lexicographically least
/// minimum.
pub fn brute_force_placement(cache: &CandidateCache, target: f64, max_candidates: usize) -> Result<PlacementSolution, PlacementError> {
    check_target(target)?;
    let max = max_candidates.min(BRUTE_FORCE_LIMIT);
    if cache.len() > max {
        return Err(PlacementError::TooManyCandidates { count: cache.len(), max });
    }
    let mut union = cache.empty_union();
    for size in 1..=cache.len() {
        for subset in (0..cache.len()).combinations(size) {
            union.clear();
            for &c in &subset {
                union.union_with(cache.bits(c));
            }
            if cache.ratio(union.count_ones(..)) >= target {
                return Ok(PlacementSolution::from_candidates(Algorithm::Brute, cache, subset));
            }
        }
    }
    Err(unreachable(target, PlacementSolution::from_candidates(Algorithm::Brute, cache, (0..cache.len()).collect())))
}
