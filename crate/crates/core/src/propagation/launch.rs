//! Azimuth launch directions.
//!
//! Stratified launches are nested: for `n = n0 · 2^m` with `n0` odd, the
//! `n0` base sectors each get one jittered angle, and every halving of the
//! sectors keeps the parent's angle in whichever child contains it and draws
//! a fresh jittered angle for the sibling. The angle set for `n` is therefore
//! a subset of the set for `2n` under the same seed.
//!
//! Each refinement level reads its own ChaCha stream (stream `level + 1`),
//! consumed in sector order; i.i.d. launches use stream 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Launch directions as fractions of a full turn in `[0, 1)`, sorted by
/// sector for stratified launches.
pub fn launch_fractions(num_samples: u64, seed: u64, stratified: bool) -> Vec<f64> {
    if num_samples == 0 {
        return Vec::new();
    }
    if !stratified {
        let mut rng = stream(seed, 0);
        return (0..num_samples).map(|_| rng.random::<f64>()).collect();
    }
    let levels = num_samples.trailing_zeros() as u64;
    let base = num_samples >> levels;

    let mut rng = stream(seed, 1);
    let mut current: Vec<f64> = (0..base).map(|k| (k as f64 + rng.random::<f64>()) / base as f64).collect();
    for level in 1..=levels {
        let sectors = (base << level) as f64;
        let mut rng = stream(seed, level + 1);
        let mut next = Vec::with_capacity(current.len() * 2);
        for (p, &f) in current.iter().enumerate() {
            let first = 2 * p;
            let kept = ((f * sectors).floor() as usize).clamp(first, first + 1);
            let fresh_sector = if kept == first { first + 1 } else { first };
            let fresh = (fresh_sector as f64 + rng.random::<f64>()) / sectors;
            if kept == first {
                next.push(f);
                next.push(fresh);
            } else {
                next.push(fresh);
                next.push(f);
            }
        }
        current = next;
    }
    current
}
