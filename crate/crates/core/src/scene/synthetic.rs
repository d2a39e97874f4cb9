//! Seeded synthetic cities for experiments and tests.

use super::{Building, Scene, SceneError};
use crate::geometry::Rect;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Buildings on a jittered lattice over the whole area.
    UniformCity,
    /// Dense right half, sparse left half.
    AsymmetricCity,
    Empty,
}

impl std::str::FromStr for SyntheticKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-city" => Ok(SyntheticKind::UniformCity),
            "asymmetric-city" => Ok(SyntheticKind::AsymmetricCity),
            "empty" => Ok(SyntheticKind::Empty),
            other => Err(format!("unknown scene kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub width_m: f64,
    pub height_m: f64,
    /// Target fraction of ground area under buildings, in `[0, 1]`.
    pub density: f64,
    pub building_height_m: (f64, f64),
    /// Lattice pitch: every building lives in its own `block_m` square.
    pub block_m: f64,
    /// Minimum street width between neighbouring buildings.
    pub street_m: f64,
    /// Share of building area placed in the right half (asymmetric only).
    pub right_share: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            width_m: 300.0,
            height_m: 300.0,
            density: 0.25,
            building_height_m: (20.0, 40.0),
            block_m: 40.0,
            street_m: 8.0,
            right_share: 0.9,
        }
    }
}

// Below this fill fraction a block holds either a building of this fill or
// nothing, so sparse regions get fewer buildings instead of tiny ones.
const MIN_BLOCK_FILL: f64 = 0.15;
const SIDE_JITTER: f64 = 0.15;

impl SyntheticParams {
    fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidParams(m.to_string()));
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return bad("width_m and height_m must be positive");
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad("density must lie in [0, 1]");
        }
        let (lo, hi) = self.building_height_m;
        if !(lo > 0.0 && hi >= lo) {
            return bad("building_height_m must be a positive range");
        }
        if !(self.block_m > 0.0 && self.street_m >= 0.0 && self.street_m < self.block_m) {
            return bad("need block_m > street_m >= 0");
        }
        if !(0.0..=1.0).contains(&self.right_share) {
            return bad("right_share must lie in [0, 1]");
        }
        Ok(())
    }
}

pub fn generate_synthetic_scene(kind: SyntheticKind, params: &SyntheticParams, seed: u64) -> Result<Scene, SceneError> {
    params.validate()?;
    let bounds = Rect::new(0.0, 0.0, params.width_m, params.height_m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buildings = match kind {
        SyntheticKind::Empty => Vec::new(),
        SyntheticKind::UniformCity => fill_lattice(bounds, params.density, params, &mut rng)?,
        SyntheticKind::AsymmetricCity => {
            let mid = params.width_m / 2.0;
            let left = Rect::new(0.0, 0.0, mid, params.height_m);
            let right = Rect::new(mid, 0.0, params.width_m, params.height_m);
            // Each half is half the area, so its fill is twice its share.
            let d_right = 2.0 * params.right_share * params.density;
            let d_left = 2.0 * (1.0 - params.right_share) * params.density;
            let mut all = fill_lattice(left, d_left, params, &mut rng)?;
            all.extend(fill_lattice(right, d_right, params, &mut rng)?);
            all
        }
    };
    let name = match kind {
        SyntheticKind::Empty => "empty".to_string(),
        SyntheticKind::UniformCity => format!("uniform-city-{seed}"),
        SyntheticKind::AsymmetricCity => format!("asymmetric-city-{seed}"),
    };
    Scene::new(name, bounds, buildings)
}

fn fill_lattice(region: Rect, density: f64, p: &SyntheticParams, rng: &mut ChaCha8Rng) -> Result<Vec<Building>, SceneError> {
    let mut out = Vec::new();
    if density <= 0.0 {
        return Ok(out);
    }
    let nx = (region.width() / p.block_m).floor() as usize;
    let ny = (region.height() / p.block_m).floor() as usize;
    if nx == 0 || ny == 0 {
        return Err(SceneError::InfeasibleDensity {
            density,
            reason: format!("region {}x{} m is smaller than one block", region.width(), region.height()),
        });
    }
    // Center the lattice inside the region.
    let x0 = region.x_min + (region.width() - nx as f64 * p.block_m) / 2.0;
    let y0 = region.y_min + (region.height() - ny as f64 * p.block_m) / 2.0;

    let fill = density.max(MIN_BLOCK_FILL);
    let occupancy = density / fill;
    let side = p.block_m * fill.sqrt();
    let max_side = p.block_m - p.street_m;
    if side * (1.0 + SIDE_JITTER) > max_side {
        return Err(SceneError::InfeasibleDensity {
            density,
            reason: format!(
                "buildings of side up to {:.1} m do not fit {:.1} m blocks with {:.1} m streets",
                side * (1.0 + SIDE_JITTER),
                p.block_m,
                p.street_m
            ),
        });
    }
    let (h_lo, h_hi) = p.building_height_m;
    for j in 0..ny {
        for i in 0..nx {
            // Draw every variate even for empty blocks so a block's building
            // does not depend on its neighbours' occupancy.
            let occupied = rng.random::<f64>() < occupancy;
            let w = side * (1.0 + SIDE_JITTER * (2.0 * rng.random::<f64>() - 1.0));
            let h = side * (1.0 + SIDE_JITTER * (2.0 * rng.random::<f64>() - 1.0));
            let jx = rng.random::<f64>();
            let jy = rng.random::<f64>();
            let height = if h_hi > h_lo { rng.random_range(h_lo..=h_hi) } else { h_lo };
            if !occupied {
                continue;
            }
            let half_street = p.street_m / 2.0;
            let bx = x0 + i as f64 * p.block_m + half_street + jx * (p.block_m - p.street_m - w);
            let by = y0 + j as f64 * p.block_m + half_street + jy * (p.block_m - p.street_m - h);
            let building = Building::rectangle(Rect::new(bx, by, bx + w, by + h), height)
                .map_err(|e| SceneError::InvalidParams(e.to_string()))?;
            out.push(building);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{rasterize, GridSpec};

    #[test]
    fn empty_kind_has_no_buildings() {
        let s = generate_synthetic_scene(SyntheticKind::Empty, &SyntheticParams::default(), 1).unwrap();
        assert!(s.buildings().is_empty());
    }

    #[test]
    fn same_seed_same_scene() {
        let p = SyntheticParams::default();
        let a = generate_synthetic_scene(SyntheticKind::AsymmetricCity, &p, 7).unwrap();
        let b = generate_synthetic_scene(SyntheticKind::AsymmetricCity, &p, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_scene(SyntheticKind::AsymmetricCity, &p, 8).unwrap();
        assert_ne!(a, c);
    }

    fn overlaps(a: &Rect, b: &Rect) -> bool {
        a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max
    }

    #[test]
    fn buildings_never_overlap() {
        let p = SyntheticParams::default();
        for kind in [SyntheticKind::UniformCity, SyntheticKind::AsymmetricCity] {
            for seed in 0..10 {
                let s = generate_synthetic_scene(kind, &p, seed).unwrap();
                let bs = s.buildings();
                for i in 0..bs.len() {
                    for j in (i + 1)..bs.len() {
                        assert!(!overlaps(bs[i].bbox(), bs[j].bbox()), "{kind:?} seed {seed}: {i} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn asymmetric_city_is_right_heavy() {
        let p = SyntheticParams::default();
        for seed in [7, 11, 23] {
            let s = generate_synthetic_scene(SyntheticKind::AsymmetricCity, &p, seed).unwrap();
            let mid = p.width_m / 2.0;
            let (left, right): (f64, f64) = s.buildings().iter().fold((0.0, 0.0), |(l, r), b| {
                if b.bbox().x_min >= mid {
                    (l, r + b.area())
                } else {
                    (l + b.area(), r)
                }
            });
            assert!(right >= 0.8 * (left + right));
            // Same property measured on the rasterized mask.
            let mask = rasterize(&s, &GridSpec::default()).unwrap();
            let (mut lc, mut rc) = (0usize, 0usize);
            for idx in 0..mask.grid().len() {
                if !mask.is_outdoor(idx) {
                    if mask.grid().center_of(idx).x < mid {
                        lc += 1;
                    } else {
                        rc += 1;
                    }
                }
            }
            assert!(rc >= 4 * lc, "seed {seed}: right {rc} vs left {lc}");
        }
    }

    #[test]
    fn uniform_city_density_is_close_to_target() {
        let p = SyntheticParams { density: 0.3, ..SyntheticParams::default() };
        let s = generate_synthetic_scene(SyntheticKind::UniformCity, &p, 3).unwrap();
        let built: f64 = s.buildings().iter().map(|b| b.area()).sum();
        let frac = built / (p.width_m * p.height_m);
        // 7x7 blocks of 40 m cover 1960/2250 of a 300 m square.
        assert!((frac - 0.3 * 49.0 * 1600.0 / 90_000.0).abs() < 0.05, "fraction {frac}");
    }

    #[test]
    fn infeasible_density_is_reported() {
        let p = SyntheticParams { density: 0.9, ..SyntheticParams::default() };
        assert!(matches!(
            generate_synthetic_scene(SyntheticKind::UniformCity, &p, 0),
            Err(SceneError::InfeasibleDensity { .. })
        ));
        let p = SyntheticParams { density: 1.5, ..SyntheticParams::default() };
        assert!(matches!(generate_synthetic_scene(SyntheticKind::UniformCity, &p, 0), Err(SceneError::InvalidParams(_))));
    }
}
