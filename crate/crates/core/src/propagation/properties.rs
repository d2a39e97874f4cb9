//! Invariants of the tracer over random cities.

use super::*;
use crate::geometry::Rect;
use crate::ple::{ple_heatmap, HeatmapParams};
use crate::scene::{generate_synthetic_scene, rasterize, GridSpec, SyntheticKind, SyntheticParams};
use proptest::prelude::*;

fn city(seed: u64, heights: (f64, f64)) -> (Scene, CellMask) {
    let params = SyntheticParams { width_m: 120.0, height_m: 120.0, building_height_m: heights, ..Default::default() };
    let scene = generate_synthetic_scene(SyntheticKind::UniformCity, &params, seed).unwrap();
    let mask = rasterize(&scene, &GridSpec::default()).unwrap();
    (scene, mask)
}

/// Outdoor cell center selected by `pick`.
fn outdoor_site(scene: &Scene, mask: &CellMask, pick: usize) -> Point {
    let outdoor: Vec<usize> = (0..mask.grid().len()).filter(|&i| mask.is_outdoor(i)).collect();
    let p = mask.grid().center_of(outdoor[pick % outdoor.len()]);
    assert!(scene.building_at(p).is_none());
    p
}

fn losses(map: &CoverageMap) -> Vec<f64> {
    (0..map.len()).map(|i| map.path_loss_db(i).unwrap_or(f64::INFINITY)).collect()
}

fn cfg(num_samples: u64, max_depth: u32, seed: u64) -> RayTracerConfig {
    RayTracerConfig { num_samples, max_depth, seed, ..RayTracerConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn deeper_tracing_never_loses_paths(seed in 0u64..1000, pick in 0usize..10_000, h in 5.0f64..45.0, depth in 0u32..4) {
        let (scene, mask) = city(seed, (20.0, 40.0));
        let tx = Transmitter { position: outdoor_site(&scene, &mask, pick), height_m: h, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
        let shallow = losses(&compute_coverage_map(&scene, &mask, &tx, &cfg(2000, depth, seed)).unwrap());
        let deep = losses(&compute_coverage_map(&scene, &mask, &tx, &cfg(2000, depth + 1, seed)).unwrap());
        for (a, b) in shallow.iter().zip(&deep) {
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn doubling_rays_never_loses_paths(seed in 0u64..1000, pick in 0usize..10_000, base in prop::sample::select(vec![125u64, 375, 1000])) {
        let (scene, mask) = city(seed, (20.0, 40.0));
        let tx = Transmitter { position: outdoor_site(&scene, &mask, pick), height_m: 15.0, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
        let few = losses(&compute_coverage_map(&scene, &mask, &tx, &cfg(base, 3, seed)).unwrap());
        let many = losses(&compute_coverage_map(&scene, &mask, &tx, &cfg(base * 2, 3, seed)).unwrap());
        for (a, b) in few.iter().zip(&many) {
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn no_cell_beats_free_space(seed in 0u64..1000, pick in 0usize..10_000, h in 5.0f64..45.0) {
        let (scene, mask) = city(seed, (20.0, 40.0));
        let tx = Transmitter { position: outdoor_site(&scene, &mask, pick), height_m: h, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
        let map = compute_coverage_map(&scene, &mask, &tx, &cfg(4000, 4, seed)).unwrap();
        for i in 0..map.len() {
            if let Some(pl) = map.path_loss_db(i) {
                let floor = free_space_path_loss_db(map.distance_3d(i), tx.frequency_hz).unwrap();
                prop_assert!(pl >= floor - 1e-9, "cell {i}: {pl} < {floor}");
            }
        }
    }

    #[test]
    fn buildings_below_the_antenna_do_not_block(seed in 0u64..1000, pick in 0usize..10_000) {
        let (scene, mask) = city(seed, (4.0, 12.0));
        let tx = Transmitter { position: outdoor_site(&scene, &mask, pick), height_m: 15.0, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
        let map = compute_coverage_map(&scene, &mask, &tx, &cfg(500, 2, seed)).unwrap();
        for i in 0..map.len() {
            if mask.is_outdoor(i) {
                let friis = free_space_path_loss_db(map.distance_3d(i), tx.frequency_hz).unwrap();
                prop_assert_eq!(map.path_loss_db(i), Some(friis));
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_bits(seed in 0u64..1000, pick in 0usize..10_000) {
        let (scene, mask) = city(seed, (20.0, 40.0));
        let tx = Transmitter { position: outdoor_site(&scene, &mask, pick), height_m: 15.0, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| compute_coverage_map(&scene, &mask, &tx, &cfg(3000, 3, seed)).unwrap())
        };
        let one = losses(&run(1));
        let four = losses(&run(4));
        prop_assert!(one.iter().zip(&four).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn dense_half_shows_steeper_exponent() {
    let params = SyntheticParams { width_m: 240.0, height_m: 240.0, ..Default::default() };
    let scene = generate_synthetic_scene(SyntheticKind::AsymmetricCity, &params, 3).unwrap();
    let mask = rasterize(&scene, &GridSpec::default()).unwrap();
    let half = |x0: f64| -> Vec<Point> {
        (0..4)
            .flat_map(|i| (0..8).map(move |j| Point::new(x0 + 15.0 + 30.0 * i as f64, 15.0 + 30.0 * j as f64)))
            .collect()
    };
    let template = Transmitter { position: Point::new(0.0, 0.0), height_m: 15.0, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
    let hp = HeatmapParams { max_radius_m: 100.0, ..HeatmapParams::default() };
    let mean_gamma = |points: &[Point]| {
        let map = ple_heatmap(&scene, &mask, points, &template, &cfg(4000, 3, 0), &hp).unwrap();
        let g: Vec<f64> = map.entries.iter().filter_map(|e| e.outcome.gamma()).collect();
        assert!(g.len() >= 4);
        g.iter().sum::<f64>() / g.len() as f64
    };
    let (left, right) = (mean_gamma(&half(0.0)), mean_gamma(&half(120.0)));
    assert!(right > left, "left {left:.3} right {right:.3}");
}

#[test]
fn open_ground_fits_free_space() {
    let scene = Scene::empty("e", Rect::new(0.0, 0.0, 200.0, 200.0)).unwrap();
    let mask = rasterize(&scene, &GridSpec::default()).unwrap();
    let template = Transmitter { position: Point::new(0.0, 0.0), height_m: 15.0, tx_power_dbm: 17.0, frequency_hz: 3.5e9 };
    let map = ple_heatmap(&scene, &mask, &[Point::new(100.0, 100.0)], &template, &cfg(500, 1, 0), &HeatmapParams::default()).unwrap();
    let g = map.entries[0].outcome.gamma().unwrap();
    assert!((g - 2.0).abs() < 1e-9, "{g}");
}
