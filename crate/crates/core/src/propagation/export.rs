use super::CoverageMap;
use crate::pgm::{encode_pgm, scale_to_grey};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// CSV with header `i,j,x_center,y_center,path_loss_db,rx_power_dbm,state`.
/// Unreached and building cells leave the two numeric columns empty.
pub fn coverage_csv(map: &CoverageMap) -> String {
    let grid = map.grid();
    let mut out = String::from("i,j,x_center,y_center,path_loss_db,rx_power_dbm,state\n");
    for idx in 0..map.len() {
        let (i, j) = grid.coords(idx);
        let c = grid.center(i, j);
        write!(out, "{i},{j},{:.3},{:.3},", c.x, c.y).unwrap();
        match (map.path_loss_db(idx), map.rx_power_dbm(idx)) {
            (Some(pl), Some(rx)) => writeln!(out, "{pl:.6},{rx:.6},reached").unwrap(),
            _ if map.is_building(idx) => out.push_str(",,building\n"),
            _ => out.push_str(",,unreached\n"),
        }
    }
    out
}

pub fn write_coverage_csv(map: &CoverageMap, path: impl AsRef<Path>) -> io::Result<()> {
    std::fs::write(path, coverage_csv(map))
}

/// Received power rendered between `floor_dbm` (grey 1) and `ceiling_dbm`
/// (255); buildings and unreached cells are 0.
pub fn coverage_pgm(map: &CoverageMap, floor_dbm: f64, ceiling_dbm: f64) -> Vec<u8> {
    let grid = map.grid();
    let pixels: Vec<u8> = (0..map.len())
        .map(|idx| map.rx_power_dbm(idx).map_or(0, |rx| scale_to_grey(rx, floor_dbm, ceiling_dbm)))
        .collect();
    encode_pgm(grid.width, grid.height, &pixels)
}

pub fn write_coverage_pgm(map: &CoverageMap, path: impl AsRef<Path>, floor_dbm: f64, ceiling_dbm: f64) -> io::Result<()> {
    std::fs::write(path, coverage_pgm(map, floor_dbm, ceiling_dbm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Rect};
    use crate::propagation::{compute_coverage_map, RayTracerConfig, Transmitter};
    use crate::scene::{rasterize, Building, GridSpec, Scene};

    fn map() -> CoverageMap {
        let b = Building::rectangle(Rect::new(0.0, 0.0, 10.0, 5.0), 40.0).unwrap();
        let scene = Scene::new("t", Rect::new(0.0, 0.0, 20.0, 10.0), vec![b]).unwrap();
        let mask = rasterize(&scene, &GridSpec::default()).unwrap();
        let tx = Transmitter { position: Point::new(17.0, 8.0), height_m: 10.0, tx_power_dbm: 20.0, frequency_hz: 1e9 };
        let cfg = RayTracerConfig { num_samples: 64, max_depth: 0, ..RayTracerConfig::default() };
        compute_coverage_map(&scene, &mask, &tx, &cfg).unwrap()
    }

    #[test]
    fn csv_rows_cover_every_cell() {
        let csv = coverage_csv(&map());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "i,j,x_center,y_center,path_loss_db,rx_power_dbm,state");
        assert_eq!(lines.len(), 1 + 8);
        assert_eq!(lines[1], "0,0,2.500,2.500,,,building");
        assert!(lines[4].starts_with("3,0,17.500,2.500,"));
        assert!(lines[4].ends_with(",reached"));
    }

    #[test]
    fn pgm_marks_buildings_black() {
        let img = coverage_pgm(&map(), -80.0, 0.0);
        let header = b"P5\n4 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        let body = &img[header.len()..];
        // Bottom grid row is the last image row.
        assert_eq!(&body[4..6], &[0, 0]);
        assert!(body[..4].iter().all(|&p| p > 0));
    }
}
