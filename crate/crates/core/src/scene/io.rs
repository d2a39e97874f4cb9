//! Scene file format.
//!
//! A scene is a JSON document:
//!
//! ```json
//! {
//!   "bounds": [0.000000, 0.000000, 100.000000, 100.000000],
//!   "buildings": [
//!     {"footprint": [[10.000000, 10.000000], [20.000000, 10.000000], [20.000000, 20.000000]], "height_m": 20.000000}
//!   ],
//!   "name": "example"
//! }
//! ```
//!
//! [`save_scene`] writes this canonical layout (sorted keys, six decimals),
//! so a saved scene reloads and re-saves byte for byte.

use super::{Building, Scene, SceneError};
use crate::geometry::{Point, Rect};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    name: String,
    bounds: [f64; 4],
    buildings: Vec<BuildingFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingFile {
    footprint: Vec<[f64; 2]>,
    height_m: f64,
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io { path: path.to_path_buf(), source })?;
    parse_scene(&text)
}

pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    let [x_min, y_min, x_max, y_max] = file.bounds;
    let buildings = file
        .buildings
        .into_iter()
        .enumerate()
        .map(|(index, b)| {
            let footprint = b.footprint.iter().map(|[x, y]| Point::new(*x, *y)).collect();
            Building::new(footprint, b.height_m).map_err(|defect| SceneError::Building { index, defect })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Scene::new(file.name, Rect::new(x_min, y_min, x_max, y_max), buildings)
}

fn num(out: &mut String, v: f64) {
    // "-0.000000" would not survive a textual diff against "0.000000".
    let v = if v == 0.0 { 0.0 } else { v };
    write!(out, "{v:.6}").unwrap();
}

pub fn scene_to_string(scene: &Scene) -> String {
    let mut out = String::from("{\n  \"bounds\": [");
    let b = scene.bounds();
    for (k, v) in [b.x_min, b.y_min, b.x_max, b.y_max].into_iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        num(&mut out, v);
    }
    out.push_str("],\n  \"buildings\": [");
    for (k, bld) in scene.buildings().iter().enumerate() {
        out.push_str(if k == 0 { "\n" } else { ",\n" });
        out.push_str("    {\"footprint\": [");
        for (n, p) in bld.footprint().iter().enumerate() {
            if n > 0 {
                out.push_str(", ");
            }
            out.push('[');
            num(&mut out, p.x);
            out.push_str(", ");
            num(&mut out, p.y);
            out.push(']');
        }
        out.push_str("], \"height_m\": ");
        num(&mut out, bld.height_m());
        out.push('}');
    }
    if !scene.buildings().is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("],\n  \"name\": ");
    out.push_str(&serde_json::to_string(scene.name()).unwrap());
    out.push_str("\n}\n");
    out
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<(), SceneError> {
    let path = path.as_ref();
    std::fs::write(path, scene_to_string(scene)).map_err(|source| SceneError::Io { path: path.to_path_buf(), source })
}
