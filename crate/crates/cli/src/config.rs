//! Run configuration: one JSON file, every section optional.

use densify::geometry::Point;
use densify::placement::{Algorithm, StationTemplate};
use densify::power::{DensificationParams, StationClassName};
use densify::propagation::{RayTracerConfig, Transmitter};
use densify::scene::{GridSpec, SyntheticKind, SyntheticParams};
use densify::ue::UeSimConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneSource {
    /// Scene file; relative paths resolve against the config file.
    Path(PathBuf),
    Synthetic(SyntheticScene),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScene {
    pub kind: SyntheticKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: SyntheticParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    pub floor_dbm: f64,
    pub ceiling_dbm: f64,
    /// When set, the report includes the coverage ratio at this threshold.
    pub sensitivity_dbm: Option<f64>,
}

impl Default for CoverageSection {
    fn default() -> Self {
        CoverageSection { floor_dbm: -120.0, ceiling_dbm: -30.0, sensitivity_dbm: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroSection {
    /// Defaults to the center of the scene.
    pub position: Option<Point>,
    pub height_m: f64,
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
    pub sensitivity_dbm: f64,
}

impl Default for MacroSection {
    fn default() -> Self {
        MacroSection { position: None, height_m: 50.0, tx_power_dbm: 47.0, frequency_hz: 3.5e9, sensitivity_dbm: -100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementSection {
    pub algorithm: Algorithm,
    pub candidate_spacing_m: f64,
    pub sensitivity_dbm: f64,
    pub overshoot_factor: f64,
    pub iters_per_station: usize,
    pub k_max: usize,
    pub max_candidates: usize,
    /// Hill-climbing seed.
    pub seed: u64,
}

impl Default for PlacementSection {
    fn default() -> Self {
        PlacementSection {
            algorithm: Algorithm::Greedy,
            candidate_spacing_m: 15.0,
            sensitivity_dbm: -90.0,
            overshoot_factor: 1.1,
            iters_per_station: 50,
            k_max: 12,
            max_candidates: densify::placement::BRUTE_FORCE_LIMIT,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassCount {
    pub class: StationClassName,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub gamma: f64,
    pub s_values: Vec<f64>,
    pub n_max: u32,
    pub base_tx_power_w: f64,
    pub pa_efficiency: f64,
    /// Per-class amplifier efficiency replacing `pa_efficiency`.
    pub class_efficiency: BTreeMap<StationClassName, f64>,
    pub class_counts: Vec<ClassCount>,
}

impl Default for PowerSection {
    fn default() -> Self {
        PowerSection {
            gamma: 3.0,
            s_values: vec![0.05, 0.01, 0.005, 0.0001],
            n_max: 16,
            base_tx_power_w: 1.0,
            pa_efficiency: 0.4,
            class_efficiency: BTreeMap::new(),
            class_counts: vec![
                ClassCount { class: StationClassName::Macro, count: 1 },
                ClassCount { class: StationClassName::Femto, count: 30 },
            ],
        }
    }
}

impl PowerSection {
    pub fn params(&self, s: f64) -> DensificationParams {
        DensificationParams { gamma: self.gamma, s, base_tx_power_w: self.base_tx_power_w, pa_efficiency: self.pa_efficiency }
    }
}

/// Stations of one network in a user comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    /// The single macro from the `macro` section.
    Macro,
    /// Sites chosen by the configured placement algorithm, with the `station` template.
    Placement,
    /// Explicit sites with the `station` template.
    Sites(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeSection {
    pub simulation: UeSimConfig,
    pub network_a: NetworkSpec,
    pub network_b: NetworkSpec,
}

impl Default for UeSection {
    fn default() -> Self {
        UeSection { simulation: UeSimConfig::default(), network_a: NetworkSpec::Macro, network_b: NetworkSpec::Placement }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PleMode {
    Fit,
    Heatmap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PleSection {
    pub mode: PleMode,
    pub candidate_spacing_m: f64,
    pub max_radius_m: f64,
    pub min_distance_m: f64,
    pub min_samples: usize,
}

impl Default for PleSection {
    fn default() -> Self {
        let h = densify::ple::HeatmapParams::default();
        PleSection {
            mode: PleMode::Fit,
            candidate_spacing_m: 15.0,
            max_radius_m: h.max_radius_m,
            min_distance_m: h.min_distance_m,
            min_samples: h.min_samples,
        }
    }
}

fn default_station() -> StationTemplate {
    StationTemplate { height_m: 15.0, tx_power_dbm: 17.0, frequency_hz: 3.5e9 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: Option<SceneSource>,
    pub grid: GridSpec,
    pub tracer: RayTracerConfig,
    /// Single transmitter for `coverage` and `ple fit`.
    pub transmitter: Option<Transmitter>,
    /// Small-cell template for placement, user networks and PLE heatmaps.
    pub station: StationTemplate,
    /// Class of the template stations, for sensitivity lookup.
    pub station_class: StationClassName,
    #[serde(rename = "macro")]
    pub macro_station: MacroSection,
    pub coverage: CoverageSection,
    pub placement: PlacementSection,
    pub power: PowerSection,
    pub ue: UeSection,
    pub ple: PleSection,
    /// Overrides every per-section seed when set.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: None,
            grid: GridSpec { cell_size_m: 5.0, receiver_height_m: 1.5 },
            tracer: RayTracerConfig::default(),
            transmitter: None,
            station: default_station(),
            station_class: StationClassName::Femto,
            macro_station: MacroSection::default(),
            coverage: CoverageSection::default(),
            placement: PlacementSection::default(),
            power: PowerSection::default(),
            ue: UeSection::default(),
            ple: PleSection::default(),
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        if let Some(SceneSource::Path(p)) = &mut cfg.scene {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Pushes the run seed into every seeded section.
    pub fn resolve_seed(&mut self, flag: Option<u64>) {
        if flag.is_some() {
            self.seed = flag;
        }
        if let Some(s) = self.seed {
            self.tracer.seed = s;
            self.placement.seed = s;
            self.ue.simulation.seed = s;
        }
    }

    /// Checks the sections every command relies on.
    pub fn validate_common(&self) -> Result<(), String> {
        self.grid.validate().map_err(|e| format!("grid: {e}"))?;
        self.tracer.validate().map_err(|e| format!("tracer: {e}"))?;
        let s = &self.station;
        if !(s.height_m > 0.0 && s.frequency_hz > 0.0 && s.tx_power_dbm.is_finite()) {
            return Err("station: height_m and frequency_hz must be positive and tx_power_dbm finite".into());
        }
        let m = &self.macro_station;
        if !(m.height_m > 0.0 && m.frequency_hz > 0.0 && m.tx_power_dbm.is_finite() && m.sensitivity_dbm.is_finite()) {
            return Err("macro: height_m and frequency_hz must be positive, powers finite".into());
        }
        if !(self.coverage.floor_dbm < self.coverage.ceiling_dbm) {
            return Err("coverage: floor_dbm must be below ceiling_dbm".into());
        }
        Ok(())
    }

    pub fn validate_placement(&self) -> Result<(), String> {
        let p = &self.placement;
        if !(p.candidate_spacing_m > 0.0) {
            return Err("placement.candidate_spacing_m: must be positive".into());
        }
        if !(p.overshoot_factor >= 1.0) {
            return Err("placement.overshoot_factor: must be at least 1".into());
        }
        if p.iters_per_station == 0 {
            return Err("placement.iters_per_station: must be at least 1".into());
        }
        if p.k_max == 0 {
            return Err("placement.k_max: must be at least 1".into());
        }
        if p.max_candidates > densify::placement::BRUTE_FORCE_LIMIT {
            return Err(format!("placement.max_candidates: at most {}", densify::placement::BRUTE_FORCE_LIMIT));
        }
        Ok(())
    }

    pub fn validate_power(&self) -> Result<(), String> {
        let p = &self.power;
        if p.s_values.is_empty() {
            return Err("power.s_values: need at least one value".into());
        }
        for &s in &p.s_values {
            p.params(s).validate().map_err(|e| format!("power: {e}"))?;
        }
        if p.n_max == 0 {
            return Err("power.n_max: must be at least 1".into());
        }
        if let Some((c, _)) = p.class_efficiency.iter().find(|(_, &e)| !(e > 0.0 && e <= 1.0)) {
            return Err(format!("power.class_efficiency.{c}: must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn validate_ple(&self) -> Result<(), String> {
        let p = &self.ple;
        if !(p.candidate_spacing_m > 0.0) {
            return Err("ple.candidate_spacing_m: must be positive".into());
        }
        if !(p.max_radius_m > p.min_distance_m && p.min_distance_m >= 0.0) {
            return Err("ple: need max_radius_m > min_distance_m >= 0".into());
        }
        Ok(())
    }
}
