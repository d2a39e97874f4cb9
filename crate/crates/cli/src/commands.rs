use crate::config::{NetworkSpec, PleMode, RunConfig, SceneSource};
use densify::geometry::Point;
use densify::placement::{
    brute_force_placement, greedy_placement, hill_climb_placement, macro_reference, overlay_pgm, ratio_curve_csv, uniform_placement,
    Algorithm, CandidateCache, PlacementError, PlacementProblem, PlacementReport, PlacementSolution,
};
use densify::ple::{fit_ple, heatmap_csv, heatmap_pgm, ple_heatmap, samples_from_coverage, HeatmapParams};
use densify::power::{
    dbm_to_watts, optimal_densification, pa_input_power_w, power_report, station_class, sweep_csv, StationClassName,
    CLASS_TABLE_VERSION, STATION_CLASSES,
};
use densify::propagation::{compute_coverage_map, coverage_csv, coverage_pgm, coverage_ratio, coverage_set, CoverageSet, Transmitter};
use densify::scene::{generate_synthetic_scene, load_scene, rasterize, save_scene, CellMask, GridSpec, Scene, SyntheticKind, SyntheticParams};
use densify::ue::{cdf_csv, compare_networks, samples_csv, Station};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input; nothing was written.
    Config(String),
    /// Compute-level failure; artifacts written so far are kept.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

fn config_err(section: &str) -> impl Fn(String) -> CliError + '_ {
    move |m| CliError::Config(format!("{section}: {m}"))
}

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

/// Output directory plus per-phase wall-clock times.
struct Outputs {
    dir: PathBuf,
    timings: Vec<(String, f64)>,
    clock: Instant,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Compute(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), timings: Vec::new(), clock: Instant::now() })
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn lap(&mut self, phase: &str) {
        self.timings.push((phase.to_string(), self.clock.elapsed().as_secs_f64()));
        self.clock = Instant::now();
    }

    /// `report.json` is a pure function of the config; timings go to a
    /// separate file so reruns stay byte-identical.
    fn finish(self, command: &str, cfg: &RunConfig, body: Value) -> Result<(), CliError> {
        let report = json!({ "command": command, "version": VERSION, "config": cfg, "result": body });
        self.write("report.json", to_json(&report))?;
        let timings: serde_json::Map<String, Value> = self.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        self.write("timings.json", to_json(&timings))
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

struct World {
    scene: Scene,
    mask: CellMask,
}

fn load_world(cfg: &RunConfig) -> Result<World, CliError> {
    let scene = match &cfg.scene {
        None => return Err(CliError::Config("scene: required for this command".into())),
        Some(SceneSource::Path(p)) => load_scene(p).map_err(|e| CliError::Config(format!("scene: {e}")))?,
        Some(SceneSource::Synthetic(s)) => {
            generate_synthetic_scene(s.kind, &s.params, s.seed).map_err(|e| CliError::Config(format!("scene.synthetic: {e}")))?
        }
    };
    let mask = rasterize(&scene, &cfg.grid).map_err(|e| CliError::Config(format!("grid: {e}")))?;
    Ok(World { scene, mask })
}

fn scene_summary(w: &World) -> Value {
    json!({
        "name": w.scene.name(),
        "bounds": w.scene.bounds(),
        "buildings": w.scene.buildings().len(),
        "grid": [w.mask.width(), w.mask.height()],
        "outdoor_cells": w.mask.outdoor_count(),
    })
}

fn macro_tx(cfg: &RunConfig, scene: &Scene) -> Result<Transmitter, CliError> {
    let m = &cfg.macro_station;
    let b = scene.bounds();
    let position = m.position.unwrap_or(Point::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0));
    let tx = Transmitter { position, height_m: m.height_m, tx_power_dbm: m.tx_power_dbm, frequency_hz: m.frequency_hz };
    tx.validate(scene).map_err(|e| CliError::Config(format!("macro: {e}")))?;
    Ok(tx)
}

pub fn coverage(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate_common().map_err(CliError::Config)?;
    let tx = cfg.transmitter.ok_or_else(|| CliError::Config("transmitter: required for coverage".into()))?;
    let world = load_world(cfg)?;
    tx.validate(&world.scene).map_err(|e| config_err("transmitter")(e.to_string()))?;

    let mut outputs = Outputs::create(out)?;
    let map = compute_coverage_map(&world.scene, &world.mask, &tx, &cfg.tracer).map_err(compute_err)?;
    outputs.lap("coverage_map");
    outputs.write("coverage.csv", coverage_csv(&map))?;
    outputs.write("coverage.pgm", coverage_pgm(&map, cfg.coverage.floor_dbm, cfg.coverage.ceiling_dbm))?;
    let ratio = match cfg.coverage.sensitivity_dbm {
        Some(t) => {
            let set = coverage_set(&map, &world.mask, t).map_err(compute_err)?;
            Some(coverage_ratio(&[set], &world.mask).map_err(compute_err)?)
        }
        None => None,
    };
    let body = json!({ "scene": scene_summary(&world), "reached_cells": map.reached_count(), "coverage_ratio": ratio });
    outputs.finish("coverage", cfg, body)
}

struct PlacementRun {
    e_m: f64,
    target: f64,
    reference: CoverageSet,
    cache: CandidateCache,
    solution: PlacementSolution,
    /// Set when the target was not reached; `solution` is then the
    /// saturated one.
    failure: Option<String>,
}

fn placement_problem<'a>(cfg: &RunConfig, world: &'a World) -> Result<PlacementProblem<'a>, CliError> {
    cfg.validate_placement().map_err(CliError::Config)?;
    let problem = PlacementProblem {
        scene: &world.scene,
        mask: &world.mask,
        candidate_spacing_m: cfg.placement.candidate_spacing_m,
        station: cfg.station,
        sensitivity_dbm: cfg.placement.sensitivity_dbm,
        target_ratio: 1.0,
        tracer: cfg.tracer,
    };
    problem.validate().map_err(|e| CliError::Config(format!("placement: {e}")))?;
    let count = problem.candidate_sites().len();
    if count == 0 {
        return Err(CliError::Config("placement: no outdoor candidate sites".into()));
    }
    if cfg.placement.algorithm == Algorithm::Brute && count > cfg.placement.max_candidates {
        return Err(CliError::Config(format!(
            "placement: {count} candidates exceed the brute-force limit of {}; shrink the scene or raise candidate_spacing_m",
            cfg.placement.max_candidates
        )));
    }
    Ok(problem)
}

fn run_placement(cfg: &RunConfig, mut problem: PlacementProblem, macro_tx: &Transmitter, outputs: &mut Outputs) -> Result<PlacementRun, CliError> {
    let (e_m, reference) = macro_reference(&problem, macro_tx, cfg.macro_station.sensitivity_dbm).map_err(compute_err)?;
    outputs.lap("macro_reference");
    if e_m == 0.0 {
        return Err(CliError::Compute("the macro station covers no outdoor cell; nothing to match".into()));
    }
    let target = (cfg.placement.overshoot_factor * e_m).min(1.0);
    problem.target_ratio = target;
    let cache = CandidateCache::build(&problem).map_err(compute_err)?;
    outputs.lap("candidate_cache");
    let p = &cfg.placement;
    let result = match p.algorithm {
        Algorithm::Greedy => greedy_placement(&cache, target),
        Algorithm::Hill => hill_climb_placement(&cache, target, p.iters_per_station, p.seed),
        Algorithm::Uniform => uniform_placement(&problem, &cache, p.k_max),
        Algorithm::Brute => brute_force_placement(&cache, target, p.max_candidates),
    };
    outputs.lap("search");
    let (solution, failure) = match result {
        Ok(s) => (s, None),
        Err(e @ PlacementError::TargetUnreachable { .. }) => {
            let msg = e.to_string();
            let PlacementError::TargetUnreachable { solution, .. } = e else { unreachable!() };
            (*solution, Some(msg))
        }
        Err(e) => return Err(compute_err(e)),
    };
    log::info!("{} placed {} stations, ratio {:.4} (target {target:.4})", p.algorithm, solution.station_count(), solution.final_ratio);
    Ok(PlacementRun { e_m, target, reference, cache, solution, failure })
}

pub fn optimize(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate_common().map_err(CliError::Config)?;
    let world = load_world(cfg)?;
    let macro_tx = macro_tx(cfg, &world.scene)?;
    let problem = placement_problem(cfg, &world)?;

    let mut outputs = Outputs::create(out)?;
    let run = run_placement(cfg, problem, &macro_tx, &mut outputs)?;
    outputs.write("ratio_curve.csv", ratio_curve_csv(&run.solution))?;
    outputs.write("overlay.pgm", overlay_pgm(&run.solution, &run.cache, &world.mask, &run.reference))?;
    let report = PlacementReport::new(run.solution, &run.cache, &world.mask, run.e_m, run.target, &run.reference).map_err(compute_err)?;
    let body = json!({ "scene": scene_summary(&world), "placement": report, "target_reached": run.failure.is_none() });
    outputs.finish("optimize", cfg, body)?;
    match run.failure {
        Some(msg) => Err(CliError::Compute(msg)),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ClassRow {
    class: StationClassName,
    count: u32,
    tx_power_w: f64,
    pa_efficiency: f64,
    pa_input_w: f64,
    total_w: f64,
    ratio_vs_single_macro: f64,
}

pub fn power(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate_power().map_err(CliError::Config)?;
    let p = &cfg.power;
    let mut outputs = Outputs::create(out)?;

    let mut sweeps = Vec::new();
    for &s in &p.s_values {
        let params = p.params(s);
        outputs.write(&format!("sweep_s{s}.csv"), sweep_csv(&params, 1..=p.n_max))?;
        let d = optimal_densification(&params, p.n_max);
        sweeps.push(json!({
            "s": s,
            "n_star": d.n_star,
            "net_ratio_at_n_star": d.power_w / p.base_tx_power_w,
            "continuous_n_star": d.continuous_n_star,
            "crossover_n": d.crossover_n,
            "pa_input_w": pa_input_power_w(p.base_tx_power_w, p.pa_efficiency).map_err(compute_err)?,
        }));
    }

    let mut rows = Vec::new();
    let mut csv = String::from("class,count,tx_power_w,pa_input_w,total_w,ratio_vs_single_macro\n");
    for c in &p.class_counts {
        let class = station_class(c.class);
        let eff = p.class_efficiency.get(&c.class).copied().unwrap_or(p.pa_efficiency);
        let tx_power_w = dbm_to_watts(class.tx_power_dbm);
        let r = power_report(c.class, c.count);
        let row = ClassRow {
            class: c.class,
            count: c.count,
            tx_power_w,
            pa_efficiency: eff,
            pa_input_w: pa_input_power_w(tx_power_w, eff).map_err(compute_err)? * c.count as f64,
            total_w: r.total_w,
            ratio_vs_single_macro: r.ratio_vs_single_macro,
        };
        writeln!(
            csv,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            row.class, row.count, row.tx_power_w, row.pa_input_w, row.total_w, row.ratio_vs_single_macro
        )
        .unwrap();
        rows.push(row);
    }
    outputs.write("class_totals.csv", csv)?;
    outputs.lap("power");
    let body = json!({
        "gamma": p.gamma,
        "sweeps": sweeps,
        "class_totals": rows,
        "class_table": STATION_CLASSES,
        "class_table_version": CLASS_TABLE_VERSION,
    });
    outputs.finish("power", cfg, body)
}

fn network(cfg: &RunConfig, world: &World, spec: &NetworkSpec, outputs: &mut Outputs) -> Result<Vec<Station>, CliError> {
    let (class, txs): (StationClassName, Vec<Transmitter>) = match spec {
        NetworkSpec::Macro => (StationClassName::Macro, vec![macro_tx(cfg, &world.scene)?]),
        NetworkSpec::Sites(sites) => (cfg.station_class, sites.iter().map(|&p| cfg.station.at(p)).collect()),
        NetworkSpec::Placement => {
            let problem = placement_problem(cfg, world)?;
            let run = run_placement(cfg, problem, &macro_tx(cfg, &world.scene)?, outputs)?;
            if let Some(msg) = &run.failure {
                log::warn!("{msg}; using the saturated layout");
            }
            (cfg.station_class, run.solution.sites.iter().map(|&p| cfg.station.at(p)).collect())
        }
    };
    let stations = txs
        .iter()
        .map(|tx| {
            let map = compute_coverage_map(&world.scene, &world.mask, tx, &cfg.tracer).map_err(compute_err)?;
            Ok(Station { map, class })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    outputs.lap("network_maps");
    Ok(stations)
}

pub fn ue(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate_common().map_err(CliError::Config)?;
    let sim = &cfg.ue.simulation;
    sim.validate().map_err(|e| CliError::Config(format!("ue.simulation: {e}")))?;
    let world = load_world(cfg)?;
    for (name, spec) in [("ue.network_a", &cfg.ue.network_a), ("ue.network_b", &cfg.ue.network_b)] {
        match spec {
            NetworkSpec::Macro => {
                macro_tx(cfg, &world.scene)?;
                sim.sensitivity(StationClassName::Macro).map_err(|e| config_err(name)(e.to_string()))?;
            }
            NetworkSpec::Placement => {
                placement_problem(cfg, &world)?;
                sim.sensitivity(cfg.station_class).map_err(|e| config_err(name)(e.to_string()))?;
            }
            NetworkSpec::Sites(sites) => {
                if sites.is_empty() {
                    return Err(CliError::Config(format!("{name}: no sites")));
                }
                for &p in sites {
                    cfg.station.at(p).validate(&world.scene).map_err(|e| config_err(name)(e.to_string()))?;
                    // Rooftop mounts are fine; a station below the roof line would sit indoors.
                    if let Some(b) = world.scene.building_at(p) {
                        if world.scene.buildings()[b].height_m() > cfg.station.height_m {
                            return Err(CliError::Config(format!("{name}: site ({}, {}) lies inside building {b}", p.x, p.y)));
                        }
                    }
                }
                sim.sensitivity(cfg.station_class).map_err(|e| config_err(name)(e.to_string()))?;
            }
        }
    }

    let mut outputs = Outputs::create(out)?;
    let net_a = network(cfg, &world, &cfg.ue.network_a, &mut outputs)?;
    let net_b = network(cfg, &world, &cfg.ue.network_b, &mut outputs)?;
    let cmp = compare_networks(&net_a, &net_b, &world.mask, sim).map_err(compute_err)?;
    outputs.lap("users");
    outputs.write("users_a.csv", samples_csv(&cmp.samples_a))?;
    outputs.write("users_b.csv", samples_csv(&cmp.samples_b))?;
    outputs.write("cdf_a.csv", cdf_csv(&cmp.stats_a))?;
    outputs.write("cdf_b.csv", cdf_csv(&cmp.stats_b))?;
    let sites = |n: &[Station]| n.iter().map(|s| s.map.tx().position).collect::<Vec<_>>();
    let body = json!({
        "scene": scene_summary(&world),
        "network_a": { "sites": sites(&net_a), "stats": cmp.stats_a },
        "network_b": { "sites": sites(&net_b), "stats": cmp.stats_b },
        "mean_delta_db": cmp.mean_delta_db,
    });
    println!(
        "mean required uplink power: a {:.2} dBm, b {:.2} dBm, delta {:.2} dB",
        cmp.stats_a.mean_dbm, cmp.stats_b.mean_dbm, cmp.mean_delta_db
    );
    outputs.finish("ue", cfg, body)
}

/// Lattice points at `spacing/2 + k·spacing`, row-major, with dimensions.
fn lattice(scene: &Scene, spacing: f64) -> (Vec<Point>, usize, usize) {
    let b = scene.bounds();
    let nx = ((b.width() / spacing) - 0.5).ceil().max(1.0) as usize;
    let ny = ((b.height() / spacing) - 0.5).ceil().max(1.0) as usize;
    let points = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| Point::new(b.x_min + (i as f64 + 0.5) * spacing, b.y_min + (j as f64 + 0.5) * spacing)))
        .collect();
    (points, nx, ny)
}

pub fn ple(cfg: &RunConfig, mode: PleMode, out: &Path) -> Result<(), CliError> {
    cfg.validate_common().map_err(CliError::Config)?;
    cfg.validate_ple().map_err(CliError::Config)?;
    let p = &cfg.ple;
    let world = load_world(cfg)?;
    match mode {
        PleMode::Fit => {
            let tx = cfg.transmitter.ok_or_else(|| CliError::Config("transmitter: required for ple fit".into()))?;
            tx.validate(&world.scene).map_err(|e| config_err("transmitter")(e.to_string()))?;
            let mut outputs = Outputs::create(out)?;
            let map = compute_coverage_map(&world.scene, &world.mask, &tx, &cfg.tracer).map_err(compute_err)?;
            outputs.lap("coverage_map");
            let samples = samples_from_coverage(&map, &world.mask, p.max_radius_m, p.min_distance_m);
            let mut csv = String::from("distance_m,path_loss_db\n");
            for s in &samples {
                writeln!(csv, "{:.6},{:.6}", s.distance_m, s.path_loss_db).unwrap();
            }
            outputs.write("ple_samples.csv", csv)?;
            if samples.len() < p.min_samples {
                return Err(CliError::Compute(format!(
                    "insufficient samples for a fit: {} within {} m, need {}",
                    samples.len(),
                    p.max_radius_m,
                    p.min_samples
                )));
            }
            let fit = fit_ple(&samples).map_err(compute_err)?;
            println!("{}", fit.report_line());
            outputs.finish("ple", cfg, json!({ "mode": "fit", "fit": fit }))
        }
        PleMode::Heatmap => {
            let (points, nx, ny) = lattice(&world.scene, p.candidate_spacing_m);
            let params = HeatmapParams { max_radius_m: p.max_radius_m, min_distance_m: p.min_distance_m, min_samples: p.min_samples };
            let mut outputs = Outputs::create(out)?;
            let template = cfg.station.at(points[0]);
            let map = ple_heatmap(&world.scene, &world.mask, &points, &template, &cfg.tracer, &params).map_err(compute_err)?;
            outputs.lap("heatmap");
            outputs.write("ple_heatmap.csv", heatmap_csv(&map))?;
            outputs.write("ple_heatmap.pgm", heatmap_pgm(&map, nx, ny).map_err(compute_err)?)?;
            let fitted: Vec<f64> = map.entries.iter().filter_map(|e| e.outcome.gamma()).collect();
            let mean = (!fitted.is_empty()).then(|| fitted.iter().sum::<f64>() / fitted.len() as f64);
            let body = json!({ "mode": "heatmap", "lattice": [nx, ny], "fitted": fitted.len(), "mean_gamma": mean });
            outputs.finish("ple", cfg, body)
        }
    }
}

pub fn scene_validate(path: &Path, grid: &GridSpec) -> Result<(), CliError> {
    let scene = load_scene(path).map_err(|e| CliError::Config(e.to_string()))?;
    let mask = rasterize(&scene, grid).map_err(|e| CliError::Config(format!("grid: {e}")))?;
    let b = scene.bounds();
    println!(
        "{}: ok, {} buildings, bounds [{}, {}, {}, {}], {}x{} cells, {} outdoor",
        scene.name(),
        scene.buildings().len(),
        b.x_min,
        b.y_min,
        b.x_max,
        b.y_max,
        mask.width(),
        mask.height(),
        mask.outdoor_count()
    );
    Ok(())
}

pub fn scene_generate(kind: SyntheticKind, params: &SyntheticParams, seed: u64, out: &Path) -> Result<(), CliError> {
    let scene = generate_synthetic_scene(kind, params, seed).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Compute(format!("cannot create {}: {e}", dir.display())))?;
    }
    save_scene(&scene, out).map_err(compute_err)?;
    println!("{}: {} buildings written to {}", scene.name(), scene.buildings().len(), out.display());
    Ok(())
}
