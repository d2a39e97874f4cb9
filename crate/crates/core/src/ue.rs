//! Uplink transmit power users need under a deployed network.
//!
//! Users are dropped uniformly over the cells some station serves, attach to
//! the station they hear loudest, and must close the uplink at that
//! station's sensitivity plus an SNR margin. Path loss is taken to be the
//! same in both directions.

use crate::geometry::Point;
use crate::power::StationClassName;
use crate::propagation::CoverageMap;
use crate::scene::CellMask;
use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UeError {
    #[error("invalid user simulation config: {0}")]
    InvalidConfig(String),
    #[error("network has no stations")]
    EmptyNetwork,
    #[error("coverage maps do not share the cell mask's grid")]
    GridMismatch,
    #[error("no outdoor cell is served by the network")]
    EmptyGreenRegion,
    #[error("no station reaches the user at ({x:.3}, {y:.3})")]
    Uncovered { x: f64, y: f64 },
    #[error("no sensitivity configured for {0} stations")]
    MissingSensitivity(StationClassName),
    #[error("every user exceeds the {cap_dbm} dBm power cap")]
    NoFeasibleUsers { cap_dbm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeSimConfig {
    pub num_users: usize,
    pub sensitivity_dbm: BTreeMap<StationClassName, f64>,
    pub snr_margin_db: f64,
    pub max_ue_power_dbm: f64,
    pub seed: u64,
}

impl Default for UeSimConfig {
    fn default() -> Self {
        UeSimConfig {
            num_users: 10_000,
            sensitivity_dbm: BTreeMap::from([(StationClassName::Macro, -100.0), (StationClassName::Femto, -90.0)]),
            snr_margin_db: 15.0,
            // 3GPP UE power class 3
            max_ue_power_dbm: 23.0,
            seed: 0,
        }
    }
}

impl UeSimConfig {
    pub fn validate(&self) -> Result<(), UeError> {
        if self.num_users == 0 {
            return Err(UeError::InvalidConfig("num_users must be at least 1".into()));
        }
        if !self.snr_margin_db.is_finite() || !self.max_ue_power_dbm.is_finite() {
            return Err(UeError::InvalidConfig("snr_margin_db and max_ue_power_dbm must be finite".into()));
        }
        if let Some((class, _)) = self.sensitivity_dbm.iter().find(|(_, v)| !v.is_finite()) {
            return Err(UeError::InvalidConfig(format!("sensitivity for {class} must be finite")));
        }
        Ok(())
    }

    pub fn sensitivity(&self, class: StationClassName) -> Result<f64, UeError> {
        self.sensitivity_dbm.get(&class).copied().ok_or(UeError::MissingSensitivity(class))
    }
}

#[derive(Debug, Clone)]
pub struct Station {
    pub map: CoverageMap,
    pub class: StationClassName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct User {
    pub position: Point,
    pub cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UeSample {
    pub user: User,
    pub serving_station: usize,
    pub downlink_rx_dbm: f64,
    pub path_loss_db: f64,
    pub required_tx_dbm: f64,
    pub feasible: bool,
}

fn check_network(stations: &[Station], mask: &CellMask, cfg: &UeSimConfig) -> Result<(), UeError> {
    if stations.is_empty() {
        return Err(UeError::EmptyNetwork);
    }
    if stations.iter().any(|s| s.map.grid() != mask.grid()) {
        return Err(UeError::GridMismatch);
    }
    for s in stations {
        cfg.sensitivity(s.class)?;
    }
    Ok(())
}

/// Outdoor cells where at least one station meets its own sensitivity.
pub fn green_region(stations: &[Station], mask: &CellMask, cfg: &UeSimConfig) -> Result<FixedBitSet, UeError> {
    check_network(stations, mask, cfg)?;
    let mut green = FixedBitSet::with_capacity(mask.grid().len());
    for s in stations {
        let sens = cfg.sensitivity(s.class)?;
        for idx in 0..mask.grid().len() {
            if mask.is_outdoor(idx) && s.map.rx_power_dbm(idx).is_some_and(|rx| rx >= sens) {
                green.insert(idx);
            }
        }
    }
    Ok(green)
}

fn drop_users(region: &FixedBitSet, mask: &CellMask, cfg: &UeSimConfig) -> Result<Vec<User>, UeError> {
    cfg.validate()?;
    let cells: Vec<usize> = region.ones().collect();
    if cells.is_empty() {
        return Err(UeError::EmptyGreenRegion);
    }
    let grid = mask.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.num_users)
        .map(|_| {
            let cell = cells[rng.random_range(0..cells.len())];
            let (i, j) = grid.coords(cell);
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let position = Point::new(
                grid.origin.x + (i as f64 + u) * grid.cell_size_m,
                grid.origin.y + (j as f64 + v) * grid.cell_size_m,
            );
            User { position, cell }
        })
        .collect())
}

/// `num_users` users, uniform over the network's green region.
pub fn populate_users(stations: &[Station], mask: &CellMask, cfg: &UeSimConfig) -> Result<Vec<User>, UeError> {
    drop_users(&green_region(stations, mask, cfg)?, mask, cfg)
}

/// Uplink power that lands at `sensitivity_dbm + snr_margin_db` after
/// `path_loss_db`.
pub fn uplink_budget_dbm(sensitivity_dbm: f64, snr_margin_db: f64, path_loss_db: f64) -> f64 {
    sensitivity_dbm + snr_margin_db + path_loss_db
}

/// Attaches `user` to the loudest station (ties to the lower index) and
/// computes the uplink power that station needs.
pub fn required_uplink_power(user: User, stations: &[Station], cfg: &UeSimConfig) -> Result<UeSample, UeError> {
    let (serving_station, downlink_rx_dbm) = stations
        .iter()
        .enumerate()
        .filter_map(|(k, s)| s.map.rx_power_dbm(user.cell).map(|rx| (k, rx)))
        .fold(None, |best: Option<(usize, f64)>, (k, rx)| match best {
            Some((_, b)) if b >= rx => best,
            _ => Some((k, rx)),
        })
        .ok_or(UeError::Uncovered { x: user.position.x, y: user.position.y })?;
    let station = &stations[serving_station];
    let path_loss_db = station.map.path_loss_db(user.cell).expect("serving station reaches the cell");
    let required_tx_dbm = uplink_budget_dbm(cfg.sensitivity(station.class)?, cfg.snr_margin_db, path_loss_db);
    Ok(UeSample {
        user,
        serving_station,
        downlink_rx_dbm,
        path_loss_db,
        required_tx_dbm,
        feasible: required_tx_dbm <= cfg.max_ue_power_dbm,
    })
}

pub fn evaluate_users(users: &[User], stations: &[Station], cfg: &UeSimConfig) -> Result<Vec<UeSample>, UeError> {
    users.par_iter().map(|&u| required_uplink_power(u, stations, cfg)).collect()
}

/// Linear interpolation between closest ranks of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxPowerStats {
    pub users: usize,
    pub mean_dbm: f64,
    pub median_dbm: f64,
    pub p5_dbm: f64,
    pub p25_dbm: f64,
    pub p50_dbm: f64,
    pub p75_dbm: f64,
    pub p95_dbm: f64,
    pub infeasible_fraction: f64,
    /// Sorted required powers of the feasible users.
    #[serde(skip)]
    pub cdf: Vec<f64>,
}

impl TxPowerStats {
    pub fn from_samples(samples: &[UeSample], cfg: &UeSimConfig) -> Result<Self, UeError> {
        let mut cdf: Vec<f64> = samples.iter().filter(|s| s.feasible).map(|s| s.required_tx_dbm).collect();
        if cdf.is_empty() {
            return Err(UeError::NoFeasibleUsers { cap_dbm: cfg.max_ue_power_dbm });
        }
        cdf.sort_by(f64::total_cmp);
        let p = |q| percentile(&cdf, q);
        Ok(TxPowerStats {
            users: samples.len(),
            mean_dbm: cdf.iter().sum::<f64>() / cdf.len() as f64,
            median_dbm: p(50.0),
            p5_dbm: p(5.0),
            p25_dbm: p(25.0),
            p50_dbm: p(50.0),
            p75_dbm: p(75.0),
            p95_dbm: p(95.0),
            infeasible_fraction: (samples.len() - cdf.len()) as f64 / samples.len() as f64,
            cdf,
        })
    }
}

#[derive(Debug, Clone)]
pub struct NetworkComparison {
    pub users: Vec<User>,
    pub samples_a: Vec<UeSample>,
    pub samples_b: Vec<UeSample>,
    pub stats_a: TxPowerStats,
    pub stats_b: TxPowerStats,
    /// `mean_a − mean_b`; positive when network `b` saves uplink power.
    pub mean_delta_db: f64,
}

/// Evaluates both networks on the same users, drawn from the cells both
/// networks serve.
pub fn compare_networks(net_a: &[Station], net_b: &[Station], mask: &CellMask, cfg: &UeSimConfig) -> Result<NetworkComparison, UeError> {
    let mut region = green_region(net_a, mask, cfg)?;
    region.intersect_with(&green_region(net_b, mask, cfg)?);
    let users = drop_users(&region, mask, cfg)?;
    let samples_a = evaluate_users(&users, net_a, cfg)?;
    let samples_b = evaluate_users(&users, net_b, cfg)?;
    let stats_a = TxPowerStats::from_samples(&samples_a, cfg)?;
    let stats_b = TxPowerStats::from_samples(&samples_b, cfg)?;
    let mean_delta_db = stats_a.mean_dbm - stats_b.mean_dbm;
    Ok(NetworkComparison { users, samples_a, samples_b, stats_a, stats_b, mean_delta_db })
}

/// CSV `x,y,station,required_tx_dbm,feasible`.
pub fn samples_csv(samples: &[UeSample]) -> String {
    let mut out = String::from("x,y,station,required_tx_dbm,feasible\n");
    for s in samples {
        writeln!(
            out,
            "{:.3},{:.3},{},{:.6},{}",
            s.user.position.x, s.user.position.y, s.serving_station, s.required_tx_dbm, s.feasible
        )
        .unwrap();
    }
    out
}

/// CSV `required_tx_dbm,cdf` over feasible users. Probabilities are taken
/// over all users, so the last row sits at `1 − infeasible_fraction`.
pub fn cdf_csv(stats: &TxPowerStats) -> String {
    let mut out = String::from("required_tx_dbm,cdf\n");
    for (k, v) in stats.cdf.iter().enumerate() {
        writeln!(out, "{v:.6},{:.6}", (k + 1) as f64 / stats.users as f64).unwrap();
    }
    out
}
