//! Analytic transmit-power and network-power models for densification.
//!
//! Splitting one cell of radius `R` into `n²` cells of radius `R/n` lowers
//! each station's required transmit power by `n^γ`, so the whole network
//! radiates `n^(2−γ)` of the original power. Each station also burns a fixed
//! interface power `s · P_tx`, giving `P_net(n) = P_tx · (n^(2−γ) + s·n²)`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown station class `{0}`")]
    UnknownClass(String),
}

/// Version tag echoed by every report built from [`STATION_CLASSES`].
pub const CLASS_TABLE_VERSION: &str = "classes-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationClassName {
    Macro,
    Micro,
    Pico,
    Femto,
}

impl std::str::FromStr for StationClassName {
    type Err = PowerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "macro" => Ok(StationClassName::Macro),
            "micro" => Ok(StationClassName::Micro),
            "pico" => Ok(StationClassName::Pico),
            "femto" => Ok(StationClassName::Femto),
            other => Err(PowerError::UnknownClass(other.to_string())),
        }
    }
}

impl std::fmt::Display for StationClassName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StationClassName::Macro => "macro",
            StationClassName::Micro => "micro",
            StationClassName::Pico => "pico",
            StationClassName::Femto => "femto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationClass {
    pub name: StationClassName,
    pub tx_power_dbm: f64,
    pub total_power_w: f64,
    /// `None` where no typical mounting height is established.
    pub typical_height_m: Option<f64>,
}

pub const STATION_CLASSES: [StationClass; 4] = [
    StationClass { name: StationClassName::Macro, tx_power_dbm: 47.0, total_power_w: 1000.0, typical_height_m: Some(50.0) },
    StationClass { name: StationClassName::Micro, tx_power_dbm: 38.0, total_power_w: 144.0, typical_height_m: None },
    StationClass { name: StationClassName::Pico, tx_power_dbm: 21.0, total_power_w: 14.7, typical_height_m: None },
    StationClass { name: StationClassName::Femto, tx_power_dbm: 17.0, total_power_w: 10.4, typical_height_m: Some(15.0) },
];

pub fn station_class(name: StationClassName) -> &'static StationClass {
    STATION_CLASSES.iter().find(|c| c.name == name).expect("every class is tabulated")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensificationParams {
    pub gamma: f64,
    /// Interface power per station as a fraction of `base_tx_power_w`.
    pub s: f64,
    pub base_tx_power_w: f64,
    pub pa_efficiency: f64,
}

impl Default for DensificationParams {
    fn default() -> Self {
        DensificationParams { gamma: 3.0, s: 0.01, base_tx_power_w: 1.0, pa_efficiency: 0.4 }
    }
}

impl DensificationParams {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(PowerError::Domain(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(PowerError::Domain(format!("s must be non-negative, got {}", self.s)));
        }
        if !(self.base_tx_power_w > 0.0 && self.base_tx_power_w.is_finite()) {
            return Err(PowerError::Domain(format!("base_tx_power_w must be positive, got {}", self.base_tx_power_w)));
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return Err(PowerError::Domain(format!("pa_efficiency must lie in (0, 1], got {}", self.pa_efficiency)));
        }
        Ok(())
    }
}

/// Single-station over densified-network transmit power, `n^(γ−2)`.
pub fn tx_power_ratio(n: u32, gamma: f64) -> f64 {
    (n.max(1) as f64).powf(gamma - 2.0)
}

/// `P_tx · (n^(2−γ) + s·n²)`.
pub fn net_power_w(n: u32, p: &DensificationParams) -> f64 {
    let n = n.max(1) as f64;
    p.base_tx_power_w * (n.powf(2.0 - p.gamma) + p.s * n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Densification {
    pub n_star: u32,
    pub power_w: f64,
    /// Stationary point `((γ−2)/(2s))^(1/γ)` of the continuous curve, when
    /// one exists (`γ > 2`, `s > 0`).
    pub continuous_n_star: Option<f64>,
    /// First `n` past the optimum at which the network again spends more
    /// than the single station's transmit power.
    pub crossover_n: Option<u32>,
}

/// Integer `n ∈ [1, n_max]` minimizing [`net_power_w`]; ties go to the
/// smaller `n`.
pub fn optimal_densification(p: &DensificationParams, n_max: u32) -> Densification {
    let n_max = n_max.max(1);
    let mut n_star = 1;
    let mut best = net_power_w(1, p);
    for n in 2..=n_max {
        let v = net_power_w(n, p);
        if v < best {
            best = v;
            n_star = n;
        }
    }
    let continuous_n_star = (p.gamma > 2.0 && p.s > 0.0).then(|| ((p.gamma - 2.0) / (2.0 * p.s)).powf(1.0 / p.gamma));
    let crossover_n = ((n_star + 1)..=n_max).find(|&n| net_power_w(n, p) > p.base_tx_power_w);
    Densification { n_star, power_w: best, continuous_n_star, crossover_n }
}

/// Power drawn by an amplifier delivering `tx_out_w`.
pub fn pa_input_power_w(tx_out_w: f64, efficiency: f64) -> Result<f64, PowerError> {
    if !(tx_out_w > 0.0 && tx_out_w.is_finite()) {
        return Err(PowerError::Domain(format!("output power must be positive, got {tx_out_w}")));
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(PowerError::Domain(format!("efficiency must lie in (0, 1], got {efficiency}")));
    }
    Ok(tx_out_w / efficiency)
}

pub fn network_total_power_w(class: &StationClass, count: u32) -> f64 {
    count as f64 * class.total_power_w
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_w: f64) -> Result<f64, PowerError> {
    if !(p_w > 0.0 && p_w.is_finite()) {
        return Err(PowerError::Domain(format!("power must be positive, got {p_w} W")));
    }
    Ok(10.0 * p_w.log10() + 30.0)
}

/// One row of the class-count table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub class: StationClassName,
    pub count: u32,
    pub total_w: f64,
    pub ratio_vs_single_macro: f64,
    pub table_version: &'static str,
}

pub fn power_report(class: StationClassName, count: u32) -> PowerReport {
    let c = station_class(class);
    let total_w = network_total_power_w(c, count);
    PowerReport {
        class,
        count,
        total_w,
        ratio_vs_single_macro: total_w / station_class(StationClassName::Macro).total_power_w,
        table_version: CLASS_TABLE_VERSION,
    }
}

/// CSV `n,net_ratio` with `net_ratio = net_power_w(n) / base_tx_power_w`.
pub fn sweep_csv(p: &DensificationParams, n_range: std::ops::RangeInclusive<u32>) -> String {
    let mut out = String::from("n,net_ratio\n");
    for n in n_range {
        writeln!(out, "{n},{:.9}", net_power_w(n, p) / p.base_tx_power_w).unwrap();
    }
    out
}
