//! Coverage-driven small-cell densification.
//!
//! * [`scene`]: building footprints, grid rasterization, scene files.
//! * [`propagation`]: ray-launched coverage maps and coverage sets.
//! * [`ple`]: path-loss exponent fitting and heatmaps.
//! * [`placement`]: minimum-count station placement against a coverage target.
//! * [`power`]: analytic densification power models.
//! * [`ue`]: user-side uplink power under a deployed network.

pub mod geometry;
pub mod pgm;
pub mod placement;
pub mod ple;
pub mod power;
pub mod propagation;
pub mod scene;
pub mod ue;
