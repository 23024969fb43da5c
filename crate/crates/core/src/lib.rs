//! Quantile-VAR return connectedness and ARDL/NARDL modelling of spillover
//! indices.
//!
//! The crate covers the full estimation chain: dated panel ingestion and
//! descriptive statistics, unit-root testing, linear quantile regression,
//! quantile-VAR generalized variance decompositions with Diebold-Yilmaz
//! spillover indices (static, quantile sweeps and rolling windows), linear
//! and nonlinear ARDL bounds-testing models, and a residual diagnostics
//! battery.

pub mod ardl;
pub mod connectedness;
pub mod demo;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod hac;
pub mod linalg;
pub mod nardl;
pub mod quantile;
pub mod rolling;
pub mod timeseries;
pub mod unit_root;

pub use error::{Error, Result};
pub use timeseries::TimeSeriesPanel;
