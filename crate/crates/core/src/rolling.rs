//! Rolling-window re-estimation of quantile connectedness.
//!
//! Windows are counted in observations. A window whose estimation fails is
//! recorded with its reason and leaves a gap at its end date; nothing is
//! interpolated. Work is split into an estimation stage, which depends on
//! `(window, tau)`, and a decomposition stage, which depends on the
//! horizon, so horizon sweeps reuse the fitted models.

use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectedness::{fit_qvar_values, gfevd, spillover_indices, QvarModel, SpilloverTable};
use crate::error::{Error, Result};
use crate::timeseries::TimeSeriesPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window: usize,
    pub horizon: usize,
    pub taus: Vec<f64>,
    pub lags: usize,
}

impl RollingConfig {
    pub fn validate(&self, panel: &TimeSeriesPanel) -> Result<()> {
        let n = panel.nvars();
        if n < 2 {
            return Err(Error::InvalidArgument("connectedness needs N >= 2 variables".into()));
        }
        if self.lags == 0 || self.horizon == 0 {
            return Err(Error::InvalidArgument("lags and horizon must be positive".into()));
        }
        if self.taus.is_empty() {
            return Err(Error::InvalidArgument("at least one tau is required".into()));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {t}")));
        }
        let min_window = n * self.lags + self.lags + 1;
        if self.window <= min_window {
            return Err(Error::InvalidArgument(format!(
                "window {} must exceed N*p + p + 1 = {min_window}",
                self.window
            )));
        }
        if self.window > panel.nobs() {
            return Err(Error::InsufficientData {
                needed: self.window,
                got: panel.nobs(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub end_date: NaiveDate,
    pub tau: f64,
    pub reason: String,
}

/// One rolling path per quantile, aligned on window-end dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingSeries {
    pub config: RollingConfig,
    pub names: Vec<String>,
    /// Window-end dates, `T - window + 1` of them.
    pub dates: Vec<NaiveDate>,
    /// `tables[k][d]` is the table for `config.taus[k]` at `dates[d]`.
    pub tables: Vec<Vec<Option<SpilloverTable>>>,
    pub failures: Vec<WindowFailure>,
}

impl RollingSeries {
    fn tau_index(&self, tau: f64) -> Result<usize> {
        self.config
            .taus
            .iter()
            .position(|t| (t - tau).abs() < 1e-12)
            .ok_or_else(|| Error::InvalidArgument(format!("tau {tau} not in rolling run")))
    }

    pub fn tsi(&self, tau: f64) -> Result<Vec<Option<f64>>> {
        let k = self.tau_index(tau)?;
        Ok(self.tables[k].iter().map(|t| t.as_ref().map(|t| t.tsi)).collect())
    }

    pub fn net(&self, tau: f64, variable: usize) -> Result<Vec<Option<f64>>> {
        let k = self.tau_index(tau)?;
        Ok(self.tables[k]
            .iter()
            .map(|t| t.as_ref().map(|t| t.net[variable]))
            .collect())
    }

    /// `TSI(upper) - TSI(lower)` per date.
    pub fn rtd(&self, upper: f64, lower: f64) -> Result<Vec<Option<f64>>> {
        let up = self.tsi(upper)?;
        let lo = self.tsi(lower)?;
        Ok(up
            .into_iter()
            .zip(lo)
            .map(|(u, l)| Some(u? - l?))
            .collect())
    }

    /// Long-format rows `(date, tau, metric, value)` covering TSI, to, from
    /// and net for every variable. Gaps are omitted.
    pub fn long_format(&self) -> Vec<(NaiveDate, f64, String, f64)> {
        let mut rows = Vec::new();
        for (k, tau) in self.config.taus.iter().enumerate() {
            for (d, date) in self.dates.iter().enumerate() {
                let Some(t) = &self.tables[k][d] else { continue };
                rows.push((*date, *tau, "tsi".to_string(), t.tsi));
                for (i, name) in self.names.iter().enumerate() {
                    rows.push((*date, *tau, format!("to:{name}"), t.to_others[i]));
                    rows.push((*date, *tau, format!("from:{name}"), t.from_others[i]));
                    rows.push((*date, *tau, format!("net:{name}"), t.net[i]));
                }
            }
        }
        rows
    }
}

/// Fitted models for every window end at one `(window, tau)` pair.
pub fn rolling_models(panel: &TimeSeriesPanel, window: usize, tau: f64, lags: usize) -> Vec<Result<QvarModel>> {
    let t = panel.nobs();
    let values = panel.values();
    (window - 1..t)
        .into_par_iter()
        .map(|end| {
            let start = end + 1 - window;
            let block = values.rows(start, window).into_owned();
            fit_qvar_values(&block, panel.names(), tau, lags)
        })
        .collect()
}

fn decompose(models: &[Result<QvarModel>], horizon: usize) -> Vec<Result<SpilloverTable, String>> {
    models
        .par_iter()
        .map(|m| match m {
            Ok(m) => gfevd(m, horizon)
                .map(|f| spillover_indices(&f))
                .map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        })
        .collect()
}

fn assemble(
    panel: &TimeSeriesPanel,
    config: &RollingConfig,
    per_tau: Vec<Vec<Result<SpilloverTable, String>>>,
) -> RollingSeries {
    let dates: Vec<NaiveDate> = panel.dates()[config.window - 1..].to_vec();
    let mut failures = Vec::new();
    let mut tables = Vec::with_capacity(per_tau.len());
    for (k, results) in per_tau.into_iter().enumerate() {
        let mut row = Vec::with_capacity(results.len());
        for (d, r) in results.into_iter().enumerate() {
            match r {
                Ok(t) => row.push(Some(t)),
                Err(reason) => {
                    failures.push(WindowFailure {
                        end_date: dates[d],
                        tau: config.taus[k],
                        reason,
                    });
                    row.push(None);
                }
            }
        }
        tables.push(row);
    }
    RollingSeries {
        config: config.clone(),
        names: panel.names().to_vec(),
        dates,
        tables,
        failures,
    }
}

pub fn rolling_spillovers(panel: &TimeSeriesPanel, config: &RollingConfig) -> Result<RollingSeries> {
    config.validate(panel)?;
    let per_tau = config
        .taus
        .iter()
        .map(|&tau| decompose(&rolling_models(panel, config.window, tau, config.lags), config.horizon))
        .collect();
    Ok(assemble(panel, config, per_tau))
}

/// Cross product of window sizes and horizons over shared quantiles.
#[derive(Debug)]
pub struct RobustnessSweep {
    pub runs: Vec<((usize, usize), Result<RollingSeries>)>,
    /// Distinct `(window, tau)` estimation passes.
    pub estimation_passes: usize,
    /// Individual window fits performed.
    pub qvar_fits: usize,
}

pub fn robustness_sweep(
    panel: &TimeSeriesPanel,
    windows: &[usize],
    horizons: &[usize],
    taus: &[f64],
    lags: usize,
) -> RobustnessSweep {
    let fits = AtomicUsize::new(0);
    let mut passes = 0;
    let mut runs = Vec::new();
    for &window in windows {
        let probe = RollingConfig {
            window,
            horizon: horizons.first().copied().unwrap_or(1),
            taus: taus.to_vec(),
            lags,
        };
        if let Err(e) = probe.validate(panel) {
            let msg = e.to_string();
            for &h in horizons {
                runs.push(((window, h), Err(Error::InvalidArgument(msg.clone()))));
            }
            continue;
        }
        let models: Vec<Vec<Result<QvarModel>>> = taus
            .iter()
            .map(|&tau| {
                passes += 1;
                let m = rolling_models(panel, window, tau, lags);
                fits.fetch_add(m.len(), Ordering::Relaxed);
                m
            })
            .collect();
        for &horizon in horizons {
            let config = RollingConfig {
                window,
                horizon,
                taus: taus.to_vec(),
                lags,
            };
            let result = config.validate(panel).map(|_| {
                let per_tau = models.iter().map(|m| decompose(m, horizon)).collect();
                assemble(panel, &config, per_tau)
            });
            runs.push(((window, horizon), result));
        }
    }
    RobustnessSweep {
        runs,
        estimation_passes: passes,
        qvar_fits: fits.into_inner(),
    }
}
