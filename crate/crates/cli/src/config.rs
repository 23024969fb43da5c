//! Declarative run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Datelike, NaiveDate};
use qspill::ardl::BoundsCase;
use qspill::demo;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUTPUT_DIR_ENV: &str = "QSPILL_OUTPUT_DIR";

/// Level dummy equal to 1 on a closed date interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DummyWindow {
    pub name: String,
    /// `YYYY-MM` or `YYYY-MM-DD`; a month bound covers the whole month.
    pub start: String,
    pub end: String,
}

impl DummyWindow {
    pub fn covid() -> Self {
        Self {
            name: "covid".into(),
            start: "2020-01".into(),
            end: "2020-12".into(),
        }
    }

    /// Parse `name=START:END`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, range) = s.split_once('=').context("dummy must look like name=START:END")?;
        let (start, end) = range.split_once(':').context("dummy range must look like START:END")?;
        let d = Self {
            name: name.trim().into(),
            start: start.trim().into(),
            end: end.trim().into(),
        };
        d.bounds()?;
        Ok(d)
    }

    pub fn bounds(&self) -> Result<(NaiveDate, NaiveDate)> {
        let start = parse_bound(&self.start, false)?;
        let end = parse_bound(&self.end, true)?;
        if end < start {
            bail!("dummy {} ends before it starts", self.name);
        }
        Ok((start, end))
    }

    pub fn values(&self, dates: &[NaiveDate]) -> Result<Vec<f64>> {
        let (start, end) = self.bounds()?;
        Ok(dates
            .iter()
            .map(|d| if *d >= start && *d <= end { 1.0 } else { 0.0 })
            .collect())
    }
}

fn parse_bound(s: &str, end: bool) -> Result<NaiveDate> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    let first = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d")
        .with_context(|| format!("invalid date bound {s:?}"))?;
    if !end {
        return Ok(first);
    }
    let next = if first.month() == 12 {
        NaiveDate::from_ymd_opt(first.year() + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(first.year(), first.month() + 1, 1)
    };
    next.and_then(|d| d.pred_opt()).context("date out of range")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Price levels CSV. Unset means the built-in demo dataset.
    pub prices: Option<PathBuf>,
    /// Uncertainty index levels CSV. Unset means the built-in demo dataset.
    pub uncertainty: Option<PathBuf>,
    pub date_column: String,
    pub date_format: String,
    pub price_columns: Vec<String>,
    pub uncertainty_columns: Vec<String>,
    pub taus: Vec<f64>,
    /// Quantile grid `start:stop:step` for the static sweep.
    pub sweep: String,
    pub lags: usize,
    /// When set, the VAR lag order is chosen by BIC up to this cap and
    /// `lags` is ignored.
    pub var_lag_max: Option<usize>,
    pub horizon: usize,
    pub window: usize,
    pub robustness_windows: Vec<usize>,
    pub robustness_horizons: Vec<usize>,
    /// `n_1..n_5` caps for the linear model.
    pub ardl_caps: Vec<usize>,
    pub nardl_caps: Vec<usize>,
    pub bounds_case: BoundsCase,
    pub dummies_in_bounds: bool,
    /// Newey-West bandwidth; unset means classical standard errors.
    pub hac_lags: Option<usize>,
    pub bg_order: usize,
    pub dummies: Vec<DummyWindow>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prices: None,
            uncertainty: None,
            date_column: "date".into(),
            date_format: "%Y-%m".into(),
            price_columns: demo::PRICE_NAMES.iter().map(|s| s.to_string()).collect(),
            uncertainty_columns: demo::UNCERTAINTY_NAMES.iter().map(|s| s.to_string()).collect(),
            taus: vec![0.05, 0.5, 0.95],
            sweep: "0.05:0.95:0.05".into(),
            lags: 1,
            var_lag_max: None,
            horizon: 12,
            window: 36,
            robustness_windows: vec![36, 48, 60],
            robustness_horizons: vec![8, 12, 14],
            ardl_caps: vec![4; 5],
            nardl_caps: vec![4; 5],
            bounds_case: BoundsCase::UnrestrictedIntercept,
            dummies_in_bounds: true,
            hac_lags: None,
            bg_order: 1,
            dummies: vec![DummyWindow::covid()],
            output_dir: PathBuf::from("qspill-out"),
            seed: demo::DEMO_SEED,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// The config without its output location, which never changes results.
    pub fn canonical(&self) -> Self {
        Self {
            output_dir: PathBuf::new(),
            ..self.clone()
        }
    }

    /// SHA-256 over the JSON rendering of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        let parts: Vec<&str> = self.sweep.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            bail!("sweep must look like start:stop:step, got {:?}", self.sweep);
        };
        let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("invalid sweep value {s:?}"));
        Ok(qspill::connectedness::tau_grid(parse(a)?, parse(b)?, parse(c)?)?)
    }

    /// Checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            bail!("at least one tau is required");
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            bail!("tau must lie in (0, 1), got {t}");
        }
        if self.lags == 0 || self.horizon == 0 || self.window == 0 || self.var_lag_max == Some(0) {
            bail!("lags, horizon and window must be positive");
        }
        if self.price_columns.len() < 2 {
            bail!("connectedness needs at least two price columns");
        }
        if self.uncertainty_columns.is_empty() {
            bail!("at least one uncertainty column is required");
        }
        let k = self.uncertainty_columns.len();
        for (label, caps) in [("ardl_caps", &self.ardl_caps), ("nardl_caps", &self.nardl_caps)] {
            if caps.len() != k + 1 {
                bail!("{label} needs {} entries (dependent plus {k} regressors), got {}", k + 1, caps.len());
            }
            if caps[0] == 0 {
                bail!("{label}: the dependent lag cap must be at least 1");
            }
        }
        if self.bg_order == 0 {
            bail!("bg_order must be at least 1");
        }
        let mut names: Vec<&str> = self.dummies.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            bail!("dummy names must be unique");
        }
        for d in &self.dummies {
            d.bounds()?;
        }
        if self.robustness_windows.is_empty() || self.robustness_horizons.is_empty() {
            bail!("robustness windows and horizons must be non-empty");
        }
        if self.robustness_horizons.contains(&0) {
            bail!("robustness horizons must be positive");
        }
        self.sweep_grid()?;
        Ok(())
    }

    /// Checks against the loaded data: `returns` is the row count of the
    /// return panel and `lags` the resolved VAR order.
    pub fn validate_against(&self, returns: usize, lags: usize) -> Result<()> {
        let n = self.price_columns.len();
        let min_window = n * lags + lags + 1;
        if self.window <= min_window {
            bail!("window {} must exceed N*p + p + 1 = {min_window}", self.window);
        }
        if self.window > returns {
            bail!("window {} exceeds the {returns} available return observations", self.window);
        }
        if let Some(w) = self.robustness_windows.iter().find(|w| **w <= min_window || **w > returns) {
            bail!("robustness window {w} infeasible for {returns} observations");
        }
        let rolling = returns - self.window + 1;
        let k = self.uncertainty_columns.len();
        let d = self.dummies.len();
        for (label, caps, width) in [("ARDL", &self.ardl_caps, 1), ("NARDL", &self.nardl_caps, 2)] {
            let max = caps.iter().copied().max().unwrap_or(0);
            let coefs = 2 + width * k + d + caps[0] + caps[1..].iter().map(|c| width * (c + 1)).sum::<usize>();
            let available = rolling.saturating_sub(1 + max);
            if available < coefs + 10 {
                bail!(
                    "{label} caps need {} observations but the rolling series leaves {available}",
                    coefs + 10
                );
            }
        }
        Ok(())
    }
}
