//! Augmented Dickey-Fuller, Phillips-Perron and KPSS tests.
//!
//! ADF lag order is chosen by the Schwarz criterion over a common sample,
//! then the chosen model is re-estimated on all available observations.
//! PP and KPSS use a Newey-West Bartlett long-run variance. Critical values
//! for ADF/PP come from MacKinnon's (2010) finite-sample response surfaces;
//! KPSS uses the asymptotic table of Kwiatkowski et al. (1992).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hac;
use crate::linalg::Ols;
use crate::timeseries::diff;

pub const MIN_OBS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    Intercept,
    TrendAndIntercept,
}

impl Deterministic {
    pub fn label(self) -> &'static str {
        match self {
            Self::Intercept => "intercept",
            Self::TrendAndIntercept => "trend_and_intercept",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitRootTest {
    Adf,
    Pp,
    Kpss,
}

impl UnitRootTest {
    pub fn label(self) -> &'static str {
        match self {
            Self::Adf => "ADF",
            Self::Pp => "PP",
            Self::Kpss => "KPSS",
        }
    }
}

/// Strongest conventional level at which the null is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    None,
    TenPercent,
    FivePercent,
    OnePercent,
}

impl Significance {
    pub fn stars(self) -> &'static str {
        match self {
            Self::None => "",
            Self::TenPercent => "*",
            Self::FivePercent => "**",
            Self::OnePercent => "***",
        }
    }

    /// Whether the null is rejected at `level` (0.01, 0.05 or 0.10).
    pub fn rejects_at(self, level: f64) -> bool {
        let required = if level <= 0.01 {
            Self::OnePercent
        } else if level <= 0.05 {
            Self::FivePercent
        } else {
            Self::TenPercent
        };
        self >= required
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

impl CriticalValues {
    fn band_left(&self, stat: f64) -> Significance {
        if stat < self.one {
            Significance::OnePercent
        } else if stat < self.five {
            Significance::FivePercent
        } else if stat < self.ten {
            Significance::TenPercent
        } else {
            Significance::None
        }
    }

    fn band_right(&self, stat: f64) -> Significance {
        if stat > self.one {
            Significance::OnePercent
        } else if stat > self.five {
            Significance::FivePercent
        } else if stat > self.ten {
            Significance::TenPercent
        } else {
            Significance::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: UnitRootTest,
    pub statistic: f64,
    pub significance: Significance,
    pub spec: Deterministic,
    /// Selected ADF lag, or the Bartlett bandwidth for PP/KPSS.
    pub lags_or_bandwidth: usize,
    pub nobs: usize,
    pub critical_values: CriticalValues,
}

impl UnitRootResult {
    /// ADF/PP: unit root rejected. KPSS: stationarity rejected.
    pub fn rejects_at(&self, level: f64) -> bool {
        self.significance.rejects_at(level)
    }
}

/// MacKinnon (2010) response surface `b_inf + b1/T + b2/T^2 + b3/T^3`
/// for the single-series (N = 1) Dickey-Fuller tau statistic.
pub fn dickey_fuller_critical_values(spec: Deterministic, nobs: usize) -> CriticalValues {
    let t = nobs as f64;
    let surface = |c: [f64; 4]| c[0] + c[1] / t + c[2] / (t * t) + c[3] / (t * t * t);
    match spec {
        Deterministic::Intercept => CriticalValues {
            one: surface([-3.43035, -6.5393, -16.786, -79.433]),
            five: surface([-2.86154, -2.8903, -4.234, -40.040]),
            ten: surface([-2.56677, -1.5384, -2.809, 0.0]),
        },
        Deterministic::TrendAndIntercept => CriticalValues {
            one: surface([-3.95877, -9.0531, -28.428, -134.155]),
            five: surface([-3.41049, -4.3904, -9.036, -45.374]),
            ten: surface([-3.12705, -2.5856, -3.925, -22.380]),
        },
    }
}

pub fn kpss_critical_values(spec: Deterministic) -> CriticalValues {
    match spec {
        Deterministic::Intercept => CriticalValues {
            one: 0.739,
            five: 0.463,
            ten: 0.347,
        },
        Deterministic::TrendAndIntercept => CriticalValues {
            one: 0.216,
            five: 0.146,
            ten: 0.119,
        },
    }
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < MIN_OBS {
        return Err(Error::InsufficientData {
            needed: MIN_OBS,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in series".into()));
    }
    let first = series[0];
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if series.iter().all(|v| (v - first).abs() <= 1e-14 * scale) {
        return Err(Error::ConstantSeries);
    }
    Ok(())
}

/// Schwert's rule `floor(12 (T/100)^{1/4})`, capped below `T/3`.
pub fn default_max_lags(nobs: usize) -> usize {
    let rule = (12.0 * (nobs as f64 / 100.0).powf(0.25)).floor() as usize;
    rule.min((nobs / 3).saturating_sub(1))
}

fn deterministic_columns(spec: Deterministic, rows: usize, trend_offset: usize) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![1.0; rows]];
    if spec == Deterministic::TrendAndIntercept {
        cols.push((0..rows).map(|i| (i + trend_offset) as f64).collect());
    }
    cols
}

/// ADF regression over the rows `dy[start..]`; returns the fit and the index
/// of the lagged-level coefficient.
fn adf_regression(y: &[f64], dy: &[f64], spec: Deterministic, lags: usize, start: usize) -> Result<(Ols, usize)> {
    // dy[t] = y[t+1] - y[t]; the regression for dy[t] uses level y[t].
    let rows = dy.len() - start;
    let mut cols = deterministic_columns(spec, rows, start + 1);
    let level_idx = cols.len();
    cols.push((start..dy.len()).map(|t| y[t]).collect());
    for l in 1..=lags {
        cols.push((start..dy.len()).map(|t| dy[t - l]).collect());
    }
    let x = crate::linalg::from_columns(rows, &cols);
    let target = DVector::from_column_slice(&dy[start..]);
    Ok((Ols::fit(&x, &target)?, level_idx))
}

pub fn adf_test(series: &[f64], spec: Deterministic, max_lags: usize) -> Result<UnitRootResult> {
    check_series(series)?;
    let t = series.len();
    if 3 * max_lags >= t {
        return Err(Error::InvalidArgument(format!(
            "max_lags {max_lags} must be below T/3 = {}",
            t / 3
        )));
    }
    let dy = diff(series);
    if dy.iter().all(|d| *d == 0.0) {
        return Err(Error::ConstantSeries);
    }
    let mut best = (f64::INFINITY, 0);
    for lags in 0..=max_lags {
        let (fit, _) = adf_regression(series, &dy, spec, lags, max_lags)?;
        let sic = fit.bic();
        if sic < best.0 {
            best = (sic, lags);
        }
    }
    let lags = best.1;
    let (fit, idx) = adf_regression(series, &dy, spec, lags, lags)?;
    let statistic = fit.coefficients[idx] / fit.std_errors()[idx];
    let nobs = fit.nobs();
    let critical_values = dickey_fuller_critical_values(spec, nobs);
    Ok(UnitRootResult {
        test: UnitRootTest::Adf,
        statistic,
        significance: critical_values.band_left(statistic),
        spec,
        lags_or_bandwidth: lags,
        nobs,
        critical_values,
    })
}

pub fn pp_test(series: &[f64], spec: Deterministic) -> Result<UnitRootResult> {
    pp_test_with_bandwidth(series, spec, hac::default_bandwidth(series.len()))
}

/// Phillips-Perron `Z_tau` with an explicit Bartlett bandwidth.
pub fn pp_test_with_bandwidth(series: &[f64], spec: Deterministic, bandwidth: usize) -> Result<UnitRootResult> {
    check_series(series)?;
    let t = series.len();
    let bandwidth = bandwidth.min(t / 2);
    let rows = t - 1;
    let mut cols = deterministic_columns(spec, rows, 1);
    let idx = cols.len();
    cols.push(series[..rows].to_vec());
    let x = crate::linalg::from_columns(rows, &cols);
    let target = DVector::from_column_slice(&series[1..]);
    let fit = Ols::fit(&x, &target)?;
    let n = fit.nobs() as f64;
    let k = fit.ncoef() as f64;
    let se = fit.std_errors()[idx];
    let tau = (fit.coefficients[idx] - 1.0) / se;
    let resid: Vec<f64> = fit.residuals.iter().copied().collect();
    let s2 = fit.sigma2();
    let sigma = s2.sqrt();
    let gamma0 = s2 * (n - k) / n;
    let lam2 = hac::long_run_variance(&resid, bandwidth);
    if lam2 <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    let lam = lam2.sqrt();
    let statistic = (gamma0 / lam2).sqrt() * tau - 0.5 * ((lam2 - gamma0) / lam) * (n * se / sigma);
    let critical_values = dickey_fuller_critical_values(spec, fit.nobs());
    Ok(UnitRootResult {
        test: UnitRootTest::Pp,
        statistic,
        significance: critical_values.band_left(statistic),
        spec,
        lags_or_bandwidth: bandwidth,
        nobs: fit.nobs(),
        critical_values,
    })
}

pub fn kpss_test(series: &[f64], spec: Deterministic) -> Result<UnitRootResult> {
    kpss_test_with_bandwidth(series, spec, hac::default_bandwidth(series.len()))
}

/// `T^{-2} sum_t S_t^2 / lambda^2` on demeaned (or detrended) residuals.
pub fn kpss_test_with_bandwidth(series: &[f64], spec: Deterministic, bandwidth: usize) -> Result<UnitRootResult> {
    check_series(series)?;
    let t = series.len();
    let bandwidth = bandwidth.min(t / 2);
    let x = crate::linalg::from_columns(t, &deterministic_columns(spec, t, 0));
    let fit = Ols::fit(&x, &DVector::from_column_slice(series))?;
    let resid: Vec<f64> = fit.residuals.iter().copied().collect();
    let lrv = hac::long_run_variance(&resid, bandwidth);
    if lrv <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    let mut partial = 0.0;
    let mut sum_sq = 0.0;
    for e in &resid {
        partial += e;
        sum_sq += partial * partial;
    }
    let statistic = sum_sq / ((t * t) as f64 * lrv);
    let critical_values = kpss_critical_values(spec);
    Ok(UnitRootResult {
        test: UnitRootTest::Kpss,
        statistic,
        significance: critical_values.band_right(statistic),
        spec,
        lags_or_bandwidth: bandwidth,
        nobs: t,
        critical_values,
    })
}

/// Level and first-difference results for one series across all three
/// tests and both deterministic specifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootBattery {
    pub name: String,
    pub level: Vec<UnitRootResult>,
    pub first_difference: Vec<UnitRootResult>,
    /// Neither ADF nor PP rejects a unit root in the first difference at 5%
    /// under either specification: the series may be I(2), which falls
    /// outside the bounds-testing framework.
    pub possibly_i2: bool,
}

pub fn run_battery(name: &str, series: &[f64], tests: &[UnitRootTest], specs: &[Deterministic]) -> Result<UnitRootBattery> {
    let run = |x: &[f64]| -> Result<Vec<UnitRootResult>> {
        let mut out = Vec::new();
        for &test in tests {
            for &spec in specs {
                out.push(match test {
                    UnitRootTest::Adf => adf_test(x, spec, default_max_lags(x.len()))?,
                    UnitRootTest::Pp => pp_test(x, spec)?,
                    UnitRootTest::Kpss => kpss_test(x, spec)?,
                });
            }
        }
        Ok(out)
    };
    let level = run(series)?;
    let first_difference = run(&diff(series))?;
    let df_tests: Vec<&UnitRootResult> = first_difference
        .iter()
        .filter(|r| r.test != UnitRootTest::Kpss)
        .collect();
    let possibly_i2 = !df_tests.is_empty() && df_tests.iter().all(|r| !r.rejects_at(0.05));
    Ok(UnitRootBattery {
        name: name.to_string(),
        level,
        first_difference,
        possibly_i2,
    })
}
