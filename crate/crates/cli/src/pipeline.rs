//! Stage implementations shared by the subcommands and `run`.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qspill::ardl::{bounds_test, fit_ardl, select_lags_aic, ArdlFit, ArdlSpec, BoundsDecision, BoundsTestResult, Coefficient};
use qspill::connectedness::{quantile_sweep, relative_tail_dependence, select_var_lags_bic, static_spillovers, SpilloverTable};
use qspill::demo;
use qspill::diagnostics::{run_diagnostics, DiagnosticsReport};
use qspill::linalg::CovarianceKind;
use qspill::nardl::{fit_nardl, select_nardl_lags, NardlFit, NardlSpec};
use qspill::rolling::{robustness_sweep, rolling_spillovers, RollingConfig, RollingSeries};
use qspill::timeseries::{describe, load_panel, log_returns, pearson_correlation};
use qspill::unit_root::{run_battery, Deterministic, UnitRootBattery, UnitRootResult, UnitRootTest};
use qspill::TimeSeriesPanel;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, Output, MANIFEST};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Input,
    Describe,
    UnitRoot,
    SpilloverStatic,
    SpilloverRolling,
    Ardl,
    Nardl,
    Diagnose,
    Qr,
    Manifest,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Self::Config => "config",
            Self::Input => "input",
            Self::Describe => "describe",
            Self::UnitRoot => "unitroot",
            Self::SpilloverStatic => "spillover_static",
            Self::SpilloverRolling => "spillover_rolling",
            Self::Ardl => "ardl",
            Self::Nardl => "nardl",
            Self::Diagnose => "diagnose",
            Self::Qr => "qr",
            Self::Manifest => "manifest",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Self::Config => 2,
            Self::Input => 3,
            Self::Describe => 10,
            Self::UnitRoot => 11,
            Self::SpilloverStatic => 12,
            Self::SpilloverRolling => 13,
            Self::Ardl => 14,
            Self::Nardl => 15,
            Self::Diagnose => 16,
            Self::Qr => 17,
            Self::Manifest => 18,
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {:#}", self.stage.name(), self.error)
    }
}

impl std::error::Error for StageError {}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            error: e.into(),
        })
    }
}

pub fn load_prices(cfg: &RunConfig) -> Result<TimeSeriesPanel> {
    let cols: Vec<&str> = cfg.price_columns.iter().map(String::as_str).collect();
    match &cfg.prices {
        Some(path) => Ok(load_panel(path, &cfg.date_column, &cols, &cfg.date_format)?.panel),
        None => Ok(demo::demo_prices(cfg.seed)?.select(&cols)?),
    }
}

pub fn load_uncertainty(cfg: &RunConfig) -> Result<TimeSeriesPanel> {
    let cols: Vec<&str> = cfg.uncertainty_columns.iter().map(String::as_str).collect();
    match &cfg.uncertainty {
        Some(path) => Ok(load_panel(path, &cfg.date_column, &cols, &cfg.date_format)?.panel),
        None => Ok(demo::demo_dataset(cfg.seed)?.uncertainty.select(&cols)?),
    }
}

pub fn tau_label(tau: f64) -> String {
    format!("{tau}")
}

pub fn dependent_name(tau: f64) -> String {
    format!("ln_tsi_{}", tau_label(tau))
}

pub fn regressor_name(col: &str) -> String {
    format!("ln_{col}")
}

/// VAR lag order: fixed, or BIC-selected when a cap is configured.
pub fn resolve_lags(cfg: &RunConfig, returns: &TimeSeriesPanel) -> Result<usize> {
    match cfg.var_lag_max {
        Some(max) => Ok(select_var_lags_bic(returns.values(), max)?),
        None => Ok(cfg.lags),
    }
}

fn stats_rows(panel: &TimeSeriesPanel) -> Result<Vec<Vec<String>>> {
    Ok(describe(panel)?
        .into_iter()
        .map(|s| {
            vec![
                s.name,
                s.nobs.to_string(),
                num(s.mean),
                num(s.std_dev),
                num(s.skewness),
                num(s.kurtosis),
                num(s.jarque_bera_stat),
                num(s.jarque_bera_pvalue),
            ]
        })
        .collect())
}

const STATS_HEADER: [&str; 8] = ["series", "nobs", "mean", "std_dev", "skewness", "kurtosis", "jarque_bera", "jarque_bera_p"];

pub fn describe_stage(out: &mut Output, returns: &TimeSeriesPanel, ln_uncertainty: &TimeSeriesPanel) -> Result<()> {
    out.csv("describe/returns_stats.csv", &STATS_HEADER, &stats_rows(returns)?)?;
    out.csv("describe/uncertainty_stats.csv", &STATS_HEADER, &stats_rows(ln_uncertainty)?)?;
    let corr = pearson_correlation(returns)?;
    let mut rows = Vec::new();
    for (i, a) in corr.names.iter().enumerate() {
        for (j, b) in corr.names.iter().enumerate() {
            rows.push(vec![a.clone(), b.clone(), num(corr.coefficients[(i, j)]), num(corr.p_values[(i, j)])]);
        }
    }
    out.csv("describe/correlation.csv", &["a", "b", "pearson", "p_value"], &rows)?;
    out.json(
        "describe/describe.json",
        &serde_json::json!({
            "returns": describe(returns)?,
            "ln_uncertainty": describe(ln_uncertainty)?,
            "first_return": returns.dates().first().map(|d| d.to_string()),
            "last_return": returns.dates().last().map(|d| d.to_string()),
        }),
    )
}

fn table_rows(t: &SpilloverTable) -> Vec<Vec<String>> {
    let n = t.names.len();
    let mut rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let mut r = vec![t.names[i].clone()];
            r.extend(t.matrix[i].iter().map(|v| num(*v)));
            r.push(num(t.from_others[i]));
            r
        })
        .collect();
    let mut to = vec!["TO".to_string()];
    to.extend(t.to_others.iter().map(|v| num(*v)));
    to.push(num(t.to_others.iter().sum()));
    let mut inc = vec!["Inc.Own".to_string()];
    inc.extend(t.inc_own.iter().map(|v| num(*v)));
    inc.push(num(t.tsi));
    let mut net = vec!["NET".to_string()];
    net.extend(t.net.iter().map(|v| num(*v)));
    net.push(String::new());
    rows.extend([to, inc, net]);
    rows
}

/// Table-shaped static results per configured quantile and the sweep curve.
pub fn spillover_static_stage(out: &mut Output, cfg: &RunConfig, returns: &TimeSeriesPanel, lags: usize) -> Result<Vec<(f64, SpilloverTable)>> {
    let mut tables = Vec::new();
    let mut header: Vec<&str> = vec![""];
    header.extend(returns.names().iter().map(String::as_str));
    header.push("FROM");
    for &tau in &cfg.taus {
        let t = static_spillovers(returns, tau, lags, cfg.horizon).with_context(|| format!("static table at tau {tau}"))?;
        out.csv(&format!("spillover_static/table_tau_{}.csv", tau_label(tau)), &header, &table_rows(&t))?;
        tables.push((tau, t));
    }
    let mut summary = Vec::new();
    for (tau, t) in &tables {
        let mut r = vec![tau_label(*tau), num(t.tsi)];
        r.extend(t.net.iter().map(|v| num(*v)));
        r.push(t.stable.to_string());
        summary.push(r);
    }
    let mut sh = vec!["tau".to_string(), "tsi".to_string()];
    sh.extend(returns.names().iter().map(|n| format!("net:{n}")));
    sh.push("stable".into());
    let sh: Vec<&str> = sh.iter().map(String::as_str).collect();
    out.csv("spillover_static/summary.csv", &sh, &summary)?;

    let failures = quantile_sweep_stage(out, cfg, returns, lags)?;

    let lookup = |x: f64| tables.iter().find(|(t, _)| (t - x).abs() < 1e-12).map(|(_, t)| t);
    let rtd = match (lookup(0.95), lookup(0.05)) {
        (Some(u), Some(l)) => Some(relative_tail_dependence(u, l)),
        _ => None,
    };
    out.json(
        "spillover_static/spillover_static.json",
        &serde_json::json!({
            "lags": lags,
            "lag_selection": if cfg.var_lag_max.is_some() { "bic" } else { "fixed" },
            "horizon": cfg.horizon,
            "sigma": "uncentered residual second moment",
            "tables": tables.iter().map(|(tau, t)| serde_json::json!({"tau": tau, "table": t})).collect::<Vec<_>>(),
            "rtd_095_minus_005": rtd,
            "sweep_failures": failures,
        }),
    )?;
    Ok(tables)
}

/// TSI and net indices over the configured quantile grid. Returns the
/// quantiles whose fit failed.
pub fn quantile_sweep_stage(out: &mut Output, cfg: &RunConfig, returns: &TimeSeriesPanel, lags: usize) -> Result<Vec<serde_json::Value>> {
    let grid = cfg.sweep_grid()?;
    let sweep = quantile_sweep(returns, &grid, lags, cfg.horizon)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for p in &sweep {
        match &p.table {
            Ok(t) => {
                rows.push(vec![tau_label(p.tau), "tsi".into(), num(t.tsi)]);
                for (i, name) in t.names.iter().enumerate() {
                    rows.push(vec![tau_label(p.tau), format!("net:{name}"), num(t.net[i])]);
                }
            }
            Err(e) => failures.push(serde_json::json!({"tau": p.tau, "reason": e.to_string()})),
        }
    }
    out.csv("spillover_static/sweep_long.csv", &["tau", "metric", "value"], &rows)?;
    Ok(failures)
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn spillover_rolling_stage(out: &mut Output, cfg: &RunConfig, returns: &TimeSeriesPanel, lags: usize) -> Result<RollingSeries> {
    let config = RollingConfig {
        window: cfg.window,
        horizon: cfg.horizon,
        taus: cfg.taus.clone(),
        lags,
    };
    let series = rolling_spillovers(returns, &config)?;
    let rows: Vec<Vec<String>> = series
        .long_format()
        .into_iter()
        .map(|(d, tau, metric, v)| vec![d.to_string(), tau_label(tau), metric, num(v)])
        .collect();
    out.csv("spillover_rolling/rolling_long.csv", &["date", "tau", "metric", "value"], &rows)?;
    let failures: Vec<Vec<String>> = series
        .failures
        .iter()
        .map(|f| vec![f.end_date.to_string(), tau_label(f.tau), f.reason.clone()])
        .collect();
    out.csv("spillover_rolling/failures.csv", &["date", "tau", "reason"], &failures)?;
    if let (Some(_), Some(_)) = (
        cfg.taus.iter().find(|t| (**t - 0.95).abs() < 1e-12),
        cfg.taus.iter().find(|t| (**t - 0.05).abs() < 1e-12),
    ) {
        let rtd = series.rtd(0.95, 0.05)?;
        let rows: Vec<Vec<String>> = series
            .dates
            .iter()
            .zip(rtd)
            .filter_map(|(d, v)| v.map(|v| vec![d.to_string(), num(v)]))
            .collect();
        out.csv("spillover_rolling/rtd.csv", &["date", "rtd"], &rows)?;
    }

    let sweep = robustness_sweep(returns, &cfg.robustness_windows, &cfg.robustness_horizons, &cfg.taus, lags);
    let mut rows = Vec::new();
    let mut sweep_errors = Vec::new();
    for ((window, horizon), run) in &sweep.runs {
        match run {
            Ok(s) => {
                for (k, tau) in cfg.taus.iter().enumerate() {
                    for (d, t) in s.dates.iter().zip(&s.tables[k]) {
                        if let Some(t) = t {
                            rows.push(vec![window.to_string(), horizon.to_string(), d.to_string(), tau_label(*tau), num(t.tsi)]);
                        }
                    }
                }
            }
            Err(e) => sweep_errors.push(serde_json::json!({"window": window, "horizon": horizon, "reason": e.to_string()})),
        }
    }
    out.csv("spillover_rolling/robustness_long.csv", &["window", "horizon", "date", "tau", "tsi"], &rows)?;

    let per_tau: Vec<serde_json::Value> = cfg
        .taus
        .iter()
        .map(|&tau| {
            let v: Vec<f64> = series.tsi(tau).unwrap_or_default().into_iter().flatten().collect();
            serde_json::json!({
                "tau": tau,
                "windows": v.len(),
                "min_tsi": v.iter().copied().fold(f64::INFINITY, f64::min),
                "max_tsi": v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "std_tsi": if v.len() > 1 { std_dev(&v) } else { 0.0 },
            })
        })
        .collect();
    out.json(
        "spillover_rolling/spillover_rolling.json",
        &serde_json::json!({
            "config": config,
            "window_ends": series.dates.len(),
            "failed_windows": series.failures.len(),
            "summary": per_tau,
            "robustness": {
                "windows": cfg.robustness_windows,
                "horizons": cfg.robustness_horizons,
                "estimation_passes": sweep.estimation_passes,
                "qvar_fits": sweep.qvar_fits,
                "errors": sweep_errors,
            },
        }),
    )?;
    Ok(series)
}

/// Log TSI per quantile joined with log uncertainty and the dummies.
pub fn model_panel(cfg: &RunConfig, series: &RollingSeries, uncertainty: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let keep: Vec<usize> = (0..series.dates.len())
        .filter(|&d| series.tables.iter().all(|t| t[d].is_some()))
        .collect();
    if keep.len() != series.dates.len() {
        bail!(
            "{} rolling windows failed; the regression stages need a gap-free TSI series",
            series.dates.len() - keep.len()
        );
    }
    let dates: Vec<_> = keep.iter().map(|&d| series.dates[d]).collect();
    let mut cols = Vec::new();
    for (k, &tau) in series.config.taus.iter().enumerate() {
        let v: Vec<f64> = keep
            .iter()
            .map(|&d| series.tables[k][d].as_ref().map(|t| t.tsi.ln()).expect("kept"))
            .collect();
        cols.push((dependent_name(tau), v));
    }
    let tsi = TimeSeriesPanel::from_columns(dates, cols)?;
    regression_panel(cfg, &tsi, uncertainty)
}

/// Join a dependent panel with log regressors and add the dummies.
pub fn regression_panel(cfg: &RunConfig, dependent: &TimeSeriesPanel, uncertainty: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let ln = uncertainty.ln()?;
    let renamed = TimeSeriesPanel::new(
        ln.dates().to_vec(),
        ln.names().iter().map(|n| regressor_name(n)).collect(),
        ln.values().clone(),
    )?;
    let mut joined = dependent.join(&renamed).context("aligning dependent and regressor dates")?;
    for d in &cfg.dummies {
        let v = d.values(joined.dates())?;
        joined = joined.with_column(&d.name, &v)?;
    }
    Ok(joined)
}

fn unit_root_rows(b: &UnitRootBattery) -> Vec<Vec<String>> {
    let row = |transform: &str, r: &UnitRootResult| {
        vec![
            b.name.clone(),
            transform.to_string(),
            r.test.label().to_string(),
            r.spec.label().to_string(),
            num(r.statistic),
            r.significance.stars().to_string(),
            r.lags_or_bandwidth.to_string(),
            r.nobs.to_string(),
        ]
    };
    b.level
        .iter()
        .map(|r| row("level", r))
        .chain(b.first_difference.iter().map(|r| row("first_difference", r)))
        .collect()
}

pub fn unitroot_stage(out: &mut Output, panel: &TimeSeriesPanel, columns: &[String]) -> Result<Vec<UnitRootBattery>> {
    let tests = [UnitRootTest::Adf, UnitRootTest::Pp, UnitRootTest::Kpss];
    let specs = [Deterministic::Intercept, Deterministic::TrendAndIntercept];
    let mut batteries = Vec::new();
    let mut rows = Vec::new();
    for c in columns {
        let b = run_battery(c, &panel.column_vec(c)?, &tests, &specs).with_context(|| format!("unit-root tests on {c}"))?;
        rows.extend(unit_root_rows(&b));
        batteries.push(b);
    }
    out.csv(
        "unitroot/unit_root.csv",
        &["series", "transform", "test", "deterministic", "statistic", "stars", "lags_or_bandwidth", "nobs"],
        &rows,
    )?;
    let flagged: Vec<&str> = batteries.iter().filter(|b| b.possibly_i2).map(|b| b.name.as_str()).collect();
    out.json(
        "unitroot/unit_root.json",
        &serde_json::json!({ "batteries": batteries, "possibly_i2": flagged }),
    )?;
    Ok(batteries)
}

fn ardl_spec(cfg: &RunConfig, dependent: &str, regressors: &[String], caps: &[usize]) -> ArdlSpec {
    let regs: Vec<&str> = regressors.iter().map(String::as_str).collect();
    let dummies: Vec<&str> = cfg.dummies.iter().map(|d| d.name.as_str()).collect();
    let mut spec = ArdlSpec::new(dependent, &regs, &dummies).with_caps(caps);
    spec.case = cfg.bounds_case;
    spec.dummies_in_bounds = cfg.dummies_in_bounds;
    spec.covariance = match cfg.hac_lags {
        Some(lags) => CovarianceKind::Hac { lags },
        None => CovarianceKind::Standard,
    };
    spec
}

fn coef_rows(label: &str, panel: &str, coefs: &[Coefficient]) -> Vec<Vec<String>> {
    coefs
        .iter()
        .map(|c| {
            vec![
                label.to_string(),
                panel.to_string(),
                c.label.clone(),
                num(c.estimate),
                num(c.std_error),
                num(c.t_stat),
                num(c.p_value),
            ]
        })
        .collect()
}

const COEF_HEADER: [&str; 7] = ["model", "panel", "term", "estimate", "std_error", "t_stat", "p_value"];

fn regression_rows(label: &str, fit: &ArdlFit, bounds: &BoundsTestResult, diag: &DiagnosticsReport) -> Vec<Vec<String>> {
    let short: Vec<Coefficient> = fit.short_run().cloned().collect();
    let levels: Vec<Coefficient> = fit.level_terms().cloned().collect();
    let mut rows = coef_rows(label, "A_short_run", &short);
    rows.extend(coef_rows(label, "A_levels", &levels));
    rows.extend(coef_rows(label, "B_long_run", &fit.long_run));
    rows.extend(coef_rows(label, "B_ect", std::slice::from_ref(&fit.ect)));
    let stat = |name: &str, s: f64, p: f64| vec![label.to_string(), "C_diagnostics".into(), name.into(), num(s), String::new(), String::new(), num(p)];
    rows.push(stat("F_PSS", bounds.f_statistic, f64::NAN));
    rows.push(stat("t_PSS", bounds.t_statistic, f64::NAN));
    rows.push(stat("BG", diag.bg.statistic, diag.bg.p_value));
    rows.push(stat("BP", diag.bp.statistic, diag.bp.p_value));
    rows.push(stat("RESET", diag.reset.statistic, diag.reset.p_value));
    rows.push(stat("CUSUM", diag.cusum.max_normalized_excursion, diag.cusum.p_value));
    rows
}

fn decision_label(d: BoundsDecision) -> &'static str {
    match d {
        BoundsDecision::Cointegrated => "cointegrated",
        BoundsDecision::Inconclusive => "inconclusive",
        BoundsDecision::NotCointegrated => "not_cointegrated",
    }
}

fn bounds_rows(label: &str, b: &BoundsTestResult) -> Vec<Vec<String>> {
    let t_bands = b.t_bands.as_deref().unwrap_or_default();
    let tests = [("F", b.f_statistic, b.bands.as_slice()), ("t", b.t_statistic, t_bands)];
    tests
        .iter()
        .flat_map(|&(test, stat, bands)| {
            bands.iter().map(move |band| {
                vec![
                    label.to_string(),
                    test.to_string(),
                    num(stat),
                    b.case.label().to_string(),
                    b.k.to_string(),
                    num(band.level),
                    num(band.lower),
                    num(band.upper),
                    decision_label(band.decision).to_string(),
                ]
            })
        })
        .collect()
}

const BOUNDS_HEADER: [&str; 9] = ["model", "test", "statistic", "case", "k", "level", "lower", "upper", "decision"];

#[derive(Serialize)]
struct RegressionSummary<'a> {
    model: &'a str,
    dependent: &'a str,
    selected_lags: &'a [usize],
    lag_caps: &'a [usize],
    sample_start: Option<String>,
    nobs: usize,
    aic: f64,
    r_squared: f64,
    coefficients: &'a [Coefficient],
    long_run: &'a [Coefficient],
    ect: &'a Coefficient,
    ect_form: &'a [Coefficient],
    bounds: &'a BoundsTestResult,
    diagnostics: &'a DiagnosticsReport,
}

fn summary<'a>(label: &'a str, fit: &'a ArdlFit, bounds: &'a BoundsTestResult, diag: &'a DiagnosticsReport) -> RegressionSummary<'a> {
    RegressionSummary {
        model: label,
        dependent: &fit.spec.dependent,
        selected_lags: &fit.spec.selected_lags,
        lag_caps: &fit.spec.lag_caps,
        sample_start: fit.sample_dates.first().map(|d| d.to_string()),
        nobs: fit.nobs(),
        aic: fit.aic,
        r_squared: fit.r_squared,
        coefficients: &fit.coefficients,
        long_run: &fit.long_run,
        ect: &fit.ect,
        ect_form: &fit.ect_form,
        bounds,
        diagnostics: diag,
    }
}

pub struct ArdlRun {
    pub label: String,
    pub fit: ArdlFit,
    pub bounds: BoundsTestResult,
    pub diagnostics: DiagnosticsReport,
}

pub fn ardl_stage(out: &mut Output, cfg: &RunConfig, panel: &TimeSeriesPanel, dependents: &[(String, String)]) -> Result<Vec<ArdlRun>> {
    let regs: Vec<String> = cfg.uncertainty_columns.iter().map(|c| regressor_name(c)).collect();
    let mut runs = Vec::new();
    let mut coef = Vec::new();
    let mut bounds_all = Vec::new();
    for (label, dep) in dependents {
        let spec = ardl_spec(cfg, dep, &regs, &cfg.ardl_caps);
        let selected = select_lags_aic(panel, &spec).with_context(|| format!("lag selection for {dep}"))?;
        let fit = fit_ardl(panel, &selected).with_context(|| format!("ARDL fit for {dep}"))?;
        let bounds = bounds_test(&fit)?;
        let diagnostics = run_diagnostics(fit.ols(), cfg.bg_order).with_context(|| format!("diagnostics for {dep}"))?;
        coef.extend(regression_rows(label, &fit, &bounds, &diagnostics));
        bounds_all.extend(bounds_rows(label, &bounds));
        runs.push(ArdlRun {
            label: label.clone(),
            fit,
            bounds,
            diagnostics,
        });
    }
    out.csv("ardl/ardl_table.csv", &COEF_HEADER, &coef)?;
    out.csv("ardl/bounds.csv", &BOUNDS_HEADER, &bounds_all)?;
    cusum_csv(out, "ardl/cusum.csv", runs.iter().map(|r| (r.label.as_str(), &r.diagnostics)))?;
    let models: Vec<RegressionSummary> = runs.iter().map(|r| summary(&r.label, &r.fit, &r.bounds, &r.diagnostics)).collect();
    out.json(
        "ardl/ardl.json",
        &serde_json::json!({
            "selection": "AIC over the full lag grid on a common sample",
            "bounds_case": cfg.bounds_case.label(),
            "dummies_in_bounds": cfg.dummies_in_bounds,
            "models": models,
        }),
    )?;
    Ok(runs)
}

fn cusum_csv<'a>(out: &mut Output, rel: &str, runs: impl Iterator<Item = (&'a str, &'a DiagnosticsReport)>) -> Result<()> {
    let mut rows = Vec::new();
    for (label, d) in runs {
        for (i, (w, b)) in d.cusum.path.iter().zip(&d.cusum.bound).enumerate() {
            rows.push(vec![label.to_string(), (i + 1).to_string(), num(*w), num(*b)]);
        }
    }
    out.csv(rel, &["model", "step", "cusum", "bound_5pct"], &rows)
}

pub struct NardlRun {
    pub label: String,
    pub fit: NardlFit,
    pub bounds: BoundsTestResult,
    pub diagnostics: DiagnosticsReport,
}

pub fn nardl_stage(out: &mut Output, cfg: &RunConfig, panel: &TimeSeriesPanel, dependents: &[(String, String)]) -> Result<Vec<NardlRun>> {
    let regs: Vec<String> = cfg.uncertainty_columns.iter().map(|c| regressor_name(c)).collect();
    let mut runs = Vec::new();
    let mut coef = Vec::new();
    let mut bounds_all = Vec::new();
    let mut asym = Vec::new();
    for (label, dep) in dependents {
        let spec = NardlSpec::all_asymmetric(ardl_spec(cfg, dep, &regs, &cfg.nardl_caps));
        let selected = select_nardl_lags(panel, &spec).with_context(|| format!("NARDL lag selection for {dep}"))?;
        let fit = fit_nardl(panel, &selected).with_context(|| format!("NARDL fit for {dep}"))?;
        let bounds = bounds_test(&fit.fit)?;
        let diagnostics = run_diagnostics(fit.fit.ols(), cfg.bg_order).with_context(|| format!("diagnostics for {dep}"))?;
        coef.extend(regression_rows(label, &fit.fit, &bounds, &diagnostics));
        bounds_all.extend(bounds_rows(label, &bounds));
        for w in &fit.wald {
            asym.push(vec![
                label.clone(),
                w.variable.clone(),
                num(w.short_run.f_stat),
                num(w.short_run.p_value),
                num(w.long_run.f_stat),
                num(w.long_run.p_value),
            ]);
        }
        runs.push(NardlRun {
            label: label.clone(),
            fit,
            bounds,
            diagnostics,
        });
    }
    out.csv("nardl/nardl_table.csv", &COEF_HEADER, &coef)?;
    out.csv("nardl/bounds.csv", &BOUNDS_HEADER, &bounds_all)?;
    out.csv(
        "nardl/asymmetry.csv",
        &["model", "variable", "short_run_w", "short_run_p", "long_run_w", "long_run_p"],
        &asym,
    )?;
    cusum_csv(out, "nardl/cusum.csv", runs.iter().map(|r| (r.label.as_str(), &r.diagnostics)))?;
    let models: Vec<serde_json::Value> = runs
        .iter()
        .map(|r| {
            serde_json::json!({
                "summary": summary(&r.label, &r.fit.fit, &r.bounds, &r.diagnostics),
                "asymmetric": r.fit.spec.asymmetric,
                "wald": r.fit.wald,
            })
        })
        .collect();
    out.json(
        "nardl/nardl.json",
        &serde_json::json!({
            "selection": "AIC over the full lag grid on a common sample; one lag order per +/- pair",
            "short_run_restriction": "sum of positive equals sum of negative difference coefficients",
            "bounds_case": cfg.bounds_case.label(),
            "dummies_in_bounds": cfg.dummies_in_bounds,
            "models": models,
        }),
    )?;
    Ok(runs)
}

pub fn write_manifest(out: &mut Output, cfg: &RunConfig, stages: &[Stage]) -> Result<()> {
    let files = out.inventory()?;
    let manifest = serde_json::json!({
        "tool": "qspill",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "data": if cfg.prices.is_none() || cfg.uncertainty.is_none() { "built-in demo dataset (partly or fully)" } else { "user files" },
        "stages": stages.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "config": cfg.canonical(),
        "files": files.iter().map(|(p, h)| serde_json::json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
    });
    out.json(MANIFEST, &manifest)
}

/// Every stage in dependency order. On failure the `FAILED` marker names
/// the stage and the outputs written so far are kept.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Vec<Stage>, StageError> {
    cfg.validate().stage(Stage::Config)?;
    let mut out = Output::new(&cfg.output_dir, &cfg.hash()).stage(Stage::Config)?;
    out.clear_failed_marker().stage(Stage::Config)?;
    let result = run_stages(&mut out, cfg);
    if let Err(e) = &result {
        let _ = out.mark_failed(e.stage.name(), &format!("{:#}", e.error));
    }
    result
}

fn run_stages(out: &mut Output, cfg: &RunConfig) -> Result<Vec<Stage>, StageError> {
    let prices = load_prices(cfg).stage(Stage::Input)?;
    let uncertainty = load_uncertainty(cfg).stage(Stage::Input)?;
    let returns = log_returns(&prices).stage(Stage::Input)?;
    let lags = resolve_lags(cfg, &returns).stage(Stage::Config)?;
    cfg.validate_against(returns.nobs(), lags).stage(Stage::Config)?;
    let ln_unc = uncertainty.ln().stage(Stage::Input)?;

    let mut done = Vec::new();
    describe_stage(out, &returns, &ln_unc).stage(Stage::Describe)?;
    done.push(Stage::Describe);
    spillover_static_stage(out, cfg, &returns, lags).stage(Stage::SpilloverStatic)?;
    done.push(Stage::SpilloverStatic);
    let series = spillover_rolling_stage(out, cfg, &returns, lags).stage(Stage::SpilloverRolling)?;
    done.push(Stage::SpilloverRolling);

    let panel = model_panel(cfg, &series, &uncertainty).stage(Stage::UnitRoot)?;
    let dependents: Vec<(String, String)> = cfg.taus.iter().map(|t| (format!("tau_{}", tau_label(*t)), dependent_name(*t))).collect();
    let mut columns: Vec<String> = dependents.iter().map(|(_, d)| d.clone()).collect();
    columns.extend(cfg.uncertainty_columns.iter().map(|c| regressor_name(c)));
    unitroot_stage(out, &panel, &columns).stage(Stage::UnitRoot)?;
    done.push(Stage::UnitRoot);

    ardl_stage(out, cfg, &panel, &dependents).stage(Stage::Ardl)?;
    done.push(Stage::Ardl);
    nardl_stage(out, cfg, &panel, &dependents).stage(Stage::Nardl)?;
    done.push(Stage::Nardl);
    write_manifest(out, cfg, &done).stage(Stage::Manifest)?;
    Ok(done)
}

/// Full pipeline on the built-in demo data, writing into `dir`.
pub fn run_demo_pipeline(dir: &Path) -> Result<Vec<Stage>> {
    let cfg = RunConfig {
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    };
    run_pipeline(&cfg).map_err(|e| anyhow!("{e}"))
}
