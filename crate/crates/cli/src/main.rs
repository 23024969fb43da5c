use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use qspill::ardl::BoundsCase;
use qspill::diagnostics::run_diagnostics;
use qspill::linalg::Ols;
use qspill::quantile::qr_fit;
use qspill::timeseries::{load_panel, log_returns};
use qspill::TimeSeriesPanel;

use qspill_cli::config::{DummyWindow, RunConfig, OUTPUT_DIR_ENV};
use qspill_cli::output::{num, Output};
use qspill_cli::pipeline::{self, Stage, StageContext, StageError};

#[derive(Parser)]
#[command(name = "qspill", version, about = "Quantile spillovers and ARDL/NARDL models of uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics and correlations of returns.
    Describe(Common),
    /// ADF, PP and KPSS tests.
    Unitroot {
        #[command(flatten)]
        common: Common,
        /// Test columns of this CSV instead of log TSI and log uncertainty.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(long)]
        no_log: bool,
    },
    /// Linear quantile regression of one column on others (with intercept).
    Qr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        tau: Vec<f64>,
    },
    /// Quantile connectedness.
    Spillover {
        #[command(subcommand)]
        kind: SpilloverKind,
    },
    /// Linear ARDL with bounds test and diagnostics.
    Ardl(RegressionArgs),
    /// Nonlinear ARDL with asymmetry tests.
    Nardl(RegressionArgs),
    /// Residual diagnostics for an OLS regression with intercept.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
    },
    /// Every stage in order.
    Run(Common),
}

#[derive(Subcommand)]
enum SpilloverKind {
    /// Full-sample tables at the configured quantiles.
    Static(Common),
    /// Rolling-window indices and the window/horizon robustness grid.
    Rolling(Common),
    /// TSI and net indices across the quantile grid.
    Sweep(Common),
}

#[derive(Args)]
struct RegressionArgs {
    #[command(flatten)]
    common: Common,
    /// CSV holding the dependent series instead of the rolling log TSI.
    #[arg(long)]
    dep: Option<PathBuf>,
    #[arg(long, requires = "dep")]
    dep_column: Option<String>,
    /// Use the dependent column as is rather than its logarithm.
    #[arg(long, requires = "dep")]
    no_log: bool,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    uncertainty: Option<PathBuf>,
    #[arg(long)]
    date_column: Option<String>,
    #[arg(long)]
    date_format: Option<String>,
    #[arg(long, value_delimiter = ',')]
    price_columns: Option<Vec<String>>,
    #[arg(long = "uncertainty-columns", visible_alias = "regs", value_delimiter = ',')]
    uncertainty_columns: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Quantile grid as start:stop:step.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    lags: Option<usize>,
    /// Choose the VAR order by BIC up to this cap.
    #[arg(long)]
    var_lag_max: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    robustness_windows: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    robustness_horizons: Option<Vec<usize>>,
    #[arg(long, visible_alias = "caps", value_delimiter = ',')]
    ardl_caps: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    nardl_caps: Option<Vec<usize>>,
    /// PSS case: II, III or V.
    #[arg(long, value_parser = BoundsCase::parse)]
    bounds_case: Option<BoundsCase>,
    /// Leave the dummies out of the bounds F restrictions.
    #[arg(long)]
    no_dummies_in_bounds: bool,
    #[arg(long)]
    hac_lags: Option<usize>,
    #[arg(long)]
    bg_order: Option<usize>,
    /// Level dummy as name=START:END; replaces the configured dummies.
    #[arg(long, value_parser = DummyWindow::parse)]
    dummy: Vec<DummyWindow>,
    #[arg(long, conflicts_with = "dummy")]
    no_dummies: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_toml_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = &self.$f { c.$f = v.clone(); } )*};
        }
        set!(
            output_dir, date_column, date_format, price_columns, uncertainty_columns, taus, sweep, lags, horizon,
            window, robustness_windows, robustness_horizons, ardl_caps, nardl_caps, bounds_case, bg_order, seed
        );
        if self.prices.is_some() {
            c.prices = self.prices.clone();
        }
        if self.uncertainty.is_some() {
            c.uncertainty = self.uncertainty.clone();
        }
        if self.var_lag_max.is_some() {
            c.var_lag_max = self.var_lag_max;
        }
        if self.hac_lags.is_some() {
            c.hac_lags = self.hac_lags;
        }
        if self.no_dummies_in_bounds {
            c.dummies_in_bounds = false;
        }
        // Default caps follow the regressor count when only the columns change.
        if self.config.is_none() {
            let width = c.uncertainty_columns.len() + 1;
            let cap = RunConfig::default().ardl_caps[0];
            if self.ardl_caps.is_none() {
                c.ardl_caps = vec![cap; width];
            }
            if self.nardl_caps.is_none() {
                c.nardl_caps = vec![cap; width];
            }
        }
        if self.no_dummies {
            c.dummies.clear();
        } else if !self.dummy.is_empty() {
            c.dummies = self.dummy.clone();
        }
        Ok(c)
    }
}

struct Loaded {
    returns: TimeSeriesPanel,
    uncertainty: TimeSeriesPanel,
    lags: usize,
}

fn load(cfg: &RunConfig) -> Result<Loaded, StageError> {
    let prices = pipeline::load_prices(cfg).stage(Stage::Input)?;
    let uncertainty = pipeline::load_uncertainty(cfg).stage(Stage::Input)?;
    let returns = log_returns(&prices).stage(Stage::Input)?;
    let lags = pipeline::resolve_lags(cfg, &returns).stage(Stage::Config)?;
    cfg.validate_against(returns.nobs(), lags).stage(Stage::Config)?;
    Ok(Loaded {
        returns,
        uncertainty,
        lags,
    })
}

/// Shared wrapper: output setup, failure marker and manifest.
fn execute<F>(common: &Common, body: F) -> Result<(), StageError>
where
    F: FnOnce(&mut Output, &RunConfig) -> Result<Vec<Stage>, StageError>,
{
    let cfg = common.resolve().stage(Stage::Config)?;
    cfg.validate().stage(Stage::Config)?;
    let mut out = Output::new(&cfg.output_dir, &cfg.hash()).stage(Stage::Config)?;
    out.clear_failed_marker().stage(Stage::Config)?;
    let result = body(&mut out, &cfg).and_then(|stages| pipeline::write_manifest(&mut out, &cfg, &stages).stage(Stage::Manifest));
    if let Err(e) = &result {
        let _ = out.mark_failed(e.stage.name(), &format!("{:#}", e.error));
    }
    result
}

fn rolling_panel(out: &mut Output, cfg: &RunConfig, data: &Loaded) -> Result<TimeSeriesPanel, StageError> {
    let series = pipeline::spillover_rolling_stage(out, cfg, &data.returns, data.lags).stage(Stage::SpilloverRolling)?;
    pipeline::model_panel(cfg, &series, &data.uncertainty).stage(Stage::Ardl)
}

/// Model panel, `(label, dependent)` pairs and the stages run to build them.
type RegressionInputs = (TimeSeriesPanel, Vec<(String, String)>, Vec<Stage>);

fn regression_setup(out: &mut Output, cfg: &RunConfig, args: &RegressionArgs, stage: Stage) -> Result<RegressionInputs, StageError> {
    match &args.dep {
        None => {
            let data = load(cfg)?;
            let panel = rolling_panel(out, cfg, &data)?;
            let deps = cfg
                .taus
                .iter()
                .map(|t| (format!("tau_{}", pipeline::tau_label(*t)), pipeline::dependent_name(*t)))
                .collect();
            Ok((panel, deps, vec![Stage::SpilloverRolling]))
        }
        Some(path) => {
            let column = args.dep_column.clone().context("--dep-column is required with --dep").stage(Stage::Config)?;
            let raw = load_panel(path, &cfg.date_column, &[column.as_str()], &cfg.date_format)
                .stage(Stage::Input)?
                .panel;
            let (dep_panel, name) = if args.no_log {
                (raw, column.clone())
            } else {
                let ln = raw.ln().stage(Stage::Input)?;
                let name = format!("ln_{column}");
                let p = TimeSeriesPanel::from_columns(ln.dates().to_vec(), vec![(name.clone(), ln.column_vec(&column).stage(Stage::Input)?)])
                    .stage(Stage::Input)?;
                (p, name)
            };
            let uncertainty = pipeline::load_uncertainty(cfg).stage(Stage::Input)?;
            let panel = pipeline::regression_panel(cfg, &dep_panel, &uncertainty).stage(stage)?;
            Ok((panel, vec![(column, name)], Vec::new()))
        }
    }
}

fn read_xy(cfg: &RunConfig, input: &PathBuf, y: &str, x: &[String]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut cols: Vec<&str> = vec![y];
    cols.extend(x.iter().map(String::as_str));
    let panel = load_panel(input, &cfg.date_column, &cols, &cfg.date_format)?.panel;
    let n = panel.nobs();
    if n <= x.len() + 1 {
        bail!("{n} rows are too few for {} regressors", x.len());
    }
    let yv = DVector::from_vec(panel.column_vec(y)?);
    let mut design = DMatrix::from_element(n, x.len() + 1, 1.0);
    for (j, name) in x.iter().enumerate() {
        design.set_column(j + 1, &DVector::from_vec(panel.column_vec(name)?));
    }
    Ok((design, yv))
}

fn run(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve().stage(Stage::Config)?;
            pipeline::run_pipeline(&cfg).map(|_| ())
        }
        Command::Describe(common) => execute(&common, |out, cfg| {
            let data = load(cfg)?;
            let ln = data.uncertainty.ln().stage(Stage::Input)?;
            pipeline::describe_stage(out, &data.returns, &ln).stage(Stage::Describe)?;
            Ok(vec![Stage::Describe])
        }),
        Command::Spillover { kind } => match kind {
            SpilloverKind::Static(common) => execute(&common, |out, cfg| {
                let data = load(cfg)?;
                pipeline::spillover_static_stage(out, cfg, &data.returns, data.lags).stage(Stage::SpilloverStatic)?;
                Ok(vec![Stage::SpilloverStatic])
            }),
            SpilloverKind::Sweep(common) => execute(&common, |out, cfg| {
                let data = load(cfg)?;
                pipeline::quantile_sweep_stage(out, cfg, &data.returns, data.lags).stage(Stage::SpilloverStatic)?;
                Ok(vec![Stage::SpilloverStatic])
            }),
            SpilloverKind::Rolling(common) => execute(&common, |out, cfg| {
                let data = load(cfg)?;
                pipeline::spillover_rolling_stage(out, cfg, &data.returns, data.lags).stage(Stage::SpilloverRolling)?;
                Ok(vec![Stage::SpilloverRolling])
            }),
        },
        Command::Unitroot {
            common,
            input,
            columns,
            no_log,
        } => execute(&common, |out, cfg| match input {
            Some(path) => {
                if columns.is_empty() {
                    return Err(anyhow::anyhow!("--columns is required with --input")).stage(Stage::Config);
                }
                let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
                let mut panel = load_panel(&path, &cfg.date_column, &cols, &cfg.date_format)
                    .stage(Stage::Input)?
                    .panel;
                if !no_log {
                    panel = panel.ln().stage(Stage::Input)?;
                }
                pipeline::unitroot_stage(out, &panel, &columns).stage(Stage::UnitRoot)?;
                Ok(vec![Stage::UnitRoot])
            }
            None => {
                let data = load(cfg)?;
                let panel = rolling_panel(out, cfg, &data)?;
                let mut cols: Vec<String> = cfg.taus.iter().map(|t| pipeline::dependent_name(*t)).collect();
                cols.extend(cfg.uncertainty_columns.iter().map(|c| pipeline::regressor_name(c)));
                pipeline::unitroot_stage(out, &panel, &cols).stage(Stage::UnitRoot)?;
                Ok(vec![Stage::SpilloverRolling, Stage::UnitRoot])
            }
        }),
        Command::Ardl(args) => execute(&args.common, |out, cfg| {
            let (panel, deps, mut stages) = regression_setup(out, cfg, &args, Stage::Ardl)?;
            pipeline::ardl_stage(out, cfg, &panel, &deps).stage(Stage::Ardl)?;
            stages.push(Stage::Ardl);
            Ok(stages)
        }),
        Command::Nardl(args) => execute(&args.common, |out, cfg| {
            let (panel, deps, mut stages) = regression_setup(out, cfg, &args, Stage::Nardl)?;
            pipeline::nardl_stage(out, cfg, &panel, &deps).stage(Stage::Nardl)?;
            stages.push(Stage::Nardl);
            Ok(stages)
        }),
        Command::Qr {
            common,
            input,
            y,
            x,
            tau,
        } => execute(&common, |out, cfg| {
            let (design, yv) = read_xy(cfg, &input, &y, &x).stage(Stage::Input)?;
            let mut names = vec!["const".to_string()];
            names.extend(x.iter().cloned());
            let mut rows = Vec::new();
            let mut fits = Vec::new();
            for &t in &tau {
                let fit = qr_fit(&design, &yv, t).stage(Stage::Qr)?;
                for (name, b) in names.iter().zip(&fit.coefficients) {
                    rows.push(vec![pipeline::tau_label(t), name.clone(), num(*b)]);
                }
                fits.push(fit);
            }
            out.csv("qr/qr.csv", &["tau", "term", "estimate"], &rows).stage(Stage::Qr)?;
            out.json("qr/qr.json", &serde_json::json!({"dependent": y, "terms": names, "fits": fits}))
                .stage(Stage::Qr)?;
            Ok(vec![Stage::Qr])
        }),
        Command::Diagnose { common, input, y, x } => execute(&common, |out, cfg| {
            let (design, yv) = read_xy(cfg, &input, &y, &x).stage(Stage::Input)?;
            let ols = Ols::fit(&design, &yv).stage(Stage::Diagnose)?;
            let d = run_diagnostics(&ols, cfg.bg_order).stage(Stage::Diagnose)?;
            let row = |name: &str, s: f64, p: f64| vec![name.to_string(), num(s), num(p)];
            let rows = vec![
                row("BG", d.bg.statistic, d.bg.p_value),
                row("BP", d.bp.statistic, d.bp.p_value),
                row("RESET", d.reset.statistic, d.reset.p_value),
                row("CUSUM", d.cusum.max_normalized_excursion, d.cusum.p_value),
            ];
            out.csv("diagnose/diagnostics.csv", &["test", "statistic", "p_value"], &rows)
                .stage(Stage::Diagnose)?;
            out.json("diagnose/diagnostics.json", &d).stage(Stage::Diagnose)?;
            Ok(vec![Stage::Diagnose])
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qspill: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
