//! Autoregressive distributed lag models in conditional error-correction
//! form, with AIC lag selection, bounds testing and the ECT
//! reparameterization.
//!
//! The level form is
//!
//! ```text
//! dy_t = a0 + a1 y_{t-1} + sum_k a_k x_{k,t-1} + sum_d a_d D_{d,t}
//!        + sum_{i=1..n1} b_i dy_{t-i} + sum_k sum_{i=0..n_k} g_{k,i} dx_{k,t-i} + e_t
//! ```
//!
//! Dummies enter in levels only and are never lag-selected.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::error::{Error, Result};
use crate::linalg::{CovarianceKind, Ols};
use crate::timeseries::TimeSeriesPanel;

/// Deterministic-term configuration of the bounds test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsCase {
    /// Restricted intercept, no trend. The intercept joins the tested set.
    RestrictedIntercept,
    /// Unrestricted intercept, no trend.
    #[default]
    UnrestrictedIntercept,
    /// Unrestricted intercept and unrestricted trend.
    UnrestrictedTrend,
}

impl BoundsCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::RestrictedIntercept => "II",
            Self::UnrestrictedIntercept => "III",
            Self::UnrestrictedTrend => "V",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "II" | "2" => Ok(Self::RestrictedIntercept),
            "III" | "3" => Ok(Self::UnrestrictedIntercept),
            "V" | "5" => Ok(Self::UnrestrictedTrend),
            other => Err(Error::InvalidArgument(format!("unknown bounds case {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArdlSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    /// Level-only terms such as event dummies.
    pub dummies: Vec<String>,
    /// Upper bounds `(n_1, n_2, ..)`: dependent first, then one per regressor.
    pub lag_caps: Vec<usize>,
    pub selected_lags: Vec<usize>,
    /// First row of the estimation sample. `None` uses the earliest row the
    /// selected lags allow.
    pub sample_start: Option<usize>,
    pub case: BoundsCase,
    pub covariance: CovarianceKind,
    /// Whether dummy level terms join the bounds-test restriction set.
    pub dummies_in_bounds: bool,
}

impl ArdlSpec {
    /// Spec with one lag everywhere and caps of four.
    pub fn new(dependent: &str, regressors: &[&str], dummies: &[&str]) -> Self {
        let k = regressors.len();
        Self {
            dependent: dependent.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            dummies: dummies.iter().map(|s| s.to_string()).collect(),
            lag_caps: vec![4; k + 1],
            selected_lags: vec![1; k + 1],
            sample_start: None,
            case: BoundsCase::default(),
            covariance: CovarianceKind::Standard,
            dummies_in_bounds: true,
        }
    }

    pub fn with_lags(mut self, lags: &[usize]) -> Self {
        self.selected_lags = lags.to_vec();
        self
    }

    pub fn with_caps(mut self, caps: &[usize]) -> Self {
        self.lag_caps = caps.to_vec();
        self
    }
}

/// Regression term of the level or ECT form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Intercept,
    Trend,
    /// `v_{t-1}` in levels.
    LaggedLevel { variable: String },
    Dummy { variable: String },
    /// `dv_{t-lag}`.
    Difference { variable: String, lag: usize },
    Ect,
}

impl Term {
    pub fn label(&self) -> String {
        match self {
            Self::Intercept => "const".into(),
            Self::Trend => "trend".into(),
            Self::LaggedLevel { variable } => format!("L1.{variable}"),
            Self::Dummy { variable } => variable.clone(),
            Self::Difference { variable, lag: 0 } => format!("D.{variable}"),
            Self::Difference { variable, lag } => format!("L{lag}D.{variable}"),
            Self::Ect => "ECT(-1)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: Term,
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

impl Coefficient {
    fn new(term: Term, estimate: f64, std_error: f64, df: f64) -> Self {
        let t_stat = estimate / std_error;
        Self {
            label: term.label(),
            term,
            estimate,
            std_error,
            t_stat,
            p_value: dist::t_two_sided(t_stat, df),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArdlFit {
    pub spec: ArdlSpec,
    pub sample_dates: Vec<NaiveDate>,
    /// Level-form coefficients in design order.
    pub coefficients: Vec<Coefficient>,
    /// `-a_k / a_1` per level regressor and dummy, delta-method errors.
    pub long_run: Vec<Coefficient>,
    /// Coefficient on `ECT_{t-1}` in the ECT form.
    pub ect: Coefficient,
    pub ect_form: Vec<Coefficient>,
    pub ect_residuals: Vec<f64>,
    pub aic: f64,
    pub bic: f64,
    pub r_squared: f64,
    pub terms: Vec<Term>,
    ols: Ols,
    groups: Vec<Group>,
}

impl ArdlFit {
    pub fn ols(&self) -> &Ols {
        &self.ols
    }

    pub fn residuals(&self) -> &[f64] {
        self.ols.residuals.as_slice()
    }

    pub fn nobs(&self) -> usize {
        self.ols.nobs()
    }

    pub fn short_run(&self) -> impl Iterator<Item = &Coefficient> {
        self.coefficients
            .iter()
            .filter(|c| matches!(c.term, Term::Difference { .. }))
    }

    pub fn level_terms(&self) -> impl Iterator<Item = &Coefficient> {
        self.coefficients
            .iter()
            .filter(|c| !matches!(c.term, Term::Difference { .. }))
    }

    pub fn coefficient(&self, term: &Term) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| &c.term == term)
    }

    pub(crate) fn term_index(&self, term: &Term) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Number of level regressor columns, excluding the dependent and dummies.
    pub fn level_regressor_count(&self) -> usize {
        self.groups.iter().map(|g| g.columns.len()).sum()
    }
}

/// Regressors that share one lag order. A linear regressor is a group of
/// one column; an asymmetric regressor is a group of its two partial sums.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Group {
    pub label: String,
    pub columns: Vec<String>,
}

pub(crate) fn linear_groups(spec: &ArdlSpec) -> Vec<Group> {
    spec.regressors
        .iter()
        .map(|r| Group {
            label: r.clone(),
            columns: vec![r.clone()],
        })
        .collect()
}

/// Column data pulled from the panel once, reused for every candidate.
struct Data {
    y: Vec<f64>,
    y_name: String,
    groups: Vec<Vec<(String, Vec<f64>)>>,
    dummies: Vec<(String, Vec<f64>)>,
    case: BoundsCase,
}

impl Data {
    fn new(panel: &TimeSeriesPanel, spec: &ArdlSpec, groups: &[Group]) -> Result<Self> {
        let grab = |name: &String| -> Result<(String, Vec<f64>)> { Ok((name.clone(), panel.column_vec(name)?)) };
        Ok(Self {
            y: panel.column_vec(&spec.dependent)?,
            y_name: spec.dependent.clone(),
            groups: groups
                .iter()
                .map(|g| g.columns.iter().map(grab).collect())
                .collect::<Result<_>>()?,
            dummies: spec.dummies.iter().map(grab).collect::<Result<_>>()?,
            case: spec.case,
        })
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    fn ncoef(&self, lags: &[usize]) -> usize {
        let det = if self.case == BoundsCase::UnrestrictedTrend { 2 } else { 1 };
        let levels = 1 + self.groups.iter().map(Vec::len).sum::<usize>() + self.dummies.len();
        let diffs = lags[0]
            + self
                .groups
                .iter()
                .zip(&lags[1..])
                .map(|(g, n)| g.len() * (n + 1))
                .sum::<usize>();
        det + levels + diffs
    }

    /// Level-form design over rows `start..T`.
    fn design(&self, lags: &[usize], start: usize) -> (DMatrix<f64>, DVector<f64>, Vec<Term>) {
        let t = self.len();
        let rows = t - start;
        let d = |v: &[f64], s: usize| v[s] - v[s - 1];
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut terms = Vec::new();
        let mut push = |term: Term, f: &dyn Fn(usize) -> f64| {
            cols.push((start..t).map(f).collect());
            terms.push(term);
        };
        push(Term::Intercept, &|_| 1.0);
        if self.case == BoundsCase::UnrestrictedTrend {
            push(Term::Trend, &|s| s as f64);
        }
        push(
            Term::LaggedLevel {
                variable: self.y_name.clone(),
            },
            &|s| self.y[s - 1],
        );
        for g in &self.groups {
            for (name, v) in g {
                push(Term::LaggedLevel { variable: name.clone() }, &|s| v[s - 1]);
            }
        }
        for (name, v) in &self.dummies {
            push(Term::Dummy { variable: name.clone() }, &|s| v[s]);
        }
        for i in 1..=lags[0] {
            push(
                Term::Difference {
                    variable: self.y_name.clone(),
                    lag: i,
                },
                &|s| d(&self.y, s - i),
            );
        }
        for (g, &n) in self.groups.iter().zip(&lags[1..]) {
            for i in 0..=n {
                for (name, v) in g {
                    push(
                        Term::Difference {
                            variable: name.clone(),
                            lag: i,
                        },
                        &|s| d(v, s - i),
                    );
                }
            }
        }
        let x = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
        let y = DVector::from_fn(rows, |i, _| d(&self.y, start + i));
        (x, y, terms)
    }
}

fn check_lags(lags: &[usize], groups: usize, what: &str) -> Result<()> {
    if lags.len() != groups + 1 {
        return Err(Error::InvalidArgument(format!(
            "{what} must have {} entries (dependent plus one per regressor), got {}",
            groups + 1,
            lags.len()
        )));
    }
    if lags[0] == 0 {
        return Err(Error::InvalidArgument(format!("{what}: n_1 must be at least 1")));
    }
    Ok(())
}

fn min_start(lags: &[usize]) -> usize {
    1 + lags.iter().copied().max().unwrap_or(0)
}

fn require_rows(needed: usize, got: usize) -> Result<()> {
    if got < needed {
        return Err(Error::InsufficientData { needed, got });
    }
    Ok(())
}

/// Exhaustive AIC search over every lag tuple up to `spec.lag_caps`.
pub fn select_lags_aic(panel: &TimeSeriesPanel, spec: &ArdlSpec) -> Result<ArdlSpec> {
    select_groups(panel, spec, &linear_groups(spec))
}

/// Lag tuples `(n_1, .., n_m)` with `1 <= n_1 <= caps[0]` and `0 <= n_k <= caps[k]`,
/// in lexicographic order.
pub fn lag_grid(caps: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (j, &c) in caps.iter().enumerate() {
        let lo = usize::from(j == 0);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=c).map(move |n| {
                    let mut v = prefix.clone();
                    v.push(n);
                    v
                })
            })
            .collect();
    }
    out
}

pub(crate) fn select_groups(panel: &TimeSeriesPanel, spec: &ArdlSpec, groups: &[Group]) -> Result<ArdlSpec> {
    check_lags(&spec.lag_caps, groups.len(), "lag caps")?;
    let data = Data::new(panel, spec, groups)?;
    let start = spec.sample_start.unwrap_or_else(|| min_start(&spec.lag_caps));
    if start < min_start(&spec.lag_caps) || start >= data.len() {
        return Err(Error::InvalidArgument(format!("sample start {start} incompatible with caps")));
    }
    require_rows(data.ncoef(&spec.lag_caps) + 10, data.len() - start)?;
    let grid = lag_grid(&spec.lag_caps);
    let scored: Vec<Option<f64>> = grid
        .par_iter()
        .map(|lags| {
            let (x, y, _) = data.design(lags, start);
            Ols::fit(&x, &y).ok().map(|f| f.aic())
        })
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for (i, aic) in scored.iter().enumerate() {
        let Some(aic) = *aic else { continue };
        let better = match best {
            None => true,
            Some((b, j)) => {
                let tol = 1e-9 * (1.0 + b.abs());
                aic < b - tol || (aic <= b + tol && grid[i].iter().sum::<usize>() < grid[j].iter().sum::<usize>())
            }
        };
        if better {
            best = Some((aic, i));
        }
    }
    let (_, i) = best.ok_or(Error::RankDeficient)?;
    let mut out = spec.clone();
    out.selected_lags = grid[i].clone();
    out.sample_start = Some(start);
    Ok(out)
}

pub fn fit_ardl(panel: &TimeSeriesPanel, spec: &ArdlSpec) -> Result<ArdlFit> {
    fit_groups(panel, spec, &linear_groups(spec))
}

pub(crate) fn fit_groups(panel: &TimeSeriesPanel, spec: &ArdlSpec, groups: &[Group]) -> Result<ArdlFit> {
    check_lags(&spec.selected_lags, groups.len(), "selected lags")?;
    if spec.lag_caps.len() == spec.selected_lags.len()
        && spec.selected_lags.iter().zip(&spec.lag_caps).any(|(l, c)| l > c)
    {
        return Err(Error::InvalidArgument("selected lags exceed caps".into()));
    }
    let data = Data::new(panel, spec, groups)?;
    let start = spec.sample_start.unwrap_or_else(|| min_start(&spec.selected_lags));
    if start < min_start(&spec.selected_lags) || start >= data.len() {
        return Err(Error::InvalidArgument(format!("sample start {start} incompatible with lags")));
    }
    let (x, y, terms) = data.design(&spec.selected_lags, start);
    require_rows(x.ncols() + 10, x.nrows())?;
    let ols = Ols::fit(&x, &y)?.with_covariance(spec.covariance);
    let cov = ols.covariance();
    let df = ols.df_resid() as f64;
    let b = &ols.coefficients;
    let coefficients: Vec<Coefficient> = terms
        .iter()
        .enumerate()
        .map(|(j, t)| Coefficient::new(t.clone(), b[j], cov[(j, j)].sqrt(), df))
        .collect();

    let i1 = terms
        .iter()
        .position(|t| matches!(t, Term::LaggedLevel { variable } if *variable == spec.dependent))
        .expect("lagged dependent term present");
    let a1 = b[i1];
    if a1 == 0.0 {
        return Err(Error::Singular("coefficient on the lagged dependent level is zero"));
    }
    let restricted_intercept = spec.case == BoundsCase::RestrictedIntercept;
    let long_run_terms: Vec<usize> = terms
        .iter()
        .enumerate()
        .filter(|(j, t)| {
            *j != i1
                && match t {
                    Term::LaggedLevel { .. } | Term::Dummy { .. } => true,
                    Term::Intercept => restricted_intercept,
                    _ => false,
                }
        })
        .map(|(j, _)| j)
        .collect();
    let long_run = long_run_terms
        .iter()
        .map(|&j| {
            let theta = -b[j] / a1;
            // gradient of -b_j / b_1 with respect to (b_1, b_j)
            let g1 = b[j] / (a1 * a1);
            let gj = -1.0 / a1;
            let var = g1 * g1 * cov[(i1, i1)] + gj * gj * cov[(j, j)] + 2.0 * g1 * gj * cov[(i1, j)];
            Coefficient::new(terms[j].clone(), theta, var.max(0.0).sqrt(), df)
        })
        .collect();

    // ECT form: ECT_{t-1} = y_{t-1} + sum_j (a_j / a_1) z_j over the long-run terms.
    let mut ect_col = x.column(i1).clone_owned();
    for &j in &long_run_terms {
        ect_col += x.column(j) * (b[j] / a1);
    }
    let mut ect_cols = Vec::new();
    let mut ect_terms = Vec::new();
    for (j, t) in terms.iter().enumerate() {
        let keep = match t {
            Term::Intercept => !restricted_intercept,
            Term::Trend => true,
            _ => false,
        };
        if keep {
            ect_cols.push(x.column(j).clone_owned());
            ect_terms.push(t.clone());
        }
    }
    ect_cols.push(ect_col);
    ect_terms.push(Term::Ect);
    for (j, t) in terms.iter().enumerate() {
        if matches!(t, Term::Difference { .. }) {
            ect_cols.push(x.column(j).clone_owned());
            ect_terms.push(t.clone());
        }
    }
    let ex = DMatrix::from_columns(&ect_cols);
    let eols = Ols::fit(&ex, &y)?.with_covariance(spec.covariance);
    let ese = eols.std_errors();
    let edf = eols.df_resid() as f64;
    let ect_form: Vec<Coefficient> = ect_terms
        .iter()
        .enumerate()
        .map(|(j, t)| Coefficient::new(t.clone(), eols.coefficients[j], ese[j], edf))
        .collect();
    let ect = ect_form
        .iter()
        .find(|c| c.term == Term::Ect)
        .cloned()
        .expect("ECT column present");

    let mut spec = spec.clone();
    spec.sample_start = Some(start);
    Ok(ArdlFit {
        sample_dates: panel.dates()[start..].to_vec(),
        coefficients,
        long_run,
        ect,
        ect_form,
        ect_residuals: eols.residuals.as_slice().to_vec(),
        aic: ols.aic(),
        bic: ols.bic(),
        r_squared: ols.r_squared(),
        terms,
        ols,
        groups: groups.to_vec(),
        spec,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsDecision {
    Cointegrated,
    Inconclusive,
    NotCointegrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsBand {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub decision: BoundsDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsTestResult {
    pub f_statistic: f64,
    pub case: BoundsCase,
    pub k: usize,
    pub restrictions: usize,
    pub df_resid: usize,
    /// Ordered 10%, 5%, 1%.
    pub bands: Vec<BoundsBand>,
    /// Conventional t statistic on the lagged dependent level.
    pub t_statistic: f64,
    /// t bounds at 10%, 5%, 1%; absent under the restricted-intercept case,
    /// which has no tabulated t bounds.
    pub t_bands: Option<Vec<BoundsBand>>,
}

impl BoundsTestResult {
    pub fn band(&self, level: f64) -> Option<&BoundsBand> {
        self.bands.iter().find(|b| (b.level - level).abs() < 1e-12)
    }

    /// Strongest level at which the upper bound is exceeded.
    pub fn significance(&self) -> Option<f64> {
        self.bands
            .iter()
            .filter(|b| b.decision == BoundsDecision::Cointegrated)
            .map(|b| b.level)
            .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
    }
}

/// Asymptotic I(0)/I(1) bounds for the F statistic, rows k = 1..=10,
/// columns (10% lo, 10% hi, 5% lo, 5% hi, 1% lo, 1% hi).
const CASE_II: [[f64; 6]; 10] = [
    [3.02, 3.51, 3.62, 4.16, 4.94, 5.58],
    [2.63, 3.35, 3.10, 3.87, 4.13, 5.00],
    [2.37, 3.20, 2.79, 3.67, 3.65, 4.66],
    [2.20, 3.09, 2.56, 3.49, 3.29, 4.37],
    [2.08, 3.00, 2.39, 3.38, 3.06, 4.15],
    [1.99, 2.94, 2.27, 3.28, 2.88, 3.99],
    [1.92, 2.89, 2.17, 3.21, 2.73, 3.90],
    [1.85, 2.85, 2.11, 3.15, 2.62, 3.77],
    [1.80, 2.80, 2.04, 3.08, 2.50, 3.68],
    [1.76, 2.77, 1.98, 3.04, 2.41, 3.61],
];
const CASE_III: [[f64; 6]; 10] = [
    [4.04, 4.78, 4.94, 5.73, 6.84, 7.84],
    [3.17, 4.14, 3.79, 4.85, 5.15, 6.36],
    [2.72, 3.77, 3.23, 4.35, 4.29, 5.61],
    [2.45, 3.52, 2.86, 4.01, 3.74, 5.06],
    [2.26, 3.35, 2.62, 3.79, 3.41, 4.68],
    [2.12, 3.23, 2.45, 3.61, 3.15, 4.43],
    [2.03, 3.13, 2.32, 3.50, 2.96, 4.26],
    [1.95, 3.06, 2.22, 3.39, 2.79, 4.10],
    [1.88, 2.99, 2.14, 3.30, 2.65, 3.97],
    [1.83, 2.94, 2.06, 3.24, 2.54, 3.86],
];
const CASE_V: [[f64; 6]; 10] = [
    [5.59, 6.26, 6.56, 7.30, 8.74, 9.63],
    [4.19, 5.06, 4.87, 5.85, 6.34, 7.52],
    [3.47, 4.45, 4.01, 5.07, 5.17, 6.36],
    [3.03, 4.06, 3.47, 4.57, 4.40, 5.72],
    [2.75, 3.79, 3.12, 4.25, 3.93, 5.23],
    [2.53, 3.59, 2.87, 4.00, 3.60, 4.90],
    [2.38, 3.45, 2.69, 3.83, 3.34, 4.63],
    [2.26, 3.34, 2.55, 3.68, 3.15, 4.43],
    [2.16, 3.24, 2.43, 3.56, 3.00, 4.26],
    [2.07, 3.16, 2.33, 3.46, 2.82, 4.10],
];
pub const MAX_BOUNDS_K: usize = 10;

/// Asymptotic I(0)/I(1) bounds for the t statistic on the lagged dependent
/// level, same layout as the F tables.
const T_CASE_III: [[f64; 6]; 10] = [
    [-2.57, -2.91, -2.86, -3.22, -3.43, -3.82],
    [-2.57, -3.21, -2.86, -3.53, -3.43, -4.10],
    [-2.57, -3.46, -2.86, -3.78, -3.43, -4.37],
    [-2.57, -3.66, -2.86, -3.99, -3.43, -4.60],
    [-2.57, -3.86, -2.86, -4.19, -3.43, -4.79],
    [-2.57, -4.04, -2.86, -4.38, -3.43, -4.99],
    [-2.57, -4.23, -2.86, -4.57, -3.43, -5.19],
    [-2.57, -4.40, -2.86, -4.72, -3.43, -5.37],
    [-2.57, -4.56, -2.86, -4.88, -3.42, -5.54],
    [-2.57, -4.69, -2.86, -5.03, -3.43, -5.68],
];
const T_CASE_V: [[f64; 6]; 10] = [
    [-3.13, -3.40, -3.41, -3.69, -3.96, -4.26],
    [-3.13, -3.63, -3.41, -3.95, -3.96, -4.53],
    [-3.13, -3.84, -3.41, -4.16, -3.96, -4.73],
    [-3.13, -4.04, -3.41, -4.36, -3.96, -4.96],
    [-3.13, -4.21, -3.41, -4.52, -3.97, -5.13],
    [-3.13, -4.37, -3.41, -4.69, -3.96, -5.31],
    [-3.13, -4.53, -3.41, -4.85, -3.97, -5.49],
    [-3.13, -4.68, -3.41, -5.01, -3.96, -5.65],
    [-3.13, -4.82, -3.41, -5.15, -3.96, -5.79],
    [-3.13, -4.96, -3.41, -5.29, -3.97, -5.94],
];

/// `(level, lower, upper)` t bounds at 10%, 5% and 1%, or `None` for the
/// restricted-intercept case.
pub fn bounds_t_critical_values(case: BoundsCase, k: usize) -> Result<Option<[(f64, f64, f64); 3]>> {
    if !(1..=MAX_BOUNDS_K).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "bounds tables cover 1..={MAX_BOUNDS_K} regressors, got {k}"
        )));
    }
    let row = match case {
        BoundsCase::RestrictedIntercept => return Ok(None),
        BoundsCase::UnrestrictedIntercept => T_CASE_III[k - 1],
        BoundsCase::UnrestrictedTrend => T_CASE_V[k - 1],
    };
    Ok(Some([(0.10, row[0], row[1]), (0.05, row[2], row[3]), (0.01, row[4], row[5])]))
}

/// `(level, lower, upper)` triples at 10%, 5% and 1%.
pub fn bounds_critical_values(case: BoundsCase, k: usize) -> Result<[(f64, f64, f64); 3]> {
    if !(1..=MAX_BOUNDS_K).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "bounds tables cover 1..={MAX_BOUNDS_K} regressors, got {k}"
        )));
    }
    let row = match case {
        BoundsCase::RestrictedIntercept => CASE_II[k - 1],
        BoundsCase::UnrestrictedIntercept => CASE_III[k - 1],
        BoundsCase::UnrestrictedTrend => CASE_V[k - 1],
    };
    Ok([(0.10, row[0], row[1]), (0.05, row[2], row[3]), (0.01, row[4], row[5])])
}

/// Joint F test that the lagged dependent level, every lagged regressor
/// level and (by default) the dummy levels are zero.
pub fn bounds_test(fit: &ArdlFit) -> Result<BoundsTestResult> {
    let k = fit.level_regressor_count();
    let tested: Vec<usize> = fit
        .terms
        .iter()
        .enumerate()
        .filter(|(_, t)| match t {
            Term::LaggedLevel { .. } => true,
            Term::Dummy { .. } => fit.spec.dummies_in_bounds,
            Term::Intercept => fit.spec.case == BoundsCase::RestrictedIntercept,
            _ => false,
        })
        .map(|(j, _)| j)
        .collect();
    let m = tested.len();
    let mut r = DMatrix::zeros(m, fit.terms.len());
    for (row, &j) in tested.iter().enumerate() {
        r[(row, j)] = 1.0;
    }
    let wald = fit
        .ols
        .clone()
        .with_covariance(CovarianceKind::Standard)
        .wald(&r, &DVector::zeros(m))?;
    let f = wald.f_stat;
    let bands = bounds_critical_values(fit.spec.case, k)?
        .iter()
        .map(|&(level, lower, upper)| BoundsBand {
            level,
            lower,
            upper,
            decision: if f > upper {
                BoundsDecision::Cointegrated
            } else if f < lower {
                BoundsDecision::NotCointegrated
            } else {
                BoundsDecision::Inconclusive
            },
        })
        .collect();
    // Classical t on the lagged dependent level; the test is left-tailed.
    let j = fit
        .terms
        .iter()
        .position(|t| matches!(t, Term::LaggedLevel { variable } if *variable == fit.spec.dependent))
        .ok_or_else(|| Error::InvalidArgument("fit lacks the lagged dependent level".into()))?;
    let t_statistic = fit.ols.coefficients[j] / (fit.ols.sigma2() * fit.ols.xtx_inv()[(j, j)]).sqrt();
    let t_bands = bounds_t_critical_values(fit.spec.case, k)?.map(|rows| {
        rows.iter()
            .map(|&(level, lower, upper)| BoundsBand {
                level,
                lower,
                upper,
                decision: if t_statistic < upper {
                    BoundsDecision::Cointegrated
                } else if t_statistic > lower {
                    BoundsDecision::NotCointegrated
                } else {
                    BoundsDecision::Inconclusive
                },
            })
            .collect()
    });
    Ok(BoundsTestResult {
        f_statistic: f,
        t_statistic,
        t_bands,
        case: fit.spec.case,
        k,
        restrictions: m,
        df_resid: wald.df2,
        bands,
    })
}
