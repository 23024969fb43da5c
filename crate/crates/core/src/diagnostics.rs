//! Residual diagnostics: Breusch-Godfrey, Breusch-Pagan (studentized),
//! Ramsey RESET and the CUSUM of recursive residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::error::{Error, Result};
use crate::linalg::Ols;

/// 5% CUSUM boundary constant.
pub const CUSUM_A_5PCT: f64 = 0.948;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticTest {
    pub statistic: f64,
    pub df1: usize,
    /// Denominator degrees of freedom for F-form tests.
    pub df2: Option<usize>,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumResult {
    /// `max_t |W_t| / (sqrt(T-K) (1 + 2 (t-K)/(T-K)))`; the path leaves the
    /// 5% corridor exactly when this exceeds 0.948.
    pub max_normalized_excursion: f64,
    /// Boundary-crossing probability of a Brownian motion at that level.
    pub p_value: f64,
    pub crossed_5pct: bool,
    /// `W_t` for `t = K+1..T`.
    pub path: Vec<f64>,
    /// Upper 5% boundary at each point of `path`.
    pub bound: Vec<f64>,
}

impl CusumResult {
    pub fn verdict(&self) -> &'static str {
        if self.crossed_5pct {
            "unstable"
        } else {
            "stable"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub bg: DiagnosticTest,
    pub bp: DiagnosticTest,
    pub reset: DiagnosticTest,
    pub cusum: CusumResult,
}

fn has_constant(x: &DMatrix<f64>) -> Option<usize> {
    x.column_iter().position(|c| {
        let v = c[0];
        v != 0.0 && c.iter().all(|e| *e == v)
    })
}

fn with_constant(x: &DMatrix<f64>) -> DMatrix<f64> {
    if has_constant(x).is_some() {
        x.clone()
    } else {
        x.clone().insert_column(0, 1.0)
    }
}

fn lm(statistic: f64, df: usize) -> DiagnosticTest {
    DiagnosticTest {
        statistic,
        df1: df,
        df2: None,
        p_value: dist::chi2_sf(statistic, df as f64),
    }
}

/// LM test for serial correlation up to order `q`. Presample residual lags
/// are set to zero so the auxiliary regression keeps all `T` rows.
pub fn breusch_godfrey(residuals: &[f64], design: &DMatrix<f64>, q: usize) -> Result<DiagnosticTest> {
    if q == 0 {
        return Err(Error::InvalidArgument("Breusch-Godfrey order must be at least 1".into()));
    }
    let (n, k) = design.shape();
    if residuals.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: residuals.len(),
        });
    }
    if n <= k + q {
        return Err(Error::InsufficientData { needed: k + q + 1, got: n });
    }
    let mut aux = with_constant(design);
    let base = aux.ncols();
    aux = aux.resize_horizontally(base + q, 0.0);
    for l in 1..=q {
        for t in l..n {
            aux[(t, base + l - 1)] = residuals[t - l];
        }
    }
    let e = DVector::from_column_slice(residuals);
    let fit = Ols::fit(&aux, &e)?;
    Ok(lm(n as f64 * fit.r_squared(), q))
}

/// Koenker's studentized LM: `T R^2` from regressing `e^2 / s^2` on the
/// design, `chi2(K - 1)`.
pub fn breusch_pagan(residuals: &[f64], design: &DMatrix<f64>) -> Result<DiagnosticTest> {
    let n = design.nrows();
    if residuals.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: residuals.len(),
        });
    }
    let aux = with_constant(design);
    let k = aux.ncols();
    if k < 2 {
        return Err(Error::InvalidArgument("Breusch-Pagan needs at least one non-constant regressor".into()));
    }
    let s2 = residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;
    if s2 == 0.0 {
        return Err(Error::ZeroVariance("residuals".into()));
    }
    let g = DVector::from_iterator(n, residuals.iter().map(|e| e * e / s2));
    let fit = Ols::fit(&aux, &g)?;
    Ok(lm(n as f64 * fit.r_squared(), k - 1))
}

/// F test on added powers of the fitted values.
pub fn ramsey_reset(fit: &Ols, powers: &[u32]) -> Result<DiagnosticTest> {
    if powers.is_empty() || powers.iter().any(|p| *p < 2) {
        return Err(Error::InvalidArgument("RESET powers must be at least 2".into()));
    }
    let yhat = &fit.fitted;
    let mean = yhat.mean();
    let sd = (yhat.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / yhat.len() as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance("fitted values".into()));
    }
    // Powers of the standardized fit span the same space and are better
    // conditioned than raw powers.
    let z = yhat.map(|v| v / sd);
    let k = fit.ncoef();
    let mut aux = fit.design().clone().resize_horizontally(k + powers.len(), 0.0);
    for (j, p) in powers.iter().enumerate() {
        aux.set_column(k + j, &z.map(|v| v.powi(*p as i32)));
    }
    let y = &fit.fitted + &fit.residuals;
    let unrestricted = Ols::fit(&aux, &y).map_err(|e| match e {
        Error::RankDeficient => Error::InvalidArgument("RESET augmentation is collinear".into()),
        other => other,
    })?;
    let m = powers.len();
    let df2 = unrestricted.df_resid();
    let f = ((fit.rss - unrestricted.rss) / m as f64) / (unrestricted.rss / df2 as f64);
    let f = f.max(0.0);
    Ok(DiagnosticTest {
        statistic: f,
        df1: m,
        df2: Some(df2),
        p_value: dist::f_sf(f, m as f64, df2 as f64),
    })
}

/// Least squares on a possibly square system: `(b, (X'X)^{-1})`, or `None`
/// when the columns are not linearly independent.
fn solve_ls(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let k = x.ncols();
    if x.nrows() < k {
        return None;
    }
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let mut xs = x.clone();
    for (j, s) in norms.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let qr = xs.qr();
    let r = qr.r();
    if (0..k).any(|j| r[(j, j)].abs() < 1e-10) {
        return None;
    }
    let mut b = r.solve_upper_triangular(&(qr.q().transpose() * y))?;
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(k, k))?;
    let mut p = &r_inv * r_inv.transpose();
    for i in 0..k {
        b[i] /= norms[i];
        for j in 0..k {
            p[(i, j)] /= norms[i] * norms[j];
        }
    }
    Some((b, p))
}

/// Recursive residuals: one-step prediction errors from fits on all
/// earlier rows, scaled to unit variance.
///
/// Only columns already nonzero in the earlier rows take part. A row that
/// loads on a column for the first time identifies that coefficient and
/// yields no residual, so level dummies that switch on late in the sample
/// do not block the recursion. A full-rank design gives `T - K` residuals.
pub fn recursive_residuals(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    let (n, k) = design.shape();
    if n <= k + 1 {
        return Err(Error::InsufficientData { needed: k + 2, got: n });
    }
    let mut out = Vec::with_capacity(n - k);
    let mut active = vec![false; k];
    for t in 0..n {
        let cols: Vec<usize> = (0..k).filter(|&j| active[j]).collect();
        let fresh = (0..k).any(|j| !active[j] && design[(t, j)] != 0.0);
        if !fresh && t >= cols.len() && !cols.is_empty() {
            let x = design.rows(0, t).select_columns(&cols);
            if let Some((b, p)) = solve_ls(&x, &y.rows(0, t).into_owned()) {
                let xt = DVector::from_iterator(cols.len(), cols.iter().map(|&j| design[(t, j)]));
                let f = 1.0 + xt.dot(&(&p * &xt));
                out.push((y[t] - xt.dot(&b)) / f.sqrt());
            }
        }
        for j in 0..k {
            if design[(t, j)] != 0.0 {
                active[j] = true;
            }
        }
    }
    if out.len() < 2 {
        return Err(Error::Singular("recursive residual recursion"));
    }
    Ok(out)
}

/// Brownian-motion boundary crossing probability for the CUSUM corridor.
pub fn cusum_p_value(a: f64) -> f64 {
    let p = 2.0 * (1.0 - dist::normal_cdf(3.0 * a) + (-4.0 * a * a).exp() * dist::normal_cdf(a));
    p.clamp(0.0, 1.0)
}

pub fn cusum(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<CusumResult> {
    let w = recursive_residuals(design, y)?;
    let m = w.len();
    let mean = w.iter().sum::<f64>() / m as f64;
    let s = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
    if !(s > 0.0) {
        return Err(Error::ZeroVariance("recursive residuals".into()));
    }
    let root = (m as f64).sqrt();
    let mut acc = 0.0;
    let mut path = Vec::with_capacity(m);
    let mut bound = Vec::with_capacity(m);
    let mut excursion: f64 = 0.0;
    for (i, wi) in w.iter().enumerate() {
        acc += wi / s;
        // t - K = i + 1
        let shape = root * (1.0 + 2.0 * (i + 1) as f64 / m as f64);
        excursion = excursion.max(acc.abs() / shape);
        path.push(acc);
        bound.push(CUSUM_A_5PCT * shape);
    }
    Ok(CusumResult {
        max_normalized_excursion: excursion,
        p_value: cusum_p_value(excursion),
        crossed_5pct: excursion > CUSUM_A_5PCT,
        path,
        bound,
    })
}

pub fn run_diagnostics(fit: &Ols, bg_order: usize) -> Result<DiagnosticsReport> {
    let e = fit.residuals.as_slice();
    let y = &fit.fitted + &fit.residuals;
    Ok(DiagnosticsReport {
        bg: breusch_godfrey(e, fit.design(), bg_order)?,
        bp: breusch_pagan(e, fit.design())?,
        reset: ramsey_reset(fit, &[2, 3])?,
        cusum: cusum(fit.design(), &y)?,
    })
}
