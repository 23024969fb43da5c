//! Quantile VAR estimation and generalized-FEVD connectedness indices.
//!
//! Each equation of the VAR is estimated by linear quantile regression at a
//! common `tau`. The residual second-moment matrix is
//! `(T - p)^{-1} sum_t e_t(tau) e_t(tau)'`, the uncentered form used by the
//! quantile connectedness literature: at tail quantiles the residual means
//! are far from zero and their common component is what lifts tail
//! connectedness. The generalized FEVD is the order-invariant Pesaran-Shin
//! decomposition, row-normalized to percentages.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Ols;
use crate::quantile::{qr_fit, QrFit};
use crate::timeseries::TimeSeriesPanel;

/// Quantile VAR(p) at a single quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct QvarModel {
    pub tau: f64,
    pub lags: usize,
    pub names: Vec<String>,
    pub intercept: DVector<f64>,
    /// `B_1 .. B_p`, each `N x N`; row `i` holds equation `i`.
    pub coefficients: Vec<DMatrix<f64>>,
    /// `(T - p) x N` quantile residuals.
    pub residuals: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub spectral_radius: f64,
    pub stable: bool,
}

impl QvarModel {
    /// Assemble a model from known parameters (simulation, testing).
    pub fn from_parts(
        tau: f64,
        names: Vec<String>,
        intercept: DVector<f64>,
        coefficients: Vec<DMatrix<f64>>,
        sigma: DMatrix<f64>,
    ) -> Result<Self> {
        let n = names.len();
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument("at least one lag matrix is required".into()));
        }
        if intercept.len() != n || sigma.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: intercept.len().max(sigma.nrows()),
            });
        }
        if let Some(b) = coefficients.iter().find(|b| b.shape() != (n, n)) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.nrows(),
            });
        }
        let spectral_radius = spectral_radius(&coefficients);
        Ok(Self {
            tau,
            lags: coefficients.len(),
            names,
            intercept,
            coefficients,
            residuals: DMatrix::zeros(0, n),
            sigma,
            spectral_radius,
            stable: spectral_radius < 1.0,
        })
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }
}

/// Largest eigenvalue modulus of the companion matrix.
pub fn spectral_radius(coefficients: &[DMatrix<f64>]) -> f64 {
    let companion = companion_matrix(coefficients);
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn companion_matrix(coefficients: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = coefficients[0].nrows();
    let p = coefficients.len();
    let mut c = DMatrix::zeros(n * p, n * p);
    for (k, b) in coefficients.iter().enumerate() {
        c.view_mut((0, k * n), (n, n)).copy_from(b);
    }
    for k in 1..p {
        c.view_mut((k * n, (k - 1) * n), (n, n))
            .copy_from(&DMatrix::identity(n, n));
    }
    c
}

/// Lagged design `[1, y_{t-1}, ..., y_{t-p}]` and targets `y_t`, `t = p..T`.
pub fn var_design(values: &DMatrix<f64>, lags: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (t, n) = values.shape();
    let rows = t - lags;
    let mut x = DMatrix::zeros(rows, 1 + n * lags);
    for r in 0..rows {
        x[(r, 0)] = 1.0;
        for l in 1..=lags {
            for j in 0..n {
                x[(r, 1 + (l - 1) * n + j)] = values[(r + lags - l, j)];
            }
        }
    }
    let y = values.rows(lags, rows).into_owned();
    (x, y)
}

pub fn fit_qvar(panel: &TimeSeriesPanel, tau: f64, lags: usize) -> Result<QvarModel> {
    fit_qvar_values(panel.values(), panel.names(), tau, lags)
}

pub fn fit_qvar_values(values: &DMatrix<f64>, names: &[String], tau: f64, lags: usize) -> Result<QvarModel> {
    let (t, n) = values.shape();
    if lags == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    let needed = n * lags + 1;
    if t <= lags || t - lags <= needed {
        return Err(Error::InsufficientData {
            needed: needed + lags + 1,
            got: t,
        });
    }
    let (x, y) = var_design(values, lags);
    let rows = t - lags;
    let mut intercept = DVector::zeros(n);
    let mut coefficients = vec![DMatrix::zeros(n, n); lags];
    let mut residuals = DMatrix::zeros(rows, n);
    for i in 0..n {
        let target = y.column(i).into_owned();
        let fit: QrFit = qr_fit(&x, &target, tau)?;
        if !fit.converged {
            return Err(Error::NotConverged { equation: i });
        }
        intercept[i] = fit.coefficients[0];
        for (l, b) in coefficients.iter_mut().enumerate() {
            for j in 0..n {
                b[(i, j)] = fit.coefficients[1 + l * n + j];
            }
        }
        residuals.column_mut(i).copy_from_slice(&fit.residuals);
    }
    let sigma = residual_moment(&residuals);
    let spectral_radius = spectral_radius(&coefficients);
    Ok(QvarModel {
        tau,
        lags,
        names: names.to_vec(),
        intercept,
        coefficients,
        residuals,
        sigma,
        spectral_radius,
        stable: spectral_radius < 1.0,
    })
}

/// `(T - p)^{-1} E'E`, symmetrized.
fn residual_moment(e: &DMatrix<f64>) -> DMatrix<f64> {
    let s = e.transpose() * e / e.nrows() as f64;
    (&s + s.transpose()) * 0.5
}

/// Lag order minimising the Schwarz criterion of the least-squares VAR,
/// all candidates on the sample left after `max_lags` initial rows.
pub fn select_var_lags_bic(values: &DMatrix<f64>, max_lags: usize) -> Result<usize> {
    let (t, n) = values.shape();
    if max_lags == 0 {
        return Err(Error::InvalidArgument("max_lags must be at least 1".into()));
    }
    let rows = t.saturating_sub(max_lags);
    if rows <= n * max_lags + 1 {
        return Err(Error::InsufficientData {
            needed: n * max_lags + 2 + max_lags,
            got: t,
        });
    }
    let trimmed = values.rows(max_lags, rows).into_owned();
    let mut best = (f64::INFINITY, 1);
    for p in 1..=max_lags {
        let (x_full, _) = var_design(values, p);
        let x = x_full.rows(max_lags - p, rows).into_owned();
        let mut resid = DMatrix::zeros(rows, n);
        for i in 0..n {
            let fit = Ols::fit(&x, &trimmed.column(i).into_owned())?;
            resid.column_mut(i).copy_from(&fit.residuals);
        }
        let sigma = resid.transpose() * &resid / rows as f64;
        let det = sigma.determinant();
        if det <= 0.0 {
            continue;
        }
        let params = (n * n * p + n) as f64;
        let bic = det.ln() + (rows as f64).ln() * params / rows as f64;
        if bic < best.0 {
            best = (bic, p);
        }
    }
    Ok(best.1)
}

/// Moving-average matrices `psi_0 .. psi_{H-1}` with `psi_0 = I` and
/// `psi_h = sum_{k=1}^{min(h,p)} B_k psi_{h-k}`.
pub fn ma_coefficients(model: &QvarModel, horizon: usize) -> Vec<DMatrix<f64>> {
    let n = model.nvars();
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon);
    for h in 0..horizon {
        if h == 0 {
            psi.push(DMatrix::identity(n, n));
            continue;
        }
        let mut m = DMatrix::zeros(n, n);
        for k in 1..=h.min(model.lags) {
            m += &model.coefficients[k - 1] * &psi[h - k];
        }
        psi.push(m);
    }
    psi
}

/// Generalized FEVD at horizon `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FevdMatrix {
    pub horizon: usize,
    pub names: Vec<String>,
    /// Unnormalized shares `theta_ij(H)`.
    pub raw: DMatrix<f64>,
    /// Rows rescaled to sum to 100.
    pub normalized: DMatrix<f64>,
    pub stable: bool,
}

/// `theta_ij = sigma_jj^{-1} sum_h (e_i' psi_h S e_j)^2 / sum_h e_i' psi_h S psi_h' e_i`.
pub fn gfevd(model: &QvarModel, horizon: usize) -> Result<FevdMatrix> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let n = model.nvars();
    let sigma = &model.sigma;
    if let Some(j) = (0..n).find(|&j| !(sigma[(j, j)] > 0.0)) {
        return Err(Error::ZeroVariance(model.names[j].clone()));
    }
    let mut numer = DMatrix::<f64>::zeros(n, n);
    let mut denom = DVector::<f64>::zeros(n);
    for psi in ma_coefficients(model, horizon) {
        let a = &psi * sigma;
        numer += a.map(|v| v * v);
        let v = &a * psi.transpose();
        for i in 0..n {
            denom[i] += v[(i, i)];
        }
    }
    let mut raw = numer;
    for i in 0..n {
        for j in 0..n {
            raw[(i, j)] /= sigma[(j, j)] * denom[i];
        }
    }
    let mut normalized = raw.clone();
    for i in 0..n {
        let s: f64 = raw.row(i).sum();
        normalized.row_mut(i).scale_mut(100.0 / s);
    }
    Ok(FevdMatrix {
        horizon,
        names: model.names.clone(),
        raw,
        normalized,
        stable: model.stable,
    })
}

/// Diebold-Yilmaz summaries of a normalized FEVD. `matrix[(i, j)]` is the
/// share of variable `i`'s forecast-error variance due to shocks in `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverTable {
    pub names: Vec<String>,
    pub horizon: usize,
    pub matrix: Vec<Vec<f64>>,
    /// Total spillover index, percent.
    pub tsi: f64,
    /// Column off-diagonal sums: transmitted to others.
    pub to_others: Vec<f64>,
    /// Row off-diagonal sums: received from others.
    pub from_others: Vec<f64>,
    pub net: Vec<f64>,
    /// Own share plus transmitted.
    pub inc_own: Vec<f64>,
    pub stable: bool,
}

pub fn spillover_indices(fevd: &FevdMatrix) -> SpilloverTable {
    let w = &fevd.normalized;
    let n = w.nrows();
    let total: f64 = w.sum();
    let own: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    let from_others: Vec<f64> = (0..n).map(|i| w.row(i).sum() - own[i]).collect();
    let to_others: Vec<f64> = (0..n).map(|j| w.column(j).sum() - own[j]).collect();
    let off: f64 = total - own.iter().sum::<f64>();
    let net = (0..n).map(|i| to_others[i] - from_others[i]).collect();
    let inc_own = (0..n).map(|i| own[i] + to_others[i]).collect();
    SpilloverTable {
        names: fevd.names.clone(),
        horizon: fevd.horizon,
        matrix: w.row_iter().map(|r| r.iter().copied().collect()).collect(),
        tsi: off / total * 100.0,
        to_others,
        from_others,
        net,
        inc_own,
        stable: fevd.stable,
    }
}

/// Estimate-decompose-summarise at a single quantile.
pub fn static_spillovers(panel: &TimeSeriesPanel, tau: f64, lags: usize, horizon: usize) -> Result<SpilloverTable> {
    require_multivariate(panel)?;
    let model = fit_qvar(panel, tau, lags)?;
    Ok(spillover_indices(&gfevd(&model, horizon)?))
}

fn require_multivariate(panel: &TimeSeriesPanel) -> Result<()> {
    if panel.nvars() < 2 {
        return Err(Error::InvalidArgument(
            "connectedness needs N >= 2 variables".into(),
        ));
    }
    Ok(())
}

/// One point of a quantile sweep; failures are kept per quantile.
#[derive(Debug)]
pub struct SweepPoint {
    pub tau: f64,
    pub table: Result<SpilloverTable>,
}

pub fn quantile_sweep(panel: &TimeSeriesPanel, taus: &[f64], lags: usize, horizon: usize) -> Result<Vec<SweepPoint>> {
    require_multivariate(panel)?;
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {t}")));
    }
    Ok(taus
        .par_iter()
        .map(|&tau| SweepPoint {
            tau,
            table: static_spillovers(panel, tau, lags, horizon),
        })
        .collect())
}

/// Evenly spaced grid `start, start + step, ..., <= stop`.
pub fn tau_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::InvalidArgument(format!("bad tau grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// `TSI(upper tail) - TSI(lower tail)`; negative values mean stronger
/// left-tail connectedness.
pub fn relative_tail_dependence(upper: &SpilloverTable, lower: &SpilloverTable) -> f64 {
    upper.tsi - lower.tsi
}
