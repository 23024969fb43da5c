//! Least-squares machinery shared by the regression-based modules.

use nalgebra::{DMatrix, DVector};

use crate::dist;
use crate::error::{Error, Result};

/// Relative threshold on the diagonal of R below which a column counts as
/// linearly dependent on the preceding ones.
const RANK_TOL: f64 = 1e-10;

/// Covariance estimator for coefficient inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Classical `s^2 (X'X)^{-1}`.
    #[default]
    Standard,
    /// Newey-West sandwich with a Bartlett kernel of the given bandwidth.
    Hac { lags: usize },
}

/// Ordinary least squares fit.
#[derive(Debug, Clone)]
pub struct Ols {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub fitted: DVector<f64>,
    pub rss: f64,
    /// Centered total sum of squares of the response.
    pub tss: f64,
    xtx_inv: DMatrix<f64>,
    design: DMatrix<f64>,
    covariance: CovarianceKind,
}

/// Result of a linear Wald restriction test `R b = q`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaldTest {
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

impl Ols {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let (n, k) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if n <= k {
            return Err(Error::InsufficientData {
                needed: k + 1,
                got: n,
            });
        }
        // Scale columns to unit norm so the rank test is relative.
        let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
        if norms.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            return Err(Error::RankDeficient);
        }
        let mut xs = x.clone();
        for (j, s) in norms.iter().enumerate() {
            xs.column_mut(j).unscale_mut(*s);
        }
        let qr = xs.qr();
        let r = qr.r();
        if (0..k).any(|j| r[(j, j)].abs() < RANK_TOL) {
            return Err(Error::RankDeficient);
        }
        let qty = qr.q().transpose() * y;
        let beta_scaled = r
            .solve_upper_triangular(&qty)
            .ok_or(Error::RankDeficient)?;
        let r_inv = r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or(Error::RankDeficient)?;
        let mut xtx_inv = &r_inv * r_inv.transpose();
        let mut coefficients = beta_scaled;
        for j in 0..k {
            coefficients[j] /= norms[j];
        }
        for i in 0..k {
            for j in 0..k {
                xtx_inv[(i, j)] /= norms[i] * norms[j];
            }
        }
        let fitted = x * &coefficients;
        let residuals = y - &fitted;
        let rss = residuals.norm_squared();
        let mean = y.mean();
        let tss = y.iter().map(|v| (v - mean).powi(2)).sum();
        Ok(Self {
            coefficients,
            residuals,
            fitted,
            rss,
            tss,
            xtx_inv,
            design: x.clone(),
            covariance: CovarianceKind::Standard,
        })
    }

    pub fn with_covariance(mut self, kind: CovarianceKind) -> Self {
        self.covariance = kind;
        self
    }

    pub fn nobs(&self) -> usize {
        self.residuals.len()
    }

    pub fn ncoef(&self) -> usize {
        self.coefficients.len()
    }

    pub fn df_resid(&self) -> usize {
        self.nobs() - self.ncoef()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// Unbiased residual variance `RSS / (n - k)`.
    pub fn sigma2(&self) -> f64 {
        self.rss / self.df_resid() as f64
    }

    pub fn r_squared(&self) -> f64 {
        if self.tss == 0.0 {
            return 0.0;
        }
        1.0 - self.rss / self.tss
    }

    /// Gaussian log-likelihood at the ML variance estimate.
    pub fn log_likelihood(&self) -> f64 {
        let n = self.nobs() as f64;
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (self.rss / n).ln() + 1.0)
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.log_likelihood() + 2.0 * self.ncoef() as f64
    }

    pub fn bic(&self) -> f64 {
        -2.0 * self.log_likelihood() + (self.nobs() as f64).ln() * self.ncoef() as f64
    }

    pub fn xtx_inv(&self) -> &DMatrix<f64> {
        &self.xtx_inv
    }

    /// Coefficient covariance under the configured estimator.
    pub fn covariance(&self) -> DMatrix<f64> {
        match self.covariance {
            CovarianceKind::Standard => &self.xtx_inv * self.sigma2(),
            CovarianceKind::Hac { lags } => {
                let meat = hac_meat(&self.design, &self.residuals, lags);
                let n = self.nobs() as f64;
                let k = self.ncoef() as f64;
                (&self.xtx_inv * meat * &self.xtx_inv) * (n / (n - k))
            }
        }
    }

    pub fn std_errors(&self) -> DVector<f64> {
        self.covariance().diagonal().map(f64::sqrt)
    }

    pub fn t_stats(&self) -> DVector<f64> {
        self.coefficients.component_div(&self.std_errors())
    }

    pub fn p_values(&self) -> DVector<f64> {
        let df = self.df_resid() as f64;
        self.t_stats().map(|t| dist::t_two_sided(t, df))
    }

    /// F-form Wald test of `R b = q`.
    pub fn wald(&self, r: &DMatrix<f64>, q: &DVector<f64>) -> Result<WaldTest> {
        let m = r.nrows();
        if r.ncols() != self.ncoef() {
            return Err(Error::DimensionMismatch {
                expected: self.ncoef(),
                got: r.ncols(),
            });
        }
        let diff = r * &self.coefficients - q;
        let middle = r * self.covariance() * r.transpose();
        let chol = middle
            .cholesky()
            .ok_or(Error::Singular("Wald restriction covariance"))?;
        let quad = diff.dot(&chol.solve(&diff));
        let f_stat = (quad / m as f64).max(0.0);
        let df2 = self.df_resid();
        Ok(WaldTest {
            f_stat,
            df1: m,
            df2,
            p_value: dist::f_sf(f_stat, m as f64, df2 as f64),
        })
    }
}

/// `sum_l w_l (Gamma_l + Gamma_l')` for the score process `x_t e_t`.
fn hac_meat(x: &DMatrix<f64>, e: &DVector<f64>, lags: usize) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut scores = x.clone();
    for i in 0..n {
        scores.row_mut(i).scale_mut(e[i]);
    }
    let mut meat = scores.transpose() * &scores;
    for l in 1..=lags.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let lead = scores.rows(l, n - l);
        let lag = scores.rows(0, n - l);
        let gamma = lead.transpose() * lag;
        meat += (&gamma + gamma.transpose()) * w;
    }
    debug_assert_eq!(meat.nrows(), k);
    meat
}

/// Build a matrix from column vectors of equal length.
pub fn from_columns(n: usize, columns: &[Vec<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, columns.len());
    for (j, c) in columns.iter().enumerate() {
        debug_assert_eq!(c.len(), n);
        out.column_mut(j).copy_from_slice(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_recovers_coefficients() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let fit = Ols::fit(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn collinear_columns_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(Ols::fit(&x, &y), Err(Error::RankDeficient)));
    }

    #[test]
    fn wald_single_restriction_is_t_squared() {
        let x = DMatrix::from_fn(30, 2, |i, j| if j == 0 { 1.0 } else { (i as f64).sin() });
        let y = DVector::from_fn(30, |i, _| 0.5 + (i as f64 * 1.3).cos());
        let fit = Ols::fit(&x, &y).unwrap();
        let r = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let w = fit.wald(&r, &DVector::zeros(1)).unwrap();
        assert!((w.f_stat - fit.t_stats()[1].powi(2)).abs() < 1e-10);
        assert!((w.p_value - fit.p_values()[1]).abs() < 1e-8);
    }
}
