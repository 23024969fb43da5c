//! Linear quantile regression by check-loss minimisation.
//!
//! The estimator solves the bounded dual linear program
//!
//! ```text
//! max  y'a   s.t.  X'a = (1 - tau) X'1,   0 <= a <= 1
//! ```
//!
//! with a Mehrotra predictor-corrector primal-dual interior-point method
//! (the Frisch-Newton scheme). The coefficient vector is the negated
//! multiplier of the equality constraint. Once the duality gap has closed,
//! the iterate is purified to the nearest optimal basic solution so that
//! coefficients interpolate exactly `K` observations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Ols;

/// Fraction of the distance to the boundary taken per step.
const STEP_DAMPING: f64 = 0.99995;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrOptions {
    /// Relative duality-gap tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Snap the interior-point limit to an optimal vertex when one is found.
    pub purify: bool,
}

impl Default for QrOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            purify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrFit {
    pub tau: f64,
    /// Coefficients in the column order of the design (intercept first when
    /// the caller supplies one).
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Pinball loss `sum_i u_i (tau - 1{u_i < 0})`.
pub fn check_loss(u: &[f64], tau: f64) -> f64 {
    u.iter()
        .map(|&v| if v < 0.0 { v * (tau - 1.0) } else { v * tau })
        .sum()
}

fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")))
    }
}

pub fn qr_fit(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Result<QrFit> {
    qr_fit_with(x, y, tau, &QrOptions::default())
}

pub fn qr_fit_with(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64, opts: &QrOptions) -> Result<QrFit> {
    validate_tau(tau)?;
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
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in quantile regression data".into()));
    }
    // Also the rank check.
    let ols = Ols::fit(x, y)?;

    let y_scale = (ols.rss / n as f64).sqrt();
    if y_scale <= 1e-13 * (y.norm_squared() / n as f64).sqrt().max(f64::MIN_POSITIVE) {
        // Exact interpolation: the least-squares fit attains zero loss.
        let coefficients: Vec<f64> = ols.coefficients.iter().copied().collect();
        let residuals: Vec<f64> = ols.residuals.iter().map(|_| 0.0).collect();
        return Ok(QrFit {
            tau,
            coefficients,
            residuals,
            objective: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let col_scale: Vec<f64> = x
        .column_iter()
        .map(|c| (c.norm_squared() / n as f64).sqrt())
        .collect();
    let mut xs = x.clone();
    for (j, s) in col_scale.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let ys = y / y_scale;
    let beta0 = DVector::from_fn(k, |j, _| ols.coefficients[j] * col_scale[j] / y_scale);

    let ip = frisch_newton(&xs, &ys, tau, &beta0, opts);

    let mut beta: Vec<f64> = (0..k)
        .map(|j| ip.beta[j] * y_scale / col_scale[j])
        .collect();
    let mut residuals = residual_vec(x, y, &beta);
    let mut objective = check_loss(&residuals, tau);

    if opts.purify {
        if let Some((vb, basis)) = purify(x, y, tau, &residuals, objective) {
            beta = vb;
            residuals = residual_vec(x, y, &beta);
            for i in basis {
                residuals[i] = 0.0;
            }
            objective = check_loss(&residuals, tau);
        }
    }

    Ok(QrFit {
        tau,
        coefficients: beta,
        residuals,
        objective,
        iterations: ip.iterations,
        converged: ip.converged,
    })
}

fn residual_vec(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64]) -> Vec<f64> {
    let b = DVector::from_column_slice(beta);
    (y - x * b).iter().copied().collect()
}

struct IpResult {
    beta: DVector<f64>,
    iterations: usize,
    converged: bool,
}

/// Primal-dual iterations for `min c'a  s.t.  A a = b, 0 <= a <= 1` with
/// `A = X'`, `c = -y`, `b = (1 - tau) X'1`.
fn frisch_newton(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64, beta0: &DVector<f64>, opts: &QrOptions) -> IpResult {
    let n = x.nrows();
    let xt = x.transpose();
    let c = -y;
    let b = (&xt * DVector::from_element(n, 1.0)) * (1.0 - tau);

    // Primal point: a = (1 - tau), slack s = 1 - a.
    let mut a = DVector::from_element(n, 1.0 - tau);
    let mut s = DVector::from_element(n, tau);
    // Dual point from least squares; equal offsets keep dual feasibility.
    let mut dual = -beta0;
    let r = &c - x * &dual;
    let offset = (r.iter().map(|v| v.abs()).sum::<f64>() / n as f64).max(1e-3);
    let mut z = r.map(|v| v.max(0.0) + offset);
    let mut w = r.map(|v| (-v).max(0.0) + offset);

    let b_norm = 1.0 + b.norm();
    let c_norm = 1.0 + c.norm();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let rp = &b - &xt * &a;
        let rd = &c - x * &dual - &z + &w;
        let gap = a.dot(&z) + s.dot(&w);
        let primal_obj = c.dot(&a);
        if gap / (1.0 + primal_obj.abs()) < opts.tolerance
            && rp.norm() / b_norm < opts.tolerance
            && rd.norm() / c_norm < opts.tolerance
        {
            converged = true;
            break;
        }
        iterations += 1;

        let q = DVector::from_fn(n, |i, _| 1.0 / (z[i] / a[i] + w[i] / s[i]));
        let mut m = xt.clone();
        for i in 0..n {
            m.column_mut(i).scale_mut(q[i]);
        }
        let m = &m * x;
        let Some(chol) = m.cholesky() else { break };

        // Solve the reduced system for a given complementarity right-hand side.
        let solve = |r_az: &DVector<f64>, r_sw: &DVector<f64>| {
            let rho = DVector::from_fn(n, |i, _| rd[i] - r_az[i] / a[i] + r_sw[i] / s[i]);
            let rhs = &rp + &xt * q.component_mul(&rho);
            let d_dual = chol.solve(&rhs);
            let da = q.component_mul(&(x * &d_dual - &rho));
            let dz = DVector::from_fn(n, |i, _| (r_az[i] - z[i] * da[i]) / a[i]);
            let dw = DVector::from_fn(n, |i, _| (r_sw[i] + w[i] * da[i]) / s[i]);
            (da, d_dual, dz, dw)
        };

        // Predictor.
        let r_az = -a.component_mul(&z);
        let r_sw = -s.component_mul(&w);
        let (da, _, dz, dw) = solve(&r_az, &r_sw);
        let ds = -&da;
        let ap = step_length(&a, &da).min(step_length(&s, &ds)).min(1.0);
        let ad = step_length(&z, &dz).min(step_length(&w, &dw)).min(1.0);
        let mu_aff = (&a + &da * ap).dot(&(&z + &dz * ad)) + (&s + &ds * ap).dot(&(&w + &dw * ad));
        let sigma = (mu_aff / gap).clamp(0.0, 1.0).powi(3);
        let mu = sigma * gap / (2 * n) as f64;

        // Corrector.
        let r_az = DVector::from_fn(n, |i, _| mu - a[i] * z[i] - da[i] * dz[i]);
        let r_sw = DVector::from_fn(n, |i, _| mu - s[i] * w[i] - ds[i] * dw[i]);
        let (da, d_dual, dz, dw) = solve(&r_az, &r_sw);
        let ds = -&da;
        let ap = (STEP_DAMPING * step_length(&a, &da).min(step_length(&s, &ds))).min(1.0);
        let ad = (STEP_DAMPING * step_length(&z, &dz).min(step_length(&w, &dw))).min(1.0);

        a += &da * ap;
        s += &ds * ap;
        dual += &d_dual * ad;
        z += &dz * ad;
        w += &dw * ad;
    }

    IpResult {
        beta: -dual,
        iterations,
        converged,
    }
}

/// Largest `alpha` (possibly infinite) keeping `v + alpha dv >= 0`.
fn step_length(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Search basic solutions built from the `K + 1` observations closest to the
/// fitted hyperplane. Returns the best vertex (ties broken towards the
/// lexicographically smallest coefficient vector) when its loss does not
/// exceed the interior-point loss.
fn purify(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64, residuals: &[f64], ip_objective: f64) -> Option<(Vec<f64>, Vec<usize>)> {
    let (n, k) = x.shape();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| residuals[i].abs().total_cmp(&residuals[j].abs()).then(i.cmp(&j)));
    let pool: Vec<usize> = order.into_iter().take((k + 1).min(n)).collect();

    let scale = 1.0 + ip_objective.abs();
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    for skip in (0..pool.len()).rev() {
        let basis: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|(p, _)| *p != skip || pool.len() == k)
            .map(|(_, &i)| i)
            .take(k)
            .collect();
        if basis.len() != k {
            continue;
        }
        let xh = x.select_rows(basis.iter());
        let yh = DVector::from_iterator(k, basis.iter().map(|&i| y[i]));
        let Some(sol) = xh.lu().solve(&yh) else { continue };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let beta: Vec<f64> = sol.iter().copied().collect();
        let obj = check_loss(&residual_vec(x, y, &beta), tau);
        let better = match &best {
            None => true,
            Some((bo, bb, _)) => {
                if (obj - bo).abs() <= 1e-12 * scale {
                    lexicographic_less(&beta, bb)
                } else {
                    obj < *bo
                }
            }
        };
        if better {
            best = Some((obj, beta, basis));
        }
        if pool.len() == k {
            break;
        }
    }
    let (obj, beta, basis) = best?;
    (obj <= ip_objective + 1e-10 * scale).then_some((beta, basis))
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive vertex enumeration: the LP optimum is attained at a basic
    //! solution interpolating `K` observations.
    use super::*;

    pub fn vertex_enumeration(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> (Vec<f64>, f64) {
        let (n, k) = x.shape();
        let mut best: (Vec<f64>, f64) = (vec![], f64::INFINITY);
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let xh = x.select_rows(idx.iter());
            let yh = DVector::from_iterator(k, idx.iter().map(|&i| y[i]));
            if xh.determinant().abs() > 1e-12 {
                if let Some(sol) = xh.lu().solve(&yh) {
                    let b: Vec<f64> = sol.iter().copied().collect();
                    let obj = check_loss(&residual_vec(x, y, &b), tau);
                    if obj < best.1 {
                        best = (b, obj);
                    }
                }
            }
            // Next combination in lexicographic order.
            let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
                return best;
            };
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}
