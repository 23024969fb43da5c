//! Seeded simulators and the bundled synthetic demo dataset.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::Result;
use crate::timeseries::{monthly_dates, TimeSeriesPanel};

const BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Gaussian,
    /// Student-t with the given degrees of freedom, rescaled to unit variance.
    StudentT(f64),
}

impl Innovation {
    pub fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => StandardNormal.sample(rng),
            Self::StudentT(df) => {
                let t: f64 = StudentT::new(df).expect("positive df").sample(rng);
                if df > 2.0 {
                    t / (df / (df - 2.0)).sqrt()
                } else {
                    t
                }
            }
        }
    }
}

/// Simulate `t` observations of `y_t = sum_k B_k y_{t-k} + u_t` where the
/// shock generator receives the time index and the generator state.
pub fn simulate_var_with<F>(coefficients: &[DMatrix<f64>], t: usize, seed: u64, mut shock: F) -> DMatrix<f64>
where
    F: FnMut(usize, &mut ChaCha8Rng) -> DVector<f64>,
{
    let n = coefficients[0].nrows();
    let p = coefficients.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = t + BURN_IN;
    let mut path: Vec<DVector<f64>> = Vec::with_capacity(total);
    for s in 0..total {
        let mut y = shock(s.saturating_sub(BURN_IN), &mut rng);
        for k in 1..=p.min(s) {
            y += &coefficients[k - 1] * &path[s - k];
        }
        path.push(y);
    }
    DMatrix::from_fn(t, n, |i, j| path[BURN_IN + i][j])
}

/// VAR with shocks `L z_t`, `L L' = shock_cov`, `z_t` iid from `innovation`.
pub fn simulate_var(
    coefficients: &[DMatrix<f64>],
    shock_cov: &DMatrix<f64>,
    t: usize,
    innovation: Innovation,
    seed: u64,
) -> DMatrix<f64> {
    let n = shock_cov.nrows();
    let chol = shock_cov
        .clone()
        .cholesky()
        .expect("shock covariance must be positive definite")
        .l();
    simulate_var_with(coefficients, t, seed, |_, rng| {
        let z = DVector::from_fn(n, |_, _| innovation.draw(rng));
        &chol * z
    })
}

/// Shocks `loadings * f_t + scale * e_t` with a common factor `f_t` and
/// idiosyncratic `e_t`, both iid `innovation`.
pub fn simulate_factor_var(
    coefficients: &[DMatrix<f64>],
    loadings: &[f64],
    idiosyncratic_scale: f64,
    t: usize,
    innovation: Innovation,
    seed: u64,
) -> DMatrix<f64> {
    let n = loadings.len();
    simulate_var_with(coefficients, t, seed, |_, rng| {
        let f = innovation.draw(rng);
        DVector::from_fn(n, |i, _| loadings[i] * f + idiosyncratic_scale * innovation.draw(rng))
    })
}

/// Synthetic inputs: monthly prices for three markets and four positive
/// uncertainty indices on the same grid.
#[derive(Debug, Clone)]
pub struct DemoData {
    pub prices: TimeSeriesPanel,
    pub uncertainty: TimeSeriesPanel,
}

pub const DEMO_ROWS: usize = 144;
pub const DEMO_SEED: u64 = 20_240_101;
pub const PRICE_NAMES: [&str; 3] = ["food", "clean", "fossil"];
pub const UNCERTAINTY_NAMES: [&str; 4] = ["epu", "cpu", "tpu", "gpr"];

pub fn demo_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 1, 1).expect("valid date")
}

/// 144 months starting January 2012. Log uncertainty indices follow
/// AR(1) processes around 100; returns follow a fat-tailed VAR(1) whose
/// common-factor loading rises with geopolitical risk.
pub fn demo_dataset(seed: u64) -> Result<DemoData> {
    let t = DEMO_ROWS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let persistence = [0.85, 0.6, 0.9, 0.75];
    let vol = [0.18, 0.25, 0.30, 0.22];
    let mut logs = vec![vec![0.0; t]; 4];
    for k in 0..4 {
        let mut x = 0.0;
        for _ in 0..BURN_IN {
            x = persistence[k] * x + vol[k] * Innovation::StudentT(5.0).draw(&mut rng);
        }
        for v in logs[k].iter_mut() {
            x = persistence[k] * x + vol[k] * Innovation::StudentT(5.0).draw(&mut rng);
            *v = x;
        }
    }
    let gpr = logs[3].clone();

    let b = DMatrix::from_row_slice(
        3,
        3,
        &[0.20, 0.05, 0.03, 0.04, 0.10, 0.08, 0.02, 0.12, 0.05],
    );
    let base_loading = [0.008, 0.045, 0.05];
    let idio = [0.02, 0.07, 0.075];
    let returns = simulate_var_with(&[b], t, seed ^ 0x9e37_79b9, |s, rng| {
        let boost = (0.8 * gpr[s.min(t - 1)]).exp();
        let f = Innovation::StudentT(3.0).draw(rng);
        DVector::from_fn(3, |i, _| {
            base_loading[i] * boost * f + idio[i] * Innovation::StudentT(4.0).draw(rng)
        })
    });

    let dates = monthly_dates(demo_start(), t);
    let mut price_cols = Vec::new();
    for (j, name) in PRICE_NAMES.iter().enumerate() {
        let mut p = 100.0;
        let col: Vec<f64> = (0..t)
            .map(|i| {
                if i > 0 {
                    p *= returns[(i, j)].exp();
                }
                round6(p)
            })
            .collect();
        price_cols.push((name.to_string(), col));
    }
    let unc_cols = UNCERTAINTY_NAMES
        .iter()
        .zip(&logs)
        .map(|(name, l)| (name.to_string(), l.iter().map(|v| round6(100.0 * v.exp())).collect()))
        .collect();
    Ok(DemoData {
        prices: TimeSeriesPanel::from_columns(dates.clone(), price_cols)?,
        uncertainty: TimeSeriesPanel::from_columns(dates, unc_cols)?,
    })
}

pub fn demo_prices(seed: u64) -> Result<TimeSeriesPanel> {
    Ok(demo_dataset(seed)?.prices)
}

/// Values are stored in CSV with six decimals; rounding here keeps the
/// in-memory and on-disk datasets identical.
fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}
