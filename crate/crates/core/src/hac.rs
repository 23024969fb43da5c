//! Newey-West long-run variance with a Bartlett kernel.

/// Default Bartlett bandwidth `floor(4 (T/100)^{2/9})`.
pub fn default_bandwidth(nobs: usize) -> usize {
    (4.0 * (nobs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Autocovariance at lag `l` with divisor `T` (no demeaning).
pub fn autocovariance(u: &[f64], lag: usize) -> f64 {
    let n = u.len();
    if lag >= n {
        return 0.0;
    }
    u[lag..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// `gamma_0 + 2 sum_{l=1}^{L} (1 - l/(L+1)) gamma_l`.
pub fn long_run_variance(u: &[f64], bandwidth: usize) -> f64 {
    let mut lrv = autocovariance(u, 0);
    for l in 1..=bandwidth {
        let w = 1.0 - l as f64 / (bandwidth as f64 + 1.0);
        lrv += 2.0 * w * autocovariance(u, l);
    }
    lrv
}
