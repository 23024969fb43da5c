//! Tail probabilities for the reference distributions used by the tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|d| d.sf(x)).unwrap_or(f64::NAN).clamp(0.0, 1.0)
}

pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    FisherSnedecor::new(df1, df2)
        .map(|d| d.sf(x))
        .unwrap_or(f64::NAN)
        .clamp(0.0, 1.0)
}

/// Two-sided p-value of a t statistic.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    let d = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * d.sf(t.abs())).clamp(0.0, 1.0)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_quantiles() {
        assert!((chi2_sf(5.991_464_547, 2.0) - 0.05).abs() < 1e-8);
        assert!((t_two_sided(1.959_963_985, 1e9) - 0.05).abs() < 1e-6);
        assert!((f_sf(3.0, 1.0, 1e9) - chi2_sf(3.0, 1.0)).abs() < 1e-5);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
    }
}
