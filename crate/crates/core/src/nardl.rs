//! Nonlinear ARDL: regressors split into positive and negative partial
//! sums that share one lag order, with Wald tests of long- and short-run
//! symmetry.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ardl::{self, ArdlFit, ArdlSpec, Group, Term};
use crate::error::{Error, Result};
use crate::linalg::WaldTest;
use crate::timeseries::TimeSeriesPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumPair {
    /// `X_t^+` for `t = 1..T-1`.
    pub positive: Vec<f64>,
    /// `X_t^-` for `t = 1..T-1`.
    pub negative: Vec<f64>,
    pub origin: f64,
}

impl PartialSumPair {
    /// Both sums on the original time grid, zero at the first observation.
    pub fn aligned(&self) -> (Vec<f64>, Vec<f64>) {
        let pad = |v: &[f64]| std::iter::once(0.0).chain(v.iter().copied()).collect();
        (pad(&self.positive), pad(&self.negative))
    }
}

/// Cumulative sums of the positive and negative parts of `dX`.
pub fn partial_sums(series: &[f64]) -> Result<PartialSumPair> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.len(),
        });
    }
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut positive = Vec::with_capacity(series.len() - 1);
    let mut negative = Vec::with_capacity(series.len() - 1);
    for w in series.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            pos += d;
        } else {
            neg += d;
        }
        positive.push(pos);
        negative.push(neg);
    }
    Ok(PartialSumPair {
        positive,
        negative,
        origin: series[0],
    })
}

pub fn positive_name(variable: &str) -> String {
    format!("{variable}_pos")
}

pub fn negative_name(variable: &str) -> String {
    format!("{variable}_neg")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NardlSpec {
    /// Lag caps and selected lags carry one entry per original regressor.
    pub ardl: ArdlSpec,
    /// Regressors to decompose; the rest stay linear.
    pub asymmetric: Vec<String>,
}

impl NardlSpec {
    /// Every regressor decomposed.
    pub fn all_asymmetric(ardl: ArdlSpec) -> Self {
        let asymmetric = ardl.regressors.clone();
        Self { ardl, asymmetric }
    }

    fn groups(&self) -> Result<Vec<Group>> {
        if let Some(a) = self.asymmetric.iter().find(|a| !self.ardl.regressors.contains(a)) {
            return Err(Error::InvalidArgument(format!("asymmetric variable {a} is not a regressor")));
        }
        Ok(self
            .ardl
            .regressors
            .iter()
            .map(|r| Group {
                label: r.clone(),
                columns: if self.asymmetric.contains(r) {
                    vec![positive_name(r), negative_name(r)]
                } else {
                    vec![r.clone()]
                },
            })
            .collect())
    }

    /// Panel extended with the aligned partial-sum columns.
    pub fn augment(&self, panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
        let mut out = panel.clone();
        for a in &self.asymmetric {
            let (p, n) = partial_sums(&panel.column_vec(a)?)?.aligned();
            out = out.with_column(&positive_name(a), &p)?.with_column(&negative_name(a), &n)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryTest {
    pub variable: String,
    /// `a^+ = a^-` on the lagged levels.
    pub long_run: WaldTest,
    /// Sum of `dX^+` coefficients equals sum of `dX^-` coefficients.
    pub short_run: WaldTest,
}

#[derive(Debug, Clone)]
pub struct NardlFit {
    pub spec: NardlSpec,
    pub fit: ArdlFit,
    pub wald: Vec<AsymmetryTest>,
}

impl NardlFit {
    /// `(-a^+/a_1, -a^-/a_1)` for an asymmetric regressor.
    pub fn long_run_pair(&self, variable: &str) -> Option<(f64, f64)> {
        let find = |name: String| {
            self.fit
                .long_run
                .iter()
                .find(|c| c.term == Term::LaggedLevel { variable: name.clone() })
                .map(|c| c.estimate)
        };
        Some((find(positive_name(variable))?, find(negative_name(variable))?))
    }
}

pub fn select_nardl_lags(panel: &TimeSeriesPanel, spec: &NardlSpec) -> Result<NardlSpec> {
    let augmented = spec.augment(panel)?;
    let ardl = ardl::select_groups(&augmented, &spec.ardl, &spec.groups()?)?;
    Ok(NardlSpec {
        ardl,
        asymmetric: spec.asymmetric.clone(),
    })
}

pub fn fit_nardl(panel: &TimeSeriesPanel, spec: &NardlSpec) -> Result<NardlFit> {
    let augmented = spec.augment(panel)?;
    let fit = ardl::fit_groups(&augmented, &spec.ardl, &spec.groups()?)?;
    let mut out = NardlFit {
        spec: NardlSpec {
            ardl: fit.spec.clone(),
            asymmetric: spec.asymmetric.clone(),
        },
        fit,
        wald: Vec::new(),
    };
    out.wald = wald_asymmetry(&out)?;
    Ok(out)
}

pub fn wald_asymmetry(fit: &NardlFit) -> Result<Vec<AsymmetryTest>> {
    let k = fit.fit.terms.len();
    let index = |t: Term| {
        fit.fit
            .term_index(&t)
            .ok_or_else(|| Error::InvalidArgument(format!("term {} missing from fit", t.label())))
    };
    let mut out = Vec::new();
    for (g, var) in fit.spec.ardl.regressors.iter().enumerate() {
        if !fit.spec.asymmetric.contains(var) {
            continue;
        }
        let (pos, neg) = (positive_name(var), negative_name(var));
        let mut r = DMatrix::zeros(1, k);
        r[(0, index(Term::LaggedLevel { variable: pos.clone() })?)] = 1.0;
        r[(0, index(Term::LaggedLevel { variable: neg.clone() })?)] = -1.0;
        let long_run = fit.fit.ols().wald(&r, &DVector::zeros(1))?;

        let mut r = DMatrix::zeros(1, k);
        for lag in 0..=fit.spec.ardl.selected_lags[g + 1] {
            r[(0, index(Term::Difference { variable: pos.clone(), lag })?)] = 1.0;
            r[(0, index(Term::Difference { variable: neg.clone(), lag })?)] = -1.0;
        }
        let short_run = fit.fit.ols().wald(&r, &DVector::zeros(1))?;
        out.push(AsymmetryTest {
            variable: var.clone(),
            long_run,
            short_run,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ardl::fit_ardl;
    use crate::linalg::Ols;
    use crate::timeseries::monthly_dates;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn hand_case() {
        let p = partial_sums(&[0.0, 1.0, -1.0, 2.0]).unwrap();
        assert_eq!(p.positive, vec![1.0, 1.0, 4.0]);
        assert_eq!(p.negative, vec![0.0, -2.0, -2.0]);
        assert_eq!(p.origin, 0.0);
        assert!(partial_sums(&[1.0]).is_err());
    }

    #[test]
    fn monotone_series_is_one_sided() {
        let x = [2.0, 2.5, 3.0, 4.25, 8.0];
        let p = partial_sums(&x).unwrap();
        assert!(p.negative.iter().all(|v| *v == 0.0));
        for (t, v) in p.positive.iter().enumerate() {
            assert_eq!(*v, x[t + 1] - x[0]);
        }
    }

    proptest! {
        // Values on a binary grid make every subtraction and sum exact.
        #[test]
        fn identity_is_exact(xs in prop::collection::vec(-1_000_000i64..1_000_000, 2..200)) {
            let x: Vec<f64> = xs.iter().map(|v| *v as f64 / 1024.0).collect();
            let p = partial_sums(&x).unwrap();
            for t in 0..p.positive.len() {
                prop_assert_eq!(p.positive[t] + p.negative[t], x[t + 1] - x[0]);
                if t > 0 {
                    prop_assert!(p.positive[t] >= p.positive[t - 1]);
                    prop_assert!(p.negative[t] <= p.negative[t - 1]);
                }
            }
        }

        #[test]
        fn scaling_equivariance(xs in prop::collection::vec(-1000i64..1000, 2..100), c in 1i64..16) {
            let x: Vec<f64> = xs.iter().map(|v| *v as f64).collect();
            let base = partial_sums(&x).unwrap();
            let up = partial_sums(&x.iter().map(|v| v * c as f64).collect::<Vec<_>>()).unwrap();
            let down = partial_sums(&x.iter().map(|v| -v * c as f64).collect::<Vec<_>>()).unwrap();
            for t in 0..base.positive.len() {
                prop_assert_eq!(up.positive[t], c as f64 * base.positive[t]);
                prop_assert_eq!(up.negative[t], c as f64 * base.negative[t]);
                prop_assert_eq!(down.positive[t], -(c as f64) * base.negative[t]);
                prop_assert_eq!(down.negative[t], -(c as f64) * base.positive[t]);
            }
        }
    }

    #[test]
    fn general_floats_agree_to_rounding() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = vec![0.0];
        for _ in 0..500 {
            let e: f64 = StandardNormal.sample(&mut rng);
            x.push(x.last().unwrap() + e);
        }
        let p = partial_sums(&x).unwrap();
        for t in 0..p.positive.len() {
            let scale = p.positive[t].abs() + p.negative[t].abs();
            assert!((p.positive[t] + p.negative[t] - (x[t + 1] - x[0])).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    fn panel(seed: u64, n: usize, beta_pos: f64, beta_neg: f64) -> TimeSeriesPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0];
        for _ in 1..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            x.push(x.last().unwrap() + e);
        }
        let ps = partial_sums(&x).unwrap();
        let (xp, xn) = ps.aligned();
        let mut u = 0.0;
        let y: Vec<f64> = (0..n)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                u = 0.5 * u + e;
                beta_pos * xp[t] + beta_neg * xn[t] + u
            })
            .collect();
        let mut acc = 0.0;
        let w: Vec<f64> = (0..n)
            .map(|_| {
                acc += rng.random::<f64>() - 0.5;
                acc
            })
            .collect();
        let dates = monthly_dates(NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(), n);
        TimeSeriesPanel::from_columns(dates, vec![("y".into(), y), ("x".into(), x), ("w".into(), w)]).unwrap()
    }

    #[test]
    fn long_run_pair_matches_level_terms() {
        let p = panel(1, 400, 1.0, 2.0);
        let spec = NardlSpec::all_asymmetric(ArdlSpec::new("y", &["x"], &[]).with_lags(&[1, 1]));
        let fit = fit_nardl(&p, &spec).unwrap();
        let (lp, ln) = fit.long_run_pair("x").unwrap();
        let a1 = fit.fit.coefficient(&Term::LaggedLevel { variable: "y".into() }).unwrap().estimate;
        let ap = fit.fit.coefficient(&Term::LaggedLevel { variable: "x_pos".into() }).unwrap().estimate;
        let an = fit.fit.coefficient(&Term::LaggedLevel { variable: "x_neg".into() }).unwrap().estimate;
        assert!((lp + ap / a1).abs() < 1e-10);
        assert!((ln + an / a1).abs() < 1e-10);
        assert!((lp - 1.0).abs() < 0.2 && (ln - 2.0).abs() < 0.2, "{lp} {ln}");
        assert!(fit.wald[0].long_run.p_value < 0.01);
        assert_eq!(crate::ardl::bounds_test(&fit.fit).unwrap().k, 2);
    }

    #[test]
    fn nesting_reproduces_linear_fit() {
        let p = panel(2, 300, 1.5, 1.5);
        let ardl_spec = ArdlSpec::new("y", &["x", "w"], &[]).with_lags(&[2, 1, 1]);
        let spec = NardlSpec {
            ardl: ardl_spec.clone(),
            asymmetric: vec!["x".into()],
        };
        let nfit = fit_nardl(&p, &spec).unwrap();
        let lfit = fit_ardl(&p, &ardl_spec).unwrap();
        // Sum each +/- column pair, dropping the negative member.
        let design = nfit.fit.ols().design();
        let mut cols = Vec::new();
        for (j, t) in nfit.fit.terms.iter().enumerate() {
            let partner = match t {
                Term::LaggedLevel { variable } if variable == "x_pos" => {
                    Some(Term::LaggedLevel { variable: "x_neg".into() })
                }
                Term::Difference { variable, lag } if variable == "x_pos" => Some(Term::Difference {
                    variable: "x_neg".into(),
                    lag: *lag,
                }),
                Term::LaggedLevel { variable } | Term::Difference { variable, .. } if variable == "x_neg" => continue,
                _ => None,
            };
            let mut c = design.column(j).clone_owned();
            if let Some(q) = partner {
                c += design.column(nfit.fit.term_index(&q).unwrap());
            }
            cols.push(c);
        }
        let restricted = Ols::fit(&DMatrix::from_columns(&cols), &(lfit.ols().fitted.clone() + &lfit.ols().residuals)).unwrap();
        for (a, b) in restricted.residuals.iter().zip(lfit.residuals()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn wald_invariant_to_rescaling() {
        let p = panel(3, 300, 1.0, 1.3);
        let x5: Vec<f64> = p.column_vec("x").unwrap().iter().map(|v| 5.0 * v).collect();
        let q = p.with_column("x5", &x5).unwrap();
        let a = fit_nardl(&p, &NardlSpec::all_asymmetric(ArdlSpec::new("y", &["x"], &[]).with_lags(&[1, 2]))).unwrap();
        let b = fit_nardl(&q, &NardlSpec::all_asymmetric(ArdlSpec::new("y", &["x5"], &[]).with_lags(&[1, 2]))).unwrap();
        assert!((a.wald[0].long_run.f_stat - b.wald[0].long_run.f_stat).abs() < 1e-8);
        assert!((a.wald[0].short_run.f_stat - b.wald[0].short_run.f_stat).abs() < 1e-8);
    }

    #[test]
    fn selection_shares_one_lag_per_pair() {
        let p = panel(4, 300, 1.0, 1.0);
        let spec = NardlSpec::all_asymmetric(ArdlSpec::new("y", &["x", "w"], &[]).with_caps(&[2, 2, 1]));
        let s = select_nardl_lags(&p, &spec).unwrap();
        assert_eq!(s.ardl.selected_lags.len(), 3);
        let fit = fit_nardl(&p, &s).unwrap();
        assert_eq!(fit.wald.len(), 2);
        let n = s.ardl.selected_lags[1];
        for lag in 0..=n {
            for v in ["x_pos", "x_neg"] {
                assert!(fit.fit.term_index(&Term::Difference { variable: v.into(), lag }).is_some());
            }
        }
    }

    #[test]
    fn unknown_asymmetric_variable() {
        let p = panel(5, 100, 1.0, 1.0);
        let spec = NardlSpec {
            ardl: ArdlSpec::new("y", &["x"], &[]).with_lags(&[1, 1]),
            asymmetric: vec!["w".into()],
        };
        assert!(fit_nardl(&p, &spec).is_err());
    }
}
