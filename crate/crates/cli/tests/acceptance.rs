//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qspill::ardl::{bounds_test, fit_ardl, ArdlSpec, BoundsDecision, Term};
use qspill::connectedness::{fit_qvar_values, gfevd, spillover_indices, static_spillovers, var_design, QvarModel};
use qspill::demo::{self, Innovation};
use qspill::diagnostics::{breusch_godfrey, breusch_pagan, cusum, ramsey_reset};
use qspill::linalg::Ols;
use qspill::nardl::{fit_nardl, partial_sums, NardlSpec};
use qspill::quantile::qr_fit;
use qspill::rolling::{rolling_spillovers, RollingConfig};
use qspill::timeseries::{load_panel, log_returns, monthly_dates};
use qspill::unit_root::{adf_test, default_max_lags, kpss_test, pp_test, Deterministic};
use qspill::TimeSeriesPanel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

/// Random VAR with spectral radius below 0.95 and a well-conditioned
/// positive definite shock covariance.
fn random_model(rng: &mut ChaCha8Rng, n: usize, p: usize) -> QvarModel {
    let mut coefs: Vec<DMatrix<f64>> = (0..p)
        .map(|_| DMatrix::from_fn(n, n, |_, _| normal(rng) * 0.6 / (n * p) as f64))
        .collect();
    loop {
        let m = QvarModel::from_parts(0.5, names(n), DVector::zeros(n), coefs.clone(), DMatrix::identity(n, n))
            .expect("valid parts");
        if m.spectral_radius < 0.95 {
            break;
        }
        for b in &mut coefs {
            *b *= 0.8;
        }
    }
    let a = DMatrix::from_fn(n, n, |_, _| normal(rng));
    let sigma = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    QvarModel::from_parts(0.5, names(n), DVector::zeros(n), coefs, sigma).expect("valid parts")
}

fn c1_fevd_normalization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_sum: f64 = 0.0;
    let mut min_entry = f64::INFINITY;
    let mut count = 0;
    for i in 0..1000 {
        let n = [2, 3, 5][i % 3];
        let p = [1, 2][(i / 3) % 2];
        let h = [1, 12][(i / 6) % 2];
        let model = random_model(&mut rng, n, p);
        let f = gfevd(&model, h).expect("gfevd");
        for r in 0..n {
            worst_sum = worst_sum.max((f.normalized.row(r).sum() - 100.0).abs());
        }
        min_entry = min_entry.min(f.normalized.min());
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_sum <= 1e-8 && min_entry >= 0.0 && secs < 30.0,
        format!("{count} models, max |row sum - 100| = {worst_sum:.2e}, min entry = {min_entry:.3e}, {secs:.2}s (< 30s)"),
    )
}

/// Term-by-term generalized FEVD from scratch on nested `Vec`s.
fn brute_force_gfevd(b: &[Vec<Vec<f64>>], s: &[Vec<f64>], h: usize) -> Vec<Vec<f64>> {
    let n = s.len();
    let p = b.len();
    let zero = vec![vec![0.0; n]; n];
    let mut psi: Vec<Vec<Vec<f64>>> = Vec::new();
    for step in 0..h {
        let mut m = zero.clone();
        if step == 0 {
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = 1.0;
            }
        } else {
            for lag in 1..=p.min(step) {
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            m[i][j] += b[lag - 1][i][l] * psi[step - lag][l][j];
                        }
                    }
                }
            }
        }
        psi.push(m);
    }
    let mut theta = zero;
    for i in 0..n {
        let mut denom = 0.0;
        for ps in &psi {
            for a in 0..n {
                for c in 0..n {
                    denom += ps[i][a] * s[a][c] * ps[i][c];
                }
            }
        }
        for j in 0..n {
            let mut num = 0.0;
            for ps in &psi {
                let mut e = 0.0;
                for a in 0..n {
                    e += ps[i][a] * s[a][j];
                }
                num += e * e;
            }
            theta[i][j] = num / (s[j][j] * denom);
        }
    }
    theta
}

fn to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn c2_gfevd_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = 2 + i % 2;
        let p = 1 + (i / 2) % 2;
        let h = 1 + (i * 7) % 12;
        let model = random_model(&mut rng, n, p);
        let f = gfevd(&model, h).expect("gfevd");
        let b: Vec<Vec<Vec<f64>>> = model.coefficients.iter().map(to_nested).collect();
        let oracle = brute_force_gfevd(&b, &to_nested(&model.sigma), h);
        for r in 0..n {
            for c in 0..n {
                let scale = oracle[r][c].abs().max(1.0);
                worst = worst.max((f.raw[(r, c)] - oracle[r][c]).abs() / scale);
            }
        }
    }
    check(worst <= 1e-10, format!("100 models, max deviation {worst:.2e} (<= 1e-10)"))
}

fn c3_decoupled_zero() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 2 + rng.random_range(0..4);
        let b = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(-0.9..0.9)));
        let s = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.1..5.0)));
        let m = QvarModel::from_parts(0.5, names(n), DVector::zeros(n), vec![b], s).expect("parts");
        let t = spillover_indices(&gfevd(&m, 12).expect("gfevd"));
        worst = worst.max(t.tsi.abs());
        for v in &t.net {
            worst = worst.max(v.abs());
        }
    }
    check(worst <= 1e-8, format!("50 diagonal systems, max |TSI|, |net| = {worst:.2e} (<= 1e-8)"))
}

fn c4_quantile_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut medians_ok = true;
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = 5 + rng.random_range(0..60);
        let k = 1 + i % 3;
        let x = DMatrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
        let y = DVector::from_fn(n, |_, _| normal(&mut rng) * 2.0 + 1.0);
        let tau = rng.random_range(0.05..0.95);
        let fit = qr_fit(&x, &y, tau).expect("qr fit");
        let b = DVector::from_column_slice(&fit.coefficients);
        let resid: Vec<f64> = (&y - &x * &b).iter().copied().collect();
        let loss: f64 = resid.iter().map(|u| u * (tau - f64::from(u8::from(*u < 0.0)))).sum();
        worst = worst.max((loss - fit.objective).abs() / loss.max(1.0));

        let ones = DMatrix::from_element(n, 1, 1.0);
        let med = qr_fit(&ones, &y, 0.5).expect("median fit").coefficients[0];
        let mut sorted: Vec<f64> = y.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[(n - 1) / 2], sorted[n / 2]);
        let member = y.iter().any(|v| *v == med);
        medians_ok &= member && med >= lo && med <= hi;
    }
    check(
        medians_ok && worst <= 1e-8,
        format!("1000 problems, median membership {medians_ok}, max objective gap {worst:.2e} (<= 1e-8)"),
    )
}

fn c5_qvar_consistency() -> Outcome {
    let start = Instant::now();
    let b = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.2, 0.3, 0.1, 0.0, 0.2, 0.4]);
    let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.3, 1.0, 0.4, 0.2, 0.4, 1.0]);
    let mut within = 0;
    let mut gaps = Vec::new();
    for seed in 0..100 {
        let values = demo::simulate_var(std::slice::from_ref(&b), &s, 5000, Innovation::Gaussian, 500 + seed);
        let model = fit_qvar_values(&values, &names(3), 0.5, 1).expect("qvar");
        let (x, y) = var_design(&values, 1);
        let mut gap: f64 = 0.0;
        for eq in 0..3 {
            let ols = Ols::fit(&x, &y.column(eq).into_owned()).expect("ols");
            for j in 0..3 {
                gap = gap.max((ols.coefficients[1 + j] - model.coefficients[0][(eq, j)]).abs());
            }
        }
        if gap <= 0.05 {
            within += 1;
        }
        gaps.push(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    check(
        within >= 95 && secs < 120.0,
        format!("{within}/100 seeds with max gap <= 0.05 (need >= 95), worst {worst:.3}, {secs:.1}s (< 120s)"),
    )
}

fn factor_panel(seed: u64, t: usize) -> DMatrix<f64> {
    let b = DMatrix::from_row_slice(3, 3, &[0.2, 0.05, 0.0, 0.05, 0.2, 0.05, 0.0, 0.05, 0.2]);
    demo::simulate_factor_var(&[b], &[1.0, 1.0, 1.0], 1.0, t, Innovation::StudentT(3.0), seed)
}

fn tsi(values: &DMatrix<f64>, tau: f64) -> Option<f64> {
    let m = fit_qvar_values(values, &names(values.ncols()), tau, 1).ok()?;
    Some(spillover_indices(&gfevd(&m, 12).ok()?).tsi)
}

fn c6_u_shape() -> Outcome {
    let mut hits = 0;
    for seed in 0..200 {
        let v = factor_panel(10_000 + seed, 144);
        if let (Some(lo), Some(mid), Some(hi)) = (tsi(&v, 0.05), tsi(&v, 0.5), tsi(&v, 0.95)) {
            if lo > mid && hi > mid {
                hits += 1;
            }
        }
    }
    check(hits >= 180, format!("U-shape in {hits}/200 seeds (need >= 180)"))
}

fn c7_partial_sums() -> Outcome {
    let hand = partial_sums(&[0.0, 1.0, -1.0, 2.0]).expect("partial sums");
    let hand_ok = hand.positive == [1.0, 1.0, 4.0] && hand.negative == [0.0, -2.0, -2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut exact = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..300);
        // values on a binary grid, so every float operation is error free
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-1_000_000..1_000_000)) / 4096.0).collect();
        let p = partial_sums(&x).expect("partial sums");
        if (0..n - 1).all(|t| p.positive[t] + p.negative[t] == x[t + 1] - x[0]) {
            exact += 1;
        }
    }
    check(hand_ok && exact == 1000, format!("hand case {hand_ok}, exact identity on {exact}/1000 series"))
}

fn panel_from(cols: Vec<(&str, Vec<f64>)>) -> TimeSeriesPanel {
    let n = cols[0].1.len();
    let dates = monthly_dates(chrono_start(), n);
    TimeSeriesPanel::from_columns(dates, cols.into_iter().map(|(a, b)| (a.to_string(), b)).collect())
        .expect("panel")
}

fn chrono_start() -> chrono::NaiveDate {
    chrono::NaiveDate::from_ymd_opt(1980, 1, 1).expect("date")
}

fn walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            acc += normal(rng);
            acc
        })
        .collect()
}

fn cointegrated_panel(rng: &mut ChaCha8Rng, n: usize, k: usize) -> TimeSeriesPanel {
    let xs: Vec<Vec<f64>> = (0..k).map(|_| walk(rng, n)).collect();
    let mut u = 0.0;
    let y: Vec<f64> = (0..n)
        .map(|t| {
            u = 0.5 * u + normal(rng);
            xs.iter().enumerate().map(|(j, x)| (1.0 + j as f64 * 0.5) * x[t]).sum::<f64>() + u
        })
        .collect();
    let dummy: Vec<f64> = (0..n).map(|t| f64::from(u8::from((n / 2..n / 2 + 12).contains(&t)))).collect();
    let mut cols = vec![("y", y), ("d", dummy)];
    let labels = ["x1", "x2", "x3", "x4"];
    for (j, x) in xs.into_iter().enumerate() {
        cols.push((labels[j], x));
    }
    panel_from(cols)
}

fn c8_ect_reparameterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut resid_gap: f64 = 0.0;
    let mut lr_gap: f64 = 0.0;
    for i in 0..50 {
        let p = cointegrated_panel(&mut rng, 200, 2);
        let spec = ArdlSpec::new("y", &["x1", "x2"], &["d"]).with_lags(&[1 + i % 3, i % 2, (i / 2) % 3]);
        let fit = fit_ardl(&p, &spec).expect("ardl");
        for (a, b) in fit.residuals().iter().zip(&fit.ect_residuals) {
            resid_gap = resid_gap.max((a - b).abs());
        }
        let a1 = fit.coefficient(&Term::LaggedLevel { variable: "y".into() }).expect("a1").estimate;
        for lr in &fit.long_run {
            let ak = fit.coefficient(&lr.term).expect("level term").estimate;
            lr_gap = lr_gap.max((lr.estimate + ak / a1).abs());
        }
    }
    check(
        resid_gap <= 1e-8 && lr_gap <= 1e-10,
        format!("50 fits, max residual gap {resid_gap:.2e} (<= 1e-8), max long-run gap {lr_gap:.2e} (<= 1e-10)"),
    )
}

fn c9_bounds_calibration() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let regs = ["x1", "x2", "x3", "x4"];
    let spec = ArdlSpec::new("y", &regs, &[]).with_lags(&[1, 0, 0, 0, 0]);
    let reps = 1000;
    let mut size_hits = 0;
    let mut power_hits = 0;
    for _ in 0..reps {
        let cols: Vec<(&str, Vec<f64>)> = ["y", "x1", "x2", "x3", "x4"].into_iter().map(|c| (c, walk(&mut rng, 500))).collect();
        let bt = bounds_test(&fit_ardl(&panel_from(cols), &spec).expect("ardl")).expect("bounds");
        if bt.band(0.05).expect("5% band").decision == BoundsDecision::Cointegrated {
            size_hits += 1;
        }
        let bt = bounds_test(&fit_ardl(&cointegrated_panel(&mut rng, 500, 4), &spec).expect("ardl")).expect("bounds");
        if bt.band(0.05).expect("5% band").decision == BoundsDecision::Cointegrated {
            power_hits += 1;
        }
    }
    let size = size_hits as f64 / reps as f64;
    let power = power_hits as f64 / reps as f64;
    let secs = start.elapsed().as_secs_f64();
    check(
        (0.025..=0.075).contains(&size) && power >= 0.9 && secs < 300.0,
        format!("size {:.1}% (5 +/- 2.5), power {:.1}% (>= 90), {secs:.1}s (< 300s)", 100.0 * size, 100.0 * power),
    )
}

fn c10_wald_asymmetry_size() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let spec = NardlSpec::all_asymmetric(ArdlSpec::new("y", &["x"], &[]).with_lags(&[1, 0]));
    let reps = 1000;
    let mut hits = 0;
    for _ in 0..reps {
        let x = walk(&mut rng, 500);
        let mut u = 0.0;
        let y: Vec<f64> = x
            .iter()
            .map(|xi| {
                u = 0.5 * u + normal(&mut rng);
                xi + u
            })
            .collect();
        let fit = fit_nardl(&panel_from(vec![("y", y), ("x", x)]), &spec).expect("nardl");
        if fit.wald[0].long_run.p_value < 0.05 {
            hits += 1;
        }
    }
    let rate = hits as f64 / reps as f64;
    check((0.03..=0.07).contains(&rate), format!("long-run rejection {:.1}% (5 +/- 2)", 100.0 * rate))
}

fn rate(hits: usize, reps: usize) -> f64 {
    hits as f64 / reps as f64
}

fn c11_diagnostics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let reps = 1000;
    let mut c = [0usize; 8];
    for _ in 0..reps {
        // BG size, T = 500: iid errors
        let n = 500;
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)] + normal(&mut rng));
        let f = Ols::fit(&x, &y).expect("ols");
        c[0] += usize::from(breusch_godfrey(f.residuals.as_slice(), &x, 1).expect("bg").p_value < 0.05);

        let n = 200;
        // BG power: AR(1) errors, phi = 0.5
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
        let mut u = 0.0;
        let y = DVector::from_fn(n, |i, _| {
            u = 0.5 * u + normal(&mut rng);
            1.0 + x[(i, 1)] + u
        });
        let f = Ols::fit(&x, &y).expect("ols");
        c[1] += usize::from(breusch_godfrey(f.residuals.as_slice(), &x, 1).expect("bg").p_value < 0.05);

        // BP: positive regressor, homoskedastic vs variance proportional to x^2
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { 1.0 + 3.0 * rng.random::<f64>() });
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)] + normal(&mut rng));
        let f = Ols::fit(&x, &y).expect("ols");
        c[2] += usize::from(breusch_pagan(f.residuals.as_slice(), &x).expect("bp").p_value < 0.05);
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)] + x[(i, 1)] * normal(&mut rng));
        let f = Ols::fit(&x, &y).expect("ols");
        c[3] += usize::from(breusch_pagan(f.residuals.as_slice(), &x).expect("bp").p_value < 0.05);

        // RESET: linear vs omitted quadratic
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)] + normal(&mut rng));
        let f = Ols::fit(&x, &y).expect("ols");
        c[4] += usize::from(ramsey_reset(&f, &[2, 3]).expect("reset").p_value < 0.05);
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)] + 0.5 * x[(i, 1)].powi(2) + normal(&mut rng));
        let f = Ols::fit(&x, &y).expect("ols");
        c[5] += usize::from(ramsey_reset(&f, &[2, 3]).expect("reset").p_value < 0.05);

        // CUSUM: stable vs intercept shift of one error s.d. at mid-sample
        let y = DVector::from_fn(n, |i, _| 1.0 + x[(i, 1)] + normal(&mut rng));
        c[6] += usize::from(cusum(&x, &y).expect("cusum").crossed_5pct);
        let y = DVector::from_fn(n, |i, _| 1.0 + f64::from(u8::from(i >= n / 2)) + x[(i, 1)] + normal(&mut rng));
        c[7] += usize::from(cusum(&x, &y).expect("cusum").crossed_5pct);
    }
    let r: Vec<f64> = c.iter().map(|h| rate(*h, reps)).collect();
    let size2 = |v: f64| (0.03..=0.07).contains(&v);
    let pass = size2(r[0])
        && r[1] >= 0.9
        && size2(r[2])
        && r[3] >= 0.9
        && size2(r[4])
        && r[5] >= 0.9
        && (0.02..=0.08).contains(&r[6])
        && r[7] >= 0.7;
    check(
        pass,
        format!(
            "BG size {:.1}% power {:.1}%; BP size {:.1}% power {:.1}%; RESET size {:.1}% power {:.1}%; CUSUM size {:.1}% power {:.1}%",
            100.0 * r[0],
            100.0 * r[1],
            100.0 * r[2],
            100.0 * r[3],
            100.0 * r[4],
            100.0 * r[5],
            100.0 * r[6],
            100.0 * r[7]
        ),
    )
}

fn c12_unit_root_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let reps = 500;
    let n = 200;
    let spec = Deterministic::Intercept;
    let mut c = [0usize; 6];
    for _ in 0..reps {
        let rw = walk(&mut rng, n);
        let iid: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let lags = default_max_lags(n);
        c[0] += usize::from(adf_test(&rw, spec, lags).expect("adf").rejects_at(0.05));
        c[1] += usize::from(adf_test(&iid, spec, lags).expect("adf").rejects_at(0.05));
        c[2] += usize::from(pp_test(&rw, spec).expect("pp").rejects_at(0.05));
        c[3] += usize::from(pp_test(&iid, spec).expect("pp").rejects_at(0.05));
        c[4] += usize::from(kpss_test(&rw, spec).expect("kpss").rejects_at(0.05));
        c[5] += usize::from(kpss_test(&iid, spec).expect("kpss").rejects_at(0.05));
    }
    let r: Vec<f64> = c.iter().map(|h| rate(*h, reps)).collect();
    let pass = r[0] <= 0.10 && r[1] >= 0.9 && r[2] <= 0.10 && r[3] >= 0.9 && r[4] >= 0.9 && r[5] <= 0.10;
    check(
        pass,
        format!(
            "rejections at 5%: ADF rw {:.1}% iid {:.1}%; PP rw {:.1}% iid {:.1}%; KPSS rw {:.1}% iid {:.1}%",
            100.0 * r[0],
            100.0 * r[1],
            100.0 * r[2],
            100.0 * r[3],
            100.0 * r[4],
            100.0 * r[5]
        ),
    )
}

fn c13_performance() -> Outcome {
    let prices = demo::demo_prices(demo::DEMO_SEED).expect("demo");
    let returns = log_returns(&prices).expect("returns");
    let config = RollingConfig {
        window: 36,
        horizon: 12,
        taus: vec![0.05, 0.5, 0.95],
        lags: 1,
    };
    let start = Instant::now();
    let series = rolling_spillovers(&returns, &config).expect("rolling");
    let rolling_secs = start.elapsed().as_secs_f64();
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let pipeline = qspill_cli::pipeline::run_demo_pipeline(dir.path());
    let pipeline_secs = start.elapsed().as_secs_f64();
    let ok = pipeline.is_ok();
    check(
        rolling_secs < 5.0 && ok && pipeline_secs < 30.0,
        format!(
            "rolling {} windows x 3 taus in {rolling_secs:.2}s (< 5s); full pipeline {} in {pipeline_secs:.2}s (< 30s)",
            series.dates.len(),
            if ok { "ok" } else { "FAILED" }
        ),
    )
}

fn c14_reproduction() -> Outcome {
    let Some(path) = std::env::var_os("QSPILL_REPRO_PANEL") else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "QSPILL_REPRO_PANEL not set".into(),
        };
    };
    let path = Path::new(&path);
    if !path.exists() {
        return Outcome {
            verdict: Verdict::Skip,
            detail: format!("{} not found", path.display()),
        };
    }
    let columns = std::env::var("QSPILL_REPRO_COLUMNS").unwrap_or_else(|_| "food,clean,fossil".into());
    let cols: Vec<&str> = columns.split(',').map(str::trim).collect();
    let date_col = std::env::var("QSPILL_REPRO_DATE_COLUMN").unwrap_or_else(|_| "date".into());
    let fmt = std::env::var("QSPILL_REPRO_DATE_FORMAT").unwrap_or_else(|_| "%Y-%m".into());
    let loaded = match load_panel(path, &date_col, &cols, &fmt) {
        Ok(l) => l,
        Err(e) => return check(false, format!("cannot load panel: {e}")),
    };
    let returns = match log_returns(&loaded.panel) {
        Ok(r) => r,
        Err(e) => return check(false, format!("cannot form returns: {e}")),
    };
    let targets = [(0.05, 61.47), (0.5, 23.02), (0.95, 57.91)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (tau, target) in targets {
        match static_spillovers(&returns, tau, 1, 12) {
            Ok(t) => {
                pass &= (t.tsi - target).abs() <= 1.5;
                parts.push(format!("tau {tau}: {:.2} vs {target}", t.tsi));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("tau {tau}: {e}"));
            }
        }
    }
    check(pass, format!("{} (+/- 1.5 pp)", parts.join("; ")))
}

fn main() {
    // `cargo test` forwards harness flags; `--list` must not run the suite.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(u32, &str, fn() -> Outcome); 14] = [
        (1, "FEVD normalization", c1_fevd_normalization),
        (2, "GFEVD oracle equivalence", c2_gfevd_oracle),
        (3, "decoupled-system zero", c3_decoupled_zero),
        (4, "quantile-regression exactness", c4_quantile_exactness),
        (5, "QVAR consistency", c5_qvar_consistency),
        (6, "U-shape reproduction", c6_u_shape),
        (7, "partial-sum identity", c7_partial_sums),
        (8, "ARDL/ECT reparameterization", c8_ect_reparameterization),
        (9, "bounds-test calibration", c9_bounds_calibration),
        (10, "Wald asymmetry size", c10_wald_asymmetry_size),
        (11, "diagnostics size/power", c11_diagnostics),
        (12, "unit-root calibration", c12_unit_root_calibration),
        (13, "performance", c13_performance),
        (14, "reproduction harness", c14_reproduction),
    ];
    let filter: Option<u32> = std::env::var("QSPILL_ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (id, name, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let tag = match out.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("{tag} [{id:>2}] {name}: {} ({:.1}s)", out.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
