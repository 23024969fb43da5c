//! Dated panels, CSV ingestion, log returns and the descriptive battery
//! (moments, Jarque-Bera, Pearson correlations).

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::error::{Error, Result};

pub const DEFAULT_DATE_FORMAT: &str = "%Y-%m";

/// An aligned multivariate series on a strictly increasing date grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl TimeSeriesPanel {
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() {
            return Err(Error::DimensionMismatch {
                expected: dates.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: values.ncols(),
            });
        }
        if dates.is_empty() {
            return Err(Error::NoRows);
        }
        for (row, w) in dates.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate(w[1]));
            }
            if w[1] < w[0] {
                return Err(Error::NonMonotoneDates { row: row + 1 });
            }
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate column name `{n}`")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("panel contains non-finite values".into()));
        }
        Ok(Self {
            dates,
            names,
            values,
        })
    }

    pub fn from_columns(dates: Vec<NaiveDate>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let t = dates.len();
        let mut values = DMatrix::zeros(t, columns.len());
        let mut names = Vec::with_capacity(columns.len());
        for (j, (name, col)) in columns.into_iter().enumerate() {
            if col.len() != t {
                return Err(Error::DimensionMismatch {
                    expected: t,
                    got: col.len(),
                });
            }
            values.column_mut(j).copy_from_slice(&col);
            names.push(name);
        }
        Self::new(dates, names, values)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn nobs(&self) -> usize {
        self.dates.len()
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<DVectorView<'_, f64>> {
        let j = self.column_index(name)?;
        Ok(self.values.column(j))
    }

    pub fn column_vec(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.column(name)?.iter().copied().collect())
    }

    /// Sub-panel with the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let values = self.values.select_columns(idx.iter());
        Self::new(
            self.dates.clone(),
            names.iter().map(|s| s.to_string()).collect(),
            values,
        )
    }

    /// Rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.nobs() {
            return Err(Error::InvalidArgument(format!(
                "row range {start}..{end} outside 0..{}",
                self.nobs()
            )));
        }
        Self::new(
            self.dates[start..end].to_vec(),
            self.names.clone(),
            self.values.rows(start, end - start).into_owned(),
        )
    }

    /// Inner join on dates; column names must not collide.
    pub fn join(&self, other: &Self) -> Result<Self> {
        let mut rows_a = Vec::new();
        let mut rows_b = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.nobs() && j < other.nobs() {
            match self.dates[i].cmp(&other.dates[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    rows_a.push(i);
                    rows_b.push(j);
                    i += 1;
                    j += 1;
                }
            }
        }
        if rows_a.is_empty() {
            return Err(Error::NoRows);
        }
        let na = self.nvars();
        let mut values = DMatrix::zeros(rows_a.len(), na + other.nvars());
        for (r, (&a, &b)) in rows_a.iter().zip(&rows_b).enumerate() {
            for c in 0..na {
                values[(r, c)] = self.values[(a, c)];
            }
            for c in 0..other.nvars() {
                values[(r, na + c)] = other.values[(b, c)];
            }
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        Self::new(rows_a.iter().map(|&a| self.dates[a]).collect(), names, values)
    }

    /// Append a column.
    pub fn with_column(&self, name: &str, values: &[f64]) -> Result<Self> {
        if values.len() != self.nobs() {
            return Err(Error::DimensionMismatch {
                expected: self.nobs(),
                got: values.len(),
            });
        }
        let mut m = self.values.clone().insert_column(self.nvars(), 0.0);
        m.column_mut(self.nvars()).copy_from_slice(values);
        let mut names = self.names.clone();
        names.push(name.to_string());
        Self::new(self.dates.clone(), names, m)
    }

    /// Elementwise natural log; every value must be strictly positive.
    pub fn ln(&self) -> Result<Self> {
        self.check_positive()?;
        Ok(Self {
            dates: self.dates.clone(),
            names: self.names.clone(),
            values: self.values.map(f64::ln),
        })
    }

    fn check_positive(&self) -> Result<()> {
        for j in 0..self.nvars() {
            for i in 0..self.nobs() {
                let v = self.values[(i, j)];
                if v <= 0.0 {
                    return Err(Error::NonPositive {
                        row: i,
                        column: self.names[j].clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A panel read from disk together with the number of rows discarded.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: TimeSeriesPanel,
    pub dropped_rows: usize,
}

/// Parse a date under a strftime-style format. Formats without a day field
/// (such as the default `%Y-%m`) are anchored to the first of the month.
pub fn parse_date(value: &str, format: &str) -> Result<NaiveDate> {
    let value = value.trim();
    let parsed = if format.contains("%d") || format.contains("%e") || format.contains("%j") {
        NaiveDate::parse_from_str(value, format)
    } else {
        NaiveDate::parse_from_str(&format!("{value}|01"), &format!("{format}|%d"))
    };
    parsed.map_err(|_| Error::DateParse {
        value: value.to_string(),
        format: format.to_string(),
    })
}

/// Load a dated CSV panel. An empty `value_columns` selects every column
/// other than the date column. Rows with a missing or unparseable field are
/// dropped and counted; rows are ordered by date before validation.
pub fn load_panel(
    path: impl AsRef<Path>,
    date_column: &str,
    value_columns: &[&str],
    date_format: &str,
) -> Result<LoadedPanel> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_panel(file, date_column, value_columns, date_format)
}

pub fn read_panel<R: Read>(
    reader: R,
    date_column: &str,
    value_columns: &[&str],
    date_format: &str,
) -> Result<LoadedPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let date_idx = find(date_column)?;
    let names: Vec<String> = if value_columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(_, h)| h.to_string())
            .collect()
    } else {
        value_columns.iter().map(|s| s.to_string()).collect()
    };
    let value_idx = names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record?;
        let date = record
            .get(date_idx)
            .and_then(|s| parse_date(s, date_format).ok());
        let vals: Option<Vec<f64>> = value_idx
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .filter(|s| !s.is_empty())
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
            })
            .collect();
        match (date, vals) {
            (Some(d), Some(v)) => rows.push((d, v)),
            _ => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    rows.sort_by_key(|(d, _)| *d);
    let t = rows.len();
    let mut values = DMatrix::zeros(t, names.len());
    for (i, (_, v)) in rows.iter().enumerate() {
        for (j, x) in v.iter().enumerate() {
            values[(i, j)] = *x;
        }
    }
    let dates = rows.into_iter().map(|(d, _)| d).collect();
    Ok(LoadedPanel {
        panel: TimeSeriesPanel::new(dates, names, values)?,
        dropped_rows: dropped,
    })
}

/// `r_t = ln p_t - ln p_{t-1}`, dated at `t`.
pub fn log_returns(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    if panel.nobs() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: panel.nobs(),
        });
    }
    let logs = panel.ln()?;
    let t = panel.nobs();
    let v = logs.values();
    let diff = DMatrix::from_fn(t - 1, panel.nvars(), |i, j| v[(i + 1, j)] - v[(i, j)]);
    TimeSeriesPanel::new(panel.dates[1..].to_vec(), panel.names.clone(), diff)
}

/// Per-column summary. Standard deviation uses the `T-1` divisor; skewness
/// and kurtosis are the moment ratios `m3/m2^1.5`, `m4/m2^2` (raw kurtosis,
/// 3 under normality), which are also the moments entering Jarque-Bera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub name: String,
    pub nobs: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jarque_bera_stat: f64,
    pub jarque_bera_pvalue: f64,
}

pub fn describe_series(name: &str, x: &[f64]) -> Result<DescriptiveStats> {
    let t = x.len();
    if t < 4 {
        return Err(Error::InsufficientData { needed: 4, got: t });
    }
    let n = t as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if m2 <= f64::EPSILON * f64::EPSILON * n * mean.abs().max(1.0).powi(2) {
        return Err(Error::ZeroVariance(name.to_string()));
    }
    let std_dev = (m2 / (n - 1.0)).sqrt();
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let jb = n / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    Ok(DescriptiveStats {
        name: name.to_string(),
        nobs: t,
        mean,
        std_dev,
        skewness,
        kurtosis,
        jarque_bera_stat: jb,
        jarque_bera_pvalue: dist::chi2_sf(jb, 2.0),
    })
}

pub fn describe(panel: &TimeSeriesPanel) -> Result<Vec<DescriptiveStats>> {
    panel
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = panel.values().column(j).iter().copied().collect();
            describe_series(name, &col)
        })
        .collect()
}

/// Pearson correlations with two-sided p-values from `t = r sqrt((T-2)/(1-r^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub coefficients: DMatrix<f64>,
    pub p_values: DMatrix<f64>,
}

pub fn pearson_correlation(panel: &TimeSeriesPanel) -> Result<CorrelationMatrix> {
    let t = panel.nobs();
    let k = panel.nvars();
    if t < 3 {
        return Err(Error::InsufficientData { needed: 3, got: t });
    }
    let mut centered = panel.values().clone();
    let mut norms = Vec::with_capacity(k);
    for j in 0..k {
        let mean = centered.column(j).mean();
        centered.column_mut(j).add_scalar_mut(-mean);
        let norm = centered.column(j).norm();
        if norm <= f64::EPSILON * (t as f64).sqrt() * mean.abs().max(1.0) {
            return Err(Error::ZeroVariance(panel.names()[j].clone()));
        }
        norms.push(norm);
    }
    for (j, s) in norms.iter().enumerate() {
        centered.column_mut(j).unscale_mut(*s);
    }
    let mut r = centered.transpose() * &centered;
    let df = (t - 2) as f64;
    let mut p = DMatrix::zeros(k, k);
    for i in 0..k {
        r[(i, i)] = 1.0;
        for j in 0..k {
            let rij = r[(i, j)].clamp(-1.0, 1.0);
            r[(i, j)] = rij;
            p[(i, j)] = correlation_p_value(rij, df);
        }
    }
    let r = (&r + r.transpose()) * 0.5;
    Ok(CorrelationMatrix {
        names: panel.names().to_vec(),
        coefficients: r,
        p_values: p,
    })
}

fn correlation_p_value(r: f64, df: f64) -> f64 {
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    dist::t_two_sided(r * (df / denom).sqrt(), df)
}

/// First difference of a vector.
pub fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Consecutive month starts beginning at `start`.
pub fn monthly_dates(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    (0..count)
        .map(|i| {
            start
                .checked_add_months(chrono::Months::new(i as u32))
                .expect("date in range")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(y: i32, m: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, 1).unwrap()
    }

    fn csv_with_rows(rows: usize) -> String {
        let mut s = String::from("date,a,b\n");
        for (i, d) in monthly_dates(ym(2012, 1), rows).iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", d.format("%Y-%m"), 100.0 + i as f64, 50.0 + 0.5 * i as f64));
        }
        s
    }

    #[test]
    fn load_well_formed() {
        let loaded = read_panel(csv_with_rows(144).as_bytes(), "date", &[], DEFAULT_DATE_FORMAT).unwrap();
        assert_eq!(loaded.panel.nobs(), 144);
        assert_eq!(loaded.panel.nvars(), 2);
        assert_eq!(loaded.dropped_rows, 0);
    }

    #[test]
    fn load_drops_incomplete_row() {
        let mut text = csv_with_rows(144);
        text = text.replacen("2013-05,116,58", "2013-05,,58", 1);
        let loaded = read_panel(text.as_bytes(), "date", &["a", "b"], DEFAULT_DATE_FORMAT).unwrap();
        assert_eq!(loaded.panel.nobs(), 143);
        assert_eq!(loaded.dropped_rows, 1);
    }

    #[test]
    fn load_rejects_duplicate_date() {
        let text = "date,a\n2012-01,1\n2012-02,2\n2012-02,3\n";
        let err = read_panel(text.as_bytes(), "date", &[], DEFAULT_DATE_FORMAT).unwrap_err();
        assert!(matches!(err, Error::DuplicateDate(d) if d == ym(2012, 2)));
        assert!(err.to_string().contains("duplicate date"));
    }

    #[test]
    fn load_error_kinds() {
        let err = load_panel("/nonexistent/file.csv", "date", &[], DEFAULT_DATE_FORMAT).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
        let text = "date,a\n2012-01,1\n";
        let err = read_panel(text.as_bytes(), "date", &["zzz"], DEFAULT_DATE_FORMAT).unwrap_err();
        assert!(matches!(err, Error::UnknownColumn(c) if c == "zzz"));
        let text = "date,a\nbad,1\n2012-02,x\n";
        let err = read_panel(text.as_bytes(), "date", &[], DEFAULT_DATE_FORMAT).unwrap_err();
        assert!(matches!(err, Error::NoRows));
    }

    #[test]
    fn unsorted_dates_rejected_by_constructor() {
        let err = TimeSeriesPanel::new(
            vec![ym(2012, 2), ym(2012, 1)],
            vec!["a".into()],
            DMatrix::from_element(2, 1, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonMonotoneDates { row: 1 }));
    }

    #[test]
    fn custom_date_format() {
        let d = parse_date("31/01/2020", "%d/%m/%Y").unwrap();
        assert_eq!(d, NaiveDate::from_ymd_opt(2020, 1, 31).unwrap());
        assert_eq!(parse_date("2020-07", "%Y-%m").unwrap(), ym(2020, 7));
    }

    fn single(values: &[f64]) -> TimeSeriesPanel {
        TimeSeriesPanel::from_columns(
            monthly_dates(ym(2000, 1), values.len()),
            vec![("p".into(), values.to_vec())],
        )
        .unwrap()
    }

    #[test]
    fn log_returns_examples() {
        let e = std::f64::consts::E;
        let r = log_returns(&single(&[1.0, e, e * e])).unwrap();
        assert_eq!(r.nobs(), 2);
        assert!((r.values()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((r.values()[(1, 0)] - 1.0).abs() < 1e-15);

        let r = log_returns(&single(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(r.values().as_slice(), &[0.0, 0.0]);

        let r = log_returns(&single(&[100.0, 105.0, 99.75])).unwrap();
        assert!((r.values()[(0, 0)] - 1.05f64.ln()).abs() < 1e-14);
        assert!((r.values()[(1, 0)] - 0.95f64.ln()).abs() < 1e-14);
        assert_eq!(r.names(), &["p".to_string()]);
    }

    #[test]
    fn log_returns_reject_non_positive() {
        let err = log_returns(&single(&[1.0, 0.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::NonPositive { row: 1, ref column, .. } if column == "p"));
    }

    #[test]
    fn describe_two_point_sample() {
        let s = describe_series("x", &[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(s.skewness.abs() < 1e-15);
        assert!((s.kurtosis - 1.0).abs() < 1e-15);
        assert!((s.jarque_bera_stat - 4.0 / 6.0).abs() < 1e-15);
        assert!((s.std_dev - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn describe_rejects_constant() {
        assert!(matches!(
            describe_series("c", &[2.0; 10]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            describe_series("c", &[1.0, 2.0, 3.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn correlation_identity_and_antisymmetry() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let p = TimeSeriesPanel::from_columns(
            monthly_dates(ym(2000, 1), 20),
            vec![("x".into(), x.clone()), ("y".into(), neg), ("z".into(), x)],
        )
        .unwrap();
        let c = pearson_correlation(&p).unwrap();
        assert!((c.coefficients[(0, 1)] + 1.0).abs() < 1e-12);
        assert!((c.coefficients[(0, 2)] - 1.0).abs() < 1e-12);
        assert_eq!(c.coefficients[(1, 1)], 1.0);
        assert_eq!(c.p_values[(0, 2)], 0.0);
    }

    #[test]
    fn join_intersects_dates() {
        let a = single(&[1.0, 2.0, 3.0]);
        let b = TimeSeriesPanel::from_columns(
            monthly_dates(ym(2000, 2), 3),
            vec![("q".into(), vec![10.0, 20.0, 30.0])],
        )
        .unwrap();
        let j = a.join(&b).unwrap();
        assert_eq!(j.nobs(), 2);
        assert_eq!(j.values()[(0, 0)], 2.0);
        assert_eq!(j.values()[(0, 1)], 10.0);
    }
}
