//! Price ingestion, return construction and series persistence.
//!
//! Prices come in as CSV with a header naming `date` and `close` columns.
//! Every series type is stored as a tab-separated [`AnalysisTable`] whose
//! `kind` metadata entry names the type.

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorKind, ReturnSeries, VolSeries};
use crate::model::{ModelKind, ModelSpec};
use crate::sim::{InitialState, SimConfig, SimPath};
use crate::table::{fmt_f64, parse_f64_field, AnalysisTable, NA};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Daily closing prices in strictly increasing date order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub close: Vec<f64>,
    pub label: String,
}

impl PriceSeries {
    pub fn new(mut records: Vec<(NaiveDate, f64)>, label: impl Into<String>) -> Result<Self> {
        records.sort_by_key(|r| r.0);
        if let Some(w) = records.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!("duplicate date {}", w[0].0)));
        }
        if let Some((d, p)) = records.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Validation(format!("price on {d} must be positive, got {p}")));
        }
        let (dates, close) = records.into_iter().unzip();
        Ok(Self {
            dates,
            close,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }
}

/// Reads a CSV price file. Columns are matched by name, case-insensitively;
/// other columns are ignored. Rows are numbered as in the file, header = 1.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema(format!("{}: no `{name}` column in header", path.display())))
    };
    let (date_col, close_col) = (column("date")?, column("close")?);

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(row, e.to_string()))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| parse_err(row, "missing field".into()));
        let date_text = field(date_col)?;
        let date = NaiveDate::parse_from_str(date_text, DATE_FORMAT)
            .map_err(|e| parse_err(row, format!("bad date `{date_text}`: {e}")))?;
        let close_text = field(close_col)?;
        let close: f64 = close_text
            .parse()
            .map_err(|_| parse_err(row, format!("bad price `{close_text}`")))?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::Validation(format!(
                "{}: row {row}: price must be positive, got {close_text}",
                path.display()
            )));
        }
        records.push((date, close));
    }
    let label = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    PriceSeries::new(records, label)
}

/// Zero-mean log-returns. Return `t` spans `dates[t]..dates[t+1]` and carries
/// the later date. Calendar gaps count as one trading day.
pub fn to_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: prices.len(),
        });
    }
    let raw = prices.close.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let dates = prices.dates[1..]
        .iter()
        .map(|d| d.format(DATE_FORMAT).to_string())
        .collect();
    ReturnSeries::zero_mean(raw, prices.label.clone()).with_dates(dates)
}

/// Conversion between a series type and its on-disk table.
pub trait TableSeries: Sized {
    const KIND: &'static str;

    fn to_table(&self) -> AnalysisTable;

    fn from_table(table: &AnalysisTable) -> Result<Self>;
}

pub fn save_series<T: TableSeries>(series: &T, path: impl AsRef<Path>) -> Result<()> {
    series.to_table().save(path)
}

pub fn load_series<T: TableSeries>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    T::from_table(&AnalysisTable::load(path)?).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn check_kind(table: &AnalysisTable, kind: &str) -> Result<()> {
    match table.meta("kind") {
        Some(k) if k == kind => Ok(()),
        Some(k) => Err(Error::Schema(format!("expected a `{kind}` table, found `{k}`"))),
        None => Err(Error::Schema(format!("missing `kind` metadata (expected `{kind}`)"))),
    }
}

fn required_meta<'a>(table: &'a AnalysisTable, key: &str) -> Result<&'a str> {
    table
        .meta(key)
        .ok_or_else(|| Error::Schema(format!("missing `{key}` metadata")))
}

fn meta_f64(table: &AnalysisTable, key: &str) -> Result<f64> {
    let v = required_meta(table, key)?;
    v.parse()
        .map_err(|_| Error::Schema(format!("metadata `{key}` is not a number: `{v}`")))
}

fn meta_parse<T: std::str::FromStr>(table: &AnalysisTable, key: &str) -> Result<T> {
    let v = required_meta(table, key)?;
    v.parse()
        .map_err(|_| Error::Schema(format!("metadata `{key}` has an invalid value: `{v}`")))
}

fn write_spec(table: &mut AnalysisTable, spec: Option<&ModelSpec>) {
    match spec {
        Some(s) => {
            table.set_meta("model", s.kind);
            table.set_meta("k", fmt_f64(s.k()));
            table.set_meta("alpha", fmt_f64(s.alpha()));
            table.set_meta("m", fmt_f64(s.m()));
        }
        None => table.set_meta("model", "none"),
    }
}

fn read_spec(table: &AnalysisTable) -> Result<Option<ModelSpec>> {
    let model = required_meta(table, "model")?;
    if model == "none" {
        return Ok(None);
    }
    let kind: ModelKind = model
        .parse()
        .map_err(|_| Error::Schema(format!("unknown model `{model}`")))?;
    ModelSpec::new(
        kind,
        meta_f64(table, "k")?,
        meta_f64(table, "alpha")?,
        meta_f64(table, "m")?,
    )
    .map(Some)
}

impl TableSeries for PriceSeries {
    const KIND: &'static str = "prices";

    fn to_table(&self) -> AnalysisTable {
        let mut t = AnalysisTable::new("load-prices", &["date", "close"])
            .with_meta("kind", Self::KIND)
            .with_meta("label", &self.label);
        for (d, p) in self.dates.iter().zip(&self.close) {
            t.push_row(vec![d.format(DATE_FORMAT).to_string(), fmt_f64(*p)]);
        }
        t
    }

    fn from_table(table: &AnalysisTable) -> Result<Self> {
        check_kind(table, Self::KIND)?;
        table.expect_columns(&["date", "close"])?;
        let records = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let date = NaiveDate::parse_from_str(&r[0], DATE_FORMAT)
                    .map_err(|_| Error::Schema(format!("row {}: bad date `{}`", i + 1, r[0])))?;
                Ok((date, parse_f64_field(&r[1], i + 1, "close")?))
            })
            .collect::<Result<_>>()?;
        PriceSeries::new(records, table.meta("label").unwrap_or_default())
    }
}

fn index_columns<'a>(dated: bool, rest: &[&'a str]) -> Vec<&'a str> {
    let mut cols = vec!["index"];
    if dated {
        cols.push("date");
    }
    cols.extend_from_slice(rest);
    cols
}

fn check_index(value: &str, expected: usize) -> Result<()> {
    if value.parse::<usize>().ok() == Some(expected) {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "row {}: expected index {expected}, found `{value}`",
            expected + 1
        )))
    }
}

impl TableSeries for ReturnSeries {
    const KIND: &'static str = "returns";

    fn to_table(&self) -> AnalysisTable {
        let cols = index_columns(self.dates.is_some(), &["dx"]);
        let mut t = AnalysisTable::new("to-returns", &cols)
            .with_meta("kind", Self::KIND)
            .with_meta("label", &self.label)
            .with_meta("len", self.len());
        for (i, v) in self.dx.iter().enumerate() {
            let mut row = vec![i.to_string()];
            if let Some(d) = &self.dates {
                row.push(d[i].clone());
            }
            row.push(fmt_f64(*v));
            t.push_row(row);
        }
        t
    }

    fn from_table(table: &AnalysisTable) -> Result<Self> {
        check_kind(table, Self::KIND)?;
        let dated = table.column_index("date").is_some();
        table.expect_columns(&index_columns(dated, &["dx"]))?;
        let mut dx = Vec::with_capacity(table.rows.len());
        let mut dates = Vec::new();
        for (i, r) in table.rows.iter().enumerate() {
            check_index(&r[0], i)?;
            if dated {
                dates.push(r[1].clone());
            }
            dx.push(parse_f64_field(r.last().unwrap(), i + 1, "dx")?);
        }
        let series = ReturnSeries::new(dx, table.meta("label").unwrap_or_default())?;
        if dated {
            series.with_dates(dates)
        } else {
            Ok(series)
        }
    }
}

impl TableSeries for VolSeries {
    const KIND: &'static str = "vol";

    fn to_table(&self) -> AnalysisTable {
        let cols = index_columns(self.dates.is_some(), &["sigma", "estimator"]);
        let mut t = AnalysisTable::new("estimate", &cols)
            .with_meta("kind", Self::KIND)
            .with_meta("estimator", self.estimator)
            .with_meta("start", self.start)
            .with_meta("len", self.len());
        write_spec(&mut t, self.spec.as_ref());
        for i in 0..self.len() {
            let mut row = vec![i.to_string()];
            if let Some(d) = &self.dates {
                row.push(d[i].clone());
            }
            row.push(self.get(i).map_or_else(|| NA.to_string(), fmt_f64));
            row.push(self.estimator.to_string());
            t.push_row(row);
        }
        t
    }

    fn from_table(table: &AnalysisTable) -> Result<Self> {
        check_kind(table, Self::KIND)?;
        let dated = table.column_index("date").is_some();
        table.expect_columns(&index_columns(dated, &["sigma", "estimator"]))?;
        let estimator: EstimatorKind = meta_parse(table, "estimator")?;
        let spec = read_spec(table)?;
        let sigma_col = if dated { 2 } else { 1 };
        let mut start = 0;
        let mut values = Vec::new();
        let mut dates = Vec::new();
        for (i, r) in table.rows.iter().enumerate() {
            check_index(&r[0], i)?;
            if dated {
                dates.push(r[1].clone());
            }
            if r[sigma_col + 1] != estimator.name() {
                return Err(Error::Schema(format!(
                    "row {}: estimator `{}` differs from metadata `{estimator}`",
                    i + 1,
                    r[sigma_col + 1]
                )));
            }
            if r[sigma_col] == NA {
                if !values.is_empty() {
                    return Err(Error::Schema(format!("row {}: gap after the first estimate", i + 1)));
                }
                start += 1;
            } else {
                values.push(parse_f64_field(&r[sigma_col], i + 1, "sigma")?);
            }
        }
        let mut vol = VolSeries::new(estimator, spec, start, values)?;
        if dated {
            vol.dates = Some(dates);
        }
        Ok(vol)
    }
}

impl TableSeries for SimPath {
    const KIND: &'static str = "simpath";

    fn to_table(&self) -> AnalysisTable {
        let c = &self.config;
        let mut t = AnalysisTable::new("simulate", &["step", "x", "y", "sigma"]).with_meta("kind", Self::KIND);
        write_spec(&mut t, Some(&c.spec));
        t.set_meta("steps", c.n_steps);
        t.set_meta("dt", fmt_f64(c.dt));
        t.set_meta("seed", c.seed);
        t.set_meta(
            "y0",
            match c.y0 {
                InitialState::Stationary => "stationary".to_string(),
                InitialState::Value(v) => fmt_f64(v),
            },
        );
        for i in 0..self.len() {
            t.push_row(vec![
                i.to_string(),
                fmt_f64(self.x[i]),
                fmt_f64(self.y[i]),
                fmt_f64(self.sigma[i]),
            ]);
        }
        t
    }

    fn from_table(table: &AnalysisTable) -> Result<Self> {
        check_kind(table, Self::KIND)?;
        table.expect_columns(&["step", "x", "y", "sigma"])?;
        let spec = read_spec(table)?.ok_or_else(|| Error::Schema("simulated path without a model".into()))?;
        let y0 = match required_meta(table, "y0")? {
            "stationary" => InitialState::Stationary,
            _ => InitialState::Value(meta_f64(table, "y0")?),
        };
        let config = SimConfig {
            spec,
            n_steps: meta_parse(table, "steps")?,
            dt: meta_f64(table, "dt")?,
            seed: meta_parse(table, "seed")?,
            y0,
        };
        let n = table.rows.len();
        let (mut x, mut y, mut sigma) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (i, r) in table.rows.iter().enumerate() {
            check_index(&r[0], i)?;
            x.push(parse_f64_field(&r[1], i + 1, "x")?);
            y.push(parse_f64_field(&r[2], i + 1, "y")?);
            sigma.push(parse_f64_field(&r[3], i + 1, "sigma")?);
        }
        if n != 0 && n != config.n_steps + 1 {
            return Err(Error::Schema(format!("{n} rows for {} steps", config.n_steps)));
        }
        Ok(SimPath { config, x, y, sigma })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_stream;
    use crate::sim::simulate_path;
    use approx::assert_relative_eq;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    #[test]
    fn loads_and_sorts() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "idx.csv",
            "Date,Open,Close\n2020-01-03,1,102.5\n2020-01-01,1,100\n2020-01-02,1,101\n",
        );
        let s = load_prices(&p).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dates[0], date("2020-01-01"));
        assert_eq!(s.close, vec![100.0, 101.0, 102.5]);
        assert_eq!(s.label, "idx");
    }

    #[test]
    fn rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "date,close\n2020-01-01,1\n2020-01-02,0\n");
        let err = load_prices(&p).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("row 3"), "{err}");

        let p = write(&dir, "b.csv", "date,close\n2020-01-01,1\n2020-13-02,2\n");
        assert!(matches!(load_prices(&p).unwrap_err(), Error::Parse { row: 3, .. }));

        let p = write(&dir, "c.csv", "date,close\n2020-01-01,abc\n");
        assert!(matches!(load_prices(&p).unwrap_err(), Error::Parse { row: 2, .. }));

        let p = write(&dir, "d.csv", "date,price\n2020-01-01,1\n");
        assert!(matches!(load_prices(&p).unwrap_err(), Error::Schema(_)));

        let p = write(&dir, "e.csv", "date,close\n2020-01-01,1\n2020-01-01,2\n");
        assert!(matches!(load_prices(&p).unwrap_err(), Error::Validation(_)));

        assert!(matches!(
            load_prices(dir.path().join("missing.csv")).unwrap_err(),
            Error::Io { .. }
        ));
    }

    fn prices(close: &[f64]) -> PriceSeries {
        let d0 = date("2000-01-01");
        let recs = close
            .iter()
            .enumerate()
            .map(|(i, &p)| (d0 + chrono::Days::new(i as u64), p))
            .collect();
        PriceSeries::new(recs, "t").unwrap()
    }

    #[test]
    fn return_examples() {
        assert!(to_returns(&prices(&[5.0; 10])).unwrap().dx.iter().all(|&v| v == 0.0));

        let r = to_returns(&prices(&[1.0, std::f64::consts::E, 1.0])).unwrap();
        assert_relative_eq!(r.dx[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.dx[1], -1.0, epsilon = 1e-15);
        assert_eq!(r.dates.as_ref().unwrap()[0], "2000-01-02");

        let growth: Vec<f64> = (0..50).map(|t| (0.013 * t as f64).exp()).collect();
        assert!(to_returns(&prices(&growth)).unwrap().dx.iter().all(|v| v.abs() < 1e-14));

        assert!(matches!(
            to_returns(&prices(&[1.0, 2.0])),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn detrending_is_idempotent() {
        let z = gaussian_stream(4, 1000);
        let close: Vec<f64> = z
            .iter()
            .scan(100.0, |s, e| {
                *s *= (0.0005 + 0.01 * e).exp();
                Some(*s)
            })
            .collect();
        let r1 = to_returns(&prices(&close)).unwrap();
        let mean = r1.dx.iter().sum::<f64>() / r1.len() as f64;
        assert!(mean.abs() < 1e-12);
        let rebuilt: Vec<f64> = std::iter::once(1.0)
            .chain(r1.dx.iter().scan(1.0, |s, d| {
                *s *= d.exp();
                Some(*s)
            }))
            .collect();
        let r2 = to_returns(&prices(&rebuilt)).unwrap();
        for (a, b) in r1.dx.iter().zip(&r2.dx) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vol_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let values: Vec<f64> = gaussian_stream(9, 10_000).iter().map(|z| 0.01 * z.exp()).collect();
        let spec = ModelSpec::dji(ModelKind::ExpOu);
        let v = VolSeries::new(EstimatorKind::Ml, Some(spec), 9, values).unwrap();
        let p = dir.path().join("v.tsv");
        save_series(&v, &p).unwrap();
        let back: VolSeries = load_series(&p).unwrap();
        assert_eq!(back.start, 9);
        assert_eq!(back.spec, Some(spec));
        assert!(back
            .values
            .iter()
            .zip(&v.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back, v);
    }

    #[test]
    fn every_type_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let ps = prices(&[1.0, 1.5, 1.25, 3.0]);
        let p = dir.path().join("p.tsv");
        save_series(&ps, &p).unwrap();
        assert_eq!(load_series::<PriceSeries>(&p).unwrap(), ps);

        let rs = to_returns(&ps).unwrap();
        save_series(&rs, &p).unwrap();
        assert_eq!(load_series::<ReturnSeries>(&p).unwrap(), rs);

        let mut vol = crate::estimator::sigma_decon(&rs, 3);
        vol.dates = rs.dates.clone();
        save_series(&vol, &p).unwrap();
        assert_eq!(load_series::<VolSeries>(&p).unwrap(), vol);

        for y0 in [InitialState::Stationary, InitialState::Value(0.01)] {
            let path = simulate_path(&SimConfig::new(ModelSpec::dji(ModelKind::Heston), 50, 2).with_y0(y0)).unwrap();
            save_series(&path, &p).unwrap();
            assert_eq!(load_series::<SimPath>(&p).unwrap(), path);
        }
    }

    #[test]
    fn schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "v.tsv",
            "# kind: vol\n# estimator: prop\n# model: none\nindex\tsigma\testimator\n0\t1.0\n",
        );
        assert!(matches!(load_series::<VolSeries>(&p).unwrap_err(), Error::Schema(_)));
        let p = write(&dir, "r.tsv", "# kind: returns\nindex\tdx\textra\n");
        assert!(matches!(load_series::<ReturnSeries>(&p).unwrap_err(), Error::Schema(_)));
        let p = write(&dir, "k.tsv", "# kind: returns\nindex\tdx\n");
        assert!(matches!(load_series::<VolSeries>(&p).unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn empty_file_is_an_empty_series() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r.tsv", "# kind: returns\n# label: x\nindex\tdx\n");
        assert!(load_series::<ReturnSeries>(&p).unwrap().is_empty());
        let p = write(
            &dir,
            "v.tsv",
            "# kind: vol\n# estimator: decon\n# model: none\nindex\tsigma\testimator\n",
        );
        assert!(load_series::<VolSeries>(&p).unwrap().is_empty());
    }
}
