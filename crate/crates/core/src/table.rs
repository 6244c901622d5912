//! Tab-separated tables with a `#`-prefixed metadata header.
//!
//! ```text
//! # operation: acf
//! # max_lag: 500
//! lag  c
//! 0  1.0000000000000000e0
//! ```
//!
//! Floats are written with 17 significant digits so every value survives a
//! save/load cycle bit for bit. Missing values are written as `NA`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const NA: &str = "NA";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), fmt_f64)
}

impl AnalysisTable {
    pub fn new(operation: &str, columns: &[&str]) -> Self {
        Self {
            meta: vec![("operation".into(), operation.into())],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.set_meta(key, value);
        self
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.meta.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.meta.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        if !self.columns.is_empty() {
            out.push_str(&self.columns.join("\t"));
            out.push('\n');
        }
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = AnalysisTable::default();
        let mut have_header = false;
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Schema(format!("line {}: malformed metadata", i + 1)))?;
                table.meta.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
            if !have_header {
                table.columns = fields;
                have_header = true;
            } else if fields.len() != table.columns.len() {
                return Err(Error::Schema(format!(
                    "line {}: {} fields, header has {}",
                    i + 1,
                    fields.len(),
                    table.columns.len()
                )));
            } else {
                table.rows.push(fields);
            }
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Requires exactly these columns, in order.
    pub fn expect_columns(&self, expected: &[&str]) -> Result<()> {
        if self.columns.iter().map(String::as_str).eq(expected.iter().copied()) {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "expected columns [{}], found [{}]",
                expected.join(", "),
                self.columns.join(", ")
            )))
        }
    }
}

pub fn parse_f64_field(value: &str, row: usize, column: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Schema(format!("row {row}: column `{column}` is not a number: `{value}`")))
}

pub fn parse_opt_field(value: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if value == NA {
        Ok(None)
    } else {
        parse_f64_field(value, row, column).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let mut t = AnalysisTable::new("demo", &["a", "b"]).with_meta("n", 2);
        t.push_row(vec![fmt_f64(0.1), fmt_opt(None)]);
        t.push_row(vec![fmt_f64(-3.0e-300), fmt_f64(1.0)]);
        let text = t.render();
        assert!(text.starts_with("# operation: demo\n# n: 2\na\tb\n"));
        let back = AnalysisTable::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.meta("n"), Some("2"));
        assert_eq!(parse_f64_field(&back.rows[0][0], 1, "a").unwrap(), 0.1);
        assert_eq!(parse_opt_field(&back.rows[0][1], 1, "b").unwrap(), None);
    }

    #[test]
    fn ragged_rows_are_schema_errors() {
        let err = AnalysisTable::parse("a\tb\n1\t2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn seventeen_digits_roundtrip() {
        for x in [std::f64::consts::PI, 1e-310, 123_456_789.123_456_78, -0.0, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
