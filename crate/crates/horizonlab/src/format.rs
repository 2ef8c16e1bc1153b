//! Artifact formats: CSV with a one-line header and 17 significant digits,
//! pretty JSON for summaries. Nothing time-dependent goes into either.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Fixed 17-significant-digit rendering; round-trips every finite `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width");
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Num(x) => self.text.push_str(&num(x)),
                Cell::Int(k) => {
                    let _ = write!(self.text, "{k}");
                }
                Cell::Text(t) => self.text.push_str(&t),
                Cell::Missing => self.text.push_str("nan"),
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Parsed CSV: header plus rows of raw fields.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CliError::Format {
                path: path.into(),
                reason: "empty file".into(),
            })?
            .split(',')
            .map(str::to_string)
            .collect::<Vec<_>>();
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str, path: &Path) -> CliResult<Vec<f64>> {
        let bad = |reason: String| CliError::Format {
            path: path.into(),
            reason,
        };
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(j)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| bad(format!("row {}: bad `{name}`", i + 2)))
            })
            .collect()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable summary");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -0.0, 1.0 / 3.0, 6.02e23, -1e-300, f64::MIN_POSITIVE, f64::MAX] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["r", "label", "x"]);
        c.row(vec![0.5.into(), "graphical".into(), None.into()]);
        assert_eq!(c.into_string(), "r,label,x\n5.0000000000000000e-1,graphical,nan\n");
    }
}
