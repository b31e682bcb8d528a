//! Plain CSV emission with round-trip float formatting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{DmsError, Result};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| DmsError::Parse(format!("`{s}`: {e}")))
}

/// Column-oriented table ready for CSV output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvTable {
            comments: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(DmsError::Parse(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|x| fmt_float(*x)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = CsvTable::default();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        for line in lines.by_ref() {
            if let Some(c) = line.strip_prefix('#') {
                table.comments.push(c.trim_start().to_string());
            } else {
                table.header = line.split(',').map(|s| s.trim().to_string()).collect();
                break;
            }
        }
        for line in lines {
            let row = line.split(',').map(parse_float).collect::<Result<Vec<f64>>>()?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bit_exactly() {
        let xs = [0.0, -0.0, 1.0, -2.5e-19, 1e300, 3.141592653589793, 1.0 / 3.0, 5e-324, 123456789.123];
        for x in xs {
            let s = fmt_float(x);
            assert_eq!(parse_float(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn header_only_and_round_trip() {
        let t = CsvTable::new(["t", "P_AB"]);
        assert_eq!(t.render(), "t,P_AB\n");
        let mut t = CsvTable::new(["a", "b"]);
        t.comments.push("note".into());
        t.push(vec![1.0 / 7.0, -3e-9]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        let text = t.render();
        assert!(text.ends_with('\n'));
        assert_eq!(CsvTable::parse(&text).unwrap(), t);
    }
}
