//! CSV output with fixed 17-significant-digit numbers and config headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

/// 17 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{:.16e}", x)
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    /// Opens `path`, writes `header_lines` as `# ` comments, then the column row.
    pub fn create(path: &Path, header_lines: &[String], columns: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        for l in header_lines {
            writeln!(out, "# {l}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        let s: Vec<String> = cells.iter().map(|c| c.render()).collect();
        writeln!(self.out, "{}", s.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => num(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}
