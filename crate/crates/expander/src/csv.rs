//! Minimal CSV output: comma separated, 17 significant digits, a leading
//! `#` comment with the invocation and crate version.

use std::io::{self, Write};

/// One cell. `Missing` renders as an empty field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i128),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Scientific notation with 17 significant digits; non-finite values are
/// written as empty cells.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Real(v) => format_real(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => u8::from(*b).to_string(),
        Cell::Missing => String::new(),
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    /// Writes the comment line and the column header.
    pub fn new(mut out: W, invocation: &str, header: &[&str]) -> io::Result<Self> {
        writeln!(out, "# {} {}: {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"), invocation)?;
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out, columns: header.len() })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells.iter().map(render).collect();
        writeln!(self.out, "{}", line.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Data rows of a CSV file: `#` comments and the first non-comment line
/// (the header) are skipped. Cells are returned as trimmed strings.
pub fn read_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 404.130_806_213_449_6, 1e-300, -2.5] {
            let s = format_real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(format_real(f64::NAN), "");
    }

    #[test]
    fn header_and_rows() {
        let mut w = CsvWriter::new(Vec::new(), "phase --d 8", &["delta", "rho"]).unwrap();
        w.row(&[0.5.into(), Cell::Missing]).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# expander ") && lines[0].ends_with("phase --d 8"));
        assert_eq!(lines[1], "delta,rho");
        assert_eq!(lines[2], "5.0000000000000000e-1,");
        assert_eq!(read_rows(&text), vec![vec!["5.0000000000000000e-1".to_string(), String::new()]]);
    }
}
