//! Plain-text matrix and vector files.
//!
//! Matrix: a header line `n N d signed seed` (signed is 0 or 1), then one
//! line per column listing `row:value` pairs separated by commas.
//!
//! Vector: a line holding the length, then one line of `index:value` pairs
//! for the nonzero entries (empty when the vector is zero). Values use the
//! shortest representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use expander_core::matrices::SparseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] expander_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, name: &str) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {name} '{tok}'")))
}

pub fn write_matrix<W: Write>(m: &SparseMatrix, mut w: W) -> io::Result<()> {
    writeln!(w, "{} {} {} {} {}", m.n(), m.num_cols(), m.d(), u8::from(m.signed()), m.seed())?;
    let mut line = String::new();
    for j in 0..m.num_cols() {
        line.clear();
        for (k, (&r, &v)) in m.column_rows(j).iter().zip(m.column_values(j)).enumerate() {
            if k > 0 {
                line.push(',');
            }
            write!(line, "{r}:{v}").unwrap();
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn matrix_to_string(m: &SparseMatrix) -> String {
    let mut buf = Vec::new();
    write_matrix(m, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<SparseMatrix, FormatError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))??;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), 1, "n")?;
    let big_n: usize = field(toks.next(), 1, "N")?;
    let d: usize = field(toks.next(), 1, "d")?;
    let signed = match toks.next() {
        Some("0") => false,
        Some("1") => true,
        other => return Err(parse_err(1, format!("signed flag must be 0 or 1, got {other:?}"))),
    };
    let seed: u64 = field(toks.next(), 1, "seed")?;
    if toks.next().is_some() {
        return Err(parse_err(1, "trailing fields in header"));
    }
    let mut columns = Vec::with_capacity(big_n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() && columns.len() == big_n {
            continue;
        }
        if columns.len() == big_n {
            return Err(parse_err(lineno, format!("more than {big_n} columns")));
        }
        let mut col = Vec::new();
        for entry in line.trim().split(',') {
            let (row, val) = entry
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected row:value, got '{entry}'")))?;
            col.push((field(Some(row), lineno, "row")?, field(Some(val), lineno, "value")?));
        }
        columns.push(col);
    }
    if columns.len() != big_n {
        return Err(parse_err(big_n + 1, format!("expected {big_n} columns, found {}", columns.len())));
    }
    Ok(SparseMatrix::from_columns(n, d, signed, seed, columns)?)
}

pub fn write_vector<W: Write>(x: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "{}", x.len())?;
    let mut line = String::new();
    for (i, v) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
        if !line.is_empty() {
            line.push(',');
        }
        write!(line, "{i}:{v:?}").unwrap();
    }
    writeln!(w, "{line}")?;
    w.flush()
}

pub fn read_vector<R: BufRead>(r: R) -> Result<Vec<f64>, FormatError> {
    let mut lines = r.lines();
    let len_line = lines.next().ok_or_else(|| parse_err(1, "empty vector file"))??;
    let len: usize = field(Some(len_line.trim()), 1, "length")?;
    let mut x = vec![0.0; len];
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        for entry in line.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (idx, val) = entry
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got '{entry}'")))?;
            let idx: usize = field(Some(idx), lineno, "index")?;
            let val: f64 = field(Some(val), lineno, "value")?;
            if idx >= len {
                return Err(parse_err(lineno, format!("index {idx} out of range for length {len}")));
            }
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value at index {idx}")));
            }
            x[idx] = val;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_zero_and_negative_zero() {
        let mut buf = Vec::new();
        write_vector(&[0.0, 0.0], &mut buf).unwrap();
        assert_eq!(buf, b"2\n\n");
        assert_eq!(read_vector(&buf[..]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(read_matrix(&b"4 1 2 2 0\n0:1,1:1\n"[..]).is_err());
        assert!(read_matrix(&b"4 2 2 0 0\n0:1,1:1\n"[..]).is_err());
        assert!(read_matrix(&b"4 1 2 0 0\n0:1,1:-1\n"[..]).is_err());
        assert!(read_vector(&b"2\n5:1\n"[..]).is_err());
    }
}
