//! Plain-text matrix files.
//!
//! ```text
//! # optional comment lines
//! 1
//! 1.0000000000000000e0,0.0000000000000000e0 0.0000000000000000e0,0.0000000000000000e0
//! 0.0000000000000000e0,0.0000000000000000e0 1.0000000000000000e0,0.0000000000000000e0
//! ```
//!
//! The first non-comment line holds the qubit count `n`; the next `2^n` lines
//! hold one row each, entries written as `re,im` with 17 significant digits.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::unitary::{CMatrix, UnitaryOperator};

/// Largest qubit count accepted by the reader.
pub const MAX_FILE_QUBITS: usize = 10;

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix(m: &CMatrix) -> String {
    let dim = m.nrows();
    let n = dim.trailing_zeros();
    let mut out = String::new();
    let _ = writeln!(out, "{n}");
    for i in 0..dim {
        let row: Vec<String> = (0..dim)
            .map(|j| {
                let z = m[(i, j)];
                format!("{},{}", format_f64(z.re), format_f64(z.im))
            })
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_unitary(u: &UnitaryOperator) -> String {
    write_matrix(u.matrix())
}

fn parse_entry(tok: &str, line: usize) -> Result<Complex64> {
    let (re, im) = tok.split_once(',').ok_or_else(|| Error::Parse {
        line,
        msg: format!("entry `{tok}` is not of the form re,im"),
    })?;
    let parse = |s: &str| {
        s.trim().parse::<f64>().map_err(|_| Error::Parse {
            line,
            msg: format!("`{s}` is not a number"),
        })
    };
    let z = Complex64::new(parse(re)?, parse(im)?);
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("entry `{tok}` is not finite"),
        });
    }
    Ok(z)
}

/// Parses the text format into a raw matrix. Unitarity is not checked here.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty input".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: hline,
        msg: format!("expected qubit count, got `{header}`"),
    })?;
    if n == 0 || n > MAX_FILE_QUBITS {
        return Err(Error::Parse {
            line: hline,
            msg: format!("qubit count {n} outside 1..={MAX_FILE_QUBITS}"),
        });
    }
    let dim = 1usize << n;
    let mut entries = Vec::with_capacity(dim * dim);
    for row in 0..dim {
        let (lno, text) = lines.next().ok_or(Error::Parse {
            line: hline,
            msg: format!("expected {dim} rows, found {row}"),
        })?;
        let before = entries.len();
        for tok in text.split_whitespace() {
            entries.push(parse_entry(tok, lno)?);
        }
        if entries.len() - before != dim {
            return Err(Error::Parse {
                line: lno,
                msg: format!("expected {dim} entries, found {}", entries.len() - before),
            });
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(Error::Parse {
            line: lno,
            msg: "trailing data after matrix".into(),
        });
    }
    Ok(CMatrix::from_row_slice(dim, dim, &entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary::haar_random_unitary;

    #[test]
    fn round_trip_is_exact() {
        let u = haar_random_unitary(2, 9);
        let text = write_unitary(&u);
        let back = parse_matrix(&text).unwrap();
        assert_eq!(&back, u.matrix());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# hadamard-ish\n1\n\n0,0 1,0\n# mid\n1,0 0,0\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "x\n",
            "1\n1,0 0,0\n",
            "1\n1,0 0\n0,0 1,0\n",
            "1\n1,0 0,0\n0,0 1,0\n5\n",
            "0\n",
        ] {
            assert!(
                matches!(parse_matrix(bad), Err(Error::Parse { .. })),
                "{bad:?}"
            );
        }
    }
}
