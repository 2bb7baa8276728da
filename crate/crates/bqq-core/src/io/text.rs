//! Delimited text matrices (comma or whitespace separated).

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub fn parse_delimited(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cols: Option<usize> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| Error::TextParse {
                line: lineno,
                message: format!("invalid number '{tok}'"),
            })?;
            row.push(v);
        }
        if row.is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::TextParse {
                    line: lineno,
                    message: format!("row has {} entries, expected {c}", row.len()),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn write_csv_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv_and_whitespace() {
        let m = parse_delimited("1,2,3\n4 5 6\n").unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn roundtrip() {
        let m = DenseMatrix::from_vec(2, 2, vec![0.5, -1.25, 3.0, 1e-9]).unwrap();
        let text = write_csv_matrix(&m);
        assert_eq!(parse_delimited(&text).unwrap(), m);
    }

    #[test]
    fn ragged_rows_name_the_line() {
        match parse_delimited("1,2\n3\n") {
            Err(Error::TextParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ragged-row error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_delimited("  \n# nope\n"), Err(Error::EmptyMatrix)));
    }
}
