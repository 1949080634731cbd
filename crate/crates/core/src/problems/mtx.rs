use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{DreError, Result};
use crate::linalg::dense::Mat;
use crate::linalg::sparse::CsrMatrix;

fn parse_err(line: usize, message: impl Into<String>) -> DreError {
    DreError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

struct Header {
    layout: Layout,
    symmetric: bool,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut it = line.split_whitespace();
    if it.next() != Some("%%MatrixMarket") {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    let words: Vec<String> = it.map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 4 || words[0] != "matrix" {
        return Err(parse_err(1, format!("malformed header {line:?}")));
    }
    let layout = match words[1].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported format {other:?}"))),
    };
    if words[2] != "real" {
        return Err(parse_err(1, format!("field must be real, got {:?}", words[2])));
    }
    let symmetric = match words[3].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry qualifier {other:?}"))),
    };
    Ok(Header { layout, symmetric })
}

/// Non-comment lines with their 1-based line numbers.
fn body(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

fn parse_real(tok: Option<&str>, line: usize) -> Result<f64> {
    let v: f64 = tok
        .ok_or_else(|| parse_err(line, "missing value"))?
        .parse()
        .map_err(|_| parse_err(line, "value is not a real number"))?;
    if !v.is_finite() {
        return Err(parse_err(line, "value is not finite"));
    }
    Ok(v)
}

/// Parses coordinate Matrix Market text into CSR.
pub fn read_matrix_market(text: &str) -> Result<CsrMatrix> {
    let first = text.lines().next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = parse_header(first)?;
    if header.layout != Layout::Coordinate {
        return Err(parse_err(1, "expected coordinate format"));
    }
    let mut lines = body(text);
    let (ln, size) = lines.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut it = size.split_whitespace();
    let rows = parse_usize(it.next(), ln, "row count")?;
    let cols = parse_usize(it.next(), ln, "column count")?;
    let nnz = parse_usize(it.next(), ln, "entry count")?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(ln, "dimensions must be positive"));
    }
    if header.symmetric && rows != cols {
        return Err(parse_err(ln, "symmetric matrix must be square"));
    }
    let mut t = Vec::with_capacity(if header.symmetric { 2 * nnz } else { nnz });
    let mut count = 0;
    for (ln, l) in lines {
        let mut it = l.split_whitespace();
        let i = parse_usize(it.next(), ln, "row index")?;
        let j = parse_usize(it.next(), ln, "column index")?;
        let v = parse_real(it.next(), ln)?;
        if it.next().is_some() {
            return Err(parse_err(ln, "trailing tokens"));
        }
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(parse_err(ln, format!("index ({i}, {j}) out of bounds for {rows}x{cols}")));
        }
        if header.symmetric && j > i {
            return Err(parse_err(ln, "symmetric storage must hold the lower triangle"));
        }
        t.push((i - 1, j - 1, v));
        if header.symmetric && i != j {
            t.push((j - 1, i - 1, v));
        }
        count += 1;
    }
    if count != nnz {
        return Err(parse_err(text.lines().count(), format!("expected {nnz} entries, found {count}")));
    }
    CsrMatrix::from_triplets(rows, cols, &t)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    read_matrix_market(&fs::read_to_string(path)?)
}

/// Writes CSR as `coordinate real general` with round-trip exact values.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    let mut out = String::with_capacity(32 * a.nnz() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.nrows(), a.ncols(), a.nnz()));
    for (i, j, v) in a.triplets() {
        out.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a dense matrix stored in either `array` or `coordinate` layout.
pub fn read_dense_matrix_market(text: &str) -> Result<Mat> {
    let first = text.lines().next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = parse_header(first)?;
    if header.layout == Layout::Coordinate {
        return Ok(read_matrix_market(text)?.to_dense());
    }
    let mut lines = body(text);
    let (ln, size) = lines.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut it = size.split_whitespace();
    let rows = parse_usize(it.next(), ln, "row count")?;
    let cols = parse_usize(it.next(), ln, "column count")?;
    let mut vals = Vec::with_capacity(rows * cols);
    for (ln, l) in lines {
        vals.push(parse_real(Some(l.split_whitespace().next().unwrap_or("")), ln)?);
    }
    if header.symmetric {
        if rows != cols || vals.len() != rows * (rows + 1) / 2 {
            return Err(parse_err(ln, "symmetric array needs the lower triangle by columns"));
        }
        let mut m = Mat::zeros(rows, cols);
        let mut p = 0;
        for j in 0..cols {
            for i in j..rows {
                m[(i, j)] = vals[p];
                m[(j, i)] = vals[p];
                p += 1;
            }
        }
        return Ok(m);
    }
    if vals.len() != rows * cols {
        return Err(parse_err(ln, format!("expected {} values, found {}", rows * cols, vals.len())));
    }
    Ok(Mat::from_column_slice(rows, cols, &vals))
}

/// Writes a dense matrix in `array real general` layout (column-major).
pub fn write_dense_matrix_market(path: impl AsRef<Path>, m: &Mat) -> Result<()> {
    let mut out = String::with_capacity(26 * m.len() + 64);
    out.push_str("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for v in m.iter() {
        out.push_str(&format!("{v:e}\n"));
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
