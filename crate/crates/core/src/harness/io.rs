//! Matrix files: comma-separated dense text, a little-endian binary dump,
//! and the coordinate text format (1-based, `real general`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};

/// First eight bytes of a dense-binary file.
pub const BINARY_MAGIC: u64 = u64::from_le_bytes(*b"NAUMMAT1");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    DenseCsv,
    DenseBinary,
    SparseCoordinate,
}

impl MatrixFormat {
    /// Guess from the file extension (`.csv`, `.bin`, `.mtx`).
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(MatrixFormat::DenseCsv),
            "bin" => Some(MatrixFormat::DenseBinary),
            "mtx" => Some(MatrixFormat::SparseCoordinate),
            _ => None,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = NaumError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-csv" => Ok(MatrixFormat::DenseCsv),
            "dense-binary" => Ok(MatrixFormat::DenseBinary),
            "sparse-coordinate" => Ok(MatrixFormat::SparseCoordinate),
            other => Err(NaumError::InvalidConfig(format!("unknown matrix format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl LoadedMatrix {
    pub fn into_dense(self) -> DenseMatrix {
        match self {
            LoadedMatrix::Dense(m) => m,
            LoadedMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> NaumError {
    NaumError::ParseError {
        line,
        message: message.into(),
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<LoadedMatrix> {
    match format {
        MatrixFormat::DenseBinary => {
            let bytes = fs::read(path).map_err(|e| NaumError::io(path, e))?;
            parse_dense_binary(&bytes).map(LoadedMatrix::Dense)
        }
        _ => {
            let text = fs::read_to_string(path).map_err(|e| NaumError::io(path, e))?;
            if format == MatrixFormat::DenseCsv {
                parse_dense_csv(&text).map(LoadedMatrix::Dense)
            } else {
                parse_coordinate(&text).map(LoadedMatrix::Sparse)
            }
        }
    }
}

pub fn parse_dense_csv(text: &str) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number '{}'", field.trim())))?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(lineno, format!("expected {c} fields, found {width}")));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(1, "empty matrix"))?;
    DenseMatrix::new(rows, cols, data)
}

pub fn parse_dense_binary(bytes: &[u8]) -> Result<DenseMatrix> {
    let word = |i: usize| -> Option<[u8; 8]> { bytes.get(i * 8..i * 8 + 8)?.try_into().ok() };
    let header = |i| word(i).map(u64::from_le_bytes).ok_or_else(|| parse_err(1, "truncated header"));
    if header(0)? != BINARY_MAGIC {
        return Err(parse_err(1, "bad magic number"));
    }
    let (m, n) = (header(1)? as usize, header(2)? as usize);
    let count = m
        .checked_mul(n)
        .ok_or_else(|| parse_err(1, "dimensions overflow"))?;
    if bytes.len() != 24 + 8 * count {
        return Err(parse_err(
            1,
            format!("{m}x{n} needs {} bytes of data, found {}", 8 * count, bytes.len().saturating_sub(24)),
        ));
    }
    let data = (0..count)
        .map(|k| f64::from_le_bytes(word(3 + k).expect("length checked")))
        .collect();
    DenseMatrix::new(m, n, data)
}

/// Coordinate text with 1-based indices; entries come back sorted and
/// zero-based. Repeated coordinates are rejected.
pub fn parse_coordinate(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix coordinate real general'"));
    }
    if !matches!(fields[3].as_str(), "real" | "integer") || fields[4] != "general" {
        return Err(parse_err(1, format!("unsupported field/symmetry '{} {}'", fields[3], fields[4])));
    }
    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad size field '{t}'"))))
        .collect::<Result<_>>()?;
    let [m, n, nnz] = dims[..] else {
        return Err(parse_err(size_line, "size line needs rows, columns and entry count"));
    };
    let mut triples = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashMap::with_capacity(nnz);
    for (lineno, line) in body {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(lineno, "entry needs row, column and value"));
        }
        let index = |t: &str, bound: usize| -> Result<usize> {
            let v: usize = t.parse().map_err(|_| parse_err(lineno, format!("bad index '{t}'")))?;
            if v == 0 || v > bound {
                return Err(parse_err(lineno, format!("index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (index(parts[0], m)?, index(parts[1], n)?);
        let v: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad value '{}'", parts[2])))?;
        if let Some(first) = seen.insert((i, j), lineno) {
            return Err(parse_err(
                lineno,
                format!("duplicate entry ({}, {}) first seen on line {first}", i + 1, j + 1),
            ));
        }
        triples.push((i, j, v));
    }
    if triples.len() != nnz {
        return Err(parse_err(size_line, format!("declared {nnz} entries, found {}", triples.len())));
    }
    CsrMatrix::from_triples(m, n, triples)
}

pub fn dense_csv_string(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn dense_binary_bytes(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * m.data().len());
    for word in [BINARY_MAGIC, m.rows() as u64, m.cols() as u64] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn coordinate_string(m: &CsrMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz()).expect("writing to a String");
    for (i, j, v) in m.triples() {
        writeln!(out, "{} {} {v}", i + 1, j + 1).expect("writing to a String");
    }
    out
}

pub fn write_matrix(path: &Path, m: &LoadedMatrix, format: MatrixFormat) -> Result<()> {
    let bytes = match (format, m) {
        (MatrixFormat::DenseCsv, _) => dense_csv_string(&m.clone().into_dense()).into_bytes(),
        (MatrixFormat::DenseBinary, _) => dense_binary_bytes(&m.clone().into_dense()),
        (MatrixFormat::SparseCoordinate, LoadedMatrix::Sparse(s)) => coordinate_string(s).into_bytes(),
        (MatrixFormat::SparseCoordinate, LoadedMatrix::Dense(d)) => {
            coordinate_string(&CsrMatrix::from_dense(d)).into_bytes()
        }
    };
    fs::write(path, bytes).map_err(|e| NaumError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic_and_errors() {
        let m = parse_dense_csv("1,2\n3,4").unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
        match parse_dense_csv("1,2\n3\n") {
            Err(NaumError::ParseError { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_dense_csv("1,x"), Err(NaumError::ParseError { line: 1, .. })));
    }

    #[test]
    fn coordinate_index_shift() {
        let text = "%%MatrixMarket matrix coordinate real general\n% note\n2 2 1\n1 1 5.0\n";
        let s = parse_coordinate(text).unwrap();
        assert_eq!(s.triples().collect::<Vec<_>>(), vec![(0, 0, 5.0)]);
    }

    #[test]
    fn coordinate_duplicates_and_bad_header() {
        let dup = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n1 2 3.0\n";
        assert!(matches!(parse_coordinate(dup), Err(NaumError::ParseError { line: 4, .. })));
        let bad = "%%MatrixMarket matrix array real general\n2 2\n";
        assert!(matches!(parse_coordinate(bad), Err(NaumError::ParseError { line: 1, .. })));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(matches!(parse_coordinate(short), Err(NaumError::ParseError { line: 2, .. })));
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let m = DenseMatrix::from_rows(&[&[0.1, -2.5e-300, 3.0], &[f64::MIN_POSITIVE, 1e300, -0.0]]);
        let bytes = dense_binary_bytes(&m);
        let back = parse_dense_binary(&bytes).unwrap();
        let bits = |d: &DenseMatrix| d.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert!(parse_dense_binary(&bytes[..30]).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DenseMatrix::from_rows(&[&[0.0, 1.25], &[3.5, 0.0]]);
        for (name, format) in [
            ("a.csv", MatrixFormat::DenseCsv),
            ("a.bin", MatrixFormat::DenseBinary),
            ("a.mtx", MatrixFormat::SparseCoordinate),
        ] {
            let path = dir.path().join(name);
            write_matrix(&path, &LoadedMatrix::Dense(m.clone()), format).unwrap();
            assert_eq!(MatrixFormat::from_extension(&path), Some(format));
            assert_eq!(load_matrix(&path, format).unwrap().into_dense(), m);
        }
        assert!(matches!(
            load_matrix(&dir.path().join("missing.csv"), MatrixFormat::DenseCsv),
            Err(NaumError::Io { .. })
        ));
    }
}
