//! Grid and per-cell field CSV files, and atomic output.
//!
//! Grid layout: the first row holds an empty cell followed by the x-knots;
//! every further row holds a y-knot followed by the values `z_ij` for that
//! `y_j`, one per x-knot. Per-cell field files use the same layout with one
//! expression per cell (`n` labels in the header, `m` body rows).

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use fisurf_core::grid::GridError;
use fisurf_core::ifs::CellMatrix;
use fisurf_core::{DataGrid, Expr, Field, KnotVector, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("line {line}: {source}")]
    Csv { line: u64, source: csv::Error },
    #[error("empty file")]
    Empty,
    #[error("row 1, column 1: header corner must be empty, found {0:?}")]
    Corner(String),
    #[error("row {row}, column {col}: not a number: {text:?}")]
    NotNumeric { row: usize, col: usize, text: String },
    #[error("row {row}, column {col}: non-finite value {text:?}")]
    NonFinite { row: usize, col: usize, text: String },
    #[error("row 1: x {0}")]
    XKnots(GridError),
    #[error("column 1: y {0}")]
    YKnots(GridError),
    #[error("row {row}: expected {expected} columns, found {found}")]
    Width { row: usize, expected: usize, found: usize },
    #[error("expected {expected} body rows, found {found}")]
    Height { expected: usize, found: usize },
    #[error("row {row}, column {col}: {source}")]
    Expression { row: usize, col: usize, source: ParseError },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn read_records(source: impl Read) -> Result<Vec<Vec<String>>, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| LoadError::Csv {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

fn number(text: &str, row: usize, col: usize) -> Result<f64, LoadError> {
    let v: f64 = text
        .parse()
        .map_err(|_| LoadError::NotNumeric { row, col, text: text.to_owned() })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LoadError::NonFinite { row, col, text: text.to_owned() })
    }
}

/// Reads a grid in the CSV layout. Row and column numbers in errors are
/// 1-based positions in the file (blank lines skipped).
pub fn load_grid(source: impl Read) -> Result<DataGrid, LoadError> {
    let rows = read_records(source)?;
    let (header, body) = rows.split_first().ok_or(LoadError::Empty)?;
    if !header[0].is_empty() {
        return Err(LoadError::Corner(header[0].clone()));
    }
    let xs = header[1..]
        .iter()
        .enumerate()
        .map(|(k, t)| number(t, 1, k + 2))
        .collect::<Result<Vec<_>, _>>()?;
    let xs = KnotVector::new(xs).map_err(LoadError::XKnots)?;
    let width = header.len();

    let mut ys = Vec::with_capacity(body.len());
    let mut z = Vec::with_capacity(body.len());
    for (k, record) in body.iter().enumerate() {
        let row = k + 2;
        if record.len() != width {
            return Err(LoadError::Width { row, expected: width, found: record.len() });
        }
        ys.push(number(&record[0], row, 1)?);
        z.push(
            record[1..]
                .iter()
                .enumerate()
                .map(|(c, t)| number(t, row, c + 2))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let ys = KnotVector::new(ys).map_err(LoadError::YKnots)?;
    Ok(DataGrid::from_rows(xs, ys, &z)?)
}

/// Reads one expression per cell; the result is indexed `(i, j)` with `i`
/// along x.
pub fn load_cell_fields(source: impl Read, n: usize, m: usize) -> Result<CellMatrix<Field>, LoadError> {
    let rows = read_records(source)?;
    let (header, body) = rows.split_first().ok_or(LoadError::Empty)?;
    // header labels are informational; cell labels (n) or knots (n + 1)
    if header.len() != n + 1 && header.len() != n + 2 {
        return Err(LoadError::Width { row: 1, expected: n + 1, found: header.len() });
    }
    if body.len() != m {
        return Err(LoadError::Height { expected: m, found: body.len() });
    }
    let mut exprs: Vec<Vec<Field>> = Vec::with_capacity(m);
    for (k, record) in body.iter().enumerate() {
        let row = k + 2;
        if record.len() != n + 1 {
            return Err(LoadError::Width { row, expected: n + 1, found: record.len() });
        }
        exprs.push(
            record[1..]
                .iter()
                .enumerate()
                .map(|(c, t)| {
                    Expr::parse(t)
                        .map(Field::from_expr)
                        .map_err(|source| LoadError::Expression { row, col: c + 2, source })
                })
                .collect::<Result<_, _>>()?,
        );
    }
    Ok(CellMatrix::from_fn(n, m, |i, j| exprs[j - 1][i - 1].clone()))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, contents: &[u8]) -> io::Result<()> {
    match path {
        None => {
            let mut out = io::stdout().lock();
            out.write_all(contents)?;
            out.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(contents)?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}

pub fn read_file(path: &Path) -> io::Result<Vec<u8>> {
    fs::read(path)
}
