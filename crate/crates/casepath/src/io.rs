//! CSV datasets: a header row, a response column named `y`, covariates in header order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use casepath_core::Dataset;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Name of the response column.
pub const RESPONSE: &str = "y";

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, &path.display().to_string())
}

/// Parses a dataset; `origin` names the source in error messages.
pub fn read_csv_from<R: Read>(reader: R, origin: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let parse_err =
        |row: usize, column: usize, message: String| Error::Parse { origin: origin.into(), row, column, message };
    let header = rdr.headers().map_err(|e| parse_err(1, 0, e.to_string()))?.clone();
    let ycol = header
        .iter()
        .position(|h| h == RESPONSE)
        .ok_or_else(|| Error::MissingColumn { origin: origin.into(), column: RESPONSE.into() })?;
    let width = header.len();
    if width < 2 {
        return Err(parse_err(1, width, "need at least one covariate column".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| parse_err(row, 0, e.to_string()))?;
        if rec.len() != width {
            return Err(parse_err(
                row,
                rec.len().min(width) + 1,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| parse_err(row, j + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(row, j + 1, format!("non-finite value {cell:?}")));
            }
            if j == ycol {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    let n = ys.len();
    let x = DMatrix::from_row_slice(n, width - 1, &xs);
    Ok(Dataset::new(x, DVector::from_vec(ys))?)
}

pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(data, file).map_err(|e| match e {
        Error::Serialize(m) => Error::io(path, std::io::Error::other(m)),
        other => other,
    })
}

/// Writes columns `x1, …, xp, y` with shortest round-trip floats.
pub fn write_csv_to<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push(RESPONSE.into());
    let rows = (0..data.n()).map(|i| {
        let mut r: Vec<f64> = data.row(i).to_vec();
        r.push(data.y()[i]);
        r
    });
    write_table(writer, &header, rows.map(|r| r.into_iter().map(Cell::Num).collect()))
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

/// Generic CSV table writer.
pub fn write_table<W: Write, S: AsRef<str>>(
    writer: W,
    header: &[S],
    rows: impl IntoIterator<Item = Vec<Cell>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record(header.iter().map(|h| h.as_ref())).map_err(ser)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render)).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))?;
    Ok(())
}

/// Writes a table to `path`.
pub fn write_table_file<S: AsRef<str>>(
    path: &Path,
    header: &[S],
    rows: impl IntoIterator<Item = Vec<Cell>>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_table(file, header, rows)
}
