use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reads a headed, comma-separated numeric table. The trailing `label_dims`
/// columns become labels, the rest features.
pub fn load_csv(path: impl AsRef<Path>, label_dims: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, label_dims, &path.display().to_string())
}

/// Parses a numeric table into a matrix plus header names. Row numbers in
/// errors are 1-based file lines (the header is line 1); columns are 1-based.
pub(crate) fn parse_table<R: Read>(reader: R) -> Result<(Vec<String>, Matrix)> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(&e, 1))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "missing header row".into(),
        });
    }
    let cols = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let line = rows + 2;
        let record = record.map_err(|e| csv_error(&e, line))?;
        let line = record.position().map_or(line, |p| p.line() as usize);
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("empty cell in column '{}'", header[c]),
                });
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: c + 1,
                message: format!("'{cell}' in column '{}' is not a number", header[c]),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("non-finite value in column '{}'", header[c]),
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    Ok((header, Matrix::from_vec(rows, cols, data)?))
}

fn csv_error(e: &::csv::Error, fallback_line: usize) -> Error {
    let (row, message) = match e.kind() {
        ::csv::ErrorKind::UnequalLengths { pos, expected_len, len } => (
            pos.as_ref().map_or(fallback_line, |p| p.line() as usize),
            format!("expected {expected_len} cells, found {len}"),
        ),
        _ => (e.position().map_or(fallback_line, |p| p.line() as usize), e.to_string()),
    };
    Error::Parse {
        row,
        column: 0,
        message,
    }
}

/// Like [`load_csv`] but from any reader; `origin` tags the resulting dataset.
pub fn parse_csv<R: Read>(reader: R, label_dims: usize, origin: &str) -> Result<Dataset> {
    let (header, table) = parse_table(reader)?;
    let cols = header.len();
    if label_dims == 0 || label_dims >= cols {
        return Err(Error::invalid(format!(
            "label_dims must be in 1..{cols} for a table with {cols} columns, got {label_dims}"
        )));
    }
    if table.rows() == 0 {
        return Err(Error::Empty("csv has no data rows"));
    }
    let d = cols - label_dims;
    let mut x = Vec::with_capacity(table.rows() * d);
    let mut y = Vec::with_capacity(table.rows() * label_dims);
    for row in table.iter_rows() {
        x.extend_from_slice(&row[..d]);
        y.extend_from_slice(&row[d..]);
    }
    let n = table.rows();
    let ds = Dataset::new(Matrix::from_vec(n, d, x)?, Matrix::from_vec(n, label_dims, y)?, origin)?;
    Ok(ds.with_feature_names(header[..d].to_vec()))
}

/// Writes a dataset as a headed CSV that [`parse_csv`] reads back exactly:
/// features first, then `y0..` label columns. Values use the shortest
/// representation that round-trips.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let to_err = |e: ::csv::Error| Error::invalid(format!("csv write failed: {e}"));
    let mut w = ::csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match &dataset.feature_names {
        Some(names) => names.clone(),
        None => (0..dataset.feature_dim()).map(|j| format!("x{j}")).collect(),
    };
    header.extend((0..dataset.label_dim()).map(|k| format!("y{k}")));
    w.write_record(&header).map_err(to_err)?;
    for (xr, yr) in dataset.x.iter_rows().zip(dataset.y.iter_rows()) {
        w.write_record(xr.iter().chain(yr).map(|v| v.to_string()))
            .map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("csv write failed: {e}")))?;
    Ok(())
}
