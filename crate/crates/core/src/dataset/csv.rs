use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Reads a comma-separated matrix. `label_column` (0-based, counted in the
/// raw row) is pulled out as integer ground truth.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, label_column: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(n + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    row,
                    column: record.len(),
                    message: format!("ragged row: expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (column, cell) in record.iter().enumerate() {
            let parse_err = |message: String| Error::Parse {
                path: path.to_owned(),
                row,
                column: column + 1,
                message,
            };
            if Some(column) == label_column {
                let label: u32 = cell
                    .parse()
                    .map_err(|_| parse_err(format!("label {cell:?} is not a non-negative integer")))?;
                labels.push(label);
            } else {
                let v: f64 = cell.parse().map_err(|_| parse_err(format!("{cell:?} is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("{cell:?} is not finite")));
                }
                values.push(v);
            }
        }
        n += 1;
    }

    let width = width.ok_or_else(|| Error::Format(format!("{}: no data rows", path.display())))?;
    if let Some(c) = label_column {
        if c >= width {
            return Err(Error::invalid(format!("label column {c} out of range for {width} columns")));
        }
    }
    let d = width - usize::from(label_column.is_some());
    let ds = Dataset::new(values, n, d)?;
    if label_column.is_some() {
        ds.with_labels(labels)
    } else {
        Ok(ds)
    }
}

/// Writes the point matrix, with labels appended as a final column when
/// `with_labels` is set and labels exist.
pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset, with_labels: bool) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let labels = ds.labels().filter(|_| with_labels);
    for (i, row) in ds.rows().enumerate() {
        let mut line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        if let Some(labels) = labels {
            line.push(',');
            line.push_str(&labels[i].to_string());
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: ::csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_owned(),
            row,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn tmp(contents: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), contents).unwrap();
        f
    }

    #[test]
    fn reads_plain_rows() {
        let f = tmp("0,0\n1,0\n0,1\n");
        let ds = load_csv(f.path(), false, None).unwrap();
        assert_eq!((ds.len(), ds.dim()), (3, 2));
        assert_eq!(ds.point(1), &[1.0, 0.0]);
        assert_eq!(ds.display_xy().unwrap()[2], [0.0, 1.0]);
    }

    #[test]
    fn header_is_skipped() {
        let f = tmp("x,y\n0,0\n1,0\n0,1\n");
        assert_eq!(load_csv(f.path(), true, None).unwrap().len(), 3);
    }

    #[test]
    fn label_column_extracted() {
        let f = tmp("0.5,1,2.5\n1.5,0,3.5\n");
        let ds = load_csv(f.path(), false, Some(1)).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels().unwrap(), &[1, 0]);
        assert_eq!(ds.point(1), &[1.5, 3.5]);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let f = tmp("0,0\n1,abc\n");
        match load_csv(f.path(), false, None) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_empty_rejected() {
        let f = tmp("0,0\n1\n");
        assert!(matches!(load_csv(f.path(), false, None), Err(Error::Parse { .. })));
        let f = tmp("");
        assert!(load_csv(f.path(), false, None).is_err());
        let f = tmp("a,b\n");
        assert!(load_csv(f.path(), true, None).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let f = tmp("0,inf\n");
        assert!(load_csv(f.path(), false, None).is_err());
    }

    #[test]
    fn write_then_read_is_identity() {
        let ds = Dataset::from_rows(&[vec![0.1, 1e-300, -3.25], vec![1.0 / 3.0, 2.0, 7.0]])
            .unwrap()
            .with_labels(vec![4, 9])
            .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(f.path(), &ds, true).unwrap();
        let back = load_csv(f.path(), false, Some(3)).unwrap();
        assert_eq!(back.points(), ds.points());
        assert_eq!(back.labels(), ds.labels());
    }
}
