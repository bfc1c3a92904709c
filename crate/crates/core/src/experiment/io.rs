//! CSV ingestion and export.

use std::path::Path;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};

/// Load a headed, comma-separated file. Every column except `label_column`
/// is a numeric feature, in file order. For classification the two distinct
/// raw label strings map to -1 (lexicographically smaller) and +1.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("label column `{name}` not found in {}", path.display())))?,
        ),
        None if task.needs_labels() => {
            return Err(Error::Config(format!("{task} needs a label column")));
        }
        None => None,
    };
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(headers.len());
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: headers.get(c).unwrap_or("?").to_string(),
                message: format!("`{cell}` is not a number"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("csv").to_string();
    let labels = match label_idx {
        None => None,
        Some(_) if !task.needs_labels() => None,
        Some(c) if task.is_classification() => Some(binary_labels(&raw_labels, headers.get(c).unwrap_or("?"))?),
        Some(c) => Some(
            raw_labels
                .iter()
                .enumerate()
                .map(|(r, s)| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        row: r + 1,
                        column: headers.get(c).unwrap_or("?").to_string(),
                        message: format!("`{s}` is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
    };
    Dataset::new(name, rows, labels)
}

fn binary_labels(raw: &[String], column: &str) -> Result<Vec<f64>> {
    let mut classes: Vec<&str> = raw.iter().map(String::as_str).collect();
    classes.sort_unstable();
    classes.dedup();
    match classes.len() {
        2 => Ok(raw.iter().map(|s| if s == classes[0] { -1.0 } else { 1.0 }).collect()),
        1 => match classes[0].parse::<f64>() {
            Ok(v) if v == 1.0 || v == -1.0 => Ok(vec![v; raw.len()]),
            _ => Err(Error::InvalidDataset(format!("column `{column}` has a single non +-1 class"))),
        },
        k => Err(Error::InvalidDataset(format!("column `{column}` has {k} classes, expected 2"))),
    }
}

/// Write features as `x0..x{d-1}` plus a trailing `label` column if present.
/// Values use the shortest representation that reads back bit-identically.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dataset.d()).map(|j| format!("x{j}")).collect();
    if dataset.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = dataset.point(i).iter().map(|v| v.to_string()).collect();
        if let Some(y) = dataset.label(i) {
            rec.push(y.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::synth::{generate_synthetic, SyntheticSpec};
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn string_labels_map_lexicographically() {
        let f = file("x,y,label\n0,0,a\n1,1,b\n2,2,b\n");
        let ds = load_csv(f.path(), Some("label"), Task::LogisticRegression).unwrap();
        assert_eq!((ds.n(), ds.d()), (3, 2));
        assert_eq!(ds.labels().unwrap(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn missing_label_column() {
        let f = file("x,y\n0,0\n");
        assert!(matches!(load_csv(f.path(), Some("label"), Task::Svm), Err(Error::Config(_))));
        assert!(matches!(load_csv(f.path(), None, Task::Svm), Err(Error::Config(_))));
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let f = file("x,y,label\n0,0,1\n1,oops,1\n");
        match load_csv(f.path(), Some("label"), Task::LinearRegression) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_classes_rejected() {
        let f = file("x,label\n0,a\n1,b\n2,c\n");
        assert!(load_csv(f.path(), Some("label"), Task::Svm).is_err());
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let spec: SyntheticSpec = "blobs:n=64,d=5".parse().unwrap();
        let ds = generate_synthetic(&spec, 8).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path()).unwrap();
        let back = load_csv(f.path(), Some("label"), Task::Svm).unwrap();
        for i in 0..ds.n() {
            for (a, b) in ds.point(i).iter().zip(back.point(i)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert_eq!(ds.labels(), back.labels());
    }
}
