//! CSV ingestion of covariate matrices and export of generated datasets.

use super::{DataError, Dataset};
use crate::scalar::Scalar;
use ndarray::Array2;
use std::fmt;
use std::path::Path;

/// Per-column summary reported alongside a loaded covariate matrix.
#[derive(Debug, Clone)]
pub struct ColumnStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
}

impl fmt::Display for ColumnStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "column,min,max,mean")?;
        for j in 0..self.min.len() {
            writeln!(f, "{},{},{},{}", j, self.min[j], self.max[j], self.mean[j])?;
        }
        Ok(())
    }
}

impl ColumnStats {
    fn from_matrix(m: &Array2<f64>) -> Self {
        let d = m.ncols();
        let mut stats = ColumnStats {
            min: vec![f64::INFINITY; d],
            max: vec![f64::NEG_INFINITY; d],
            mean: vec![0.0; d],
        };
        for row in m.rows() {
            for (j, &v) in row.iter().enumerate() {
                stats.min[j] = stats.min[j].min(v);
                stats.max[j] = stats.max[j].max(v);
                stats.mean[j] += v;
            }
        }
        let n = m.nrows().max(1) as f64;
        for v in &mut stats.mean {
            *v /= n;
        }
        stats
    }
}

/// Load a numeric CSV (UTF-8, comma-separated, optional header row) as an
/// n x d matrix. Ragged rows and non-numeric cells are reported with their
/// row/column location.
pub fn load_covariates_csv<P: AsRef<Path>>(path: P) -> Result<(Array2<f64>, ColumnStats), DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())
        .map_err(|e| DataError::Csv(e.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let mut parsed = Vec::with_capacity(record.len());
        let mut bad_cell: Option<(usize, String)> = None;
        for (j, field) in record.iter().enumerate() {
            match field.trim().parse::<f64>() {
                Ok(v) => parsed.push(v),
                Err(_) => {
                    bad_cell = Some((j, field.to_string()));
                    break;
                }
            }
        }
        if let Some((j, field)) = bad_cell {
            // a non-numeric first row is treated as a header
            if i == 0 {
                continue;
            }
            return Err(DataError::CsvCell {
                row: i,
                col: j,
                detail: format!("non-numeric cell {field:?}"),
            });
        }
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(DataError::CsvCell {
                    row: i,
                    col: parsed.len(),
                    detail: format!("ragged row: expected {w} fields, got {}", parsed.len()),
                });
            }
            _ => {}
        }
        rows.push(parsed);
    }
    let n = rows.len();
    let d = width.ok_or_else(|| DataError::Csv("empty csv".into()))?;
    if n == 0 {
        return Err(DataError::Csv("no data rows".into()));
    }
    let mut m = Array2::zeros((n, d));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    let stats = ColumnStats::from_matrix(&m);
    Ok((m, stats))
}

/// Write a dataset as CSV with columns x1..xd, w, s, y.
pub fn write_dataset_csv<F: Scalar, P: AsRef<Path>>(
    ds: &Dataset<F>,
    path: P,
) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(|e| DataError::Csv(e.to_string()))?;
    let d = ds.dim();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.extend(["w".to_string(), "s".to_string(), "y".to_string()]);
    writer
        .write_record(&header)
        .map_err(|e| DataError::Csv(e.to_string()))?;
    for i in 0..ds.len() {
        let mut record: Vec<String> = ds
            .covariates
            .row(i)
            .iter()
            .map(|v| v.widen().to_string())
            .collect();
        record.push(ds.treatments[i].to_string());
        record.push(ds.dosages[i].widen().to_string());
        record.push(ds.outcomes[i].widen().to_string());
        writer
            .write_record(&record)
            .map_err(|e| DataError::Csv(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}
