use std::fs::File;
use std::path::Path;

use crate::data::csv::parse_table;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reads a headed CSV whose columns are the channels of a series (one row per time step).
pub fn load_series_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (_, table) = parse_table(file)?;
    Ok(table)
}

/// Sliding-window samples over a `T x c` series. Sample `t` uses rows
/// `t..t + window` flattened time-major as features and row
/// `t + window + horizon - 1` as the label, giving `T - window - horizon + 1` samples.
pub fn window_timeseries(series: &Matrix, window: usize, horizon: usize) -> Result<Dataset> {
    if window == 0 || horizon == 0 {
        return Err(Error::invalid("window and horizon must both be at least 1"));
    }
    let len = series.rows();
    if len < window + horizon {
        return Err(Error::SeriesTooShort { len, window, horizon });
    }
    let channels = series.cols();
    let count = len - window - horizon + 1;
    let mut x = Vec::with_capacity(count * window * channels);
    let mut y = Vec::with_capacity(count * channels);
    for t in 0..count {
        for s in t..t + window {
            x.extend_from_slice(series.row(s));
        }
        y.extend_from_slice(series.row(t + window + horizon - 1));
    }
    Dataset::new(
        Matrix::from_vec(count, window * channels, x)?,
        Matrix::from_vec(count, channels, y)?,
        "timeseries",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize, channels: usize) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|t| (0..channels).map(|c| (t * 10 + c) as f64).collect())
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn count_matches_enumeration() {
        let ds = window_timeseries(&ramp(10, 1), 3, 2).unwrap();
        assert_eq!(ds.len(), 6);
        // sample 0: rows 0,1,2 -> label row 4
        assert_eq!(ds.x.row(0), &[0.0, 10.0, 20.0]);
        assert_eq!(ds.y.row(0), &[40.0]);
        assert_eq!(ds.y.row(5), &[90.0]);
    }

    #[test]
    fn exchange_rate_shape() {
        let ds = window_timeseries(&ramp(200, 8), 168, 12).unwrap();
        assert_eq!(ds.feature_dim(), 1344);
        assert_eq!(ds.label_dim(), 8);
        assert_eq!(ds.len(), 200 - 168 - 12 + 1);
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(matches!(
            window_timeseries(&ramp(4, 1), 3, 2),
            Err(Error::SeriesTooShort { .. })
        ));
        assert_eq!(window_timeseries(&ramp(5, 1), 3, 2).unwrap().len(), 1);
    }
}
