//! Regression metrics and multi-seed aggregation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Guard for zero labels in the percentage error.
pub const MAPE_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
    pub n: usize,
}

fn check(y: &Matrix, y_hat: &Matrix) -> Result<()> {
    if !y.same_shape(y_hat) {
        return Err(Error::DimensionMismatch {
            context: "metric inputs",
            expected: y.rows() * y.cols(),
            got: y_hat.rows() * y_hat.cols(),
        });
    }
    if y.rows() == 0 || y.cols() == 0 {
        return Err(Error::Empty("metric inputs"));
    }
    Ok(())
}

/// Root mean squared error over every scalar entry.
pub fn rmse(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    check(y, y_hat)?;
    let sum: f64 = y
        .as_slice()
        .iter()
        .zip(y_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / y.as_slice().len() as f64).sqrt())
}

/// Mean absolute percentage error over every scalar entry.
pub fn mape(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    check(y, y_hat)?;
    let sum: f64 = y
        .as_slice()
        .iter()
        .zip(y_hat.as_slice())
        .map(|(a, b)| (a - b).abs() / a.abs().max(MAPE_EPS))
        .sum();
    Ok(100.0 * sum / y.as_slice().len() as f64)
}

pub fn evaluate(y: &Matrix, y_hat: &Matrix) -> Result<MetricResult> {
    Ok(MetricResult {
        rmse: rmse(y, y_hat)?,
        mape: mape(y, y_hat)?,
        n: y.rows(),
    })
}

/// Mean and sample standard deviation (zero for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("values to summarize"));
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let std = if values.len() == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)).sqrt()
        };
        Ok(Summary { mean, std })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(3);
        write!(f, "{:.p$} ± {:.p$}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub results: Vec<MetricResult>,
    pub rmse: Summary,
    pub mape: Summary,
}

impl SeedAggregate {
    pub fn count(&self) -> usize {
        self.results.len()
    }
}

pub fn aggregate_seeds(results: &[MetricResult]) -> Result<SeedAggregate> {
    if results.is_empty() {
        return Err(Error::Empty("seed results"));
    }
    let rmse: Vec<f64> = results.iter().map(|r| r.rmse).collect();
    let mape: Vec<f64> = results.iter().map(|r| r.mape).collect();
    Ok(SeedAggregate {
        results: results.to_vec(),
        rmse: Summary::of(&rmse)?,
        mape: Summary::of(&mape)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Matrix::column_vector(&[1.0, 2.0]);
        let b = Matrix::column_vector(&[1.0]);
        assert!(rmse(&a, &b).is_err());
        assert!(mape(&a, &b).is_err());
        assert!(aggregate_seeds(&[]).is_err());
    }

    #[test]
    fn summary_formatting() {
        let s = Summary::of(&[1.0, 3.0]).unwrap();
        assert_eq!(s.to_string(), "2.000 ± 1.414");
        assert_eq!(format!("{s:.1}"), "2.0 ± 1.4");
    }
}
