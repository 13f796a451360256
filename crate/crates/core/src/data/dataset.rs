use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Features `x` (n x d) and labels `y` (n x e). `indices` records, for every
/// row, its position in the dataset it was cut from.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
    pub feature_names: Option<Vec<String>>,
    pub origin: String,
    pub indices: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix, origin: impl Into<String>) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Empty("dataset"));
        }
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch {
                context: "label rows",
                expected: x.rows(),
                got: y.rows(),
            });
        }
        if y.cols() == 0 {
            return Err(Error::invalid("labels need at least one column"));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        let n = x.rows();
        Ok(Self {
            x,
            y,
            feature_names: None,
            origin: origin.into(),
            indices: (0..n).collect(),
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = Some(names);
        self
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn label_dim(&self) -> usize {
        self.y.cols()
    }

    /// Rows at `rows`, in that order. Source indices are carried over.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::Empty("subset"));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(Error::invalid(format!(
                "row {bad} out of range for a dataset of {} rows",
                self.len()
            )));
        }
        Ok(Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
            feature_names: self.feature_names.clone(),
            origin: self.origin.clone(),
            indices: rows.iter().map(|&r| self.indices[r]).collect(),
        })
    }

    pub fn with_labels(&self, y: Matrix) -> Result<Dataset> {
        if !y.same_shape(&self.y) {
            return Err(Error::DimensionMismatch {
                context: "replacement labels",
                expected: self.y.rows(),
                got: y.rows(),
            });
        }
        Ok(Dataset { y, ..self.clone() })
    }
}
