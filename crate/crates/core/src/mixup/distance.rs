use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMetric {
    #[default]
    Squared,
    Euclidean,
}

/// Dense symmetric matrix of pairwise label distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    metric: LabelMetric,
    fingerprint: String,
}

pub fn build_label_distances(y: &Matrix) -> Result<DistanceMatrix> {
    build_label_distances_with(y, LabelMetric::Squared)
}

pub fn build_label_distances_with(y: &Matrix, metric: LabelMetric) -> Result<DistanceMatrix> {
    let n = y.rows();
    if n < 2 {
        return Err(Error::ActiveSetTooSmall(n));
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let yi = y.row(i);
        for j in (i + 1)..n {
            let sq: f64 = yi.iter().zip(y.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let d = match metric {
                LabelMetric::Squared => sq,
                LabelMetric::Euclidean => sq.sqrt(),
            };
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    let mut hasher = Sha256::new();
    hasher.update((n as u64).to_le_bytes());
    for v in y.as_slice() {
        hasher.update(v.to_bits().to_le_bytes());
    }
    let fingerprint = hex::encode(&hasher.finalize()[..8]);
    Ok(DistanceMatrix {
        n,
        data,
        metric,
        fingerprint,
    })
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn metric(&self) -> LabelMetric {
        self.metric
    }

    /// Hash of the label matrix the distances were computed from.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_distance_of_scalars() {
        let d = build_label_distances(&Matrix::column_vector(&[0.0, 3.0, 1.0])).unwrap();
        assert_eq!(d.get(0, 1), 9.0);
        assert_eq!(d.get(1, 2), 4.0);
        for i in 0..3 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn euclidean_option_and_multidim() {
        let y = Matrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(build_label_distances(&y).unwrap().get(0, 1), 25.0);
        assert_eq!(
            build_label_distances_with(&y, LabelMetric::Euclidean)
                .unwrap()
                .get(0, 1),
            5.0
        );
    }

    #[test]
    fn fingerprint_tracks_labels() {
        let a = build_label_distances(&Matrix::column_vector(&[0.0, 1.0])).unwrap();
        let b = build_label_distances(&Matrix::column_vector(&[0.0, 2.0])).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert!(build_label_distances(&Matrix::column_vector(&[1.0])).is_err());
    }
}
