use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub seed: u64,
}

/// Seeded shuffle followed by contiguous train / validation / test blocks.
pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let requested = spec.train + spec.validation + spec.test;
    if requested > dataset.len() {
        return Err(Error::Oversubscribed {
            requested,
            available: dataset.len(),
        });
    }
    if spec.train == 0 || spec.validation == 0 || spec.test == 0 {
        return Err(Error::invalid("every split needs at least one row"));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut StdRng::seed_from_u64(spec.seed));
    let (train, rest) = order.split_at(spec.train);
    let (validation, rest) = rest.split_at(spec.validation);
    let test = &rest[..spec.test];
    Ok((
        dataset.subset(train)?,
        dataset.subset(validation)?,
        dataset.subset(test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use std::collections::HashSet;

    fn toy(n: usize) -> Dataset {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        Dataset::new(Matrix::column_vector(&x), Matrix::column_vector(&x), "toy").unwrap()
    }

    #[test]
    fn oversubscription_is_an_error() {
        let spec = SplitSpec {
            train: 5,
            validation: 3,
            test: 3,
            seed: 0,
        };
        assert!(matches!(
            split_dataset(&toy(10), &spec),
            Err(Error::Oversubscribed {
                requested: 11,
                available: 10
            })
        ));
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let spec = SplitSpec {
            train: 200,
            validation: 200,
            test: 100,
            seed: 3,
        };
        let (tr, va, te) = split_dataset(&toy(500), &spec).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (200, 200, 100));
        let all: Vec<usize> = [&tr, &va, &te].iter().flat_map(|d| d.indices.clone()).collect();
        let unique: HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), all.len());
        // source indices line up with the copied rows
        for (row, &src) in tr.indices.iter().enumerate() {
            assert_eq!(tr.x.get(row, 0), src as f64);
        }
    }
}
