use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::error::{Error, Result};
use crate::mixup::DistanceMatrix;

/// Below this a restricted row sum is treated as underflowed and the row is
/// recomputed with a shift taken over the active set only.
const UNDERFLOW: f64 = 1e-250;

/// Unnormalized kernel weights `exp(-(d_ij - m_i) / b^2)` for one bandwidth,
/// where `m_i` is the smallest off-diagonal distance in row `i`. The shift
/// cancels under normalization and keeps the nearest neighbour at weight 1, so
/// tiny bandwidths do not underflow whole rows.
#[derive(Debug)]
pub struct KernelTable {
    distances: Arc<DistanceMatrix>,
    bandwidth: f64,
    weights: Vec<f64>,
}

impl KernelTable {
    pub fn new(distances: Arc<DistanceMatrix>, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!("bandwidth {bandwidth} must be positive")));
        }
        let n = distances.len();
        let inv = 1.0 / (bandwidth * bandwidth);
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            let row = distances.row(i);
            let shift = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .fold(f64::INFINITY, f64::min);
            for (j, w) in weights[i * n..(i + 1) * n].iter_mut().enumerate() {
                if j != i {
                    *w = (-(row[j] - shift) * inv).exp();
                }
            }
        }
        Ok(KernelTable {
            distances,
            bandwidth,
            weights,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn distances(&self) -> &Arc<DistanceMatrix> {
        &self.distances
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.distances.len() + j]
    }
}

/// Per-bandwidth [`KernelTable`]s over one distance matrix, built on first use.
#[derive(Debug)]
pub struct KernelCache {
    distances: Arc<DistanceMatrix>,
    tables: Mutex<Vec<Arc<KernelTable>>>,
}

impl KernelCache {
    pub fn new(distances: Arc<DistanceMatrix>) -> Self {
        KernelCache {
            distances,
            tables: Mutex::new(Vec::new()),
        }
    }

    pub fn distances(&self) -> &Arc<DistanceMatrix> {
        &self.distances
    }

    pub fn table(&self, bandwidth: f64) -> Result<Arc<KernelTable>> {
        let mut tables = self.tables.lock().expect("kernel cache poisoned");
        if let Some(t) = tables.iter().find(|t| t.bandwidth.to_bits() == bandwidth.to_bits()) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(KernelTable::new(Arc::clone(&self.distances), bandwidth)?);
        tables.push(Arc::clone(&table));
        Ok(table)
    }

    pub fn sampler(&self, bandwidth: f64, active: &[usize]) -> Result<KernelSampler> {
        KernelSampler::new(self.table(bandwidth)?, active)
    }
}

/// Partner distribution restricted to an active index set. Rows are
/// normalized over `active \ {i}` when requested.
#[derive(Clone, Debug)]
pub struct KernelSampler {
    table: Arc<KernelTable>,
    active: Vec<usize>,
    position: Vec<Option<usize>>,
}

/// Builds a sampler without caching; see [`KernelCache`] for repeated use.
pub fn sampling_probs(distances: &Arc<DistanceMatrix>, bandwidth: f64, active: &[usize]) -> Result<KernelSampler> {
    KernelSampler::new(Arc::new(KernelTable::new(Arc::clone(distances), bandwidth)?), active)
}

impl KernelSampler {
    pub fn new(table: Arc<KernelTable>, active: &[usize]) -> Result<Self> {
        let n = table.distances.len();
        let mut sorted = active.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != active.len() {
            return Err(Error::invalid("active set contains duplicates"));
        }
        if sorted.last().is_some_and(|&i| i >= n) {
            return Err(Error::invalid("active index out of range"));
        }
        if sorted.len() < 2 {
            return Err(Error::ActiveSetTooSmall(sorted.len()));
        }
        let mut position = vec![None; n];
        for (p, &i) in sorted.iter().enumerate() {
            position[i] = Some(p);
        }
        Ok(KernelSampler {
            table,
            active: sorted,
            position,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.table.bandwidth
    }

    /// Active indices in ascending order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.position.get(i).is_some_and(Option::is_some)
    }

    /// Probabilities aligned with [`Self::active`]; zero at the anchor itself.
    pub fn active_row(&self, i: usize) -> Result<Vec<f64>> {
        if !self.is_active(i) {
            return Err(Error::AnchorNotActive(i));
        }
        let mut row: Vec<f64> = self
            .active
            .iter()
            .map(|&j| if j == i { 0.0 } else { self.table.weight(i, j) })
            .collect();
        let mut total: f64 = row.iter().sum();
        if total < UNDERFLOW {
            // The nearest active neighbour is far from the global nearest one;
            // re-shift against the active set.
            let d = self.table.distances.row(i);
            let inv = 1.0 / (self.table.bandwidth * self.table.bandwidth);
            let shift = self
                .active
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| d[j])
                .fold(f64::INFINITY, f64::min);
            for (w, &j) in row.iter_mut().zip(&self.active) {
                *w = if j == i { 0.0 } else { (-(d[j] - shift) * inv).exp() };
            }
            total = row.iter().sum();
        }
        for w in &mut row {
            *w /= total;
        }
        Ok(row)
    }

    /// Full-length row over `0..n`, zero outside the active set.
    pub fn row_probs(&self, i: usize) -> Result<Vec<f64>> {
        let active_row = self.active_row(i)?;
        let mut row = vec![0.0; self.position.len()];
        for (&j, p) in self.active.iter().zip(active_row) {
            row[j] = p;
        }
        Ok(row)
    }

    pub fn prob(&self, i: usize, j: usize) -> Result<f64> {
        let row = self.active_row(i)?;
        Ok(match self.position.get(j).copied().flatten() {
            Some(p) => row[p],
            None => 0.0,
        })
    }

    pub fn sample_partner<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        let row = self.active_row(i)?;
        Ok(self.active[draw(&row, rng.random::<f64>())])
    }

    /// One partner per anchor, drawn in the order given.
    pub fn sample_partners<R: Rng + ?Sized>(&self, anchors: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        anchors.iter().map(|&i| self.sample_partner(i, rng)).collect()
    }
}

/// Inverse-cdf draw; zero-mass entries are never returned.
fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}
