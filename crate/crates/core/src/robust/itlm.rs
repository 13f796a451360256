use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::floor_count;

/// A selected clean subset. `indices` are ascending; `losses` are the
/// per-sample losses (over the whole set) that drove the choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanSelection {
    pub indices: Vec<usize>,
    pub tau: f64,
    pub losses: Vec<f64>,
}

impl CleanSelection {
    /// Every index of an `n`-sample set.
    pub fn all(n: usize) -> Self {
        CleanSelection {
            indices: (0..n).collect(),
            tau: 1.0,
            losses: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("clean ratio {tau} must lie in (0, 1]")));
    }
    Ok(())
}

/// Keeps the `floor(tau * n)` smallest losses; equal losses go to the lower
/// index first.
pub fn itlm_select(losses: &[f64], tau: f64) -> Result<CleanSelection> {
    check_tau(tau)?;
    if losses.is_empty() {
        return Err(Error::Empty("loss vector"));
    }
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
    let mut indices = order[..floor_count(tau, losses.len())].to_vec();
    indices.sort_unstable();
    Ok(CleanSelection {
        indices,
        tau,
        losses: losses.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_smallest() {
        assert_eq!(itlm_select(&[3.0, 1.0, 2.0], 2.0 / 3.0).unwrap().indices, vec![1, 2]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        assert_eq!(itlm_select(&[1.0, 1.0, 1.0], 1.0 / 3.0).unwrap().indices, vec![0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(itlm_select(&[], 0.5).is_err());
        assert!(itlm_select(&[1.0], 0.0).is_err());
        assert!(itlm_select(&[1.0], 1.2).is_err());
    }

    #[test]
    fn full_ratio_keeps_everything() {
        let s = itlm_select(&[5.0, 0.1, 3.0, 3.0], 1.0).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2, 3]);
        assert_eq!(
            s,
            CleanSelection {
                losses: vec![5.0, 0.1, 3.0, 3.0],
                ..CleanSelection::all(4)
            }
        );
    }
}
