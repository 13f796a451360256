use crate::data::NoiseRecord;
use crate::robust::CleanSelection;

/// Percentage of truly corrupted samples left out of the clean set, or `None`
/// when nothing was corrupted.
pub fn detection_accuracy(selection: &CleanSelection, record: &NoiseRecord) -> Option<f64> {
    if record.indices.is_empty() {
        return None;
    }
    let excluded = record.indices.iter().filter(|&&i| !selection.contains(i)).count();
    Some(100.0 * excluded as f64 / record.indices.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::NoiseKind;

    fn record(indices: Vec<usize>) -> NoiseRecord {
        NoiseRecord {
            kind: NoiseKind::Gaussian,
            rate: 0.3,
            magnitude: 2.0,
            original_labels: vec![vec![0.0]; indices.len()],
            indices,
            sigma: None,
            max: None,
        }
    }

    fn selected(indices: Vec<usize>) -> CleanSelection {
        CleanSelection {
            indices,
            tau: 0.5,
            losses: Vec::new(),
        }
    }

    #[test]
    fn counts_excluded_noisy_samples() {
        assert_eq!(
            detection_accuracy(&selected(vec![0, 1]), &record(vec![2, 3])),
            Some(100.0)
        );
        assert_eq!(
            detection_accuracy(&selected(vec![2, 3]), &record(vec![2, 3])),
            Some(0.0)
        );
        assert_eq!(
            detection_accuracy(&selected(vec![0, 4, 9]), &record(vec![1, 2, 3, 4])),
            Some(75.0)
        );
        assert_eq!(detection_accuracy(&selected(vec![0]), &record(vec![])), None);
    }
}
