use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

/// One labeled sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: usize,
    pub sequence: SkeletonSequence,
}

/// Labeled sequences sharing one skeleton layout, plus the class names.
///
/// Invariants: at least one sample; every sample has `num_joints` joints in
/// `coord_dim` dimensions; every label indexes `label_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDataset {
    label_names: Vec<String>,
    num_joints: usize,
    coord_dim: usize,
    samples: Vec<Sample>,
}

impl CanonicalDataset {
    pub fn new(label_names: Vec<String>, num_joints: usize, coord_dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("dataset has no samples".into()));
        }
        if label_names.is_empty() {
            return Err(Error::InvalidInput("dataset has no classes".into()));
        }
        for s in &samples {
            if s.sequence.num_joints() != num_joints || s.sequence.coord_dim() != coord_dim {
                return Err(Error::InvalidInput(format!(
                    "sample `{}` is {}x{}, dataset is {num_joints}x{coord_dim}",
                    s.id,
                    s.sequence.num_joints(),
                    s.sequence.coord_dim()
                )));
            }
            if s.label >= label_names.len() {
                return Err(Error::InvalidInput(format!(
                    "sample `{}` has unknown label {} ({} classes)",
                    s.id,
                    s.label,
                    label_names.len()
                )));
            }
        }
        Ok(Self {
            label_names,
            num_joints,
            coord_dim,
            samples,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn num_joints(&self) -> usize {
        self.num_joints
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    /// Samples per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Looks a sample up by id, or by decimal position if no id matches.
    pub fn find(&self, selector: &str) -> Option<&Sample> {
        self.samples
            .iter()
            .find(|s| s.id == selector)
            .or_else(|| selector.parse::<usize>().ok().and_then(|i| self.samples.get(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> SkeletonSequence {
        SkeletonSequence::new(2, 2, vec![0.0; 8]).unwrap()
    }

    #[test]
    fn invariants() {
        let names = vec!["a".to_string(), "b".to_string()];
        let ok = Sample {
            id: "s0".into(),
            label: 1,
            sequence: seq(),
        };
        assert!(CanonicalDataset::new(names.clone(), 2, 2, vec![ok.clone()]).is_ok());
        assert!(CanonicalDataset::new(names.clone(), 2, 2, vec![]).is_err());
        assert!(CanonicalDataset::new(names.clone(), 3, 2, vec![ok.clone()]).is_err());
        let bad = Sample { label: 2, ..ok };
        assert!(CanonicalDataset::new(names, 2, 2, vec![bad]).is_err());
    }
}
