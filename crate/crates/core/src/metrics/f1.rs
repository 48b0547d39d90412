use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Per-class and macro-averaged F1.
///
/// The reporting class set is every class present in truth or predictions;
/// a class with zero precision and recall scores 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub per_class_f1: BTreeMap<u32, f64>,
    /// Samples of each class in the truth vector.
    pub support_counts: BTreeMap<u32, usize>,
    pub macro_f1: f64,
}

/// One-vs-rest counts for each class of a multi-class prediction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn macro_f1(truth: &[u32], predicted: &[u32]) -> Result<F1Report, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::Alignment {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty("macro F1 of zero samples"));
    }
    let classes: BTreeSet<u32> = truth.iter().chain(predicted).copied().collect();
    let mut counts: BTreeMap<u32, ClassCounts> = classes
        .iter()
        .map(|&c| (c, ClassCounts::default()))
        .collect();
    let mut support_counts: BTreeMap<u32, usize> = classes.iter().map(|&c| (c, 0)).collect();
    for (&t, &p) in truth.iter().zip(predicted) {
        *support_counts.get_mut(&t).unwrap() += 1;
        if t == p {
            counts.get_mut(&t).unwrap().tp += 1;
        } else {
            counts.get_mut(&p).unwrap().fp += 1;
            counts.get_mut(&t).unwrap().fn_ += 1;
        }
    }
    let per_class_f1: BTreeMap<u32, f64> = counts.iter().map(|(&c, k)| (c, k.f1())).collect();
    let macro_f1 = per_class_f1.values().sum::<f64>() / per_class_f1.len() as f64;
    Ok(F1Report {
        per_class_f1,
        support_counts,
        macro_f1,
    })
}

/// F1 of the positive class of a binary decision.
pub fn binary_f1(truth: &[bool], predicted: &[bool]) -> Result<f64, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::Alignment {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    let mut c = ClassCounts::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c.f1())
}

/// Dense `n_classes x n_classes` counts, rows are truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(truth: &[u32], predicted: &[u32], n_classes: usize) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::Alignment {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t as usize >= n_classes || p as usize >= n_classes {
                return Err(MetricsError::ClassRange {
                    class: t.max(p),
                    n_classes,
                });
            }
            counts[t as usize][p as usize] += 1;
        }
        Ok(Self { counts })
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.counts.iter().flatten().sum();
        let diag: usize = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        ratio(diag, total)
    }
}
