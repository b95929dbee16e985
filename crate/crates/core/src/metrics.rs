//! Confusion matrices, accuracy and support-weighted F1 (WAF).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `classes × classes` counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        (0..self.classes).map(|p| self.get(class, p)).sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, class)).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        for c in [truth, predicted] {
            if c >= self.classes {
                return Err(Error::ClassOutOfRange {
                    class: c,
                    classes: self.classes,
                });
            }
        }
        self.counts[truth * self.classes + predicted] += 1;
        Ok(())
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm.add(t, p)?;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub waf: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassScore>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1; F1 is 0 when precision + recall is 0.
pub fn class_scores(cm: &ConfusionMatrix) -> Vec<ClassScore> {
    (0..cm.classes())
        .map(|k| {
            let tp = cm.get(k, k);
            let precision = ratio(tp, cm.predicted(k));
            let recall = ratio(tp, cm.support(k));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                precision,
                recall,
                f1,
                support: cm.support(k),
            }
        })
        .collect()
}

/// Weighted-average F1: per-class F1 weighted by true-class support.
pub fn waf(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(report(cm)?.waf)
}

pub fn report(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::UndefinedMetric("no scored samples".into()));
    }
    let per_class = class_scores(cm);
    let waf = per_class
        .iter()
        .map(|s| s.support as f64 * s.f1)
        .sum::<f64>()
        / n as f64;
    Ok(MetricReport {
        waf,
        accuracy: cm.correct() as f64 / n as f64,
        per_class,
    })
}

/// Convenience: WAF straight from label lists.
pub fn waf_of(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<f64> {
    waf(&confusion(y_true, y_pred, classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!((cm.get(0, 0), cm.get(1, 1), cm.get(0, 1)), (1, 1, 0));
        assert_eq!(confusion(&[], &[], 3).unwrap(), ConfusionMatrix::new(3));
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!((cm.get(0, 0), cm.get(0, 1), cm.get(1, 1), cm.get(1, 0)), (1, 1, 1, 0));
    }

    #[test]
    fn confusion_errors() {
        assert!(matches!(confusion(&[0], &[], 2), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion(&[2], &[0], 2), Err(Error::ClassOutOfRange { class: 2, .. })));
    }

    #[test]
    fn waf_examples() {
        assert_eq!(waf_of(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap(), 1.0);
        let w = waf_of(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(waf(&ConfusionMatrix::new(2)), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn zero_support_class_has_no_weight() {
        // class 2 never occurs in truth but is predicted once
        let r = report(&confusion(&[0, 1], &[0, 2], 3).unwrap()).unwrap();
        assert_eq!(r.per_class[2].support, 0);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert!((r.waf - 0.5).abs() < 1e-15);
        assert!((r.accuracy - 0.5).abs() < 1e-15);
    }
}
