//! Classification report and ROC analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Indexed by class label (0 = reject, 1 = accept).
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
    pub macro_avg: AveragedMetrics,
    pub weighted_avg: AveragedMetrics,
    pub support: usize,
    /// Cells whose denominator was zero and were reported as 0, e.g.
    /// `precision[1]`.
    pub zero_division: Vec<String>,
}

impl ClassificationReport {
    pub fn macro_f1(&self) -> f64 {
        self.macro_avg.f1
    }
}

fn check_labels(y: &[u8], what: &str) -> Result<()> {
    match y.iter().find(|&&v| v > 1) {
        Some(v) => Err(Error::Precondition(format!(
            "{what} contains label {v}; expected 0 or 1"
        ))),
        None => Ok(()),
    }
}

pub fn classification_report(y_true: &[u8], y_pred: &[u8]) -> Result<ClassificationReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Precondition(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    check_labels(y_true, "y_true")?;
    check_labels(y_pred, "y_pred")?;
    // cm[t][p]
    let mut cm = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm[t as usize][p as usize] += 1;
    }
    let n = y_true.len();
    let mut zero_division = Vec::new();
    fn ratio(num: usize, den: usize, cell: String, flags: &mut Vec<String>) -> f64 {
        if den == 0 {
            flags.push(cell);
            0.0
        } else {
            num as f64 / den as f64
        }
    }
    let mut classes = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; 2];
    for c in 0..2 {
        let tp = cm[c][c];
        let predicted = cm[0][c] + cm[1][c];
        let support = cm[c][0] + cm[c][1];
        let precision = ratio(tp, predicted, format!("precision[{c}]"), &mut zero_division);
        let recall = ratio(tp, support, format!("recall[{c}]"), &mut zero_division);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            zero_division.push(format!("f1[{c}]"));
            0.0
        };
        classes[c] = ClassMetrics {
            precision,
            recall,
            f1,
            support,
        };
    }
    let accuracy = if n == 0 {
        zero_division.push("accuracy".into());
        0.0
    } else {
        (cm[0][0] + cm[1][1]) as f64 / n as f64
    };
    let avg = |weights: [f64; 2]| AveragedMetrics {
        precision: weights[0] * classes[0].precision + weights[1] * classes[1].precision,
        recall: weights[0] * classes[0].recall + weights[1] * classes[1].recall,
        f1: weights[0] * classes[0].f1 + weights[1] * classes[1].f1,
    };
    let macro_avg = avg([0.5, 0.5]);
    let weighted_avg = if n == 0 {
        avg([0.0, 0.0])
    } else {
        avg([
            classes[0].support as f64 / n as f64,
            classes[1].support as f64 / n as f64,
        ])
    };
    Ok(ClassificationReport {
        classes,
        accuracy,
        macro_avg,
        weighted_avg,
        support: n,
        zero_division,
    })
}

/// Predicted label is 1 iff the score reaches `threshold`.
pub fn threshold_labels(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| (s >= threshold) as u8).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores at or above this are called positive; the first point uses +inf.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve over the distinct scores (descending) and its trapezoid area,
/// which equals the tie-corrected Mann-Whitney statistic.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<Roc> {
    if y_true.len() != scores.len() {
        return Err(Error::Precondition(format!(
            "{} labels but {} scores",
            y_true.len(),
            scores.len()
        )));
    }
    check_labels(y_true, "y_true")?;
    let pos = y_true.iter().filter(|&&y| y == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Precondition("ROC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        let (tp0, fp0) = (tp, fp);
        while i < idx.len() && scores[idx[i]].total_cmp(&s).is_eq() {
            if y_true[idx[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // trapezoid in count units; normalized at the end
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(Roc {
        points,
        auc: auc / (pos as f64 * neg as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_confusion_matrix() {
        let r = classification_report(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!(r.classes[1].precision, 1.0);
        assert_eq!(r.classes[1].recall, 0.5);
        assert!((r.classes[1].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.75);
        assert!(r.zero_division.is_empty());
    }

    #[test]
    fn all_reject_on_imbalanced_data() {
        let y: Vec<u8> = (0..100).map(|i| (i < 5) as u8).collect();
        let r = classification_report(&y, &[0; 100]).unwrap();
        assert_eq!(r.accuracy, 0.95);
        assert_eq!(r.classes[1].recall, 0.0);
        assert!(r.zero_division.contains(&"precision[1]".to_string()));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(classification_report(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]).unwrap().auc, 0.75);
        assert_eq!(roc_auc(&[1, 0, 1], &[1.0, 0.0, 1.0]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[1, 0, 1, 0], &[0.3; 4]).unwrap().auc, 0.5);
        assert!(roc_auc(&[1, 1], &[0.3, 0.2]).is_err());
    }

    #[test]
    fn curve_ends_at_one_one() {
        let roc = roc_auc(&[1, 0, 0, 1, 0], &[0.2, 0.4, 0.4, 0.9, 0.1]).unwrap();
        let last = roc.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(roc.points.windows(2).all(|w| w[0].threshold > w[1].threshold));
    }
}
