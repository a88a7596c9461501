//! Small evaluation helpers: argmax predictions, accuracy, and a
//! rank-based AUC.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Row-wise argmax of a logit matrix (first maximum wins ties).
pub fn argmax_rows(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Fraction of matching entries.
pub fn accuracy(pred: &[usize], labels: &[usize]) -> Result<f64> {
    if pred.len() != labels.len() || pred.is_empty() {
        return Err(Error::Contract(format!(
            "accuracy needs equally many non-empty predictions and labels, got {} and {}",
            pred.len(),
            labels.len()
        )));
    }
    let hits = pred.iter().zip(labels.iter()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Area under the ROC curve by the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// Labels are 0 (negative) and 1 (positive); both classes must be present.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Contract(format!(
            "auc needs equally many non-empty scores and labels, got {} and {}",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Contract(format!(
            "auc labels must be 0 or 1, got {bad}"
        )));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Contract(
            "auc is undefined with a single class present".into(),
        ));
    }
    let mut wins = 0.0;
    for (sp, yp) in scores.iter().zip(labels.iter()) {
        if *yp != 1 {
            continue;
        }
        for (sn, yn) in scores.iter().zip(labels.iter()) {
            if *yn != 0 {
                continue;
            }
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos * neg) as f64)
}
