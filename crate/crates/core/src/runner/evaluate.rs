use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::{Error, Result};

/// ROC AUC as the normalised Mann-Whitney statistic; tied scores share
/// their mid-rank. `labels` are 1 for the positive class.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share their mean.
        let mid = (i + 1 + j) as f64 / 2.0;
        pos_rank_sum += mid * order[i..j].iter().filter(|&&k| labels[k] == 1.0).count() as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Fraction of predictions `p >= 0.5` matching the 0/1 labels.
pub fn accuracy(scores: &[f64], labels: &[f64]) -> f64 {
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
        .count();
    hits as f64 / scores.len() as f64
}

/// Easy / mid / hard buckets of an evaluation set by quality prior.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityTerciles {
    bucket: Vec<u8>,
}

impl QualityTerciles {
    /// Ranks by prior (ties by index) and cuts the ranking into thirds.
    pub fn from_priors(priors: &[f64]) -> Self {
        let n = priors.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| priors[a].total_cmp(&priors[b]).then(a.cmp(&b)));
        let mut bucket = vec![0; n];
        for (rank, &i) in order.iter().enumerate() {
            bucket[i] = (rank * 3 / n) as u8;
        }
        Self { bucket }
    }

    pub fn bucket(&self, i: usize) -> u8 {
        self.bucket[i]
    }

    pub fn len(&self) -> usize {
        self.bucket.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bucket.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub auc: f64,
    /// Accuracy on the easy, mid and hard quality terciles.
    pub acc_by_tercile: [f64; 3],
}

pub fn evaluate(
    params: &ModelParams,
    features: &[Vec<f64>],
    labels: &[f64],
    terciles: &QualityTerciles,
) -> Result<Evaluation> {
    if features.is_empty() {
        return Err(Error::config("evaluation set is empty"));
    }
    if features.len() != labels.len() || terciles.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: features.len(),
            actual: labels.len().min(terciles.len()),
        });
    }
    let scores = features
        .iter()
        .map(|x| params.forward(x))
        .collect::<Result<Vec<_>>>()?;
    let auc = roc_auc(&scores, labels)?;
    let mut hits = [0usize; 3];
    let mut totals = [0usize; 3];
    for (i, (&p, &y)) in scores.iter().zip(labels).enumerate() {
        let b = terciles.bucket(i) as usize;
        totals[b] += 1;
        hits[b] += usize::from((p >= 0.5) == (y == 1.0));
    }
    let acc_by_tercile = std::array::from_fn(|b| {
        if totals[b] == 0 {
            0.0
        } else {
            hits[b] as f64 / totals[b] as f64
        }
    });
    Ok(Evaluation {
        accuracy: accuracy(&scores, labels),
        auc,
        acc_by_tercile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise_auc(scores: &[f64], labels: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            for (j, &yj) in labels.iter().enumerate() {
                if yi == 1.0 && yj == 0.0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_examples() {
        assert_eq!(
            roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(),
            1.0
        );
        assert_eq!(
            roc_auc(&[0.4; 6], &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(),
            0.5
        );
        // Pairs (0.35 vs 0.1, 0.4) and (0.8 vs 0.1, 0.4): three of four won.
        assert_eq!(
            roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(),
            0.75
        );
        assert!(matches!(
            roc_auc(&[0.3, 0.4], &[1.0, 1.0]),
            Err(Error::UndefinedAuc)
        ));
    }

    #[test]
    fn terciles_split_by_rank() {
        let t = QualityTerciles::from_priors(&[0.9, 0.1, 0.5, 0.5, 0.2, 0.8]);
        let b: Vec<_> = (0..6).map(|i| t.bucket(i)).collect();
        assert_eq!(b, [2, 0, 1, 1, 0, 2]);
    }

    #[test]
    fn evaluate_constant_model() {
        let p = ModelParams::zeros(2, 2);
        let x = vec![vec![0.1, 0.2]; 6];
        let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let t = QualityTerciles::from_priors(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        let e = evaluate(&p, &x, &y, &t).unwrap();
        assert_eq!(e.auc, 0.5);
        assert_eq!(e.accuracy, 0.5);
        assert_eq!(e.acc_by_tercile, [0.5, 0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_count(
            items in prop::collection::vec((0u8..6, any::<bool>()), 2..40),
        ) {
            let scores: Vec<f64> = items.iter().map(|(s, _)| f64::from(*s) / 5.0).collect();
            let labels: Vec<f64> = items.iter().map(|(_, l)| f64::from(u8::from(*l))).collect();
            match roc_auc(&scores, &labels) {
                Ok(a) => prop_assert!((a - pairwise_auc(&scores, &labels)).abs() < 1e-12),
                Err(_) => prop_assert!(labels.iter().all(|&y| y == labels[0])),
            }
        }
    }
}
