//! OOD evaluation metrics: threshold selection at a target TPR, the false
//! positive rate at that threshold, and the rank-based AUROC.

use crate::error::{HbError, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Per-query scores with ID/OOD ground truth. Scores must be finite and
/// both sides nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset<F: Scalar = f64> {
    id_scores: Vec<F>,
    ood_scores: Vec<F>,
}

impl<F: Scalar> ScoredDataset<F> {
    pub fn new(id_scores: Vec<F>, ood_scores: Vec<F>) -> Result<Self> {
        if id_scores.is_empty() {
            return Err(HbError::EmptyInput("id scores"));
        }
        if ood_scores.is_empty() {
            return Err(HbError::EmptyInput("ood scores"));
        }
        if let Some(index) = id_scores.iter().position(|s| !s.is_finite()) {
            return Err(HbError::NonFinite {
                what: "id scores",
                index,
            });
        }
        if let Some(index) = ood_scores.iter().position(|s| !s.is_finite()) {
            return Err(HbError::NonFinite {
                what: "ood scores",
                index,
            });
        }
        Ok(Self {
            id_scores,
            ood_scores,
        })
    }

    pub fn id_scores(&self) -> &[F] {
        &self.id_scores
    }

    pub fn ood_scores(&self) -> &[F] {
        &self.ood_scores
    }
}

/// Metric bundle for one scored dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodMetrics {
    /// False positive rate at the chosen TPR target (0.95 by default).
    pub fpr95: f64,
    /// Area under the ROC curve.
    pub auroc: f64,
    /// The threshold realizing the TPR target.
    pub gamma: f64,
}

/// The largest threshold `gamma` such that at least `tpr` of the ID scores
/// satisfy `s >= gamma`: the `ceil(tpr * n)`-th largest ID score.
pub fn threshold_at_tpr<F: Scalar>(id_scores: &[F], tpr: f64) -> Result<F> {
    if id_scores.is_empty() {
        return Err(HbError::EmptyInput("id scores"));
    }
    if !(tpr > 0.0 && tpr <= 1.0) {
        return Err(HbError::InvalidParameter {
            name: "tpr",
            reason: format!("must lie in (0, 1], got {tpr}"),
        });
    }
    if let Some(index) = id_scores.iter().position(|s| !s.is_finite()) {
        return Err(HbError::NonFinite {
            what: "id scores",
            index,
        });
    }
    let mut sorted = id_scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite scores"));
    let k = (tpr * id_scores.len() as f64).ceil() as usize;
    Ok(sorted[k.clamp(1, id_scores.len()) - 1])
}

/// Fraction of OOD scores at or above the TPR threshold of the ID scores.
pub fn fpr_at_tpr<F: Scalar>(data: &ScoredDataset<F>, tpr: f64) -> Result<f64> {
    let gamma = threshold_at_tpr(data.id_scores(), tpr)?;
    let fp = data.ood_scores().iter().filter(|&&s| s >= gamma).count();
    Ok(fp as f64 / data.ood_scores().len() as f64)
}

/// Rank-based AUROC: `P(s_id > s_ood) + 1/2 P(s_id = s_ood)`, computed by
/// sorting with midrank tie handling (the Mann-Whitney statistic, equal to
/// the trapezoidal area under the swept ROC curve).
pub fn auroc<F: Scalar>(data: &ScoredDataset<F>) -> Result<f64> {
    let n_id = data.id_scores().len();
    let n_ood = data.ood_scores().len();
    let mut all: Vec<(F, bool)> = data
        .id_scores()
        .iter()
        .map(|&s| (s, true))
        .chain(data.ood_scores().iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));

    // midranks over tie groups; accumulate the ID rank sum
    let mut rank_sum_id = 0.0f64;
    let mut i = 0usize;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for item in all.iter().take(j + 1).skip(i) {
            if item.1 {
                rank_sum_id += midrank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_id - (n_id * (n_id + 1)) as f64 / 2.0;
    Ok(u / (n_id as f64 * n_ood as f64))
}

/// FPR at the TPR target, AUROC, and the threshold, in one pass.
pub fn evaluate<F: Scalar>(data: &ScoredDataset<F>, tpr: f64) -> Result<OodMetrics> {
    let gamma = threshold_at_tpr(data.id_scores(), tpr)?;
    Ok(OodMetrics {
        fpr95: fpr_at_tpr(data, tpr)?,
        auroc: auroc(data)?,
        gamma: gamma.to_f64().expect("finite score"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force pair counting oracle for the AUROC.
    pub(crate) fn auroc_bruteforce(id: &[f64], ood: &[f64]) -> f64 {
        let mut total = 0.0;
        for &a in id {
            for &b in ood {
                if a > b {
                    total += 1.0;
                } else if a == b {
                    total += 0.5;
                }
            }
        }
        total / (id.len() * ood.len()) as f64
    }

    #[test]
    fn threshold_examples() {
        // tpr = 1 selects the minimum
        let scores: Vec<f64> = vec![3.0, 1.0, 2.0];
        assert_eq!(threshold_at_tpr(&scores, 1.0).unwrap(), 1.0);
        // 1..=100 at 0.95: 95 scores lie at or above 6
        let scores: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert_eq!(threshold_at_tpr(&scores, 0.95).unwrap(), 6.0);
        // all-equal scores
        let scores = vec![2.5f64; 7];
        assert_eq!(threshold_at_tpr(&scores, 0.4).unwrap(), 2.5);
        assert_eq!(threshold_at_tpr(&scores, 1.0).unwrap(), 2.5);
    }

    #[test]
    fn threshold_input_validation() {
        let empty: Vec<f64> = vec![];
        assert!(threshold_at_tpr(&empty, 0.95).is_err());
        assert!(threshold_at_tpr(&[1.0f64], 0.0).is_err());
        assert!(threshold_at_tpr(&[1.0f64], 1.5).is_err());
        assert!(threshold_at_tpr(&[f64::NAN], 0.95).is_err());
    }

    #[test]
    fn fpr_examples() {
        let id: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        // OOD strictly below the ID minimum
        let data = ScoredDataset::new(id.clone(), vec![0.0, -1.0, 0.5]).unwrap();
        assert_eq!(fpr_at_tpr(&data, 0.95).unwrap(), 0.0);
        // same multiset: gamma = 6 keeps 95 of the 100 OOD scores
        let data = ScoredDataset::new(id.clone(), id.clone()).unwrap();
        assert_abs_diff_eq!(fpr_at_tpr(&data, 0.95).unwrap(), 0.95, epsilon = 1e-15);
        // OOD entirely above the ID maximum
        let data = ScoredDataset::new(id, vec![1000.0, 2000.0]).unwrap();
        assert_eq!(fpr_at_tpr(&data, 0.95).unwrap(), 1.0);
    }

    #[test]
    fn auroc_examples() {
        // perfect separation
        let data = ScoredDataset::new(vec![3.0, 4.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(auroc(&data).unwrap(), 1.0);
        // identical multisets
        let data = ScoredDataset::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(auroc(&data).unwrap(), 0.5, epsilon = 1e-15);
        // 3 of 4 pairs won
        let data = ScoredDataset::new(vec![2.0, 4.0], vec![1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(auroc(&data).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn auroc_complement_under_side_swap() {
        let id = vec![0.3, 1.7, -0.2, 0.9];
        let ood = vec![0.1, -1.0, 0.4];
        let a = auroc(&ScoredDataset::new(id.clone(), ood.clone()).unwrap()).unwrap();
        let b = auroc(&ScoredDataset::new(ood, id).unwrap()).unwrap();
        assert_abs_diff_eq!(a + b, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn metrics_invariant_under_monotone_transform() {
        let id = vec![0.3, 1.7, -0.2, 0.9, 0.9, 2.4];
        let ood = vec![0.1, -1.0, 0.4, 0.9];
        let data = ScoredDataset::new(id.clone(), ood.clone()).unwrap();
        let f = |v: f64| (3.0 * v).exp();
        let tdata = ScoredDataset::new(
            id.iter().map(|&v| f(v)).collect(),
            ood.iter().map(|&v| f(v)).collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            auroc(&data).unwrap(),
            auroc(&tdata).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            fpr_at_tpr(&data, 0.75).unwrap(),
            fpr_at_tpr(&tdata, 0.75).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn decide_round_trip_at_metric_threshold() {
        use crate::energy::{decide, Decision};
        let id: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let gamma = threshold_at_tpr(&id, 0.95).unwrap();
        let kept = id
            .iter()
            .filter(|&&s| decide(s, gamma) == Decision::Id)
            .count();
        assert!(kept as f64 / id.len() as f64 >= 0.95);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Sorting-based AUROC equals brute-force pair counting exactly.
            #[test]
            fn auroc_matches_bruteforce(
                id in proptest::collection::vec(-50i32..50, 1..60),
                ood in proptest::collection::vec(-50i32..50, 1..60),
            ) {
                // integer-derived scores provoke plenty of ties
                let id: Vec<f64> = id.into_iter().map(|v| v as f64 / 4.0).collect();
                let ood: Vec<f64> = ood.into_iter().map(|v| v as f64 / 4.0).collect();
                let data = ScoredDataset::new(id.clone(), ood.clone()).unwrap();
                let fast = auroc(&data).unwrap();
                let slow = auroc_bruteforce(&id, &ood);
                prop_assert!((fast - slow).abs() < 1e-12);
            }

            // The threshold rule is maximal: gamma itself meets the target
            // and any strictly larger candidate from the scores does not.
            #[test]
            fn threshold_is_maximal(
                scores in proptest::collection::vec(-100i32..100, 1..50),
                tpr_pct in 1u32..=100,
            ) {
                let scores: Vec<f64> = scores.into_iter().map(|v| v as f64 / 8.0).collect();
                let tpr = tpr_pct as f64 / 100.0;
                let gamma = threshold_at_tpr(&scores, tpr).unwrap();
                let frac_at = scores.iter().filter(|&&s| s >= gamma).count() as f64
                    / scores.len() as f64;
                prop_assert!(frac_at >= tpr - 1e-12);
                for &cand in scores.iter().filter(|&&s| s > gamma) {
                    let frac = scores.iter().filter(|&&s| s >= cand).count() as f64
                        / scores.len() as f64;
                    prop_assert!(frac < tpr + 1e-12);
                }
            }
        }
    }
}
