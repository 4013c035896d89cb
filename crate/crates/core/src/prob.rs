//! Probability and loss primitives.
//!
//! Losses are reported in nats. The label-smoothing convention is
//! `q = (1 - eps) * onehot(target) + eps * uniform`, i.e. the smoothed
//! target puts `1 - eps + eps/K` on the target class and `eps/K` on every
//! other class. The masked unlabeled loss divides by the full number of
//! unlabeled samples in the batch, not by the number of selected ones, and
//! applies no label smoothing to pseudo-labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sat::{ClassThresholds, PseudoLabelSet};
use crate::scalar::Scalar;

/// Probabilities below this are clamped before taking a logarithm.
pub const LOG_PROB_FLOOR: f64 = 1e-12;

/// A single sample's predicted class distribution.
///
/// Entries are strictly positive, at most one, and sum to one within 1e-6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRow<S: Scalar> {
    values: Vec<S>,
}

impl<S: Scalar> ProbRow<S> {
    /// Validates and wraps a probability vector.
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "probability row needs at least 2 classes, got {}",
                values.len()
            )));
        }
        let one = S::one();
        let tol = S::from(1e-6).unwrap();
        let mut sum = S::zero();
        for (j, &p) in values.iter().enumerate() {
            if !p.is_finite() || p <= S::zero() || p > one {
                return Err(Error::invalid(format!(
                    "probability row entry {j} is {p}, expected a value in (0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - one).abs() > tol {
            return Err(Error::invalid(format!(
                "probability row sums to {sum}, expected 1 within 1e-6"
            )));
        }
        Ok(ProbRow { values })
    }

    /// Wraps softmax output without re-validating.
    pub(crate) fn from_normalized(values: Vec<S>) -> Self {
        debug_assert!(values.len() >= 2);
        ProbRow { values }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Predicted class probabilities for a pool of unlabeled samples, one row
/// per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbMatrix<S: Scalar> {
    rows: Vec<ProbRow<S>>,
    n_classes: usize,
}

impl<S: Scalar> ProbMatrix<S> {
    /// Builds a matrix from rows, checking that every row has `n_classes`
    /// entries. An empty matrix is representable; operations that need data
    /// reject it themselves.
    pub fn new(rows: Vec<ProbRow<S>>, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::invalid(format!(
                "probability matrix needs at least 2 classes, got {n_classes}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_classes {
                return Err(Error::invalid(format!(
                    "probability matrix row {i} has {} entries, expected {n_classes}",
                    row.len()
                )));
            }
        }
        Ok(ProbMatrix { rows, n_classes })
    }

    pub fn n_unlabeled(&self) -> usize {
        self.rows.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn rows(&self) -> &[ProbRow<S>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &ProbRow<S> {
        &self.rows[i]
    }
}

/// Numerically stable softmax over one row of logits.
///
/// The maximum logit is subtracted before exponentiation, so inputs of any
/// magnitude produce a valid distribution. Outputs are clamped to the
/// smallest positive value of `S` so every entry stays strictly positive
/// even when an exponential underflows.
pub fn softmax<S: Scalar>(logits: &[S]) -> Result<ProbRow<S>> {
    if logits.len() < 2 {
        return Err(Error::invalid(format!(
            "softmax needs at least 2 logits, got {}",
            logits.len()
        )));
    }
    if let Some(bad) = logits.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("softmax input contains {bad}")));
    }
    let max = logits
        .iter()
        .copied()
        .fold(S::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<S> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    let floor = S::min_positive_value();
    let values = exps.into_iter().map(|e| (e / sum).max(floor)).collect();
    Ok(ProbRow::from_normalized(values))
}

/// Label-smoothed cross-entropy of one prediction against a class index.
pub fn cross_entropy<S: Scalar>(probs: &ProbRow<S>, target: usize, smoothing: S) -> Result<S> {
    let k = probs.len();
    if target >= k {
        return Err(Error::invalid(format!(
            "target class {target} out of range for {k} classes"
        )));
    }
    if !(smoothing >= S::zero() && smoothing < S::one()) {
        return Err(Error::invalid(format!(
            "smoothing must lie in [0, 1), got {smoothing}"
        )));
    }
    let floor = S::from(LOG_PROB_FLOOR).unwrap();
    let uniform = smoothing / S::from(k).unwrap();
    let mut loss = S::zero();
    for (j, &p) in probs.values().iter().enumerate() {
        let q = if j == target {
            S::one() - smoothing + uniform
        } else {
            uniform
        };
        loss -= q * p.max(floor).ln();
    }
    Ok(loss)
}

/// Mean cross-entropy over a labeled batch.
pub fn labeled_loss<S: Scalar>(
    batch_probs: &[ProbRow<S>],
    batch_targets: &[usize],
    smoothing: S,
) -> Result<S> {
    if batch_probs.is_empty() {
        return Err(Error::invalid("labeled loss over an empty batch"));
    }
    if batch_probs.len() != batch_targets.len() {
        return Err(Error::invalid(format!(
            "labeled loss got {} predictions but {} targets",
            batch_probs.len(),
            batch_targets.len()
        )));
    }
    let mut sum = S::zero();
    for (probs, &target) in batch_probs.iter().zip(batch_targets) {
        sum += cross_entropy(probs, target, smoothing)?;
    }
    Ok(sum / S::from(batch_probs.len()).unwrap())
}

/// Masked cross-entropy over an unlabeled batch.
///
/// Each pseudo-label entry contributes `CE(strong-view prediction, label)`
/// only when its confidence strictly exceeds the threshold of its label's
/// class. Samples without a passing entry contribute zero, but the divisor
/// is always the full batch size.
pub fn unlabeled_loss<S: Scalar>(
    probs_strong: &[ProbRow<S>],
    pseudo_labels: &PseudoLabelSet<S>,
    thresholds: &ClassThresholds<S>,
) -> Result<S> {
    let n = probs_strong.len();
    if n == 0 {
        return Err(Error::invalid("unlabeled loss over an empty batch"));
    }
    let tau = thresholds.tau();
    let mut sum = S::zero();
    for entry in pseudo_labels.entries() {
        if entry.index >= n {
            return Err(Error::invalid(format!(
                "pseudo-label index {} out of range for batch of {n}",
                entry.index
            )));
        }
        if entry.label >= tau.len() {
            return Err(Error::invalid(format!(
                "pseudo-label class {} out of range for {} thresholds",
                entry.label,
                tau.len()
            )));
        }
        if entry.confidence > tau[entry.label] {
            sum += cross_entropy(&probs_strong[entry.index], entry.label, S::zero())?;
        }
    }
    Ok(sum / S::from(n).unwrap())
}

/// Combined objective: labeled loss plus `mu` times the unlabeled loss.
pub fn total_loss<S: Scalar>(l_labeled: S, l_unlabeled: S, mu: S) -> Result<S> {
    if !l_labeled.is_finite() || !l_unlabeled.is_finite() {
        return Err(Error::invalid(format!(
            "total loss inputs must be finite, got ({l_labeled}, {l_unlabeled})"
        )));
    }
    if !(mu >= S::zero() && mu.is_finite()) {
        return Err(Error::invalid(format!(
            "unlabeled loss weight must be a finite nonnegative value, got {mu}"
        )));
    }
    Ok(l_labeled + mu * l_unlabeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{fixed_thresholds, PseudoLabel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn row(values: &[f64]) -> ProbRow<f64> {
        ProbRow::new(values.to_vec()).unwrap()
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let p = softmax(&[0.0f64, 0.0]).unwrap();
        assert_eq!(p.values(), &[0.5, 0.5]);

        let p = softmax(&[1000.0f64, 1000.0, 1000.0]).unwrap();
        for &v in p.values() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_matches_closed_form() {
        let p = softmax(&[1.0f64, 0.0]).unwrap();
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(p.values()[0], e / (e + 1.0), epsilon = 1e-5);
        assert_abs_diff_eq!(p.values()[1], 1.0 / (e + 1.0), epsilon = 1e-5);
        assert_abs_diff_eq!(p.values()[0], 0.73106, epsilon = 1e-5);
        assert_abs_diff_eq!(p.values()[1], 0.26894, epsilon = 1e-5);
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
        assert!(softmax(&[f64::INFINITY, 0.0]).is_err());
        assert!(softmax(&[1.0f64]).is_err());
    }

    #[test]
    fn softmax_survives_extreme_spread() {
        // exp(-2e4) underflows; the floor keeps every entry positive.
        let p = softmax(&[1e4f64, -1e4]).unwrap();
        assert!(p.values().iter().all(|&v| v > 0.0));
        let sum: f64 = p.values().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn softmax_rows_are_valid_distributions(
            logits in proptest::collection::vec(-1e4f64..1e4, 2..12)
        ) {
            let p = softmax(&logits).unwrap();
            let sum: f64 = p.values().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(p.values().iter().all(|&v| v > 0.0 && v <= 1.0));
        }

        #[test]
        fn softmax_is_shift_invariant(
            logits in proptest::collection::vec(-50.0f64..50.0, 2..8),
            shift in -100.0f64..100.0,
        ) {
            let base = softmax(&logits).unwrap();
            let shifted: Vec<f64> = logits.iter().map(|&x| x + shift).collect();
            let moved = softmax(&shifted).unwrap();
            for (a, b) in base.values().iter().zip(moved.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn cross_entropy_is_nonnegative(
            logits in proptest::collection::vec(-20.0f64..20.0, 2..8),
            target_raw in 0usize..8,
            smoothing in 0.0f64..0.5,
        ) {
            let p = softmax(&logits).unwrap();
            let target = target_raw % p.len();
            let ce = cross_entropy(&p, target, smoothing).unwrap();
            prop_assert!(ce >= 0.0 && ce.is_finite());
        }
    }

    #[test]
    fn cross_entropy_of_near_perfect_prediction_is_near_zero() {
        let p = row(&[1.0 - 1e-9, 1e-9]);
        let ce = cross_entropy(&p, 0, 0.0).unwrap();
        assert!(ce >= 0.0 && ce < 1e-8, "got {ce}");
    }

    #[test]
    fn cross_entropy_of_uniform_prediction_is_ln_2() {
        let ce = cross_entropy(&row(&[0.5, 0.5]), 0, 0.0).unwrap();
        assert_abs_diff_eq!(ce, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(ce, 0.6931, epsilon = 1e-4);
    }

    #[test]
    fn cross_entropy_matches_smoothed_oracle() {
        // q = [0.9 + 0.05, 0.05] under the documented convention.
        let p = [0.7, 0.3];
        let q = [0.95, 0.05];
        let expected: f64 = -(q[0] * p[0].ln() + q[1] * p[1].ln());
        let ce = cross_entropy(&row(&p), 0, 0.1).unwrap();
        assert_abs_diff_eq!(ce, expected, epsilon = 1e-12);
    }

    #[test]
    fn cross_entropy_rejects_bad_target_and_smoothing() {
        let p = row(&[0.5, 0.5]);
        assert!(cross_entropy(&p, 2, 0.0).is_err());
        assert!(cross_entropy(&p, 0, 1.0).is_err());
        assert!(cross_entropy(&p, 0, -0.1).is_err());
    }

    #[test]
    fn labeled_loss_of_one_sample_equals_cross_entropy() {
        let p = row(&[0.8, 0.2]);
        let single = cross_entropy(&p, 0, 0.1).unwrap();
        let batch = labeled_loss(&[p.clone()], &[0], 0.1).unwrap();
        assert_eq!(batch, single);

        let two = labeled_loss(&[p.clone(), p], &[0, 0], 0.1).unwrap();
        assert_abs_diff_eq!(two, single, epsilon = 1e-15);
    }

    #[test]
    fn labeled_loss_is_the_mean_of_per_sample_terms() {
        let rows = [row(&[0.7, 0.3]), row(&[0.2, 0.8]), row(&[0.5, 0.5])];
        let targets = [0usize, 1, 0];
        let mut oracle = 0.0;
        for (r, &t) in rows.iter().zip(&targets) {
            oracle += cross_entropy(r, t, 0.0).unwrap();
        }
        oracle /= rows.len() as f64;
        let got = labeled_loss(&rows, &targets, 0.0).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-15);
    }

    #[test]
    fn labeled_loss_rejects_empty_and_mismatched_batches() {
        let rows: Vec<ProbRow<f64>> = vec![];
        assert!(labeled_loss(&rows, &[], 0.0).is_err());
        assert!(labeled_loss(&[row(&[0.5, 0.5])], &[0, 1], 0.0).is_err());
    }

    fn pseudo_set(entries: &[(usize, usize, f64)]) -> PseudoLabelSet<f64> {
        PseudoLabelSet::new(
            entries
                .iter()
                .map(|&(index, label, confidence)| PseudoLabel {
                    index,
                    label,
                    confidence,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unlabeled_loss_of_empty_selection_is_zero() {
        let strong = [row(&[0.6, 0.4]), row(&[0.3, 0.7])];
        let tau = fixed_thresholds(0.5f64, 2).unwrap();
        let loss = unlabeled_loss(&strong, &pseudo_set(&[]), &tau).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn unlabeled_loss_is_near_zero_for_perfect_strong_predictions() {
        let strong = [row(&[1.0 - 1e-9, 1e-9]), row(&[1e-9, 1.0 - 1e-9])];
        let tau = fixed_thresholds(0.0f64, 2).unwrap();
        let pseudo = pseudo_set(&[(0, 0, 0.9), (1, 1, 0.9)]);
        let loss = unlabeled_loss(&strong, &pseudo, &tau).unwrap();
        assert!(loss >= 0.0 && loss < 1e-8, "got {loss}");
    }

    #[test]
    fn unlabeled_loss_matches_brute_force_over_selected_terms() {
        let strong = [
            row(&[0.6, 0.4]),
            row(&[0.3, 0.7]),
            row(&[0.9, 0.1]),
            row(&[0.5, 0.5]),
        ];
        let tau = fixed_thresholds(0.6f64, 2).unwrap();
        // Confidences 0.7 and 0.65 pass, 0.55 and 0.6 do not (strict >).
        let pseudo = pseudo_set(&[(0, 0, 0.7), (1, 1, 0.55), (2, 0, 0.65), (3, 1, 0.6)]);
        let expected = (cross_entropy(&strong[0], 0, 0.0).unwrap()
            + cross_entropy(&strong[2], 0, 0.0).unwrap())
            / strong.len() as f64;
        let got = unlabeled_loss(&strong, &pseudo, &tau).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
    }

    #[test]
    fn unlabeled_loss_never_increases_when_thresholds_rise() {
        let strong = [
            row(&[0.6, 0.4]),
            row(&[0.3, 0.7]),
            row(&[0.9, 0.1]),
            row(&[0.45, 0.55]),
        ];
        let pseudo = pseudo_set(&[(0, 0, 0.8), (1, 1, 0.7), (2, 0, 0.95), (3, 1, 0.6)]);
        let grid = [0.0, 0.25, 0.5, 0.65, 0.75, 0.9, 1.0];
        let mut prev = f64::INFINITY;
        for &c in &grid {
            let tau = fixed_thresholds(c, 2).unwrap();
            let loss = unlabeled_loss(&strong, &pseudo, &tau).unwrap();
            assert!(
                loss <= prev,
                "loss rose from {prev} to {loss} at threshold {c}"
            );
            prev = loss;
        }
    }

    #[test]
    fn unlabeled_loss_rejects_out_of_range_indices() {
        let strong = [row(&[0.6, 0.4])];
        let tau = fixed_thresholds(0.0f64, 2).unwrap();
        let pseudo = pseudo_set(&[(3, 0, 0.9)]);
        assert!(unlabeled_loss(&strong, &pseudo, &tau).is_err());
    }

    #[test]
    fn total_loss_is_linear_in_mu() {
        assert_eq!(total_loss(1.0f64, 0.5, 0.0).unwrap(), 1.0);
        assert_eq!(total_loss(1.0f64, 0.5, 1.0).unwrap(), 1.5);
        assert_abs_diff_eq!(total_loss(0.3f64, 0.2, 2.5).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn total_loss_with_zero_mu_is_bitwise_labeled_loss() {
        for &l in &[0.0f64, 0.123456789, 3.875, 1e-9] {
            let total = total_loss(l, 0.7, 0.0).unwrap();
            assert_eq!(total.to_bits(), l.to_bits());
        }
    }

    #[test]
    fn total_loss_rejects_bad_inputs() {
        assert!(total_loss(f64::NAN, 0.0, 1.0).is_err());
        assert!(total_loss(0.0, f64::INFINITY, 1.0).is_err());
        assert!(total_loss(0.0, 0.0, -1.0).is_err());
    }
}
