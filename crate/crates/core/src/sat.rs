//! Self-adaptive thresholding (SAT).
//!
//! For every class the column of predicted probabilities is sorted in
//! descending order, entries at or below the cutoff `C` are discarded, the
//! remaining entries are averaged, and the average is multiplied by the
//! scale `S` to give that class's threshold. A sample is selected as a
//! pseudo-labeled point when its confidence (the max of its row) strictly
//! exceeds the threshold of its argmax class.
//!
//! Both comparisons are strict, argmax ties break to the lowest class
//! index, and a class whose filtered column is empty falls back to
//! `tau = C` and is flagged as such.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{ProbMatrix, ProbRow};
use crate::scalar::Scalar;

/// Cutoff and scale for threshold derivation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatConfig<S: Scalar> {
    /// Cutoff `C` in (0, 1): probabilities at or below it are discarded.
    pub cutoff: S,
    /// Scale `S` in (0, 1] applied to each class's filtered average.
    pub scale: S,
}

impl<S: Scalar> Default for SatConfig<S> {
    fn default() -> Self {
        SatConfig {
            cutoff: S::from(0.5).unwrap(),
            scale: S::from(0.8).unwrap(),
        }
    }
}

impl<S: Scalar> SatConfig<S> {
    pub fn new(cutoff: S, scale: S) -> Result<Self> {
        let cfg = SatConfig { cutoff, scale };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > S::zero() && self.cutoff < S::one()) {
            return Err(Error::invalid(format!(
                "cutoff must lie in (0, 1), got {}",
                self.cutoff
            )));
        }
        if !(self.scale > S::zero() && self.scale <= S::one()) {
            return Err(Error::invalid(format!(
                "scale must lie in (0, 1], got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// How a threshold vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdProvenance {
    /// Derived from a probability matrix by the SAT rule.
    Sat,
    /// A constant broadcast over all classes.
    Fixed,
}

/// Per-class confidence thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds<S: Scalar> {
    tau: Vec<S>,
    provenance: ThresholdProvenance,
    /// Per-class flag: true when the class's filtered column was empty and
    /// the threshold fell back to the cutoff.
    fallback: Vec<bool>,
}

impl<S: Scalar> ClassThresholds<S> {
    pub fn tau(&self) -> &[S] {
        &self.tau
    }

    pub fn n_classes(&self) -> usize {
        self.tau.len()
    }

    pub fn provenance(&self) -> ThresholdProvenance {
        self.provenance
    }

    pub fn fallback_flags(&self) -> &[bool] {
        &self.fallback
    }

    pub fn is_fallback(&self, class: usize) -> bool {
        self.fallback[class]
    }

    /// Arithmetic mean of the per-class thresholds.
    pub fn class_average(&self) -> S {
        self.tau.iter().copied().sum::<S>() / S::from(self.tau.len()).unwrap()
    }
}

/// One selected (or candidate) pseudo-labeled sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel<S: Scalar> {
    /// Index into the unlabeled pool (or batch) the entry refers to.
    pub index: usize,
    /// Argmax class of the sample's probability row.
    pub label: usize,
    /// Max probability of the row.
    pub confidence: S,
}

/// Pseudo-label entries ordered by sample index, one per sample at most.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet<S: Scalar> {
    entries: Vec<PseudoLabel<S>>,
}

impl<S: Scalar> PseudoLabelSet<S> {
    /// Validates ordering and uniqueness of sample indices.
    pub fn new(entries: Vec<PseudoLabel<S>>) -> Result<Self> {
        for pair in entries.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::invalid(format!(
                    "pseudo-label indices must be strictly increasing, got {} then {}",
                    pair[0].index, pair[1].index
                )));
            }
        }
        Ok(PseudoLabelSet { entries })
    }

    /// Labels every row of a batch without filtering. Used for the online
    /// loss, where the indicator inside the loss applies the thresholds.
    pub fn from_rows(rows: &[ProbRow<S>]) -> Self {
        let entries = rows
            .iter()
            .enumerate()
            .map(|(index, row)| {
                let (label, confidence) = pseudo_label(row);
                PseudoLabel {
                    index,
                    label,
                    confidence,
                }
            })
            .collect();
        PseudoLabelSet { entries }
    }

    pub fn entries(&self) -> &[PseudoLabel<S>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fraction of entries whose label matches the hidden ground truth.
    /// `None` for an empty set.
    pub fn accuracy_against(&self, hidden_truth: &[usize]) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        let hits = self
            .entries
            .iter()
            .filter(|e| e.index < hidden_truth.len() && hidden_truth[e.index] == e.label)
            .count();
        Some(hits as f64 / self.entries.len() as f64)
    }
}

/// Argmax class and max probability of one row. Ties break to the lowest
/// class index.
pub fn pseudo_label<S: Scalar>(probs: &ProbRow<S>) -> (usize, S) {
    let values = probs.values();
    let mut best = 0;
    let mut best_p = values[0];
    for (j, &p) in values.iter().enumerate().skip(1) {
        if p > best_p {
            best = j;
            best_p = p;
        }
    }
    (best, best_p)
}

/// Derives per-class thresholds from a probability matrix.
///
/// Each column is sorted descending before filtering and averaging. The
/// sort is not just presentation: summing the filtered entries in sorted
/// order makes the threshold bit-for-bit independent of the row order of
/// the matrix and bit-for-bit equal to the sort-then-filter-then-average
/// formulation.
pub fn compute_thresholds<S: Scalar>(
    matrix: &ProbMatrix<S>,
    config: &SatConfig<S>,
) -> Result<ClassThresholds<S>> {
    config.validate()?;
    if matrix.n_unlabeled() == 0 {
        return Err(Error::invalid(
            "threshold computation needs a nonempty probability matrix",
        ));
    }
    let k = matrix.n_classes();
    let mut tau = Vec::with_capacity(k);
    let mut fallback = Vec::with_capacity(k);
    for j in 0..k {
        let mut column: Vec<S> = matrix.rows().iter().map(|r| r.values()[j]).collect();
        column.sort_by(|a, b| b.partial_cmp(a).expect("probabilities are finite"));
        // Descending order makes the filtered entries a prefix.
        let filtered: Vec<S> = column
            .iter()
            .copied()
            .take_while(|&p| p > config.cutoff)
            .collect();
        if filtered.is_empty() {
            tau.push(config.cutoff);
            fallback.push(true);
        } else {
            let mean = filtered.iter().copied().sum::<S>() / S::from(filtered.len()).unwrap();
            tau.push(config.scale * mean);
            fallback.push(false);
        }
    }
    Ok(ClassThresholds {
        tau,
        provenance: ThresholdProvenance::Sat,
        fallback,
    })
}

/// Selects every sample whose confidence strictly exceeds the threshold of
/// its pseudo-label class. Output is ordered by sample index.
pub fn select<S: Scalar>(
    matrix: &ProbMatrix<S>,
    thresholds: &ClassThresholds<S>,
) -> Result<PseudoLabelSet<S>> {
    if thresholds.n_classes() != matrix.n_classes() {
        return Err(Error::invalid(format!(
            "selection got {} thresholds for {} classes",
            thresholds.n_classes(),
            matrix.n_classes()
        )));
    }
    let tau = thresholds.tau();
    let entries = matrix
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(index, row)| {
            let (label, confidence) = pseudo_label(row);
            (confidence > tau[label]).then_some(PseudoLabel {
                index,
                label,
                confidence,
            })
        })
        .collect();
    Ok(PseudoLabelSet { entries })
}

/// The fixed-thresholding baseline: one constant for every class.
pub fn fixed_thresholds<S: Scalar>(constant: S, n_classes: usize) -> Result<ClassThresholds<S>> {
    if !(constant >= S::zero() && constant <= S::one()) {
        return Err(Error::invalid(format!(
            "fixed threshold must lie in [0, 1], got {constant}"
        )));
    }
    if n_classes == 0 {
        return Err(Error::invalid("fixed thresholds need at least one class"));
    }
    Ok(ClassThresholds {
        tau: vec![constant; n_classes],
        provenance: ThresholdProvenance::Fixed,
        fallback: vec![false; n_classes],
    })
}

/// Arithmetic mean of a threshold vector.
pub fn class_average_threshold<S: Scalar>(thresholds: &ClassThresholds<S>) -> S {
    thresholds.class_average()
}

/// Per-class columns sorted in descending order, for tracing the threshold
/// derivation step by step.
pub fn sorted_columns<S: Scalar>(matrix: &ProbMatrix<S>) -> Vec<Vec<S>> {
    (0..matrix.n_classes())
        .map(|j| {
            let mut column: Vec<S> = matrix.rows().iter().map(|r| r.values()[j]).collect();
            column.sort_by(|a, b| b.partial_cmp(a).expect("probabilities are finite"));
            column
        })
        .collect()
}
