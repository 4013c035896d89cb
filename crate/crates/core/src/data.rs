//! Datasets: synthetic generators, CSV ingestion, labeled/unlabeled
//! splitting, and vector-space weak/strong augmentation.
//!
//! Augmentation is the vector-space analogue of the usual image pipeline:
//! the weak view adds small Gaussian noise, the strong view adds larger
//! noise and then zeroes each coordinate independently with a fixed
//! probability. Everything is deterministic in its seed or rng handle.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sat::PseudoLabelSet;
use crate::scalar::Scalar;

/// Minimum distance between any two generated blob centers.
pub const BLOB_CENTER_SEPARATION: f64 = 6.0;

/// A feature matrix with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S: Scalar> {
    features: Vec<Vec<S>>,
    labels: Option<Vec<usize>>,
    n_classes: usize,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(
        features: Vec<Vec<S>>,
        labels: Option<Vec<usize>>,
        n_classes: usize,
    ) -> Result<Self> {
        let dim = features.first().map_or(0, Vec::len);
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "feature row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "feature row {i} contains non-finite value {bad}"
                )));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != features.len() {
                return Err(Error::invalid(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    features.len()
                )));
            }
            if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
                return Err(Error::invalid(format!(
                    "label {l} at row {i} out of range for {n_classes} classes"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Feature dimension; zero for an empty dataset.
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[Vec<S>] {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature(&self, i: usize) -> &[S] {
        &self.features[i]
    }
}

/// How many labels to keep per class when hiding the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub labels_per_class: usize,
    pub seed: u64,
    /// When false, the labeled set is a plain uniform sample of
    /// `labels_per_class * n_classes` points and classes may go
    /// unrepresented.
    pub stratified: bool,
}

/// Noise scales for the weak/strong augmentation pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig<S: Scalar> {
    pub weak_noise_sigma: S,
    pub strong_noise_sigma: S,
    pub strong_feature_dropout_p: f64,
}

impl<S: Scalar> Default for AugmentConfig<S> {
    fn default() -> Self {
        AugmentConfig {
            weak_noise_sigma: S::from(0.05).unwrap(),
            strong_noise_sigma: S::from(0.15).unwrap(),
            strong_feature_dropout_p: 0.1,
        }
    }
}

impl<S: Scalar> AugmentConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.weak_noise_sigma >= S::zero() && self.weak_noise_sigma.is_finite()) {
            return Err(Error::invalid("weak noise sigma must be nonnegative"));
        }
        if self.strong_noise_sigma < self.weak_noise_sigma {
            return Err(Error::invalid(
                "strong noise sigma must be at least the weak sigma",
            ));
        }
        if !(0.0..1.0).contains(&self.strong_feature_dropout_p) {
            return Err(Error::invalid("feature dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Two interleaving half-circle classes with additive Gaussian noise.
///
/// Class 0 lies on the unit half-circle centered at the origin, class 1 on
/// the half-circle centered at (1, 0.5). Class counts are balanced within
/// one sample, class 0 taking the extra point for odd `n`.
pub fn make_two_moons<S: Scalar>(n: usize, noise: S, seed: u64) -> Result<Dataset<S>> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "two-moons needs at least 2 samples, got {n}"
        )));
    }
    if !(noise >= S::zero() && noise.is_finite()) {
        return Err(Error::invalid("noise must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n0 = n / 2 + n % 2;
    let n1 = n - n0;
    let pi = S::from(std::f64::consts::PI).unwrap();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let arc = |count: usize, i: usize| {
        if count == 1 {
            S::zero()
        } else {
            pi * S::from(i).unwrap() / S::from(count - 1).unwrap()
        }
    };
    let mut noisy = |x: S, rng: &mut ChaCha8Rng| {
        let g: f64 = StandardNormal.sample(rng);
        x + noise * S::from(g).unwrap()
    };
    for i in 0..n0 {
        let t = arc(n0, i);
        let (x, y) = (t.cos(), t.sin());
        features.push(vec![noisy(x, &mut rng), noisy(y, &mut rng)]);
        labels.push(0);
    }
    for i in 0..n1 {
        let t = arc(n1, i);
        let (x, y) = (S::one() - t.cos(), S::from(0.5).unwrap() - t.sin());
        features.push(vec![noisy(x, &mut rng), noisy(y, &mut rng)]);
        labels.push(1);
    }
    Dataset::new(features, Some(labels), 2)
}

/// Isotropic Gaussian clusters around deterministic, well-separated
/// centers.
///
/// Center `k` sits on axis `k % dim` at distance
/// `BLOB_CENTER_SEPARATION * (1 + k / dim)` from the origin, which keeps
/// every pair of centers at least `BLOB_CENTER_SEPARATION` apart. Class
/// counts are balanced, the first `n % n_classes` classes taking one extra
/// point.
pub fn make_blobs<S: Scalar>(
    n: usize,
    n_classes: usize,
    dim: usize,
    spread: S,
    seed: u64,
) -> Result<Dataset<S>> {
    if n_classes == 0 || n < n_classes {
        return Err(Error::invalid(format!(
            "blobs need n >= n_classes >= 1, got n={n}, n_classes={n_classes}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("blobs need at least one dimension"));
    }
    if !(spread >= S::zero() && spread.is_finite()) {
        return Err(Error::invalid("spread must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n_classes {
        let count = n / n_classes + usize::from(k < n % n_classes);
        let center = blob_center::<S>(k, dim);
        for _ in 0..count {
            let point = center
                .iter()
                .map(|&c| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    c + spread * S::from(g).unwrap()
                })
                .collect();
            features.push(point);
            labels.push(k);
        }
    }
    Dataset::new(features, Some(labels), n_classes)
}

/// Deterministic center of blob class `k` in `dim` dimensions.
pub fn blob_center<S: Scalar>(k: usize, dim: usize) -> Vec<S> {
    let axis = k % dim;
    let ring = (k / dim + 1) as f64;
    let mut center = vec![S::zero(); dim];
    center[axis] = S::from(BLOB_CENTER_SEPARATION * ring).unwrap();
    center
}

/// Loads a dataset from a headered CSV file.
///
/// The first line names the columns; a column literally named `label`
/// holds integer class indices and is optional. All other columns are
/// decimal features. Rows with a different column count than the header
/// are rejected, as are non-finite features. The class count is one more
/// than the largest label seen.
pub fn load_csv<S: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<S>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid("CSV file is empty"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_col = columns.iter().position(|&c| c == "label");
    let expected = columns.len();

    let mut features = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1; // 1-based, counting the header
        if raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cells.len() != expected {
            return Err(Error::CsvColumnCount {
                line,
                expected,
                found: cells.len(),
            });
        }
        let mut row = Vec::with_capacity(expected - usize::from(label_col.is_some()));
        for (c, cell) in cells.iter().enumerate() {
            if Some(c) == label_col {
                let value: i64 = cell.parse().map_err(|_| Error::CsvBadLabel {
                    line,
                    value: cell.to_string(),
                })?;
                if value < 0 {
                    return Err(Error::CsvBadLabel {
                        line,
                        value: cell.to_string(),
                    });
                }
                labels.push(value as usize);
            } else {
                let value: f64 = cell.parse().map_err(|_| Error::CsvBadFeature {
                    line,
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::CsvBadFeature {
                        line,
                        value: cell.to_string(),
                    });
                }
                row.push(S::from(value).unwrap());
            }
        }
        features.push(row);
    }

    if label_col.is_some() {
        let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
        Dataset::new(features, Some(labels), n_classes)
    } else {
        Dataset::new(features, None, 0)
    }
}

/// Hides most labels: keeps `labels_per_class` labeled samples per class
/// and strips labels from the rest, returning the stripped labels
/// separately as hidden ground truth for selection-accuracy metrics only.
///
/// The labeled and unlabeled parts partition the input; both preserve the
/// original sample order.
pub fn split_labeled_unlabeled<S: Scalar>(
    ds: &Dataset<S>,
    spec: &SplitSpec,
) -> Result<(Dataset<S>, Dataset<S>, Vec<usize>)> {
    let labels = ds
        .labels()
        .ok_or_else(|| Error::invalid("split needs a labeled dataset"))?;
    if spec.labels_per_class == 0 {
        return Err(Error::invalid("labels_per_class must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut keep = vec![false; ds.len()];
    if spec.stratified {
        for class in 0..ds.n_classes() {
            let mut members: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
            if members.len() < spec.labels_per_class {
                return Err(Error::invalid(format!(
                    "class {class} has {} samples, fewer than labels_per_class={}",
                    members.len(),
                    spec.labels_per_class
                )));
            }
            shuffle(&mut members, &mut rng);
            for &i in members.iter().take(spec.labels_per_class) {
                keep[i] = true;
            }
        }
    } else {
        let total = spec.labels_per_class * ds.n_classes();
        if total > ds.len() {
            return Err(Error::invalid(format!(
                "cannot keep {total} labels from {} samples",
                ds.len()
            )));
        }
        let mut all: Vec<usize> = (0..ds.len()).collect();
        shuffle(&mut all, &mut rng);
        for &i in all.iter().take(total) {
            keep[i] = true;
        }
    }

    let mut labeled_features = Vec::new();
    let mut labeled_labels = Vec::new();
    let mut unlabeled_features = Vec::new();
    let mut hidden_truth = Vec::new();
    for i in 0..ds.len() {
        if keep[i] {
            labeled_features.push(ds.feature(i).to_vec());
            labeled_labels.push(labels[i]);
        } else {
            unlabeled_features.push(ds.feature(i).to_vec());
            hidden_truth.push(labels[i]);
        }
    }
    let labeled = Dataset::new(labeled_features, Some(labeled_labels), ds.n_classes())?;
    let unlabeled = Dataset::new(unlabeled_features, None, ds.n_classes())?;
    Ok((labeled, unlabeled, hidden_truth))
}

/// Carves a stratified validation set out of a labeled dataset.
pub fn split_validation<S: Scalar>(
    ds: &Dataset<S>,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset<S>, Dataset<S>)> {
    let labels = ds
        .labels()
        .ok_or_else(|| Error::invalid("validation split needs a labeled dataset"))?;
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(Error::invalid(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut to_val = vec![false; ds.len()];
    for class in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
        let take = ((members.len() as f64 * fraction).round() as usize)
            .min(members.len().saturating_sub(1))
            .max(usize::from(members.len() > 1));
        shuffle(&mut members, &mut rng);
        for &i in members.iter().take(take) {
            to_val[i] = true;
        }
    }
    let mut partition = |want_val: bool| -> (Vec<Vec<S>>, Vec<usize>) {
        (0..ds.len())
            .filter(|&i| to_val[i] == want_val)
            .map(|i| (ds.feature(i).to_vec(), labels[i]))
            .unzip()
    };
    let (val_f, val_l) = partition(true);
    let (train_f, train_l) = partition(false);
    let train = Dataset::new(train_f, Some(train_l), ds.n_classes())?;
    let val = Dataset::new(val_f, Some(val_l), ds.n_classes())?;
    Ok((train, val))
}

/// Fisher-Yates shuffle driven by the given rng.
pub(crate) fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Weak view: additive Gaussian noise with the weak sigma.
pub fn weak_augment<S: Scalar>(x: &[S], cfg: &AugmentConfig<S>, rng: &mut ChaCha8Rng) -> Vec<S> {
    x.iter()
        .map(|&v| {
            let g: f64 = StandardNormal.sample(rng);
            v + cfg.weak_noise_sigma * S::from(g).unwrap()
        })
        .collect()
}

/// Strong view: larger Gaussian noise, then each coordinate independently
/// zeroed with probability `strong_feature_dropout_p`.
pub fn strong_augment<S: Scalar>(x: &[S], cfg: &AugmentConfig<S>, rng: &mut ChaCha8Rng) -> Vec<S> {
    x.iter()
        .map(|&v| {
            let g: f64 = StandardNormal.sample(rng);
            let noisy = v + cfg.strong_noise_sigma * S::from(g).unwrap();
            let drop: f64 = rng.random_range(0.0..1.0);
            if drop < cfg.strong_feature_dropout_p {
                S::zero()
            } else {
                noisy
            }
        })
        .collect()
}

/// Expands the labeled set with the selected pseudo-labeled samples.
///
/// The combined dataset is the labeled samples followed by the selected
/// unlabeled samples carrying their pseudo-labels; neither input is
/// modified, and nothing marks the origin of a sample.
pub fn combine<S: Scalar>(
    labeled: &Dataset<S>,
    unlabeled: &Dataset<S>,
    selection: &PseudoLabelSet<S>,
) -> Result<Dataset<S>> {
    let base_labels = labeled
        .labels()
        .ok_or_else(|| Error::invalid("combine needs a labeled dataset"))?;
    if !unlabeled.is_empty() && !labeled.is_empty() && unlabeled.dim() != labeled.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: labeled {} vs unlabeled {}",
            labeled.dim(),
            unlabeled.dim()
        )));
    }
    let mut features: Vec<Vec<S>> = labeled.features().to_vec();
    let mut labels: Vec<usize> = base_labels.to_vec();
    for entry in selection.entries() {
        if entry.index >= unlabeled.len() {
            return Err(Error::invalid(format!(
                "selection index {} out of range for {} unlabeled samples",
                entry.index,
                unlabeled.len()
            )));
        }
        features.push(unlabeled.feature(entry.index).to_vec());
        labels.push(entry.label);
    }
    Dataset::new(features, Some(labels), labeled.n_classes())
}
