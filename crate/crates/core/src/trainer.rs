//! Deterministic random-forest trainer (Gini CART on bootstrap samples).
//!
//! Exists so the harness can produce target models without external tooling.
//! Split search is exhaustive over midpoints of consecutive unique values;
//! ties in gain go to the lower feature index, then the lower threshold.
//! Samples with `x_j > threshold` go to the left child, matching the routing
//! convention in [`crate::ensemble`].

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, Node, Task, Tree};
use crate::error::{check_finite, Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    /// Fraction of features considered per split; `None` means `⌊√d⌋`.
    pub feature_subsample: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_estimators: 100,
            max_depth: 4,
            bootstrap: true,
            feature_subsample: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if let Some(f) = self.feature_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!(
                    "feature_subsample must be in (0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }

    fn features_per_split(&self, n_features: usize) -> usize {
        let k = match self.feature_subsample {
            Some(f) => (f * n_features as f64).round() as usize,
            None => (n_features as f64).sqrt().floor() as usize,
        };
        k.clamp(1, n_features)
    }
}

/// Trains a classification forest. `labels[i]` must be below `n_classes`.
/// Every tree gets weight `1 / n_estimators`, so scores are mean class
/// probabilities.
pub fn train_random_forest<R: AsRef<[f64]> + Sync>(
    rows: &[R],
    labels: &[usize],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<Ensemble> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if n_classes < 2 {
        return Err(Error::Config("n_classes must be at least 2".into()));
    }
    let n_features = rows[0].as_ref().len();
    if n_features == 0 {
        return Err(Error::Data("rows have no features".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != n_features {
            return Err(Error::Data(format!(
                "row {i} has {} features, expected {n_features}",
                r.len()
            )));
        }
        check_finite(r).map_err(|e| Error::InvalidInput(format!("row {i}: {e}")))?;
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Data(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        log::warn!(
            "training data contains a single class ({}); all leaves will be constant",
            labels[0]
        );
    }

    let grower = Grower {
        rows: rows.iter().map(AsRef::as_ref).collect(),
        labels,
        n_classes,
        n_features,
        max_depth: config.max_depth,
        per_split: config.features_per_split(n_features),
    };
    let trees = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(config.seed, t as u64);
            let n = grower.rows.len();
            let sample: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(sample, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let w = 1.0 / config.n_estimators as f64;
    Ensemble::new(
        trees,
        vec![w; config.n_estimators],
        n_features,
        n_classes,
        Task::Classification { n_classes },
        None,
    )
}

struct Grower<'a> {
    rows: Vec<&'a [f64]>,
    labels: &'a [usize],
    n_classes: usize,
    n_features: usize,
    max_depth: usize,
    per_split: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

impl Grower<'_> {
    fn grow<R: Rng>(&self, sample: Vec<usize>, rng: &mut R) -> Result<Tree> {
        let mut nodes = Vec::new();
        self.build(&sample, 0, &mut nodes, rng);
        Tree::new(nodes, 0)
    }

    fn counts(&self, sample: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_classes];
        for &i in sample {
            c[self.labels[i]] += 1.0;
        }
        c
    }

    fn build<R: Rng>(
        &self,
        sample: &[usize],
        depth: usize,
        nodes: &mut Vec<Node>,
        rng: &mut R,
    ) -> usize {
        let idx = nodes.len();
        let counts = self.counts(sample);
        let total = sample.len() as f64;
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        let split = if pure || depth >= self.max_depth || sample.len() < 2 {
            None
        } else {
            self.best_split(sample, &counts, rng)
        };
        match split {
            None => {
                nodes.push(Node::Leaf {
                    value: counts.iter().map(|c| c / total).collect(),
                });
            }
            Some(s) => {
                nodes.push(Node::Leaf { value: Vec::new() }); // placeholder
                let (left, right): (Vec<usize>, Vec<usize>) = sample
                    .iter()
                    .partition(|&&i| self.rows[i][s.feature] > s.threshold);
                let l = self.build(&left, depth + 1, nodes, rng);
                let r = self.build(&right, depth + 1, nodes, rng);
                nodes[idx] = Node::Internal {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: l,
                    right: r,
                };
            }
        }
        idx
    }

    fn best_split<R: Rng>(&self, sample: &[usize], counts: &[f64], rng: &mut R) -> Option<Split> {
        let mut features = index::sample(rng, self.n_features, self.per_split).into_vec();
        features.sort_unstable();
        let total = sample.len() as f64;
        let parent = gini(counts, total);
        let mut best: Option<Split> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(sample.len());
        for &j in &features {
            order.clear();
            order.extend(sample.iter().map(|&i| (self.rows[i][j], self.labels[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            // `below` accumulates the samples with value <= threshold (right child)
            let mut below = vec![0.0; self.n_classes];
            for k in 0..order.len() - 1 {
                below[order[k].1] += 1.0;
                let (a, b) = (order[k].0, order[k + 1].0);
                if a == b {
                    continue;
                }
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                let n_below = (k + 1) as f64;
                let n_above = total - n_below;
                let above: Vec<f64> = counts.iter().zip(&below).map(|(c, b)| c - b).collect();
                let child =
                    (n_below * gini(&below, n_below) + n_above * gini(&above, n_above)) / total;
                let gain = parent - child;
                if gain > 1e-12 && best.as_ref().is_none_or(|s| gain > s.gain) {
                    best = Some(Split {
                        feature: j,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}
