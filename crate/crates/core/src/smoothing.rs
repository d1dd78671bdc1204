//! Differentiable surrogate of a tree ensemble.
//!
//! Each hard split `x_j > v_k` becomes a soft routing probability
//! `q = sigmoid((x_j − v_k) / (τ σ_j))` for the left branch and `1 − q` for the
//! right. A tree's soft output is the reach-probability-weighted mix of its
//! leaves; as `τ → 0` routing saturates and the hard model is recovered.
//!
//! Two gradient routes are provided:
//!
//! - exact: one pass per tree that pushes reach probabilities down and soft
//!   subtree values up, touching every node once;
//! - sampled: walk one root-to-leaf path per tree and weight the leaf value by
//!   the sum of `∇ log` of the branch probabilities actually taken. The
//!   estimator is unbiased for the exact gradient and touches at most
//!   `max_depth` internal nodes per sample.

use rand::Rng;

use crate::ensemble::{Decision, Ensemble, Node, Tree};
use crate::error::{check_len, Error, Result};

/// Beyond this |z| the sigmoid is reported as exactly 0 or 1 with zero slope.
pub const SIGMOID_SATURATION: f64 = 500.0;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z > SIGMOID_SATURATION {
        1.0
    } else if z < -SIGMOID_SATURATION {
        0.0
    } else if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// d sigmoid / dz, computed as `sigmoid(z) * sigmoid(-z)` to keep precision
/// in both tails.
#[inline]
pub fn sigmoid_slope(z: f64) -> f64 {
    if z.abs() > SIGMOID_SATURATION {
        0.0
    } else {
        sigmoid(z) * sigmoid(-z)
    }
}

/// Per-feature normalisers σ_j (training-split standard deviations).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScales {
    sigma: Vec<f64>,
}

impl FeatureScales {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if let Some(j) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "feature scale {j} must be finite and positive, got {}",
                sigma[j]
            )));
        }
        Ok(FeatureScales { sigma })
    }

    pub fn uniform(n_features: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![sigma; n_features])
    }

    /// Population standard deviation per column. Zero-variance columns get
    /// `max(1e-6, 1e-6·|mean|)`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], n_features: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput(
                "cannot estimate feature scales from zero rows".into(),
            ));
        }
        let n = rows.len() as f64;
        let sigma = (0..n_features)
            .map(|j| {
                let mean = rows.iter().map(|r| r.as_ref()[j]).sum::<f64>() / n;
                let var = rows
                    .iter()
                    .map(|r| (r.as_ref()[j] - mean).powi(2))
                    .sum::<f64>()
                    / n;
                let sd = var.sqrt();
                let floor = f64::max(1e-6, 1e-6 * mean.abs());
                if sd > 0.0 {
                    sd.max(f64::MIN_POSITIVE)
                } else {
                    floor
                }
            })
            .collect();
        Self::new(sigma)
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Dense `n_outputs × n_features` derivative of the score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    n_outputs: usize,
    n_features: usize,
    data: Vec<f64>,
}

impl Jacobian {
    fn zeros(n_outputs: usize, n_features: usize) -> Self {
        Jacobian {
            n_outputs,
            n_features,
            data: vec![0.0; n_outputs * n_features],
        }
    }

    pub fn row(&self, output: usize) -> &[f64] {
        &self.data[output * self.n_features..(output + 1) * self.n_features]
    }

    /// Gradient of `⟨weights, scores⟩`.
    pub fn contract(&self, weights: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n_features];
        for (c, &w) in weights.iter().enumerate().take(self.n_outputs) {
            if w != 0.0 {
                for (gj, dj) in g.iter_mut().zip(self.row(c)) {
                    *gj += w * dj;
                }
            }
        }
        g
    }
}

/// One step of a sampled root-to-leaf walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    pub node: usize,
    pub went_left: bool,
    pub q_left: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub tree_index: usize,
    pub leaf_value: Vec<f64>,
    pub visited: Vec<PathStep>,
}

/// Count of tree nodes touched by a smoothed evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeVisits(pub u64);

/// Tempered-sigmoid view over an [`Ensemble`].
#[derive(Debug, Clone)]
pub struct SmoothedEnsemble<'a> {
    base: &'a Ensemble,
    scales: FeatureScales,
    temperature: f64,
    // 1 / (τ σ_j)
    inv_width: Vec<f64>,
}

impl<'a> SmoothedEnsemble<'a> {
    pub fn new(base: &'a Ensemble, scales: FeatureScales, temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        check_len(base.n_features(), scales.len())?;
        let inv_width = scales
            .sigma()
            .iter()
            .map(|s| 1.0 / (temperature * s))
            .collect();
        Ok(SmoothedEnsemble {
            base,
            scales,
            temperature,
            inv_width,
        })
    }

    pub fn base(&self) -> &'a Ensemble {
        self.base
    }

    pub fn scales(&self) -> &FeatureScales {
        &self.scales
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        self.base.validate_input(x)
    }

    /// Probability of taking the left (`x_j > v_k`) branch at an internal node.
    pub fn routing_prob_left(&self, node: &Node, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        match node {
            Node::Internal {
                feature, threshold, ..
            } if *feature < x.len() => Ok(sigmoid(
                (x[*feature] - threshold) * self.inv_width[*feature],
            )),
            Node::Internal { feature, .. } => Err(Error::Shape {
                expected: feature + 1,
                actual: x.len(),
            }),
            Node::Leaf { .. } => Err(Error::InvalidInput("routing probability of a leaf".into())),
        }
    }

    /// Soft scores `Σ_t w_t Σ_leaves P(leaf) v_leaf`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let mut scores = vec![0.0; self.base.n_outputs()];
        for (tree, &w) in self.base.trees().iter().zip(self.base.weights()) {
            self.soft_descend(tree, tree.root(), w, x, &mut scores);
        }
        Ok(scores)
    }

    pub fn decide(&self, x: &[f64]) -> Result<Decision> {
        Ok(self.base.decide(&self.predict(x)?))
    }

    /// Soft probability of reaching each leaf of `tree` (leaf index, prob).
    pub fn leaf_probabilities(&self, tree: &Tree, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        self.check_x(x)?;
        let mut out = Vec::new();
        let mut stack = vec![(tree.root(), 1.0)];
        while let Some((idx, reach)) = stack.pop() {
            match tree.node(idx) {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let q = sigmoid((x[*feature] - threshold) * self.inv_width[*feature]);
                    stack.push((*right, reach * (1.0 - q)));
                    stack.push((*left, reach * q));
                }
                Node::Leaf { .. } => out.push((idx, reach)),
            }
        }
        Ok(out)
    }

    fn soft_descend(&self, tree: &Tree, idx: usize, reach: f64, x: &[f64], scores: &mut [f64]) {
        match tree.node(idx) {
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let q = sigmoid((x[*feature] - threshold) * self.inv_width[*feature]);
                self.soft_descend(tree, *left, reach * q, x, scores);
                self.soft_descend(tree, *right, reach * (1.0 - q), x, scores);
            }
            Node::Leaf { value } => {
                for (s, v) in scores.iter_mut().zip(value) {
                    *s += reach * v;
                }
            }
        }
    }

    /// Soft scores and their exact Jacobian in one traversal per tree.
    pub fn scores_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Jacobian, NodeVisits)> {
        self.check_x(x)?;
        let n_out = self.base.n_outputs();
        let mut scores = vec![0.0; n_out];
        let mut jac = Jacobian::zeros(n_out, self.base.n_features());
        let mut visits = 0u64;
        let max_nodes = self
            .base
            .trees()
            .iter()
            .map(Tree::node_count)
            .max()
            .unwrap_or(0);
        let mut sub = vec![0.0; max_nodes * n_out];
        let mut acc = ExactAcc {
            x,
            n_out,
            sub: &mut sub,
            jac: &mut jac,
            scores: &mut scores,
            visits: &mut visits,
        };
        for (tree, &w) in self.base.trees().iter().zip(self.base.weights()) {
            self.exact_descend(tree, tree.root(), w, &mut acc);
        }
        Ok((scores, jac, NodeVisits(visits)))
    }

    // Post-order: children fill `sub` with their soft subtree values, then
    // the parent mixes them and adds reach·slope·(S_left − S_right) to ∂/∂x_j.
    // `reach` already includes the tree weight.
    fn exact_descend(&self, tree: &Tree, idx: usize, reach: f64, acc: &mut ExactAcc<'_>) {
        *acc.visits += 1;
        let n_out = acc.n_out;
        match tree.node(idx) {
            Node::Leaf { value } => {
                acc.sub[idx * n_out..(idx + 1) * n_out].copy_from_slice(value);
                for (s, v) in acc.scores.iter_mut().zip(value) {
                    *s += reach * v;
                }
            }
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let j = *feature;
                let z = (acc.x[j] - threshold) * self.inv_width[j];
                let q = sigmoid(z);
                self.exact_descend(tree, *left, reach * q, acc);
                self.exact_descend(tree, *right, reach * (1.0 - q), acc);
                let dq = sigmoid_slope(z) * self.inv_width[j];
                let nf = acc.jac.n_features;
                for c in 0..n_out {
                    let sl = acc.sub[left * n_out + c];
                    let sr = acc.sub[right * n_out + c];
                    acc.sub[idx * n_out + c] = q * sl + (1.0 - q) * sr;
                    acc.jac.data[c * nf + j] += reach * dq * (sl - sr);
                }
            }
        }
    }

    /// Exact `∇_x ⟨output_weights, predict(x)⟩`.
    pub fn gradient_exhaustive(&self, x: &[f64], output_weights: &[f64]) -> Result<Vec<f64>> {
        Ok(self.gradient_exhaustive_counted(x, output_weights)?.0)
    }

    pub fn gradient_exhaustive_counted(
        &self,
        x: &[f64],
        output_weights: &[f64],
    ) -> Result<(Vec<f64>, NodeVisits)> {
        check_len(self.base.n_outputs(), output_weights.len())?;
        let (_, jac, visits) = self.scores_and_jacobian(x)?;
        Ok((jac.contract(output_weights), visits))
    }

    /// Walks one root-to-leaf path of tree `tree_index`, going left with
    /// probability `routing_prob_left` at each internal node.
    pub fn sample_path<R: Rng + ?Sized>(
        &self,
        tree_index: usize,
        x: &[f64],
        rng: &mut R,
    ) -> Result<PathSample> {
        self.check_x(x)?;
        let tree = self.base.trees().get(tree_index).ok_or_else(|| {
            Error::InvalidInput(format!(
                "tree index {tree_index} out of range for {} trees",
                self.base.trees().len()
            ))
        })?;
        let mut visited = Vec::with_capacity(tree.max_depth());
        let mut idx = tree.root();
        loop {
            match tree.node(idx) {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let q = sigmoid((x[*feature] - threshold) * self.inv_width[*feature]);
                    let went_left = rng.random::<f64>() < q;
                    visited.push(PathStep {
                        node: idx,
                        went_left,
                        q_left: q,
                    });
                    idx = if went_left { *left } else { *right };
                }
                Node::Leaf { value } => {
                    return Ok(PathSample {
                        tree_index,
                        leaf_value: value.clone(),
                        visited,
                    })
                }
            }
        }
    }

    /// Monte-Carlo estimates of the soft scores and of their Jacobian from
    /// `n_samples` sampled paths per tree. Each path contributes
    /// `w_t · v_p · Σ_l ∇_x log Q_l`, where `Q_l` is the probability of the
    /// branch actually taken.
    pub fn sampled_scores_and_jacobian<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        n_samples: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Jacobian, NodeVisits)> {
        self.check_x(x)?;
        if n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        let n_out = self.base.n_outputs();
        let nf = self.base.n_features();
        let mut scores = vec![0.0; n_out];
        let mut jac = Jacobian::zeros(n_out, nf);
        let mut visits = 0u64;
        let mut steps: Vec<(usize, f64)> = Vec::with_capacity(self.base.max_depth());
        let inv_n = 1.0 / n_samples as f64;
        for (tree, &w) in self.base.trees().iter().zip(self.base.weights()) {
            let scale = w * inv_n;
            for _ in 0..n_samples {
                steps.clear();
                let mut idx = tree.root();
                let value = loop {
                    match tree.node(idx) {
                        Node::Internal {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            visits += 1;
                            let j = *feature;
                            let q = sigmoid((x[j] - threshold) * self.inv_width[j]);
                            if rng.random::<f64>() < q {
                                // ∇ log q = (1 − q) / (τσ)
                                steps.push((j, (1.0 - q) * self.inv_width[j]));
                                idx = *left;
                            } else {
                                // ∇ log (1 − q) = −q / (τσ)
                                steps.push((j, -q * self.inv_width[j]));
                                idx = *right;
                            }
                        }
                        Node::Leaf { value } => break value,
                    }
                };
                for (c, &v) in value.iter().enumerate() {
                    scores[c] += scale * v;
                    let k = scale * v;
                    if k != 0.0 {
                        let row = &mut jac.data[c * nf..(c + 1) * nf];
                        for &(j, d) in &steps {
                            row[j] += k * d;
                        }
                    }
                }
            }
        }
        Ok((scores, jac, NodeVisits(visits)))
    }

    /// Unbiased estimate of [`gradient_exhaustive`](Self::gradient_exhaustive).
    pub fn gradient_sampled<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        output_weights: &[f64],
        n_samples: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        Ok(self
            .gradient_sampled_counted(x, output_weights, n_samples, rng)?
            .0)
    }

    pub fn gradient_sampled_counted<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        output_weights: &[f64],
        n_samples: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, NodeVisits)> {
        check_len(self.base.n_outputs(), output_weights.len())?;
        let (_, jac, visits) = self.sampled_scores_and_jacobian(x, n_samples, rng)?;
        Ok((jac.contract(output_weights), visits))
    }
}

struct ExactAcc<'b> {
    x: &'b [f64],
    n_out: usize,
    sub: &'b mut [f64],
    jac: &'b mut Jacobian,
    scores: &'b mut [f64],
    visits: &'b mut u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Task;
    use crate::rng;

    fn stump_model(a: f64, b: f64) -> Ensemble {
        Ensemble::new(
            vec![Tree::stump(0, 0.0, vec![a], vec![b])],
            vec![1.0],
            1,
            1,
            Task::Regression,
            None,
        )
        .unwrap()
    }

    fn two_class_stump() -> Ensemble {
        Ensemble::new(
            vec![Tree::stump(0, 0.0, vec![1.0, 0.0], vec![0.0, 1.0])],
            vec![1.0],
            1,
            2,
            Task::Classification { n_classes: 2 },
            None,
        )
        .unwrap()
    }

    #[test]
    fn routing_probability_values() {
        let e = stump_model(1.0, 0.0);
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 2.0).unwrap(), 0.5).unwrap();
        let node = e.trees()[0].node(0);
        assert_eq!(s.routing_prob_left(node, &[0.0]).unwrap(), 0.5);
        // x − v = τσ = 1
        let q = s.routing_prob_left(node, &[1.0]).unwrap();
        assert!((q - 0.731_058_578_630_004_9).abs() < 1e-12, "{q}");
        let q = s.routing_prob_left(node, &[1000.0]).unwrap();
        assert!(q >= 1.0 - 1e-12);
        assert!(sigmoid_slope(1000.0) < 1e-300);
        assert!(s.routing_prob_left(e.trees()[0].node(1), &[0.0]).is_err());
    }

    #[test]
    fn saturated_sigmoid_is_exact_and_flat() {
        assert_eq!(sigmoid(501.0), 1.0);
        assert_eq!(sigmoid(-501.0), 0.0);
        assert_eq!(sigmoid_slope(-501.0), 0.0);
        assert!(sigmoid(-40.0) > 0.0);
    }

    #[test]
    fn soft_predict_at_and_far_from_threshold() {
        let e = two_class_stump();
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(s.predict(&[0.0]).unwrap(), vec![0.5, 0.5]);
        let p = s.predict(&[50.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        assert!(matches!(s.predict(&[0.0, 1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn rejects_bad_temperature_and_scales() {
        let e = two_class_stump();
        assert!(SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 1.0).unwrap(), 0.0).is_err());
        assert!(SmoothedEnsemble::new(&e, FeatureScales::uniform(2, 1.0).unwrap(), 1.0).is_err());
        assert!(FeatureScales::new(vec![0.0]).is_err());
    }

    #[test]
    fn scale_floor_for_constant_features() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 3.0]];
        let s = FeatureScales::from_rows(&rows, 2).unwrap();
        assert!((s.sigma()[0] - 5e-6).abs() < 1e-20);
        assert_eq!(s.sigma()[1], 1.0);
        let rows = vec![vec![0.0], vec![0.0]];
        assert_eq!(FeatureScales::from_rows(&rows, 1).unwrap().sigma()[0], 1e-6);
    }

    #[test]
    fn single_leaf_has_zero_gradient() {
        let e = Ensemble::new(
            vec![Tree::leaf(vec![3.0])],
            vec![1.0],
            2,
            1,
            Task::Regression,
            None,
        )
        .unwrap();
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(2, 1.0).unwrap(), 0.1).unwrap();
        assert_eq!(
            s.gradient_exhaustive(&[0.3, 0.4], &[1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let mut r = rng::seeded(1);
        assert_eq!(
            s.gradient_sampled(&[0.3, 0.4], &[1.0], 7, &mut r).unwrap(),
            vec![0.0, 0.0]
        );
        let p = s.sample_path(0, &[0.3, 0.4], &mut r).unwrap();
        assert!(p.visited.is_empty());
        assert_eq!(p.leaf_value, vec![3.0]);
    }

    #[test]
    fn stump_gradient_closed_form() {
        let (a, b, tau, sigma) = (3.0, -1.0, 0.5, 2.0);
        let e = stump_model(a, b);
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, sigma).unwrap(), tau).unwrap();
        let g = s.gradient_exhaustive(&[0.0], &[1.0]).unwrap();
        assert!((g[0] - (a - b) / (4.0 * tau * sigma)).abs() < 1e-15);
        for x in [-1.3, 0.2, 2.5] {
            let q = sigmoid(x / (tau * sigma));
            let g = s.gradient_exhaustive(&[x], &[1.0]).unwrap();
            let expect = (a - b) * q * (1.0 - q) / (tau * sigma);
            assert!((g[0] - expect).abs() < 1e-13, "{} vs {}", g[0], expect);
        }
    }

    #[test]
    fn path_sampling_frequencies() {
        // q_left = 0.5: 10k draws, 3σ ≈ 0.015
        let e = two_class_stump();
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 1.0).unwrap(), 1.0).unwrap();
        let mut r = rng::seeded(7);
        let lefts = (0..10_000)
            .filter(|_| s.sample_path(0, &[0.0], &mut r).unwrap().visited[0].went_left)
            .count();
        let f = lefts as f64 / 10_000.0;
        assert!((0.48..=0.52).contains(&f), "{f}");

        // depth 2, all thresholds at x: four leaves equally likely
        let nodes = vec![
            Node::Internal {
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 2,
            },
            Node::Internal {
                feature: 1,
                threshold: 0.0,
                left: 3,
                right: 4,
            },
            Node::Internal {
                feature: 1,
                threshold: 0.0,
                left: 5,
                right: 6,
            },
            Node::Leaf { value: vec![0.0] },
            Node::Leaf { value: vec![1.0] },
            Node::Leaf { value: vec![2.0] },
            Node::Leaf { value: vec![3.0] },
        ];
        let e = Ensemble::new(
            vec![Tree::new(nodes, 0).unwrap()],
            vec![1.0],
            2,
            1,
            Task::Regression,
            None,
        )
        .unwrap();
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(2, 1.0).unwrap(), 1.0).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let p = s.sample_path(0, &[0.0, 0.0], &mut r).unwrap();
            assert_eq!(p.visited.len(), 2);
            counts[p.leaf_value[0] as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((0.23..=0.27).contains(&f), "{counts:?}");
        }
    }

    #[test]
    fn sampled_gradient_is_unbiased_on_a_stump() {
        let (a, b) = (2.0, -1.0);
        let e = stump_model(a, b);
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 1.0).unwrap(), 1.0).unwrap();
        let x = [0.4];
        let exact = s.gradient_exhaustive(&x, &[1.0]).unwrap()[0];
        let q = sigmoid(0.4);
        // E[estimator] = q·a·(1−q) + (1−q)·b·(−q)
        assert!((q * a * (1.0 - q) - (1.0 - q) * b * q - exact).abs() < 1e-15);

        let mut r = rng::seeded(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| s.gradient_sampled(&x, &[1.0], 1, &mut r).unwrap()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "mean {mean} exact {exact} se {se}"
        );
    }

    #[test]
    fn node_visit_accounting() {
        let nodes = vec![
            Node::Internal {
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 2,
            },
            Node::Internal {
                feature: 0,
                threshold: 1.0,
                left: 3,
                right: 4,
            },
            Node::Leaf { value: vec![0.0] },
            Node::Leaf { value: vec![1.0] },
            Node::Leaf { value: vec![2.0] },
        ];
        let t = Tree::new(nodes, 0).unwrap();
        let e = Ensemble::new(
            vec![t.clone(), t],
            vec![0.5, 0.5],
            1,
            1,
            Task::Regression,
            None,
        )
        .unwrap();
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 1.0).unwrap(), 1.0).unwrap();
        let (_, v) = s.gradient_exhaustive_counted(&[0.5], &[1.0]).unwrap();
        assert_eq!(v, NodeVisits(10));
        let mut r = rng::seeded(3);
        let (_, v) = s
            .gradient_sampled_counted(&[0.5], &[1.0], 4, &mut r)
            .unwrap();
        assert!(v.0 <= 2 * 4 * 2);
        assert!(s.gradient_sampled(&[0.5], &[1.0], 0, &mut r).is_err());
    }

    #[test]
    fn leaf_probabilities_sum_to_one() {
        let e = two_class_stump();
        let s = SmoothedEnsemble::new(&e, FeatureScales::uniform(1, 1.0).unwrap(), 0.3).unwrap();
        let p = s.leaf_probabilities(&e.trees()[0], &[0.17]).unwrap();
        let total: f64 = p.iter().map(|(_, q)| q).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
