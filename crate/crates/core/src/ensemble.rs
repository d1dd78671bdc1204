//! Tree-ensemble data model, hard prediction and the `sta-model/1` file format.
//!
//! An ensemble is a weighted sum of binary trees whose leaves hold real
//! vectors of length `n_outputs`. Classification forests store class
//! probability (or one-hot) vectors; boosted binary models may store a single
//! logit, in which case the decision is class 1 iff the score is positive.
//!
//! Routing convention: an internal node sends `x` to its **left** child iff
//! `x[feature] > threshold`, otherwise right. Equality routes right.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};

/// Model document format tag.
pub const MODEL_FORMAT: &str = "sta-model/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: Vec<f64>,
    },
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

/// A binary decision tree stored as an index-linked node arena.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
    max_depth: usize,
}

impl Tree {
    /// Builds a tree after checking that the node references form a tree
    /// rooted at `root`: every index in range, every non-root node with
    /// exactly one parent, and every node reachable from the root.
    pub fn new(nodes: Vec<Node>, root: usize) -> Result<Self> {
        let max_depth =
            check_structure(&nodes, root).map_err(|(path, msg)| Error::model(path, msg))?;
        Ok(Tree {
            nodes,
            root,
            max_depth,
        })
    }

    /// Convenience constructor for a one-node tree.
    pub fn leaf(value: Vec<f64>) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
            root: 0,
            max_depth: 0,
        }
    }

    /// A depth-1 tree: `x[feature] > threshold` goes to `left`, else `right`.
    pub fn stump(feature: usize, threshold: f64, left: Vec<f64>, right: Vec<f64>) -> Self {
        Tree {
            nodes: vec![
                Node::Internal {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: left },
                Node::Leaf { value: right },
            ],
            root: 0,
            max_depth: 1,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Index of the leaf reached by hard routing. `x` must already be
    /// validated against the owning ensemble.
    #[inline]
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut idx = self.root;
        loop {
            match &self.nodes[idx] {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] > *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Leaf { .. } => return idx,
            }
        }
    }

    /// Leaf value reached by hard routing (unchecked input).
    #[inline]
    pub fn leaf_value(&self, x: &[f64]) -> &[f64] {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Internal { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Checked single-tree prediction.
    pub fn predict(&self, x: &[f64], n_features: usize) -> Result<Vec<f64>> {
        check_len(n_features, x.len())?;
        check_finite(x)?;
        if let Some((path, msg)) = self.feature_bound_violation(n_features) {
            return Err(Error::model(path, msg));
        }
        Ok(self.leaf_value(x).to_vec())
    }

    fn feature_bound_violation(&self, n_features: usize) -> Option<(String, String)> {
        self.nodes.iter().enumerate().find_map(|(i, n)| match n {
            Node::Internal { feature, .. } if *feature >= n_features => Some((
                format!("nodes[{i}].feature"),
                format!("feature index {feature} out of range for {n_features} features"),
            )),
            _ => None,
        })
    }
}

fn check_structure(nodes: &[Node], root: usize) -> std::result::Result<usize, (String, String)> {
    let n = nodes.len();
    if n == 0 {
        return Err(("nodes".into(), "tree has no nodes".into()));
    }
    if root >= n {
        return Err((
            "root".into(),
            format!("root index {root} out of range for {n} nodes"),
        ));
    }
    let mut parents = vec![0usize; n];
    for (i, node) in nodes.iter().enumerate() {
        if let Node::Internal {
            left,
            right,
            threshold,
            ..
        } = node
        {
            if !threshold.is_finite() {
                return Err((
                    format!("nodes[{i}].threshold"),
                    "threshold must be finite".into(),
                ));
            }
            for (name, child) in [("left", *left), ("right", *right)] {
                if child >= n {
                    return Err((
                        format!("nodes[{i}].{name}"),
                        format!("child index {child} out of range for {n} nodes"),
                    ));
                }
                parents[child] += 1;
            }
            if left == right {
                return Err((
                    format!("nodes[{i}]"),
                    "left and right children coincide".into(),
                ));
            }
        }
    }
    for (i, &p) in parents.iter().enumerate() {
        let expected = usize::from(i != root);
        if p != expected {
            return Err((
                format!("nodes[{i}]"),
                format!("node has {p} parents, expected {expected}"),
            ));
        }
    }
    // With parent counts fixed, full reachability from the root rules out cycles.
    let mut seen = vec![false; n];
    let mut stack = vec![(root, 0usize)];
    let mut max_depth = 0;
    while let Some((idx, depth)) = stack.pop() {
        seen[idx] = true;
        match &nodes[idx] {
            Node::Internal { left, right, .. } => {
                stack.push((*right, depth + 1));
                stack.push((*left, depth + 1));
            }
            Node::Leaf { .. } => max_depth = max_depth.max(depth),
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err((format!("nodes[{i}]"), "node unreachable from root".into()));
    }
    Ok(max_depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Classification { n_classes: usize },
    Regression,
}

/// Final decision of the hard or smoothed model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    Class(usize),
    Value(f64),
}

impl Decision {
    pub fn class(self) -> Option<usize> {
        match self {
            Decision::Class(c) => Some(c),
            Decision::Value(_) => None,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Decision::Class(c) => c as f64,
            Decision::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub decision: Decision,
}

/// Weighted collection of trees. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    trees: Vec<Tree>,
    weights: Vec<f64>,
    n_features: usize,
    n_outputs: usize,
    task: Task,
    feature_names: Option<Vec<String>>,
}

impl Ensemble {
    /// Validates all ensemble invariants. Errors carry a `$.`-rooted path in
    /// model-document coordinates.
    pub fn new(
        trees: Vec<Tree>,
        weights: Vec<f64>,
        n_features: usize,
        n_outputs: usize,
        task: Task,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if weights.len() != trees.len() {
            return Err(Error::model(
                "$.weights",
                format!(
                    "expected {} entries (one per tree), found {}",
                    trees.len(),
                    weights.len()
                ),
            ));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::model(
                format!("$.weights[{i}]"),
                "weight must be finite",
            ));
        }
        if n_features == 0 {
            return Err(Error::model("$.n_features", "must be at least 1"));
        }
        match task {
            Task::Classification { n_classes } => {
                let ok = n_classes >= 2
                    && (n_outputs == n_classes || (n_outputs == 1 && n_classes == 2));
                if !ok {
                    return Err(Error::model(
                        "$.n_outputs",
                        format!("classification with {n_classes} classes cannot have {n_outputs} outputs"),
                    ));
                }
            }
            Task::Regression => {
                if n_outputs != 1 {
                    return Err(Error::model(
                        "$.n_outputs",
                        "regression requires exactly 1 output",
                    ));
                }
            }
        }
        if let Some(names) = &feature_names {
            if names.len() != n_features {
                return Err(Error::model(
                    "$.feature_names",
                    format!("expected {n_features} names, found {}", names.len()),
                ));
            }
        }
        for (t, tree) in trees.iter().enumerate() {
            if let Some((path, msg)) = tree.feature_bound_violation(n_features) {
                return Err(Error::model(format!("$.trees[{t}].{path}"), msg));
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                if let Node::Leaf { value } = node {
                    if value.len() != n_outputs {
                        return Err(Error::model(
                            format!("$.trees[{t}].nodes[{i}].leaf"),
                            format!("leaf has {} values, n_outputs is {n_outputs}", value.len()),
                        ));
                    }
                    if value.iter().any(|v| !v.is_finite()) {
                        return Err(Error::model(
                            format!("$.trees[{t}].nodes[{i}].leaf"),
                            "leaf values must be finite",
                        ));
                    }
                }
            }
        }
        Ok(Ensemble {
            trees,
            weights,
            n_features,
            n_outputs,
            task,
            feature_names,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::model(
                "$.feature_names",
                format!("expected {} names, found {}", self.n_features, names.len()),
            ));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::max_depth).max().unwrap_or(0)
    }

    /// Returns a copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * factor).collect();
        Ensemble::new(
            self.trees.clone(),
            weights,
            self.n_features,
            self.n_outputs,
            self.task,
            self.feature_names.clone(),
        )
    }

    pub fn validate_input(&self, x: &[f64]) -> Result<()> {
        check_len(self.n_features, x.len())?;
        check_finite(x)
    }

    /// Weighted leaf-sum scores without input validation.
    pub fn scores_unchecked(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (tree, &w) in self.trees.iter().zip(&self.weights) {
            for (o, v) in out.iter_mut().zip(tree.leaf_value(x)) {
                *o += w * v;
            }
        }
    }

    /// Decision rule applied to a score vector: argmax (lowest index wins
    /// ties) for multi-output classification, `score > 0` for single-logit
    /// binary classification, identity for regression.
    pub fn decide(&self, scores: &[f64]) -> Decision {
        match self.task {
            Task::Regression => Decision::Value(scores[0]),
            Task::Classification { .. } if self.n_outputs == 1 => {
                Decision::Class(usize::from(scores[0] > 0.0))
            }
            Task::Classification { .. } => Decision::Class(argmax(scores)),
        }
    }

    /// Scores over the classes (two entries `[0, logit]` for a single-logit
    /// binary model), so margin computations are uniform across leaf layouts.
    pub fn class_scores(&self, scores: &[f64]) -> Vec<f64> {
        match self.task {
            Task::Classification { .. } if self.n_outputs == 1 => vec![0.0, scores[0]],
            _ => scores.to_vec(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.validate_input(x)?;
        let mut scores = vec![0.0; self.n_outputs];
        self.scores_unchecked(x, &mut scores);
        let decision = self.decide(&scores);
        Ok(Prediction { scores, decision })
    }

    /// Serializes to a `sta-model/1` JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelDoc::from(self)).expect("model document serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&ModelDoc::from(self)).expect("model document serializes")
    }

    /// Parses and validates a `sta-model/1` document.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let doc: ModelDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." {
                "$".to_string()
            } else {
                format!("$.{path}")
            };
            Error::model(path, e.into_inner().to_string())
        })?;
        doc.into_ensemble()
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate().skip(1) {
        if s > v[best] {
            best = i;
        }
    }
    best
}

pub fn load_model(bytes: &[u8]) -> Result<Ensemble> {
    Ensemble::from_json(bytes)
}

pub fn save_model(ensemble: &Ensemble) -> Vec<u8> {
    ensemble.to_json().into_bytes()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    task: TaskTag,
    n_features: usize,
    n_outputs: usize,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_names: Option<Vec<String>>,
    trees: Vec<TreeDoc>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum TaskTag {
    Classification,
    Regression,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
    root: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: Vec<f64>,
    },
}

impl From<&Ensemble> for ModelDoc {
    fn from(e: &Ensemble) -> Self {
        ModelDoc {
            format: MODEL_FORMAT.to_string(),
            task: match e.task {
                Task::Classification { .. } => TaskTag::Classification,
                Task::Regression => TaskTag::Regression,
            },
            n_features: e.n_features,
            n_outputs: e.n_outputs,
            weights: e.weights.clone(),
            feature_names: e.feature_names.clone(),
            trees: e
                .trees
                .iter()
                .map(|t| TreeDoc {
                    root: t.root,
                    nodes: t
                        .nodes
                        .iter()
                        .map(|n| match n {
                            Node::Internal {
                                feature,
                                threshold,
                                left,
                                right,
                            } => NodeDoc::Split {
                                feature: *feature,
                                threshold: *threshold,
                                left: *left,
                                right: *right,
                            },
                            Node::Leaf { value } => NodeDoc::Leaf {
                                leaf: value.clone(),
                            },
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl ModelDoc {
    fn into_ensemble(self) -> Result<Ensemble> {
        if self.format != MODEL_FORMAT {
            return Err(Error::model(
                "$.format",
                format!(
                    "unknown format {:?}, expected {MODEL_FORMAT:?}",
                    self.format
                ),
            ));
        }
        let task = match self.task {
            TaskTag::Regression => Task::Regression,
            TaskTag::Classification => Task::Classification {
                n_classes: self.n_outputs.max(2),
            },
        };
        let mut trees = Vec::with_capacity(self.trees.len());
        for (t, doc) in self.trees.into_iter().enumerate() {
            let nodes = doc
                .nodes
                .into_iter()
                .map(|n| match n {
                    NodeDoc::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => Node::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                    },
                    NodeDoc::Leaf { leaf } => Node::Leaf { value: leaf },
                })
                .collect();
            let tree = Tree::new(nodes, doc.root).map_err(|e| match e {
                Error::Model { path, message } => {
                    Error::model(format!("$.trees[{t}].{path}"), message)
                }
                other => other,
            })?;
            trees.push(tree);
        }
        Ensemble::new(
            trees,
            self.weights,
            self.n_features,
            self.n_outputs,
            task,
            self.feature_names,
        )
    }
}
