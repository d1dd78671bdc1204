//! Shared fixtures for integration tests.
#![allow(dead_code)]

use rand::Rng;

use sta_core::ensemble::{Ensemble, Node, Task, Tree};
use sta_core::rng::{seeded, StaRng};
use sta_core::smoothing::FeatureScales;

pub fn rng(seed: u64) -> StaRng {
    seeded(seed)
}

fn grow<R: Rng>(
    r: &mut R,
    nodes: &mut Vec<Node>,
    depth: usize,
    max_depth: usize,
    d: usize,
    c: usize,
) -> usize {
    let split = depth < max_depth && (depth == 0 || r.random_bool(0.75));
    if !split {
        nodes.push(Node::Leaf {
            value: (0..c).map(|_| r.random_range(-1.0..1.0)).collect(),
        });
        return nodes.len() - 1;
    }
    let at = nodes.len();
    nodes.push(Node::Leaf {
        value: vec![0.0; c],
    });
    let left = grow(r, nodes, depth + 1, max_depth, d, c);
    let right = grow(r, nodes, depth + 1, max_depth, d, c);
    nodes[at] = Node::Internal {
        feature: r.random_range(0..d),
        threshold: r.random_range(-1.0..1.0),
        left,
        right,
    };
    at
}

pub fn random_tree<R: Rng>(
    r: &mut R,
    max_depth: usize,
    n_features: usize,
    n_outputs: usize,
) -> Tree {
    let mut nodes = Vec::new();
    let root = grow(r, &mut nodes, 0, max_depth, n_features, n_outputs);
    Tree::new(nodes, root).expect("generated tree is valid")
}

/// Random classification ensemble with thresholds in `(-1, 1)`.
pub fn random_ensemble(
    seed: u64,
    n_trees: usize,
    max_depth: usize,
    n_features: usize,
    n_classes: usize,
) -> Ensemble {
    let mut r = rng(seed);
    let trees: Vec<Tree> = (0..n_trees)
        .map(|_| random_tree(&mut r, max_depth, n_features, n_classes))
        .collect();
    let weights = (0..n_trees).map(|_| r.random_range(0.5..1.5)).collect();
    Ensemble::new(
        trees,
        weights,
        n_features,
        n_classes,
        Task::Classification { n_classes },
        None,
    )
    .expect("generated ensemble is valid")
}

pub fn random_point<R: Rng>(r: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| r.random_range(-1.5..1.5)).collect()
}

pub fn unit_scales(d: usize) -> FeatureScales {
    FeatureScales::uniform(d, 1.0).unwrap()
}

pub fn thresholds(model: &Ensemble) -> Vec<(usize, f64)> {
    model
        .trees()
        .iter()
        .flat_map(|t| t.nodes())
        .filter_map(|n| match n {
            Node::Internal {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        })
        .collect()
}

/// True when every coordinate is at least `gap` away from every threshold on
/// its feature.
pub fn clear_of_thresholds(model: &Ensemble, x: &[f64], gap: f64) -> bool {
    thresholds(model)
        .iter()
        .all(|&(j, v)| (x[j] - v).abs() >= gap)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
