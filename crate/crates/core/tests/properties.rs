//! Randomized invariants across ensemble, trainer, smoothing, perturbation
//! and attack code.

mod common;

use proptest::prelude::*;

use common::{clear_of_thresholds, random_ensemble, random_point, random_tree, rng, unit_scales};
use sta_core::attack::{
    nes_attack, random_attack, sta_attack, violates_criterion, AttackConfig, AttackCriteria,
    AttackResult, GradientMode, NesConfig, Target,
};
use sta_core::ensemble::{load_model, save_model, Decision, Ensemble, Node, Task, Tree};
use sta_core::perturb::{fit_columns, make_box, quantile_distance, Ecdf};
use sta_core::smoothing::{FeatureScales, SmoothedEnsemble};
use sta_core::trainer::{train_random_forest, TrainConfig};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

/// Result fields that must be reproducible (everything but timing).
fn fingerprint(r: &AttackResult) -> (bool, Vec<u64>, usize, usize, usize, usize) {
    (
        r.success,
        r.x_adv.iter().map(|v| v.to_bits()).collect(),
        r.iterations_used,
        r.model_queries,
        r.whitebox_evaluations,
        r.box_violations,
    )
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn routing_is_deterministic(seed in any::<u64>(), px in any::<u64>()) {
        let m = random_ensemble(seed, 5, 4, 4, 3);
        let x = random_point(&mut rng(px), 4);
        prop_assert_eq!(m.predict(&x).unwrap(), m.predict(&x).unwrap());
        for t in m.trees() {
            prop_assert_eq!(t.leaf_index(&x), t.leaf_index(&x));
        }
    }

    #[test]
    fn equality_routes_right_and_next_ulp_left(v in -1e6f64..1e6, j in 0usize..3) {
        let t = Tree::stump(j, v, vec![1.0], vec![2.0]);
        let mut x = vec![0.0; 3];
        x[j] = v;
        prop_assert_eq!(t.predict(&x, 3).unwrap(), vec![2.0]);
        x[j] = v.next_up();
        prop_assert_eq!(t.predict(&x, 3).unwrap(), vec![1.0]);
    }

    #[test]
    fn scaling_weights_scales_scores(seed in any::<u64>(), px in any::<u64>(), c in 0.01f64..100.0) {
        let m = random_ensemble(seed, 6, 3, 3, 3);
        let scaled = m.scaled(c).unwrap();
        let x = random_point(&mut rng(px), 3);
        let a = m.predict(&x).unwrap();
        let b = scaled.predict(&x).unwrap();
        for (sa, sb) in a.scores.iter().zip(&b.scores) {
            prop_assert!((sa * c - sb).abs() <= 1e-12 * (1.0 + sb.abs()));
        }
        // argmax can only change on an exact tie broken by round-off
        let sorted = {
            let mut s = a.scores.clone();
            s.sort_by(f64::total_cmp);
            s
        };
        if sorted[2] - sorted[1] > 1e-9 {
            prop_assert_eq!(a.decision, b.decision);
        }
    }

    #[test]
    fn serialization_round_trip_is_exact(seed in any::<u64>()) {
        let m = random_ensemble(seed, 4, 4, 5, 2);
        let back = load_model(&save_model(&m)).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(Ensemble::from_json(m.to_json().as_bytes()).unwrap(), m);
    }

    #[test]
    fn trained_forests_are_valid(
        seed in any::<u64>(),
        n in 4usize..40,
        depth in 1usize..5,
        n_classes in 2usize..4,
    ) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut r, 3)).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
        let cfg = TrainConfig { n_estimators: 5, max_depth: depth, seed, ..TrainConfig::default() };
        let m = train_random_forest(&rows, &labels, n_classes, &cfg).unwrap();
        // re-validate through the public constructor
        let again = Ensemble::new(m.trees().to_vec(), m.weights().to_vec(), 3, n_classes, m.task(), None).unwrap();
        prop_assert!(again.max_depth() <= depth);
        for t in m.trees() {
            prop_assert!(t.max_depth() <= depth);
            for node in t.nodes() {
                if let Node::Leaf { value } = node {
                    prop_assert!((value.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn soft_path_probabilities_sum_to_one(seed in any::<u64>(), px in any::<u64>(), tau in 1e-3f64..10.0) {
        let m = random_ensemble(seed, 3, 4, 3, 2);
        let s = SmoothedEnsemble::new(&m, unit_scales(3), tau).unwrap();
        let x = random_point(&mut rng(px), 3);
        for t in m.trees() {
            let total: f64 = s.leaf_probabilities(t, &x).unwrap().iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn hard_leaf_mass_grows_as_temperature_drops(seed in any::<u64>(), px in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_tree(&mut r, 4, 3, 2);
        let m = Ensemble::new(vec![t], vec![1.0], 3, 2, Task::Classification { n_classes: 2 }, None).unwrap();
        let x = random_point(&mut rng(px), 3);
        prop_assume!(clear_of_thresholds(&m, &x, 0.01));
        let hard_leaf = m.trees()[0].leaf_index(&x);
        let mut prev = 0.0;
        for tau in [1.0, 0.1, 0.01, 0.001] {
            let s = SmoothedEnsemble::new(&m, unit_scales(3), tau).unwrap();
            let mass = s
                .leaf_probabilities(&m.trees()[0], &x)
                .unwrap()
                .into_iter()
                .find(|&(leaf, _)| leaf == hard_leaf)
                .map_or(0.0, |(_, p)| p);
            prop_assert!(mass >= prev, "tau {tau}: {mass} < {prev}");
            prev = mass;
        }
    }

    #[test]
    fn stump_score_gap_shrinks_as_temperature_drops(v in -1.0f64..1.0, x0 in -1.5f64..1.5, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        prop_assume!((x0 - v).abs() >= 0.01);
        let m = Ensemble::new(
            vec![Tree::stump(0, v, vec![a, b], vec![b, a])],
            vec![1.0],
            1,
            2,
            Task::Classification { n_classes: 2 },
            None,
        )
        .unwrap();
        let hard = m.predict(&[x0]).unwrap().scores;
        let mut prev = f64::INFINITY;
        for tau in [1.0, 0.1, 0.01, 0.001] {
            let soft = SmoothedEnsemble::new(&m, unit_scales(1), tau).unwrap().predict(&[x0]).unwrap();
            let gap = soft.iter().zip(&hard).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(gap <= prev, "tau {tau}: {gap} > {prev}");
            prev = gap;
        }
    }

    #[test]
    fn traversal_costs(seed in any::<u64>(), px in any::<u64>(), n_samples in 1usize..4) {
        let m = random_ensemble(seed, 5, 4, 3, 2);
        let s = SmoothedEnsemble::new(&m, unit_scales(3), 0.5).unwrap();
        let x = random_point(&mut rng(px), 3);
        let (_, _, exact) = s.scores_and_jacobian(&x).unwrap();
        let nodes: usize = m.trees().iter().map(Tree::node_count).sum();
        prop_assert_eq!(exact.0 as usize, nodes);
        let (_, _, sampled) = s.sampled_scores_and_jacobian(&x, n_samples, &mut rng(seed ^ px)).unwrap();
        let bound: usize = m.trees().iter().map(Tree::max_depth).sum::<usize>() * n_samples;
        prop_assert!(sampled.0 as usize <= bound);
    }

    #[test]
    fn ecdf_is_monotone_and_round_trips(values in prop::collection::vec(-1e3f64..1e3, 1..40), probes in prop::collection::vec(-2e3f64..2e3, 1..20)) {
        let e = Ecdf::fit(&values).unwrap();
        let mut xs = probes.clone();
        xs.sort_by(f64::total_cmp);
        for w in xs.windows(2) {
            prop_assert!(e.cdf(w[0]) <= e.cdf(w[1]));
        }
        let mut qs: Vec<f64> = probes.iter().map(|p| (p.abs() / 2e3).min(1.0)).collect();
        qs.sort_by(f64::total_cmp);
        for w in qs.windows(2) {
            prop_assert!(e.inverse_cdf(w[0]).unwrap() <= e.inverse_cdf(w[1]).unwrap());
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() == values.len() {
            for &k in e.knots_x() {
                prop_assert_eq!(e.inverse_cdf(e.cdf(k)).unwrap(), k);
            }
        }
    }

    #[test]
    fn projected_points_stay_in_quantile_ball(
        seed in any::<u64>(),
        eps in 0.0f64..1.0,
        n in 1usize..30,
    ) {
        use rand::Rng;
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-3.0..3.0), r.random_range(0..4) as f64]).collect();
        let ecdfs = fit_columns(&rows, 2).unwrap();
        let x0 = rows[r.random_range(0..n)].clone();
        let b = make_box(&ecdfs, &x0, eps).unwrap();
        prop_assert!(b.contains(&x0));
        for _ in 0..20 {
            let x = b.project(&[r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)]);
            prop_assert!(quantile_distance(&ecdfs, &x, &x0) <= eps + 1e-9);
        }
    }

    #[test]
    fn attacks_are_sound_and_reproducible(seed in any::<u64>(), eps in 0.05f64..0.9, sampled in any::<bool>()) {
        let m = random_ensemble(seed, 6, 3, 3, 2);
        let mut r = rng(seed ^ 0x5eed);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| random_point(&mut r, 3)).collect();
        let ecdfs = fit_columns(&rows, 3).unwrap();
        let scales = FeatureScales::from_rows(&rows, 3).unwrap();
        let x0 = rows[0].clone();
        let y = match m.predict(&x0).unwrap().decision {
            Decision::Class(c) => c,
            Decision::Value(_) => unreachable!(),
        };
        let target = Target::Class(y);
        let criteria = AttackCriteria::new(eps, 0.0).unwrap();
        let cfg = AttackConfig {
            criteria,
            max_iters: 15,
            temperature: 0.3,
            mode: if sampled { GradientMode::Sampled { n_samples: 1 } } else { GradientMode::Exhaustive },
            seed,
            ..AttackConfig::default()
        };
        let s = cfg.smooth(&m, scales).unwrap();
        let nes = NesConfig { criteria, max_iters: 3, samples: 4, seed, ..NesConfig::default() };
        let results = [
            (sta_attack(&s, &ecdfs, &x0, target, &cfg).unwrap(), sta_attack(&s, &ecdfs, &x0, target, &cfg).unwrap()),
            (
                random_attack(&m, &ecdfs, &x0, target, &criteria, 15, &mut rng(seed)).unwrap(),
                random_attack(&m, &ecdfs, &x0, target, &criteria, 15, &mut rng(seed)).unwrap(),
            ),
            (nes_attack(&m, &ecdfs, &x0, target, &nes).unwrap(), nes_attack(&m, &ecdfs, &x0, target, &nes).unwrap()),
        ];
        for (a, b) in &results {
            prop_assert_eq!(fingerprint(a), fingerprint(b));
            prop_assert_eq!(a.box_violations, 0);
            prop_assert!(quantile_distance(&ecdfs, &a.x_adv, &x0) <= eps + 1e-9);
            if a.success {
                prop_assert!(violates_criterion(&m, &x0, &a.x_adv, target, 0.0).unwrap());
            }
        }
    }
}
