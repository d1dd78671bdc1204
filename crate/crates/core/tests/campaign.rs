//! Campaign, sweep and surface behaviour on synthetic data.

mod common;

use sta_core::ensemble::{Decision, Ensemble, Task, Tree};
use sta_core::harness::{
    dump_surface, prepare_folds, run_campaign, synthetic, temperature_sweep, AttackKind,
    CampaignConfig, Dataset, Labels, ModelSource, Surface, DEFAULT_TEMPERATURE_GRID,
};
use sta_core::smoothing::{FeatureScales, SmoothedEnsemble};
use sta_core::trainer::{train_random_forest, TrainConfig};
use sta_core::Error;

fn forest(trees: usize) -> TrainConfig {
    TrainConfig {
        n_estimators: trees,
        max_depth: 4,
        ..TrainConfig::default()
    }
}

fn moons_config() -> CampaignConfig {
    CampaignConfig {
        attacks: vec![
            AttackKind::StaExhaustive,
            AttackKind::StaSampled,
            AttackKind::Random,
        ],
        epsilons: vec![0.2, 0.5, 0.8],
        max_iters: 30,
        train: forest(30),
        ..CampaignConfig::default()
    }
}

#[test]
fn attacks_only_remove_correct_predictions() {
    let ds = synthetic::half_moons(240, 0.15, 1);
    let cfg = CampaignConfig {
        attacks: AttackKind::ALL.to_vec(),
        nes_samples: 5,
        ..moons_config()
    };
    let r = run_campaign(ModelSource::Train, &ds, &cfg).unwrap();
    assert_eq!(r.cells.len(), 4 * 3 * 3);
    assert_eq!(r.aggregates.len(), 4 * 3);
    for c in &r.cells {
        assert!((0.0..=100.0).contains(&c.original_accuracy));
        assert!((0.0..=100.0).contains(&c.post_attack_accuracy));
        assert!(
            c.post_attack_accuracy <= c.original_accuracy + 1e-9,
            "{c:?}"
        );
        assert_eq!(c.box_violations, 0);
    }
    assert_eq!(r.metadata.model_hashes.len(), 3);
}

#[test]
fn larger_radius_never_helps_the_defender() {
    let mut post = [0.0; 3];
    for seed in 0..3 {
        let ds = synthetic::half_moons(240, 0.15, 10 + seed);
        let cfg = CampaignConfig {
            attacks: vec![AttackKind::StaExhaustive],
            seed,
            ..moons_config()
        };
        let r = run_campaign(ModelSource::Train, &ds, &cfg).unwrap();
        for (k, eps) in [0.2, 0.5, 0.8].into_iter().enumerate() {
            post[k] += r
                .aggregate(AttackKind::StaExhaustive, eps)
                .unwrap()
                .post_attack_accuracy_mean
                / 3.0;
        }
    }
    assert!(post[0] >= post[1] && post[1] >= post[2], "{post:?}");
}

#[test]
fn sweep_prefers_a_usable_temperature() {
    let ds = synthetic::half_moons(300, 0.15, 3);
    let cfg = CampaignConfig {
        attacks: vec![AttackKind::StaExhaustive],
        epsilons: vec![0.2],
        max_iters: 30,
        train: forest(50),
        ..CampaignConfig::default()
    };
    let sweep =
        temperature_sweep(ModelSource::Train, &ds, &DEFAULT_TEMPERATURE_GRID, &cfg).unwrap();
    assert_eq!(sweep.rows.len(), 4);
    assert!(DEFAULT_TEMPERATURE_GRID.contains(&sweep.best_temperature));
    let best = sweep
        .rows
        .iter()
        .map(|r| r.post_attack_accuracy_mean)
        .fold(f64::INFINITY, f64::min);
    let best_row = sweep
        .rows
        .iter()
        .find(|r| r.temperature == sweep.best_temperature)
        .unwrap();
    assert_eq!(best_row.post_attack_accuracy_mean, best);

    // a near-hard surrogate has saturated gradients: it cannot beat the best τ
    let hard = temperature_sweep(ModelSource::Train, &ds, &[1e-6], &cfg).unwrap();
    assert!(
        hard.rows[0].post_attack_accuracy_mean >= best,
        "{} < {best}",
        hard.rows[0].post_attack_accuracy_mean
    );

    // fidelity side table: agreement does not rise with τ
    for w in sweep.fidelity.windows(2) {
        assert!(w[0].temperature < w[1].temperature);
        assert!(w[1].agreement <= w[0].agreement, "{:?}", sweep.fidelity);
    }
}

fn trained_moons() -> (Dataset, Ensemble) {
    let ds = synthetic::half_moons(300, 0.15, 4);
    let Labels::Classes(ys) = &ds.labels else {
        unreachable!()
    };
    let m = train_random_forest(&ds.features, ys, 2, &forest(50)).unwrap();
    (ds, m)
}

#[test]
fn smoothed_surfaces() {
    let (ds, m) = trained_moons();
    let scales = FeatureScales::from_rows(&ds.features, 2).unwrap();
    let bounds = ((0.5, 4.5), (1.0, 3.5));
    let hard = dump_surface(Surface::Hard(&m), 0, 1, &[2.0, 2.0], bounds.0, bounds.1, 60).unwrap();
    let distinct = |g: &sta_core::harness::SurfaceGrid| {
        let mut v: Vec<Vec<u64>> = g
            .points
            .iter()
            .map(|p| p.scores.iter().map(|s| s.to_bits()).collect())
            .collect();
        v.sort();
        v.dedup();
        v.len()
    };

    let cold = SmoothedEnsemble::new(&m, scales.clone(), 1e-4).unwrap();
    let cold_grid = dump_surface(
        Surface::Smoothed(&cold),
        0,
        1,
        &[2.0, 2.0],
        bounds.0,
        bounds.1,
        60,
    )
    .unwrap();
    let agree = hard
        .points
        .iter()
        .zip(&cold_grid.points)
        .filter(|(a, b)| a.decision == b.decision)
        .count();
    assert!(
        agree as f64 >= 0.99 * hard.points.len() as f64,
        "{agree}/{}",
        hard.points.len()
    );

    let warm = SmoothedEnsemble::new(&m, scales, 0.1).unwrap();
    let warm_grid = dump_surface(
        Surface::Smoothed(&warm),
        0,
        1,
        &[2.0, 2.0],
        bounds.0,
        bounds.1,
        60,
    )
    .unwrap();
    assert!(distinct(&warm_grid) > distinct(&hard));
}

#[test]
fn external_model_with_designated_fit_data() {
    let (fit, m) = trained_moons();
    let attack_set = synthetic::half_moons(90, 0.15, 99);
    let cfg = CampaignConfig {
        attacks: vec![AttackKind::StaExhaustive, AttackKind::Random],
        epsilons: vec![0.3],
        folds: 1,
        max_iters: 20,
        ..CampaignConfig::default()
    };
    let source = ModelSource::Fixed {
        model: &m,
        fit_data: Some(&fit),
    };
    let folds = prepare_folds(source, &attack_set, &cfg).unwrap();
    assert_eq!(folds.len(), 1);
    assert_eq!(folds[0].test_rows.len(), 90);
    let r = run_campaign(source, &attack_set, &cfg).unwrap();
    assert_eq!(r.cells.len(), 2);

    // without designated data the complement folds are used and k >= 2 applies
    let no_fit = ModelSource::Fixed {
        model: &m,
        fit_data: None,
    };
    assert!(matches!(
        run_campaign(no_fit, &attack_set, &cfg),
        Err(Error::Config(_))
    ));
    let r = run_campaign(no_fit, &attack_set, &CampaignConfig { folds: 3, ..cfg }).unwrap();
    assert_eq!(r.cells.len(), 6);
}

#[test]
fn regression_campaign() {
    // ŷ = x0 + x1 split at 0 on each axis
    let m = Ensemble::new(
        vec![
            Tree::stump(0, 0.0, vec![1.0], vec![-1.0]),
            Tree::stump(1, 0.0, vec![1.0], vec![-1.0]),
        ],
        vec![1.0, 1.0],
        2,
        1,
        Task::Regression,
        None,
    )
    .unwrap();
    let mut r = common::rng(3);
    let features: Vec<Vec<f64>> = (0..60).map(|_| common::random_point(&mut r, 2)).collect();
    let values: Vec<f64> = features
        .iter()
        .map(|x| match m.predict(x).unwrap().decision {
            Decision::Value(v) => v,
            Decision::Class(_) => unreachable!(),
        })
        .collect();
    let ds = Dataset::new(
        features,
        Labels::Values(values),
        vec!["a".into(), "b".into()],
        "reg",
    )
    .unwrap();
    let cfg = CampaignConfig {
        attacks: vec![AttackKind::StaExhaustive, AttackKind::Random],
        epsilons: vec![0.5],
        delta: 0.5,
        max_iters: 20,
        temperature: 0.5,
        ..CampaignConfig::default()
    };
    let rep = run_campaign(
        ModelSource::Fixed {
            model: &m,
            fit_data: None,
        },
        &ds,
        &cfg,
    )
    .unwrap();
    for c in &rep.cells {
        assert_eq!(c.original_accuracy, 100.0);
        assert!(c.post_attack_accuracy < 100.0, "{c:?}");
    }
    // the built-in trainer is classification only
    assert!(matches!(
        run_campaign(ModelSource::Train, &ds, &cfg),
        Err(Error::Config(_))
    ));
}
