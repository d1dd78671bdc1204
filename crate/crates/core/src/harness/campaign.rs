//! Cross-validated attack campaigns and the temperature sweep.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{kfold, Dataset, Labels};
use crate::attack::{
    nes_attack_with_rng, random_attack, smoothed_class, sta_attack_with_rng, violates_criterion,
    AttackConfig, AttackCriteria, AttackResult, GradientMode, NesConfig, Target,
};
use crate::ensemble::{Decision, Ensemble, Task};
use crate::error::{Error, Result};
use crate::perturb::{fit_columns, Ecdf};
use crate::rng;
use crate::smoothing::{FeatureScales, SmoothedEnsemble};
use crate::trainer::{train_random_forest, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    StaExhaustive,
    StaSampled,
    Random,
    Nes,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        AttackKind::StaExhaustive,
        AttackKind::StaSampled,
        AttackKind::Random,
        AttackKind::Nes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::StaExhaustive => "sta-exhaustive",
            AttackKind::StaSampled => "sta-sampled",
            AttackKind::Random => "random",
            AttackKind::Nes => "nes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown attack {s:?}")))
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// Everything that shapes a campaign. Serialized into report metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub attacks: Vec<AttackKind>,
    pub epsilons: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Regression success threshold on the prediction shift.
    pub delta: f64,
    /// Iterations per STA and NES run.
    pub max_iters: usize,
    pub step_size: f64,
    pub noise_level: f64,
    pub temperature: f64,
    pub noise: bool,
    /// Paths per tree for `sta-sampled`.
    pub sampled_paths: usize,
    /// Candidates for `random`; `None` matches the STA query budget.
    pub random_budget: Option<usize>,
    pub nes_samples: usize,
    pub nes_sigma: f64,
    pub nes_step: f64,
    pub early_stop: bool,
    /// Used only when the campaign trains its own models.
    pub train: TrainConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let sta = AttackConfig::default();
        let nes = NesConfig::default();
        CampaignConfig {
            attacks: AttackKind::ALL.to_vec(),
            epsilons: vec![0.2, 0.5, 0.8],
            folds: 3,
            seed: 0,
            delta: 0.0,
            max_iters: sta.max_iters,
            step_size: sta.step_size,
            noise_level: sta.noise_level,
            temperature: sta.temperature,
            noise: sta.noise,
            sampled_paths: 1,
            random_budget: None,
            nes_samples: nes.samples,
            nes_sigma: nes.sigma,
            nes_step: nes.step_size,
            early_stop: true,
            train: TrainConfig::default(),
        }
    }
}

impl CampaignConfig {
    fn validate(&self) -> Result<()> {
        if self.attacks.is_empty() {
            return Err(Error::Config("no attacks selected".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("no epsilon values given".into()));
        }
        for &e in &self.epsilons {
            AttackCriteria::new(e, self.delta)?;
        }
        self.sta_config(self.epsilons[0], AttackKind::StaExhaustive)
            .validate()?;
        if self.sampled_paths == 0 {
            return Err(Error::Config("sampled paths must be at least 1".into()));
        }
        Ok(())
    }

    fn criteria(&self, epsilon: f64) -> AttackCriteria {
        AttackCriteria {
            epsilon,
            delta: self.delta,
        }
    }

    pub fn sta_config(&self, epsilon: f64, kind: AttackKind) -> AttackConfig {
        AttackConfig {
            criteria: self.criteria(epsilon),
            max_iters: self.max_iters,
            step_size: self.step_size,
            noise_level: self.noise_level,
            temperature: self.temperature,
            mode: match kind {
                AttackKind::StaSampled => GradientMode::Sampled {
                    n_samples: self.sampled_paths,
                },
                _ => GradientMode::Exhaustive,
            },
            noise: self.noise,
            seed: self.seed,
            early_stop: self.early_stop,
            record_trace: false,
        }
    }

    pub fn nes_config(&self, epsilon: f64) -> NesConfig {
        NesConfig {
            criteria: self.criteria(epsilon),
            max_iters: self.max_iters,
            samples: self.nes_samples,
            sigma: self.nes_sigma,
            step_size: self.nes_step,
            seed: self.seed,
            early_stop: self.early_stop,
            record_trace: false,
        }
    }

    pub fn random_budget(&self) -> usize {
        self.random_budget.unwrap_or(self.max_iters)
    }
}

/// Where the attacked model comes from.
#[derive(Debug, Clone, Copy)]
pub enum ModelSource<'a> {
    /// Train a forest per fold on the complement folds.
    Train,
    /// Attack a fixed model. Folds partition only the attack set; σ and the
    /// ECDFs come from `fit_data` when given, else from the complement folds.
    Fixed {
        model: &'a Ensemble,
        fit_data: Option<&'a Dataset>,
    },
}

/// Rows a fitted artefact was derived from. `External` marks data that is not
/// part of the attacked dataset at all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Rows(BTreeSet<usize>),
    External,
}

impl Provenance {
    fn overlaps(&self, rows: &[usize]) -> bool {
        match self {
            Provenance::Rows(set) => rows.iter().any(|r| set.contains(r)),
            Provenance::External => false,
        }
    }
}

/// One fold with its fitted statistics and model, ready to attack.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub fold: usize,
    pub test_rows: Vec<usize>,
    pub model: Ensemble,
    pub scales: FeatureScales,
    pub ecdfs: Vec<Ecdf>,
    pub model_provenance: Provenance,
    pub stats_provenance: Provenance,
}

impl PreparedFold {
    /// Fails if any test row contributed to this fold's model, σ or ECDFs.
    pub fn check_discipline(&self) -> Result<()> {
        if self.model_provenance.overlaps(&self.test_rows)
            || self.stats_provenance.overlaps(&self.test_rows)
        {
            return Err(Error::Config(format!(
                "fold {}: test rows leaked into fitted model or statistics",
                self.fold
            )));
        }
        Ok(())
    }
}

fn check_compatible(model: &Ensemble, dataset: &Dataset, config: &CampaignConfig) -> Result<()> {
    if model.n_features() != dataset.n_features() {
        return Err(Error::Config(format!(
            "model expects {} features, dataset has {}",
            model.n_features(),
            dataset.n_features()
        )));
    }
    match (model.task(), &dataset.labels) {
        (Task::Classification { n_classes }, Labels::Classes(ys)) => {
            if let Some(&bad) = ys.iter().find(|&&y| y >= n_classes) {
                return Err(Error::Config(format!(
                    "label {bad} out of range for a {n_classes}-class model"
                )));
            }
            if config.delta != 0.0 {
                return Err(Error::Config(
                    "delta applies to regression models only".into(),
                ));
            }
            Ok(())
        }
        (Task::Regression, Labels::Values(_)) => Ok(()),
        (Task::Classification { .. }, Labels::Values(_)) => Err(Error::Config(
            "real-valued labels given for a classification model".into(),
        )),
        (Task::Regression, Labels::Classes(_)) => Err(Error::Config(
            "class labels given for a regression model".into(),
        )),
    }
}

/// Splits the dataset and fits per-fold statistics and models.
pub fn prepare_folds(
    source: ModelSource<'_>,
    dataset: &Dataset,
    config: &CampaignConfig,
) -> Result<Vec<PreparedFold>> {
    let designated = matches!(
        source,
        ModelSource::Fixed {
            fit_data: Some(_),
            ..
        }
    );
    let folds = if config.folds == 1 && designated {
        vec![(0..dataset.n_rows()).collect()]
    } else {
        kfold(dataset.n_rows(), config.folds, config.seed)?
    };
    let d = dataset.n_features();
    let mut out = Vec::with_capacity(folds.len());
    for (f, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        let train_set: BTreeSet<usize> = train_rows.iter().copied().collect();
        let (scales, ecdfs, stats_provenance) = match source {
            ModelSource::Fixed {
                fit_data: Some(fit),
                ..
            } => {
                if fit.n_features() != d {
                    return Err(Error::Config(format!(
                        "fit data has {} features, dataset has {d}",
                        fit.n_features()
                    )));
                }
                (
                    FeatureScales::from_rows(&fit.features, d)?,
                    fit_columns(&fit.features, d)?,
                    Provenance::External,
                )
            }
            _ => {
                let rows = dataset.rows(&train_rows);
                (
                    FeatureScales::from_rows(&rows, d)?,
                    fit_columns(&rows, d)?,
                    Provenance::Rows(train_set.clone()),
                )
            }
        };
        let (model, model_provenance) = match source {
            ModelSource::Train => {
                let Labels::Classes(ys) = &dataset.labels else {
                    return Err(Error::Config(
                        "internal training supports class labels only; supply a regression model instead".into(),
                    ));
                };
                let rows = dataset.rows(&train_rows);
                let labels: Vec<usize> = train_rows.iter().map(|&i| ys[i]).collect();
                let n_classes = dataset.labels.n_classes().unwrap_or(2);
                let mut train = config.train.clone();
                train.seed = config.train.seed.wrapping_add(f as u64);
                let model = train_random_forest(&rows, &labels, n_classes, &train)?;
                (model, Provenance::Rows(train_set))
            }
            ModelSource::Fixed { model, .. } => (model.clone(), Provenance::External),
        };
        check_compatible(&model, dataset, config)?;
        let prepared = PreparedFold {
            fold: f,
            test_rows: test_rows.clone(),
            model,
            scales,
            ecdfs,
            model_provenance,
            stats_provenance,
        };
        prepared.check_discipline()?;
        out.push(prepared);
    }
    Ok(out)
}

/// Per-sample outcome of one attack run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub row: usize,
    pub originally_correct: bool,
    pub correct_after: bool,
    pub result: AttackResult,
}

/// One (attack, ε, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub attack: AttackKind,
    pub epsilon: f64,
    pub fold: usize,
    pub n_samples: usize,
    /// Percentages in `[0, 100]`.
    pub original_accuracy: f64,
    pub post_attack_accuracy: f64,
    pub successes: usize,
    pub total_queries: u64,
    pub whitebox_evaluations: u64,
    pub box_violations: u64,
    pub total_iterations: u64,
    /// Attack execution only, summed over samples. Volatile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_seconds: Option<f64>,
    /// Wall clock of the whole cell, parallel execution included. Volatile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl CellResult {
    pub fn mean_sample_seconds(&self) -> Option<f64> {
        self.attack_seconds
            .map(|s| s / self.n_samples.max(1) as f64)
    }
}

/// Mean ± sample standard deviation across folds for one (attack, ε).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub attack: AttackKind,
    pub epsilon: f64,
    pub original_accuracy_mean: f64,
    pub original_accuracy_std: f64,
    pub post_attack_accuracy_mean: f64,
    pub post_attack_accuracy_std: f64,
    pub total_queries: u64,
    pub whitebox_evaluations: u64,
    pub box_violations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub toolkit_version: String,
    pub dataset: String,
    pub n_rows: usize,
    pub n_features: usize,
    /// SHA-256 of each fold's serialized model.
    pub model_hashes: Vec<String>,
    pub seed: u64,
    pub config: CampaignConfig,
    /// Seconds since the Unix epoch. Volatile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub metadata: ReportMetadata,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<AggregateResult>,
}

impl CampaignReport {
    /// Copy with timing and timestamp fields removed, for byte-stable output.
    pub fn without_volatile(&self) -> Self {
        let mut r = self.clone();
        r.metadata.generated_at = None;
        for c in &mut r.cells {
            c.attack_seconds = None;
            c.wall_clock_seconds = None;
        }
        for a in &mut r.aggregates {
            a.wall_clock_seconds = None;
        }
        r
    }

    pub fn aggregate(&self, attack: AttackKind, epsilon: f64) -> Option<&AggregateResult> {
        self.aggregates
            .iter()
            .find(|a| a.attack == attack && a.epsilon == epsilon)
    }

    pub fn cells_for(&self, attack: AttackKind, epsilon: f64) -> impl Iterator<Item = &CellResult> {
        self.cells
            .iter()
            .filter(move |c| c.attack == attack && c.epsilon == epsilon)
    }
}

pub fn model_hash(model: &Ensemble) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(model.to_json().as_bytes()))
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one cell; independent of list order so reordering attacks or
/// epsilons leaves each cell's numbers unchanged.
fn cell_seed(seed: u64, kind: AttackKind, epsilon: f64, fold: usize) -> u64 {
    mix(mix(mix(seed ^ kind.tag()) ^ epsilon.to_bits()) ^ fold as u64)
}

fn is_correct(model: &Ensemble, x0: &[f64], x: &[f64], target: Target, delta: f64) -> Result<bool> {
    match target {
        Target::Class(y) => Ok(model.predict(x)?.decision == Decision::Class(y)),
        Target::Value(_) => Ok(!violates_criterion(model, x0, x, target, delta)?),
    }
}

/// Attacks every test row of one fold. Rows are processed in parallel and
/// each draws from its own RNG stream, so results do not depend on the
/// thread count.
pub fn attack_fold(
    fold: &PreparedFold,
    dataset: &Dataset,
    kind: AttackKind,
    epsilon: f64,
    config: &CampaignConfig,
) -> Result<Vec<SampleOutcome>> {
    let seed = cell_seed(config.seed, kind, epsilon, fold.fold);
    let sta = config.sta_config(epsilon, kind);
    let nes = config.nes_config(epsilon);
    let criteria = config.criteria(epsilon);
    let smoothed = SmoothedEnsemble::new(&fold.model, fold.scales.clone(), config.temperature)?;
    fold.test_rows
        .par_iter()
        .map(|&row| {
            let x0 = &dataset.features[row];
            let target = dataset.labels.target(row);
            let mut r = rng::stream(seed, row as u64);
            let result = match kind {
                AttackKind::StaExhaustive | AttackKind::StaSampled => {
                    sta_attack_with_rng(&smoothed, &fold.ecdfs, x0, target, &sta, &mut r)?
                }
                AttackKind::Random => random_attack(
                    &fold.model,
                    &fold.ecdfs,
                    x0,
                    target,
                    &criteria,
                    config.random_budget(),
                    &mut r,
                )?,
                AttackKind::Nes => {
                    nes_attack_with_rng(&fold.model, &fold.ecdfs, x0, target, &nes, &mut r)?
                }
            };
            let originally_correct = is_correct(&fold.model, x0, x0, target, config.delta)?;
            let correct_after = is_correct(&fold.model, x0, &result.x_adv, target, config.delta)?;
            Ok(SampleOutcome {
                row,
                originally_correct,
                correct_after,
                result,
            })
        })
        .collect()
}

fn summarize(
    outcomes: &[SampleOutcome],
    kind: AttackKind,
    epsilon: f64,
    fold: usize,
    wall: f64,
) -> CellResult {
    let n = outcomes.len();
    let pct = |k: usize| {
        if n == 0 {
            0.0
        } else {
            100.0 * k as f64 / n as f64
        }
    };
    CellResult {
        attack: kind,
        epsilon,
        fold,
        n_samples: n,
        original_accuracy: pct(outcomes.iter().filter(|o| o.originally_correct).count()),
        post_attack_accuracy: pct(outcomes
            .iter()
            .filter(|o| o.originally_correct && o.correct_after)
            .count()),
        successes: outcomes.iter().filter(|o| o.result.success).count(),
        total_queries: outcomes.iter().map(|o| o.result.model_queries as u64).sum(),
        whitebox_evaluations: outcomes
            .iter()
            .map(|o| o.result.whitebox_evaluations as u64)
            .sum(),
        box_violations: outcomes
            .iter()
            .map(|o| o.result.box_violations as u64)
            .sum(),
        total_iterations: outcomes
            .iter()
            .map(|o| o.result.iterations_used as u64)
            .sum(),
        attack_seconds: Some(
            outcomes
                .iter()
                .map(|o| o.result.elapsed.as_secs_f64())
                .sum(),
        ),
        wall_clock_seconds: Some(wall),
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() < 2 {
        0.0
    } else {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

fn aggregate(
    cells: &[CellResult],
    attacks: &[AttackKind],
    epsilons: &[f64],
) -> Vec<AggregateResult> {
    let mut out = Vec::new();
    for &attack in attacks {
        for &epsilon in epsilons {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.attack == attack && c.epsilon == epsilon)
                .collect();
            if group.is_empty() {
                continue;
            }
            let orig: Vec<f64> = group.iter().map(|c| c.original_accuracy).collect();
            let post: Vec<f64> = group.iter().map(|c| c.post_attack_accuracy).collect();
            let (om, os) = mean_std(&orig);
            let (pm, ps) = mean_std(&post);
            out.push(AggregateResult {
                attack,
                epsilon,
                original_accuracy_mean: om,
                original_accuracy_std: os,
                post_attack_accuracy_mean: pm,
                post_attack_accuracy_std: ps,
                total_queries: group.iter().map(|c| c.total_queries).sum(),
                whitebox_evaluations: group.iter().map(|c| c.whitebox_evaluations).sum(),
                box_violations: group.iter().map(|c| c.box_violations).sum(),
                wall_clock_seconds: group.iter().map(|c| c.wall_clock_seconds).sum(),
            });
        }
    }
    out
}

/// Runs every (attack, ε) on already prepared folds.
pub fn run_prepared(
    folds: &[PreparedFold],
    dataset: &Dataset,
    config: &CampaignConfig,
) -> Result<CampaignReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &kind in &config.attacks {
        for &eps in &config.epsilons {
            for fold in folds {
                let t = Instant::now();
                let outcomes = attack_fold(fold, dataset, kind, eps, config)?;
                let wall = t.elapsed().as_secs_f64();
                let cell = summarize(&outcomes, kind, eps, fold.fold, wall);
                log::info!(
                    "{} eps={} fold={}: accuracy {:.2}% -> {:.2}%",
                    kind.name(),
                    eps,
                    fold.fold,
                    cell.original_accuracy,
                    cell.post_attack_accuracy
                );
                if cell.box_violations > 0 {
                    log::error!(
                        "{} eps={} fold={}: {} box violations",
                        kind.name(),
                        eps,
                        fold.fold,
                        cell.box_violations
                    );
                }
                cells.push(cell);
            }
        }
    }
    let aggregates = aggregate(&cells, &config.attacks, &config.epsilons);
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .ok();
    Ok(CampaignReport {
        metadata: ReportMetadata {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: dataset.source_path.clone(),
            n_rows: dataset.n_rows(),
            n_features: dataset.n_features(),
            model_hashes: folds.iter().map(|f| model_hash(&f.model)).collect(),
            seed: config.seed,
            config: config.clone(),
            generated_at,
        },
        cells,
        aggregates,
    })
}

/// Splits, fits, trains or reuses the model, and attacks every test row.
pub fn run_campaign(
    source: ModelSource<'_>,
    dataset: &Dataset,
    config: &CampaignConfig,
) -> Result<CampaignReport> {
    config.validate()?;
    let folds = prepare_folds(source, dataset, config)?;
    run_prepared(&folds, dataset, config)
}

pub const DEFAULT_TEMPERATURE_GRID: [f64; 4] = [0.001, 0.01, 0.1, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub temperature: f64,
    pub attack: AttackKind,
    pub epsilon: f64,
    pub post_attack_accuracy_mean: f64,
    pub post_attack_accuracy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub temperature: f64,
    /// Percentage of clean test rows where smoothed and hard argmax agree.
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fidelity: Vec<FidelityRow>,
    pub best_temperature: f64,
    pub model_hashes: Vec<String>,
    pub config: CampaignConfig,
}

/// Hard/smoothed argmax agreement over the clean test rows of all folds.
pub fn fidelity(folds: &[PreparedFold], dataset: &Dataset, temperature: f64) -> Result<f64> {
    let mut agree = 0usize;
    let mut total = 0usize;
    for fold in folds {
        let smoothed = SmoothedEnsemble::new(&fold.model, fold.scales.clone(), temperature)?;
        for &row in &fold.test_rows {
            let x = &dataset.features[row];
            let hard = fold.model.predict(x)?.decision;
            let same = match hard {
                Decision::Class(c) => smoothed_class(&smoothed, x)? == c,
                Decision::Value(v) => {
                    (smoothed.predict(x)?[0] - v).abs() <= 1e-9 * v.abs().max(1.0)
                }
            };
            agree += same as usize;
            total += 1;
        }
    }
    Ok(if total == 0 {
        100.0
    } else {
        100.0 * agree as f64 / total as f64
    })
}

/// Runs the campaign once per temperature and recommends the one with the
/// lowest mean post-attack accuracy (ties keep the earlier grid entry).
pub fn temperature_sweep(
    source: ModelSource<'_>,
    dataset: &Dataset,
    grid: &[f64],
    config: &CampaignConfig,
) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::Config("temperature grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Config(format!(
            "temperature must be positive, got {t}"
        )));
    }
    config.validate()?;
    let folds = prepare_folds(source, dataset, config)?;
    let mut rows = Vec::new();
    let mut fid = Vec::new();
    let mut best = (f64::INFINITY, grid[0]);
    for &tau in grid {
        let cfg = CampaignConfig {
            temperature: tau,
            ..config.clone()
        };
        let report = run_prepared(&folds, dataset, &cfg)?;
        let means: Vec<f64> = report
            .aggregates
            .iter()
            .map(|a| a.post_attack_accuracy_mean)
            .collect();
        let overall = means.iter().sum::<f64>() / means.len() as f64;
        if overall < best.0 {
            best = (overall, tau);
        }
        rows.extend(report.aggregates.iter().map(|a| SweepRow {
            temperature: tau,
            attack: a.attack,
            epsilon: a.epsilon,
            post_attack_accuracy_mean: a.post_attack_accuracy_mean,
            post_attack_accuracy_std: a.post_attack_accuracy_std,
        }));
        fid.push(FidelityRow {
            temperature: tau,
            agreement: fidelity(&folds, dataset, tau)?,
        });
    }
    Ok(SweepReport {
        rows,
        fidelity: fid,
        best_temperature: best.1,
        model_hashes: folds.iter().map(|f| model_hash(&f.model)).collect(),
        config: config.clone(),
    })
}
