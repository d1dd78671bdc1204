//! Adversarial-example search.
//!
//! [`sta_attack`] runs projected gradient ascent on the margin loss of the
//! smoothed surrogate, optionally injecting sparse multiplicative noise before
//! each step, and projects every iterate into the quantile box around the
//! original input. [`random_attack`] and [`nes_attack`] are blackbox
//! baselines that only query the original model.
//!
//! Success is always decided on the ORIGINAL ensemble. All original-model
//! queries go through an instrumented oracle that counts queries and records
//! any candidate outside the quantile ball `max_j |F_j(x'_j) − F_j(x0_j)| ≤ ε`.
//! The clean evaluation of `x0` itself is not counted as a query.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::{argmax, Decision, Ensemble, Task};
use crate::error::{check_len, Error, Result};
use crate::perturb::{make_box, Ecdf, PerturbBox, QUANTILE_TOLERANCE};
use crate::rng::{self, StaRng};
use crate::smoothing::{FeatureScales, SmoothedEnsemble};

/// Ground truth for a sample: a class index, or a real label for regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Class(usize),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackCriteria {
    /// Radius of the quantile ball, in `[0, 1]`.
    pub epsilon: f64,
    /// Regression only: success iff `|ŷ(x') − ŷ(x0)| > delta`.
    pub delta: f64,
}

impl AttackCriteria {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        let c = AttackCriteria { epsilon, delta };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must be in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be finite and non-negative, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientMode {
    Exhaustive,
    Sampled { n_samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub criteria: AttackCriteria,
    pub max_iters: usize,
    pub step_size: f64,
    pub noise_level: f64,
    pub temperature: f64,
    pub mode: GradientMode,
    pub noise: bool,
    pub seed: u64,
    /// Stop at the first violating iterate. Disabled only for timing runs.
    pub early_stop: bool,
    pub record_trace: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            criteria: AttackCriteria {
                epsilon: 0.2,
                delta: 0.0,
            },
            max_iters: 100,
            step_size: 1.0,
            noise_level: 0.1,
            temperature: 0.1,
            mode: GradientMode::Exhaustive,
            noise: true,
            seed: 0,
            early_stop: true,
            record_trace: false,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        self.criteria.validate()?;
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::Config(format!(
                "noise level must be non-negative, got {}",
                self.noise_level
            )));
        }
        if let GradientMode::Sampled { n_samples: 0 } = self.mode {
            return Err(Error::Config("sampled mode needs at least 1 sample".into()));
        }
        Ok(())
    }

    /// Smoothed view of `model` at this config's temperature.
    pub fn smooth<'a>(
        &self,
        model: &'a Ensemble,
        scales: FeatureScales,
    ) -> Result<SmoothedEnsemble<'a>> {
        SmoothedEnsemble::new(model, scales, self.temperature)
    }
}

/// Blackbox NES baseline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NesConfig {
    pub criteria: AttackCriteria,
    pub max_iters: usize,
    /// Antithetic pairs per gradient estimate (m).
    pub samples: usize,
    /// Search radius in quantile units (σ_s).
    pub sigma: f64,
    /// Per-coordinate quantile step of the sign ascent.
    pub step_size: f64,
    pub seed: u64,
    pub early_stop: bool,
    pub record_trace: bool,
}

impl Default for NesConfig {
    fn default() -> Self {
        NesConfig {
            criteria: AttackCriteria {
                epsilon: 0.2,
                delta: 0.0,
            },
            max_iters: 100,
            samples: 25,
            sigma: 0.01,
            step_size: 0.02,
            seed: 0,
            early_stop: true,
            record_trace: false,
        }
    }
}

impl NesConfig {
    fn validate(&self) -> Result<()> {
        self.criteria.validate()?;
        if self.max_iters == 0 || self.samples == 0 {
            return Err(Error::Config(
                "NES needs max_iters >= 1 and samples >= 1".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.step_size > 0.0) {
            return Err(Error::Config(
                "NES sigma and step size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub loss: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub success: bool,
    /// First violating candidate on success, otherwise the final iterate.
    pub x_adv: Vec<f64>,
    pub iterations_used: usize,
    /// Original-model evaluations, excluding the clean check of `x0`.
    pub model_queries: usize,
    /// Smoothed-model gradient evaluations.
    pub whitebox_evaluations: usize,
    /// Queried candidates found outside the quantile ball. Always zero unless
    /// there is a bug; surfaced so campaigns can assert it.
    pub box_violations: usize,
    pub elapsed: Duration,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Margin loss on class scores, or absolute deviation for regression.
///
/// Classification: `J = max_{c≠y} s_c − s_y`; the returned weights are
/// `e_runner_up − e_y` (runner-up ties go to the lowest index).
/// Regression: `J = |s_0 − y|` with weight `sign(s_0 − y)`, taking `+1` at 0.
pub fn loss(scores: &[f64], target: Target) -> Result<(f64, Vec<f64>)> {
    match target {
        Target::Class(y) => {
            if y >= scores.len() || scores.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "class {y} invalid for {} class scores",
                    scores.len()
                )));
            }
            let mut runner = usize::MAX;
            for (c, &s) in scores.iter().enumerate() {
                if c != y && (runner == usize::MAX || s > scores[runner]) {
                    runner = c;
                }
            }
            let mut w = vec![0.0; scores.len()];
            w[runner] = 1.0;
            w[y] = -1.0;
            Ok((scores[runner] - scores[y], w))
        }
        Target::Value(y) => {
            if scores.is_empty() {
                return Err(Error::InvalidInput("empty score vector".into()));
            }
            let d = scores[0] - y;
            let sign = if d < 0.0 { -1.0 } else { 1.0 };
            let mut w = vec![0.0; scores.len()];
            w[0] = sign;
            Ok((d.abs(), w))
        }
    }
}

/// Loss on the model's raw output layout: single-logit binary models are
/// expanded to `[0, logit]` class scores and the weight folded back.
fn model_loss(model: &Ensemble, scores: &[f64], target: Target) -> Result<(f64, Vec<f64>)> {
    match model.task() {
        Task::Classification { .. } if model.n_outputs() == 1 => {
            let (j, w) = loss(&model.class_scores(scores), target)?;
            Ok((j, vec![w[1]]))
        }
        _ => loss(scores, target),
    }
}

/// Sparse multiplicative noise: one uniformly chosen coordinate `j` becomes
/// `(1 + ξ)·x_j` with `ξ ~ N(0, λ)` (λ is the standard deviation). Near-zero
/// coordinates (`|x_j| < 1e-12·σ_j`) use `x_j + ξ·σ_j` instead, since the
/// multiplicative rule cannot move them.
pub fn inject_noise<R: Rng + ?Sized>(
    x: &[f64],
    lambda: f64,
    scales: &FeatureScales,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = x.to_vec();
    inject_noise_in_place(&mut out, lambda, scales, rng);
    out
}

fn inject_noise_in_place<R: Rng + ?Sized>(
    x: &mut [f64],
    lambda: f64,
    scales: &FeatureScales,
    rng: &mut R,
) {
    if x.is_empty() {
        return;
    }
    let j = rng.random_range(0..x.len());
    let xi = match Normal::new(0.0, lambda) {
        Ok(n) => n.sample(rng),
        Err(_) => 0.0,
    };
    let sigma = scales.sigma()[j];
    if x[j].abs() < 1e-12 * sigma {
        x[j] += xi * sigma;
    } else {
        x[j] *= 1.0 + xi;
    }
}

enum Reference {
    Class(usize),
    Value { y0: f64, delta: f64 },
}

/// Instrumented access to the original model.
struct Oracle<'a> {
    model: &'a Ensemble,
    ecdfs: &'a [Ecdf],
    q0: Vec<f64>,
    epsilon: f64,
    reference: Reference,
    target: Target,
    queries: usize,
    box_violations: usize,
    scores: Vec<f64>,
}

impl<'a> Oracle<'a> {
    /// Builds the oracle and reports whether `x0` itself already violates.
    fn new(
        model: &'a Ensemble,
        ecdfs: &'a [Ecdf],
        x0: &[f64],
        target: Target,
        criteria: &AttackCriteria,
    ) -> Result<(Self, bool)> {
        criteria.validate()?;
        model.validate_input(x0)?;
        check_len(model.n_features(), ecdfs.len())?;
        let mut scores = vec![0.0; model.n_outputs()];
        model.scores_unchecked(x0, &mut scores);
        let clean = model.decide(&scores);
        let (reference, target) = match (model.task(), target) {
            (Task::Classification { n_classes }, Target::Class(y)) => {
                if y >= n_classes {
                    return Err(Error::InvalidInput(format!(
                        "label {y} out of range for {n_classes} classes"
                    )));
                }
                (Reference::Class(y), target)
            }
            (Task::Regression, Target::Value(_)) => {
                let y0 = clean.value();
                (
                    Reference::Value {
                        y0,
                        delta: criteria.delta,
                    },
                    Target::Value(y0),
                )
            }
            _ => {
                return Err(Error::Config(
                    "target kind does not match the model task".into(),
                ))
            }
        };
        let oracle = Oracle {
            model,
            ecdfs,
            q0: ecdfs.iter().zip(x0).map(|(e, &x)| e.cdf(x)).collect(),
            epsilon: criteria.epsilon,
            reference,
            target,
            queries: 0,
            box_violations: 0,
            scores,
        };
        let violates = oracle.violates(clean);
        Ok((oracle, violates))
    }

    fn violates(&self, decision: Decision) -> bool {
        match (&self.reference, decision) {
            (Reference::Class(y), Decision::Class(c)) => c != *y,
            (Reference::Value { y0, delta }, d) => (d.value() - y0).abs() > *delta,
            (Reference::Class(_), Decision::Value(_)) => false,
        }
    }

    fn in_ball(&self, x: &[f64]) -> bool {
        let tol = self.epsilon + QUANTILE_TOLERANCE;
        self.ecdfs
            .iter()
            .zip(x.iter().zip(&self.q0))
            .all(|(e, (&v, &q0))| (e.cdf(v) - q0).abs() <= tol)
    }

    /// Counted query; returns whether `x` violates the criterion.
    fn query(&mut self, x: &[f64]) -> bool {
        self.queries += 1;
        if !self.in_ball(x) {
            self.box_violations += 1;
        }
        self.model.scores_unchecked(x, &mut self.scores);
        let d = self.model.decide(&self.scores);
        self.violates(d)
    }

    fn last_decision(&self) -> Decision {
        self.model.decide(&self.scores)
    }

    /// Hard-model margin loss at the last queried point.
    fn last_loss(&self) -> f64 {
        model_loss(self.model, &self.scores, self.target)
            .map(|(j, _)| j)
            .unwrap_or(0.0)
    }

    /// Independent re-check of a claimed success (uncounted).
    fn confirm(&self, x: &[f64]) -> Result<()> {
        let mut scores = vec![0.0; self.model.n_outputs()];
        self.model.scores_unchecked(x, &mut scores);
        if self.violates(self.model.decide(&scores)) && self.in_ball(x) {
            Ok(())
        } else {
            Err(Error::Numeric(
                "internal error: claimed adversarial example does not violate the original model"
                    .into(),
            ))
        }
    }
}

struct Outcome {
    success: bool,
    x_adv: Vec<f64>,
    iterations: usize,
    whitebox: usize,
    trace: Option<Vec<TraceEntry>>,
}

fn finish(oracle: &Oracle<'_>, out: Outcome, started: Instant) -> Result<AttackResult> {
    if out.success {
        oracle.confirm(&out.x_adv)?;
    }
    Ok(AttackResult {
        success: out.success,
        x_adv: out.x_adv,
        iterations_used: out.iterations,
        model_queries: oracle.queries,
        whitebox_evaluations: out.whitebox,
        box_violations: oracle.box_violations,
        elapsed: started.elapsed(),
        trace: out.trace,
    })
}

fn already_violated(
    oracle: &Oracle<'_>,
    x0: &[f64],
    started: Instant,
    trace: bool,
) -> Result<AttackResult> {
    finish(
        oracle,
        Outcome {
            success: true,
            x_adv: x0.to_vec(),
            iterations: 0,
            whitebox: 0,
            trace: trace.then(Vec::new),
        },
        started,
    )
}

/// Smoothed-tree attack seeded from `config.seed`.
pub fn sta_attack(
    smoothed: &SmoothedEnsemble<'_>,
    ecdfs: &[Ecdf],
    x0: &[f64],
    target: Target,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let mut rng = rng::seeded(config.seed);
    sta_attack_with_rng(smoothed, ecdfs, x0, target, config, &mut rng)
}

/// Smoothed-tree attack driven by a caller-owned RNG.
///
/// Each iteration: `x ← Π_box(noise(x) + η·∇J(noise(x)))`, where `J` is the
/// margin loss of the smoothed model and the gradient is exact or sampled
/// per `config.mode`. The original model is queried after every iterate.
pub fn sta_attack_with_rng(
    smoothed: &SmoothedEnsemble<'_>,
    ecdfs: &[Ecdf],
    x0: &[f64],
    target: Target,
    config: &AttackConfig,
    rng: &mut StaRng,
) -> Result<AttackResult> {
    let started = Instant::now();
    config.validate()?;
    if (smoothed.temperature() - config.temperature).abs() > f64::EPSILON * config.temperature {
        return Err(Error::Config(format!(
            "smoothed model temperature {} differs from config temperature {}",
            smoothed.temperature(),
            config.temperature
        )));
    }
    let model = smoothed.base();
    let (mut oracle, clean_violates) = Oracle::new(model, ecdfs, x0, target, &config.criteria)?;
    if clean_violates {
        return already_violated(&oracle, x0, started, config.record_trace);
    }
    let bounds: PerturbBox = make_box(ecdfs, x0, config.criteria.epsilon)?;
    let mut trace = config.record_trace.then(Vec::new);
    let mut x = x0.to_vec();
    let mut found: Option<(Vec<f64>, usize)> = None;
    let mut whitebox = 0;
    let mut iterations = 0;

    for i in 1..=config.max_iters {
        iterations = i;
        if config.noise {
            inject_noise_in_place(&mut x, config.noise_level, smoothed.scales(), rng);
        }
        let (scores, jac) = match config.mode {
            GradientMode::Exhaustive => {
                let (s, j, _) = smoothed.scores_and_jacobian(&x)?;
                (s, j)
            }
            GradientMode::Sampled { n_samples } => {
                let (s, j, _) = smoothed.sampled_scores_and_jacobian(&x, n_samples, rng)?;
                (s, j)
            }
        };
        whitebox += 1;
        let (j_val, weights) = model_loss(model, &scores, oracle.target)?;
        let grad = jac.contract(&weights);
        for (xj, gj) in x.iter_mut().zip(&grad) {
            *xj += config.step_size * gj;
        }
        bounds.project_in_place(&mut x);
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "iterate {i} has non-finite coordinate {k}"
            )));
        }
        let violates = oracle.query(&x);
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                iteration: i,
                loss: j_val,
                decision: oracle.last_decision(),
            });
        }
        if violates && found.is_none() {
            found = Some((x.clone(), i));
            if config.early_stop {
                break;
            }
        }
    }
    let out = match found {
        Some((x_adv, i)) => Outcome {
            success: true,
            x_adv,
            iterations: if config.early_stop { i } else { iterations },
            whitebox,
            trace,
        },
        None => Outcome {
            success: false,
            x_adv: x,
            iterations,
            whitebox,
            trace,
        },
    };
    finish(&oracle, out, started)
}

/// Uniform search in quantile space: each of `budget` candidates draws
/// `q_j ~ U[max(0, q0_j − ε), min(1, q0_j + ε)]` per feature and maps it
/// back through the inverse ECDF.
pub fn random_attack<R: Rng + ?Sized>(
    model: &Ensemble,
    ecdfs: &[Ecdf],
    x0: &[f64],
    target: Target,
    criteria: &AttackCriteria,
    budget: usize,
    rng: &mut R,
) -> Result<AttackResult> {
    let started = Instant::now();
    let (mut oracle, clean_violates) = Oracle::new(model, ecdfs, x0, target, criteria)?;
    if clean_violates {
        return already_violated(&oracle, x0, started, false);
    }
    let bounds = make_box(ecdfs, x0, criteria.epsilon)?;
    let eps = criteria.epsilon;
    let intervals: Vec<(f64, f64)> = oracle
        .q0
        .iter()
        .map(|&q| ((q - eps).max(0.0), (q + eps).min(1.0)))
        .collect();
    let mut x = x0.to_vec();
    for i in 1..=budget {
        for (j, &(lo, hi)) in intervals.iter().enumerate() {
            let q = if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            x[j] = ecdfs[j].inverse_unchecked(q);
        }
        bounds.project_in_place(&mut x);
        if oracle.query(&x) {
            let out = Outcome {
                success: true,
                x_adv: x,
                iterations: i,
                whitebox: 0,
                trace: None,
            };
            return finish(&oracle, out, started);
        }
    }
    let out = Outcome {
        success: false,
        x_adv: if budget == 0 { x0.to_vec() } else { x },
        iterations: budget,
        whitebox: 0,
        trace: None,
    };
    finish(&oracle, out, started)
}

/// NES seeded from `config.seed`.
pub fn nes_attack(
    model: &Ensemble,
    ecdfs: &[Ecdf],
    x0: &[f64],
    target: Target,
    config: &NesConfig,
) -> Result<AttackResult> {
    let mut rng = rng::seeded(config.seed);
    nes_attack_with_rng(model, ecdfs, x0, target, config, &mut rng)
}

/// Blackbox NES: antithetic Gaussian finite differences of the hard-model
/// margin loss in quantile space,
/// `ĝ = 1/(2mσ) Σ_k [J(u + σδ_k) − J(u − σδ_k)] δ_k`, followed by a sign
/// ascent step of `step_size` and projection onto the quantile box. Each
/// iteration issues exactly `2m + 1` queries unless it stops early.
pub fn nes_attack_with_rng<R: Rng + ?Sized>(
    model: &Ensemble,
    ecdfs: &[Ecdf],
    x0: &[f64],
    target: Target,
    config: &NesConfig,
    rng: &mut R,
) -> Result<AttackResult> {
    let started = Instant::now();
    config.validate()?;
    let (mut oracle, clean_violates) = Oracle::new(model, ecdfs, x0, target, &config.criteria)?;
    if clean_violates {
        return already_violated(&oracle, x0, started, config.record_trace);
    }
    let bounds = make_box(ecdfs, x0, config.criteria.epsilon)?;
    let eps = config.criteria.epsilon;
    let d = x0.len();
    let q_lo: Vec<f64> = oracle.q0.iter().map(|q| (q - eps).max(0.0)).collect();
    let q_hi: Vec<f64> = oracle.q0.iter().map(|q| (q + eps).min(1.0)).collect();
    let to_x = |u: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(u.iter().zip(ecdfs).map(|(&q, e)| e.inverse_unchecked(q)));
        bounds.project_in_place(out);
    };
    let clamp_q = |u: &mut [f64]| {
        for ((v, lo), hi) in u.iter_mut().zip(&q_lo).zip(&q_hi) {
            *v = v.clamp(*lo, *hi);
        }
    };

    let mut u = oracle.q0.clone();
    clamp_q(&mut u);
    let mut x = x0.to_vec();
    let mut probe = vec![0.0; d];
    let mut delta = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut trace = config.record_trace.then(Vec::new);
    let mut found: Option<(Vec<f64>, usize)> = None;
    let mut iterations = 0;
    let scale = 1.0 / (2.0 * config.samples as f64 * config.sigma);

    'outer: for i in 1..=config.max_iters {
        iterations = i;
        grad.fill(0.0);
        for _ in 0..config.samples {
            for v in delta.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let mut pair = [0.0; 2];
            for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                for ((p, &uj), &dj) in probe.iter_mut().zip(&u).zip(&delta) {
                    *p = uj + sign * config.sigma * dj;
                }
                clamp_q(&mut probe);
                to_x(&probe, &mut x);
                if oracle.query(&x) && found.is_none() {
                    found = Some((x.clone(), i));
                    if config.early_stop {
                        break 'outer;
                    }
                }
                pair[s] = oracle.last_loss();
            }
            let diff = pair[0] - pair[1];
            for (g, &dj) in grad.iter_mut().zip(&delta) {
                *g += diff * dj;
            }
        }
        for (uj, g) in u.iter_mut().zip(&grad) {
            let g = g * scale;
            if g != 0.0 {
                *uj += config.step_size * g.signum();
            }
        }
        clamp_q(&mut u);
        to_x(&u, &mut x);
        let violates = oracle.query(&x);
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                iteration: i,
                loss: oracle.last_loss(),
                decision: oracle.last_decision(),
            });
        }
        if violates && found.is_none() {
            found = Some((x.clone(), i));
            if config.early_stop {
                break;
            }
        }
    }
    let out = match found {
        Some((x_adv, i)) => Outcome {
            success: true,
            x_adv,
            iterations: if config.early_stop { i } else { iterations },
            whitebox: 0,
            trace,
        },
        None => Outcome {
            success: false,
            x_adv: x,
            iterations,
            whitebox: 0,
            trace,
        },
    };
    finish(&oracle, out, started)
}

/// True when the original model at `x` violates the criterion relative to
/// the clean input `x0` (decision flip, or regression shift above `delta`).
pub fn violates_criterion(
    model: &Ensemble,
    x0: &[f64],
    x: &[f64],
    target: Target,
    delta: f64,
) -> Result<bool> {
    let clean = model.predict(x0)?;
    let adv = model.predict(x)?;
    Ok(match (target, adv.decision) {
        (Target::Class(y), Decision::Class(c)) => c != y,
        (Target::Value(_), d) => (d.value() - clean.decision.value()).abs() > delta,
        _ => false,
    })
}

/// Argmax of smoothed scores, exposed for fidelity measurements.
pub fn smoothed_class(smoothed: &SmoothedEnsemble<'_>, x: &[f64]) -> Result<usize> {
    let s = smoothed.predict(x)?;
    Ok(match smoothed.base().decide(&s) {
        Decision::Class(c) => c,
        Decision::Value(_) => argmax(&s),
    })
}
