//! Per-feature empirical CDFs and quantile-space perturbation boxes.
//!
//! The allowed perturbation of feature `j` around an anchor `x0` is the set of
//! values whose empirical quantile lies within `ε` of `F_j(x0_j)`. That turns a
//! single budget `ε ∈ [0, 1]` into feature-dependent raw-unit bounds.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Piecewise-linear empirical CDF over the unique observed values.
///
/// Observation `i` of `n` sorted values gets percentile `i / (n - 1)`; tied
/// values share the mean of their percentiles. A single unique value yields a
/// one-knot ECDF with `cdf(c) = 0.5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    knots_x: Vec<f64>,
    knots_q: Vec<f64>,
}

impl Ecdf {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(
                "cannot fit an ECDF to zero values".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {v} in ECDF input"
            )));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut knots_x = Vec::new();
        let mut knots_q = Vec::new();
        let mut start = 0;
        while start < n {
            let v = sorted[start];
            let mut end = start + 1;
            while end < n && sorted[end] == v {
                end += 1;
            }
            let q = if n == 1 {
                0.5
            } else {
                // mean of i/(n-1) for i in start..end
                (start + end - 1) as f64 / 2.0 / (n - 1) as f64
            };
            knots_x.push(v);
            knots_q.push(q);
            start = end;
        }
        if knots_x.len() == 1 {
            knots_q[0] = 0.5;
        }
        Ok(Ecdf { knots_x, knots_q })
    }

    pub fn knots_x(&self) -> &[f64] {
        &self.knots_x
    }

    pub fn knots_q(&self) -> &[f64] {
        &self.knots_q
    }

    pub fn min(&self) -> f64 {
        self.knots_x[0]
    }

    pub fn max(&self) -> f64 {
        self.knots_x[self.knots_x.len() - 1]
    }

    /// Quantile of `x`: 0 below the support, 1 above it, linear between knots.
    pub fn cdf(&self, x: f64) -> f64 {
        let xs = &self.knots_x;
        let qs = &self.knots_q;
        if x < xs[0] {
            return 0.0;
        }
        if x > xs[xs.len() - 1] {
            return 1.0;
        }
        // first knot with knot >= x
        let hi = xs.partition_point(|&k| k < x);
        if xs[hi] == x {
            return qs[hi];
        }
        let lo = hi - 1;
        let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
        qs[lo] + t * (qs[hi] - qs[lo])
    }

    /// Value at quantile `q`, clamped to the knot range.
    pub fn inverse_cdf(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile {q} outside [0, 1]")));
        }
        Ok(self.inverse_unchecked(q))
    }

    pub(crate) fn inverse_unchecked(&self, q: f64) -> f64 {
        let xs = &self.knots_x;
        let qs = &self.knots_q;
        let last = qs.len() - 1;
        if q <= qs[0] {
            return xs[0];
        }
        if q >= qs[last] {
            return xs[last];
        }
        let hi = qs.partition_point(|&k| k < q);
        if qs[hi] == q {
            return xs[hi];
        }
        let lo = hi - 1;
        let t = (q - qs[lo]) / (qs[hi] - qs[lo]);
        xs[lo] + t * (xs[hi] - xs[lo])
    }

    /// Audit export: `{"feature": j, "x": [...], "q": [...]}`.
    pub fn to_json_value(&self, feature: usize) -> serde_json::Value {
        serde_json::json!({ "feature": feature, "x": self.knots_x, "q": self.knots_q })
    }
}

/// Fits one ECDF per column of a row-major matrix.
pub fn fit_columns<R: AsRef<[f64]>>(rows: &[R], n_features: usize) -> Result<Vec<Ecdf>> {
    (0..n_features)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r.as_ref()[j]).collect();
            Ecdf::fit(&col)
        })
        .collect()
}

/// JSON array of all per-feature ECDF tables.
pub fn export_ecdfs(ecdfs: &[Ecdf]) -> serde_json::Value {
    serde_json::Value::Array(
        ecdfs
            .iter()
            .enumerate()
            .map(|(j, e)| e.to_json_value(j))
            .collect(),
    )
}

/// Axis-aligned bounds in feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl PerturbBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        for (v, (l, h)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*l, *h);
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon {epsilon} outside [0, 1]")))
    }
}

/// Quantile box around the original input `x0`:
/// `[F⁻¹(max(0, F(x0) − ε)), F⁻¹(min(1, F(x0) + ε))]` per feature.
///
/// Bounds are anchored to `x0`, never to an iterate. When `x0` lies outside a
/// feature's support and the clamped endpoint would leave the ε-ball (which
/// only happens when the support edge carries tied mass or the feature is
/// constant), that feature's box collapses to `[x0, x0]`.
pub fn make_box(ecdfs: &[Ecdf], x0: &[f64], epsilon: f64) -> Result<PerturbBox> {
    check_epsilon(epsilon)?;
    check_len(ecdfs.len(), x0.len())?;
    let mut lo = Vec::with_capacity(x0.len());
    let mut hi = Vec::with_capacity(x0.len());
    for (e, &x) in ecdfs.iter().zip(x0) {
        if epsilon == 0.0 {
            let c = x.clamp(e.min(), e.max());
            let (l, h) = if (e.cdf(c) - e.cdf(x)).abs() > QUANTILE_TOLERANCE {
                (x, x)
            } else {
                (c, c)
            };
            lo.push(l);
            hi.push(h);
            continue;
        }
        let q0 = e.cdf(x);
        let mut l = e.inverse_unchecked((q0 - epsilon).max(0.0));
        let mut h = e.inverse_unchecked((q0 + epsilon).min(1.0));
        if (e.min()..=e.max()).contains(&x) {
            // interpolation round-off must not exclude the anchor itself
            l = l.min(x);
            h = h.max(x);
        }
        let tol = epsilon + QUANTILE_TOLERANCE;
        if (e.cdf(l) - q0).abs() > tol || (e.cdf(h) - q0).abs() > tol {
            l = x;
            h = x;
        }
        lo.push(l);
        hi.push(h);
    }
    Ok(PerturbBox { lo, hi })
}

/// Slack allowed on quantile-ball membership checks.
pub const QUANTILE_TOLERANCE: f64 = 1e-9;

pub fn project(x: &[f64], bounds: &PerturbBox) -> Vec<f64> {
    bounds.project(x)
}

/// `max_j |F_j(x_j) − F_j(x0_j)|`, the quantile-space distance.
pub fn quantile_distance(ecdfs: &[Ecdf], x: &[f64], x0: &[f64]) -> f64 {
    ecdfs
        .iter()
        .zip(x.iter().zip(x0))
        .map(|(e, (a, b))| (e.cdf(*a) - e.cdf(*b)).abs())
        .fold(0.0, f64::max)
}
