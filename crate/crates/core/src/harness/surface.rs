//! Decision-surface grids over two features for external plotting.

use crate::ensemble::{Decision, Ensemble};
use crate::error::{check_len, Error, Result};
use crate::smoothing::SmoothedEnsemble;

/// Hard model or its smoothed view.
#[derive(Debug, Clone, Copy)]
pub enum Surface<'a, 'm> {
    Hard(&'m Ensemble),
    Smoothed(&'a SmoothedEnsemble<'m>),
}

impl Surface<'_, '_> {
    fn model(&self) -> &Ensemble {
        match self {
            Surface::Hard(m) => m,
            Surface::Smoothed(s) => s.base(),
        }
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Surface::Hard(m) => Ok(m.predict(x)?.scores),
            Surface::Smoothed(s) => s.predict(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub xi: f64,
    pub xj: f64,
    pub scores: Vec<f64>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub feature_i: usize,
    pub feature_j: usize,
    pub resolution: usize,
    /// Row-major over `x_i`, then `x_j`.
    pub points: Vec<SurfacePoint>,
}

impl SurfaceGrid {
    pub fn to_csv(&self) -> String {
        let n_scores = self.points.first().map_or(0, |p| p.scores.len());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["x_i".to_string(), "x_j".to_string()];
        header.extend((0..n_scores).map(|c| format!("score_{c}")));
        header.push("decision".into());
        w.write_record(&header).expect("in-memory write");
        for p in &self.points {
            let mut rec = vec![p.xi.to_string(), p.xj.to_string()];
            rec.extend(p.scores.iter().map(|s| s.to_string()));
            rec.push(match p.decision {
                Decision::Class(c) => c.to_string(),
                Decision::Value(v) => v.to_string(),
            });
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if k + 1 == n {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

/// Evaluates scores on a `resolution × resolution` lattice over features
/// `fi` and `fj`, holding the others at `anchor`.
pub fn dump_surface(
    surface: Surface<'_, '_>,
    fi: usize,
    fj: usize,
    anchor: &[f64],
    bounds_i: (f64, f64),
    bounds_j: (f64, f64),
    resolution: usize,
) -> Result<SurfaceGrid> {
    let model = surface.model();
    let d = model.n_features();
    check_len(d, anchor.len())?;
    if fi >= d || fj >= d {
        return Err(Error::Config(format!(
            "feature index out of range for {d} features"
        )));
    }
    if fi == fj {
        return Err(Error::Config("surface features must differ".into()));
    }
    if resolution < 2 {
        return Err(Error::Config(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    for (lo, hi) in [bounds_i, bounds_j] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "invalid surface bounds [{lo}, {hi}]"
            )));
        }
    }
    let mut x = anchor.to_vec();
    let mut points = Vec::with_capacity(resolution * resolution);
    for xi in linspace(bounds_i.0, bounds_i.1, resolution) {
        for xj in linspace(bounds_j.0, bounds_j.1, resolution) {
            x[fi] = xi;
            x[fj] = xj;
            let scores = surface.scores(&x)?;
            let decision = model.decide(&scores);
            points.push(SurfacePoint {
                xi,
                xj,
                scores,
                decision,
            });
        }
    }
    Ok(SurfaceGrid {
        feature_i: fi,
        feature_j: fj,
        resolution,
        points,
    })
}

/// Default plotting range for one feature: the span of its split thresholds
/// widened by 25% on each side, or `anchor ± 1` if the feature is unused.
pub fn threshold_bounds(model: &Ensemble, feature: usize, anchor: f64) -> (f64, f64) {
    let thr = model
        .trees()
        .iter()
        .flat_map(|t| t.nodes())
        .filter_map(|n| match n {
            crate::ensemble::Node::Internal {
                feature: f,
                threshold,
                ..
            } if *f == feature => Some(*threshold),
            _ => None,
        });
    let (lo, hi) = thr.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
        (lo.min(t), hi.max(t))
    });
    if lo > hi {
        return (anchor - 1.0, anchor + 1.0);
    }
    let pad = ((hi - lo) * 0.25).max(1e-3 * hi.abs().max(1.0));
    (lo - pad, hi + pad)
}
