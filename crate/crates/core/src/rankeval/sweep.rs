//! Sensitivity/specificity over a threshold grid and non-dominated
//! filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLDS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub model: String,
    /// Label of the censoring level the scores were computed on.
    pub level: String,
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Scores of one model on one dataset variant.
#[derive(Clone, Copy, Debug)]
pub struct SweepInput<'a> {
    pub model: &'a str,
    pub level: &'a str,
    pub y_true: &'a [u8],
    pub scores: &'a [f64],
}

/// `n` evenly spaced thresholds on [0, 1], both ends included.
pub fn threshold_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// One point per (input, threshold), in input order then ascending
/// threshold. A score at or above the threshold counts as positive; a class
/// absent from the labels gets rate 0.
pub fn threshold_sweep(inputs: &[SweepInput<'_>], n_thresholds: usize) -> Result<Vec<SweepPoint>> {
    if inputs.is_empty() {
        return Err(Error::Precondition(
            "threshold sweep needs at least one model and level".into(),
        ));
    }
    let grid = threshold_grid(n_thresholds);
    let mut out = Vec::with_capacity(inputs.len() * grid.len());
    for inp in inputs {
        if inp.y_true.len() != inp.scores.len() {
            return Err(Error::Precondition(format!(
                "{}/{}: {} labels but {} scores",
                inp.model,
                inp.level,
                inp.y_true.len(),
                inp.scores.len()
            )));
        }
        let pos = inp.y_true.iter().filter(|&&y| y == 1).count();
        let neg = inp.y_true.len() - pos;
        for &t in &grid {
            let (mut tp, mut tn) = (0usize, 0usize);
            for (&y, &s) in inp.y_true.iter().zip(inp.scores) {
                match (y == 1, s >= t) {
                    (true, true) => tp += 1,
                    (false, false) => tn += 1,
                    _ => {}
                }
            }
            let rate = |k: usize, d: usize| if d == 0 { 0.0 } else { k as f64 / d as f64 };
            out.push(SweepPoint {
                model: inp.model.to_string(),
                level: inp.level.to_string(),
                threshold: t,
                sensitivity: rate(tp, pos),
                specificity: rate(tn, neg),
            });
        }
    }
    Ok(out)
}

/// Drops every point for which another point at the same threshold has
/// strictly higher sensitivity and strictly higher specificity. Survivors
/// keep their input order.
pub fn pareto_filter(points: &[SweepPoint]) -> Vec<SweepPoint> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    // group by threshold, then sensitivity descending
    idx.sort_by(|&a, &b| {
        points[a]
            .threshold
            .total_cmp(&points[b].threshold)
            .then(points[b].sensitivity.total_cmp(&points[a].sensitivity))
    });
    let mut dominated = vec![false; points.len()];
    let mut i = 0;
    while i < idx.len() {
        let t = points[idx[i]].threshold;
        // best specificity among points with strictly higher sensitivity
        let mut best_above = f64::NEG_INFINITY;
        while i < idx.len() && points[idx[i]].threshold.total_cmp(&t).is_eq() {
            let sens = points[idx[i]].sensitivity;
            let mut j = i;
            let mut tier_best = f64::NEG_INFINITY;
            while j < idx.len()
                && points[idx[j]].threshold.total_cmp(&t).is_eq()
                && points[idx[j]].sensitivity.total_cmp(&sens).is_eq()
            {
                let p = &points[idx[j]];
                dominated[idx[j]] = p.specificity < best_above;
                tier_best = tier_best.max(p.specificity);
                j += 1;
            }
            best_above = best_above.max(tier_best);
            i = j;
        }
    }
    points
        .iter()
        .zip(&dominated)
        .filter(|(_, &d)| !d)
        .map(|(p, _)| p.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(sens: f64, spec: f64) -> SweepPoint {
        SweepPoint {
            model: "m".into(),
            level: "l".into(),
            threshold: 0.5,
            sensitivity: sens,
            specificity: spec,
        }
    }

    #[test]
    fn grid_is_inclusive() {
        let g = threshold_grid(100);
        assert_eq!(g.len(), 100);
        assert_eq!((g[0], g[99]), (0.0, 1.0));
    }

    #[test]
    fn pareto_examples() {
        let pts = vec![pt(0.9, 0.2), pt(0.8, 0.5), pt(0.7, 0.4)];
        assert_eq!(pareto_filter(&pts), vec![pt(0.9, 0.2), pt(0.8, 0.5)]);
        assert_eq!(pareto_filter(&[pt(0.5, 0.5)]).len(), 1);
        assert_eq!(pareto_filter(&[pt(0.5, 0.5), pt(0.5, 0.5)]).len(), 2);
        // equal sensitivity never dominates
        assert_eq!(pareto_filter(&[pt(0.5, 0.9), pt(0.5, 0.1)]).len(), 2);
    }

    #[test]
    fn sweep_shape_and_monotonicity() {
        let y = [1, 0, 1, 0, 0];
        let s = [0.9, 0.4, 0.3, 0.2, 0.05];
        let inputs = [
            SweepInput {
                model: "a",
                level: "x",
                y_true: &y,
                scores: &s,
            },
            SweepInput {
                model: "b",
                level: "x",
                y_true: &y,
                scores: &s,
            },
        ];
        let pts = threshold_sweep(&inputs, 100).unwrap();
        assert_eq!(pts.len(), 200);
        assert_eq!(pts[0].sensitivity, 1.0);
        assert!(pts[..100].windows(2).all(|w| w[1].sensitivity <= w[0].sensitivity));
    }
}
