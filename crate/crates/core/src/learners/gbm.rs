//! Second-order gradient boosting of regression trees on logistic loss.

use serde::{Deserialize, Serialize};

use super::grow::{grow, Columns, GrowParams, Stats};
use super::tree::Tree;
use super::{check_xy, sigmoid, GAIN_EPS, RAW_CLIP};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Prevalence is clipped to `[EPS, 1 - EPS]` for the base score.
const PREVALENCE_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub lambda: f64,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_trees: 200,
            max_depth: 6,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            lambda: 1.0,
        }
    }
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("n_trees", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("learning_rate", "must lie in (0, 1]"));
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return Err(Error::config("min_child_weight", "must be finite and non-negative"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Boosted ensemble. Leaf values already include the learning-rate
/// shrinkage, so the raw score is `base_score + sum of leaves`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Mean training deviance before the first tree and after each tree.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub training_deviance: Vec<f64>,
}

impl GbmModel {
    /// Unclipped margin.
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw(x).clamp(-RAW_CLIP, RAW_CLIP))
    }
}

fn log_sigmoid(z: f64) -> f64 {
    // log(1 / (1 + e^-z)) without overflow
    -(if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    })
}

fn deviance(raw: &[f64], y: &[u8], w: &[f64], total_w: f64) -> f64 {
    let s: f64 = raw
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&r, &y), &w)| w * if y == 1 { log_sigmoid(r) } else { log_sigmoid(-r) })
        .sum();
    -2.0 * s / total_w
}

pub fn fit_gbm(x: &FeatureMatrix, y: &[u8], params: &GbmParams) -> Result<GbmModel> {
    fit_gbm_weighted(x, y, None, params)
}

pub fn fit_gbm_weighted(x: &FeatureMatrix, y: &[u8], weights: Option<&[f64]>, params: &GbmParams) -> Result<GbmModel> {
    params.validate()?;
    let w = check_xy(x, y, weights)?;
    let total_w: f64 = w.iter().sum();
    let pos_w: f64 = y.iter().zip(&w).filter(|(&y, _)| y == 1).map(|(_, &w)| w).sum();
    let prevalence = (pos_w / total_w).clamp(PREVALENCE_EPS, 1.0 - PREVALENCE_EPS);
    let base_score = (prevalence / (1.0 - prevalence)).ln();
    let mut model = GbmModel {
        feature_names: x.names().to_vec(),
        base_score,
        learning_rate: params.learning_rate,
        trees: Vec::with_capacity(params.n_trees),
        training_deviance: Vec::with_capacity(params.n_trees + 1),
    };
    let mut raw = vec![base_score; y.len()];
    model.training_deviance.push(deviance(&raw, y, &w, total_w));
    if pos_w == 0.0 || pos_w == total_w {
        return Ok(model);
    }

    let cols = Columns::new(x);
    let grow_params = GrowParams {
        max_depth: params.max_depth,
        min_rows: 1,
        min_b: params.min_child_weight,
        lambda: params.lambda,
        min_gain: GAIN_EPS,
        gain_scale: 0.5,
    };
    let lr = params.learning_rate;
    let lambda = params.lambda;
    let mut rows = vec![Stats::default(); y.len()];
    for _ in 0..params.n_trees {
        for (i, s) in rows.iter_mut().enumerate() {
            let p = sigmoid(raw[i]);
            *s = Stats {
                a: w[i] * (p - y[i] as f64),
                b: w[i] * (p * (1.0 - p)).max(1e-16),
                w: w[i],
                n: 1,
            };
        }
        let grown = grow(x, &cols, &rows, &grow_params, |s| {
            let d = s.b + lambda;
            if d > 0.0 {
                -lr * s.a / d
            } else {
                0.0
            }
        });
        let leaves = grown.tree.nodes();
        for (r, &leaf) in raw.iter_mut().zip(&grown.row_leaf) {
            if let super::tree::Node::Leaf { value, .. } = leaves[leaf] {
                *r += value;
            }
        }
        model.training_deviance.push(deviance(&raw, y, &w, total_w));
        model.trees.push(grown.tree);
    }
    Ok(model)
}
