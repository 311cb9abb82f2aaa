//! CART classification tree with Gini impurity.

use serde::{Deserialize, Serialize};

use super::grow::{grow, Columns, GrowParams, Stats};
use super::tree::Tree;
use super::{check_xy, GAIN_EPS};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Minimum impurity decrease, weighted by the node's share of the
    /// training weight.
    pub min_gain: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_samples_leaf: 20,
            min_gain: 0.0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf", "must be at least 1"));
        }
        if !(self.min_gain >= 0.0 && self.min_gain.is_finite()) {
            return Err(Error::config("min_gain", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// A single tree whose leaves hold the class-1 weight fraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub feature_names: Vec<String>,
    pub tree: Tree,
}

pub fn fit_tree(x: &FeatureMatrix, y: &[u8], params: &TreeParams) -> Result<TreeModel> {
    fit_tree_weighted(x, y, None, params)
}

pub fn fit_tree_weighted(
    x: &FeatureMatrix,
    y: &[u8],
    weights: Option<&[f64]>,
    params: &TreeParams,
) -> Result<TreeModel> {
    params.validate()?;
    let w = check_xy(x, y, weights)?;
    let rows: Vec<Stats> = y
        .iter()
        .zip(&w)
        .map(|(&y, &w)| Stats {
            a: w * y as f64,
            b: w,
            w,
            n: 1,
        })
        .collect();
    let total_w: f64 = w.iter().sum();
    let cols = Columns::new(x);
    let grown = grow(
        x,
        &cols,
        &rows,
        &GrowParams {
            max_depth: params.max_depth,
            min_rows: params.min_samples_leaf,
            min_b: 0.0,
            lambda: 0.0,
            min_gain: params.min_gain.max(GAIN_EPS),
            gain_scale: 2.0 / total_w,
        },
        |s| (s.a / s.b).clamp(0.0, 1.0),
    );
    Ok(TreeModel {
        feature_names: x.names().to_vec(),
        tree: grown.tree,
    })
}
