//! Acceptance-probability learners: CART, Newton gradient boosting and
//! logistic regression, plus donor-wise splitting and model comparison.

mod cart;
mod compare;
mod gbm;
mod grow;
mod logreg;
mod model;
mod split;
mod tree;

pub use cart::{fit_tree, fit_tree_weighted, TreeModel, TreeParams};
pub use compare::{compare_models, Comparison, ComparisonRow, SplitMetrics, Summary};
pub use gbm::{fit_gbm, fit_gbm_weighted, GbmModel, GbmParams};
pub use logreg::{fit_logreg, fit_logreg_weighted, LogRegModel, LogRegParams, Standardizer};
pub use model::{ConstantModel, LearnerSpec, Model, MODEL_FORMAT, MODEL_VERSION};
pub use split::{split_dataset, split_donorwise, train_donors, SplitSpec};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Margins are clipped to this before the sigmoid.
pub const RAW_CLIP: f64 = 15.0;
/// Gains at or below this are treated as no improvement.
pub(crate) const GAIN_EPS: f64 = 1e-12;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Validates a training set and returns the row weights (default 1).
pub(crate) fn check_xy(x: &FeatureMatrix, y: &[u8], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if x.n_rows() == 0 {
        return Err(Error::Precondition("training set is empty".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Precondition(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Precondition(format!("label {v} is not 0 or 1")));
    }
    if let Some(i) = x.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!(
            "non-finite feature value at row {}",
            i / x.n_cols()
        )));
    }
    match weights {
        None => Ok(vec![1.0; y.len()]),
        Some(w) if w.len() != y.len() => Err(Error::Precondition(format!("{} weights for {} rows", w.len(), y.len()))),
        Some(w) if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) => {
            Err(Error::Precondition("row weights must be positive and finite".into()))
        }
        Some(w) => Ok(w.to_vec()),
    }
}
