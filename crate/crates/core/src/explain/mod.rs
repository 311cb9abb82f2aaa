//! SHAP explanations of tree models: exact TreeSHAP, importance summaries
//! and force-plot data.

mod force;
mod importance;
mod treeshap;

pub use force::{force_plot_data, Direction, ForceEntry, ForcePlot};
pub use importance::{
    band_rows, global_importance, importance_over_rows, percentile, segment_importance, Band, GlobalImportance,
    SegmentFeature,
};
pub use treeshap::{
    base_value, brute_force_shap, tree_shap, treeshap, Link, ShapExplanation, BRUTE_FORCE_MAX_FEATURES,
};
