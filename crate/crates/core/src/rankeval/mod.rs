//! Ranking policies, the NCS metric and classification diagnostics.

mod evaluate;
mod metrics;
mod policy;
mod sweep;

pub use evaluate::{
    evaluate_policies, evaluate_policies_with_scores, run_ncs, PolicyRow, PolicyTable, KAP_COUNT_FEATURE,
    KDRI_COUNT_FEATURE,
};
pub use metrics::{
    classification_report, roc_auc, threshold_labels, AveragedMetrics, ClassMetrics, ClassificationReport, Roc,
    RocPoint,
};
pub use policy::{
    mean_ncs, ncs_for_order, rank_alp, rank_baseline, rank_kap_heuristic, rank_kdri_heuristic, Ncs, Policy, RankedList,
};
pub use sweep::{pareto_filter, threshold_grid, threshold_sweep, SweepInput, SweepPoint, DEFAULT_THRESHOLDS};
