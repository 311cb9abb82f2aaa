//! Mean NCS of every policy over the accepted runs of a feature table.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::*;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::learners::Model;

pub const KDRI_COUNT_FEATURE: &str = "higher_kdri_acceptances_2y";
pub const KAP_COUNT_FEATURE: &str = "kap_eligible_acceptances_2y";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: Policy,
    /// `None` when no accepted run contributed.
    pub mean_ncs: Option<f64>,
    pub n: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub rows: Vec<PolicyRow>,
}

impl PolicyTable {
    pub fn get(&self, policy: Policy) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    pub fn mean(&self, policy: Policy) -> Option<f64> {
        self.get(policy).and_then(|r| r.mean_ncs)
    }

    /// CSV with header `policy,mean_ncs,n,skipped`; means use 6 decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "policy,mean_ncs,n,skipped")?;
        for r in &self.rows {
            let mean = r.mean_ncs.map(|m| format!("{m:.6}")).unwrap_or_default();
            writeln!(w, "{},{},{},{}", r.policy, mean, r.n, r.skipped)?;
        }
        Ok(())
    }
}

/// NCS of one run under each policy, in [`Policy::ALL`] order.
pub fn run_ncs(probabilities: &[f64], kdri_counts: &[f64], kap_counts: &[f64], accept_position: usize) -> [Ncs; 4] {
    let orders = [
        rank_baseline(probabilities.len()),
        rank_alp(probabilities),
        rank_kdri_heuristic(kdri_counts),
        rank_kap_heuristic(kap_counts),
    ];
    orders.map(|o| {
        debug_assert!(o.is_permutation());
        ncs_for_order(&o, accept_position)
    })
}

pub fn evaluate_policies(table: &FeatureTable, model: &Model) -> Result<PolicyTable> {
    let scores = model.predict_matrix(&table.matrix)?;
    evaluate_policies_with_scores(table, &scores)
}

/// Like [`evaluate_policies`] with precomputed acceptance scores per row.
pub fn evaluate_policies_with_scores(table: &FeatureTable, scores: &[f64]) -> Result<PolicyTable> {
    if scores.len() != table.n_rows() {
        return Err(Error::Precondition(format!(
            "{} scores for {} rows",
            scores.len(),
            table.n_rows()
        )));
    }
    let col = |name: &str| {
        table
            .matrix
            .column_index(name)
            .ok_or_else(|| Error::Precondition(format!("feature table lacks `{name}`")))
    };
    let (kdri_col, kap_col) = (col(KDRI_COUNT_FEATURE)?, col(KAP_COUNT_FEATURE)?);
    let runs: Vec<_> = table.runs().collect();
    let per_run: Vec<Option<[Ncs; 4]>> = runs
        .par_iter()
        .map(|r| {
            let labels = &table.labels[r.clone()];
            let accepts: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
            match accepts.as_slice() {
                [] => Ok(None),
                [a] => {
                    let kdri: Vec<f64> = r.clone().map(|i| table.matrix.get(i, kdri_col)).collect();
                    let kap: Vec<f64> = r.clone().map(|i| table.matrix.get(i, kap_col)).collect();
                    Ok(Some(run_ncs(&scores[r.clone()], &kdri, &kap, a + 1)))
                }
                _ => Err(Error::Precondition(format!(
                    "run of donor {} has {} acceptances",
                    table.keys[r.start].donor_id,
                    accepts.len()
                ))),
            }
        })
        .collect::<Result<_>>()?;

    let rows = Policy::ALL
        .iter()
        .enumerate()
        .map(|(k, &policy)| {
            let mut seen = Vec::new();
            let mut skipped = 0;
            for ncs in per_run.iter().flatten() {
                match ncs[k] {
                    Ncs::Seen(c) => seen.push(c),
                    Ncs::Skip => skipped += 1,
                }
            }
            PolicyRow {
                policy,
                mean_ncs: mean_ncs(&seen).ok(),
                n: seen.len(),
                skipped,
            }
        })
        .collect();
    Ok(PolicyTable { rows })
}
