//! Per-kidney force data and explanation requests.

use std::str::FromStr;

use anyhow::Result;
use kidrank_core::explain::{force_plot_data, treeshap, Band, ForcePlot, SegmentFeature};
use kidrank_core::features::FeatureTable;
use kidrank_core::learners::Model;
use kidrank_core::CenterId;
use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

/// Centers listed at each end of a kidney's ranking.
pub const RANK_TAIL: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterForce {
    pub center_id: CenterId,
    /// 1-based position in the run's baseline order.
    pub position: usize,
    pub probability: f64,
    pub accepted: bool,
    pub force: ForcePlot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KidneyReport {
    pub kidney: String,
    pub model: String,
    pub n_centers: usize,
    /// Highest predicted probability first.
    pub top: Vec<CenterForce>,
    /// The last centers of the same ranking, still highest first.
    pub bottom: Vec<CenterForce>,
}

/// A kidney reference: `DONOR#K`, or `DONOR` when the donor has one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KidneyRef {
    pub donor: String,
    pub kidney: Option<u8>,
}

impl FromStr for KidneyRef {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::new("kidney", format!("expected DONOR or DONOR#K, got `{s}`"));
        let (donor, kidney) = match s.split_once('#') {
            Some((d, k)) => (d, Some(k.parse::<u8>().map_err(|_| bad())?)),
            None => (s, None),
        };
        if donor.is_empty() {
            return Err(bad());
        }
        Ok(KidneyRef {
            donor: donor.to_string(),
            kidney,
        })
    }
}

/// File-name-safe form of a kidney key.
pub fn force_file_name(donor: &str, kidney: u8) -> String {
    let safe: String = donor
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("force_{safe}_{kidney}.json")
}

/// Finds the rows of one kidney's run in the first table that has it.
fn locate<'a>(tables: &[&'a FeatureTable], r: &KidneyRef) -> Result<(&'a FeatureTable, std::ops::Range<usize>, u8)> {
    for t in tables {
        let runs: Vec<_> = t
            .runs()
            .filter(|rows| {
                let k = &t.keys[rows.start];
                k.donor_id.as_str() == r.donor && r.kidney.is_none_or(|n| n == k.kidney)
            })
            .collect();
        match runs.len() {
            0 => continue,
            1 => {
                let kidney = t.keys[runs[0].start].kidney;
                return Ok((t, runs[0].clone(), kidney));
            }
            _ => {
                return Err(ConfigError::new(
                    "kidney",
                    format!(
                        "donor {} has {} kidneys; name one as {}#K",
                        r.donor,
                        runs.len(),
                        r.donor
                    ),
                )
                .into())
            }
        }
    }
    let shown = match r.kidney {
        Some(k) => format!("{}#{k}", r.donor),
        None => r.donor.clone(),
    };
    Err(ConfigError::new("kidney", format!("unknown kidney `{shown}`")).into())
}

/// Ranks a kidney's candidate centers by predicted probability and attaches
/// force data to the first and last [`RANK_TAIL`] of them.
pub fn kidney_report(model: &Model, tables: &[&FeatureTable], r: &KidneyRef, top_k: usize) -> Result<KidneyReport> {
    let (table, rows, kidney) = locate(tables, r)?;
    let probs: Vec<f64> = rows
        .clone()
        .map(|i| model.probability_row(table.matrix.row(i)))
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    // descending probability, ties keep baseline order
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let entry = |j: usize| -> Result<CenterForce> {
        let i = rows.start + j;
        let x = table.matrix.vector(i);
        let expl = treeshap(model, &x.values)?;
        Ok(CenterForce {
            center_id: table.keys[i].center_id.clone(),
            position: table.keys[i].position + 1,
            probability: probs[j],
            accepted: table.labels[i] == 1,
            force: force_plot_data(&expl, &x, top_k)?,
        })
    };
    let n = order.len();
    let top = order
        .iter()
        .take(RANK_TAIL)
        .map(|&j| entry(j))
        .collect::<Result<Vec<_>>>()?;
    let bottom = order[n.saturating_sub(RANK_TAIL)..]
        .iter()
        .map(|&j| entry(j))
        .collect::<Result<Vec<_>>>()?;
    Ok(KidneyReport {
        kidney: format!("{}#{kidney}", r.donor),
        model: model.kind().to_string(),
        n_centers: n,
        top,
        bottom,
    })
}

/// `FEATURE:BAND`, e.g. `kdri:bottom10`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentSpec {
    pub feature: SegmentFeature,
    pub band: Band,
}

impl FromStr for SegmentSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = |what: &str| {
            let features: Vec<&str> = SegmentFeature::ALL.iter().map(|f| f.label()).collect();
            ConfigError::new(
                "segment",
                format!(
                    "{what} in `{s}`; expected FEATURE:BAND with FEATURE one of {} and BAND bottom10 or top10",
                    features.join(", ")
                ),
            )
        };
        let (f, b) = s.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let feature = SegmentFeature::ALL
            .into_iter()
            .find(|x| x.label() == f)
            .ok_or_else(|| bad("unknown feature"))?;
        let band = match b {
            "bottom10" => Band::Bottom10,
            "top10" => Band::Top10,
            _ => return Err(bad("unknown band")),
        };
        Ok(SegmentSpec { feature, band })
    }
}

impl SegmentSpec {
    pub fn file_stem(&self) -> String {
        format!("segment_{}_{}", self.feature.label(), self.band.label())
    }
}
