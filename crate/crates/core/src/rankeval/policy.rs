//! Center orderings and the number-of-centers-seen metric.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    Baseline,
    #[serde(rename = "ALP")]
    Alp,
    #[serde(rename = "KDRI")]
    KdriHeuristic,
    #[serde(rename = "KAP")]
    KapHeuristic,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::Baseline,
        Policy::Alp,
        Policy::KdriHeuristic,
        Policy::KapHeuristic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Policy::Baseline => "Baseline",
            Policy::Alp => "ALP",
            Policy::KdriHeuristic => "KDRI",
            Policy::KapHeuristic => "KAP",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A permutation of a run's offers, as 1-based baseline positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub policy: Policy,
    pub order: Vec<usize>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True when `order` is a bijection on `1..=m`.
    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.order.len()];
        self.order
            .iter()
            .all(|&p| p >= 1 && p <= seen.len() && !std::mem::replace(&mut seen[p - 1], true))
    }
}

/// Positions sorted by key descending; ties keep baseline order.
fn descending(policy: Policy, keys: &[f64]) -> RankedList {
    let mut order: Vec<usize> = (1..=keys.len()).collect();
    order.sort_by(|&a, &b| keys[b - 1].total_cmp(&keys[a - 1]));
    RankedList { policy, order }
}

pub fn rank_baseline(m: usize) -> RankedList {
    RankedList {
        policy: Policy::Baseline,
        order: (1..=m).collect(),
    }
}

/// Orders by predicted acceptance probability.
pub fn rank_alp(probabilities: &[f64]) -> RankedList {
    descending(Policy::Alp, probabilities)
}

/// Orders by two-year acceptances of kidneys riskier than the offer.
pub fn rank_kdri_heuristic(counts: &[f64]) -> RankedList {
    descending(Policy::KdriHeuristic, counts)
}

/// Orders by two-year acceptances that would qualify for accelerated
/// placement.
pub fn rank_kap_heuristic(counts: &[f64]) -> RankedList {
    descending(Policy::KapHeuristic, counts)
}

/// Outcome of scoring one run under one order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ncs {
    Seen(usize),
    /// The accepting offer is not among the candidates.
    Skip,
}

/// Centers ranked ahead of the accepting one (`accept_position` is 1-based).
pub fn ncs_for_order(order: &RankedList, accept_position: usize) -> Ncs {
    match order.order.iter().position(|&p| p == accept_position) {
        Some(rank) => Ncs::Seen(rank),
        None => Ncs::Skip,
    }
}

pub fn mean_ncs(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::Precondition("mean NCS over zero kidneys".into()));
    }
    Ok(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}
