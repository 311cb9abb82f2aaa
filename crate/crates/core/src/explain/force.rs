//! Per-offer contribution lists for force plots.

use serde::{Deserialize, Serialize};

use super::treeshap::{Link, ShapExplanation};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceEntry {
    pub feature: String,
    pub value: f64,
    pub phi: f64,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcePlot {
    pub base_value: f64,
    pub raw_output: f64,
    /// Probability implied by `raw_output`; attributions are additive on the
    /// raw scale only.
    pub probability: f64,
    pub link: Link,
    /// Largest |φ| first.
    pub entries: Vec<ForceEntry>,
    /// Sum of φ over the features left out of `entries`.
    pub other_phi: f64,
}

/// The `top_k` largest attributions by magnitude, ties by feature order.
pub fn force_plot_data(explanation: &ShapExplanation, x: &FeatureVector, top_k: usize) -> Result<ForcePlot> {
    if top_k == 0 {
        return Err(Error::Precondition("top_k must be at least 1".into()));
    }
    let phi = &explanation.phi;
    if x.values.len() != phi.len() || x.names.len() != phi.len() {
        return Err(Error::Precondition(format!(
            "explanation has {} features, input has {}",
            phi.len(),
            x.values.len()
        )));
    }
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].abs().total_cmp(&phi[a].abs()));
    let entries = order
        .iter()
        .take(top_k)
        .map(|&j| ForceEntry {
            feature: x.names[j].clone(),
            value: x.values[j],
            phi: phi[j],
            direction: if phi[j] > 0.0 {
                Direction::Increase
            } else if phi[j] < 0.0 {
                Direction::Decrease
            } else {
                Direction::None
            },
        })
        .collect();
    Ok(ForcePlot {
        base_value: explanation.base_value,
        raw_output: explanation.raw_output,
        probability: explanation.link.probability(explanation.raw_output),
        link: explanation.link,
        entries,
        other_phi: order.iter().skip(top_k).map(|&j| phi[j]).sum(),
    })
}
