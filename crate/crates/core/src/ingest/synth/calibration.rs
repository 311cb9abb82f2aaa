//! Target-versus-realized marginals of a generated dataset.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::config::{categorical_fields, GeneratorConfig, CENTER_FIELDS};
use crate::domain::*;
use crate::features::{layout, time_of_day_bucket};
use crate::ingest::Dataset;

/// Which records the realized marginals are computed over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// Every donor once; center fields over every center once.
    #[default]
    Donors,
    /// Every rejected offer, carrying its donor's and center's values.
    RejectOffers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub feature: String,
    pub kind: String,
    /// Category with the largest deviation; empty for continuous rows.
    pub category: String,
    /// Target share or mean.
    pub target: f64,
    pub realized: f64,
    /// Largest absolute share deviation, or absolute mean deviation.
    pub deviation: f64,
    pub target_sd: Option<f64>,
    pub realized_sd: Option<f64>,
    /// Per-category target and realized shares; empty for continuous rows.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<CategoryShare>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub category: String,
    pub target: f64,
    pub realized: f64,
}

impl CalibrationRow {
    pub fn share(&self, category: &str) -> Option<&CategoryShare> {
        self.categories.iter().find(|c| c.category == category)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub population: Population,
    pub n: usize,
    pub rows: Vec<CalibrationRow>,
}

impl CalibrationReport {
    pub fn row(&self, feature: &str) -> Option<&CalibrationRow> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn max_categorical_deviation(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.kind == "categorical")
            .map(|r| r.deviation)
            .fold(0.0, f64::max)
    }
}

fn donor_scalar(d: &Donor, field: &str) -> f64 {
    match field {
        "kdri" => d.kdri,
        "age" => d.age,
        "height_cm" => d.height_cm,
        "weight_kg" => d.weight_kg,
        "creatinine" => d.creatinine,
        "bmi" => d.bmi,
        "blood_urea_nitrogen" => d.blood_urea_nitrogen,
        "death_mechanism_code" => d.death_mechanism_code as f64,
        "glomeruli_count" => d.glomeruli_count as f64,
        other => unreachable!("not a donor scalar: {other}"),
    }
}

fn center_scalar(c: &Center, field: &str) -> f64 {
    match field {
        "state_gdp_per_capita" => c.state_gdp_per_capita,
        "patient_count" => c.patient_count as f64,
        other => unreachable!("not a center scalar: {other}"),
    }
}

/// A unit of the population: a donor, an optional center, and the instant
/// used for the time-of-day bucket.
struct Unit<'a> {
    donor: Option<&'a Donor>,
    center: Option<&'a Center>,
    time: Option<Timestamp>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// One row per configured marginal.
pub fn calibration_report(dataset: &Dataset, cfg: &GeneratorConfig, population: Population) -> CalibrationReport {
    let donors = dataset.donor_lookup();
    let centers = dataset.center_lookup();
    let units: Vec<Unit<'_>> = match population {
        Population::Donors => dataset
            .donors
            .iter()
            .map(|d| Unit {
                donor: Some(d),
                center: None,
                time: d.clamp_time,
            })
            .chain(dataset.centers.iter().map(|c| Unit {
                donor: None,
                center: Some(c),
                time: None,
            }))
            .collect(),
        Population::RejectOffers => dataset
            .match_runs
            .iter()
            .flat_map(|r| r.offers.iter())
            .filter(|o| !o.response.is_accept())
            .map(|o| Unit {
                donor: donors.get(&o.donor_id).map(|&i| &dataset.donors[i]),
                center: centers.get(&o.center_id).map(|&i| &dataset.centers[i]),
                time: Some(o.offer_time),
            })
            .collect(),
    };
    let n = match population {
        Population::Donors => dataset.donors.len(),
        Population::RejectOffers => units.len(),
    };

    let l = layout();
    let blocks: HashMap<&str, _> = l.donor_blocks.iter().map(|b| (b.field, b)).collect();
    let mut rows = Vec::new();
    for (field, labels) in categorical_fields() {
        if !cfg.categorical_marginals.contains_key(field) {
            continue;
        }
        let mut counts = vec![0usize; labels.len()];
        for u in &units {
            let arm = if field == "time_of_day" {
                u.donor
                    .and(u.time)
                    .map(|t| time_of_day_bucket(t, cfg.utc_offset_minutes).index())
            } else {
                u.donor.map(|d| (blocks[field].arm)(d))
            };
            if let Some(a) = arm {
                counts[a] += 1;
            }
        }
        let total = counts.iter().sum::<usize>().max(1) as f64;
        let target = cfg.shares(field);
        let (worst, dev) = counts
            .iter()
            .zip(&target)
            .map(|(&c, &t)| (c as f64 / total - t).abs())
            .enumerate()
            .fold((0, -1.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
        rows.push(CalibrationRow {
            feature: field.to_string(),
            kind: "categorical".into(),
            category: labels[worst].to_string(),
            target: target[worst],
            realized: counts[worst] as f64 / total,
            deviation: dev,
            target_sd: None,
            realized_sd: None,
            categories: labels
                .iter()
                .zip(&target)
                .zip(&counts)
                .map(|((l, &t), &c)| CategoryShare {
                    category: l.to_string(),
                    target: t,
                    realized: c as f64 / total,
                })
                .collect(),
        });
    }

    for (field, ms) in &cfg.continuous_marginals {
        let xs: Vec<f64> = if CENTER_FIELDS.contains(&field.as_str()) {
            units
                .iter()
                .filter_map(|u| u.center.map(|c| center_scalar(c, field)))
                .collect()
        } else {
            units
                .iter()
                .filter_map(|u| u.donor.map(|d| donor_scalar(d, field)))
                .collect()
        };
        let (m, sd) = mean_sd(&xs);
        rows.push(CalibrationRow {
            feature: field.clone(),
            kind: "continuous".into(),
            category: String::new(),
            target: ms.mean,
            realized: m,
            deviation: (m - ms.mean).abs(),
            target_sd: Some(ms.sd),
            realized_sd: Some(sd),
            categories: Vec::new(),
        });
    }
    CalibrationReport { population, n, rows }
}
