//! Repeated donor-wise splits comparing learners on NCS and classification
//! metrics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::model::LearnerSpec;
use super::split::{split_donorwise, SplitSpec};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::rankeval::{classification_report, evaluate_policies, threshold_labels, Policy};

/// Mean and sample standard deviation (0 for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd }
    }
}

/// Test-side metrics of one learner on one split; classification uses a
/// 0.5 cutoff and class 1 for recall and precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub ncs: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub ncs: Summary,
    pub macro_f1: Summary,
    pub accuracy: Summary,
    pub recall: Summary,
    pub precision: Summary,
    pub splits: Vec<SplitMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n_splits: usize,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, model: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "model,ncs_mean,ncs_sd,macro_f1_mean,macro_f1_sd,accuracy_mean,accuracy_sd,recall_mean,recall_sd,precision_mean,precision_sd"
        )?;
        for r in &self.rows {
            write!(w, "{}", r.model)?;
            for s in [r.ncs, r.macro_f1, r.accuracy, r.recall, r.precision] {
                write!(w, ",{:.6},{:.6}", s.mean, s.sd)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Split `i` uses seed `seed + i`. Learners appearing twice are labelled
/// `name`, `name#2`, ...
pub fn compare_models(table: &FeatureTable, roster: &[LearnerSpec], n_splits: usize, seed: u64) -> Result<Comparison> {
    if roster.is_empty() {
        return Err(Error::Precondition("model roster is empty".into()));
    }
    if n_splits == 0 {
        return Err(Error::config("n_splits", "must be at least 1"));
    }
    for l in roster {
        l.validate()?;
    }
    let mut per_model: Vec<Vec<SplitMetrics>> = vec![Vec::with_capacity(n_splits); roster.len()];
    for i in 0..n_splits {
        let spec = SplitSpec {
            seed: seed.wrapping_add(i as u64),
            ..SplitSpec::default()
        };
        let (train, test) = split_donorwise(table, &spec)?;
        for (k, learner) in roster.iter().enumerate() {
            let model = learner.fit(&train.matrix, &train.labels)?;
            let scores = model.predict_matrix(&test.matrix)?;
            let policies = evaluate_policies(&test, &model)?;
            let report = classification_report(&test.labels, &threshold_labels(&scores, 0.5))?;
            per_model[k].push(SplitMetrics {
                ncs: policies.mean(Policy::Alp).unwrap_or(f64::NAN),
                macro_f1: report.macro_f1(),
                accuracy: report.accuracy,
                recall: report.classes[1].recall,
                precision: report.classes[1].precision,
            });
        }
    }
    let mut rows = Vec::with_capacity(roster.len());
    for (k, (learner, splits)) in roster.iter().zip(per_model).enumerate() {
        let dup = roster[..k].iter().filter(|l| l.name() == learner.name()).count();
        let model = if dup == 0 {
            learner.name().to_string()
        } else {
            format!("{}#{}", learner.name(), dup + 1)
        };
        let col = |f: fn(&SplitMetrics) -> f64| Summary::of(&splits.iter().map(f).collect::<Vec<_>>());
        rows.push(ComparisonRow {
            model,
            ncs: col(|m| m.ncs),
            macro_f1: col(|m| m.macro_f1),
            accuracy: col(|m| m.accuracy),
            recall: col(|m| m.recall),
            precision: col(|m| m.precision),
            splits,
        });
    }
    Ok(Comparison { n_splits, rows })
}
