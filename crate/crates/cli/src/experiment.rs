//! The experiment pipeline shared by `run`, `compare` and the acceptance
//! suite: load, KDRI filter, censor, featurize, split, train, evaluate.

use anyhow::{Context, Result};
use kidrank_core::censoring::{censor_dataset, CensorReport};
use kidrank_core::features::{featurize, FeatureContext, FeatureTable};
use kidrank_core::ingest::synth::{
    calibration_report, generate_with_truth, CalibrationReport, GroundTruth, Population,
};
use kidrank_core::ingest::{load_dataset, Dataset, DatasetCounts, DatasetPaths, ExclusionReport};
use kidrank_core::learners::{split_donorwise, Model};
use kidrank_core::rankeval::{
    classification_report, evaluate_policies_with_scores, pareto_filter, roc_auc, threshold_labels, threshold_sweep,
    ClassificationReport, PolicyTable, Roc, SweepInput, SweepPoint,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, InputConfig, KdriWindow, ModelConfig};

/// Runs `f` and tags its failure with the stage name.
pub fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage `{name}` failed"))
}

/// Generated-data extras.
#[derive(Clone, Debug)]
pub struct Synthetic {
    pub ground_truth: GroundTruth,
    pub realized_accept_share: f64,
    pub calibration: CalibrationReport,
    pub reject_calibration: CalibrationReport,
}

#[derive(Clone, Debug)]
pub struct Source {
    pub dataset: Dataset,
    pub exclusions: Option<ExclusionReport>,
    pub synthetic: Option<Synthetic>,
}

pub fn load_source(cfg: &ExperimentConfig) -> Result<Source> {
    match &cfg.input {
        InputConfig::Ingest { dir, .. } => {
            let (dataset, report) = load_dataset(&DatasetPaths::in_dir(dir))?;
            Ok(Source {
                dataset,
                exclusions: Some(report),
                synthetic: None,
            })
        }
        InputConfig::Generate { .. } => {
            let g = cfg.generator().expect("generate mode has a generator config");
            let s = generate_with_truth(&g)?;
            Ok(Source {
                synthetic: Some(Synthetic {
                    calibration: calibration_report(&s.dataset, &g, Population::Donors),
                    reject_calibration: calibration_report(&s.dataset, &g, Population::RejectOffers),
                    ground_truth: s.ground_truth,
                    realized_accept_share: s.realized_accept_share,
                }),
                dataset: s.dataset,
                exclusions: None,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Full,
    Censored,
}

impl Level {
    pub fn label(self) -> &'static str {
        match self {
            Level::Full => "full",
            Level::Censored => "censored",
        }
    }
}

/// Featurized train and evaluation sets.
pub struct Prepared {
    pub source: Source,
    /// Counts after the KDRI filter.
    pub filtered: DatasetCounts,
    pub censoring: Option<CensorReport>,
    pub train: FeatureTable,
    /// Evaluation sets; the first is the primary one.
    pub eval: Vec<(Level, FeatureTable)>,
}

impl Prepared {
    pub fn primary_eval(&self) -> (Level, &FeatureTable) {
        let (level, table) = &self.eval[0];
        (*level, table)
    }
}

/// Every stage up to the donor split.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let source = stage("load", || load_source(cfg))?;
    prepare_from(cfg, source)
}

/// Featurized kidneys before the donor split.
pub struct Featurized {
    /// Counts after the KDRI filter.
    pub filtered: DatasetCounts,
    pub censoring: Option<CensorReport>,
    pub full: FeatureTable,
    pub censored: Option<FeatureTable>,
}

impl Featurized {
    /// The censored table when censoring is on, else the full one.
    pub fn training_table(&self) -> &FeatureTable {
        self.censored.as_ref().unwrap_or(&self.full)
    }
}

pub fn featurize_source(cfg: &ExperimentConfig, source: &Source) -> Result<Featurized> {
    let filtered = stage("filter", || {
        Ok(match cfg.kdri_window {
            Some(KdriWindow { lo, hi }) => source.dataset.filter_kdri(lo, hi),
            None => source.dataset.clone(),
        })
    })?;
    let censored = stage("censor", || {
        Ok(if cfg.censoring.enabled {
            Some(censor_dataset(&filtered, &cfg.censoring.censor_config())?)
        } else {
            None
        })
    })?;
    // Center histories come from every offer in the source, not only the
    // filtered kidneys.
    stage("featurize", || {
        let ctx = FeatureContext::from_dataset(&source.dataset, cfg.feature_config())?;
        let full = featurize(&ctx, &filtered, &filtered.match_runs)?;
        let (censored, censoring) = match censored {
            Some((c, report)) => (Some(featurize(&ctx, &filtered, &c.match_runs)?), Some(report)),
            None => (None, None),
        };
        Ok(Featurized {
            filtered: filtered.counts(),
            censoring,
            full,
            censored,
        })
    })
}

pub fn prepare_from(cfg: &ExperimentConfig, source: Source) -> Result<Prepared> {
    let f = featurize_source(cfg, &source)?;
    let spec = cfg.split_spec();
    // nothing is fitted for a pretrained model, so every kidney is evaluated
    let pretrained = matches!(cfg.model, ModelConfig::Pretrained(_));
    let split = |t: &FeatureTable| -> Result<(FeatureTable, FeatureTable)> {
        if pretrained {
            Ok((t.filter_rows(|_| false), t.clone()))
        } else {
            Ok(split_donorwise(t, &spec)?)
        }
    };
    let (train, eval) = stage("split", || {
        let (train_full, eval_full) = split(&f.full)?;
        Ok(match &f.censored {
            None => (train_full, vec![(Level::Full, eval_full)]),
            Some(c) => {
                let (train_c, eval_c) = split(c)?;
                let eval = if cfg.censoring.censors_eval() {
                    vec![(Level::Censored, eval_c), (Level::Full, eval_full)]
                } else {
                    vec![(Level::Full, eval_full), (Level::Censored, eval_c)]
                };
                (train_c, eval)
            }
        })
    })?;
    Ok(Prepared {
        filtered: f.filtered,
        censoring: f.censoring,
        source,
        train,
        eval,
    })
}

/// Fits the configured learner on the training rows, or loads the
/// pretrained model and checks it against the feature layout.
pub fn train(cfg: &ExperimentConfig, train: &FeatureTable) -> Result<Model> {
    stage("train", || {
        Ok(match &cfg.model {
            ModelConfig::Learner(spec) => spec.fit(&train.matrix, &train.labels)?,
            ModelConfig::Pretrained(path) => {
                let m = Model::load(path)?;
                m.check_names(train.matrix.names())?;
                m
            }
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    pub runs: usize,
    pub donors: usize,
    pub accept_share: f64,
}

impl TableSummary {
    pub fn of(t: &FeatureTable) -> Self {
        let donors: std::collections::HashSet<_> = t.keys.iter().map(|k| &k.donor_id).collect();
        TableSummary {
            rows: t.n_rows(),
            runs: t.n_runs(),
            donors: donors.len(),
            accept_share: t.accept_share(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: Level,
    pub table: TableSummary,
    pub policies: PolicyTable,
    /// At the 0.5 cutoff.
    pub classification: ClassificationReport,
    /// `None` when the set holds a single class.
    pub auc: Option<f64>,
}

/// Model results on every evaluation set.
pub struct Evaluation {
    pub levels: Vec<LevelResult>,
    /// ROC of the primary set.
    pub roc: Option<Roc>,
    pub sweep: Vec<SweepPoint>,
    pub sweep_front: Vec<SweepPoint>,
}

pub const DECISION_THRESHOLD: f64 = 0.5;

pub fn evaluate(model: &Model, prepared: &Prepared, sweep_thresholds: Option<usize>) -> Result<Evaluation> {
    stage("evaluate", || {
        let mut levels = Vec::new();
        let mut scores = Vec::new();
        let mut roc = None;
        for (i, (level, table)) in prepared.eval.iter().enumerate() {
            let p = model.predict_matrix(&table.matrix)?;
            let policies = evaluate_policies_with_scores(table, &p)?;
            let classification = classification_report(&table.labels, &threshold_labels(&p, DECISION_THRESHOLD))?;
            let curve = roc_auc(&table.labels, &p).ok();
            levels.push(LevelResult {
                level: *level,
                table: TableSummary::of(table),
                policies,
                classification,
                auc: curve.as_ref().map(|r| r.auc),
            });
            if i == 0 {
                roc = curve;
            }
            scores.push(p);
        }
        let (sweep, sweep_front) = match sweep_thresholds {
            Some(n) => {
                let inputs: Vec<SweepInput<'_>> = prepared
                    .eval
                    .iter()
                    .zip(&scores)
                    .map(|((level, table), s)| SweepInput {
                        model: model.kind(),
                        level: level.label(),
                        y_true: &table.labels,
                        scores: s,
                    })
                    .collect();
                let pts = threshold_sweep(&inputs, n)?;
                let front = pareto_filter(&pts);
                (pts, front)
            }
            None => (Vec::new(), Vec::new()),
        };
        Ok(Evaluation {
            levels,
            roc,
            sweep,
            sweep_front,
        })
    })
}
