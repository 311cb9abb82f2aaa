//! The four subcommands. Each writes into one output directory and returns
//! a summary for the terminal.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kidrank_core::censoring::CensorReport;
use kidrank_core::explain::{global_importance, segment_importance, GlobalImportance};
use kidrank_core::features::FeatureTable;
use kidrank_core::ingest::synth::{
    calibration_report, generate_with_truth, CalibrationReport, GeneratorConfig, Population,
};
use kidrank_core::ingest::{DatasetCounts, ExclusionReport};
use kidrank_core::learners::{compare_models, Comparison, LearnerSpec, Model};
use kidrank_core::rankeval::{Roc, SweepPoint};
use serde::Serialize;

use crate::config::{toml_error, ConfigError, ExperimentConfig, InputConfig, KdriWindow, ModelConfig};
use crate::experiment::{self, stage, Evaluation, LevelResult, Prepared, TableSummary};
use crate::explain::{force_file_name, kidney_report, KidneyRef, SegmentSpec};
use crate::output::{Manifest, OutputDir};

pub const CONFIG_FILE: &str = "config.toml";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.json";
pub const POLICY_FILE: &str = "policy_ncs.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const SHAP_POINTS_FILE: &str = "shap_points.csv";
pub const FEATURES_TRAIN_FILE: &str = "features_train.csv";
pub const FEATURES_EVAL_FILE: &str = "features_eval.csv";

/// Rounds the way the terminal tables print.
fn f4(x: f64) -> String {
    format!("{x:.4}")
}

// ---------------------------------------------------------------- generate

#[derive(Clone, Debug, Serialize)]
struct CalibrationFile<'a> {
    target_accept_share: f64,
    realized_accept_share: f64,
    donors: &'a CalibrationReport,
    reject_offers: &'a CalibrationReport,
}

pub struct GenerateSummary {
    pub out: PathBuf,
    pub counts: DatasetCounts,
    pub realized_accept_share: f64,
    pub calibration: CalibrationReport,
}

impl std::fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = &self.counts;
        writeln!(
            f,
            "wrote {} ({} donors, {} centers, {} rejected and {} accepted offers, acceptance share {})",
            self.out.display(),
            c.donors,
            c.centers,
            c.rejected_offers,
            c.accepted_offers,
            f4(self.realized_accept_share)
        )?;
        writeln!(
            f,
            "{:<32} {:<12} {:<14} {:>10} {:>10} {:>10}",
            "feature", "kind", "category", "target", "realized", "deviation"
        )?;
        for r in &self.calibration.rows {
            writeln!(
                f,
                "{:<32} {:<12} {:<14} {:>10} {:>10} {:>10}",
                r.feature,
                r.kind,
                r.category,
                f4(r.target),
                f4(r.realized),
                f4(r.deviation)
            )?;
        }
        Ok(())
    }
}

pub fn read_generator_config(path: Option<&Path>) -> Result<GeneratorConfig> {
    Ok(match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", p.display())))?;
            GeneratorConfig::from_toml_str(&text)?
        }
        None => GeneratorConfig::default(),
    })
}

/// Writes a synthetic dataset, its calibration report and ground truth.
pub fn generate(mut cfg: GeneratorConfig, seed: Option<u64>, out: &Path) -> Result<GenerateSummary> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let s = stage("generate", || Ok(generate_with_truth(&cfg)?))?;
    let donors = calibration_report(&s.dataset, &cfg, Population::Donors);
    let rejects = calibration_report(&s.dataset, &cfg, Population::RejectOffers);
    let config_toml = toml::to_string(&cfg).context("serializing the generator config")?;
    stage("write", || {
        let mut dir = OutputDir::create(out)?;
        for (name, bytes) in s.dataset.to_csv_files()? {
            dir.write(name, &bytes)?;
        }
        dir.write_json(
            "calibration.json",
            &CalibrationFile {
                target_accept_share: cfg.target_uncensored_accept_share,
                realized_accept_share: s.realized_accept_share,
                donors: &donors,
                reject_offers: &rejects,
            },
        )?;
        dir.write_json("ground_truth.json", &s.ground_truth)?;
        dir.write("generator.toml", config_toml.as_bytes())?;
        Manifest::new("generate", cfg.seed, config_toml.clone()).finish(&mut dir)
    })?;
    Ok(GenerateSummary {
        out: out.to_path_buf(),
        counts: s.dataset.counts(),
        realized_accept_share: s.realized_accept_share,
        calibration: donors,
    })
}

// --------------------------------------------------------------------- run

#[derive(Clone, Debug, Serialize)]
pub struct InputSummary {
    pub mode: &'static str,
    pub counts: DatasetCounts,
    /// After the KDRI window.
    pub filtered: DatasetCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized_accept_share: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusions: Option<ExclusionReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplainStatus {
    pub importance: bool,
    pub force_files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub model: String,
    pub seed: u64,
    pub input: InputSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kdri_window: Option<KdriWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censoring: Option<CensorReport>,
    pub train: TableSummary,
    /// Primary evaluation set first.
    pub evaluation: Vec<LevelResult>,
    pub explain: ExplainStatus,
}

pub struct RunSummary {
    pub out: PathBuf,
    pub report: RunReport,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = &self.report;
        writeln!(
            f,
            "run written to {} (model {}, {} training rows)",
            self.out.display(),
            r.model,
            r.train.rows
        )?;
        for level in &r.evaluation {
            let t = &level.table;
            let auc = level.auc.map(f4).unwrap_or_else(|| "n/a".into());
            writeln!(
                f,
                "{} evaluation set: {} rows, {} runs, accept share {}, AUC {auc}",
                level.level.label(),
                t.rows,
                t.runs,
                f4(t.accept_share)
            )?;
            for p in &level.policies.rows {
                let mean = p.mean_ncs.map(f4).unwrap_or_else(|| "n/a".into());
                writeln!(f, "  {:<9} mean NCS {mean:>8}  over {} runs", p.policy.label(), p.n)?;
            }
        }
        if let Some(note) = &r.explain.note {
            writeln!(f, "explain: {note}")?;
        }
        Ok(())
    }
}

fn roc_csv(roc: &Roc) -> Vec<u8> {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in &roc.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    s.into_bytes()
}

fn sweep_csv(points: &[SweepPoint]) -> Vec<u8> {
    let mut s = String::from("model,level,threshold,sensitivity,specificity\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.model, p.level, p.threshold, p.sensitivity, p.specificity
        );
    }
    s.into_bytes()
}

fn table_csv(t: &FeatureTable) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(buf)
}

fn write_importance(dir: &mut OutputDir, prefix: &str, imp: &GlobalImportance, top_k: usize) -> Result<()> {
    dir.write_with(&format!("{prefix}importance.csv"), |w| Ok(imp.write_importance_csv(w)?))?;
    dir.write_with(&format!("{prefix}shap_points.csv"), |w| {
        Ok(imp.write_shap_points_csv(w, top_k)?)
    })
}

/// Reads a run config, applying a `--seed` override.
pub fn load_experiment(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

/// Config embedded in a manifest; input digests must still match.
pub fn experiment_from_manifest(path: &Path) -> Result<(ExperimentConfig, Manifest)> {
    let m = Manifest::load(path)?;
    m.check_inputs()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = ExperimentConfig::from_toml_str(&m.config_toml, base)?;
    Ok((cfg, m))
}

fn new_manifest(command: &str, cfg: &ExperimentConfig) -> Result<Manifest> {
    let mut m = Manifest::new(command, cfg.seed, cfg.to_toml());
    if let InputConfig::Ingest { dir, .. } = &cfg.input {
        m.add_input_dir(dir)?;
    }
    if let ModelConfig::Pretrained(p) = &cfg.model {
        m.add_input_file(p)?;
    }
    Ok(m)
}

/// The full pipeline into one run directory.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.check_paths()?;
    let manifest = new_manifest("run", cfg)?;
    let prepared = experiment::prepare(cfg)?;
    let model = experiment::train(cfg, &prepared.train)?;
    let outputs = &cfg.outputs;
    let eval = experiment::evaluate(&model, &prepared, outputs.sweep.then_some(outputs.sweep_thresholds))?;
    let (_, primary) = prepared.primary_eval();

    let tree_model = !matches!(model, Model::LogReg(_));
    let importance = stage("explain", || {
        Ok(if outputs.explain && tree_model {
            Some(global_importance(&model, &primary.matrix)?)
        } else {
            None
        })
    })?;
    let kidneys = stage("explain", || {
        if !outputs.force_kidneys.is_empty() && !tree_model {
            return Err(ConfigError::new("outputs.force_kidneys", "force data needs a tree model").into());
        }
        outputs
            .force_kidneys
            .iter()
            .map(|k| {
                let r: KidneyRef = k.parse()?;
                kidney_report(&model, &[primary, &prepared.train], &r, outputs.shap_top_k)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let force_files: Vec<String> = kidneys
        .iter()
        .map(|k| {
            let (donor, n) = k.kidney.rsplit_once('#').expect("kidney keys carry a number");
            force_file_name(donor, n.parse().expect("kidney numbers are small"))
        })
        .collect();
    let note = if !tree_model && outputs.explain {
        Some("SHAP importance skipped: logistic regression is not a tree model".to_string())
    } else {
        None
    };
    let report = RunReport {
        model: model.kind().to_string(),
        seed: cfg.seed,
        input: input_summary(cfg, &prepared),
        kdri_window: cfg.kdri_window,
        censoring: prepared.censoring.clone(),
        train: TableSummary::of(&prepared.train),
        evaluation: eval.levels.clone(),
        explain: ExplainStatus {
            importance: importance.is_some(),
            force_files: force_files.clone(),
            note,
        },
    };

    stage("write", || {
        let mut dir = OutputDir::create(out)?;
        dir.write(CONFIG_FILE, cfg.to_toml().as_bytes())?;
        dir.write(MODEL_FILE, model.to_json()?.as_bytes())?;
        write_evaluation(&mut dir, &prepared, &eval, cfg)?;
        dir.write_json(REPORT_FILE, &report)?;
        if let Some(c) = &prepared.censoring {
            dir.write_json("censor_report.json", c)?;
        }
        if let Some(x) = &prepared.source.exclusions {
            dir.write_json("ingest_report.json", x)?;
        }
        if let Some(s) = &prepared.source.synthetic {
            dir.write_json(
                "calibration.json",
                &CalibrationFile {
                    target_accept_share: cfg.generator().map_or(0.0, |g| g.target_uncensored_accept_share),
                    realized_accept_share: s.realized_accept_share,
                    donors: &s.calibration,
                    reject_offers: &s.reject_calibration,
                },
            )?;
            dir.write_json("ground_truth.json", &s.ground_truth)?;
        }
        if let Some(imp) = &importance {
            write_importance(&mut dir, "", imp, outputs.shap_top_k)?;
        }
        for (k, name) in kidneys.iter().zip(&force_files) {
            dir.write_json(name, k)?;
        }
        if outputs.features {
            dir.write(FEATURES_TRAIN_FILE, &table_csv(&prepared.train)?)?;
            dir.write(FEATURES_EVAL_FILE, &table_csv(primary)?)?;
        }
        if outputs.dataset {
            for (name, bytes) in prepared.source.dataset.to_csv_files()? {
                dir.write(&format!("dataset/{name}"), &bytes)?;
            }
        }
        manifest.finish(&mut dir)
    })?;
    Ok(RunSummary {
        out: out.to_path_buf(),
        report,
    })
}

fn write_evaluation(dir: &mut OutputDir, prepared: &Prepared, eval: &Evaluation, cfg: &ExperimentConfig) -> Result<()> {
    let primary = &eval.levels[0];
    dir.write_with(POLICY_FILE, |w| Ok(primary.policies.write_csv(w)?))?;
    if cfg.outputs.roc {
        if let Some(roc) = &eval.roc {
            dir.write("roc.csv", &roc_csv(roc))?;
        }
    }
    if cfg.outputs.sweep {
        dir.write("sweep.csv", &sweep_csv(&eval.sweep))?;
        dir.write("sweep_nondominated.csv", &sweep_csv(&eval.sweep_front))?;
    }
    debug_assert_eq!(prepared.eval.len(), eval.levels.len());
    Ok(())
}

fn input_summary(cfg: &ExperimentConfig, p: &Prepared) -> InputSummary {
    InputSummary {
        mode: match cfg.input {
            InputConfig::Ingest { .. } => "ingest",
            InputConfig::Generate { .. } => "generate",
        },
        counts: p.source.dataset.counts(),
        filtered: p.filtered,
        realized_accept_share: p.source.synthetic.as_ref().map(|s| s.realized_accept_share),
        exclusions: p.source.exclusions.clone(),
    }
}

// ----------------------------------------------------------------- compare

pub const DEFAULT_ROSTER: &[&str] = &["gbm", "logreg", "decision_tree"];

/// Learners by name; the configured model's parameters apply to its own
/// kind, the others take their defaults.
pub fn roster(names: &[String], cfg: &ExperimentConfig) -> Result<Vec<LearnerSpec>, ConfigError> {
    if names.is_empty() {
        return Err(ConfigError::new("roster", "name at least one learner"));
    }
    names
        .iter()
        .map(|n| {
            if let ModelConfig::Learner(spec) = &cfg.model {
                if spec.name() == n {
                    return Ok(spec.clone());
                }
            }
            let text = format!("kind = \"{n}\"");
            let spec: LearnerSpec = toml::from_str(&text).map_err(|e| {
                let mut e = toml_error(&text, e);
                e.field = "roster".into();
                e
            })?;
            Ok(spec)
        })
        .collect()
}

pub fn compare(cfg: &ExperimentConfig, roster: &[LearnerSpec], n_splits: usize, out: &Path) -> Result<Comparison> {
    cfg.check_paths()?;
    if n_splits == 0 {
        return Err(ConfigError::new("splits", "must be at least 1").into());
    }
    let manifest = new_manifest("compare", cfg)?;
    let source = stage("load", || experiment::load_source(cfg))?;
    let f = experiment::featurize_source(cfg, &source)?;
    let comparison = stage("compare", || {
        Ok(compare_models(f.training_table(), roster, n_splits, cfg.seed)?)
    })?;
    stage("write", || {
        let mut dir = OutputDir::create(out)?;
        dir.write(CONFIG_FILE, cfg.to_toml().as_bytes())?;
        dir.write_with("comparison.csv", |w| Ok(comparison.write_csv(w)?))?;
        dir.write_json("comparison.json", &comparison)?;
        manifest.finish(&mut dir)
    })?;
    Ok(comparison)
}

pub fn comparison_table(c: &Comparison) -> String {
    let mut s = format!(
        "{:<14} {:>16} {:>16} {:>16} {:>16}\n",
        "model", "NCS", "accuracy", "recall", "precision"
    );
    for r in &c.rows {
        let cell = |m: kidrank_core::learners::Summary| format!("{:.3} ± {:.3}", m.mean, m.sd);
        let _ = writeln!(
            s,
            "{:<14} {:>16} {:>16} {:>16} {:>16}",
            r.model,
            cell(r.ncs),
            cell(r.accuracy),
            cell(r.recall),
            cell(r.precision)
        );
    }
    s
}

// ----------------------------------------------------------------- explain

#[derive(Clone, Debug, Default)]
pub struct ExplainRequest {
    pub global: bool,
    pub segments: Vec<SegmentSpec>,
    pub kidneys: Vec<KidneyRef>,
    pub top_k: usize,
    /// Also write the full per-row φ matrix for global requests.
    pub shap_values: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplainedSet {
    pub name: String,
    pub rows: usize,
    pub top_features: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplainSummary {
    pub out: PathBuf,
    pub sets: Vec<ExplainedSet>,
    pub force_files: Vec<String>,
}

impl std::fmt::Display for ExplainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "explanations written to {}", self.out.display())?;
        for s in &self.sets {
            writeln!(f, "{} ({} rows): {}", s.name, s.rows, s.top_features.join(", "))?;
        }
        for k in &self.force_files {
            writeln!(f, "{k}")?;
        }
        Ok(())
    }
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(FeatureTable::read_csv(std::io::BufReader::new(file))?)
}

/// SHAP outputs for a finished run directory.
pub fn explain(run_dir: &Path, req: &ExplainRequest, out: &Path) -> Result<ExplainSummary> {
    if !req.global && req.segments.is_empty() && req.kidneys.is_empty() {
        return Err(ConfigError::new("request", "nothing to explain; pass --global, --segment or --kidney").into());
    }
    if req.top_k == 0 {
        return Err(ConfigError::new("top_k", "must be at least 1").into());
    }
    let (model, eval, train) = stage("load", || {
        let model = Model::load(&run_dir.join(MODEL_FILE))?;
        let eval = read_table(&run_dir.join(FEATURES_EVAL_FILE))?;
        let train_path = run_dir.join(FEATURES_TRAIN_FILE);
        let train = if train_path.exists() {
            Some(read_table(&train_path)?)
        } else {
            None
        };
        model.check_names(eval.matrix.names())?;
        Ok((model, eval, train))
    })?;
    if matches!(model, Model::LogReg(_)) {
        return Err(ConfigError::new(
            "model",
            "SHAP explanations need a tree model, the run holds logistic regression",
        )
        .into());
    }

    let mut dir = OutputDir::create(out)?;
    let mut sets = Vec::new();
    let mut force_files = Vec::new();
    let top = |imp: &GlobalImportance| imp.top(req.top_k.min(5)).into_iter().map(String::from).collect();
    if req.global {
        let imp = stage("explain", || Ok(global_importance(&model, &eval.matrix)?))?;
        write_importance(&mut dir, "", &imp, req.top_k)?;
        if req.shap_values {
            dir.write_with("shap_values.csv", |w| Ok(imp.write_shap_values_csv(w)?))?;
        }
        sets.push(ExplainedSet {
            name: "global".into(),
            rows: imp.n_rows(),
            top_features: top(&imp),
        });
    }
    for seg in &req.segments {
        let imp = stage("explain", || {
            Ok(segment_importance(&model, &eval.matrix, seg.feature, seg.band)?)
        })?;
        write_importance(&mut dir, &format!("{}_", seg.file_stem()), &imp, req.top_k)?;
        sets.push(ExplainedSet {
            name: seg.file_stem(),
            rows: imp.n_rows(),
            top_features: top(&imp),
        });
    }
    let mut tables = vec![&eval];
    tables.extend(train.as_ref());
    for r in &req.kidneys {
        let k = stage("explain", || kidney_report(&model, &tables, r, req.top_k))?;
        let (donor, n) = k.kidney.rsplit_once('#').expect("kidney keys carry a number");
        let name = force_file_name(donor, n.parse().expect("kidney numbers are small"));
        dir.write_json(&name, &k)?;
        force_files.push(name);
    }
    let summary = ExplainSummary {
        out: out.to_path_buf(),
        sets,
        force_files,
    };
    dir.write_json("explain_summary.json", &summary)?;
    Ok(summary)
}

/// Prints `text` to stdout, ignoring a closed pipe.
pub fn print(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}
