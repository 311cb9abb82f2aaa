//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use kidrank_core::censoring::CensorConfig;
use kidrank_core::features::FeatureConfig;
use kidrank_core::ingest::synth::GeneratorConfig;
use kidrank_core::learners::{LearnerSpec, SplitSpec};
use serde::{Deserialize, Serialize, Serializer};

/// A config or usage problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Prefixes a core config error's field with the section it came from.
fn in_section(section: &str, e: kidrank_core::Error) -> ConfigError {
    match e {
        kidrank_core::Error::Config { field, message } => ConfigError::new(format!("{section}.{field}"), message),
        other => ConfigError::new(section, other.to_string()),
    }
}

/// Dotted key path of the TOML entry at byte offset `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let pos = pos.min(text.len());
    let line_start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    let section = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let key = if line.starts_with('[') {
        String::new()
    } else {
        line.split('=').next().unwrap_or("").trim().to_string()
    };
    match (section, key.is_empty()) {
        (Some(s), false) => format!("{s}.{key}"),
        (Some(s), true) => s,
        (None, _) if line.starts_with('[') => line.trim_matches(|c| c == '[' || c == ']').trim().to_string(),
        (None, _) => key,
    }
}

pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> ConfigError {
    let field = e.span().map(|s| key_at(text, s.start)).unwrap_or_default();
    ConfigError::new(field, e.message().trim())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed: drives the generator and the donor split.
    #[serde(default)]
    pub seed: u64,
    pub input: InputConfig,
    #[serde(default)]
    pub censoring: CensoringConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kdri_window: Option<KdriWindow>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    /// A directory holding the dataset CSVs.
    Ingest {
        dir: PathBuf,
        #[serde(default)]
        utc_offset_minutes: i32,
    },
    /// Synthetic data; `config` names a generator TOML file, `generator`
    /// holds the same keys inline. Both may be omitted for the defaults.
    Generate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<GeneratorConfig>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorScope {
    /// Censor the training rows; evaluate on uncensored rows.
    Train,
    #[default]
    TrainAndEval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensoringConfig {
    pub enabled: bool,
    pub apply_to: CensorScope,
    pub target_accept_share: f64,
    pub tolerance: f64,
}

impl Default for CensoringConfig {
    fn default() -> Self {
        let c = CensorConfig::default();
        CensoringConfig {
            enabled: true,
            apply_to: CensorScope::default(),
            target_accept_share: c.target_accept_share,
            tolerance: c.tolerance,
        }
    }
}

impl CensoringConfig {
    pub fn censor_config(&self) -> CensorConfig {
        CensorConfig {
            target_accept_share: self.target_accept_share,
            tolerance: self.tolerance,
        }
    }

    pub fn censors_eval(&self) -> bool {
        self.enabled && self.apply_to == CensorScope::TrainAndEval
    }
}

/// Inclusive donor KDRI range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdriWindow {
    pub lo: f64,
    pub hi: f64,
}

impl KdriWindow {
    pub const HARD_TO_PLACE: KdriWindow = KdriWindow { lo: 1.65, hi: 2.0 };

    pub fn contains(&self, kdri: f64) -> bool {
        kdri >= self.lo && kdri <= self.hi
    }
}

/// A learner to train, or a saved model to evaluate as is.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Learner(LearnerSpec),
    Pretrained(PathBuf),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Learner(LearnerSpec::gbm())
    }
}

impl Serialize for ModelConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ModelConfig::Learner(spec) => spec.serialize(s),
            ModelConfig::Pretrained(path) => {
                #[derive(Serialize)]
                struct Repr<'a> {
                    pretrained: &'a Path,
                }
                Repr { pretrained: path }.serialize(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for ModelConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut table = toml::Table::deserialize(d)?;
        if let Some(path) = table.remove("pretrained") {
            if let Some(extra) = table.keys().next() {
                return Err(D::Error::custom(format!(
                    "`{extra}` cannot be combined with `pretrained`"
                )));
            }
            let path = path
                .as_str()
                .ok_or_else(|| D::Error::custom("`pretrained` must be a path string"))?;
            return Ok(ModelConfig::Pretrained(PathBuf::from(path)));
        }
        LearnerSpec::deserialize(toml::Value::Table(table))
            .map(ModelConfig::Learner)
            .map_err(|e| D::Error::custom(e.message().trim()))
    }
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Learner(spec) => spec.name(),
            ModelConfig::Pretrained(_) => "pretrained",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    pub roc: bool,
    pub sweep: bool,
    pub sweep_thresholds: usize,
    /// Global SHAP importance over the evaluation rows (tree models only).
    pub explain: bool,
    /// Features kept in shap_points.csv.
    pub shap_top_k: usize,
    /// Kidneys (`DONOR#K`) to write force-plot files for.
    pub force_kidneys: Vec<String>,
    /// Writes features_train.csv and features_eval.csv, which `explain` reads.
    pub features: bool,
    /// Copies the generated or ingested dataset into the run directory.
    pub dataset: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            roc: true,
            sweep: true,
            sweep_thresholds: kidrank_core::rankeval::DEFAULT_THRESHOLDS,
            explain: true,
            shap_top_k: 10,
            force_kidneys: Vec::new(),
            features: true,
            dataset: false,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let base = std::path::absolute(base)
            .map_err(|e| ConfigError::new("", format!("cannot resolve {}: {e}", base.display())))?;
        Self::from_toml_str(&text, &base)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        cfg.resolve(base_dir)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes paths absolute and inlines the generator config so that the
    /// serialized form is self-contained.
    fn resolve(&mut self, base: &Path) -> Result<(), ConfigError> {
        let abs = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        match &mut self.input {
            InputConfig::Ingest { dir, .. } => *dir = abs(dir),
            InputConfig::Generate { config, generator } => {
                let gen = match (config.take(), generator.take()) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::new(
                            "input.config",
                            "give either `config` or `generator`, not both",
                        ))
                    }
                    (Some(path), None) => {
                        let path = abs(&path);
                        let text = std::fs::read_to_string(&path).map_err(|e| {
                            ConfigError::new("input.config", format!("cannot read {}: {e}", path.display()))
                        })?;
                        GeneratorConfig::from_toml_str(&text).map_err(|e| in_section("input.generator", e))?
                    }
                    (None, Some(g)) => g.resolved().map_err(|e| in_section("input.generator", e))?,
                    (None, None) => GeneratorConfig::default(),
                };
                *generator = Some(gen);
            }
        }
        if let ModelConfig::Pretrained(p) = &mut self.model {
            *p = abs(p);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let InputConfig::Generate { generator: Some(g), .. } = &self.input {
            g.validate().map_err(|e| in_section("input.generator", e))?;
        }
        if self.censoring.enabled {
            self.censoring
                .censor_config()
                .validate()
                .map_err(|e| in_section("censoring", e))?;
        }
        if let Some(w) = self.kdri_window {
            if !(w.lo.is_finite() && w.hi.is_finite() && w.lo < w.hi) {
                return Err(ConfigError::new(
                    "kdri_window",
                    format!("need finite lo < hi, got [{}, {}]", w.lo, w.hi),
                ));
            }
        }
        if let ModelConfig::Learner(spec) = &self.model {
            spec.validate().map_err(|e| in_section("model", e))?;
        }
        self.split_spec().validate().map_err(|e| in_section("split", e))?;
        if self.outputs.shap_top_k == 0 {
            return Err(ConfigError::new("outputs.shap_top_k", "must be at least 1"));
        }
        if self.outputs.sweep_thresholds < 2 {
            return Err(ConfigError::new("outputs.sweep_thresholds", "must be at least 2"));
        }
        Ok(())
    }

    /// Checks that referenced paths exist; done at run time, not at parse.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        if let InputConfig::Ingest { dir, .. } = &self.input {
            if !dir.is_dir() {
                return Err(ConfigError::new(
                    "input.dir",
                    format!("{} is not a directory", dir.display()),
                ));
            }
        }
        if let ModelConfig::Pretrained(p) = &self.model {
            if !p.is_file() {
                return Err(ConfigError::new(
                    "model.pretrained",
                    format!("{} does not exist", p.display()),
                ));
            }
        }
        Ok(())
    }

    /// Overrides the master seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Generator config with the master seed applied, in generate mode.
    pub fn generator(&self) -> Option<GeneratorConfig> {
        match &self.input {
            InputConfig::Generate { generator, .. } => {
                let mut g = generator.clone().unwrap_or_default();
                g.seed = self.seed;
                Some(g)
            }
            InputConfig::Ingest { .. } => None,
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        match &self.input {
            InputConfig::Ingest { utc_offset_minutes, .. } => FeatureConfig {
                utc_offset_minutes: *utc_offset_minutes,
            },
            InputConfig::Generate { .. } => FeatureConfig {
                utc_offset_minutes: self.generator().map_or(0, |g| g.utc_offset_minutes),
            },
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            seed: self.seed,
        }
    }

    /// Canonical TOML of the resolved config; what the manifest stores.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment configs serialize to TOML")
    }
}
