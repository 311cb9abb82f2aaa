//! Trained models behind one interface, with a versioned JSON format.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{fit_tree, TreeModel, TreeParams};
use super::gbm::{fit_gbm, GbmModel, GbmParams};
use super::logreg::{fit_logreg, LogRegModel, LogRegParams};
use super::RAW_CLIP;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

pub const MODEL_FORMAT: &str = "kidrank-model";
pub const MODEL_VERSION: u32 = 1;

/// Predicts the training prevalence everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantModel {
    pub feature_names: Vec<String>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    DecisionTree(TreeModel),
    Gbm(GbmModel),
    #[serde(rename = "logreg")]
    LogReg(LogRegModel),
    Constant(ConstantModel),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: Model,
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::DecisionTree(_) => "decision_tree",
            Model::Gbm(_) => "gbm",
            Model::LogReg(_) => "logreg",
            Model::Constant(_) => "constant",
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::DecisionTree(m) => &m.feature_names,
            Model::Gbm(m) => &m.feature_names,
            Model::LogReg(m) => &m.feature_names,
            Model::Constant(m) => &m.feature_names,
        }
    }

    /// Score on the scale the model is additive in: the leaf fraction for a
    /// single tree, the margin for boosting and logistic regression.
    pub fn raw_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::DecisionTree(m) => m.tree.predict(x),
            Model::Gbm(m) => m.raw(x),
            Model::LogReg(m) => m.raw(x),
            Model::Constant(m) => m.probability,
        }
    }

    /// Acceptance probability, strictly inside (0, 1). No name check.
    pub fn probability_row(&self, x: &[f64]) -> f64 {
        let lo = super::sigmoid(-RAW_CLIP);
        match self {
            Model::DecisionTree(m) => m.tree.predict(x).clamp(lo, 1.0 - lo),
            Model::Gbm(m) => m.probability(x),
            Model::LogReg(m) => m.probability(x),
            Model::Constant(m) => m.probability.clamp(lo, 1.0 - lo),
        }
    }

    /// Errors on the first position where the names differ.
    pub fn check_names(&self, names: &[String]) -> Result<()> {
        let expected = self.feature_names();
        for i in 0..expected.len().max(names.len()) {
            let (e, f) = (expected.get(i), names.get(i));
            if e != f {
                return Err(Error::FeatureMismatch {
                    index: i,
                    expected: e.cloned().unwrap_or_else(|| "<end>".into()),
                    found: f.cloned().unwrap_or_else(|| "<end>".into()),
                });
            }
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        self.check_names(&x.names)?;
        Ok(self.probability_row(&x.values))
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_names(x.names())?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.probability_row(x.row(i)))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.feature_names().len();
        let trees: &[_] = match self {
            Model::DecisionTree(m) => std::slice::from_ref(&m.tree),
            Model::Gbm(m) => &m.trees,
            _ => &[],
        };
        for (k, t) in trees.iter().enumerate() {
            if let Some(f) = t.max_feature() {
                if f >= p {
                    return Err(Error::InvalidModel(format!("tree {k} splits on feature {f} of {p}")));
                }
            }
        }
        match self {
            Model::LogReg(m) if m.weights.len() != p || m.weights.iter().any(|w| !w.is_finite()) => {
                Err(Error::InvalidModel("logistic weights do not match the features".into()))
            }
            Model::Gbm(m) if !m.base_score.is_finite() => Err(Error::InvalidModel("non-finite base score".into())),
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&env).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        if env.format != MODEL_FORMAT || env.version != MODEL_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model format {} v{}",
                env.format, env.version
            )));
        }
        env.model.validate()?;
        Ok(env.model)
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text)
    }
}

/// A learner and its hyperparameters, as named in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    DecisionTree {
        #[serde(default, flatten)]
        params: TreeParams,
    },
    Gbm {
        #[serde(default, flatten)]
        params: GbmParams,
    },
    #[serde(rename = "logreg")]
    LogReg {
        #[serde(default, flatten)]
        params: LogRegParams,
    },
    Constant,
}

impl LearnerSpec {
    pub fn gbm() -> Self {
        LearnerSpec::Gbm {
            params: GbmParams::default(),
        }
    }

    pub fn logreg() -> Self {
        LearnerSpec::LogReg {
            params: LogRegParams::default(),
        }
    }

    pub fn decision_tree() -> Self {
        LearnerSpec::DecisionTree {
            params: TreeParams::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::DecisionTree { .. } => "decision_tree",
            LearnerSpec::Gbm { .. } => "gbm",
            LearnerSpec::LogReg { .. } => "logreg",
            LearnerSpec::Constant => "constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::DecisionTree { params } => params.validate(),
            LearnerSpec::Gbm { params } => params.validate(),
            LearnerSpec::LogReg { params } => params.validate(),
            LearnerSpec::Constant => Ok(()),
        }
    }

    pub fn fit(&self, x: &FeatureMatrix, y: &[u8]) -> Result<Model> {
        Ok(match self {
            LearnerSpec::DecisionTree { params } => Model::DecisionTree(fit_tree(x, y, params)?),
            LearnerSpec::Gbm { params } => Model::Gbm(fit_gbm(x, y, params)?),
            LearnerSpec::LogReg { params } => Model::LogReg(fit_logreg(x, y, params)?),
            LearnerSpec::Constant => {
                super::check_xy(x, y, None)?;
                Model::Constant(ConstantModel {
                    feature_names: x.names().to_vec(),
                    probability: y.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64,
                })
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tree::{Node, Tree};

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn stump_gbm() -> Model {
        let tree = Tree::from_nodes(vec![
            Node::Split {
                feature: 1,
                threshold: 0.5,
                left: 1,
                right: 2,
                cover: 10.0,
            },
            Node::Leaf {
                value: -0.25,
                cover: 6.0,
            },
            Node::Leaf {
                value: 0.75,
                cover: 4.0,
            },
        ])
        .unwrap();
        Model::Gbm(GbmModel {
            feature_names: names(&["a", "b"]),
            base_score: -1.0,
            learning_rate: 0.1,
            trees: vec![tree],
            training_deviance: vec![],
        })
    }

    #[test]
    fn zero_tree_gbm_is_sigmoid_of_base() {
        let m = GbmModel {
            feature_names: names(&["a"]),
            base_score: -2.0,
            learning_rate: 0.1,
            trees: vec![],
            training_deviance: vec![],
        };
        assert_eq!(m.probability(&[1.0]), 1.0 / (1.0 + 2f64.exp()));
    }

    #[test]
    fn frozen_golden_probability() {
        let m = stump_gbm();
        let v = FeatureVector {
            names: names(&["a", "b"]).into(),
            values: vec![3.0, 0.9],
        };
        // sigmoid(-1 + 0.75) = sigmoid(-0.25)
        let p = m.predict_proba(&v).unwrap();
        assert_eq!(format!("{p:.8}"), "0.43782350");
    }

    #[test]
    fn name_mismatch_names_first_difference() {
        let m = stump_gbm();
        let v = FeatureVector {
            names: names(&["a", "c"]).into(),
            values: vec![0.0, 0.0],
        };
        match m.predict_proba(&v) {
            Err(Error::FeatureMismatch {
                index: 1,
                expected,
                found,
            }) => {
                assert_eq!((expected.as_str(), found.as_str()), ("b", "c"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let m = stump_gbm();
        let text = m.to_json().unwrap();
        assert_eq!(Model::from_json(&text).unwrap(), m);
        assert!(Model::from_json(&text.replace("\"version\": 1", "\"version\": 9")).is_err());
    }

    #[test]
    fn out_of_range_feature_is_invalid() {
        let mut m = stump_gbm();
        if let Model::Gbm(g) = &mut m {
            g.feature_names.truncate(1);
        }
        assert!(Model::from_json(&m.to_json().unwrap()).is_err());
    }

    #[test]
    fn learner_spec_parses_from_toml() {
        let spec: LearnerSpec = toml::from_str("kind = \"gbm\"\nn_trees = 5\n").unwrap();
        assert_eq!(
            spec,
            LearnerSpec::Gbm {
                params: GbmParams {
                    n_trees: 5,
                    ..Default::default()
                }
            }
        );
        let c: LearnerSpec = toml::from_str("kind = \"constant\"").unwrap();
        assert_eq!(c, LearnerSpec::Constant);
    }
}
