//! Shared inputs for the pipeline benchmarks.

use kidrank_core::censoring::{censor_dataset, CensorConfig};
use kidrank_core::features::{featurize, FeatureConfig, FeatureContext, FeatureTable};
use kidrank_core::ingest::synth::{generate_synthetic, GeneratorConfig};
use kidrank_core::ingest::Dataset;
use kidrank_core::learners::{fit_gbm, GbmParams, Model};

pub fn generator(n_donors: usize) -> GeneratorConfig {
    GeneratorConfig {
        n_donors,
        ..Default::default()
    }
}

pub fn dataset(n_donors: usize) -> Dataset {
    generate_synthetic(&generator(n_donors)).expect("benchmark generator config is valid")
}

pub fn context(ds: &Dataset) -> FeatureContext {
    FeatureContext::from_dataset(ds, FeatureConfig::default()).expect("generated data featurizes")
}

/// Censored feature rows of a generated dataset.
pub fn censored_table(ds: &Dataset) -> FeatureTable {
    let (censored, _) = censor_dataset(ds, &CensorConfig::default()).expect("censoring succeeds");
    featurize(&context(ds), ds, &censored.match_runs).expect("generated data featurizes")
}

pub fn gbm_params(n_trees: usize) -> GbmParams {
    GbmParams {
        n_trees,
        max_depth: 4,
        learning_rate: 0.1,
        ..Default::default()
    }
}

pub fn gbm(table: &FeatureTable, n_trees: usize) -> Model {
    Model::Gbm(fit_gbm(&table.matrix, &table.labels, &gbm_params(n_trees)).expect("gbm fits"))
}
