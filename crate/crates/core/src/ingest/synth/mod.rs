//! Calibrated synthetic datasets with a known acceptance model.

mod calibration;
mod config;
mod generate;
mod sample;
mod truth;

pub use calibration::{calibration_report, CalibrationReport, CalibrationRow, CategoryShare, Population};
pub use config::{categorical_fields, continuous_fields, GeneratorConfig, MeanSd, CENTER_FIELDS};
pub use generate::{generate_synthetic, generate_with_truth, SyntheticDataset};
pub use sample::kdpi_from_kdri;
pub use truth::{GroundTruth, Term};
