//! Acceptance-likelihood ranking of transplant centers for hard-to-place
//! deceased-donor kidneys.
//!
//! The crate covers the whole offline pipeline: building offer-level
//! datasets ([`ingest`]), engineering features ([`features`]), rebalancing by
//! censoring ([`censoring`]), fitting acceptance models ([`learners`]),
//! explaining them with exact TreeSHAP ([`explain`]) and comparing center
//! ranking policies ([`rankeval`]).

pub mod censoring;
pub mod domain;
pub mod error;
pub mod explain;
pub mod features;
pub mod ingest;
pub mod learners;
pub mod rankeval;

pub use domain::*;
pub use error::{Error, Result};
