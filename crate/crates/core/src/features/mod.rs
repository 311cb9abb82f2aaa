//! Offer-level feature engineering.

mod context;
pub mod geo;
pub mod history;
mod layout;
mod table;

pub use context::{build_feature_vector, DonorGeo, FeatureConfig, FeatureContext, FeatureVector};
pub use geo::{haversine_miles, nearest_airport_miles, EARTH_RADIUS_MILES};
pub use history::{
    center_rate_stats, compute_cit, kap_qualifies, rolling_count, time_of_day_bucket, GlobalMeans, HistoryWindow,
    Predicate, RateStats, WindowOfferCounts,
};
pub use layout::{canonical_names, col, layout, CategoricalBlock, FeatureLayout, CONTINUOUS};
pub use table::{featurize, FeatureMatrix, FeatureTable, OfferKey};
