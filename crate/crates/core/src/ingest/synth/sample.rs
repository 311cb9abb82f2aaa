//! Marginal samplers shared by the generator.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::config::{categorical_fields, GeneratorConfig, MeanSd};
use crate::domain::{Categorical, GeoPoint};

/// KDPI approximated from KDRI by a normal-CDF percentile map.
pub fn kdpi_from_kdri(kdri: f64) -> f64 {
    (100.0 * std_normal_cdf((kdri - 1.25) / 0.35)).clamp(0.0, 100.0)
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `(mu, sigma)` of the lognormal with the given mean and sd.
pub(crate) fn lognormal_params(ms: MeanSd) -> (f64, f64) {
    let s2 = (1.0 + (ms.sd / ms.mean).powi(2)).ln();
    (ms.mean.ln() - s2 / 2.0, s2.sqrt())
}

pub(crate) fn lognormal_at(ms: MeanSd, z: f64) -> f64 {
    let (mu, sigma) = lognormal_params(ms);
    (mu + sigma * z).exp()
}

pub(crate) fn normal_at(ms: MeanSd, z: f64) -> f64 {
    ms.mean + ms.sd * z
}

/// Index of the category whose cumulative band contains `u`.
pub(crate) fn inverse_cdf(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or_else(|| {
        (0..cumulative.len())
            .rev()
            .find(|&i| cumulative[i] > if i == 0 { 0.0 } else { cumulative[i - 1] })
            .unwrap_or(0)
    })
}

pub(crate) const DEATH_MECHANISM_SENTINEL: i32 = 999;
const DEATH_MECHANISM_SMALL_MAX: i32 = 16;

/// Codes are uniform on 1..=16 except for a sentinel 999 whose probability
/// is set from the target mean.
pub(crate) fn death_mechanism<R: Rng + ?Sized>(ms: MeanSd, rng: &mut R) -> i32 {
    let small_mean = (DEATH_MECHANISM_SMALL_MAX as f64 + 1.0) / 2.0;
    let p = ((ms.mean - small_mean) / (DEATH_MECHANISM_SENTINEL as f64 - small_mean)).clamp(0.0, 1.0);
    if rng.random::<f64>() < p {
        DEATH_MECHANISM_SENTINEL
    } else {
        rng.random_range(1..=DEATH_MECHANISM_SMALL_MAX)
    }
}

/// Cumulative category shares per configured field.
#[derive(Clone, Debug)]
pub(crate) struct CategoricalTables {
    fields: Vec<(&'static str, Vec<f64>)>,
}

impl CategoricalTables {
    pub fn new(cfg: &GeneratorConfig) -> Self {
        let fields = categorical_fields()
            .into_iter()
            .map(|(f, _)| {
                let mut acc = 0.0;
                let cum = cfg
                    .shares(f)
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                (f, cum)
            })
            .collect();
        CategoricalTables { fields }
    }

    pub fn cumulative(&self, field: &str) -> &[f64] {
        &self
            .fields
            .iter()
            .find(|(f, _)| *f == field)
            .expect("known categorical field")
            .1
    }

    pub fn pick<C: Categorical>(&self, field: &str, u: f64) -> C {
        C::ALL[inverse_cdf(self.cumulative(field), u)]
    }

    pub fn draw<C: Categorical, R: Rng + ?Sized>(&self, field: &str, rng: &mut R) -> C {
        self.pick(field, rng.random::<f64>())
    }
}

pub(crate) const LAT_RANGE: (f64, f64) = (25.0, 49.0);
pub(crate) const LON_RANGE: (f64, f64) = (-124.0, -67.0);

pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> GeoPoint {
    let lat = rng.random_range(LAT_RANGE.0..LAT_RANGE.1);
    let lon = rng.random_range(LON_RANGE.0..LON_RANGE.1);
    GeoPoint::new(lat, lon).expect("inside bounding box")
}

/// `p` moved by normal offsets of `sd_miles` in each direction, kept inside
/// the bounding box.
pub(crate) fn jitter<R: Rng + ?Sized>(p: GeoPoint, sd_miles: f64, rng: &mut R) -> GeoPoint {
    const MILES_PER_DEG: f64 = 69.0;
    let dy = std_normal(rng) * sd_miles;
    let dx = std_normal(rng) * sd_miles;
    let lat = (p.lat() + dy / MILES_PER_DEG).clamp(LAT_RANGE.0, LAT_RANGE.1);
    let lon = (p.lon() + dx / (MILES_PER_DEG * lat.to_radians().cos())).clamp(LON_RANGE.0, LON_RANGE.1);
    GeoPoint::new(lat, lon).expect("clamped into bounding box")
}
