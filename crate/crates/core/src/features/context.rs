//! Center state as seen at an offer instant, and the vector builder.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geo::{haversine_miles, nearest_airport_miles};
use super::history::{
    center_rate_stats, compute_cit, kap_qualifies, time_of_day_bucket, window_range, GlobalMeans, HistoryWindow,
    WindowOfferCounts,
};
use super::layout::{col, layout};
use crate::domain::*;
use crate::error::{Error, Result};
use crate::ingest::Dataset;

/// Used when neither seed history nor the dataset contains an acceptance.
const DEFAULT_MEANS: GlobalMeans = GlobalMeans {
    accepted_kdri: 1.0,
    accepted_age: 40.0,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Fixed zone used for time-of-day buckets.
    pub utc_offset_minutes: i32,
}

/// A named, ordered feature row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub names: Arc<[String]>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Donor-side airport distances, computed once per donor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DonorGeo {
    pub medium_airport_miles: f64,
    pub large_airport_miles: f64,
}

#[derive(Clone, Debug)]
struct CenterState {
    location: GeoPoint,
    patient_count: f64,
    state_gdp_per_capita: f64,
    medium_airport_miles: f64,
    large_airport_miles: f64,
    /// Seed history merged with acceptances observed in the offer log.
    history: Vec<AcceptedKidneyRecord>,
    offer_times: Vec<Timestamp>,
    accept_times: Vec<Timestamp>,
}

/// Everything needed to featurize an offer: per-center merged acceptance
/// history, offer/accept timelines, static center attributes and airports.
///
/// Built either in one go from a [`Dataset`] or incrementally by feeding it
/// offers in time order, which is how the generator keeps its ground-truth
/// features identical to what featurizing the finished dataset yields.
#[derive(Clone, Debug)]
pub struct FeatureContext {
    centers: Vec<CenterState>,
    ids: HashMap<CenterId, usize>,
    airports: AirportIndex,
    means: GlobalMeans,
    config: FeatureConfig,
}

fn mean_of(records: &[&AcceptedKidneyRecord]) -> Option<GlobalMeans> {
    if records.is_empty() {
        return None;
    }
    let n = records.len() as f64;
    Some(GlobalMeans {
        accepted_kdri: records.iter().map(|r| r.kdri).sum::<f64>() / n,
        accepted_age: records.iter().map(|r| r.donor_age).sum::<f64>() / n,
    })
}

impl FeatureContext {
    /// Context holding only the centers' seed histories. Fallback means come
    /// from those histories.
    pub fn new(centers: &[Center], airports: &AirportIndex, config: FeatureConfig) -> Result<Self> {
        let seed: Vec<&AcceptedKidneyRecord> = centers.iter().flat_map(|c| &c.history).collect();
        let means = mean_of(&seed).unwrap_or(DEFAULT_MEANS);
        Self::with_means(centers, airports, config, means)
    }

    fn with_means(
        centers: &[Center],
        airports: &AirportIndex,
        config: FeatureConfig,
        means: GlobalMeans,
    ) -> Result<Self> {
        let mut ids = HashMap::with_capacity(centers.len());
        let mut states = Vec::with_capacity(centers.len());
        for (i, c) in centers.iter().enumerate() {
            if ids.insert(c.center_id.clone(), i).is_some() {
                return Err(Error::Precondition(format!("duplicate center id {}", c.center_id)));
            }
            let mut history = c.history.clone();
            history.sort_by_key(|r| r.accept_time);
            states.push(CenterState {
                location: c.location,
                patient_count: c.patient_count as f64,
                state_gdp_per_capita: c.state_gdp_per_capita,
                medium_airport_miles: nearest_airport_miles(c.location, airports, AirportClass::Medium)?,
                large_airport_miles: nearest_airport_miles(c.location, airports, AirportClass::Large)?,
                history,
                offer_times: Vec::new(),
                accept_times: Vec::new(),
            });
        }
        Ok(FeatureContext {
            centers: states,
            ids,
            airports: airports.clone(),
            means,
            config,
        })
    }

    /// Context for featurizing `dataset`: seed histories plus every offer and
    /// acceptance in its match runs. Fallback means come from the seed
    /// histories, or from the dataset's acceptances when there are none.
    pub fn from_dataset(dataset: &Dataset, config: FeatureConfig) -> Result<Self> {
        let donors = dataset.donor_lookup();
        let mut accepted = Vec::new();
        for run in &dataset.match_runs {
            let donor = donors
                .get(&run.donor_id)
                .map(|&i| &dataset.donors[i])
                .ok_or_else(|| Error::Precondition(format!("match run references unknown donor {}", run.donor_id)))?;
            let clamp = donor
                .clamp_time
                .ok_or_else(|| Error::Precondition(format!("donor {} has no clamp time", donor.donor_id)))?;
            for o in &run.offers {
                let record = o.response.is_accept().then(|| {
                    AcceptedKidneyRecord::from_acceptance(donor, o.offer_time, compute_cit(clamp, o.offer_time))
                });
                accepted.push((o.center_id.clone(), o.offer_time, record));
            }
        }

        let seed: Vec<&AcceptedKidneyRecord> = dataset.centers.iter().flat_map(|c| &c.history).collect();
        let means = mean_of(&seed)
            .or_else(|| mean_of(&accepted.iter().filter_map(|(_, _, r)| r.as_ref()).collect::<Vec<_>>()))
            .unwrap_or(DEFAULT_MEANS);

        let mut ctx = Self::with_means(&dataset.centers, &dataset.airports, config, means)?;
        for (center_id, time, record) in accepted {
            let c = ctx.require_center(&center_id)?;
            let state = &mut ctx.centers[c];
            state.offer_times.push(time);
            if let Some(r) = record {
                state.accept_times.push(time);
                state.history.push(r);
            }
        }
        for s in &mut ctx.centers {
            s.offer_times.sort();
            s.accept_times.sort();
            s.history.sort_by_key(|r| r.accept_time);
        }
        Ok(ctx)
    }

    pub fn config(&self) -> FeatureConfig {
        self.config
    }

    pub fn global_means(&self) -> GlobalMeans {
        self.means
    }

    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn center_index(&self, id: &CenterId) -> Option<usize> {
        self.ids.get(id).copied()
    }

    pub fn require_center(&self, id: &CenterId) -> Result<usize> {
        self.center_index(id)
            .ok_or_else(|| Error::Precondition(format!("offer references unknown center {id}")))
    }

    /// Merged acceptance history of a center, sorted by time.
    pub fn center_history(&self, center: usize) -> &[AcceptedKidneyRecord] {
        &self.centers[center].history
    }

    /// Registers an offer received by `center` at `time`.
    pub fn record_offer(&mut self, center: usize, time: Timestamp) {
        let times = &mut self.centers[center].offer_times;
        let at = times.partition_point(|&t| t <= time);
        times.insert(at, time);
    }

    /// Registers an acceptance observed in the offer log. The matching offer
    /// must be registered separately with [`record_offer`](Self::record_offer).
    pub fn record_acceptance(&mut self, center: usize, record: AcceptedKidneyRecord) {
        let s = &mut self.centers[center];
        let at = s.accept_times.partition_point(|&t| t <= record.accept_time);
        s.accept_times.insert(at, record.accept_time);
        let at = s.history.partition_point(|r| r.accept_time <= record.accept_time);
        s.history.insert(at, record);
    }

    pub fn donor_geo(&self, donor: &Donor) -> DonorGeo {
        let nearest = |class| {
            nearest_airport_miles(donor.hospital_location, &self.airports, class)
                .expect("airport classes checked at construction")
        };
        DonorGeo {
            medium_airport_miles: nearest(AirportClass::Medium),
            large_airport_miles: nearest(AirportClass::Large),
        }
    }

    fn window_offer_counts(&self, center: usize, as_of: Timestamp) -> WindowOfferCounts {
        let s = &self.centers[center];
        let start = HistoryWindow::TWO_YEARS.start(as_of);
        let count = |times: &[Timestamp]| {
            (times.partition_point(|&t| t < as_of) - times.partition_point(|&t| t < start)) as u32
        };
        WindowOfferCounts {
            received: count(&s.offer_times),
            accepted: count(&s.accept_times),
        }
    }

    /// Writes the canonical feature row for `donor` offered to `center` at
    /// `offer_time` into `out`, which must have the layout's length.
    pub fn fill(
        &self,
        donor: &Donor,
        geo: &DonorGeo,
        center: usize,
        offer_time: Timestamp,
        out: &mut [f64],
    ) -> Result<()> {
        let l = layout();
        if out.len() != l.len() {
            return Err(Error::Precondition(format!(
                "feature buffer has {} slots, layout needs {}",
                out.len(),
                l.len()
            )));
        }
        let clamp = donor
            .clamp_time
            .ok_or_else(|| Error::Precondition(format!("donor {} has no clamp time", donor.donor_id)))?;
        let s = &self.centers[center];
        let cit = compute_cit(clamp, offer_time);
        out.fill(0.0);

        out[col::DISTANCE] = haversine_miles(donor.hospital_location, s.location);
        out[col::CIT] = cit as f64;
        out[col::KDRI] = donor.kdri;
        out[col::AGE] = donor.age;
        out[col::HEIGHT] = donor.height_cm;
        out[col::WEIGHT] = donor.weight_kg;
        out[col::CREATININE] = donor.creatinine;
        out[col::STATE_GDP] = s.state_gdp_per_capita;
        out[col::BMI] = donor.bmi;
        out[col::BUN] = donor.blood_urea_nitrogen;
        out[col::DEATH_MECHANISM] = donor.death_mechanism_code as f64;
        out[col::GLOMERULI] = donor.glomeruli_count as f64;
        out[col::CENTER_MEDIUM_AIRPORT] = s.medium_airport_miles;
        out[col::CENTER_LARGE_AIRPORT] = s.large_airport_miles;
        out[col::PATIENT_COUNT] = s.patient_count;
        out[col::DONOR_MEDIUM_AIRPORT] = geo.medium_airport_miles;
        out[col::DONOR_LARGE_AIRPORT] = geo.large_airport_miles;

        let starts = [1u8, 2, 3].map(|y| HistoryWindow::years(y).expect("valid window").start(offer_time));
        let within = |t: Timestamp| starts.map(|st| t >= st);
        for r in &s.history[window_range(&s.history, starts[2], offer_time)] {
            let inside = within(r.accept_time);
            for (w, &ok) in inside.iter().enumerate() {
                if ok {
                    if r.cit_minutes > cit {
                        out[col::HIGHER_CIT_1Y + w] += 1.0;
                    }
                    if r.kdri > donor.kdri {
                        out[col::HIGHER_KDRI_1Y + w] += 1.0;
                    }
                }
            }
            if inside[1] {
                let mut bump = |c: usize, hit: bool| {
                    if hit {
                        out[c] += 1.0;
                    }
                };
                bump(col::OLDER_2Y, r.donor_age > donor.age);
                bump(col::HIGHER_CREATININE_2Y, r.creatinine > donor.creatinine);
                bump(col::DIABETES_2Y, r.diabetes_flag);
                bump(col::DRUG_2Y, r.drug_flag);
                bump(col::DCD_2Y, r.dcd_flag);
                bump(col::KAP_2Y, kap_qualifies(r, donor));
            }
        }

        let rates = center_rate_stats(
            &s.history,
            offer_time,
            self.window_offer_counts(center, offer_time),
            self.means,
        );
        out[col::ACCEPTANCE_RATE] = rates.acceptance_rate;
        out[col::AVG_ACCEPTED_KDRI] = rates.avg_accepted_kdri;
        out[col::AVG_ACCEPTED_AGE] = rates.avg_accepted_age;

        for b in &l.donor_blocks {
            out[b.column((b.arm)(donor))] = 1.0;
        }
        let tod = time_of_day_bucket(offer_time, self.config.utc_offset_minutes);
        out[l.time_of_day.column(tod.index())] = 1.0;
        Ok(())
    }

    pub fn feature_vector(&self, donor: &Donor, center: usize, offer_time: Timestamp) -> Result<FeatureVector> {
        let l = layout();
        let mut values = vec![0.0; l.len()];
        self.fill(donor, &self.donor_geo(donor), center, offer_time, &mut values)?;
        Ok(FeatureVector {
            names: l.names.clone(),
            values,
        })
    }
}

/// Builds the canonical vector for one offer against a prepared context.
pub fn build_feature_vector(
    donor: &Donor,
    center: &CenterId,
    offer_time: Timestamp,
    ctx: &FeatureContext,
) -> Result<FeatureVector> {
    ctx.feature_vector(donor, ctx.require_center(center)?, offer_time)
}
