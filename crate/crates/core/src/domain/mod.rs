//! Shared domain types: donors, centers, offers, match runs.

mod categories;
mod time;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use categories::{
    AirportClass, BloodType, Categorical, CauseOfDeath, Cmv, DiabetesHistory, Ethnicity, Fibrosis, Gender,
    InsulinDependent, Response, Serology, TimeOfDay, TriState,
};
pub use time::{Timestamp, TimestampParseError, MINUTES_PER_DAY, MINUTES_PER_YEAR};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(DonorId);
string_id!(CenterId);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(Error::Precondition(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
            return Err(Error::Precondition(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// One deceased donor. KDRI and KDPI are inputs, not computed here.
#[derive(Clone, Debug, PartialEq)]
pub struct Donor {
    pub donor_id: DonorId,
    /// `None` only for raw records awaiting exclusion.
    pub clamp_time: Option<Timestamp>,
    pub kdri: f64,
    pub kdpi: f64,
    pub age: f64,
    pub height_cm: f64,
    pub weight_kg: f64,
    pub bmi: f64,
    pub creatinine: f64,
    pub peak_creatinine: f64,
    pub blood_urea_nitrogen: f64,
    pub glomeruli_count: u32,
    pub blood_type: BloodType,
    pub ethnicity: Ethnicity,
    pub gender: Gender,
    pub cause_of_death: CauseOfDeath,
    pub death_mechanism_code: i32,
    pub diabetes_history: DiabetesHistory,
    pub insulin_dependent: InsulinDependent,
    pub hypertension: TriState,
    pub cancer_history: TriState,
    pub cmv: Cmv,
    pub hbv_surface_antigen: Serology,
    pub hbv_core_antibody: Serology,
    pub hcv_antibody: Serology,
    pub hcv_nat: Serology,
    pub tattoos: TriState,
    pub dcd: TriState,
    pub smoking: TriState,
    pub mi_history: TriState,
    pub cocaine_use: TriState,
    pub iv_drug_use: TriState,
    pub other_drug_use: TriState,
    pub insulin_use: TriState,
    pub cdc_risk_hiv: TriState,
    pub urine_protein: TriState,
    pub antihypertensive_use: TriState,
    pub arginine_use: TriState,
    pub coronary_angiography: TriState,
    pub legally_brain_dead: TriState,
    pub interstitial_fibrosis: Fibrosis,
    pub hospital_location: GeoPoint,
}

impl Donor {
    /// Checks the scalar invariants; returns the offending field name.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let checks: [(&'static str, f64, bool); 9] = [
            ("kdri", self.kdri, self.kdri > 0.0),
            ("kdpi", self.kdpi, (0.0..=100.0).contains(&self.kdpi)),
            ("age", self.age, self.age >= 0.0),
            ("height_cm", self.height_cm, true),
            ("weight_kg", self.weight_kg, true),
            ("bmi", self.bmi, true),
            ("creatinine", self.creatinine, self.creatinine >= 0.0),
            ("peak_creatinine", self.peak_creatinine, self.peak_creatinine >= 0.0),
            ("blood_urea_nitrogen", self.blood_urea_nitrogen, true),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err((name, format!("value {value} violates its domain")));
            }
        }
        Ok(())
    }

    pub fn any_drug_use(&self) -> bool {
        self.cocaine_use.is_yes() || self.iv_drug_use.is_yes() || self.other_drug_use.is_yes()
    }
}

/// A kidney previously accepted by a center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedKidneyRecord {
    pub accept_time: Timestamp,
    pub kdri: f64,
    pub kdpi: f64,
    pub donor_age: f64,
    pub cit_minutes: i64,
    pub creatinine: f64,
    pub diabetes_flag: bool,
    pub drug_flag: bool,
    pub dcd_flag: bool,
    pub iv_drug_flag: bool,
    pub peak_creatinine: f64,
}

impl AcceptedKidneyRecord {
    /// The record a center's history gains when it accepts `donor` at `accept_time`.
    pub fn from_acceptance(donor: &Donor, accept_time: Timestamp, cit_minutes: i64) -> Self {
        AcceptedKidneyRecord {
            accept_time,
            kdri: donor.kdri,
            kdpi: donor.kdpi,
            donor_age: donor.age,
            cit_minutes,
            creatinine: donor.creatinine,
            diabetes_flag: donor.diabetes_history.is_yes(),
            drug_flag: donor.any_drug_use(),
            dcd_flag: donor.dcd.is_yes(),
            iv_drug_flag: donor.iv_drug_use.is_yes(),
            peak_creatinine: donor.peak_creatinine,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Center {
    pub center_id: CenterId,
    pub location: GeoPoint,
    pub patient_count: u32,
    pub state_gdp_per_capita: f64,
    /// Externally supplied acceptance history, sorted by `accept_time`.
    pub history: Vec<AcceptedKidneyRecord>,
}

impl Center {
    pub fn sort_history(&mut self) {
        self.history.sort_by_key(|r| r.accept_time);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Offer {
    pub donor_id: DonorId,
    pub center_id: CenterId,
    pub offer_time: Timestamp,
    pub response: Response,
    /// Patients at the center who received this organ's offer; at least 1.
    pub patient_offer_count: u32,
}

/// The ordered offer sequence of one kidney.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchRun {
    pub donor_id: DonorId,
    /// 1-based kidney number within the donor.
    pub kidney: u8,
    pub offers: Vec<Offer>,
}

impl MatchRun {
    pub fn len(&self) -> usize {
        self.offers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offers.is_empty()
    }

    /// 0-based index of the (first) accepted offer.
    pub fn accept_index(&self) -> Option<usize> {
        self.offers.iter().position(|o| o.response.is_accept())
    }

    pub fn accept_count(&self) -> usize {
        self.offers.iter().filter(|o| o.response.is_accept()).count()
    }

    pub fn is_accepted(&self) -> bool {
        self.accept_index().is_some()
    }

    /// Stable key `donor_id#kidney`.
    pub fn kidney_key(&self) -> String {
        format!("{}#{}", self.donor_id, self.kidney)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Airport {
    pub location: GeoPoint,
    pub class: AirportClass,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AirportIndex {
    pub airports: Vec<Airport>,
}

impl AirportIndex {
    pub fn of_class(&self, class: AirportClass) -> impl Iterator<Item = &Airport> + '_ {
        self.airports.iter().filter(move |a| a.class == class)
    }
}

/// One broken [`MatchRun`] rule, pinned to an offer index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "rule")]
pub enum RunViolation {
    /// Offer time decreased relative to the previous offer.
    OutOfOrder {
        index: usize,
    },
    /// A second accepted offer in the same kidney's run.
    MultipleAccepts {
        index: usize,
    },
    DuplicateCenter {
        index: usize,
    },
    ForeignDonor {
        index: usize,
    },
    ZeroPatientOffers {
        index: usize,
    },
}

impl RunViolation {
    pub fn index(&self) -> usize {
        match *self {
            RunViolation::OutOfOrder { index }
            | RunViolation::MultipleAccepts { index }
            | RunViolation::DuplicateCenter { index }
            | RunViolation::ForeignDonor { index }
            | RunViolation::ZeroPatientOffers { index } => index,
        }
    }
}

/// Lists every violated [`MatchRun`] invariant. Equal timestamps are allowed
/// (ties keep their recorded order); a decrease is a violation.
pub fn validate_match_run(run: &MatchRun) -> Vec<RunViolation> {
    let mut out = Vec::new();
    let mut seen_accept = false;
    let mut centers = HashSet::new();
    for (i, offer) in run.offers.iter().enumerate() {
        if offer.donor_id != run.donor_id {
            out.push(RunViolation::ForeignDonor { index: i });
        }
        if i > 0 && offer.offer_time < run.offers[i - 1].offer_time {
            out.push(RunViolation::OutOfOrder { index: i });
        }
        if offer.response.is_accept() {
            if seen_accept {
                out.push(RunViolation::MultipleAccepts { index: i });
            }
            seen_accept = true;
        }
        if !centers.insert(&offer.center_id) {
            out.push(RunViolation::DuplicateCenter { index: i });
        }
        if offer.patient_offer_count == 0 {
            out.push(RunViolation::ZeroPatientOffers { index: i });
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::offer;
    use super::*;

    fn run(offers: Vec<Offer>) -> MatchRun {
        MatchRun {
            donor_id: DonorId::from("d1"),
            kidney: 1,
            offers,
        }
    }

    #[test]
    fn well_formed_run_has_no_violations() {
        let r = run(vec![
            offer("d1", "c1", 10, false),
            offer("d1", "c2", 20, false),
            offer("d1", "c3", 30, true),
        ]);
        assert!(validate_match_run(&r).is_empty());
    }

    #[test]
    fn two_accepts_flagged() {
        let r = run(vec![offer("d1", "c1", 10, true), offer("d1", "c2", 20, true)]);
        assert_eq!(validate_match_run(&r), vec![RunViolation::MultipleAccepts { index: 1 }]);
    }

    #[test]
    fn swapped_timestamps_flag_the_later_index() {
        // times 10, 30, 20: offer 2 goes backwards
        let r = run(vec![
            offer("d1", "c1", 10, false),
            offer("d1", "c2", 30, false),
            offer("d1", "c3", 20, true),
        ]);
        assert_eq!(validate_match_run(&r), vec![RunViolation::OutOfOrder { index: 2 }]);
    }

    #[test]
    fn equal_timestamps_are_not_a_violation() {
        let r = run(vec![offer("d1", "c1", 10, false), offer("d1", "c2", 10, true)]);
        assert!(validate_match_run(&r).is_empty());
    }

    #[test]
    fn duplicate_center_foreign_donor_and_zero_count() {
        let mut bad = offer("d2", "c1", 20, false);
        bad.patient_offer_count = 0;
        let r = run(vec![offer("d1", "c1", 10, false), bad]);
        let v = validate_match_run(&r);
        assert!(v.contains(&RunViolation::ForeignDonor { index: 1 }));
        assert!(v.contains(&RunViolation::DuplicateCenter { index: 1 }));
        assert!(v.contains(&RunViolation::ZeroPatientOffers { index: 1 }));
    }

    #[test]
    fn geopoint_bounds() {
        assert!(GeoPoint::new(90.0, 180.0).is_ok());
        assert!(GeoPoint::new(90.1, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::NAN).is_err());
    }
}
