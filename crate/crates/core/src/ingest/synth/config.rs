//! Generator configuration, its defaults and validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::truth::Term;
use crate::domain::*;
use crate::error::{Error, Result};

/// Target mean and standard deviation of a continuous marginal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_centers: usize,
    pub n_donors: usize,
    pub seed: u64,
    /// Share of offers that are acceptances before any censoring.
    pub target_uncensored_accept_share: f64,
    pub mean_inter_offer_delay_minutes: f64,
    /// Centers offered a kidney before it is declared unused.
    pub max_list_length: usize,
    /// First clamp time of the study window.
    pub study_start: Timestamp,
    pub study_days: u32,
    /// Fixed zone for time-of-day buckets.
    pub utc_offset_minutes: i32,
    /// Seed-history acceptances per center-year at average aggressiveness.
    pub background_accepts_per_year: f64,
    /// Spread of the centers' latent log-acceptance-volume.
    pub center_aggressiveness_sd: f64,
    /// Noise added to the distance-based offer priority, in miles.
    pub priority_noise_miles: f64,
    /// Per-block category shares, keyed by field then label. Blocks given
    /// here replace the built-in block of the same name.
    pub categorical_marginals: BTreeMap<String, BTreeMap<String, f64>>,
    /// Continuous targets keyed by field. Entries replace built-in ones.
    pub continuous_marginals: BTreeMap<String, MeanSd>,
    /// Ground-truth logistic weights keyed by term. Entries replace
    /// built-in ones; set a weight to 0 to disable a term.
    pub acceptance_model_coefficients: BTreeMap<String, f64>,
}

const CATEGORICAL_DEFAULTS: &[(&str, &[(&str, f64)])] = &[
    (
        "ethnicity",
        &[("White", 69.0), ("Black", 16.0), ("Hispanic", 11.0), ("Other", 4.0)],
    ),
    ("gender", &[("M", 58.0), ("F", 42.0)]),
    ("blood_type", &[("O", 48.0), ("A", 39.0), ("B", 11.0), ("AB", 2.0)]),
    (
        "cause_of_death",
        &[
            ("CVD_Stroke", 45.0),
            ("Anoxia", 41.0),
            ("HeadTrauma", 11.0),
            ("Other", 3.0),
        ],
    ),
    (
        "diabetes_history",
        &[
            ("No", 73.0),
            ("Yes0to5", 10.0),
            ("Yes6to10", 6.0),
            ("YesOver10", 7.0),
            ("YesUnknownDuration", 2.0),
            ("Unsure", 2.0),
        ],
    ),
    ("insulin_dependent", &[("No", 52.0), ("Yes", 36.0), ("Unknown", 12.0)]),
    ("hypertension", &[("No", 28.0), ("Yes", 70.0), ("Other", 2.0)]),
    ("cancer_history", &[("No", 92.0), ("Yes", 7.0), ("Other", 2.0)]),
    ("cmv", &[("Positive", 62.0), ("Negative", 37.0)]),
    (
        "hbv_surface_antigen",
        &[("Positive", 0.0), ("Negative", 100.0), ("Other", 0.0)],
    ),
    (
        "hbv_core_antibody",
        &[("Positive", 6.0), ("Negative", 94.0), ("Other", 0.0)],
    ),
    ("hcv_antibody", &[("Positive", 5.0), ("Negative", 95.0), ("Other", 0.0)]),
    ("hcv_nat", &[("Positive", 3.0), ("Negative", 97.0), ("Other", 0.0)]),
    ("tattoos", &[("No", 69.0), ("Yes", 31.0), ("Other", 0.0)]),
    ("dcd", &[("No", 91.0), ("Yes", 9.0), ("Other", 0.0)]),
    ("smoking", &[("No", 60.0), ("Yes", 37.0), ("Other", 3.0)]),
    ("mi_history", &[("No", 88.0), ("Yes", 10.0), ("Other", 3.0)]),
    ("cocaine_use", &[("No", 79.0), ("Yes", 18.0), ("Other", 2.0)]),
    ("iv_drug_use", &[("No", 93.0), ("Yes", 5.0), ("Other", 2.0)]),
    ("other_drug_use", &[("No", 63.0), ("Yes", 35.0), ("Other", 2.0)]),
    ("insulin_use", &[("No", 55.0), ("Yes", 45.0), ("Other", 0.0)]),
    ("cdc_risk_hiv", &[("No", 87.0), ("Yes", 13.0), ("Other", 0.0)]),
    ("urine_protein", &[("No", 42.0), ("Yes", 57.0), ("Other", 1.0)]),
    ("antihypertensive_use", &[("No", 72.0), ("Yes", 28.0), ("Other", 0.0)]),
    ("arginine_use", &[("No", 55.0), ("Yes", 45.0), ("Other", 0.0)]),
    ("coronary_angiography", &[("No", 85.0), ("Yes", 15.0), ("Other", 0.0)]),
    ("legally_brain_dead", &[("No", 34.0), ("Yes", 66.0), ("Other", 0.0)]),
    (
        "interstitial_fibrosis",
        &[("Occasional", 32.0), ("Some", 27.0), ("Most", 24.0), ("Other", 17.0)],
    ),
    (
        "time_of_day",
        &[
            ("LateNight", 23.0),
            ("EarlyMorning", 16.0),
            ("Morning", 16.0),
            ("Noon", 16.0),
            ("Eve", 16.0),
            ("Night", 14.0),
        ],
    ),
];

const CONTINUOUS_DEFAULTS: &[(&str, f64, f64)] = &[
    ("kdri", 1.82, 0.10),
    ("age", 55.57, 8.36),
    ("height_cm", 169.15, 12.97),
    ("weight_kg", 88.56, 25.21),
    ("creatinine", 1.79, 1.44),
    ("bmi", 30.75, 7.80),
    ("blood_urea_nitrogen", 30.95, 20.74),
    ("death_mechanism_code", 22.31, 116.43),
    ("glomeruli_count", 59.87, 37.19),
    ("state_gdp_per_capita", 81_012.87, 24_054.53),
    ("patient_count", 1_194.74, 844.37),
];

const COEFFICIENT_DEFAULTS: &[(&str, f64)] = &[
    ("distance_donor_to_center_miles", -0.0002),
    ("distance_over_500_per_1000mi", -0.3),
    ("cit_hours", -0.01),
    ("kdri_gap_over_0_6", -4.0),
    ("log1p_higher_kdri_acceptances_2y", 0.2),
    ("log1p_kap_eligible_acceptances_2y", 0.8),
    ("center_acceptance_rate", 40.0),
    ("log_patient_count_over_1000", 0.8),
    ("hcv_antibody=Positive", 1.2),
    ("donor_creatinine", -0.2),
    ("time_of_day=LateNight", -0.3),
    ("time_of_day=Night", -0.3),
];

/// Fields whose categorical marginal the generator can sample, with labels.
pub fn categorical_fields() -> Vec<(&'static str, Vec<&'static str>)> {
    fn labels<C: Categorical>() -> Vec<&'static str> {
        C::ALL.iter().map(|c| c.label()).collect()
    }
    vec![
        ("ethnicity", labels::<Ethnicity>()),
        ("gender", labels::<Gender>()),
        ("blood_type", labels::<BloodType>()),
        ("cause_of_death", labels::<CauseOfDeath>()),
        ("diabetes_history", labels::<DiabetesHistory>()),
        ("insulin_dependent", labels::<InsulinDependent>()),
        ("hypertension", labels::<TriState>()),
        ("cancer_history", labels::<TriState>()),
        ("cmv", labels::<Cmv>()),
        ("hbv_surface_antigen", labels::<Serology>()),
        ("hbv_core_antibody", labels::<Serology>()),
        ("hcv_antibody", labels::<Serology>()),
        ("hcv_nat", labels::<Serology>()),
        ("tattoos", labels::<TriState>()),
        ("dcd", labels::<TriState>()),
        ("smoking", labels::<TriState>()),
        ("mi_history", labels::<TriState>()),
        ("cocaine_use", labels::<TriState>()),
        ("iv_drug_use", labels::<TriState>()),
        ("other_drug_use", labels::<TriState>()),
        ("insulin_use", labels::<TriState>()),
        ("cdc_risk_hiv", labels::<TriState>()),
        ("urine_protein", labels::<TriState>()),
        ("antihypertensive_use", labels::<TriState>()),
        ("arginine_use", labels::<TriState>()),
        ("coronary_angiography", labels::<TriState>()),
        ("legally_brain_dead", labels::<TriState>()),
        ("interstitial_fibrosis", labels::<Fibrosis>()),
        ("time_of_day", labels::<TimeOfDay>()),
    ]
}

pub fn continuous_fields() -> Vec<&'static str> {
    CONTINUOUS_DEFAULTS.iter().map(|(f, _, _)| *f).collect()
}

/// Fields sampled per center rather than per donor.
pub const CENTER_FIELDS: &[&str] = &["state_gdp_per_capita", "patient_count"];

fn default_categoricals() -> BTreeMap<String, BTreeMap<String, f64>> {
    CATEGORICAL_DEFAULTS
        .iter()
        .map(|(field, shares)| {
            let total: f64 = shares.iter().map(|(_, p)| p).sum();
            let block = shares.iter().map(|(l, p)| (l.to_string(), p / total)).collect();
            (field.to_string(), block)
        })
        .collect()
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_centers: 120,
            n_donors: 2000,
            seed: 1,
            target_uncensored_accept_share: 0.03,
            mean_inter_offer_delay_minutes: 84.0,
            max_list_length: 40,
            study_start: Timestamp::from_ymd_hm(2019, 1, 1, 0, 0).expect("valid date"),
            study_days: 730,
            utc_offset_minutes: 0,
            background_accepts_per_year: 40.0,
            center_aggressiveness_sd: 0.6,
            priority_noise_miles: 400.0,
            categorical_marginals: default_categoricals(),
            continuous_marginals: CONTINUOUS_DEFAULTS
                .iter()
                .map(|&(f, mean, sd)| (f.to_string(), MeanSd { mean, sd }))
                .collect(),
            acceptance_model_coefficients: COEFFICIENT_DEFAULTS.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

/// The key (or table header) on the line containing byte `pos`.
pub(crate) fn key_at(text: &str, pos: usize) -> String {
    let start = text[..pos.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("").trim();
    let line = line.trim_start_matches('[').trim_end_matches(']');
    line.split('=').next().unwrap_or("").trim().to_string()
}

impl GeneratorConfig {
    /// Parses TOML, fills unspecified marginal blocks and coefficients from
    /// the built-in defaults, and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GeneratorConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| key_at(text, s.start)).unwrap_or_default();
            Error::config(field, e.message().trim().to_string())
        })?;
        cfg.resolved()
    }

    /// Merges built-in defaults under the configured blocks and validates.
    pub fn resolved(mut self) -> Result<Self> {
        let d = GeneratorConfig::default();
        for (k, v) in d.categorical_marginals {
            self.categorical_marginals.entry(k).or_insert(v);
        }
        for (k, v) in d.continuous_marginals {
            self.continuous_marginals.entry(k).or_insert(v);
        }
        for (k, v) in d.acceptance_model_coefficients {
            self.acceptance_model_coefficients.entry(k).or_insert(v);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_centers == 0 {
            return Err(Error::config("n_centers", "must be at least 1"));
        }
        if self.n_donors == 0 {
            return Err(Error::config("n_donors", "must be at least 1"));
        }
        let t = self.target_uncensored_accept_share;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::config(
                "target_uncensored_accept_share",
                format!("must lie in (0, 1), got {t}"),
            ));
        }
        if !(self.mean_inter_offer_delay_minutes > 0.0 && self.mean_inter_offer_delay_minutes.is_finite()) {
            return Err(Error::config("mean_inter_offer_delay_minutes", "must be positive"));
        }
        if self.max_list_length == 0 {
            return Err(Error::config("max_list_length", "must be at least 1"));
        }
        if self.study_days == 0 {
            return Err(Error::config("study_days", "must be at least 1"));
        }
        for (field, v) in [
            ("background_accepts_per_year", self.background_accepts_per_year),
            ("center_aggressiveness_sd", self.center_aggressiveness_sd),
            ("priority_noise_miles", self.priority_noise_miles),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and non-negative"));
            }
        }

        let fields = categorical_fields();
        for (field, block) in &self.categorical_marginals {
            let path = format!("categorical_marginals.{field}");
            let labels = &fields
                .iter()
                .find(|(f, _)| f == field)
                .ok_or_else(|| Error::config(&path, "unknown categorical field"))?
                .1;
            let mut total = 0.0;
            for (label, &p) in block {
                if !labels.contains(&label.as_str()) {
                    return Err(Error::config(
                        format!("{path}.{label}"),
                        format!("unknown category; expected one of {labels:?}"),
                    ));
                }
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::config(
                        format!("{path}.{label}"),
                        "probability must be finite and non-negative",
                    ));
                }
                total += p;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    &path,
                    format!("probabilities sum to {total}, expected 1"),
                ));
            }
        }
        let known = continuous_fields();
        for (field, ms) in &self.continuous_marginals {
            let path = format!("continuous_marginals.{field}");
            if !known.contains(&field.as_str()) {
                return Err(Error::config(&path, "unknown continuous field"));
            }
            if !(ms.sd >= 0.0 && ms.sd.is_finite() && ms.mean.is_finite()) {
                return Err(Error::config(
                    &path,
                    "mean must be finite and sd finite and non-negative",
                ));
            }
            if ms.mean <= 0.0 && field != "death_mechanism_code" {
                return Err(Error::config(&path, "mean must be positive"));
            }
        }
        for (name, &w) in &self.acceptance_model_coefficients {
            let path = format!("acceptance_model_coefficients.{name}");
            Term::parse(name).ok_or_else(|| Error::config(&path, "unknown term"))?;
            if !w.is_finite() {
                return Err(Error::config(&path, "weight must be finite"));
            }
        }
        Ok(())
    }

    /// Share table of one categorical block, in the enum's label order.
    pub fn shares(&self, field: &str) -> Vec<f64> {
        let labels = categorical_fields()
            .into_iter()
            .find(|(f, _)| *f == field)
            .map(|(_, l)| l)
            .unwrap_or_default();
        let block = self.categorical_marginals.get(field);
        labels
            .iter()
            .map(|l| block.and_then(|b| b.get(*l)).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn moments(&self, field: &str) -> MeanSd {
        self.continuous_marginals[field]
    }
}
