//! Canonical feature names and the position of every column.

use std::sync::{Arc, OnceLock};

use crate::domain::*;

/// Continuous features, in canonical order.
pub const CONTINUOUS: &[&str] = &[
    "distance_donor_to_center_miles",
    "cit_minutes",
    "kdri",
    "donor_age_years",
    "donor_height_cm",
    "donor_weight_kg",
    "donor_creatinine",
    "center_state_gdp_per_capita",
    "donor_bmi",
    "donor_bun",
    "donor_death_mechanism",
    "glomeruli_count",
    "higher_cit_acceptances_1y",
    "higher_cit_acceptances_2y",
    "higher_cit_acceptances_3y",
    "higher_kdri_acceptances_1y",
    "higher_kdri_acceptances_2y",
    "higher_kdri_acceptances_3y",
    "center_dist_medium_airport_miles",
    "center_dist_large_airport_miles",
    "center_patient_count",
    "donor_dist_medium_airport_miles",
    "donor_dist_large_airport_miles",
    "center_acceptance_rate",
    "center_avg_accepted_kdri",
    "center_avg_accepted_age",
    "older_acceptances_2y",
    "higher_creatinine_acceptances_2y",
    "diabetes_related_acceptances_2y",
    "drug_related_acceptances_2y",
    "dcd_acceptances_2y",
    "kap_eligible_acceptances_2y",
];

/// Column indices of the continuous block.
pub mod col {
    pub const DISTANCE: usize = 0;
    pub const CIT: usize = 1;
    pub const KDRI: usize = 2;
    pub const AGE: usize = 3;
    pub const HEIGHT: usize = 4;
    pub const WEIGHT: usize = 5;
    pub const CREATININE: usize = 6;
    pub const STATE_GDP: usize = 7;
    pub const BMI: usize = 8;
    pub const BUN: usize = 9;
    pub const DEATH_MECHANISM: usize = 10;
    pub const GLOMERULI: usize = 11;
    pub const HIGHER_CIT_1Y: usize = 12;
    pub const HIGHER_KDRI_1Y: usize = 15;
    pub const CENTER_MEDIUM_AIRPORT: usize = 18;
    pub const CENTER_LARGE_AIRPORT: usize = 19;
    pub const PATIENT_COUNT: usize = 20;
    pub const DONOR_MEDIUM_AIRPORT: usize = 21;
    pub const DONOR_LARGE_AIRPORT: usize = 22;
    pub const ACCEPTANCE_RATE: usize = 23;
    pub const AVG_ACCEPTED_KDRI: usize = 24;
    pub const AVG_ACCEPTED_AGE: usize = 25;
    pub const OLDER_2Y: usize = 26;
    pub const HIGHER_CREATININE_2Y: usize = 27;
    pub const DIABETES_2Y: usize = 28;
    pub const DRUG_2Y: usize = 29;
    pub const DCD_2Y: usize = 30;
    pub const KAP_2Y: usize = 31;
}

/// One one-hot block: `field=label` columns starting at `offset`.
#[derive(Clone, Debug)]
pub struct CategoricalBlock {
    pub field: &'static str,
    pub labels: Vec<&'static str>,
    pub offset: usize,
    pub(crate) arm: fn(&Donor) -> usize,
}

impl CategoricalBlock {
    pub fn column(&self, arm: usize) -> usize {
        self.offset + arm
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.labels.len()
    }
}

/// The full column layout. Obtain it with [`layout`].
#[derive(Debug)]
pub struct FeatureLayout {
    pub names: Arc<[String]>,
    /// Donor categoricals, in column order.
    pub donor_blocks: Vec<CategoricalBlock>,
    /// The offer time-of-day block, which comes last.
    pub time_of_day: CategoricalBlock,
}

impl FeatureLayout {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &CategoricalBlock> {
        self.donor_blocks.iter().chain(std::iter::once(&self.time_of_day))
    }
}

fn block<C: Categorical>(field: &'static str, arm: fn(&Donor) -> usize) -> CategoricalBlock {
    CategoricalBlock {
        field,
        labels: C::ALL.iter().map(|c| c.label()).collect(),
        offset: 0,
        arm,
    }
}

fn build() -> FeatureLayout {
    let mut donor_blocks = vec![
        block::<Ethnicity>("ethnicity", |d| d.ethnicity.index()),
        block::<Gender>("gender", |d| d.gender.index()),
        block::<BloodType>("blood_type", |d| d.blood_type.index()),
        block::<CauseOfDeath>("cause_of_death", |d| d.cause_of_death.index()),
        block::<DiabetesHistory>("diabetes_history", |d| d.diabetes_history.index()),
        block::<InsulinDependent>("insulin_dependent", |d| d.insulin_dependent.index()),
        block::<TriState>("hypertension", |d| d.hypertension.index()),
        block::<TriState>("cancer_history", |d| d.cancer_history.index()),
        block::<Cmv>("cmv", |d| d.cmv.index()),
        block::<Serology>("hbv_surface_antigen", |d| d.hbv_surface_antigen.index()),
        block::<Serology>("hbv_core_antibody", |d| d.hbv_core_antibody.index()),
        block::<Serology>("hcv_antibody", |d| d.hcv_antibody.index()),
        block::<Serology>("hcv_nat", |d| d.hcv_nat.index()),
        block::<TriState>("tattoos", |d| d.tattoos.index()),
        block::<TriState>("dcd", |d| d.dcd.index()),
        block::<TriState>("smoking", |d| d.smoking.index()),
        block::<TriState>("mi_history", |d| d.mi_history.index()),
        block::<TriState>("cocaine_use", |d| d.cocaine_use.index()),
        block::<TriState>("iv_drug_use", |d| d.iv_drug_use.index()),
        block::<TriState>("other_drug_use", |d| d.other_drug_use.index()),
        block::<TriState>("insulin_use", |d| d.insulin_use.index()),
        block::<TriState>("cdc_risk_hiv", |d| d.cdc_risk_hiv.index()),
        block::<TriState>("urine_protein", |d| d.urine_protein.index()),
        block::<TriState>("antihypertensive_use", |d| d.antihypertensive_use.index()),
        block::<TriState>("arginine_use", |d| d.arginine_use.index()),
        block::<TriState>("coronary_angiography", |d| d.coronary_angiography.index()),
        block::<TriState>("legally_brain_dead", |d| d.legally_brain_dead.index()),
        block::<Fibrosis>("interstitial_fibrosis", |d| d.interstitial_fibrosis.index()),
    ];
    let mut time_of_day = block::<TimeOfDay>("time_of_day", |_| 0);

    let mut names: Vec<String> = CONTINUOUS.iter().map(|s| s.to_string()).collect();
    for b in donor_blocks.iter_mut().chain(std::iter::once(&mut time_of_day)) {
        b.offset = names.len();
        names.extend(b.labels.iter().map(|l| format!("{}={}", b.field, l)));
    }
    FeatureLayout {
        names: names.into(),
        donor_blocks,
        time_of_day,
    }
}

/// The process-wide canonical layout.
pub fn layout() -> &'static FeatureLayout {
    static LAYOUT: OnceLock<FeatureLayout> = OnceLock::new();
    LAYOUT.get_or_init(build)
}

pub fn canonical_names() -> Arc<[String]> {
    layout().names.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_blocks_tile_the_tail() {
        let l = layout();
        let mut seen = std::collections::HashSet::new();
        assert!(l.names.iter().all(|n| seen.insert(n.clone())));
        let mut next = CONTINUOUS.len();
        for b in l.blocks() {
            assert_eq!(b.offset, next);
            next = b.range().end;
        }
        assert_eq!(next, l.len());
        assert_eq!(l.names[col::KAP_2Y], "kap_eligible_acceptances_2y");
        assert_eq!(l.names[col::HIGHER_KDRI_1Y + 1], "higher_kdri_acceptances_2y");
        assert_eq!(l.index_of("blood_type=AB"), Some(l.donor_blocks[2].offset + 3));
        assert_eq!(l.names.last().unwrap(), "time_of_day=Night");
    }
}
