//! Datasets: loading real-format CSVs, exclusions, and synthetic generation.

mod exclusions;
mod load;
mod reduction;
pub mod schema;
pub mod synth;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use exclusions::{apply_exclusions, ExclusionReport};
pub use load::{load_dataset, DatasetPaths};
pub use reduction::{assemble_match_runs, expand_offers, first_offer_reduction};
pub use schema::RawOfferRow;

use crate::domain::*;
use crate::error::{Error, Result};
use schema::{write_rows, write_rows_with_header, AirportRecord, CenterRecord, DonorRecord, HistoryRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ingested,
    Synthetic { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub centers: Vec<Center>,
    pub donors: Vec<Donor>,
    pub match_runs: Vec<MatchRun>,
    pub airports: AirportIndex,
    pub provenance: Provenance,
}

/// Size summary: centers and donors that appear in some offer, and offers by
/// response.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub centers: usize,
    pub donors: usize,
    pub rejected_offers: usize,
    pub accepted_offers: usize,
}

impl DatasetCounts {
    pub fn of_runs(runs: &[MatchRun]) -> Self {
        let mut centers = HashSet::new();
        let mut donors = HashSet::new();
        let mut c = DatasetCounts::default();
        for r in runs {
            for o in &r.offers {
                donors.insert(&o.donor_id);
                centers.insert(&o.center_id);
                if o.response.is_accept() {
                    c.accepted_offers += 1;
                } else {
                    c.rejected_offers += 1;
                }
            }
        }
        c.centers = centers.len();
        c.donors = donors.len();
        c
    }

    pub fn offers(&self) -> usize {
        self.rejected_offers + self.accepted_offers
    }

    pub fn accept_share(&self) -> f64 {
        if self.offers() == 0 {
            0.0
        } else {
            self.accepted_offers as f64 / self.offers() as f64
        }
    }
}

/// File names used for a dataset on disk.
pub const DONORS_FILE: &str = "donors.csv";
pub const CENTERS_FILE: &str = "centers.csv";
pub const OFFERS_FILE: &str = "offers.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const AIRPORTS_FILE: &str = "airports.csv";

impl Dataset {
    pub fn donor_lookup(&self) -> HashMap<&DonorId, usize> {
        self.donors.iter().enumerate().map(|(i, d)| (&d.donor_id, i)).collect()
    }

    pub fn center_lookup(&self) -> HashMap<&CenterId, usize> {
        self.centers
            .iter()
            .enumerate()
            .map(|(i, c)| (&c.center_id, i))
            .collect()
    }

    pub fn counts(&self) -> DatasetCounts {
        DatasetCounts::of_runs(&self.match_runs)
    }

    /// Checks referential integrity, clamp presence and run invariants.
    pub fn validate(&self) -> Result<()> {
        let donors = self.donor_lookup();
        let centers = self.center_lookup();
        for (k, run) in self.match_runs.iter().enumerate() {
            let d = donors
                .get(&run.donor_id)
                .ok_or_else(|| Error::Precondition(format!("run {k} references unknown donor {}", run.donor_id)))?;
            if self.donors[*d].clamp_time.is_none() {
                return Err(Error::Precondition(format!(
                    "donor {} has a run but no clamp time",
                    run.donor_id
                )));
            }
            if let Some(o) = run.offers.iter().find(|o| !centers.contains_key(&o.center_id)) {
                return Err(Error::Precondition(format!(
                    "run {k} references unknown center {}",
                    o.center_id
                )));
            }
            if let Some(v) = validate_match_run(run).first() {
                return Err(Error::Precondition(format!("run {k} (donor {}): {v:?}", run.donor_id)));
            }
        }
        Ok(())
    }

    /// Keeps donors with `lo <= kdri <= hi` and their runs.
    pub fn filter_kdri(&self, lo: f64, hi: f64) -> Dataset {
        let keep: HashSet<&DonorId> = self
            .donors
            .iter()
            .filter(|d| d.kdri >= lo && d.kdri <= hi)
            .map(|d| &d.donor_id)
            .collect();
        Dataset {
            centers: self.centers.clone(),
            donors: self
                .donors
                .iter()
                .filter(|d| keep.contains(&d.donor_id))
                .cloned()
                .collect(),
            match_runs: self
                .match_runs
                .iter()
                .filter(|r| keep.contains(&r.donor_id))
                .cloned()
                .collect(),
            airports: self.airports.clone(),
            provenance: self.provenance,
        }
    }

    /// Same dataset with different runs.
    pub fn with_runs(&self, match_runs: Vec<MatchRun>) -> Dataset {
        Dataset {
            match_runs,
            ..self.clone()
        }
    }

    /// Serializes the dataset to the five CSV files, keyed by file name.
    pub fn to_csv_files(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let mut donors = Vec::new();
        write_rows(&mut donors, DONORS_FILE, self.donors.iter().map(DonorRecord::from))?;

        let mut centers = Vec::new();
        write_rows(
            &mut centers,
            CENTERS_FILE,
            self.centers.iter().map(|c| CenterRecord {
                center_id: c.center_id.clone(),
                lat: c.location.lat(),
                lon: c.location.lon(),
                patient_count: c.patient_count,
                state_gdp_per_capita: c.state_gdp_per_capita,
            }),
        )?;

        let offers: Vec<Offer> = self.match_runs.iter().flat_map(|r| r.offers.iter().cloned()).collect();
        let mut raw = Vec::new();
        write_rows_with_header(
            &mut raw,
            OFFERS_FILE,
            &["donor_id", "center_id", "patient_pseudo_id", "offer_time", "response"],
            &expand_offers(&offers),
        )?;

        let history: Vec<HistoryRecord> = self
            .centers
            .iter()
            .flat_map(|c| c.history.iter().map(|r| HistoryRecord::new(c.center_id.clone(), r)))
            .collect();
        let mut hist = Vec::new();
        write_rows_with_header(
            &mut hist,
            HISTORY_FILE,
            &[
                "center_id",
                "accept_time",
                "kdri",
                "kdpi",
                "donor_age",
                "cit_minutes",
                "creatinine",
                "diabetes_flag",
                "drug_flag",
                "dcd_flag",
                "iv_drug_flag",
                "peak_creatinine",
            ],
            &history,
        )?;

        let mut airports = Vec::new();
        write_rows(
            &mut airports,
            AIRPORTS_FILE,
            self.airports.airports.iter().map(|a| AirportRecord {
                lat: a.location.lat(),
                lon: a.location.lon(),
                class: a.class,
            }),
        )?;

        Ok(vec![
            (DONORS_FILE, donors),
            (CENTERS_FILE, centers),
            (OFFERS_FILE, raw),
            (HISTORY_FILE, hist),
            (AIRPORTS_FILE, airports),
        ])
    }

    /// Writes the CSV files into `dir` (created if needed).
    pub fn write_dir(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in self.to_csv_files()? {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}
