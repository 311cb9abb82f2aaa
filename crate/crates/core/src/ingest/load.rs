use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use super::reduction::{assemble_match_runs, first_offer_reduction};
use super::schema::{read_rows, AirportRecord, CenterRecord, DonorRecord, HistoryRecord, RawOfferRow};
use super::{apply_exclusions, Dataset, ExclusionReport, Provenance};
use crate::domain::*;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetPaths {
    pub donors: PathBuf,
    pub centers: PathBuf,
    pub offers: PathBuf,
    pub airports: PathBuf,
    pub history: Option<PathBuf>,
}

impl DatasetPaths {
    /// The standard file names inside `dir`; history is used when present.
    pub fn in_dir(dir: &Path) -> Self {
        let history = dir.join(super::HISTORY_FILE);
        DatasetPaths {
            donors: dir.join(super::DONORS_FILE),
            centers: dir.join(super::CENTERS_FILE),
            offers: dir.join(super::OFFERS_FILE),
            airports: dir.join(super::AIRPORTS_FILE),
            history: history.exists().then_some(history),
        }
    }
}

fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    read_rows(file, &label)
}

fn schema(file: &Path, line: u64, column: &str, message: String) -> Error {
    Error::Schema {
        file: path_label(file),
        line,
        column: column.into(),
        message,
    }
}

fn path_label(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Loads, reduces and cleans a dataset from the CSV files.
pub fn load_dataset(paths: &DatasetPaths) -> Result<(Dataset, ExclusionReport)> {
    let mut donors = Vec::new();
    let mut seen = HashMap::new();
    for (line, rec) in read_file::<DonorRecord>(&paths.donors)? {
        let id = rec.donor_id.clone();
        let donor = rec
            .into_donor()
            .map_err(|(col, msg)| schema(&paths.donors, line, col, msg))?;
        if seen.insert(id.clone(), line).is_some() {
            return Err(schema(
                &paths.donors,
                line,
                "donor_id",
                format!("duplicate donor id {id}"),
            ));
        }
        donors.push(donor);
    }

    let mut centers = Vec::new();
    let mut center_ix = HashMap::new();
    for (line, rec) in read_file::<CenterRecord>(&paths.centers)? {
        let location =
            GeoPoint::new(rec.lat, rec.lon).map_err(|e| schema(&paths.centers, line, "lat", e.to_string()))?;
        if !rec.state_gdp_per_capita.is_finite() {
            return Err(schema(
                &paths.centers,
                line,
                "state_gdp_per_capita",
                "not finite".into(),
            ));
        }
        if center_ix.insert(rec.center_id.clone(), centers.len()).is_some() {
            return Err(schema(
                &paths.centers,
                line,
                "center_id",
                format!("duplicate center id {}", rec.center_id),
            ));
        }
        centers.push(Center {
            center_id: rec.center_id,
            location,
            patient_count: rec.patient_count,
            state_gdp_per_capita: rec.state_gdp_per_capita,
            history: Vec::new(),
        });
    }

    if let Some(path) = &paths.history {
        for (line, rec) in read_file::<HistoryRecord>(path)? {
            let &i = center_ix
                .get(&rec.center_id)
                .ok_or_else(|| schema(path, line, "center_id", format!("unknown center {}", rec.center_id)))?;
            if rec.cit_minutes < 0 {
                return Err(schema(path, line, "cit_minutes", "negative".into()));
            }
            centers[i].history.push(rec.record());
        }
        centers.iter_mut().for_each(Center::sort_history);
    }

    let mut airports = Vec::new();
    for (line, rec) in read_file::<AirportRecord>(&paths.airports)? {
        let location =
            GeoPoint::new(rec.lat, rec.lon).map_err(|e| schema(&paths.airports, line, "lat", e.to_string()))?;
        airports.push(Airport {
            location,
            class: rec.class,
        });
    }

    let rows: Vec<RawOfferRow> = read_file::<RawOfferRow>(&paths.offers)?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    let offers = first_offer_reduction(&rows).map_err(|e| match e {
        Error::Schema {
            line, column, message, ..
        } => schema(&paths.offers, line, &column, message),
        other => other,
    })?;

    let raw = Dataset {
        centers,
        donors,
        match_runs: assemble_match_runs(offers),
        airports: AirportIndex { airports },
        provenance: Provenance::Ingested,
    };
    Ok(apply_exclusions(raw))
}
