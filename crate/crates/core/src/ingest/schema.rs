//! Row types for the on-disk CSV files and their conversions.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::*;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DonorRecord {
    pub donor_id: DonorId,
    /// Empty when the clamp time is missing.
    pub clamp_time: String,
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
    pub hospital_lat: f64,
    pub hospital_lon: f64,
}

macro_rules! donor_fields {
    ($mac:ident) => {
        $mac!(
            donor_id,
            kdri,
            kdpi,
            age,
            height_cm,
            weight_kg,
            bmi,
            creatinine,
            peak_creatinine,
            blood_urea_nitrogen,
            glomeruli_count,
            blood_type,
            ethnicity,
            gender,
            cause_of_death,
            death_mechanism_code,
            diabetes_history,
            insulin_dependent,
            hypertension,
            cancer_history,
            cmv,
            hbv_surface_antigen,
            hbv_core_antibody,
            hcv_antibody,
            hcv_nat,
            tattoos,
            dcd,
            smoking,
            mi_history,
            cocaine_use,
            iv_drug_use,
            other_drug_use,
            insulin_use,
            cdc_risk_hiv,
            urine_protein,
            antihypertensive_use,
            arginine_use,
            coronary_angiography,
            legally_brain_dead,
            interstitial_fibrosis
        )
    };
}

impl From<&Donor> for DonorRecord {
    fn from(d: &Donor) -> Self {
        macro_rules! build {
            ($($f:ident),*) => {
                DonorRecord {
                    $($f: d.$f.clone(),)*
                    clamp_time: d.clamp_time.map(|t| t.to_iso8601()).unwrap_or_default(),
                    hospital_lat: d.hospital_location.lat(),
                    hospital_lon: d.hospital_location.lon(),
                }
            };
        }
        donor_fields!(build)
    }
}

impl DonorRecord {
    /// Converts to a [`Donor`], reporting the offending column on failure.
    pub fn into_donor(self) -> std::result::Result<Donor, (&'static str, String)> {
        let clamp_time = match self.clamp_time.trim() {
            "" => None,
            raw => Some(Timestamp::parse(raw).map_err(|e| ("clamp_time", e.to_string()))?),
        };
        let hospital_location =
            GeoPoint::new(self.hospital_lat, self.hospital_lon).map_err(|e| ("hospital_lat", e.to_string()))?;
        let d = self;
        macro_rules! build {
            ($($f:ident),*) => {
                Donor { $($f: d.$f,)* clamp_time, hospital_location }
            };
        }
        let donor = donor_fields!(build);
        donor.validate()?;
        Ok(donor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterRecord {
    pub center_id: CenterId,
    pub lat: f64,
    pub lon: f64,
    pub patient_count: u32,
    pub state_gdp_per_capita: f64,
}

/// One patient-level row of the offers file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawOfferRow {
    pub donor_id: DonorId,
    pub center_id: CenterId,
    pub patient_pseudo_id: String,
    pub offer_time: Timestamp,
    pub response: Response,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub center_id: CenterId,
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

impl HistoryRecord {
    pub fn new(center_id: CenterId, r: &AcceptedKidneyRecord) -> Self {
        HistoryRecord {
            center_id,
            accept_time: r.accept_time,
            kdri: r.kdri,
            kdpi: r.kdpi,
            donor_age: r.donor_age,
            cit_minutes: r.cit_minutes,
            creatinine: r.creatinine,
            diabetes_flag: r.diabetes_flag,
            drug_flag: r.drug_flag,
            dcd_flag: r.dcd_flag,
            iv_drug_flag: r.iv_drug_flag,
            peak_creatinine: r.peak_creatinine,
        }
    }

    pub fn record(&self) -> AcceptedKidneyRecord {
        AcceptedKidneyRecord {
            accept_time: self.accept_time,
            kdri: self.kdri,
            kdpi: self.kdpi,
            donor_age: self.donor_age,
            cit_minutes: self.cit_minutes,
            creatinine: self.creatinine,
            diabetes_flag: self.diabetes_flag,
            drug_flag: self.drug_flag,
            dcd_flag: self.dcd_flag,
            iv_drug_flag: self.iv_drug_flag,
            peak_creatinine: self.peak_creatinine,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AirportRecord {
    pub lat: f64,
    pub lon: f64,
    pub class: AirportClass,
}

/// Reads every row of a CSV file, pairing it with its 1-based line number.
/// Deserialization failures name the column and line.
pub fn read_rows<T: DeserializeOwned, R: Read>(reader: R, file: &str) -> Result<Vec<(u64, T)>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| Error::Csv {
            file: file.into(),
            source: e,
        })?
        .clone();
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match r.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(Error::Csv {
                    file: file.into(),
                    source: e,
                })
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        let row = record.deserialize::<T>(Some(&headers)).map_err(|e| {
            let field = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.field(),
                _ => None,
            };
            let message = e.to_string();
            // custom categorical errors carry no field index; they quote the raw value
            let field = field.map(|i| i as usize).or_else(|| {
                record
                    .iter()
                    .position(|v| !v.is_empty() && message.contains(&format!("`{v}`")))
            });
            let column = field.and_then(|i| headers.get(i)).unwrap_or("?").to_string();
            Error::Schema {
                file: file.into(),
                line,
                column,
                message,
            }
        })?;
        out.push((line, row));
    }
    Ok(out)
}

pub fn write_rows<T: Serialize, W: Write>(writer: W, file: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Csv {
            file: file.into(),
            source: e,
        })?;
    }
    w.flush().map_err(|e| Error::io(file, e))
}

/// Like [`write_rows`], but also writes the header when there are no rows.
pub fn write_rows_with_header<T: Serialize, W: Write>(
    writer: W,
    file: &str,
    header: &[&str],
    rows: &[T],
) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(header).map_err(|e| Error::Csv {
            file: file.into(),
            source: e,
        })?;
        return w.flush().map_err(|e| Error::io(file, e));
    }
    write_rows(writer, file, rows)
}
