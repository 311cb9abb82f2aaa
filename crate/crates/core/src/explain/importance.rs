//! Mean |φ| importance over many rows, overall and within KDRI/CIT/... bands.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::treeshap::{base_value, ensemble, shap_row};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::Model;

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    pub base_value: f64,
    /// Row indices (into the explained matrix) of the explained rows.
    pub rows: Vec<usize>,
    /// `rows.len() × n_features` attributions, row-major.
    pub phi: Vec<f64>,
    /// Feature values aligned with `phi`.
    pub values: Vec<f64>,
    pub mean_abs_phi: Vec<f64>,
    /// Feature indices by non-increasing mean |φ|; ties by index.
    pub order: Vec<usize>,
}

impl GlobalImportance {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn phi_row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.phi[i * p..(i + 1) * p]
    }

    pub fn value_row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    /// The `k` most important feature names.
    pub fn top(&self, k: usize) -> Vec<&str> {
        self.order
            .iter()
            .take(k)
            .map(|&j| self.feature_names[j].as_str())
            .collect()
    }

    pub fn importance(&self, name: &str) -> Option<f64> {
        let j = self.feature_names.iter().position(|n| n == name)?;
        Some(self.mean_abs_phi[j])
    }

    /// `rank,feature,mean_abs_phi`, most important first.
    pub fn write_importance_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Csv {
            file: "importance.csv".into(),
            source: e,
        };
        out.write_record(["rank", "feature", "mean_abs_phi"]).map_err(err)?;
        for (r, &j) in self.order.iter().enumerate() {
            out.write_record([
                (r + 1).to_string(),
                self.feature_names[j].clone(),
                self.mean_abs_phi[j].to_string(),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("importance.csv", e))
    }

    /// `row_id,<feature...>` matrix of φ.
    pub fn write_shap_values_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Csv {
            file: "shap_values.csv".into(),
            source: e,
        };
        let header = std::iter::once("row_id").chain(self.feature_names.iter().map(String::as_str));
        out.write_record(header).map_err(err)?;
        for (i, &row) in self.rows.iter().enumerate() {
            let rec = std::iter::once(row.to_string()).chain(self.phi_row(i).iter().map(f64::to_string));
            out.write_record(rec).map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("shap_values.csv", e))
    }

    /// Long `feature,phi,value,row_id` points for the `top_k` features, for
    /// beeswarm plots.
    pub fn write_shap_points_csv<W: Write>(&self, w: W, top_k: usize) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Csv {
            file: "shap_points.csv".into(),
            source: e,
        };
        out.write_record(["feature", "phi", "value", "row_id"]).map_err(err)?;
        for &j in self.order.iter().take(top_k) {
            for (i, &row) in self.rows.iter().enumerate() {
                let p = self.n_features();
                out.write_record([
                    self.feature_names[j].clone(),
                    self.phi[i * p + j].to_string(),
                    self.values[i * p + j].to_string(),
                    row.to_string(),
                ])
                .map_err(err)?;
            }
        }
        out.flush().map_err(|e| Error::io("shap_points.csv", e))
    }
}

/// TreeSHAP for every row of `x`, with mean |φ| per feature.
pub fn global_importance(model: &Model, x: &FeatureMatrix) -> Result<GlobalImportance> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    importance_over_rows(model, x, rows)
}

/// [`global_importance`] restricted to the given rows.
pub fn importance_over_rows(model: &Model, x: &FeatureMatrix, rows: Vec<usize>) -> Result<GlobalImportance> {
    model.check_names(x.names())?;
    if rows.is_empty() {
        return Err(Error::Precondition("no rows to explain".into()));
    }
    let e = ensemble(model)?;
    let p = x.n_cols();
    let phi: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&i| {
            let mut phi = vec![0.0; p];
            shap_row(&e, x.row(i), &mut phi);
            phi
        })
        .collect();
    let values: Vec<f64> = rows.iter().flat_map(|&i| x.row(i).iter().copied()).collect();
    let mut mean_abs_phi = vec![0.0; p];
    for row in phi.chunks(p) {
        for (m, v) in mean_abs_phi.iter_mut().zip(row) {
            *m += v.abs();
        }
    }
    let n = rows.len() as f64;
    mean_abs_phi.iter_mut().for_each(|m| *m /= n);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| mean_abs_phi[b].total_cmp(&mean_abs_phi[a]));
    Ok(GlobalImportance {
        feature_names: model.feature_names().to_vec(),
        base_value: base_value(model)?,
        rows,
        phi,
        values,
        mean_abs_phi,
        order,
    })
}

/// Donor and offer attributes that importance can be segmented on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentFeature {
    Kdri,
    Cit,
    Age,
    Creatinine,
    Distance,
}

impl SegmentFeature {
    pub const ALL: [SegmentFeature; 5] = [
        SegmentFeature::Kdri,
        SegmentFeature::Cit,
        SegmentFeature::Age,
        SegmentFeature::Creatinine,
        SegmentFeature::Distance,
    ];

    pub fn column(self) -> &'static str {
        match self {
            SegmentFeature::Kdri => "kdri",
            SegmentFeature::Cit => "cit_minutes",
            SegmentFeature::Age => "donor_age_years",
            SegmentFeature::Creatinine => "donor_creatinine",
            SegmentFeature::Distance => "distance_donor_to_center_miles",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SegmentFeature::Kdri => "kdri",
            SegmentFeature::Cit => "cit",
            SegmentFeature::Age => "age",
            SegmentFeature::Creatinine => "creatinine",
            SegmentFeature::Distance => "distance",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// At or below the 10th percentile.
    Bottom10,
    /// At or above the 90th percentile.
    Top10,
}

impl Band {
    pub fn label(self) -> &'static str {
        match self {
            Band::Bottom10 => "bottom10",
            Band::Top10 => "top10",
        }
    }
}

/// Linear-interpolation percentile of sorted values, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Rows of `values` inside the band.
pub fn band_rows(values: &[f64], band: Band) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    match band {
        Band::Bottom10 => {
            let cut = percentile(&sorted, 0.1);
            (0..values.len()).filter(|&i| values[i] <= cut).collect()
        }
        Band::Top10 => {
            let cut = percentile(&sorted, 0.9);
            (0..values.len()).filter(|&i| values[i] >= cut).collect()
        }
    }
}

/// Global importance over the rows in one tail of a segment feature.
pub fn segment_importance(
    model: &Model,
    x: &FeatureMatrix,
    segment: SegmentFeature,
    band: Band,
) -> Result<GlobalImportance> {
    if x.n_rows() < 10 {
        return Err(Error::Precondition(format!(
            "segmenting needs at least 10 rows, got {}",
            x.n_rows()
        )));
    }
    let j = x
        .column_index(segment.column())
        .ok_or_else(|| Error::Precondition(format!("no `{}` column to segment on", segment.column())))?;
    let rows = band_rows(&x.column(j), band);
    if rows.is_empty() {
        return Err(Error::Precondition(format!(
            "empty {} {} segment",
            segment.label(),
            band.label()
        )));
    }
    importance_over_rows(model, x, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_tails_take_ten_percent() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let lo = band_rows(&v, Band::Bottom10);
        let hi = band_rows(&v, Band::Top10);
        assert_eq!(lo, (0..10).collect::<Vec<_>>());
        assert_eq!(hi, (90..100).collect::<Vec<_>>());
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(percentile(&[3.0], 0.9), 3.0);
    }
}
