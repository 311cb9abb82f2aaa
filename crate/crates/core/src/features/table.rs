//! Featurized offers: a dense row-major matrix plus labels and offer keys.

use std::io::{Read, Write};
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::{FeatureContext, FeatureVector};
use super::layout::layout;
use crate::domain::{CenterId, DonorId, MatchRun};
use crate::error::{Error, Result};
use crate::ingest::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    names: Arc<[String]>,
    n_rows: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Arc<[String]>, data: Vec<f64>) -> Result<Self> {
        let n_cols = names.len();
        if n_cols == 0 || data.len() % n_cols != 0 {
            return Err(Error::Precondition(format!(
                "{} values do not fill rows of {} columns",
                data.len(),
                n_cols
            )));
        }
        Ok(FeatureMatrix {
            n_rows: data.len() / n_cols,
            names,
            data,
        })
    }

    pub fn from_rows(names: Arc<[String]>, rows: &[Vec<f64>]) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != names.len()) {
            return Err(Error::Precondition(format!(
                "row {i} has {} values, expected {}",
                r.len(),
                names.len()
            )));
        }
        Self::new(names, rows.concat())
    }

    /// Matrix with generated names `f0, f1, ...`.
    pub fn unnamed(n_cols: usize, data: Vec<f64>) -> Result<Self> {
        let names: Vec<String> = (0..n_cols).map(|j| format!("f{j}")).collect();
        Self::new(names.into(), data)
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            names: self.names.clone(),
            n_rows: rows.len(),
            data,
        }
    }

    pub fn vector(&self, i: usize) -> FeatureVector {
        FeatureVector {
            names: self.names.clone(),
            values: self.row(i).to_vec(),
        }
    }
}

/// Identifies the offer behind a feature row.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OfferKey {
    pub donor_id: DonorId,
    pub kidney: u8,
    pub center_id: CenterId,
    /// 0-based position in the (possibly censored) run's baseline order.
    pub position: usize,
}

/// Feature rows grouped by match run; rows of one run are contiguous and in
/// baseline order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub matrix: FeatureMatrix,
    pub labels: Vec<u8>,
    pub keys: Vec<OfferKey>,
    run_starts: Vec<usize>,
}

const KEY_COLUMNS: [&str; 4] = ["donor_id", "kidney", "center_id", "position"];
const LABEL_COLUMN: &str = "accepted";

impl FeatureTable {
    pub fn new(matrix: FeatureMatrix, labels: Vec<u8>, keys: Vec<OfferKey>) -> Result<Self> {
        if labels.len() != matrix.n_rows() || keys.len() != matrix.n_rows() {
            return Err(Error::Precondition(format!(
                "{} rows, {} labels, {} keys",
                matrix.n_rows(),
                labels.len(),
                keys.len()
            )));
        }
        let mut run_starts = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let new_run = i == 0 || {
                let p = &keys[i - 1];
                p.donor_id != k.donor_id || p.kidney != k.kidney
            };
            if new_run {
                run_starts.push(i);
            }
        }
        run_starts.push(keys.len());
        Ok(FeatureTable {
            matrix,
            labels,
            keys,
            run_starts,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_runs(&self) -> usize {
        self.run_starts.len() - 1
    }

    /// Row ranges of each run.
    pub fn runs(&self) -> impl ExactSizeIterator<Item = Range<usize>> + '_ {
        self.run_starts.windows(2).map(|w| w[0]..w[1])
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| y as f64).collect()
    }

    pub fn accept_share(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&y| y == 1).count() as f64 / self.labels.len() as f64
    }

    /// Keeps the rows for which `keep` holds, preserving order.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> FeatureTable {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(i)).collect();
        self.select(&rows)
    }

    fn select(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable::new(
            self.matrix.select_rows(rows),
            rows.iter().map(|&i| self.labels[i]).collect(),
            rows.iter().map(|&i| self.keys[i].clone()).collect(),
        )
        .expect("selection keeps lengths consistent")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let err = |e| Error::Csv {
            file: "features.csv".into(),
            source: e,
        };
        let mut w = csv::Writer::from_writer(writer);
        let header = KEY_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.matrix.names().iter().cloned())
            .chain(std::iter::once(LABEL_COLUMN.to_string()));
        w.write_record(header).map_err(err)?;
        let mut rec = Vec::with_capacity(self.matrix.n_cols() + 5);
        for (i, k) in self.keys.iter().enumerate() {
            rec.clear();
            rec.push(k.donor_id.to_string());
            rec.push(k.kidney.to_string());
            rec.push(k.center_id.to_string());
            rec.push(k.position.to_string());
            rec.extend(self.matrix.row(i).iter().map(|v| v.to_string()));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("features.csv", e))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let file = "features.csv";
        let schema = |line: u64, column: &str, message: String| Error::Schema {
            file: file.into(),
            line,
            column: column.into(),
            message,
        };
        let mut r = csv::Reader::from_reader(reader);
        let header = r
            .headers()
            .map_err(|e| Error::Csv {
                file: file.into(),
                source: e,
            })?
            .clone();
        let n = header.len();
        if n < KEY_COLUMNS.len() + 2
            || header.iter().take(4).ne(KEY_COLUMNS.iter().copied())
            || &header[n - 1] != LABEL_COLUMN
        {
            return Err(schema(
                1,
                "header",
                format!("expected {KEY_COLUMNS:?}, features, `{LABEL_COLUMN}`"),
            ));
        }
        let names: Arc<[String]> = header.iter().skip(4).take(n - 5).map(str::to_string).collect();
        let (mut data, mut labels, mut keys) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| Error::Csv {
                file: file.into(),
                source: e,
            })?;
            let parse_int = |j: usize| -> Result<usize> {
                rec[j]
                    .parse()
                    .map_err(|_| schema(line, &header[j], format!("not an integer: `{}`", &rec[j])))
            };
            keys.push(OfferKey {
                donor_id: DonorId::from(&rec[0]),
                kidney: parse_int(1)? as u8,
                center_id: CenterId::from(&rec[2]),
                position: parse_int(3)?,
            });
            for j in 4..n - 1 {
                let v: f64 = rec[j]
                    .parse()
                    .map_err(|_| schema(line, &header[j], format!("not a number: `{}`", &rec[j])))?;
                data.push(v);
            }
            labels.push(match &rec[n - 1] {
                "0" => 0,
                "1" => 1,
                other => return Err(schema(line, LABEL_COLUMN, format!("expected 0 or 1, got `{other}`"))),
            });
        }
        FeatureTable::new(FeatureMatrix::new(names, data)?, labels, keys)
    }
}

/// Featurizes `runs` against `ctx`. Rows come out grouped by run, in the
/// order given, regardless of thread count.
/// Feature values, labels and keys of one run.
type RunRows = (Vec<f64>, Vec<u8>, Vec<OfferKey>);

pub fn featurize(ctx: &FeatureContext, dataset: &Dataset, runs: &[MatchRun]) -> Result<FeatureTable> {
    let l = layout();
    let width = l.len();
    let donors = dataset.donor_lookup();
    let per_run: Vec<Result<RunRows>> =
        runs.par_iter()
            .map(|run| {
                let donor = donors.get(&run.donor_id).map(|&i| &dataset.donors[i]).ok_or_else(|| {
                    Error::Precondition(format!("match run references unknown donor {}", run.donor_id))
                })?;
                let geo = ctx.donor_geo(donor);
                let mut data = vec![0.0; width * run.len()];
                let mut labels = Vec::with_capacity(run.len());
                let mut keys = Vec::with_capacity(run.len());
                for (pos, (o, row)) in run.offers.iter().zip(data.chunks_exact_mut(width)).enumerate() {
                    ctx.fill(donor, &geo, ctx.require_center(&o.center_id)?, o.offer_time, row)?;
                    labels.push(o.response.is_accept() as u8);
                    keys.push(OfferKey {
                        donor_id: run.donor_id.clone(),
                        kidney: run.kidney,
                        center_id: o.center_id.clone(),
                        position: pos,
                    });
                }
                Ok((data, labels, keys))
            })
            .collect();
    let (mut data, mut labels, mut keys) = (Vec::new(), Vec::new(), Vec::new());
    for part in per_run {
        let (d, y, k) = part?;
        data.extend(d);
        labels.extend(y);
        keys.extend(k);
    }
    FeatureTable::new(FeatureMatrix::new(l.names.clone(), data)?, labels, keys)
}
