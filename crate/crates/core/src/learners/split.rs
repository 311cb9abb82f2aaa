//! Donor-wise train/test partition.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::DonorId;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::ingest::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

fn donor_hash(seed: u64, id: &DonorId) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_str().as_bytes());
    h.finalize().into()
}

/// Training donors: the `round(fraction * n)` smallest by hash of
/// `(seed, donor_id)`, kept within `1..n` so neither side is empty.
pub fn train_donors<'a>(donors: impl IntoIterator<Item = &'a DonorId>, spec: &SplitSpec) -> Result<HashSet<DonorId>> {
    spec.validate()?;
    let unique: HashSet<&DonorId> = donors.into_iter().collect();
    if unique.len() < 2 {
        return Err(Error::Precondition(format!(
            "donor-wise split needs at least 2 donors, got {}",
            unique.len()
        )));
    }
    let mut keyed: Vec<([u8; 32], &DonorId)> = unique.into_iter().map(|d| (donor_hash(spec.seed, d), d)).collect();
    keyed.sort();
    let n = keyed.len();
    let k = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    Ok(keyed[..k].iter().map(|(_, d)| (*d).clone()).collect())
}

pub fn split_donorwise(table: &FeatureTable, spec: &SplitSpec) -> Result<(FeatureTable, FeatureTable)> {
    let train = train_donors(table.keys.iter().map(|k| &k.donor_id), spec)?;
    let is_train: Vec<bool> = table.keys.iter().map(|k| train.contains(&k.donor_id)).collect();
    Ok((table.filter_rows(|i| is_train[i]), table.filter_rows(|i| !is_train[i])))
}

/// Splits donors and their runs; centers and airports are shared.
pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let train = train_donors(dataset.donors.iter().map(|d| &d.donor_id), spec)?;
    let side = |keep: bool| {
        let donors: Vec<_> = dataset
            .donors
            .iter()
            .filter(|d| train.contains(&d.donor_id) == keep)
            .cloned()
            .collect();
        let runs = dataset
            .match_runs
            .iter()
            .filter(|r| train.contains(&r.donor_id) == keep)
            .cloned()
            .collect();
        Dataset {
            donors,
            ..dataset.with_runs(runs)
        }
    };
    Ok((side(true), side(false)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<DonorId> {
        (0..n).map(|i| DonorId::from(format!("D{i:05}").as_str())).collect()
    }

    #[test]
    fn fraction_and_determinism() {
        let donors = ids(1000);
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 3,
        };
        let a = train_donors(&donors, &spec).unwrap();
        assert!((780..=820).contains(&a.len()));
        assert_eq!(a, train_donors(&donors, &spec).unwrap());
        let b = train_donors(&donors, &SplitSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn both_sides_non_empty() {
        let donors = ids(2);
        let t = train_donors(
            &donors,
            &SplitSpec {
                train_fraction: 0.99,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(t.len(), 1);
        assert!(train_donors(&ids(1), &SplitSpec::default()).is_err());
    }
}
