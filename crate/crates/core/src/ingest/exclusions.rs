use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetCounts};
use crate::domain::*;

/// What each exclusion rule removed, in application order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub before: DatasetCounts,
    /// Donors without a clamp time.
    pub donors_missing_clamp: usize,
    pub offers_of_donors_missing_clamp: usize,
    /// Offers whose donor has no donor record.
    pub offers_missing_donor: usize,
    /// Offers whose center has no center record.
    pub offers_missing_center: usize,
    /// Donors accepted more than twice.
    pub donors_over_accepted: usize,
    pub offers_of_over_accepted_donors: usize,
    pub after: DatasetCounts,
}

impl ExclusionReport {
    pub fn is_clean(&self) -> bool {
        self.donors_missing_clamp == 0
            && self.offers_missing_donor == 0
            && self.offers_missing_center == 0
            && self.donors_over_accepted == 0
    }
}

/// Removes, in order: donors missing a clamp time (with their offers),
/// offers with no donor record, offers with no center record, and donors
/// accepted more than twice across their runs. Runs left empty are dropped.
pub fn apply_exclusions(dataset: Dataset) -> (Dataset, ExclusionReport) {
    let mut report = ExclusionReport {
        before: dataset.counts(),
        ..Default::default()
    };
    let Dataset {
        centers,
        donors,
        match_runs,
        airports,
        provenance,
    } = dataset;

    let missing_clamp: HashSet<DonorId> = donors
        .iter()
        .filter(|d| d.clamp_time.is_none())
        .map(|d| d.donor_id.clone())
        .collect();
    report.donors_missing_clamp = missing_clamp.len();
    let known: HashSet<&DonorId> = donors.iter().map(|d| &d.donor_id).collect();
    let center_ids: HashSet<&CenterId> = centers.iter().map(|c| &c.center_id).collect();

    let mut runs = Vec::with_capacity(match_runs.len());
    for mut run in match_runs {
        if missing_clamp.contains(&run.donor_id) {
            report.offers_of_donors_missing_clamp += run.len();
            continue;
        }
        if !known.contains(&run.donor_id) {
            report.offers_missing_donor += run.len();
            continue;
        }
        let before = run.len();
        run.offers.retain(|o| center_ids.contains(&o.center_id));
        report.offers_missing_center += before - run.len();
        if !run.is_empty() {
            runs.push(run);
        }
    }

    let mut accepts: HashMap<&DonorId, usize> = HashMap::new();
    for r in &runs {
        *accepts.entry(&r.donor_id).or_default() += r.accept_count();
    }
    let over: HashSet<DonorId> = accepts
        .into_iter()
        .filter(|&(_, n)| n > 2)
        .map(|(d, _)| d.clone())
        .collect();
    report.donors_over_accepted = over.len();
    runs.retain(|r| {
        let drop = over.contains(&r.donor_id);
        if drop {
            report.offers_of_over_accepted_donors += r.len();
        }
        !drop
    });

    let donors: Vec<Donor> = donors
        .into_iter()
        .filter(|d| !missing_clamp.contains(&d.donor_id) && !over.contains(&d.donor_id))
        .collect();
    let out = Dataset {
        centers,
        donors,
        match_runs: runs,
        airports,
        provenance,
    };
    report.after = out.counts();
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::{donor, offer};
    use crate::ingest::Provenance;

    fn center(id: &str) -> Center {
        Center {
            center_id: CenterId::from(id),
            location: GeoPoint::new(40.0, -80.0).unwrap(),
            patient_count: 100,
            state_gdp_per_capita: 60_000.0,
            history: vec![],
        }
    }

    fn run(d: &str, kidney: u8, offers: Vec<Offer>) -> MatchRun {
        MatchRun {
            donor_id: DonorId::from(d),
            kidney,
            offers,
        }
    }

    fn clean() -> Dataset {
        Dataset {
            centers: vec![center("c1"), center("c2"), center("c3")],
            donors: vec![donor("ok")],
            match_runs: vec![run(
                "ok",
                1,
                vec![offer("ok", "c1", 1, false), offer("ok", "c2", 2, true)],
            )],
            airports: AirportIndex::default(),
            provenance: Provenance::Ingested,
        }
    }

    #[test]
    fn clean_dataset_unchanged() {
        let ds = clean();
        let (out, report) = apply_exclusions(ds.clone());
        assert_eq!(out, ds);
        assert!(report.is_clean());
        assert_eq!(report.before, report.after);
    }

    #[test]
    fn one_violation_of_each_rule() {
        let mut ds = clean();
        let mut no_clamp = donor("noclamp");
        no_clamp.clamp_time = None;
        ds.donors.push(no_clamp);
        ds.donors.push(donor("greedy"));
        ds.match_runs
            .push(run("noclamp", 1, vec![offer("noclamp", "c1", 5, false)]));
        ds.match_runs
            .push(run("ghost", 1, vec![offer("ghost", "c1", 5, false)]));
        ds.match_runs.push(run(
            "greedy",
            1,
            vec![
                offer("greedy", "c1", 5, true),
                offer("greedy", "c2", 6, true),
                offer("greedy", "c3", 7, true),
            ],
        ));
        let (out, report) = apply_exclusions(ds);
        assert_eq!(
            (
                report.donors_missing_clamp,
                report.offers_missing_donor,
                report.donors_over_accepted
            ),
            (1, 1, 1)
        );
        assert_eq!(out, clean());
    }

    #[test]
    fn offers_to_unknown_centers_dropped_and_counted() {
        let mut ds = clean();
        ds.match_runs[0].offers.insert(0, offer("ok", "nowhere", 0, false));
        let (out, report) = apply_exclusions(ds);
        assert_eq!(report.offers_missing_center, 1);
        assert_eq!(out, clean());
    }
}
