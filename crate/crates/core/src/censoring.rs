//! Rebalancing by censoring low offer-ratio rejections.
//!
//! Accepted runs lose every rejection whose offer ratio is below the
//! accepting center's. Unused runs lose every offer whose ratio is below one
//! global threshold, chosen so the overall acceptance share lands near the
//! target.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::*;
use crate::error::{Error, Result};
use crate::ingest::{Dataset, DatasetCounts};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensorConfig {
    pub target_accept_share: f64,
    pub tolerance: f64,
}

impl Default for CensorConfig {
    fn default() -> Self {
        CensorConfig {
            target_accept_share: 0.05,
            tolerance: 0.005,
        }
    }
}

impl CensorConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.target_accept_share;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::config(
                "target_accept_share",
                format!("must lie in (0, 1), got {t}"),
            ));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config("tolerance", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Patient-level offers divided by the center's listed patients.
pub fn offer_ratio(offer: &Offer, center: &Center) -> Result<f64> {
    if center.patient_count == 0 {
        return Err(Error::Precondition(format!(
            "center {} has no listed patients",
            center.center_id
        )));
    }
    Ok(offer.patient_offer_count as f64 / center.patient_count as f64)
}

/// Centers by id, for ratio lookups.
#[derive(Clone, Debug)]
pub struct CenterIndex<'a>(HashMap<&'a CenterId, &'a Center>);

impl<'a> CenterIndex<'a> {
    pub fn new(centers: &'a [Center]) -> Self {
        CenterIndex(centers.iter().map(|c| (&c.center_id, c)).collect())
    }

    pub fn ratio(&self, offer: &Offer) -> Result<f64> {
        let c = self
            .0
            .get(&offer.center_id)
            .ok_or_else(|| Error::Precondition(format!("unknown center {}", offer.center_id)))?;
        offer_ratio(offer, c)
    }
}

/// Drops rejections whose ratio is strictly below the accepting center's.
pub fn censor_accepted_run(run: &MatchRun, centers: &CenterIndex<'_>) -> Result<MatchRun> {
    let accept = run
        .accept_index()
        .ok_or_else(|| Error::Precondition(format!("run for donor {} has no acceptance", run.donor_id)))?;
    let bar = centers.ratio(&run.offers[accept])?;
    let mut offers = Vec::with_capacity(run.len());
    for o in &run.offers {
        if o.response.is_accept() || centers.ratio(o)? >= bar {
            offers.push(o.clone());
        }
    }
    Ok(MatchRun {
        donor_id: run.donor_id.clone(),
        kidney: run.kidney,
        offers,
    })
}

fn ser_threshold<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_finite() {
        s.serialize_some(t)
    } else {
        s.serialize_none()
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Outcome of the unused-run threshold search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnusedCensoring {
    /// Offers with ratio below this are dropped; `null` in JSON means +inf.
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub threshold: f64,
    pub achieved_share: f64,
    /// Set when no threshold lands within tolerance of the target.
    pub warning: Option<String>,
}

/// Picks the smallest threshold whose share reaches `target - tolerance`,
/// falling back to the closest achievable share with a warning.
///
/// `accepted_offers` and `other_offers` are the acceptances and the
/// rejections outside unused runs; both are untouched by this rule.
pub fn censor_unused(
    runs: &[MatchRun],
    centers: &CenterIndex<'_>,
    cfg: &CensorConfig,
    accepted_offers: usize,
    other_offers: usize,
) -> Result<(UnusedCensoring, Vec<MatchRun>)> {
    cfg.validate()?;
    if runs.is_empty() {
        return Err(Error::Precondition("no unused-kidney runs to censor".into()));
    }
    let mut ratios = Vec::new();
    for r in runs {
        for o in &r.offers {
            ratios.push(centers.ratio(o)?);
        }
    }
    ratios.sort_by(f64::total_cmp);
    let share = |t: f64| {
        let kept = ratios.len() - ratios.partition_point(|&r| r < t);
        let total = accepted_offers + other_offers + kept;
        if total == 0 {
            0.0
        } else {
            accepted_offers as f64 / total as f64
        }
    };

    let mut candidates = vec![0.0];
    candidates.extend(ratios.iter().copied().filter(|&r| r > 0.0));
    candidates.dedup();
    candidates.push(f64::INFINITY);

    let (target, tol) = (cfg.target_accept_share, cfg.tolerance);
    let first = candidates.partition_point(|&t| share(t) < target - tol);
    let chosen = if first == candidates.len() {
        UnusedCensoring {
            threshold: f64::INFINITY,
            achieved_share: share(f64::INFINITY),
            warning: Some(format!(
                "target share {target} unreachable; dropping every unused offer gives {:.4}",
                share(f64::INFINITY)
            )),
        }
    } else {
        let t = candidates[first];
        let s = share(t);
        if s <= target + tol {
            UnusedCensoring {
                threshold: t,
                achieved_share: s,
                warning: None,
            }
        } else {
            let (t, s) = match first.checked_sub(1).map(|i| (candidates[i], share(candidates[i]))) {
                Some((tp, sp)) if (target - sp) < (s - target) => (tp, sp),
                _ => (t, s),
            };
            UnusedCensoring {
                threshold: t,
                achieved_share: s,
                warning: Some(format!("no threshold within tolerance; closest share is {s:.4}")),
            }
        }
    };

    let mut out = Vec::with_capacity(runs.len());
    for r in runs {
        let mut offers = Vec::with_capacity(r.len());
        for o in &r.offers {
            if centers.ratio(o)? >= chosen.threshold {
                offers.push(o.clone());
            }
        }
        out.push(MatchRun {
            donor_id: r.donor_id.clone(),
            kidney: r.kidney,
            offers,
        });
    }
    Ok((chosen, out))
}

/// Before/after sizes in the shape of a dataset-variant summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensorReport {
    pub target_accept_share: f64,
    pub tolerance: f64,
    pub before: DatasetCounts,
    pub after: DatasetCounts,
    pub accepted_run_rejects_dropped: usize,
    pub unused_offers_dropped: usize,
    /// `None` when the dataset has no unused runs.
    pub unused: Option<UnusedCensoring>,
}

impl CensorReport {
    pub fn warning(&self) -> Option<&str> {
        self.unused.as_ref().and_then(|u| u.warning.as_deref())
    }
}

/// Applies both rules; runs left empty are dropped. Baseline order within
/// each run is preserved.
pub fn censor_runs(runs: &[MatchRun], centers: &[Center], cfg: &CensorConfig) -> Result<(Vec<MatchRun>, CensorReport)> {
    cfg.validate()?;
    let index = CenterIndex::new(centers);
    let before = DatasetCounts::of_runs(runs);

    let mut accepted = Vec::new();
    let mut unused = Vec::new();
    // remember where each run came from so the output keeps input order
    let mut slots = Vec::with_capacity(runs.len());
    for r in runs {
        match r.accept_count() {
            0 => {
                slots.push((false, unused.len()));
                unused.push(r.clone());
            }
            1 => {
                slots.push((true, accepted.len()));
                accepted.push(censor_accepted_run(r, &index)?);
            }
            n => {
                return Err(Error::Precondition(format!(
                    "run for donor {} kidney {} has {n} acceptances",
                    r.donor_id, r.kidney
                )))
            }
        }
    }
    let accepted_offers = accepted.len();
    let accepted_run_offers: usize = accepted.iter().map(MatchRun::len).sum();
    let accepted_run_rejects_dropped = runs
        .iter()
        .filter(|r| r.accept_count() == 1)
        .map(MatchRun::len)
        .sum::<usize>()
        - accepted_run_offers;

    let (summary, unused) = if unused.is_empty() {
        (None, unused)
    } else {
        let (s, u) = censor_unused(
            &unused,
            &index,
            cfg,
            accepted_offers,
            accepted_run_offers - accepted_offers,
        )?;
        (Some(s), u)
    };
    let unused_offers_dropped = runs
        .iter()
        .filter(|r| r.accept_count() == 0)
        .map(MatchRun::len)
        .sum::<usize>()
        - unused.iter().map(MatchRun::len).sum::<usize>();

    let out: Vec<MatchRun> = slots
        .into_iter()
        .map(|(is_accepted, i)| if is_accepted { &accepted[i] } else { &unused[i] })
        .filter(|r| !r.is_empty())
        .cloned()
        .collect();
    let report = CensorReport {
        target_accept_share: cfg.target_accept_share,
        tolerance: cfg.tolerance,
        before,
        after: DatasetCounts::of_runs(&out),
        accepted_run_rejects_dropped,
        unused_offers_dropped,
        unused: summary,
    };
    Ok((out, report))
}

pub fn censor_dataset(dataset: &Dataset, cfg: &CensorConfig) -> Result<(Dataset, CensorReport)> {
    let (runs, report) = censor_runs(&dataset.match_runs, &dataset.centers, cfg)?;
    Ok((dataset.with_runs(runs), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn center(id: &str, patients: u32) -> Center {
        Center {
            center_id: CenterId::from(id),
            location: GeoPoint::new(40.0, -80.0).unwrap(),
            patient_count: patients,
            state_gdp_per_capita: 1.0,
            history: vec![],
        }
    }

    fn offer(donor: &str, center: &str, minute: i64, count: u32, accept: bool) -> Offer {
        Offer {
            donor_id: DonorId::from(donor),
            center_id: CenterId::from(center),
            offer_time: Timestamp::from_minutes(minute),
            response: if accept { Response::Accept } else { Response::Reject },
            patient_offer_count: count,
        }
    }

    fn run(donor: &str, offers: Vec<Offer>) -> MatchRun {
        MatchRun {
            donor_id: DonorId::from(donor),
            kidney: 1,
            offers,
        }
    }

    #[test]
    fn ratio_examples() {
        let o = offer("d", "c", 0, 20, false);
        assert_eq!(offer_ratio(&o, &center("c", 100)).unwrap(), 0.2);
        assert_eq!(
            offer_ratio(&offer("d", "c", 0, 1, false), &center("c", 1000)).unwrap(),
            0.001
        );
        assert!(offer_ratio(&o, &center("c", 0)).is_err());
    }

    #[test]
    fn rule_one_keeps_at_least_accepting_ratio() {
        let centers = vec![center("hi", 100), center("lo", 100), center("acc", 100)];
        let idx = CenterIndex::new(&centers);
        let r = run(
            "d",
            vec![
                offer("d", "hi", 1, 25, false),
                offer("d", "lo", 2, 5, false),
                offer("d", "acc", 3, 20, true),
            ],
        );
        let out = censor_accepted_run(&r, &idx).unwrap();
        let kept: Vec<&str> = out.offers.iter().map(|o| o.center_id.as_str()).collect();
        assert_eq!(kept, ["hi", "acc"]);

        let all_low = run("d", vec![offer("d", "lo", 1, 1, false), offer("d", "acc", 2, 20, true)]);
        assert_eq!(censor_accepted_run(&all_low, &idx).unwrap().len(), 1);
        assert!(censor_accepted_run(&run("d", vec![offer("d", "lo", 1, 1, false)]), &idx).is_err());
    }

    /// Ten centers with ratio 0.01 * k (k = 1..=10) in one unused run.
    fn ladder() -> (Vec<Center>, MatchRun) {
        let centers: Vec<Center> = (1..=10).map(|k| center(&format!("c{k}"), 100)).collect();
        let offers = (1..=10)
            .map(|k| offer("u", &format!("c{k}"), k as i64, k as u32, false))
            .collect();
        (centers, run("u", offers))
    }

    fn oracle_threshold(ratios: &[f64], accepted: usize, other: usize, target: f64, tol: f64) -> f64 {
        let mut cands: Vec<f64> = vec![0.0];
        cands.extend(ratios.iter().copied());
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        for t in cands {
            let kept = ratios.iter().filter(|&&r| r >= t).count();
            if accepted as f64 / (accepted + other + kept) as f64 >= target - tol {
                return t;
            }
        }
        f64::INFINITY
    }

    #[test]
    fn threshold_search_matches_linear_oracle() {
        let (centers, u) = ladder();
        let idx = CenterIndex::new(&centers);
        // 1 accept, 15 other offers: keeping 4 unused offers (ratios 0.07..0.10) gives 1/20 = 5%
        let cfg = CensorConfig {
            target_accept_share: 0.05,
            tolerance: 0.001,
        };
        let (res, runs) = censor_unused(std::slice::from_ref(&u), &idx, &cfg, 1, 15).unwrap();
        let ratios: Vec<f64> = (1..=10).map(|k| k as f64 / 100.0).collect();
        assert_eq!(res.threshold, oracle_threshold(&ratios, 1, 15, 0.05, 0.001));
        assert_eq!(res.threshold, 0.07);
        assert!((res.achieved_share - 0.05).abs() < 1e-12);
        assert!(res.warning.is_none());
        assert_eq!(runs[0].len(), 4);
    }

    #[test]
    fn already_at_target_keeps_everything() {
        let (centers, u) = ladder();
        let idx = CenterIndex::new(&centers);
        // 1 accept, 9 others, 10 unused: 1/20 = 5%
        let (res, runs) = censor_unused(std::slice::from_ref(&u), &idx, &CensorConfig::default(), 1, 9).unwrap();
        assert_eq!(res.threshold, 0.0);
        assert_eq!(runs[0], u);
    }

    #[test]
    fn unreachable_target_drops_all_unused_with_warning() {
        let (centers, u) = ladder();
        let idx = CenterIndex::new(&centers);
        let cfg = CensorConfig {
            target_accept_share: 0.9,
            tolerance: 0.0,
        };
        let (res, runs) = censor_unused(&[u], &idx, &cfg, 1, 3).unwrap();
        assert_eq!(res.threshold, f64::INFINITY);
        assert_eq!(res.achieved_share, 0.25);
        assert!(res.warning.is_some());
        assert!(runs[0].is_empty());
    }

    #[test]
    fn dataset_level_rules_and_idempotence() {
        let mut centers: Vec<Center> = (1..=10).map(|k| center(&format!("c{k}"), 100)).collect();
        centers.push(center("acc", 100));
        let (_, u) = ladder();
        let accepted = run(
            "a",
            vec![
                offer("a", "c1", 1, 1, false),
                offer("a", "c9", 2, 30, false),
                offer("a", "acc", 3, 20, true),
            ],
        );
        let runs = vec![accepted, u];
        let cfg = CensorConfig {
            target_accept_share: 0.2,
            tolerance: 0.01,
        };
        let (out, report) = censor_runs(&runs, &centers, &cfg).unwrap();
        assert_eq!(report.accepted_run_rejects_dropped, 1);
        // 1 accept + 1 kept reject, so 3 unused offers remain for 1/5
        assert_eq!(out[1].len(), 3);
        assert_eq!(report.after.accept_share(), 0.2);
        assert!(report.after.donors <= report.before.donors);
        let (again, _) = censor_runs(&out, &centers, &cfg).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn only_accepted_runs_skip_rule_two() {
        let centers = vec![center("acc", 100)];
        let runs = vec![run("a", vec![offer("a", "acc", 1, 5, true)])];
        let (out, report) = censor_runs(&runs, &centers, &CensorConfig::default()).unwrap();
        assert_eq!(out, runs);
        assert!(report.unused.is_none());
    }

    #[test]
    fn config_bounds() {
        assert!(CensorConfig {
            target_accept_share: 0.0,
            tolerance: 0.0
        }
        .validate()
        .is_err());
        assert!(CensorConfig {
            target_accept_share: 1.0,
            tolerance: 0.0
        }
        .validate()
        .is_err());
        assert!(CensorConfig::default().validate().is_ok());
    }
}
