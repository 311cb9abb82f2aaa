//! Offer-time CIT, the KAP qualification rule, and rolling history counts.

use serde::{Deserialize, Serialize};

use crate::domain::{AcceptedKidneyRecord, Donor, TimeOfDay, Timestamp, MINUTES_PER_YEAR};
use crate::error::{Error, Result};

/// Cold ischemia time at the offer, in whole minutes, floored at zero.
pub fn compute_cit(clamp_time: Timestamp, offer_time: Timestamp) -> i64 {
    offer_time.minutes_since(clamp_time).max(0)
}

/// Four-hour bucket of the offer time in the given fixed zone.
pub fn time_of_day_bucket(offer_time: Timestamp, utc_offset_minutes: i32) -> TimeOfDay {
    match offer_time.minute_of_day(utc_offset_minutes) / 240 {
        0 => TimeOfDay::LateNight,
        1 => TimeOfDay::EarlyMorning,
        2 => TimeOfDay::Morning,
        3 => TimeOfDay::Noon,
        4 => TimeOfDay::Eve,
        _ => TimeOfDay::Night,
    }
}

/// Whether a previously accepted kidney qualifies the center for the offered
/// donor under the KAP thresholds.
pub fn kap_qualifies(historical: &AcceptedKidneyRecord, offered: &Donor) -> bool {
    let conditional = |offered_yes: bool, historical_yes: bool| !offered_yes || historical_yes;
    historical.kdpi >= offered.kdpi
        && historical.donor_age >= 0.9 * offered.age
        && historical.peak_creatinine >= 0.75 * offered.peak_creatinine
        && conditional(offered.diabetes_history.is_yes(), historical.diabetes_flag)
        && conditional(offered.iv_drug_use.is_yes(), historical.iv_drug_flag)
        && conditional(offered.dcd.is_yes(), historical.dcd_flag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HistoryWindow(u8);

impl HistoryWindow {
    pub const ONE_YEAR: HistoryWindow = HistoryWindow(1);
    pub const TWO_YEARS: HistoryWindow = HistoryWindow(2);
    pub const THREE_YEARS: HistoryWindow = HistoryWindow(3);

    pub fn years(years: u8) -> Result<Self> {
        match years {
            1..=3 => Ok(HistoryWindow(years)),
            _ => Err(Error::Precondition(format!(
                "history window must be 1, 2 or 3 years, got {years}"
            ))),
        }
    }

    /// Window length; a year is 365 days.
    pub fn minutes(self) -> i64 {
        self.0 as i64 * MINUTES_PER_YEAR
    }

    pub fn start(self, as_of: Timestamp) -> Timestamp {
        as_of.plus_minutes(-self.minutes())
    }
}

/// Which historical acceptances a rolling count includes. "Higher"/"older"
/// comparisons are strict.
#[derive(Clone, Copy, Debug)]
pub enum Predicate<'a> {
    HigherCit(i64),
    HigherKdri(f64),
    Older(f64),
    HigherCreatinine(f64),
    DiabetesRelated,
    DrugRelated,
    Dcd,
    KapEligible(&'a Donor),
}

impl Predicate<'_> {
    pub fn matches(&self, r: &AcceptedKidneyRecord) -> bool {
        match *self {
            Predicate::HigherCit(cit) => r.cit_minutes > cit,
            Predicate::HigherKdri(kdri) => r.kdri > kdri,
            Predicate::Older(age) => r.donor_age > age,
            Predicate::HigherCreatinine(cr) => r.creatinine > cr,
            Predicate::DiabetesRelated => r.diabetes_flag,
            Predicate::DrugRelated => r.drug_flag,
            Predicate::Dcd => r.dcd_flag,
            Predicate::KapEligible(donor) => kap_qualifies(r, donor),
        }
    }
}

/// Index range of records with `start <= accept_time < end` in a sorted history.
pub(crate) fn window_range(
    history: &[AcceptedKidneyRecord],
    start: Timestamp,
    end: Timestamp,
) -> std::ops::Range<usize> {
    let lo = history.partition_point(|r| r.accept_time < start);
    let hi = history.partition_point(|r| r.accept_time < end);
    lo..hi.max(lo)
}

/// Acceptances in `[as_of - window, as_of)` satisfying `predicate`.
/// `history` must be sorted by `accept_time`.
pub fn rolling_count(
    history: &[AcceptedKidneyRecord],
    as_of: Timestamp,
    window: HistoryWindow,
    predicate: &Predicate<'_>,
) -> u32 {
    history[window_range(history, window.start(as_of), as_of)]
        .iter()
        .filter(|r| predicate.matches(r))
        .count() as u32
}

/// Offers a center received and accepted within a window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WindowOfferCounts {
    pub received: u32,
    pub accepted: u32,
}

/// Dataset-wide fallbacks for centers with no acceptances in the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalMeans {
    pub accepted_kdri: f64,
    pub accepted_age: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateStats {
    pub acceptance_rate: f64,
    pub avg_accepted_kdri: f64,
    pub avg_accepted_age: f64,
}

/// Two-year acceptance rate and accepted-kidney averages. The rate is
/// `accepted / received` over the offer counts (0 with no offers); averages
/// run over the history's two-year records and fall back to `fallback`.
pub fn center_rate_stats(
    history: &[AcceptedKidneyRecord],
    as_of: Timestamp,
    counts: WindowOfferCounts,
    fallback: GlobalMeans,
) -> RateStats {
    let recent = &history[window_range(history, HistoryWindow::TWO_YEARS.start(as_of), as_of)];
    let acceptance_rate = if counts.received == 0 {
        0.0
    } else {
        counts.accepted as f64 / counts.received as f64
    };
    let (avg_accepted_kdri, avg_accepted_age) = if recent.is_empty() {
        (fallback.accepted_kdri, fallback.accepted_age)
    } else {
        let n = recent.len() as f64;
        (
            recent.iter().map(|r| r.kdri).sum::<f64>() / n,
            recent.iter().map(|r| r.donor_age).sum::<f64>() / n,
        )
    };
    RateStats {
        acceptance_rate,
        avg_accepted_kdri,
        avg_accepted_age,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::donor;
    use crate::domain::{DiabetesHistory, TriState, MINUTES_PER_DAY};

    fn record(minute: i64) -> AcceptedKidneyRecord {
        AcceptedKidneyRecord {
            accept_time: Timestamp::from_minutes(minute),
            kdri: 1.2,
            kdpi: 50.0,
            donor_age: 45.0,
            cit_minutes: 600,
            creatinine: 1.0,
            diabetes_flag: false,
            drug_flag: false,
            dcd_flag: false,
            iv_drug_flag: false,
            peak_creatinine: 1.2,
        }
    }

    #[test]
    fn cit_examples() {
        let clamp = Timestamp::from_ymd_hm(2020, 5, 1, 10, 0).unwrap();
        let offer = Timestamp::from_ymd_hm(2020, 5, 1, 19, 54).unwrap();
        assert_eq!(compute_cit(clamp, offer), 594);
        assert_eq!(compute_cit(clamp, clamp), 0);
        assert_eq!(compute_cit(clamp, clamp.plus_minutes(-30)), 0);
    }

    #[test]
    fn time_of_day_boundaries() {
        let at = |h, m| Timestamp::from_ymd_hm(2020, 5, 1, h, m).unwrap();
        assert_eq!(time_of_day_bucket(at(2, 30), 0), TimeOfDay::LateNight);
        assert_eq!(time_of_day_bucket(at(12, 0), 0), TimeOfDay::Noon);
        assert_eq!(time_of_day_bucket(at(23, 59), 0), TimeOfDay::Night);
        assert_eq!(time_of_day_bucket(at(4, 0), 0), TimeOfDay::EarlyMorning);
        assert_eq!(time_of_day_bucket(at(11, 59), 0), TimeOfDay::Morning);
        assert_eq!(time_of_day_bucket(at(16, 0), 0), TimeOfDay::Eve);
        // 02:00 UTC is 21:00 at UTC-5
        assert_eq!(time_of_day_bucket(at(2, 0), -300), TimeOfDay::Night);
    }

    fn kap_offered() -> Donor {
        let mut d = donor("offered");
        d.kdpi = 85.0;
        d.age = 60.0;
        d.peak_creatinine = 2.0;
        d.diabetes_history = DiabetesHistory::Yes0to5;
        d.iv_drug_use = TriState::No;
        d.dcd = TriState::No;
        d
    }

    fn kap_historical() -> AcceptedKidneyRecord {
        AcceptedKidneyRecord {
            kdpi: 90.0,
            donor_age: 55.0,
            peak_creatinine: 1.6,
            diabetes_flag: true,
            iv_drug_flag: true,
            dcd_flag: true,
            ..record(0)
        }
    }

    #[test]
    fn kap_examples() {
        let offered = kap_offered();
        assert!(kap_qualifies(&kap_historical(), &offered));
        let younger = AcceptedKidneyRecord {
            donor_age: 50.0,
            ..kap_historical()
        };
        assert!(!kap_qualifies(&younger, &offered));
        let identical = AcceptedKidneyRecord::from_acceptance(&offered, Timestamp::from_minutes(0), 0);
        assert!(kap_qualifies(&identical, &offered));
    }

    #[test]
    fn rolling_count_examples() {
        let as_of = Timestamp::from_minutes(10 * MINUTES_PER_YEAR);
        assert_eq!(
            rolling_count(&[], as_of, HistoryWindow::ONE_YEAR, &Predicate::HigherCit(400)),
            0
        );

        let t = as_of.minutes() - 100 * MINUTES_PER_DAY;
        let mut a = record(t);
        a.cit_minutes = 600;
        let mut b = record(t);
        b.cit_minutes = 300;
        let h = vec![a, b];
        assert_eq!(
            rolling_count(&h, as_of, HistoryWindow::ONE_YEAR, &Predicate::HigherCit(400)),
            1
        );

        // a record exactly at as_of is outside the half-open window
        let at = vec![record(as_of.minutes())];
        assert_eq!(
            rolling_count(&at, as_of, HistoryWindow::ONE_YEAR, &Predicate::HigherCit(0)),
            0
        );
        // and one exactly at the window start is inside
        let start = vec![record(as_of.minutes() - MINUTES_PER_YEAR)];
        assert_eq!(
            rolling_count(&start, as_of, HistoryWindow::ONE_YEAR, &Predicate::HigherCit(0)),
            1
        );
    }

    #[test]
    fn ties_do_not_count_as_higher() {
        let as_of = Timestamp::from_minutes(MINUTES_PER_YEAR);
        let h = vec![record(10)];
        assert_eq!(
            rolling_count(&h, as_of, HistoryWindow::ONE_YEAR, &Predicate::HigherKdri(1.2)),
            0
        );
        assert_eq!(
            rolling_count(&h, as_of, HistoryWindow::ONE_YEAR, &Predicate::HigherKdri(1.19)),
            1
        );
    }

    #[test]
    fn window_years_validated() {
        assert!(HistoryWindow::years(0).is_err());
        assert!(HistoryWindow::years(4).is_err());
        assert_eq!(HistoryWindow::years(2).unwrap(), HistoryWindow::TWO_YEARS);
    }

    #[test]
    fn rate_stats_examples() {
        let fallback = GlobalMeans {
            accepted_kdri: 1.25,
            accepted_age: 47.0,
        };
        let as_of = Timestamp::from_minutes(5 * MINUTES_PER_YEAR);
        let s = center_rate_stats(
            &[],
            as_of,
            WindowOfferCounts {
                received: 100,
                accepted: 5,
            },
            fallback,
        );
        assert_eq!(s.acceptance_rate, 0.05);

        let s = center_rate_stats(&[], as_of, WindowOfferCounts::default(), fallback);
        assert_eq!(s.acceptance_rate, 0.0);
        assert_eq!((s.avg_accepted_kdri, s.avg_accepted_age), (1.25, 47.0));

        let t = as_of.minutes() - 10;
        let h = vec![
            AcceptedKidneyRecord { kdri: 1.1, ..record(t) },
            AcceptedKidneyRecord { kdri: 1.3, ..record(t) },
        ];
        let s = center_rate_stats(
            &h,
            as_of,
            WindowOfferCounts {
                received: 2,
                accepted: 2,
            },
            fallback,
        );
        assert!((s.avg_accepted_kdri - 1.2).abs() < 1e-12);
    }
}
