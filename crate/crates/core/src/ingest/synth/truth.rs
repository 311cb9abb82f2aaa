//! The ground-truth acceptance model used by the generator.

use serde::{Deserialize, Serialize};

use crate::features::{col, layout};

/// One input of the ground-truth logit: a raw canonical feature or a fixed
/// transform of features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Feature(usize),
    /// `max(0, distance - 500) / 1000`
    DistanceOver500,
    CitHours,
    /// `max(0, kdri - center_avg_accepted_kdri - 0.6)`
    KdriGapOver06,
    Log1pHigherKdri2y,
    Log1pHigherCit2y,
    Log1pKapEligible2y,
    /// `ln(patient_count / 1000)`, with the count floored at 1.
    LogPatientCount,
}

const DERIVED: &[(&str, Term)] = &[
    ("distance_over_500_per_1000mi", Term::DistanceOver500),
    ("cit_hours", Term::CitHours),
    ("kdri_gap_over_0_6", Term::KdriGapOver06),
    ("log1p_higher_kdri_acceptances_2y", Term::Log1pHigherKdri2y),
    ("log1p_higher_cit_acceptances_2y", Term::Log1pHigherCit2y),
    ("log1p_kap_eligible_acceptances_2y", Term::Log1pKapEligible2y),
    ("log_patient_count_over_1000", Term::LogPatientCount),
];

impl Term {
    pub fn parse(name: &str) -> Option<Term> {
        DERIVED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, t)| t)
            .or_else(|| layout().index_of(name).map(Term::Feature))
    }

    /// Value of the term on a canonical feature row.
    pub fn eval(self, row: &[f64]) -> f64 {
        match self {
            Term::Feature(j) => row[j],
            Term::DistanceOver500 => (row[col::DISTANCE] - 500.0).max(0.0) / 1000.0,
            Term::CitHours => row[col::CIT] / 60.0,
            Term::KdriGapOver06 => (row[col::KDRI] - row[col::AVG_ACCEPTED_KDRI] - 0.6).max(0.0),
            Term::Log1pHigherKdri2y => row[col::HIGHER_KDRI_1Y + 1].ln_1p(),
            Term::Log1pHigherCit2y => row[col::HIGHER_CIT_1Y + 1].ln_1p(),
            Term::Log1pKapEligible2y => row[col::KAP_2Y].ln_1p(),
            Term::LogPatientCount => (row[col::PATIENT_COUNT].max(1.0) / 1000.0).ln(),
        }
    }
}

/// Logistic acceptance model over canonical feature rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TruthRepr", into = "TruthRepr")]
pub struct GroundTruth {
    pub intercept: f64,
    /// (term name, weight), sorted by name.
    pub coefficients: Vec<(String, f64)>,
    terms: Vec<(Term, f64)>,
}

#[derive(Serialize, Deserialize)]
struct TruthRepr {
    intercept: f64,
    coefficients: std::collections::BTreeMap<String, f64>,
}

impl From<TruthRepr> for GroundTruth {
    fn from(r: TruthRepr) -> Self {
        GroundTruth::new(r.intercept, r.coefficients)
    }
}

impl From<GroundTruth> for TruthRepr {
    fn from(g: GroundTruth) -> Self {
        TruthRepr {
            intercept: g.intercept,
            coefficients: g.coefficients.into_iter().collect(),
        }
    }
}

impl GroundTruth {
    /// Unknown term names are skipped; config validation rejects them earlier.
    pub fn new(intercept: f64, coefficients: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut coefficients: Vec<(String, f64)> = coefficients.into_iter().collect();
        coefficients.sort_by(|a, b| a.0.cmp(&b.0));
        let terms = coefficients
            .iter()
            .filter_map(|(n, w)| Term::parse(n).map(|t| (t, *w)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        GroundTruth {
            intercept,
            coefficients,
            terms,
        }
    }

    pub fn with_intercept(&self, intercept: f64) -> Self {
        GroundTruth {
            intercept,
            ..self.clone()
        }
    }

    /// Log-odds without the intercept.
    pub fn slope_part(&self, row: &[f64]) -> f64 {
        self.terms.iter().map(|&(t, w)| w * t.eval(row)).sum()
    }

    pub fn logit(&self, row: &[f64]) -> f64 {
        self.intercept + self.slope_part(row)
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.logit(row)).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_resolve_and_evaluate() {
        let l = layout();
        let mut row = vec![0.0; l.len()];
        row[col::DISTANCE] = 1500.0;
        row[col::KDRI] = 1.9;
        row[col::AVG_ACCEPTED_KDRI] = 1.2;
        row[col::PATIENT_COUNT] = 1000.0;
        assert_eq!(Term::parse("distance_over_500_per_1000mi").unwrap().eval(&row), 1.0);
        assert!((Term::parse("kdri_gap_over_0_6").unwrap().eval(&row) - 0.1).abs() < 1e-12);
        assert_eq!(Term::parse("log_patient_count_over_1000").unwrap().eval(&row), 0.0);
        assert_eq!(Term::parse("kdri"), Some(Term::Feature(col::KDRI)));
        assert_eq!(Term::parse("nope"), None);

        let gt = GroundTruth::new(-1.0, [("kdri".to_string(), 2.0)]);
        assert!((gt.logit(&row) - 2.8).abs() < 1e-12);
        assert!(gt.probability(&row) > 0.5);

        let back: GroundTruth = serde_json::from_str(&serde_json::to_string(&gt).unwrap()).unwrap();
        assert_eq!(back, gt);
        assert_eq!(back.logit(&row), gt.logit(&row));
    }
}
