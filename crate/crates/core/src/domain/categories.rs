//! Categorical donor attributes and response codes.
//!
//! Every enum with an `Other`/`Unknown` arm maps unrecognised raw input onto
//! that arm. Enums without one (blood type, gender, CMV, response, airport
//! class) reject unknown input.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A closed set of labelled categories, one-hot encodable.
pub trait Categorical: Copy + Eq + std::fmt::Debug + Send + Sync + 'static {
    /// Every arm, in canonical (one-hot) order.
    const ALL: &'static [Self];

    fn label(self) -> &'static str;

    /// Position of this arm in [`Categorical::ALL`].
    fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).expect("arm listed in ALL")
    }

    /// Exact (case-insensitive, trimmed) label match.
    fn from_label(raw: &str) -> Option<Self> {
        let raw = raw.trim();
        Self::ALL.iter().copied().find(|c| c.label().eq_ignore_ascii_case(raw))
    }

    /// Parse raw input, falling back to the catch-all arm when one exists.
    fn parse_lenient(raw: &str) -> Option<Self>;
}

macro_rules! categorical {
    (@fallback $name:ident, none) => {
        fn parse_lenient(raw: &str) -> Option<Self> {
            <$name as Categorical>::from_label(raw)
        }
    };
    (@fallback $name:ident, $fb:ident) => {
        fn parse_lenient(raw: &str) -> Option<Self> {
            Some(<$name as Categorical>::from_label(raw).unwrap_or($name::$fb))
        }
    };
    (
        $(#[$meta:meta])*
        $name:ident, fallback = $fb:ident { $($variant:ident => $label:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl Categorical for $name {
            const ALL: &'static [Self] = &[$($name::$variant),+];

            fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            categorical!(@fallback $name, $fb);
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.label())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.label())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                <$name as Categorical>::parse_lenient(&raw).ok_or_else(|| {
                    serde::de::Error::custom(format!(
                        "unknown {} value `{}`",
                        stringify!($name),
                        raw
                    ))
                })
            }
        }
    };
}

categorical!(BloodType, fallback = none { O => "O", A => "A", B => "B", AB => "AB" });

categorical!(Ethnicity, fallback = Other {
    White => "White",
    Black => "Black",
    Hispanic => "Hispanic",
    Other => "Other",
});

categorical!(Gender, fallback = none { M => "M", F => "F" });

categorical!(CauseOfDeath, fallback = Other {
    CvdStroke => "CVD_Stroke",
    Anoxia => "Anoxia",
    HeadTrauma => "HeadTrauma",
    Other => "Other",
});

categorical!(DiabetesHistory, fallback = Unsure {
    No => "No",
    Yes0to5 => "Yes0to5",
    Yes6to10 => "Yes6to10",
    YesOver10 => "YesOver10",
    YesUnknownDuration => "YesUnknownDuration",
    Unsure => "Unsure",
});

categorical!(InsulinDependent, fallback = Unknown {
    No => "No",
    Yes => "Yes",
    Unknown => "Unknown",
});

categorical!(
    /// Yes / No / anything else.
    TriState, fallback = Other { No => "No", Yes => "Yes", Other => "Other" }
);

categorical!(Cmv, fallback = none { Positive => "Positive", Negative => "Negative" });

categorical!(Serology, fallback = Other {
    Positive => "Positive",
    Negative => "Negative",
    Other => "Other",
});

categorical!(Fibrosis, fallback = Other {
    Occasional => "Occasional",
    Some => "Some",
    Most => "Most",
    Other => "Other",
});

categorical!(
    /// Four-hour local-time buckets of the offer time.
    TimeOfDay, fallback = none {
        LateNight => "LateNight",
        EarlyMorning => "EarlyMorning",
        Morning => "Morning",
        Noon => "Noon",
        Eve => "Eve",
        Night => "Night",
    }
);

categorical!(Response, fallback = none { Accept => "ACCEPT", Reject => "REJECT" });

categorical!(AirportClass, fallback = none { Medium => "MEDIUM", Large => "LARGE" });

impl DiabetesHistory {
    /// Any "yes" arm, whatever the duration.
    pub fn is_yes(self) -> bool {
        matches!(
            self,
            DiabetesHistory::Yes0to5
                | DiabetesHistory::Yes6to10
                | DiabetesHistory::YesOver10
                | DiabetesHistory::YesUnknownDuration
        )
    }
}

impl TriState {
    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }
}

impl Response {
    pub fn is_accept(self) -> bool {
        self == Response::Accept
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_raw_values_map_to_catch_all() {
        assert_eq!(TriState::parse_lenient("U"), Some(TriState::Other));
        assert_eq!(Ethnicity::parse_lenient("asian"), Some(Ethnicity::Other));
        assert_eq!(DiabetesHistory::parse_lenient(""), Some(DiabetesHistory::Unsure));
        assert_eq!(Serology::parse_lenient("indeterminate"), Some(Serology::Other));
    }

    #[test]
    fn strict_enums_reject_unknown() {
        assert_eq!(BloodType::parse_lenient("Z"), None);
        assert_eq!(Gender::parse_lenient("X"), None);
        assert_eq!(Response::parse_lenient("EXPIRED"), None);
        assert_eq!(Response::parse_lenient(" accept "), Some(Response::Accept));
    }

    #[test]
    fn index_matches_all_order() {
        for (i, c) in Fibrosis::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }
}
