use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};

/// Strong Kleene truth value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthValue {
    False,
    Unknown,
    True,
}

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [TruthValue::True, TruthValue::False, TruthValue::Unknown];

    pub fn and(self, other: TruthValue) -> TruthValue {
        // with False < Unknown < True, conjunction is the minimum
        self.min(other)
    }

    pub fn or(self, other: TruthValue) -> TruthValue {
        self.max(other)
    }

    pub fn is_known(self) -> bool {
        self != TruthValue::Unknown
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            TruthValue::True => Some(true),
            TruthValue::False => Some(false),
            TruthValue::Unknown => None,
        }
    }

    /// `self` carries at least as much information as `other` and agrees with it.
    pub fn refines(self, other: TruthValue) -> bool {
        other == TruthValue::Unknown || self == other
    }
}

impl Not for TruthValue {
    type Output = TruthValue;

    fn not(self) -> TruthValue {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            TruthValue::Unknown => TruthValue::Unknown,
        }
    }
}

impl From<bool> for TruthValue {
    fn from(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

impl From<Option<bool>> for TruthValue {
    fn from(b: Option<bool>) -> Self {
        b.map_or(TruthValue::Unknown, TruthValue::from)
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::True => "true",
            TruthValue::False => "false",
            TruthValue::Unknown => "unknown",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::TruthValue::{self, False as F, True as T, Unknown as U};

    // Oracle: Kleene tables written out by hand.
    const AND: [(TruthValue, TruthValue, TruthValue); 9] = [
        (T, T, T),
        (T, F, F),
        (T, U, U),
        (F, T, F),
        (F, F, F),
        (F, U, F),
        (U, T, U),
        (U, F, F),
        (U, U, U),
    ];
    const OR: [(TruthValue, TruthValue, TruthValue); 9] = [
        (T, T, T),
        (T, F, T),
        (T, U, T),
        (F, T, T),
        (F, F, F),
        (F, U, U),
        (U, T, T),
        (U, F, U),
        (U, U, U),
    ];

    #[test]
    fn conjunction_table() {
        for (a, b, expected) in AND {
            assert_eq!(a.and(b), expected, "{a} && {b}");
        }
    }

    #[test]
    fn disjunction_table() {
        for (a, b, expected) in OR {
            assert_eq!(a.or(b), expected, "{a} || {b}");
        }
    }

    #[test]
    fn negation_table() {
        assert_eq!(!T, F);
        assert_eq!(!F, T);
        assert_eq!(!U, U);
    }

    #[test]
    fn de_morgan() {
        for a in TruthValue::ALL {
            for b in TruthValue::ALL {
                assert_eq!(!(a.and(b)), (!a).or(!b));
            }
        }
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&U).unwrap(), "\"unknown\"");
        assert_eq!(serde_json::from_str::<TruthValue>("\"true\"").unwrap(), T);
    }
}
