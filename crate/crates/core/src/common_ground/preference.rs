use std::fmt;

use serde::Serialize;

use crate::spot_search::Facet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceStatus {
    Extracted,
    Accepted,
}

/// A user's sightseeing preference on one facet.
///
/// Values are normalised on construction. Acceptance is only granted by the
/// acceptance filter, so there is no public way to build an accepted value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Preference {
    facet: Facet,
    value: String,
    source_turn: usize,
    status: PreferenceStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("preference value for {0} is empty")]
pub struct EmptyPreference(pub Facet);

impl Preference {
    pub fn extracted(facet: Facet, value: &str, source_turn: usize) -> Result<Self, EmptyPreference> {
        let value = crate::text::normalize(value);
        if value.is_empty() {
            return Err(EmptyPreference(facet));
        }
        Ok(Self {
            facet,
            value,
            source_turn,
            status: PreferenceStatus::Extracted,
        })
    }

    pub(crate) fn accepted(mut self) -> Self {
        self.status = PreferenceStatus::Accepted;
        self
    }

    pub fn facet(&self) -> Facet {
        self.facet
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn source_turn(&self) -> usize {
        self.source_turn
    }

    pub fn status(&self) -> PreferenceStatus {
        self.status
    }

    pub fn is_accepted(&self) -> bool {
        self.status == PreferenceStatus::Accepted
    }

    /// Case-insensitive (facet, value) identity.
    pub fn key(&self) -> (Facet, String) {
        (self.facet, self.value.to_lowercase())
    }

    pub fn same_as(&self, other: &Preference) -> bool {
        self.facet == other.facet && self.value.eq_ignore_ascii_case(&other.value)
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.facet, self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_normalized_and_non_empty() {
        let p = Preference::extracted(Facet::Other, "  Kyoto   city ", 0).unwrap();
        assert_eq!(p.value(), "Kyoto city");
        assert_eq!(p.status(), PreferenceStatus::Extracted);
        assert!(Preference::extracted(Facet::Other, "   ", 0).is_err());
    }

    #[test]
    fn identity_ignores_case_and_turn() {
        let a = Preference::extracted(Facet::Other, "Kyoto", 0).unwrap();
        let b = Preference::extracted(Facet::Other, "kyoto", 4).unwrap();
        let c = Preference::extracted(Facet::MajorCategory, "Kyoto", 0).unwrap();
        assert!(a.same_as(&b));
        assert!(!a.same_as(&c));
        assert_eq!(a.key(), b.key());
    }
}
