use serde::{Deserialize, Serialize};

use super::{CategoryTaxonomy, Facet};
use crate::common_ground::{CommonGroundTree, Preference};

/// Faceted spot query. Serialises with the category headings used in the
/// dialogue logs; empty facets are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    #[serde(rename = "Major Category", default, skip_serializing_if = "Vec::is_empty")]
    pub major_categories: Vec<String>,
    #[serde(rename = "Subcategory", default, skip_serializing_if = "Vec::is_empty")]
    pub subcategories: Vec<String>,
    #[serde(rename = "Minor Category", default, skip_serializing_if = "Vec::is_empty")]
    pub minor_categories: Vec<String>,
    #[serde(rename = "Other", default, skip_serializing_if = "Vec::is_empty")]
    pub other: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("{facet} label `{label}` is not in the taxonomy")]
    UnknownLabel { facet: Facet, label: String },
    #[error("duplicate {facet} entry `{label}`")]
    Duplicate { facet: Facet, label: String },
    #[error("empty {0} entry")]
    Empty(Facet),
}

impl SearchQuery {
    pub fn facet(&self, facet: Facet) -> &[String] {
        match facet {
            Facet::MajorCategory => &self.major_categories,
            Facet::Subcategory => &self.subcategories,
            Facet::MinorCategory => &self.minor_categories,
            Facet::Other => &self.other,
        }
    }

    fn facet_mut(&mut self, facet: Facet) -> &mut Vec<String> {
        match facet {
            Facet::MajorCategory => &mut self.major_categories,
            Facet::Subcategory => &mut self.subcategories,
            Facet::MinorCategory => &mut self.minor_categories,
            Facet::Other => &mut self.other,
        }
    }

    pub fn is_empty(&self) -> bool {
        Facet::ALL.iter().all(|f| self.facet(*f).is_empty())
    }

    /// Group preferences by facet, keeping first-seen order and dropping
    /// case-insensitive repeats.
    pub fn from_preferences<'a>(prefs: impl IntoIterator<Item = &'a Preference>) -> Self {
        let mut query = Self::default();
        for pref in prefs {
            let list = query.facet_mut(pref.facet());
            if !list.iter().any(|v| v.eq_ignore_ascii_case(pref.value())) {
                list.push(pref.value().to_string());
            }
        }
        query
    }

    pub fn validate(&self, taxonomy: &CategoryTaxonomy) -> Result<(), QueryError> {
        for facet in Facet::ALL {
            let list = self.facet(facet);
            for (i, label) in list.iter().enumerate() {
                if label.trim().is_empty() {
                    return Err(QueryError::Empty(facet));
                }
                if list[..i].iter().any(|prev| prev.eq_ignore_ascii_case(label)) {
                    return Err(QueryError::Duplicate {
                        facet,
                        label: label.clone(),
                    });
                }
                if facet.is_categorical() && !taxonomy.contains(facet, label) {
                    return Err(QueryError::UnknownLabel {
                        facet,
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Compile the active common-ground branch into a query.
pub fn build_query(tree: &CommonGroundTree) -> SearchQuery {
    SearchQuery::from_preferences(tree.active_preferences())
}
