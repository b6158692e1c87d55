use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The four query facets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    MajorCategory,
    Subcategory,
    MinorCategory,
    Other,
}

impl Facet {
    pub const ALL: [Facet; 4] = [
        Facet::MajorCategory,
        Facet::Subcategory,
        Facet::MinorCategory,
        Facet::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::MajorCategory => "major_category",
            Facet::Subcategory => "subcategory",
            Facet::MinorCategory => "minor_category",
            Facet::Other => "other",
        }
    }

    /// Whether values of this facet must be taxonomy labels.
    pub fn is_categorical(self) -> bool {
        self != Facet::Other
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Facet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "major_category" | "major" => Ok(Facet::MajorCategory),
            "subcategory" | "sub_category" | "sub" => Ok(Facet::Subcategory),
            "minor_category" | "minor" => Ok(Facet::MinorCategory),
            "other" => Ok(Facet::Other),
            _ => Err(format!("unknown facet `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("taxonomy file: {0}")]
    Parse(String),
    #[error("subcategory `{label}` names unknown parent `{parent}`")]
    UnknownParent { label: String, parent: String },
    #[error("duplicate {tier} label `{label}`")]
    Duplicate { tier: &'static str, label: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcategoryLabel {
    pub label: String,
    pub parent: String,
}

#[derive(Debug, Deserialize)]
struct TaxonomyFile {
    major: Vec<String>,
    #[serde(default)]
    sub: Vec<SubcategoryLabel>,
    #[serde(default)]
    minor: Vec<String>,
}

/// Three-tier category label set. Lookups are case-insensitive and return
/// the canonical spelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTaxonomy {
    major: Vec<String>,
    sub: Vec<SubcategoryLabel>,
    minor: Vec<String>,
}

fn check_unique<'a>(tier: &'static str, labels: impl Iterator<Item = &'a String>) -> Result<(), TaxonomyError> {
    let mut seen = std::collections::HashSet::new();
    for label in labels {
        if !seen.insert(label.to_lowercase()) {
            return Err(TaxonomyError::Duplicate {
                tier,
                label: label.clone(),
            });
        }
    }
    Ok(())
}

impl CategoryTaxonomy {
    pub fn new(major: Vec<String>, sub: Vec<SubcategoryLabel>, minor: Vec<String>) -> Result<Self, TaxonomyError> {
        let norm = |v: Vec<String>| v.into_iter().map(|s| crate::text::normalize(&s)).collect::<Vec<_>>();
        let major = norm(major);
        let minor = norm(minor);
        let sub: Vec<_> = sub
            .into_iter()
            .map(|s| SubcategoryLabel {
                label: crate::text::normalize(&s.label),
                parent: crate::text::normalize(&s.parent),
            })
            .collect();
        check_unique("major", major.iter())?;
        check_unique("sub", sub.iter().map(|s| &s.label))?;
        check_unique("minor", minor.iter())?;
        for s in &sub {
            if !major.iter().any(|m| m.eq_ignore_ascii_case(&s.parent)) {
                return Err(TaxonomyError::UnknownParent {
                    label: s.label.clone(),
                    parent: s.parent.clone(),
                });
            }
        }
        Ok(Self { major, sub, minor })
    }

    pub fn from_toml(text: &str) -> Result<Self, TaxonomyError> {
        let file: TaxonomyFile = toml::from_str(text).map_err(|e| TaxonomyError::Parse(e.to_string()))?;
        Self::new(file.major, file.sub, file.minor)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaxonomyError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The bundled sightseeing taxonomy.
    pub fn builtin() -> Self {
        Self::from_toml(include_str!("../../resources/taxonomy.toml")).expect("bundled taxonomy is valid")
    }

    pub fn major(&self) -> &[String] {
        &self.major
    }

    pub fn sub(&self) -> &[SubcategoryLabel] {
        &self.sub
    }

    pub fn minor(&self) -> &[String] {
        &self.minor
    }

    /// Canonical label for `value` in the given tier. `Other` accepts any
    /// non-empty term.
    pub fn canonical(&self, facet: Facet, value: &str) -> Option<String> {
        let value = crate::text::normalize(value);
        let find = |mut labels: Box<dyn Iterator<Item = &String> + '_>| {
            labels.find(|l| l.eq_ignore_ascii_case(&value)).cloned()
        };
        match facet {
            Facet::MajorCategory => find(Box::new(self.major.iter())),
            Facet::Subcategory => find(Box::new(self.sub.iter().map(|s| &s.label))),
            Facet::MinorCategory => find(Box::new(self.minor.iter())),
            Facet::Other => (!value.is_empty()).then_some(value),
        }
    }

    pub fn contains(&self, facet: Facet, value: &str) -> bool {
        self.canonical(facet, value).is_some()
    }

    pub fn parent_of(&self, sub_label: &str) -> Option<&str> {
        self.sub
            .iter()
            .find(|s| s.label.eq_ignore_ascii_case(sub_label))
            .map(|s| s.parent.as_str())
    }

    /// Human-readable listing used in prompts.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        out.push_str("major_category: ");
        out.push_str(&self.major.join("; "));
        out.push_str("\nsubcategory: ");
        out.push_str(&self.sub.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join("; "));
        out.push_str("\nminor_category: ");
        out.push_str(&self.minor.join("; "));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_table_one_labels() {
        let t = CategoryTaxonomy::builtin();
        assert!(t.contains(Facet::MajorCategory, "Sightseeing"));
        assert!(t.contains(Facet::Subcategory, "Sightseeing -- Shrines and Temples"));
        assert!(t.contains(Facet::MinorCategory, "Buildings and Historical Sites -- Historical Buildings"));
        assert!(t.contains(Facet::Subcategory, "Recreation -- Theme Park"));
        assert_eq!(t.parent_of("Recreation -- Theme Park"), Some("Recreation"));
        assert_eq!(t.canonical(Facet::MajorCategory, " sightseeing "), Some("Sightseeing".into()));
    }

    #[test]
    fn subcategory_parent_must_exist() {
        let err = CategoryTaxonomy::new(
            vec!["Sightseeing".into()],
            vec![SubcategoryLabel {
                label: "Recreation -- Zoo".into(),
                parent: "Recreation".into(),
            }],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, TaxonomyError::UnknownParent { .. }));
    }

    #[test]
    fn labels_unique_within_tier() {
        let err = CategoryTaxonomy::new(vec!["A".into(), "a".into()], vec![], vec![]).unwrap_err();
        assert!(matches!(err, TaxonomyError::Duplicate { tier: "major", .. }));
    }

    #[test]
    fn facet_names_parse() {
        assert_eq!("major_category".parse::<Facet>(), Ok(Facet::MajorCategory));
        assert_eq!("Minor Category".parse::<Facet>(), Ok(Facet::MinorCategory));
        assert!("colour".parse::<Facet>().is_err());
    }
}
