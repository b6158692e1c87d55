//! Surface-term lexicon behind the keyword extractor and the acceptance
//! synonym check.

use std::path::Path;

use serde::Deserialize;

use crate::spot_search::{CategoryTaxonomy, Facet};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon file: {0}")]
    Parse(String),
    #[error("lexicon entry `{display}`: {facet} label `{label}` is not in the taxonomy")]
    UnknownLabel {
        display: String,
        facet: Facet,
        label: String,
    },
    #[error("lexicon entry `{0}` has no surface terms")]
    NoSurface(String),
}

#[derive(Debug, Deserialize)]
struct TermRow {
    surface: Vec<String>,
    display: String,
    major: Option<String>,
    sub: Option<String>,
    minor: Option<String>,
}

#[derive(Debug, Deserialize)]
struct PlaceRow {
    name: String,
    surface: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct LexiconFile {
    #[serde(default)]
    term: Vec<TermRow>,
    #[serde(default)]
    place: Vec<PlaceRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Each surface form as lowercase word tokens.
    surfaces: Vec<Vec<String>>,
    pub display: String,
    /// Implied (facet, canonical label) pairs in facet order.
    pub labels: Vec<(Facet, String)>,
}

impl LexiconEntry {
    pub fn surfaces(&self) -> impl Iterator<Item = String> + '_ {
        self.surfaces.iter().map(|s| s.join(" "))
    }

    pub fn is_place(&self) -> bool {
        self.labels.iter().all(|(f, _)| *f == Facet::Other)
    }
}

/// A term occurrence found in some text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermMatch<'a> {
    pub entry: &'a LexiconEntry,
    pub token_start: usize,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    taxonomy: CategoryTaxonomy,
}

impl Lexicon {
    pub fn from_toml(text: &str, taxonomy: CategoryTaxonomy) -> Result<Self, LexiconError> {
        let file: LexiconFile = toml::from_str(text).map_err(|e| LexiconError::Parse(e.to_string()))?;
        let mut entries = Vec::new();
        for row in file.term {
            let mut labels = Vec::new();
            for (facet, label) in [
                (Facet::MajorCategory, row.major),
                (Facet::Subcategory, row.sub),
                (Facet::MinorCategory, row.minor),
            ] {
                let Some(label) = label else { continue };
                let canonical = taxonomy
                    .canonical(facet, &label)
                    .ok_or_else(|| LexiconError::UnknownLabel {
                        display: row.display.clone(),
                        facet,
                        label: label.clone(),
                    })?;
                labels.push((facet, canonical));
            }
            entries.push(Self::entry(row.surface, row.display, labels)?);
        }
        for place in file.place {
            let name = text::normalize(&place.name);
            entries.push(Self::entry(place.surface, name.clone(), vec![(Facet::Other, name)])?);
        }
        Ok(Self { entries, taxonomy })
    }

    fn entry(surface: Vec<String>, display: String, labels: Vec<(Facet, String)>) -> Result<LexiconEntry, LexiconError> {
        let surfaces: Vec<Vec<String>> = surface.iter().map(|s| text::words(s)).filter(|w| !w.is_empty()).collect();
        if surfaces.is_empty() {
            return Err(LexiconError::NoSurface(display));
        }
        Ok(LexiconEntry {
            surfaces,
            display,
            labels,
        })
    }

    pub fn load(path: &Path, taxonomy: CategoryTaxonomy) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, taxonomy)
    }

    pub fn builtin() -> Self {
        Self::from_toml(include_str!("../../resources/lexicon.toml"), CategoryTaxonomy::builtin())
            .expect("bundled lexicon is valid")
    }

    pub fn taxonomy(&self) -> &CategoryTaxonomy {
        &self.taxonomy
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    /// Left-to-right, longest-first, non-overlapping term matches.
    pub fn find_terms(&self, input: &str) -> Vec<TermMatch<'_>> {
        let tokens = text::words(input);
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let best = self
                .entries
                .iter()
                .flat_map(|e| e.surfaces.iter().map(move |s| (e, s)))
                .filter(|(_, s)| tokens[i..].starts_with(s))
                .max_by_key(|(_, s)| s.len());
            match best {
                Some((entry, surface)) => {
                    out.push(TermMatch { entry, token_start: i });
                    i += surface.len();
                }
                None => i += 1,
            }
        }
        out
    }

    /// Surface forms that imply the given (facet, label).
    pub fn synonyms(&self, facet: Facet, label: &str) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.labels.iter().any(|(f, l)| *f == facet && l.eq_ignore_ascii_case(label)))
            .flat_map(|e| e.surfaces())
            .collect()
    }

    /// True when `text` mentions the label itself or one of its synonyms.
    pub fn mentions(&self, input: &str, facet: Facet, label: &str) -> bool {
        text::contains_phrase(input, label) || self.synonyms(facet, label).iter().any(|s| text::contains_phrase(input, s))
    }

    /// Phrase for repeating a preference back to the user: the display form
    /// of the first entry implying it that the user actually said, else of
    /// any entry implying it, else the label itself.
    pub fn display_for(&self, facet: Facet, label: &str, said: &str) -> String {
        let implies = |e: &&LexiconEntry| e.labels.iter().any(|(f, l)| *f == facet && l.eq_ignore_ascii_case(label));
        if let Some(m) = self.find_terms(said).into_iter().find(|m| implies(&m.entry)) {
            return m.entry.display.clone();
        }
        self.entries
            .iter()
            .find(implies)
            .map(|e| e.display.clone())
            .unwrap_or_else(|| label.to_string())
    }

    pub fn entry_for_display(&self, display: &str) -> Option<&LexiconEntry> {
        self.entries.iter().find(|e| e.display == display)
    }
}
