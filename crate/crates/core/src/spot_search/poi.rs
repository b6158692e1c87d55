//! Tab-separated spot database file.
//!
//! One record per line after a header naming the nine columns
//! `id name major sub minor description opening_hours fee location_terms`.
//! Multi-value columns (`major`, `sub`, `minor`, `location_terms`) separate
//! their values with `|`. Blank lines and lines starting with `#` are skipped.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CategoryTaxonomy, Facet};

pub const COLUMNS: [&str; 9] = [
    "id",
    "name",
    "major",
    "sub",
    "minor",
    "description",
    "opening_hours",
    "fee",
    "location_terms",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotRecord {
    pub id: String,
    pub name: String,
    pub major_categories: Vec<String>,
    pub subcategories: Vec<String>,
    pub minor_categories: Vec<String>,
    pub description: String,
    pub opening_hours: String,
    pub fee: String,
    pub location_terms: Vec<String>,
}

impl SpotRecord {
    pub fn labels(&self, facet: Facet) -> &[String] {
        match facet {
            Facet::MajorCategory => &self.major_categories,
            Facet::Subcategory => &self.subcategories,
            Facet::MinorCategory => &self.minor_categories,
            Facet::Other => &self.location_terms,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("header must be `{}`, found `{found}`", COLUMNS.join("\t"))]
    Header { found: String },
    #[error("row {row}: field `{field}`: {message}")]
    Malformed {
        row: usize,
        field: &'static str,
        message: String,
    },
    #[error("row {row}: duplicate id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("row {row}: unknown {facet} label `{label}`")]
    UnknownLabel { row: usize, facet: Facet, label: String },
}

/// Immutable spot collection validated against its taxonomy.
#[derive(Debug, Clone)]
pub struct SpotDatabase {
    records: Vec<SpotRecord>,
    taxonomy: CategoryTaxonomy,
}

fn split_multi(raw: &str) -> Vec<String> {
    raw.split('|')
        .map(crate::text::normalize)
        .filter(|v| !v.is_empty())
        .collect()
}

impl SpotDatabase {
    pub fn new(records: Vec<SpotRecord>, taxonomy: CategoryTaxonomy) -> Result<Self, LoadError> {
        let mut seen = HashSet::new();
        for (i, record) in records.iter().enumerate() {
            let row = i + 1;
            if record.id.trim().is_empty() {
                return Err(LoadError::Malformed {
                    row,
                    field: "id",
                    message: "empty".into(),
                });
            }
            if record.name.trim().is_empty() {
                return Err(LoadError::Malformed {
                    row,
                    field: "name",
                    message: "empty".into(),
                });
            }
            if !seen.insert(record.id.clone()) {
                return Err(LoadError::DuplicateId {
                    row,
                    id: record.id.clone(),
                });
            }
            for facet in [Facet::MajorCategory, Facet::Subcategory, Facet::MinorCategory] {
                if let Some(label) = record.labels(facet).iter().find(|l| !taxonomy.contains(facet, l)) {
                    return Err(LoadError::UnknownLabel {
                        row,
                        facet,
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Self { records, taxonomy })
    }

    pub fn parse(text: &str, taxonomy: CategoryTaxonomy) -> Result<Self, LoadError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let Some((_, header)) = lines.next() else {
            return Self::new(Vec::new(), taxonomy);
        };
        let names: Vec<&str> = header.split('\t').map(str::trim).collect();
        if names != COLUMNS {
            return Err(LoadError::Header {
                found: header.to_string(),
            });
        }

        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (row, line) in lines {
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != COLUMNS.len() {
                return Err(LoadError::Malformed {
                    row,
                    field: COLUMNS[cells.len().min(COLUMNS.len() - 1)],
                    message: format!("expected {} tab-separated fields, found {}", COLUMNS.len(), cells.len()),
                });
            }
            let text_field = |idx: usize| crate::text::normalize(cells[idx]);
            let record = SpotRecord {
                id: text_field(0),
                name: text_field(1),
                major_categories: split_multi(cells[2]),
                subcategories: split_multi(cells[3]),
                minor_categories: split_multi(cells[4]),
                description: text_field(5),
                opening_hours: text_field(6),
                fee: text_field(7),
                location_terms: split_multi(cells[8]),
            };
            for (idx, value) in [(0, &record.id), (1, &record.name)] {
                if value.is_empty() {
                    return Err(LoadError::Malformed {
                        row,
                        field: COLUMNS[idx],
                        message: "must not be empty".into(),
                    });
                }
            }
            if !seen.insert(record.id.clone()) {
                return Err(LoadError::DuplicateId { row, id: record.id });
            }
            for facet in [Facet::MajorCategory, Facet::Subcategory, Facet::MinorCategory] {
                if let Some(label) = record.labels(facet).iter().find(|l| !taxonomy.contains(facet, l)) {
                    return Err(LoadError::UnknownLabel {
                        row,
                        facet,
                        label: label.clone(),
                    });
                }
            }
            records.push(record);
        }
        Ok(Self { records, taxonomy })
    }

    pub fn load(path: &Path, taxonomy: CategoryTaxonomy) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, taxonomy)
    }

    /// The bundled twelve-spot Kansai fixture.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../fixtures/spots.tsv"), CategoryTaxonomy::builtin())
            .expect("bundled spot fixture is valid")
    }

    pub fn records(&self) -> &[SpotRecord] {
        &self.records
    }

    pub fn taxonomy(&self) -> &CategoryTaxonomy {
        &self.taxonomy
    }

    pub fn get(&self, id: &str) -> Option<&SpotRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Load a spot file against the bundled taxonomy.
pub fn load_spot_database(path: &Path) -> Result<SpotDatabase, LoadError> {
    SpotDatabase::load(path, CategoryTaxonomy::builtin())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id\tname\tmajor\tsub\tminor\tdescription\topening_hours\tfee\tlocation_terms";

    fn parse(body: &str) -> Result<SpotDatabase, LoadError> {
        SpotDatabase::parse(&format!("{HEADER}\n{body}"), CategoryTaxonomy::builtin())
    }

    #[test]
    fn bundled_fixture_has_twelve_records() {
        assert_eq!(SpotDatabase::builtin().len(), 12);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_is_reported() {
        let row = "a\tA\tSightseeing\t\t\td\th\tf\tKyoto";
        let err = parse(&format!("{row}\n{row}")).unwrap_err();
        match err {
            LoadError::DuplicateId { row, id } => {
                assert_eq!(id, "a");
                assert_eq!(row, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_listed() {
        let err = parse("a\tA\tSpace Travel\t\t\td\th\tf\t").unwrap_err();
        assert!(matches!(err, LoadError::UnknownLabel { ref label, facet: Facet::MajorCategory, row: 2 } if label == "Space Travel"));
    }

    #[test]
    fn malformed_rows_name_row_and_field() {
        let err = parse("a\tA\tSightseeing").unwrap_err();
        assert!(matches!(err, LoadError::Malformed { row: 2, .. }));
        let err = parse("a\t \tSightseeing\t\t\td\th\tf\t").unwrap_err();
        assert!(matches!(err, LoadError::Malformed { row: 2, field: "name", .. }));
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn multi_values_split_on_pipe() {
        let db = parse("a\tA\tSightseeing|Nature\tNature -- Gardens\t\td\th\t\tKyoto | Arashiyama").unwrap();
        let r = &db.records()[0];
        assert_eq!(r.major_categories, vec!["Sightseeing", "Nature"]);
        assert_eq!(r.location_terms, vec!["Kyoto", "Arashiyama"]);
        assert_eq!(r.fee, "");
    }

    #[test]
    fn bad_header_rejected() {
        let err = SpotDatabase::parse("id\tname\n", CategoryTaxonomy::builtin()).unwrap_err();
        assert!(matches!(err, LoadError::Header { .. }));
    }
}
