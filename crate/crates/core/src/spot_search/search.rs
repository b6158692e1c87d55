use serde::{Deserialize, Serialize};

use super::{SearchQuery, SpotDatabase, SpotRecord};

pub const DEFAULT_LIMIT: usize = 5;

/// Points per matched label or term, by facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub major: u32,
    pub sub: u32,
    pub minor: u32,
    pub other: u32,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            major: 3,
            sub: 2,
            minor: 1,
            other: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit<'a> {
    pub record: &'a SpotRecord,
    pub score: u32,
}

fn count_labels(wanted: &[String], have: &[String]) -> u32 {
    wanted
        .iter()
        .filter(|w| have.iter().any(|h| h.eq_ignore_ascii_case(w)))
        .count() as u32
}

fn mentions(record: &SpotRecord, term: &str) -> bool {
    let term = term.to_lowercase();
    record.name.to_lowercase().contains(&term)
        || record.description.to_lowercase().contains(&term)
        || record.location_terms.iter().any(|l| l.to_lowercase().contains(&term))
}

pub fn score_record(query: &SearchQuery, record: &SpotRecord, weights: &ScoreWeights) -> u32 {
    weights.major * count_labels(&query.major_categories, &record.major_categories)
        + weights.sub * count_labels(&query.subcategories, &record.subcategories)
        + weights.minor * count_labels(&query.minor_categories, &record.minor_categories)
        + weights.other * query.other.iter().filter(|t| mentions(record, t)).count() as u32
}

/// Weighted-disjunction search: score desc, id asc, zero scores dropped.
pub fn search_spots_weighted<'a>(
    query: &SearchQuery,
    db: &'a SpotDatabase,
    limit: usize,
    weights: &ScoreWeights,
) -> Vec<Hit<'a>> {
    if query.is_empty() || limit == 0 {
        return Vec::new();
    }
    let mut hits: Vec<Hit<'a>> = db
        .records()
        .iter()
        .filter_map(|record| {
            let score = score_record(query, record, weights);
            (score > 0).then_some(Hit { record, score })
        })
        .collect();
    hits.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.record.id.cmp(&b.record.id)));
    hits.truncate(limit);
    hits
}

pub fn search_spots<'a>(query: &SearchQuery, db: &'a SpotDatabase, limit: usize) -> Vec<Hit<'a>> {
    search_spots_weighted(query, db, limit, &ScoreWeights::default())
}
