//! Faceted spot search over a local POI file.

mod poi;
mod query;
mod search;
mod taxonomy;

pub use poi::{load_spot_database, LoadError, SpotDatabase, SpotRecord, COLUMNS};
pub use query::{build_query, QueryError, SearchQuery};
pub use search::{score_record, search_spots, search_spots_weighted, Hit, ScoreWeights, DEFAULT_LIMIT};
pub use taxonomy::{CategoryTaxonomy, Facet, SubcategoryLabel, TaxonomyError};
