//! Attribution-based global explanations: the table, its encodings, row
//! filtering, and Shapley routines used to produce ground-truth tables.

pub(crate) mod filter;
mod io;
mod shapley;
mod table;

pub use filter::{filter_rows, FilterError, RowView};
pub use io::{load_table, parse_csv, parse_json, to_csv, to_json, TableFormat};
pub use shapley::{
    brute_force_shapley, exact_shapley_linear, Coalition, LinearExplanation, LinearModel, ShapleyError,
    MAX_BRUTE_FORCE_FEATURES,
};
pub use table::{EfficiencyWarning, ExplanationTable, FeatureKind, FeatureMeta, FeatureValue, Row};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("duplicate row id `{0}`")]
    DuplicateRowId(String),
    #[error("table has no rows")]
    EmptyTable,
}
