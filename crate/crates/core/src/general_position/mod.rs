//! General position: predicates, subset classification, the moment curve
//! and maximum general-position search.

mod classify;
mod search;

pub use classify::{
    classify_subsets, is_degenerate_simplex, is_general_position,
    is_general_position_by_hyperplanes, is_general_position_exhaustive, moment_curve,
    moment_curve_is_general_by_rank, SubsetClassification,
};
pub(crate) use classify::binomial;
pub use search::{
    max_general_position_exact, max_general_position_exact_ordered,
    max_general_position_heuristic, SearchResult,
};
