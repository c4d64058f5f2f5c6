//! Coplanar 4-uniform hypergraphs on point sets of `F_q^3` with many edges
//! and small maximum degrees.

mod build;
mod chernoff;
mod constants;
mod generate;
mod hypergraph;
mod layout;
mod plan;
mod stats;

pub use build::{
    attempt_seed, attempt_stats, build_case, build_case1, build_case21, build_case22,
    build_dense, build_supersat, build_supersat_report, build_with_plan, ratios, recount,
    verify_bounds, Attempt, Provenance, Report,
};
pub use chernoff::{chernoff_tail_bound, two_sided_constant};
pub use constants::{ConstructionConstants, CALIBRATED_DEGREE, CALIBRATED_SIZE};
pub use generate::expected_draws;
pub use hypergraph::{degree_profile, DegreeIndex, SupersatHypergraph};
pub use plan::{choose_case, count_coplanar, plan_for_case, scan_family_b, Case, CasePlan};
pub use stats::DegreeStats;
