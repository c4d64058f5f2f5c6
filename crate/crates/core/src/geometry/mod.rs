//! Affine flats of `F_q^d`, explicit point sets and incidence tables.

mod flat;
mod incidence;
mod pointset;

pub use flat::{
    affine_span, enumerate_flats, flats_through, partition_complement_by_planes, punctured_flat,
    Ambient, Flat,
};
pub(crate) use flat::{combinations, span_dim};
pub use incidence::{incidence, Incidence};
pub use pointset::{PointSet, Region};
pub(crate) use pointset::parse_numbers;
