//! Finite affine geometry over prime fields: general position, coplanar
//! supersaturation hypergraphs and random point sets in `F_q^3`.

pub mod error;
pub mod ffield;
pub mod general_position;
pub mod geometry;
pub mod par;
pub mod random_model;
pub mod rng;
pub mod supersat;

pub use error::{Error, Result};
pub use ffield::{FieldElement, Point, PrimeField};
pub use geometry::{Ambient, Flat, PointSet};
