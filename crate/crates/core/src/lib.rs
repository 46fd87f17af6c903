//! Cut values, criterion functions and integral identities for planar
//! domains bounded by piecewise-C² curves.

// `!(x > 0.0)` deliberately treats NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cutlocus;
pub mod distfield;
pub mod error;
pub mod geom;
pub mod integrals;
pub mod mk;
pub mod numeric;
pub mod projection;
pub mod symmetry;
pub mod web;

pub use boundary::{BoundaryCurve, BoundaryPoint, CornerInfo};
pub use error::{Error, Result};
pub use geom::{Similarity, Vec2};
