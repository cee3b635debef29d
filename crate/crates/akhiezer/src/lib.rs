//! Orthogonal polynomials on several intervals with the multi-interval
//! Chebyshev weight, computed two ways: by quadrature and the Stieltjes
//! procedure, and by theta functions on the associated hyperelliptic curve.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod formulas;
pub mod geometry;
pub mod monodromy;
pub mod numerics;
pub mod opoly;
mod precise;
pub mod quadrature;
pub mod surface;
pub mod theta;
pub mod verify;

pub use geometry::{Endpoint, GeometryError, IntervalSet};
