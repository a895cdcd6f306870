//! Parallel transport frames along curves in E⁴, canal surfaces swept
//! over them, and the full curvature apparatus of those surfaces.

// `!(x > tol)` forms are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod canal;
pub mod config;
pub mod curves;
pub mod error;
pub mod geom;
pub mod meshio;
pub mod ptframe;
pub mod spline;

pub use error::{Error, Result};
pub use geom::{Frame4, Vec4};
