//! Surface-wave propagation on porous reconfigurable surfaces: material
//! model, cavity lattices, a 2D FDTD solver and field analysis.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bessel;
pub mod cli;
pub mod design;
pub mod geometry;
pub mod material;
pub mod oracle;
pub mod sim;
pub mod svg;
