// Index loops mirror the component/mode formulas; `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod diagnostics;
pub mod eig;
pub mod experiment;
pub mod integrator;
pub mod linear;
pub mod model;
pub mod spectral;
