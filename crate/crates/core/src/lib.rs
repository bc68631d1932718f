//! Finite k-graphs, Λ-contractions on finite-dimensional Hilbert spaces,
//! the Popescu, Brehmer-Solel and double-commutativity conditions, and the
//! minimal isometric dilation built from the Poisson transform.

pub mod conditions;
pub mod contraction;
pub mod dilation;
pub mod fixtures;
pub mod io;
pub mod kgraph;
pub mod linalg;
pub mod prodsys;
pub mod report;
pub mod selftest;

pub use conditions::{check_brehmer_solel, check_doubly_commuting, check_kernel_condition, check_popescu, PopescuGrid};
pub use contraction::{check_lambda_contraction, check_tck, check_toeplitz_family, LambdaContraction};
pub use dilation::{dilate, verify_dilation, DilateOptions, Dilation, DilationResult};
pub use kgraph::{KGraph, Path, Shape};
pub use prodsys::NOPoly;
pub use report::Report;
