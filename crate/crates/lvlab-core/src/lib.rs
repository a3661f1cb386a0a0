//! Numerical laboratory for large-value estimates of Dirichlet polynomials
//! and zero counting of Dirichlet L-functions.

pub mod apps;
pub mod bump;
pub mod characters;
pub mod error;
pub mod jets;
pub mod large_values;
pub mod lfunc;
pub mod poly;
pub mod quad;
pub mod report;
pub mod spectral;
pub mod util;

pub use error::{Error, Result};
pub use num_complex::Complex64;
