//! Numerical toolkit for cosymplectic, k-polysymplectic and
//! k-polycosymplectic geometry on coordinate charts.
//!
//! The crate verifies every defining equation of these structures pointwise
//! (closedness, kernel ranks, contraction identities), runs momentum-map and
//! Marsden-Weinstein reduction pipelines on explicitly parametrized
//! instances, and solves the Hamilton-De Donder-Weyl field equations of the
//! worked examples on grids.

pub mod chart;
pub mod compare;
pub mod config;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod form;
pub mod group;
pub mod instances;
pub mod linalg;
pub mod reduction;
pub mod report;
pub mod structure;

pub use error::{Error, Result};
