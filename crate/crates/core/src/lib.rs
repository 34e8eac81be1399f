//! Numerical laboratory for the 1D wave equation u_tt - u_xx = F(x,t)|u|^p
//! with characteristic weights F: a characteristic-lattice solver with
//! blow-up detection, closed-form lifespan predictions and blow-up
//! certificates, and quadrature checks of the weighted a priori bounds.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apriori;
pub mod data;
pub mod error;
pub mod harness;
pub mod math;
pub mod quadrature;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
