//! Numerical laboratory for commutator kernels in the rational Dunkl setting:
//! reflection geometry, the Dunkl measure and heat kernel, scale/integrated
//! commutator kernels, chamber lifting, Carleson-type testing machinery, and
//! discretized truncated operators.

pub mod bessel;
pub mod chamber_lifting;
pub mod cli;
pub mod dunkl_calculus;
pub mod dunkl_measure;
pub mod error;
pub mod heat_kernel;
pub mod linalg;
pub mod operator_lab;
pub mod quadrature;
pub mod reflection_geometry;
pub mod sampling;
pub mod scale_kernels;
pub mod symbols;
pub mod testing_harness;

pub use error::{LabError, Result};
