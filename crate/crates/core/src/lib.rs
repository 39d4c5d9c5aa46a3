//! Real and complex-contour Gauss discretization of bosonic baths.
//!
//! * [`polyquad`]: real orthonormal polynomials and Gauss rules.
//! * [`cquad`]: complex orthonormal polynomials on the lower unit semicircle.
//! * [`bathmap`]: spectral densities and discrete chain/star baths.
//! * [`models`]: dephasing and gAAH models, effective Hamiltonians,
//!   biorthogonal propagation.
//! * [`oracle`]: memory kernel and a Volterra solver for exact references.
//! * [`analysis`]: averaged survival probability, mobility edge, phase
//!   diagrams and recurrence-onset detection.

pub mod analysis;
pub mod bathmap;
pub mod cquad;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod polyquad;

pub use error::{Error, Result};
pub use num_complex::Complex64;
