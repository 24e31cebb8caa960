//! Moments of moments of characteristic polynomials of Haar-random symplectic
//! and even orthogonal matrices, and the matching L-function predictions.

pub mod asymptotics;
pub mod autocorr;
pub mod cli;
pub mod error;
pub mod haar;
pub mod lfunctions;
pub mod montecarlo;
pub mod params;
pub mod series;
pub mod special;
pub mod validation;

pub use error::{MomError, Result};
pub use params::{
    build_mu_assignment, combinatorial_coefficient, enumerate_configurations, leading_exponent, pairing_sets,
    ConfigurationVector, Family, GroupSpec, MomOrder, MuAssignment, PairingSets,
};
pub use series::{MultiSeries, PairKernel, RmtKernel, ZetaKernel};
