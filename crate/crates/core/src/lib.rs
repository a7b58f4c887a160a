//! Unit commitment under renewable forecast uncertainty: deterministic,
//! stochastic, robust and Wasserstein distributionally robust models, with
//! an affine-policy variant whose master problem does not grow with the
//! number of samples.
//!
//! Layout follows the data flow: [`system`] data and the error box feed
//! [`uc`] model builders; [`robust`] adds worst-case machinery over boxes;
//! [`wasserstein`] builds the ambiguity set and the exact model; [`affine`]
//! holds the affine-policy model; [`experiments`] generates samples and
//! compares models out of sample.

pub mod affine;
pub mod data;
pub mod experiments;
pub mod instance;
pub mod robust;
pub mod scalar;
pub mod solver;
pub mod synthetic;
pub mod system;
pub mod uc;
pub mod wasserstein;

pub use instance::UcInstance;
pub use scalar::Scalar;
pub use solver::{BackendKind, Model, SolveParams, Solution, Solver};
pub use system::{ErrorVector, ForecastSeries, IntervalBox, SystemData};

/// Physical error box W or a subset of it, in MW.
pub type UncertaintyBox = IntervalBox<f64>;
/// Exact rational box for checking the ambiguity-set algebra.
pub type RationalBox = IntervalBox<num_rational::Rational64>;
