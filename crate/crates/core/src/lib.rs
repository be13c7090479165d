//! Forward and inverse toolkit for transient heat conduction in an insulated
//! homogeneous rod whose ends are held at fixed temperatures.
//!
//! The governing problem is `u_t = α² u_xx` on `0 < x < l`, with `u(0, t) = k₁`,
//! `u(l, t) = k₂` and `u(x, 0) = Φ(x)`.
//!
//! - [`model`]: steady profile, Fourier coefficients, and the series solutions for
//!   temperature and for its sensitivity `S = ∂u/∂α²`.
//! - [`fdsolver`]: explicit forward-time centered-space lattices for both problems.
//! - [`estimator`]: synthetic measurements, the least-squares objective, the
//!   diffusivity estimator and catalog-based material identification.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod fdsolver;
pub mod golden;
pub mod model;

pub use error::{Error, Result};
pub use estimator::{
    estimate_diffusivity, identify_material, objective, simulate_measurements, EstimationResult,
    Forward, Identification, MaterialCatalog, MeasurementSet,
};
pub use fdsolver::{
    sample_field, solve_sensitivity, solve_temperature, stability_parameter, Field, FieldKind,
    GridSpec, StabilityReport,
};
pub use model::{
    analytic_sensitivity, analytic_temperature, fourier_coefficients, steady_state_profile,
    AnalyticSolution, InitialProfile, ProblemSpec, SeriesControl, SeriesValue,
};
