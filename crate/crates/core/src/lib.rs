//! Continuously measured quantum dynamics of driven one-dimensional systems.
//!
//! Three interchangeable backends evolve the same physical model:
//!
//! * [`classical`] integrates Newton's equations, optionally with additive noise;
//! * [`closure`] evolves the Gaussian moment closure of the conditioned Wigner
//!   function (centroid SDEs coupled to the second-moment equations);
//! * [`quantum`] evolves the full conditioned wavefunction on a grid, and a
//!   direct phase-space Wigner integrator used for cross-validation.
//!
//! [`analysis`] turns any backend into stroboscopic maps, divergence curves
//! and Lyapunov estimates, and [`harness`] wires everything to configuration
//! files, CSV/SVG artifacts and the `measured-chaos` command-line tool.

pub mod analysis;
pub mod classical;
pub mod closure;
pub mod error;
pub mod harness;
pub mod noise;
pub mod potentials;
pub mod quantum;
pub mod state;
pub mod units;

pub use error::{Error, Result};
pub use noise::NoiseSource;
pub use potentials::{ForceDerivatives, SystemSpec};
pub use state::{GaussianState, MeasurementConfig, PhaseState};
pub use units::{Scale, UnitMode, UnitSystem};
