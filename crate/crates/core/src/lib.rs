//! Simulation of quantum gates generated by non-uniform relativistic motion
//! of a cavity.
//!
//! A rigid cavity that alternates between inertial coasting and uniform
//! proper acceleration changes the state of the field it confines. Each
//! junction between the two kinds of motion mixes the field modes by a
//! Bogoliubov transformation; stacking junctions and free-evolution phases
//! composes those transformations into a symplectic operation on the mode
//! quadratures. Repeating a suitably timed trajectory drives a two-mode
//! squeezing resonance: the entanglement between a chosen pair of modes
//! grows linearly with the number of repetitions.
//!
//! The crate is organized bottom-up:
//!
//! * [`scalar`] — the floating-point abstraction the whole crate is generic
//!   over (`f32`, `f64`).
//! * [`geometry`] — cavity geometry and index types.
//! * [`quadrature`] — adaptive Gauss–Legendre integration.
//! * [`modes`] — field modes in the inertial and accelerated charts and the
//!   Klein–Gordon inner product.
//! * [`bogoliubov`] — junction coefficients (quadrature oracle and
//!   first-order extraction) and their composition algebra.
//! * [`cache`] — persistent on-disk store for computed coefficient blocks.
//! * [`symplectic`] — quadrature-space operators, covariance matrices, and
//!   entanglement measures.
//! * [`trajectory`] — piecewise-constant travel scenarios, the segment
//!   pipeline, resonance tools, and closed-form cross-checks.
//! * [`sweep`] — parallel grid scans of the travel scenario durations.
//!
//! Convenience aliases fix the scalar to `f64` for the common case.

pub mod bogoliubov;
pub mod cache;
pub mod geometry;
pub mod modes;
pub mod quadrature;
pub mod scalar;
pub mod sweep;
pub mod symplectic;
pub mod trajectory;

pub use scalar::Real;

/// Cavity geometry with `f64` precision.
pub type Geometry64 = geometry::CavityGeometry<f64>;
/// Quadrature control with `f64` precision.
pub type QuadSpec64 = quadrature::QuadSpec<f64>;
/// Bogoliubov coefficient block with `f64` precision.
pub type Block64 = bogoliubov::BogoliubovBlock<f64>;
/// First-order coefficients with `f64` precision.
pub type FirstOrder64 = bogoliubov::FirstOrderCoeffs<f64>;
/// Symplectic operator with `f64` precision.
pub type Symplectic64 = symplectic::SymplecticOp<f64>;
/// Covariance matrix with `f64` precision.
pub type Covariance64 = symplectic::CovarianceMatrix<f64>;
/// Entanglement report with `f64` precision.
pub type Report64 = symplectic::EntanglementReport<f64>;
/// Travel trajectory with `f64` precision.
pub type Trajectory64 = trajectory::Trajectory<f64>;
/// Trajectory segment with `f64` precision.
pub type Segment64 = trajectory::TrajectorySegment<f64>;
/// Named travel scenario with `f64` precision.
pub type SampleScenario64 = trajectory::SampleScenarioParams<f64>;
/// Scan result with `f64` precision.
pub type SweepResult64 = sweep::SweepResult<f64>;
