//! Classical Hamiltonian dynamics of N-level quantum systems on complex
//! projective space CP^{N-1}.
//!
//! An N-level pure quantum state, up to normalization and global phase, is a
//! point of CP^{N-1}. In an affine chart (coordinates `x^j = a^j / a_pivot`)
//! the Schrödinger equation becomes Hamilton's equations for the classical
//! Hamiltonian `H_S = <psi|H|psi>` with the symplectic structure derived from
//! the Kähler potential `K = log(1 + sum |x|^2)`. This crate implements:
//!
//! - the chart machinery (conversions, normalization, chart switching) in
//!   [`projective`];
//! - Hamiltonian construction (generic Hermitian matrices, a two-qubit Pauli
//!   combination, a bundled seven-site exciton-transfer matrix) and the
//!   analytic gradient of `H_S` in [`hamiltonian`];
//! - isolated and damped equations of motion with an adaptive embedded
//!   Runge-Kutta integrator in [`dynamics`]; the damping is the memoryless
//!   (Markovian) limit of a classical harmonic bath;
//! - direct simulation of the system coupled to explicitly discretized bath
//!   oscillators (Ohmic spectral density with an exponential cutoff) in
//!   [`bath`], used to validate the Markovian reduction;
//! - a reference Schrödinger integrator in [`oracle`] certifying that the
//!   isolated classical flow reproduces the quantum populations exactly;
//! - observables (populations, two-qubit population imbalance and
//!   concurrence, energy, time averages) in [`observables`];
//! - scenario configs, parameter sweeps, CSV output and plot-script emission
//!   in [`scenario`], which back the `cpdyn` command-line tool.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
mod ode;
pub mod observables;
pub mod oracle;
pub mod projective;
pub mod scenario;

pub use error::{Error, Result};
pub use hamiltonian::{EnergyUnit, HermitianOperator, TwoQubitCoefficients};
pub use projective::{AmplitudeVector, ProjectiveState};

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Conversion factor from wavenumbers (cm^-1) to angular frequency in rad/ps:
/// `omega = 2 * pi * c * nu` with `c = 2.99792458e-2` cm/ps.
pub const CM_INV_TO_RAD_PER_PS: f64 = 2.0 * std::f64::consts::PI * 2.99792458e-2;
