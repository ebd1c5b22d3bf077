//! Reference Schrödinger integrator for the full N-level quantum system.
//!
//! The isolated classical flow on CP^{N-1} must reproduce quantum populations
//! exactly; this module provides the independent quantum side of that
//! comparison. The default propagation path diagonalizes the Hamiltonian once
//! and applies the exact phase evolution `a(t) = V exp(-i L t) V^dag a(0)`,
//! which is accurate to diagonalization roundoff; an adaptive Runge-Kutta
//! path is available as a fallback for large systems and as a cross-check.

use nalgebra::DVector;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::HermitianOperator;
use crate::ode::{self, AdaptiveOptions, PostStep};
use crate::projective::AmplitudeVector;
use crate::C64;

/// Largest dimension propagated by eigendecomposition before the adaptive
/// Runge-Kutta fallback takes over.
const EIGEN_DIM_LIMIT: usize = 64;

/// Amplitudes sampled on a uniform time grid, with the quantum energy
/// expectation per sample (in internal angular-frequency units).
#[derive(Debug, Clone)]
pub struct AmplitudeTrajectory {
    times: Vec<f64>,
    amplitudes: Vec<AmplitudeVector>,
    energy: Vec<f64>,
}

impl AmplitudeTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amplitudes(&self) -> &[AmplitudeVector] {
        &self.amplitudes
    }

    /// Energy expectation `<a|H|a>` per sample.
    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Level populations `|a^i|^2` of an amplitude vector; they sum to 1.
pub fn populations_from_amplitudes(a: &AmplitudeVector) -> DVector<f64> {
    DVector::from_fn(a.dim(), |i, _| a.amps()[i].norm_sqr())
}

/// Solves `i da/dt = H a` (hbar = 1) on the uniform sample grid.
///
/// Wavenumber-tagged Hamiltonians are converted to rad/ps at entry. Systems
/// up to dimension 64 are propagated exactly by eigendecomposition; larger
/// ones fall back to the adaptive Runge-Kutta path with `cfg` tolerances.
pub fn integrate_schrodinger(
    h: &HermitianOperator,
    initial: &AmplitudeVector,
    t_final: f64,
    sample_dt: f64,
    cfg: &IntegratorConfig,
) -> Result<AmplitudeTrajectory> {
    let ham = h.in_internal_units();
    check_dims(&ham, initial)?;
    if ham.dim() <= EIGEN_DIM_LIMIT {
        integrate_by_eigendecomposition(&ham, initial, t_final, sample_dt)
    } else {
        integrate_schrodinger_rk(h, initial, t_final, sample_dt, cfg)
    }
}

fn check_dims(ham: &HermitianOperator, initial: &AmplitudeVector) -> Result<()> {
    if ham.dim() != initial.dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs. amplitude dimension",
            expected: initial.dim(),
            found: ham.dim(),
        });
    }
    Ok(())
}

fn integrate_by_eigendecomposition(
    ham: &HermitianOperator,
    initial: &AmplitudeVector,
    t_final: f64,
    sample_dt: f64,
) -> Result<AmplitudeTrajectory> {
    let grid = ode::sample_grid(t_final, sample_dt)?;
    let eigen = ham.matrix().clone().symmetric_eigen();
    let v = &eigen.eigenvectors;
    let lambda = &eigen.eigenvalues;
    let projected = v.adjoint() * initial.amps();

    let mut out = AmplitudeTrajectory {
        times: Vec::with_capacity(grid.len()),
        amplitudes: Vec::with_capacity(grid.len()),
        energy: Vec::with_capacity(grid.len()),
    };
    let mut phased = projected.clone();
    for &t in &grid {
        for i in 0..phased.len() {
            phased[i] = projected[i] * C64::from_polar(1.0, -lambda[i] * t);
        }
        let amps = v * &phased;
        push_sample(&mut out, ham, t, amps)?;
    }
    Ok(out)
}

/// The adaptive Runge-Kutta propagation path, exposed for cross-checking
/// against the eigendecomposition path.
pub fn integrate_schrodinger_rk(
    h: &HermitianOperator,
    initial: &AmplitudeVector,
    t_final: f64,
    sample_dt: f64,
    cfg: &IntegratorConfig,
) -> Result<AmplitudeTrajectory> {
    let ham = h.in_internal_units();
    check_dims(&ham, initial)?;
    let grid = ode::sample_grid(t_final, sample_dt)?;
    let n = ham.dim();

    let mut y0 = DVector::zeros(2 * n);
    for i in 0..n {
        y0[i] = initial.amps()[i].re;
        y0[n + i] = initial.amps()[i].im;
    }

    let mut out = AmplitudeTrajectory {
        times: Vec::with_capacity(grid.len()),
        amplitudes: Vec::with_capacity(grid.len()),
        energy: Vec::with_capacity(grid.len()),
    };

    let matrix = ham.matrix().clone();
    let rhs = |_t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| -> Result<()> {
        let a = DVector::from_fn(n, |i, _| C64::new(y[i], y[n + i]));
        let ha = &matrix * a;
        for i in 0..n {
            // da/dt = -i H a.
            dy[i] = ha[i].im;
            dy[n + i] = -ha[i].re;
        }
        Ok(())
    };

    let opts = AdaptiveOptions {
        abs_tol: cfg.abs_tol,
        rel_tol: cfg.rel_tol,
        h_initial: cfg.dt_initial,
        h_max: cfg.dt_max,
    };
    let ham_ref = &ham;
    let out_ref = &mut out;
    ode::integrate_adaptive(
        rhs,
        y0,
        &grid,
        &opts,
        move |t, y| {
            let amps = DVector::from_fn(n, |i, _| C64::new(y[i], y[n + i]));
            push_sample(out_ref, ham_ref, t, amps)
        },
        |_t, _y| Ok(PostStep::Unchanged),
    )?;
    Ok(out)
}

fn push_sample(
    out: &mut AmplitudeTrajectory,
    ham: &HermitianOperator,
    t: f64,
    amps: DVector<C64>,
) -> Result<()> {
    let energy = amps.dotc(&(ham.matrix() * &amps)).re;
    let a = AmplitudeVector::from_parts_trusted(amps);
    out.times.push(t);
    out.amplitudes.push(a);
    out.energy.push(energy);
    Ok(())
}
