//! Shared helpers for the integration-test suites: seeded random instances
//! and independently hand-coded reference formulas for the four-level model.
//!
//! Each test target compiles this module independently, so not every helper
//! is used by every target.
#![allow(dead_code)]

use cpdyn::hamiltonian::{classical_hamiltonian, TwoQubitCoefficients};
use cpdyn::{AmplitudeVector, C64, EnergyUnit, HermitianOperator, ProjectiveState};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}

/// Random unit-norm amplitude vector with entries drawn uniformly from the
/// complex square `[-1, 1]^2`, rejecting nearly-zero draws.
pub fn random_unit_amplitudes(rng: &mut ChaCha8Rng, n: usize) -> AmplitudeVector {
    loop {
        let raw = DVector::from_fn(n, |_, _| C64::new(uniform(rng), uniform(rng)));
        if raw.norm() > 0.2 {
            return AmplitudeVector::normalized(raw).expect("normalizable draw");
        }
    }
}

/// Random projective state charted at the dominant level.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ProjectiveState {
    let amps = random_unit_amplitudes(rng, n);
    let pivot = amps
        .amps()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i)
        .unwrap();
    amps.to_projective(pivot).expect("dominant level is nonzero")
}

/// Random dense Hermitian operator with entries of order one.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
    let a = DMatrix::from_fn(n, n, |_, _| C64::new(uniform(rng), uniform(rng)));
    let herm = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::new(herm, EnergyUnit::Dimensionless).expect("hermitized matrix")
}

pub fn random_coefficients(rng: &mut ChaCha8Rng) -> TwoQubitCoefficients {
    TwoQubitCoefficients::new(
        2.0 * uniform(rng),
        2.0 * uniform(rng),
        2.0 * uniform(rng),
        2.0 * uniform(rng),
        2.0 * uniform(rng),
    )
}

/// The bundled four-level initial state (amplitudes sqrt(0.4), sqrt(0.4), 0,
/// sqrt(0.2)).
pub fn entangled_amplitudes() -> AmplitudeVector {
    AmplitudeVector::new(DVector::from_vec(vec![
        C64::new(0.4f64.sqrt(), 0.0),
        C64::new(0.4f64.sqrt(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.2f64.sqrt(), 0.0),
    ]))
    .unwrap()
}

/// Hand-coded conjugate gradient of the classical four-level Hamiltonian in
/// the last-level chart, written out term by term as an independent check on
/// the generic matrix-product implementation. Requires `state.pivot() == 3`.
pub fn reference_four_level_gradient(
    c: &TwoQubitCoefficients,
    state: &ProjectiveState,
) -> DVector<C64> {
    assert_eq!(state.pivot(), 3, "reference formulas live in the last-level chart");
    let x = state.coords();
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let nf = state.normalization_factor();
    let i = C64::new(0.0, 1.0);
    let (c1, c2, c3, c4, c5) = (c.c1, c.c2, c.c3, c.c4, c.c5);

    // Numerator D of the classical Hamiltonian H = D / nf.
    let d = C64::new(
        c1 * (x0.norm_sqr() + x1.norm_sqr() - x2.norm_sqr() - 1.0),
        0.0,
    ) + (x2 * x0.conj() + x1.conj() + x2.conj() * x0 + x1) * c2
        + i * c3 * (-x2 * x0.conj() - x1.conj() + x2.conj() * x0 + x1)
        + (-x0.conj() + x2 * x1.conj() + x1 * x2.conj() - x0) * c4
        + i * c5 * (-x0.conj() + x2 * x1.conj() - x1 * x2.conj() + x0);

    let nf2 = nf * nf;
    let g0 = ((x0 * c1 + x2 * c2 - i * c3 * x2 - C64::new(c4, c5)) * nf - d * x0) / nf2;
    let g1 = ((x1 * c1 + C64::new(c2, -c3) + x2 * c4 + i * c5 * x2) * nf - d * x1) / nf2;
    let g2 = ((-x2 * c1 + x0 * c2 + i * c3 * x0 + x1 * c4 - i * c5 * x1) * nf - d * x2) / nf2;
    DVector::from_vec(vec![g0, g1, g2])
}

/// Central-difference approximation of the conjugate gradient: for a real
/// function of complex coordinates `x = u + iv`, the conjugate derivative is
/// `(dH/du + i dH/dv) / 2`, evaluated here by symmetric differences of the
/// classical Hamiltonian in each real direction.
pub fn finite_difference_gradient(
    h: &HermitianOperator,
    state: &ProjectiveState,
    step: f64,
) -> DVector<C64> {
    let m = state.dim() - 1;
    let value_at = |coords: DVector<C64>| -> f64 {
        let s = ProjectiveState::new(coords, state.pivot()).expect("perturbed chart point");
        classical_hamiltonian(h, &s).expect("matching dimensions")
    };
    DVector::from_fn(m, |k, _| {
        let mut plus = state.coords().clone();
        let mut minus = state.coords().clone();
        plus[k] += C64::new(step, 0.0);
        minus[k] -= C64::new(step, 0.0);
        let du = (value_at(plus) - value_at(minus)) / (2.0 * step);
        let mut plus = state.coords().clone();
        let mut minus = state.coords().clone();
        plus[k] += C64::new(0.0, step);
        minus[k] -= C64::new(0.0, step);
        let dv = (value_at(plus) - value_at(minus)) / (2.0 * step);
        C64::new(du / 2.0, dv / 2.0)
    })
}
