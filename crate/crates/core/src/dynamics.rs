//! Equations of motion on CP^{N-1}: isolated Hamiltonian flow, memoryless
//! (Markovian) damping, and trajectory integration with chart switching.
//!
//! The isolated velocity is the inverse symplectic form applied to the
//! gradient of the classical Hamiltonian. Damping adds, per coordinate, the
//! force `2 x^j gamma_j d|x^j|^2/dt`, which contains the velocity itself;
//! writing `xdot = A + B u` with `u_j = 2 Re(conj(x^j) xdot^j)` turns the
//! implicit system into the real linear problem `(I - M) u = b`, solved
//! directly (LU) with optional iterative refinement — not by lagging the
//! derivative one step.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::{classical_hamiltonian, grad_classical_hamiltonian, HermitianOperator};
use crate::ode::{self, AdaptiveOptions, PostStep};
use crate::projective::{AmplitudeVector, ProjectiveState};
use crate::C64;

/// Condition-number bound above which the implicit damping system is treated
/// as numerically singular.
const SINGULAR_CONDITION: f64 = 1e12;

/// Per-coordinate damping constants of the memoryless dissipation model, in
/// units of inverse time.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovianBathSpec {
    gammas: DVector<f64>,
}

impl MarkovianBathSpec {
    /// Wraps per-coordinate damping constants, which must be finite and
    /// non-negative.
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidSpec {
                message: "damping constants must be finite and non-negative".into(),
            });
        }
        Ok(Self {
            gammas: DVector::from_vec(gammas),
        })
    }

    /// Broadcasts a single damping constant to all `coord_count` coordinates.
    pub fn uniform(gamma: f64, coord_count: usize) -> Result<Self> {
        Self::new(vec![gamma; coord_count])
    }

    /// The damping constants, indexed by coordinate slot.
    pub fn gammas(&self) -> &DVector<f64> {
        &self.gammas
    }

    /// Number of coordinates the spec covers.
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    /// True when the spec covers zero coordinates.
    pub fn is_empty(&self) -> bool {
        self.gammas.len() == 0
    }

    /// True when every damping constant is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.gammas.iter().all(|g| *g == 0.0)
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Adaptive embedded Runge-Kutta 5(4) with local error control.
    #[default]
    AdaptiveRk54,
    /// Classical fixed-step 4th-order Runge-Kutta (step = `dt_initial`).
    FixedRk4,
}

/// Integrator tolerances, step bounds, chart-switch threshold, and implicit
/// solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial adaptive step, or the fixed step for [`Method::FixedRk4`].
    pub dt_initial: f64,
    pub dt_max: f64,
    /// Switch charts when the normalization factor N exceeds this bound
    /// (equivalently, when the pivot population drops below its reciprocal).
    pub rechart_threshold: f64,
    /// Absolute residual bound for the implicit damping solve.
    pub implicit_tol: f64,
    /// Iterative-refinement cap for the implicit damping solve.
    pub implicit_max_iter: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk54,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            dt_initial: 1e-4,
            dt_max: f64::INFINITY,
            rechart_threshold: 1e6,
            implicit_tol: 1e-12,
            implicit_max_iter: 25,
        }
    }
}

impl IntegratorConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.dt_initial > 0.0
            && self.dt_initial.is_finite()
            && self.dt_max > 0.0
            && self.rechart_threshold > 1.0
            && self.implicit_tol > 0.0
            && self.implicit_max_iter >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec {
                message: format!("invalid integrator configuration: {self:?}"),
            })
        }
    }
}

/// A sampled trajectory: uniform time grid, chart states (possibly in
/// different charts along the way), reconstructed amplitudes, and the system
/// energy per sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<ProjectiveState>,
    amplitudes: Vec<AmplitudeVector>,
    energy: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            amplitudes: Vec::with_capacity(n),
            energy: Vec::with_capacity(n),
        }
    }

    pub(crate) fn push(
        &mut self,
        t: f64,
        state: ProjectiveState,
        amps: AmplitudeVector,
        energy: f64,
    ) {
        self.times.push(t);
        self.states.push(state);
        self.amplitudes.push(amps);
        self.energy.push(energy);
    }

    /// Sample times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Chart states per sample.
    pub fn states(&self) -> &[ProjectiveState] {
        &self.states
    }

    /// Reconstructed amplitude vectors per sample.
    pub fn amplitudes(&self) -> &[AmplitudeVector] {
        &self.amplitudes
    }

    /// System energy per sample, in the simulation's internal units.
    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when the trajectory holds no samples.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Velocity of the isolated Hamiltonian flow: the inverse symplectic form
/// applied to the gradient of the classical Hamiltonian.
pub fn isolated_velocity(
    h: &HermitianOperator,
    state: &ProjectiveState,
) -> Result<DVector<C64>> {
    let g = grad_classical_hamiltonian(h, state)?;
    state.apply_inverse_symplectic(&g)
}

/// Velocity of the damped flow, resolving the implicit dependence of the
/// damping force on the velocity by a direct linear solve (exact up to
/// linear-algebra roundoff).
pub fn dissipative_velocity(
    h: &HermitianOperator,
    state: &ProjectiveState,
    bath: &MarkovianBathSpec,
) -> Result<DVector<C64>> {
    let cfg = IntegratorConfig::default();
    dissipative_velocity_impl(h, state, bath, cfg.implicit_tol, cfg.implicit_max_iter)
}

fn dissipative_velocity_impl(
    h: &HermitianOperator,
    state: &ProjectiveState,
    bath: &MarkovianBathSpec,
    implicit_tol: f64,
    implicit_max_iter: usize,
) -> Result<DVector<C64>> {
    let m = state.dim() - 1;
    if bath.len() != m {
        return Err(Error::DimensionMismatch {
            context: "damping constants vs. coordinate count",
            expected: m,
            found: bath.len(),
        });
    }
    let a = isolated_velocity(h, state)?;
    if bath.is_zero() {
        return Ok(a);
    }
    let x = state.coords();
    let gammas = bath.gammas();
    let nfac = state.normalization_factor();

    // B_{jk} = -i N (delta_{jk} + x^j conj(x^k)) * 2 gamma_k x^k.
    let minus_i_n = C64::new(0.0, -nfac);
    let mut bmat = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for k in 0..m {
        let col_scale = minus_i_n * (2.0 * gammas[k]) * x[k];
        for j in 0..m {
            let delta = if j == k { 1.0 } else { 0.0 };
            bmat[(j, k)] = col_scale * (C64::new(delta, 0.0) + x[j] * x[k].conj());
        }
    }

    // Real system (I - M) u = b with u_j = 2 Re(conj(x^j) xdot^j).
    let mut system = DMatrix::<f64>::identity(m, m);
    for j in 0..m {
        for k in 0..m {
            system[(j, k)] -= 2.0 * (x[j].conj() * bmat[(j, k)]).re;
        }
    }
    let b = DVector::from_fn(m, |j, _| 2.0 * (x[j].conj() * a[j]).re);

    let lu = system.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularDamping {
        condition: f64::INFINITY,
    })?;
    let condition = inf_norm(&system) * inf_norm(&inverse);
    if condition > SINGULAR_CONDITION {
        return Err(Error::SingularDamping { condition });
    }

    let mut u = lu.solve(&b).ok_or(Error::SingularDamping {
        condition: f64::INFINITY,
    })?;
    let scale = b.amax().max(1.0);
    for _ in 0..implicit_max_iter {
        let r = &b - &system * &u;
        if r.amax() <= implicit_tol * scale {
            break;
        }
        match lu.solve(&r) {
            Some(du) => u += du,
            None => break,
        }
    }

    let u_complex = DVector::from_fn(m, |j, _| C64::new(u[j], 0.0));
    Ok(a + bmat * u_complex)
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pack(coords: &DVector<C64>, y: &mut DVector<f64>) {
    let m = coords.len();
    for k in 0..m {
        y[k] = coords[k].re;
        y[m + k] = coords[k].im;
    }
}

fn unpack(y: &DVector<f64>, pivot: usize) -> Result<ProjectiveState> {
    let m = y.len() / 2;
    let coords = DVector::from_fn(m, |k, _| C64::new(y[k], y[m + k]));
    ProjectiveState::new(coords, pivot)
}

/// Integrates the isolated (`bath = None`) or damped flow from `initial`,
/// sampling every `sample_dt` up to `t_final`.
///
/// Wavenumber-tagged Hamiltonians are converted to rad/ps at entry, so times
/// are then in picoseconds. When the normalization factor exceeds
/// `cfg.rechart_threshold` at an accepted step boundary, the state is
/// re-anchored at the level with the largest amplitude and integration
/// continues; observables are unaffected. For damped runs the positional
/// damping constants are carried over to the new chart's coordinate slots,
/// which is exact when all constants are equal.
pub fn integrate(
    h: &HermitianOperator,
    initial: &ProjectiveState,
    bath: Option<&MarkovianBathSpec>,
    t_final: f64,
    sample_dt: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let ham = h.in_internal_units();
    if ham.dim() != initial.dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs. state dimension",
            expected: initial.dim(),
            found: ham.dim(),
        });
    }
    let m = initial.dim() - 1;
    if let Some(spec) = bath {
        if spec.len() != m {
            return Err(Error::DimensionMismatch {
                context: "damping constants vs. coordinate count",
                expected: m,
                found: spec.len(),
            });
        }
    }
    let grid = ode::sample_grid(t_final, sample_dt)?;

    let pivot = Cell::new(initial.pivot());
    let mut y0 = DVector::zeros(2 * m);
    pack(initial.coords(), &mut y0);

    let mut trajectory = Trajectory::with_capacity(grid.len());

    let rhs = |_t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| -> Result<()> {
        let state = unpack(y, pivot.get())?;
        let v = match bath {
            None => isolated_velocity(&ham, &state)?,
            Some(spec) => dissipative_velocity_impl(
                &ham,
                &state,
                spec,
                cfg.implicit_tol,
                cfg.implicit_max_iter,
            )?,
        };
        pack(&v, dy);
        Ok(())
    };

    let post_step = |_t: f64, y: &mut DVector<f64>| -> Result<PostStep> {
        // |x|^2 summed over coordinates is exactly the squared norm of the
        // packed real vector.
        let nfac = 1.0 + y.norm_squared();
        if nfac <= cfg.rechart_threshold {
            return Ok(PostStep::Unchanged);
        }
        let state = unpack(y, pivot.get())?;
        let target = state.max_amplitude_level();
        let rebased = state.rechart(target)?;
        pivot.set(target);
        pack(rebased.coords(), y);
        Ok(PostStep::Rewritten)
    };

    let on_sample = |t: f64, y: &DVector<f64>| -> Result<()> {
        let state = unpack(y, pivot.get())?;
        let amps = state.to_amplitudes();
        let energy = classical_hamiltonian(&ham, &state)?;
        trajectory.push(t, state, amps, energy);
        Ok(())
    };

    match cfg.method {
        Method::AdaptiveRk54 => {
            let opts = AdaptiveOptions {
                abs_tol: cfg.abs_tol,
                rel_tol: cfg.rel_tol,
                h_initial: cfg.dt_initial,
                h_max: cfg.dt_max,
            };
            ode::integrate_adaptive(rhs, y0, &grid, &opts, on_sample, post_step)?;
        }
        Method::FixedRk4 => {
            ode::integrate_fixed(rhs, y0, &grid, cfg.dt_initial, on_sample, post_step)?;
        }
    }
    Ok(trajectory)
}
