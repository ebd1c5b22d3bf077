//! Explicit harmonic-oscillator environment: Ohmic discretization, damping
//! kernel and noise evaluation, and direct integration of the coupled
//! system-plus-oscillators flow.
//!
//! Each chart coordinate owns an independent set of oscillators (the coupling
//! matrix is block-diagonal by coordinate). The interaction energy couples an
//! oscillator linearly to the squared modulus of its owning coordinate and
//! carries the quadratic counterterm that keeps the system's bare energy
//! landscape unshifted:
//!
//! ```text
//! H_I = - sum_j |x^j|^2 sum_i c_i q_i  +  sum_j |x^j|^4 sum_i c_i^2 / (2 m_i w_i^2)
//! ```
//!
//! Direct simulation of this flow is the reference against which the
//! memoryless damping model of [`crate::dynamics`] is validated.

use nalgebra::DVector;

use crate::dynamics::{IntegratorConfig, Method, Trajectory};
use crate::error::{Error, Result};
use crate::hamiltonian::{classical_hamiltonian, grad_classical_hamiltonian, HermitianOperator};
use crate::ode::{self, AdaptiveOptions, PostStep};
use crate::projective::ProjectiveState;
use crate::C64;

/// One harmonic oscillator of the environment: mass, angular frequency, and
/// linear coupling strength to the squared modulus of its owning coordinate.
///
/// Frequencies are in the same inverse-time units as the converted system
/// Hamiltonian (plain numbers for dimensionless systems, rad/ps for
/// wavenumber-tagged ones).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub mass: f64,
    pub frequency: f64,
    pub coupling: f64,
}

impl Oscillator {
    /// The static response weight `c^2 / (m w^2)` of this oscillator, which
    /// is both its damping-kernel amplitude and its counterterm coefficient.
    fn response_weight(&self) -> f64 {
        self.coupling * self.coupling / (self.mass * self.frequency * self.frequency)
    }
}

/// Environment description: one independent oscillator list per chart
/// coordinate (block-diagonal coupling).
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitBathSpec {
    per_coordinate: Vec<Vec<Oscillator>>,
}

impl ExplicitBathSpec {
    /// Wraps per-coordinate oscillator lists. Masses and frequencies must be
    /// strictly positive and couplings finite.
    pub fn new(per_coordinate: Vec<Vec<Oscillator>>) -> Result<Self> {
        for list in &per_coordinate {
            for osc in list {
                let ok = osc.mass.is_finite()
                    && osc.mass > 0.0
                    && osc.frequency.is_finite()
                    && osc.frequency > 0.0
                    && osc.coupling.is_finite();
                if !ok {
                    return Err(Error::InvalidSpec {
                        message: format!(
                            "oscillator must have positive finite mass and frequency \
                             and finite coupling, got {osc:?}"
                        ),
                    });
                }
            }
        }
        Ok(Self { per_coordinate })
    }

    /// Builds an Ohmic environment with `n` oscillators per coordinate, one
    /// damping constant per coordinate, and a common cutoff frequency.
    pub fn ohmic(gammas: &[f64], cutoff: f64, n: usize) -> Result<Self> {
        let per_coordinate = gammas
            .iter()
            .map(|&g| discretize_ohmic_bath(g, cutoff, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_coordinate })
    }

    /// Number of chart coordinates the environment covers.
    pub fn coordinate_count(&self) -> usize {
        self.per_coordinate.len()
    }

    /// The oscillators owned by coordinate `j`.
    pub fn oscillators(&self, j: usize) -> &[Oscillator] {
        &self.per_coordinate[j]
    }

    /// Total number of oscillators across all coordinates.
    pub fn total_oscillators(&self) -> usize {
        self.per_coordinate.iter().map(|l| l.len()).sum()
    }

    /// Flat offset of coordinate `j`'s block in a packed bath vector.
    fn block_offset(&self, j: usize) -> usize {
        self.per_coordinate[..j].iter().map(|l| l.len()).sum()
    }

    /// The counterterm coefficient `sum_i c_i^2 / (m_i w_i^2)` of coordinate
    /// `j` (twice the quartic energy coefficient).
    fn counterterm_weight(&self, j: usize) -> f64 {
        self.per_coordinate[j]
            .iter()
            .map(Oscillator::response_weight)
            .sum()
    }
}

/// Instantaneous environment phase-space point: positions and momenta, flat
/// in coordinate-major order matching [`ExplicitBathSpec`]'s blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BathState {
    positions: Vec<f64>,
    momenta: Vec<f64>,
}

impl BathState {
    /// Wraps explicit positions and momenta; both must be finite and sized to
    /// the spec's total oscillator count.
    pub fn new(spec: &ExplicitBathSpec, positions: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        let n = spec.total_oscillators();
        if positions.len() != n || momenta.len() != n {
            return Err(Error::DimensionMismatch {
                context: "bath state vs. oscillator count",
                expected: n,
                found: positions.len().max(momenta.len()),
            });
        }
        if positions.iter().chain(momenta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "bath state",
            });
        }
        Ok(Self { positions, momenta })
    }

    /// All oscillators at the origin with zero momentum.
    pub fn at_rest(spec: &ExplicitBathSpec) -> Self {
        let n = spec.total_oscillators();
        Self {
            positions: vec![0.0; n],
            momenta: vec![0.0; n],
        }
    }

    /// Oscillators displaced to the equilibrium points induced by the initial
    /// system state, `q_i = c_i |x^j|^2 / (m_i w_i^2)`, with zero momenta.
    /// This choice cancels the fluctuating force identically (see [`noise`]).
    pub fn shifted_equilibrium(spec: &ExplicitBathSpec, initial: &ProjectiveState) -> Result<Self> {
        if spec.coordinate_count() != initial.dim() - 1 {
            return Err(Error::DimensionMismatch {
                context: "bath spec vs. coordinate count",
                expected: initial.dim() - 1,
                found: spec.coordinate_count(),
            });
        }
        let mut positions = Vec::with_capacity(spec.total_oscillators());
        for (j, list) in spec.per_coordinate.iter().enumerate() {
            let xsq = initial.coords()[j].norm_sqr();
            for osc in list {
                positions.push(osc.coupling * xsq / (osc.mass * osc.frequency * osc.frequency));
            }
        }
        let momenta = vec![0.0; positions.len()];
        Ok(Self { positions, momenta })
    }

    /// Oscillator positions, flat in coordinate-major order.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Oscillator momenta, flat in coordinate-major order.
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }
}

/// Discretizes the Ohmic spectral density `J(w) = (2/pi) gamma w e^{-w/w_c}`
/// into `n` unit-mass oscillators on a linear frequency grid up to `10 w_c`.
///
/// Midpoint frequencies `w_i = (i + 1/2) dw` with `dw = 10 w_c / n` and
/// couplings `c_i^2 = (2/pi) gamma w_i^2 e^{-w_i/w_c} dw` make the discrete
/// damping kernel `sum_i c_i^2/(m_i w_i^2) cos(w_i t)` converge to the
/// continuum kernel `(2/pi) gamma w_c / (1 + w_c^2 t^2)` as `n` grows.
pub fn discretize_ohmic_bath(gamma: f64, cutoff: f64, n: usize) -> Result<Vec<Oscillator>> {
    if n == 0 || !cutoff.is_finite() || cutoff <= 0.0 {
        return Err(Error::InvalidSpec {
            message: format!(
                "Ohmic discretization needs n >= 1 and a positive cutoff, got n={n}, cutoff={cutoff}"
            ),
        });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidSpec {
            message: format!("damping constant must be finite and non-negative, got {gamma}"),
        });
    }
    let dw = 10.0 * cutoff / n as f64;
    Ok((0..n)
        .map(|i| {
            let w = (i as f64 + 0.5) * dw;
            let c_sq = (2.0 / std::f64::consts::PI) * gamma * w * w * (-w / cutoff).exp() * dw;
            Oscillator {
                mass: 1.0,
                frequency: w,
                coupling: c_sq.sqrt(),
            }
        })
        .collect())
}

/// Evaluates the memory kernel of coordinate `j`,
/// `sum_i c_i^2/(m_i w_i^2) cos(w_i t)`.
///
/// Panics if `j` is outside the spec's coordinate range.
pub fn damping_kernel(spec: &ExplicitBathSpec, j: usize, t: f64) -> f64 {
    spec.per_coordinate[j]
        .iter()
        .map(|osc| osc.response_weight() * (osc.frequency * t).cos())
        .sum()
}

/// Evaluates the fluctuating force on coordinate `j` generated by the initial
/// bath displacement from the system-shifted equilibrium:
/// `sum_i c_i [ (q_i(0) - x0_sq c_i/(m_i w_i^2)) cos(w_i t) + p_i(0)/(m_i w_i) sin(w_i t) ]`,
/// where `x0_sq` is the initial squared modulus of the coordinate.
///
/// Panics if `j` is outside the spec's coordinate range or the bath state is
/// shorter than the spec requires.
pub fn noise(spec: &ExplicitBathSpec, j: usize, initial: &BathState, x0_sq: f64, t: f64) -> f64 {
    let offset = spec.block_offset(j);
    spec.per_coordinate[j]
        .iter()
        .enumerate()
        .map(|(i, osc)| {
            let q0 = initial.positions[offset + i];
            let p0 = initial.momenta[offset + i];
            let displaced =
                q0 - x0_sq * osc.coupling / (osc.mass * osc.frequency * osc.frequency);
            osc.coupling
                * (displaced * (osc.frequency * t).cos()
                    + p0 / (osc.mass * osc.frequency) * (osc.frequency * t).sin())
        })
        .sum()
}

/// A coupled system-plus-environment trajectory: the system part as a
/// [`Trajectory`], plus environment and interaction energy per sample.
#[derive(Debug, Clone)]
pub struct BathTrajectory {
    system: Trajectory,
    bath_energy: Vec<f64>,
    interaction_energy: Vec<f64>,
}

impl BathTrajectory {
    /// The system part (chart states, amplitudes, system energy).
    pub fn system(&self) -> &Trajectory {
        &self.system
    }

    /// Environment energy `sum_i p_i^2/(2 m_i) + m_i w_i^2 q_i^2 / 2` per
    /// sample.
    pub fn bath_energy(&self) -> &[f64] {
        &self.bath_energy
    }

    /// Interaction energy (including counterterm) per sample.
    pub fn interaction_energy(&self) -> &[f64] {
        &self.interaction_energy
    }

    /// Total conserved energy per sample: system + environment + interaction.
    pub fn total_energy(&self) -> Vec<f64> {
        (0..self.bath_energy.len())
            .map(|i| self.system.energy()[i] + self.bath_energy[i] + self.interaction_energy[i])
            .collect()
    }
}

/// State-vector layout for the coupled flow: `[Re x; Im x; q; p]`.
struct Layout {
    coords: usize,
    oscillators: usize,
}

impl Layout {
    fn len(&self) -> usize {
        2 * self.coords + 2 * self.oscillators
    }

    fn coord(&self, y: &DVector<f64>, k: usize) -> C64 {
        C64::new(y[k], y[self.coords + k])
    }

    fn q<'a>(&self, y: &'a DVector<f64>) -> &'a [f64] {
        &y.as_slice()[2 * self.coords..2 * self.coords + self.oscillators]
    }

    fn p<'a>(&self, y: &'a DVector<f64>) -> &'a [f64] {
        &y.as_slice()[2 * self.coords + self.oscillators..]
    }
}

/// Integrates the coupled system-plus-oscillators flow from `initial` and
/// `initial_bath`, sampling every `sample_dt` up to `t_final`.
///
/// The system coordinate equations include the interaction gradient with
/// counterterm,
/// `dH_I/dconj(x^j) = -x^j sum_i c_i q_i + x^j |x^j|^2 sum_i c_i^2/(m_i w_i^2)`,
/// and each oscillator obeys `dq_i/dt = p_i/m_i`,
/// `dp_i/dt = -m_i w_i^2 q_i + c_i |x^j|^2` for its owning coordinate `j`.
/// The chart is held fixed for the whole run (the environment couples to
/// chart coordinates, so the coupled flow is chart-specific by construction).
pub fn integrate_full(
    h: &HermitianOperator,
    initial: &ProjectiveState,
    spec: &ExplicitBathSpec,
    initial_bath: &BathState,
    t_final: f64,
    sample_dt: f64,
    cfg: &IntegratorConfig,
) -> Result<BathTrajectory> {
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
    if spec.coordinate_count() != m {
        return Err(Error::DimensionMismatch {
            context: "bath spec vs. coordinate count",
            expected: m,
            found: spec.coordinate_count(),
        });
    }
    let n_osc = spec.total_oscillators();
    if initial_bath.positions.len() != n_osc {
        return Err(Error::DimensionMismatch {
            context: "bath state vs. oscillator count",
            expected: n_osc,
            found: initial_bath.positions.len(),
        });
    }
    let grid = ode::sample_grid(t_final, sample_dt)?;
    let pivot = initial.pivot();
    let layout = Layout {
        coords: m,
        oscillators: n_osc,
    };

    let mut y0 = DVector::zeros(layout.len());
    for k in 0..m {
        y0[k] = initial.coords()[k].re;
        y0[m + k] = initial.coords()[k].im;
    }
    for i in 0..n_osc {
        y0[2 * m + i] = initial_bath.positions[i];
        y0[2 * m + n_osc + i] = initial_bath.momenta[i];
    }

    let mut system = Trajectory::with_capacity(grid.len());
    let mut bath_energy = Vec::with_capacity(grid.len());
    let mut interaction_energy = Vec::with_capacity(grid.len());

    let unpack_state = |y: &DVector<f64>| -> Result<ProjectiveState> {
        let coords = DVector::from_fn(m, |k, _| layout.coord(y, k));
        ProjectiveState::new(coords, pivot)
    };

    let rhs = |_t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| -> Result<()> {
        let state = unpack_state(y)?;
        let q = layout.q(y);
        let p = layout.p(y);

        let mut gradient = grad_classical_hamiltonian(&ham, &state)?;
        for (j, list) in spec.per_coordinate.iter().enumerate() {
            let offset = spec.block_offset(j);
            let x = state.coords()[j];
            let linear: f64 = list
                .iter()
                .enumerate()
                .map(|(i, osc)| osc.coupling * q[offset + i])
                .sum();
            gradient[j] += x * (-linear + x.norm_sqr() * spec.counterterm_weight(j));
        }
        let v = state.apply_inverse_symplectic(&gradient)?;
        for k in 0..m {
            dy[k] = v[k].re;
            dy[m + k] = v[k].im;
        }

        for (j, list) in spec.per_coordinate.iter().enumerate() {
            let offset = spec.block_offset(j);
            let xsq = state.coords()[j].norm_sqr();
            for (i, osc) in list.iter().enumerate() {
                let idx = offset + i;
                dy[2 * m + idx] = p[idx] / osc.mass;
                dy[2 * m + n_osc + idx] = -osc.mass * osc.frequency * osc.frequency * q[idx]
                    + osc.coupling * xsq;
            }
        }
        Ok(())
    };

    let post_step = |_t: f64, _y: &mut DVector<f64>| -> Result<PostStep> { Ok(PostStep::Unchanged) };

    let on_sample = |t: f64, y: &DVector<f64>| -> Result<()> {
        let state = unpack_state(y)?;
        let q = layout.q(y);
        let p = layout.p(y);

        let mut h_bath = 0.0;
        let mut h_int = 0.0;
        for (j, list) in spec.per_coordinate.iter().enumerate() {
            let offset = spec.block_offset(j);
            let xsq = state.coords()[j].norm_sqr();
            let mut linear = 0.0;
            for (i, osc) in list.iter().enumerate() {
                let idx = offset + i;
                h_bath += p[idx] * p[idx] / (2.0 * osc.mass)
                    + 0.5 * osc.mass * osc.frequency * osc.frequency * q[idx] * q[idx];
                linear += osc.coupling * q[idx];
            }
            h_int += -xsq * linear + 0.5 * xsq * xsq * spec.counterterm_weight(j);
        }

        let amps = state.to_amplitudes();
        let energy = classical_hamiltonian(&ham, &state)?;
        system.push(t, state, amps, energy);
        bath_energy.push(h_bath);
        interaction_energy.push(h_int);
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
    Ok(BathTrajectory {
        system,
        bath_energy,
        interaction_energy,
    })
}
