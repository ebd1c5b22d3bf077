//! Physical quantities extracted from chart states: level populations, the
//! two-qubit population imbalance `z` and concurrence, and time averages.
//!
//! All observables are computed from reconstructed amplitudes, so they are
//! independent of the active chart; the closed-form chart expressions used by
//! the four-level model (pivot anchored at the last level) are kept as
//! cross-check implementations.

use nalgebra::DVector;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::projective::{AmplitudeVector, ProjectiveState};

/// Level populations: `|x^j|^2 / N` in the non-pivot slots and `1 / N` in the
/// pivot slot. The entries sum to 1 up to roundoff.
pub fn populations(state: &ProjectiveState) -> DVector<f64> {
    let n = state.dim();
    let nfac = state.normalization_factor();
    let mut p = DVector::zeros(n);
    p[state.pivot()] = 1.0 / nfac;
    for k in 0..n - 1 {
        p[state.coord_to_level(k)] = state.coords()[k].norm_sqr() / nfac;
    }
    p
}

fn require_four_levels(state: &ProjectiveState, context: &'static str) -> Result<()> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            context,
            expected: 4,
            found: state.dim(),
        });
    }
    Ok(())
}

/// Population imbalance of the second-listed qubit label,
/// `z = |a|^2 + |b|^2 - |c|^2 - |d|^2`, computed from reconstructed
/// amplitudes. Defined for four-level states only; lies in [-1, 1].
pub fn quaternionic_z(state: &ProjectiveState) -> Result<f64> {
    require_four_levels(state, "population imbalance z")?;
    quaternionic_z_amplitudes(&state.to_amplitudes())
}

/// Pure-state two-qubit concurrence `C = 2 |ad - bc|`, computed from
/// reconstructed amplitudes. Defined for four-level states only; lies in
/// [0, 1], with 0 for product states and 1 for Bell states.
pub fn concurrence(state: &ProjectiveState) -> Result<f64> {
    require_four_levels(state, "concurrence")?;
    concurrence_amplitudes(&state.to_amplitudes())
}

/// Amplitude-level form of [`quaternionic_z`].
pub fn quaternionic_z_amplitudes(a: &AmplitudeVector) -> Result<f64> {
    let v = a.amps();
    if v.len() != 4 {
        return Err(Error::DimensionMismatch {
            context: "population imbalance z",
            expected: 4,
            found: v.len(),
        });
    }
    Ok(v[0].norm_sqr() + v[1].norm_sqr() - v[2].norm_sqr() - v[3].norm_sqr())
}

/// Amplitude-level form of [`concurrence`].
pub fn concurrence_amplitudes(a: &AmplitudeVector) -> Result<f64> {
    let v = a.amps();
    if v.len() != 4 {
        return Err(Error::DimensionMismatch {
            context: "concurrence",
            expected: 4,
            found: v.len(),
        });
    }
    Ok(2.0 * (v[0] * v[3] - v[1] * v[2]).norm())
}

fn require_last_pivot_chart(state: &ProjectiveState, what: &str) -> Result<()> {
    if state.pivot() != 3 {
        return Err(Error::InvalidSpec {
            message: format!(
                "closed-form {what} requires the chart anchored at the last level; \
                 the state uses pivot {}",
                state.pivot()
            ),
        });
    }
    Ok(())
}

/// Closed-form imbalance in the chart anchored at the last level:
/// `z = (|x^0|^2 + |x^1|^2 - |x^2|^2 - 1) / N`. Cross-check implementation
/// for [`quaternionic_z`].
pub fn quaternionic_z_closed_form(state: &ProjectiveState) -> Result<f64> {
    require_four_levels(state, "population imbalance z")?;
    require_last_pivot_chart(state, "z")?;
    let x = state.coords();
    let nfac = state.normalization_factor();
    Ok((x[0].norm_sqr() + x[1].norm_sqr() - x[2].norm_sqr() - 1.0) / nfac)
}

/// Closed-form concurrence in the chart anchored at the last level:
/// `C = 2 |x^0 - x^1 x^2| / N`. Cross-check implementation for
/// [`concurrence`].
pub fn concurrence_closed_form(state: &ProjectiveState) -> Result<f64> {
    require_four_levels(state, "concurrence")?;
    require_last_pivot_chart(state, "concurrence")?;
    let x = state.coords();
    let nfac = state.normalization_factor();
    Ok(2.0 * (x[0] - x[1] * x[2]).norm() / nfac)
}

/// Trapezoidal mean of a sampled series over its time window.
pub fn time_average(values: &[f64], times: &[f64]) -> Result<f64> {
    if values.len() != times.len() {
        return Err(Error::DimensionMismatch {
            context: "time average series vs. time grid",
            expected: times.len(),
            found: values.len(),
        });
    }
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: values.len(),
        });
    }
    let span = times[times.len() - 1] - times[0];
    if !(span > 0.0) {
        return Err(Error::InvalidSpec {
            message: "time average requires a strictly increasing time window".into(),
        });
    }
    let mut integral = 0.0;
    for i in 1..values.len() {
        integral += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    Ok(integral / span)
}

/// Named observable channels sampled on a common time grid.
#[derive(Debug, Clone)]
pub struct ObservableSeries {
    times: Vec<f64>,
    populations: Vec<DVector<f64>>,
    energy: Vec<f64>,
    z: Option<Vec<f64>>,
    concurrence: Option<Vec<f64>>,
}

impl ObservableSeries {
    /// Extracts all channels from a trajectory. The two-qubit channels `z`
    /// and `concurrence` are present only for four-level systems.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let mut pops = Vec::with_capacity(traj.len());
        let mut z = Vec::new();
        let mut conc = Vec::new();
        let four_level = traj.states().first().map(|s| s.dim() == 4).unwrap_or(false);
        for state in traj.states() {
            pops.push(populations(state));
            if four_level {
                z.push(quaternionic_z(state)?);
                conc.push(concurrence(state)?);
            }
        }
        Ok(Self {
            times: traj.times().to_vec(),
            populations: pops,
            energy: traj.energy().to_vec(),
            z: four_level.then_some(z),
            concurrence: four_level.then_some(conc),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Population rows, one vector of N level populations per sample.
    pub fn populations(&self) -> &[DVector<f64>] {
        &self.populations
    }

    /// One population channel as a time series.
    pub fn population_channel(&self, level: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[level]).collect()
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    pub fn concurrence(&self) -> Option<&[f64]> {
        self.concurrence.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::AmplitudeVector;
    use crate::C64;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn state_from_amps(raw: Vec<C64>, pivot: usize) -> ProjectiveState {
        AmplitudeVector::normalized(DVector::from_vec(raw))
            .unwrap()
            .to_projective(pivot)
            .unwrap()
    }

    fn entangled_state() -> ProjectiveState {
        state_from_amps(
            vec![
                c(0.4f64.sqrt(), 0.0),
                c(0.4f64.sqrt(), 0.0),
                c(0.0, 0.0),
                c(0.2f64.sqrt(), 0.0),
            ],
            3,
        )
    }

    #[test]
    fn populations_of_the_reference_state() {
        let p = populations(&entangled_state());
        assert_relative_eq!(p[0], 0.4, max_relative = 1e-13);
        assert_relative_eq!(p[1], 0.4, max_relative = 1e-13);
        assert_abs_diff_eq!(p[2], 0.0);
        assert_relative_eq!(p[3], 0.2, max_relative = 1e-13);
        assert_relative_eq!(p.sum(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn origin_puts_all_population_on_the_pivot() {
        let s = ProjectiveState::new(DVector::from_element(3, c(0.0, 0.0)), 3).unwrap();
        let p = populations(&s);
        assert_abs_diff_eq!(p[3], 1.0);
        assert_abs_diff_eq!(p[0] + p[1] + p[2], 0.0);
    }

    #[test]
    fn populations_agree_with_reconstructed_amplitudes() {
        let s = state_from_amps(
            vec![c(0.3, -0.8), c(-0.1, 0.4), c(0.9, 0.2), c(-0.5, 0.6)],
            2,
        );
        let p = populations(&s);
        let a = s.to_amplitudes();
        for i in 0..4 {
            assert_abs_diff_eq!(p[i], a.amps()[i].norm_sqr(), epsilon = 1e-14);
        }
    }

    #[test]
    fn imbalance_of_the_reference_state() {
        assert_relative_eq!(
            quaternionic_z(&entangled_state()).unwrap(),
            0.6,
            max_relative = 1e-13
        );
    }

    #[test]
    fn imbalance_of_the_last_basis_state_is_minus_one() {
        let s = ProjectiveState::new(DVector::from_element(3, c(0.0, 0.0)), 3).unwrap();
        assert_abs_diff_eq!(quaternionic_z(&s).unwrap(), -1.0);
    }

    #[test]
    fn imbalance_of_a_bell_state_is_zero() {
        let s = state_from_amps(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            3,
        );
        assert_abs_diff_eq!(quaternionic_z(&s).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn concurrence_of_the_reference_state() {
        assert_relative_eq!(
            concurrence(&entangled_state()).unwrap(),
            2.0 * 2.0f64.sqrt() / 5.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn concurrence_of_product_and_bell_states() {
        let product = state_from_amps(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            0,
        );
        assert_abs_diff_eq!(concurrence(&product).unwrap(), 0.0);

        let bell = state_from_amps(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            3,
        );
        assert_relative_eq!(concurrence(&bell).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn closed_forms_match_amplitude_definitions() {
        let s = state_from_amps(
            vec![c(0.3, -0.8), c(-0.1, 0.4), c(0.9, 0.2), c(-0.5, 0.6)],
            3,
        );
        assert_abs_diff_eq!(
            quaternionic_z(&s).unwrap(),
            quaternionic_z_closed_form(&s).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            concurrence(&s).unwrap(),
            concurrence_closed_form(&s).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn closed_forms_demand_the_last_level_chart() {
        let s = state_from_amps(
            vec![c(0.3, -0.8), c(-0.1, 0.4), c(0.9, 0.2), c(-0.5, 0.6)],
            1,
        );
        assert!(quaternionic_z_closed_form(&s).is_err());
        assert!(concurrence_closed_form(&s).is_err());
    }

    #[test]
    fn two_qubit_observables_reject_other_dimensions() {
        let s = ProjectiveState::new(DVector::from_element(2, c(0.0, 0.0)), 2).unwrap();
        assert!(matches!(
            quaternionic_z(&s),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            concurrence(&s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn observables_are_chart_independent() {
        let s = state_from_amps(
            vec![c(0.3, -0.8), c(-0.1, 0.4), c(0.9, 0.2), c(-0.5, 0.6)],
            3,
        );
        let r = s.rechart(1).unwrap();
        assert_abs_diff_eq!(
            quaternionic_z(&s).unwrap(),
            quaternionic_z(&r).unwrap(),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            concurrence(&s).unwrap(),
            concurrence(&r).unwrap(),
            epsilon = 1e-13
        );
        let ps = populations(&s);
        let pr = populations(&r);
        for i in 0..4 {
            assert_abs_diff_eq!(ps[i], pr[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn time_average_examples() {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 1e-3).collect();
        let constant = vec![2.5; times.len()];
        assert_abs_diff_eq!(time_average(&constant, &times).unwrap(), 2.5, epsilon = 1e-12);

        let ramp: Vec<f64> = times.clone();
        assert_abs_diff_eq!(time_average(&ramp, &times).unwrap(), 0.5, epsilon = 1e-12);

        let period = std::f64::consts::TAU;
        let tgrid: Vec<f64> = (0..=1000).map(|i| i as f64 * period / 1000.0).collect();
        let sine: Vec<f64> = tgrid.iter().map(|t| t.sin()).collect();
        assert_abs_diff_eq!(time_average(&sine, &tgrid).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn time_average_rejects_degenerate_input() {
        assert!(matches!(
            time_average(&[1.0], &[0.0]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(time_average(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn global_phase_leaves_observables_unchanged() {
        let raw = vec![c(0.3, -0.8), c(-0.1, 0.4), c(0.9, 0.2), c(-0.5, 0.6)];
        let phase = C64::from_polar(1.0, -2.1);
        let rotated: Vec<C64> = raw.iter().map(|v| v * phase).collect();
        let s0 = state_from_amps(raw, 3);
        let s1 = state_from_amps(rotated, 3);
        assert_abs_diff_eq!(
            quaternionic_z(&s0).unwrap(),
            quaternionic_z(&s1).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            concurrence(&s0).unwrap(),
            concurrence(&s1).unwrap(),
            epsilon = 1e-14
        );
    }
}
