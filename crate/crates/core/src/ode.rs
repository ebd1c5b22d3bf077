//! Runge-Kutta integration drivers over real state vectors.
//!
//! The crate's equations of motion are integrated either with an adaptive
//! embedded Dormand-Prince 5(4) pair (local error controlled against
//! `abs_tol`/`rel_tol`, first-same-as-last evaluation reuse) or with a
//! fixed-step classical 4th-order scheme. Both drivers land exactly on the
//! uniform sample grid and expose a post-step hook that lets the caller
//! rewrite the state between accepted steps (used for chart switching).

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Tolerances and step bounds for the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_initial: f64,
    pub h_max: f64,
}

/// Outcome of the post-step hook.
pub(crate) enum PostStep {
    /// State untouched; derivative caches stay valid.
    Unchanged,
    /// State rewritten in place; cached derivatives must be refreshed.
    Rewritten,
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights (error estimator).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const SAFETY: f64 = 0.9;
const SHRINK_LIMIT: f64 = 0.2;
const GROW_LIMIT: f64 = 10.0;

/// Builds the uniform sample grid: integer multiples of `sample_dt` from 0
/// up to (and, when commensurate, including) `t_final`.
pub(crate) fn sample_grid(t_final: f64, sample_dt: f64) -> Result<Vec<f64>> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidSpec {
            message: format!("t_final must be positive and finite, got {t_final}"),
        });
    }
    if !(sample_dt > 0.0) || !sample_dt.is_finite() {
        return Err(Error::InvalidSpec {
            message: format!("sample_dt must be positive and finite, got {sample_dt}"),
        });
    }
    let count = (t_final / sample_dt + 1e-9).floor() as usize;
    if count == 0 {
        return Err(Error::InvalidSpec {
            message: format!(
                "sample_dt = {sample_dt} exceeds t_final = {t_final}; no samples would be taken"
            ),
        });
    }
    Ok((0..=count).map(|k| k as f64 * sample_dt).collect())
}

/// Integrates `dy/dt = rhs(t, y)` adaptively over the sample grid.
///
/// `on_sample` receives the state at every grid time (including t = 0);
/// `post_step` runs after every accepted step and may rewrite the state.
pub(crate) fn integrate_adaptive<F, S, P>(
    mut rhs: F,
    y0: DVector<f64>,
    grid: &[f64],
    opts: &AdaptiveOptions,
    mut on_sample: S,
    mut post_step: P,
) -> Result<()>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>) -> Result<()>,
    S: FnMut(f64, &DVector<f64>) -> Result<()>,
    P: FnMut(f64, &mut DVector<f64>) -> Result<PostStep>,
{
    let dim = y0.len();
    let mut y = y0;
    let mut t = grid[0];
    on_sample(t, &y)?;

    let mut k1 = DVector::zeros(dim);
    let mut k2 = DVector::zeros(dim);
    let mut k3 = DVector::zeros(dim);
    let mut k4 = DVector::zeros(dim);
    let mut k5 = DVector::zeros(dim);
    let mut k6 = DVector::zeros(dim);
    let mut k7 = DVector::zeros(dim);
    let mut stage = DVector::zeros(dim);
    let mut y_new = DVector::zeros(dim);

    rhs(t, &y, &mut k1)?;
    let mut h = opts.h_initial.min(opts.h_max);

    for &t_target in &grid[1..] {
        while t < t_target - 1e-12 * t_target.max(1.0) {
            let clamped = h >= t_target - t;
            let h_try = if clamped { t_target - t } else { h };

            // Stage evaluations.
            stage.copy_from(&y);
            stage.axpy(h_try * A21, &k1, 1.0);
            rhs(t + C2 * h_try, &stage, &mut k2)?;

            stage.copy_from(&y);
            stage.axpy(h_try * A31, &k1, 1.0);
            stage.axpy(h_try * A32, &k2, 1.0);
            rhs(t + C3 * h_try, &stage, &mut k3)?;

            stage.copy_from(&y);
            stage.axpy(h_try * A41, &k1, 1.0);
            stage.axpy(h_try * A42, &k2, 1.0);
            stage.axpy(h_try * A43, &k3, 1.0);
            rhs(t + C4 * h_try, &stage, &mut k4)?;

            stage.copy_from(&y);
            stage.axpy(h_try * A51, &k1, 1.0);
            stage.axpy(h_try * A52, &k2, 1.0);
            stage.axpy(h_try * A53, &k3, 1.0);
            stage.axpy(h_try * A54, &k4, 1.0);
            rhs(t + C5 * h_try, &stage, &mut k5)?;

            stage.copy_from(&y);
            stage.axpy(h_try * A61, &k1, 1.0);
            stage.axpy(h_try * A62, &k2, 1.0);
            stage.axpy(h_try * A63, &k3, 1.0);
            stage.axpy(h_try * A64, &k4, 1.0);
            stage.axpy(h_try * A65, &k5, 1.0);
            rhs(t + h_try, &stage, &mut k6)?;

            y_new.copy_from(&y);
            y_new.axpy(h_try * B1, &k1, 1.0);
            y_new.axpy(h_try * B3, &k3, 1.0);
            y_new.axpy(h_try * B4, &k4, 1.0);
            y_new.axpy(h_try * B5, &k5, 1.0);
            y_new.axpy(h_try * B6, &k6, 1.0);
            rhs(t + h_try, &y_new, &mut k7)?;

            // Scaled max-norm of the embedded error estimate. A NaN (from
            // overflow in the stages) counts as infinite error so the step
            // is rejected rather than silently accepted.
            let mut err_norm = 0.0f64;
            for i in 0..dim {
                let err = h_try
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
                let e = (err / scale).abs();
                if e.is_nan() {
                    err_norm = f64::INFINITY;
                    break;
                }
                err_norm = err_norm.max(e);
            }

            if err_norm <= 1.0 {
                t = if clamped { t_target } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7); // first-same-as-last reuse
                match post_step(t, &mut y)? {
                    PostStep::Unchanged => {}
                    PostStep::Rewritten => rhs(t, &y, &mut k1)?,
                }
                if !clamped {
                    let factor = if err_norm == 0.0 {
                        GROW_LIMIT
                    } else {
                        (SAFETY * err_norm.powf(-0.2)).clamp(SHRINK_LIMIT, GROW_LIMIT)
                    };
                    h = (h_try * factor).min(opts.h_max);
                }
            } else {
                let factor = (SAFETY * err_norm.powf(-0.2)).clamp(SHRINK_LIMIT, 1.0);
                h = h_try * factor;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow { t, step: h });
                }
            }
        }
        on_sample(t_target, &y)?;
    }
    Ok(())
}

/// Integrates with the classical fixed-step 4th-order scheme; the step is
/// `h_step` shortened as needed to land on the grid.
pub(crate) fn integrate_fixed<F, S, P>(
    mut rhs: F,
    y0: DVector<f64>,
    grid: &[f64],
    h_step: f64,
    mut on_sample: S,
    mut post_step: P,
) -> Result<()>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>) -> Result<()>,
    S: FnMut(f64, &DVector<f64>) -> Result<()>,
    P: FnMut(f64, &mut DVector<f64>) -> Result<PostStep>,
{
    if !(h_step > 0.0) || !h_step.is_finite() {
        return Err(Error::InvalidSpec {
            message: format!("fixed step must be positive and finite, got {h_step}"),
        });
    }
    let dim = y0.len();
    let mut y = y0;
    let mut t = grid[0];
    on_sample(t, &y)?;

    let mut k1 = DVector::zeros(dim);
    let mut k2 = DVector::zeros(dim);
    let mut k3 = DVector::zeros(dim);
    let mut k4 = DVector::zeros(dim);
    let mut stage = DVector::zeros(dim);

    for &t_target in &grid[1..] {
        while t < t_target - 1e-12 * t_target.max(1.0) {
            let clamped = h_step >= t_target - t;
            let h = if clamped { t_target - t } else { h_step };

            rhs(t, &y, &mut k1)?;
            stage.copy_from(&y);
            stage.axpy(0.5 * h, &k1, 1.0);
            rhs(t + 0.5 * h, &stage, &mut k2)?;
            stage.copy_from(&y);
            stage.axpy(0.5 * h, &k2, 1.0);
            rhs(t + 0.5 * h, &stage, &mut k3)?;
            stage.copy_from(&y);
            stage.axpy(h, &k3, 1.0);
            rhs(t + h, &stage, &mut k4)?;

            y.axpy(h / 6.0, &k1, 1.0);
            y.axpy(h / 3.0, &k2, 1.0);
            y.axpy(h / 3.0, &k3, 1.0);
            y.axpy(h / 6.0, &k4, 1.0);

            t = if clamped { t_target } else { t + h };
            post_step(t, &mut y)?;
        }
        on_sample(t_target, &y)?;
    }
    Ok(())
}
