//! Affine-chart coordinates on complex projective space CP^{N-1}.
//!
//! A normalized N-level state `(a^0, ..., a^{N-1})` with a nonzero amplitude
//! at a chosen `pivot` index is represented by the N-1 ratios
//! `x^j = a^{sigma(j)} / a^{pivot}`, where `sigma` enumerates the non-pivot
//! indices in increasing order. The chart carries the normalization factor
//! `N(x) = 1 + sum_j |x^j|^2`, the Kähler potential `log N`, and the inverse
//! symplectic form `w^{jk} = -i N (delta^{jk} + x^j conj(x^k))` that turns
//! gradients of observables into velocities.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::C64;

/// Default lower bound on the magnitude of the pivot amplitude. Conversions
/// reject pivots below this floor instead of producing huge coordinates.
pub const DEFAULT_PIVOT_FLOOR: f64 = 1e-12;

/// A normalized vector of complex amplitudes `a^i` with `sum |a^i|^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    amps: DVector<C64>,
}

impl AmplitudeVector {
    /// Wraps a vector of amplitudes, requiring unit norm within 1e-12.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "amplitude vector",
            });
        }
        let norm_sq = amps.norm_squared();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec {
                message: format!(
                    "amplitude vector must have unit norm; got |a|^2 = {norm_sq:.17e}"
                ),
            });
        }
        Ok(Self { amps })
    }

    /// Wraps amplitudes the caller guarantees to be normalized (used by
    /// integrators whose norm drift is checked separately).
    pub(crate) fn from_parts_trusted(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    /// Rescales an arbitrary nonzero vector to unit norm and wraps it.
    pub fn normalized(raw: DVector<C64>) -> Result<Self> {
        if raw.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "amplitude vector",
            });
        }
        let norm = raw.norm();
        if norm < 1e-150 {
            return Err(Error::InvalidSpec {
                message: "cannot normalize a zero amplitude vector".into(),
            });
        }
        Ok(Self {
            amps: raw / C64::new(norm, 0.0),
        })
    }

    /// Number of levels N.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// The underlying amplitudes.
    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    /// Converts to chart coordinates on CP^{N-1} with the default pivot floor.
    ///
    /// Coordinate `j` is `a^{sigma(j)} / a^{pivot}` with `sigma` running over
    /// the non-pivot indices in increasing order.
    pub fn to_projective(&self, pivot: usize) -> Result<ProjectiveState> {
        self.to_projective_with_floor(pivot, DEFAULT_PIVOT_FLOOR)
    }

    /// Converts to chart coordinates, rejecting pivot amplitudes below `floor`.
    pub fn to_projective_with_floor(&self, pivot: usize, floor: f64) -> Result<ProjectiveState> {
        let n = self.dim();
        if pivot >= n {
            return Err(Error::DimensionMismatch {
                context: "pivot index into amplitude vector",
                expected: n,
                found: pivot,
            });
        }
        let divisor = self.amps[pivot];
        let magnitude = divisor.norm();
        if magnitude < floor {
            return Err(Error::PivotTooSmall {
                pivot,
                magnitude,
                floor,
            });
        }
        let coords = DVector::from_iterator(
            n - 1,
            (0..n).filter(|&i| i != pivot).map(|i| self.amps[i] / divisor),
        );
        ProjectiveState::new(coords, pivot)
    }
}

/// A point of CP^{N-1} in an affine chart: N-1 complex coordinates plus the
/// pivot index identifying which amplitude serves as the chart's divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveState {
    coords: DVector<C64>,
    pivot: usize,
}

impl ProjectiveState {
    /// Builds a state from raw chart coordinates.
    pub fn new(coords: DVector<C64>, pivot: usize) -> Result<Self> {
        let dim = coords.len() + 1;
        if pivot >= dim {
            return Err(Error::DimensionMismatch {
                context: "pivot index into chart",
                expected: dim,
                found: pivot,
            });
        }
        if coords.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "projective coordinates",
            });
        }
        Ok(Self { coords, pivot })
    }

    /// Number of levels N (one more than the coordinate count).
    pub fn dim(&self) -> usize {
        self.coords.len() + 1
    }

    /// The chart coordinates `x^j`.
    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    /// The pivot (chart divisor) index.
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// Maps a coordinate slot `k` to the level index `sigma(k)` it represents.
    pub fn coord_to_level(&self, k: usize) -> usize {
        if k < self.pivot {
            k
        } else {
            k + 1
        }
    }

    /// The chart representative: an unnormalized amplitude vector with 1 in
    /// the pivot slot and the coordinates in the remaining slots.
    pub fn chart_representative(&self) -> DVector<C64> {
        let n = self.dim();
        let mut xhat = DVector::from_element(n, C64::new(0.0, 0.0));
        xhat[self.pivot] = C64::new(1.0, 0.0);
        for k in 0..n - 1 {
            xhat[self.coord_to_level(k)] = self.coords[k];
        }
        xhat
    }

    /// The normalization factor `N = 1 + sum |x^j|^2`; always >= 1.
    pub fn normalization_factor(&self) -> f64 {
        1.0 + self.coords.norm_squared()
    }

    /// The Kähler potential `K = log N`.
    pub fn kahler_potential(&self) -> f64 {
        self.normalization_factor().ln()
    }

    /// Reconstructs normalized amplitudes, fixing the global phase so the
    /// pivot amplitude is real and positive (`= 1/sqrt(N)`).
    pub fn to_amplitudes(&self) -> AmplitudeVector {
        let scale = C64::new(1.0 / self.normalization_factor().sqrt(), 0.0);
        AmplitudeVector {
            amps: self.chart_representative() * scale,
        }
    }

    /// Applies the inverse symplectic form to a gradient vector:
    /// `v^j = sum_k -i N (delta^{jk} + x^j conj(x^k)) g_k`.
    ///
    /// This is the map taking `dH/d(conj x)` to the velocity `dx/dt` of the
    /// Hamiltonian flow; it is complex-linear in `gradient`.
    pub fn apply_inverse_symplectic(&self, gradient: &DVector<C64>) -> Result<DVector<C64>> {
        if gradient.len() != self.coords.len() {
            return Err(Error::DimensionMismatch {
                context: "gradient for inverse symplectic form",
                expected: self.coords.len(),
                found: gradient.len(),
            });
        }
        let nfac = self.normalization_factor();
        let inner = self.coords.dotc(gradient); // sum conj(x^k) g_k
        let mut v = gradient + &self.coords * inner;
        v *= C64::new(0.0, -nfac);
        Ok(v)
    }

    /// Re-expresses the same projective point in the chart anchored at
    /// `new_pivot`. Observables are unchanged; coordinates become amplitude
    /// ratios against the new divisor.
    pub fn rechart(&self, new_pivot: usize) -> Result<ProjectiveState> {
        let n = self.dim();
        if new_pivot >= n {
            return Err(Error::DimensionMismatch {
                context: "pivot index into chart",
                expected: n,
                found: new_pivot,
            });
        }
        if new_pivot == self.pivot {
            return Ok(self.clone());
        }
        let xhat = self.chart_representative();
        let divisor = xhat[new_pivot];
        // The floor applies to the reconstructed (normalized) amplitude.
        let amp_magnitude = divisor.norm() / self.normalization_factor().sqrt();
        if amp_magnitude < DEFAULT_PIVOT_FLOOR {
            return Err(Error::PivotTooSmall {
                pivot: new_pivot,
                magnitude: amp_magnitude,
                floor: DEFAULT_PIVOT_FLOOR,
            });
        }
        let coords = DVector::from_iterator(
            n - 1,
            (0..n).filter(|&i| i != new_pivot).map(|i| xhat[i] / divisor),
        );
        ProjectiveState::new(coords, new_pivot)
    }

    /// The level index whose reconstructed amplitude has the largest
    /// magnitude — the safest chart anchor for the current point.
    pub fn max_amplitude_level(&self) -> usize {
        let xhat = self.chart_representative();
        let mut best = 0;
        let mut best_mag = f64::NEG_INFINITY;
        for i in 0..xhat.len() {
            let m = xhat[i].norm_sqr();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        best
    }
}
