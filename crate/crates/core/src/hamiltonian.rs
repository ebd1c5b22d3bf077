//! System Hamiltonians and the classical Hamiltonian function on CP^{N-1}.
//!
//! The classical Hamiltonian of an N-level system in a chart is
//! `H_S(x) = xhat^dag H xhat / N(x)` where `xhat` is the chart representative
//! (1 in the pivot slot, coordinates elsewhere). Its gradient with respect to
//! the conjugated coordinates, fed through the inverse symplectic form, drives
//! the equations of motion.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::projective::ProjectiveState;
use crate::{C64, CM_INV_TO_RAD_PER_PS};

/// Maximum allowed entry of |H - H^dagger| for a matrix to count as Hermitian.
const HERMITICITY_TOL: f64 = 1e-12;

/// Text of the bundled seven-site exciton Hamiltonian (wavenumber units).
const SEVEN_SITE_MATRIX: &str = include_str!("../data/fmo.txt");

/// Unit in which a Hamiltonian's entries are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    /// Angular frequency with hbar = 1; time is the reciprocal unit.
    Dimensionless,
    /// Spectroscopic wavenumbers; convert before simulating so that time is
    /// in picoseconds.
    WavenumberCmInv,
}

/// A dense N x N complex Hermitian matrix with an energy-unit tag.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
    unit: EnergyUnit,
}

impl HermitianOperator {
    /// Wraps a matrix, enforcing squareness, finiteness, and Hermiticity.
    pub fn new(matrix: DMatrix<C64>, unit: EnergyUnit) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                context: "Hermitian operator must be square",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "Hermitian operator entries",
            });
        }
        let mut deviation = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                deviation = deviation.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix, unit })
    }

    /// Matrix dimension N.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// The energy-unit tag.
    pub fn unit(&self) -> EnergyUnit {
        self.unit
    }

    /// Returns the operator in internal angular-frequency units. Wavenumber
    /// entries are scaled by `2*pi*c` (0.188365... rad/ps per cm^-1);
    /// dimensionless operators are returned unchanged.
    pub fn in_internal_units(&self) -> HermitianOperator {
        match self.unit {
            EnergyUnit::Dimensionless => self.clone(),
            EnergyUnit::WavenumberCmInv => HermitianOperator {
                matrix: &self.matrix * C64::new(CM_INV_TO_RAD_PER_PS, 0.0),
                unit: EnergyUnit::Dimensionless,
            },
        }
    }

    /// Parses a plain-text matrix: one whitespace-separated row per line,
    /// `#` comment lines ignored, with an optional `# unit: cm-1` header.
    /// Entries are real numbers or complex literals such as `1.5+0.25i`.
    pub fn parse_matrix_text(text: &str) -> Result<Self> {
        let mut unit = EnergyUnit::Dimensionless;
        let mut rows: Vec<Vec<C64>> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let directive = comment.trim().to_ascii_lowercase();
                if let Some(value) = directive.strip_prefix("unit:") {
                    unit = match value.trim() {
                        "cm-1" => EnergyUnit::WavenumberCmInv,
                        "dimensionless" => EnergyUnit::Dimensionless,
                        other => {
                            return Err(Error::ConfigParse {
                                line: idx + 1,
                                message: format!("unknown unit tag `{other}`"),
                            })
                        }
                    };
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let row: Vec<C64> = line
                .split_whitespace()
                .map(|tok| parse_complex_token(tok, idx + 1))
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::ConfigParse {
                line: 0,
                message: "matrix file contains no rows".into(),
            });
        }
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ConfigParse {
                    line: 0,
                    message: format!(
                        "matrix row {i} has {} entries but {n} rows were given",
                        row.len()
                    ),
                });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(matrix, unit)
    }

    /// Loads a matrix from a plain-text file (see [`Self::parse_matrix_text`]).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_matrix_text(&text)
    }
}

fn parse_complex_token(tok: &str, line: usize) -> Result<C64> {
    if let Ok(re) = tok.parse::<f64>() {
        return Ok(C64::new(re, 0.0));
    }
    tok.parse::<C64>().map_err(|_| Error::ConfigParse {
        line,
        message: format!("cannot parse matrix entry `{tok}`"),
    })
}

/// Real coefficients of the five-term two-qubit Hamiltonian
/// `c1*(sz@I) + c2*(sx@I) + c3*(sy@I) + c4*(sy@sy) + c5*(sx@sy)`.
///
/// The basis is ordered `|00>, |10>, |01>, |11>` (amplitudes a, b, c, d), and
/// single-qubit factors written before the `@` act on the second-listed ket
/// label, so `sz@I` gives the population imbalance `+1,+1,-1,-1` across that
/// basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl TwoQubitCoefficients {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64, c5: f64) -> Self {
        Self { c1, c2, c3, c4, c5 }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.c1, self.c2, self.c3, self.c4, self.c5]
    }
}

fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[
        C64::new(0.0, 0.0), C64::new(1.0, 0.0),
        C64::new(1.0, 0.0), C64::new(0.0, 0.0),
    ])
}

fn pauli_y() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[
        C64::new(0.0, 0.0), C64::new(0.0, -1.0),
        C64::new(0.0, 1.0), C64::new(0.0, 0.0),
    ])
}

fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[
        C64::new(1.0, 0.0), C64::new(0.0, 0.0),
        C64::new(0.0, 0.0), C64::new(-1.0, 0.0),
    ])
}

fn identity2() -> DMatrix<C64> {
    DMatrix::identity(2, 2)
}

/// Builds the 4 x 4 two-qubit Hamiltonian from its five coefficients.
pub fn two_qubit_hamiltonian(c: &TwoQubitCoefficients) -> Result<HermitianOperator> {
    if c.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "two-qubit coefficients",
        });
    }
    let terms = [
        (c.c1, pauli_z(), identity2()),
        (c.c2, pauli_x(), identity2()),
        (c.c3, pauli_y(), identity2()),
        (c.c4, pauli_y(), pauli_y()),
        (c.c5, pauli_x(), pauli_y()),
    ];
    let mut h = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
    for (coeff, a, b) in terms {
        h += a.kronecker(&b) * C64::new(coeff, 0.0);
    }
    HermitianOperator::new(h, EnergyUnit::Dimensionless)
}

/// The bundled 7 x 7 exciton-transfer Hamiltonian (wavenumber units), parsed
/// from the data file shipped with the crate.
pub fn fmo_hamiltonian() -> HermitianOperator {
    HermitianOperator::parse_matrix_text(SEVEN_SITE_MATRIX)
        .expect("bundled seven-site matrix is valid")
}

/// Evaluates `H_S = xhat^dag H xhat / N` at a chart point. The quadratic form
/// is real for Hermitian `H`; the real part is returned.
pub fn classical_hamiltonian(h: &HermitianOperator, state: &ProjectiveState) -> Result<f64> {
    Ok(classical_hamiltonian_with_gradient(h, state)?.0)
}

/// Evaluates the gradient `dH_S/d(conj x^k)`; component k is
/// `[(H xhat)_{sigma(k)} * N - D * x^k] / N^2` with `D = xhat^dag H xhat`.
pub fn grad_classical_hamiltonian(
    h: &HermitianOperator,
    state: &ProjectiveState,
) -> Result<DVector<C64>> {
    Ok(classical_hamiltonian_with_gradient(h, state)?.1)
}

/// Evaluates `H_S` and its conjugate-coordinate gradient together, sharing
/// the quadratic form `D` between them.
pub fn classical_hamiltonian_with_gradient(
    h: &HermitianOperator,
    state: &ProjectiveState,
) -> Result<(f64, DVector<C64>)> {
    if h.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs. state dimension",
            expected: state.dim(),
            found: h.dim(),
        });
    }
    let xhat = state.chart_representative();
    let hx = h.matrix() * &xhat;
    let d = xhat.dotc(&hx);
    debug_assert!(
        d.im.abs() <= 1e-12 * d.re.abs().max(1.0),
        "quadratic form of a Hermitian operator must be real"
    );
    let d = d.re;
    let nfac = state.normalization_factor();
    let value = d / nfac;
    let m = state.dim() - 1;
    let coords = state.coords();
    let grad = DVector::from_fn(m, |k, _| {
        (hx[state.coord_to_level(k)] * nfac - coords[k] * d) / (nfac * nfac)
    });
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::AmplitudeVector;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn entangled_state() -> ProjectiveState {
        AmplitudeVector::new(DVector::from_vec(vec![
            c(0.4f64.sqrt(), 0.0),
            c(0.4f64.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.2f64.sqrt(), 0.0),
        ]))
        .unwrap()
        .to_projective(3)
        .unwrap()
    }

    #[test]
    fn two_qubit_entries_follow_the_basis_convention() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(1.0, 2.0, 3.0, 4.0, 5.0))
            .unwrap();
        let m = h.matrix();
        // Diagonal: c1 * (+1, +1, -1, -1).
        assert_abs_diff_eq!(m[(0, 0)].re, 1.0);
        assert_abs_diff_eq!(m[(1, 1)].re, 1.0);
        assert_abs_diff_eq!(m[(2, 2)].re, -1.0);
        assert_abs_diff_eq!(m[(3, 3)].re, -1.0);
        // Off-diagonal pattern.
        assert_abs_diff_eq!(m[(0, 1)].norm(), 0.0);
        assert_abs_diff_eq!(m[(2, 3)].norm(), 0.0);
        assert_abs_diff_eq!(m[(0, 2)].re, 2.0);
        assert_abs_diff_eq!(m[(0, 2)].im, -3.0);
        assert_abs_diff_eq!(m[(1, 3)].re, 2.0);
        assert_abs_diff_eq!(m[(1, 3)].im, -3.0);
        assert_abs_diff_eq!(m[(0, 3)].re, -4.0);
        assert_abs_diff_eq!(m[(0, 3)].im, -5.0);
        assert_abs_diff_eq!(m[(1, 2)].re, 4.0);
        assert_abs_diff_eq!(m[(1, 2)].im, 5.0);
    }

    #[test]
    fn population_imbalance_term_is_diagonal() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(1.0, 0.0, 0.0, 0.0, 0.0))
            .unwrap();
        let expected = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expected[i] } else { 0.0 };
                assert_abs_diff_eq!(h.matrix()[(i, j)].re, want);
                assert_abs_diff_eq!(h.matrix()[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn zero_coefficients_give_zero_matrix() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(0.0, 0.0, 0.0, 0.0, 0.0))
            .unwrap();
        assert!(h.matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn yy_term_is_real_antidiagonal() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(0.0, 0.0, 0.0, 1.0, 0.0))
            .unwrap();
        let m = h.matrix();
        assert_abs_diff_eq!(m[(0, 3)].re, -1.0);
        assert_abs_diff_eq!(m[(1, 2)].re, 1.0);
        assert_abs_diff_eq!(m[(2, 1)].re, 1.0);
        assert_abs_diff_eq!(m[(3, 0)].re, -1.0);
        assert!(m.iter().all(|z| z.im == 0.0));
        for i in 0..4 {
            for j in 0..4 {
                if i + j != 3 {
                    assert_abs_diff_eq!(m[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn seven_site_matrix_entries() {
        let h = fmo_hamiltonian();
        assert_eq!(h.dim(), 7);
        assert_eq!(h.unit(), EnergyUnit::WavenumberCmInv);
        assert_abs_diff_eq!(h.matrix()[(0, 0)].re, 12410.0);
        assert_abs_diff_eq!(h.matrix()[(0, 1)].re, -87.7);
        assert_abs_diff_eq!(h.matrix()[(1, 0)].re, -87.7);
        assert_abs_diff_eq!(h.matrix()[(3, 6)].re, -63.3);
        assert!(h.matrix().iter().all(|z| z.im == 0.0));
        for i in 0..7 {
            for j in 0..7 {
                assert_abs_diff_eq!(h.matrix()[(i, j)].re, h.matrix()[(j, i)].re);
            }
        }
    }

    #[test]
    fn wavenumber_conversion_scales_entries() {
        let h = fmo_hamiltonian().in_internal_units();
        assert_eq!(h.unit(), EnergyUnit::Dimensionless);
        assert_relative_eq!(
            h.matrix()[(0, 0)].re,
            12410.0 * 0.188_365_156_730_885_32,
            max_relative = 1e-10
        );
        // A dimensionless operator is unchanged.
        let again = h.in_internal_units();
        assert_eq!(again.matrix(), h.matrix());
    }

    #[test]
    fn non_hermitian_matrices_are_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[
            c(1.0, 0.0), c(1.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0),
        ]);
        assert!(matches!(
            HermitianOperator::new(m, EnergyUnit::Dimensionless),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn classical_hamiltonian_of_identity_is_one() {
        let h = HermitianOperator::new(
            DMatrix::identity(4, 4),
            EnergyUnit::Dimensionless,
        )
        .unwrap();
        let v = classical_hamiltonian(&h, &entangled_state()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn classical_hamiltonian_imbalance_example() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(1.0, 0.0, 0.0, 0.0, 0.0))
            .unwrap();
        let v = classical_hamiltonian(&h, &entangled_state()).unwrap();
        // (2 + 2 - 0 - 1) / 5
        assert_relative_eq!(v, 0.6, max_relative = 1e-14);
    }

    #[test]
    fn classical_hamiltonian_yy_example() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(0.0, 0.0, 0.0, 1.0, 0.0))
            .unwrap();
        let v = classical_hamiltonian(&h, &entangled_state()).unwrap();
        assert_relative_eq!(v, -2.0 * 2.0f64.sqrt() / 5.0, max_relative = 1e-14);
    }

    #[test]
    fn gradient_of_identity_vanishes() {
        let h = HermitianOperator::new(
            DMatrix::identity(4, 4),
            EnergyUnit::Dimensionless,
        )
        .unwrap();
        let g = grad_classical_hamiltonian(&h, &entangled_state()).unwrap();
        assert!(g.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn gradient_imbalance_example() {
        let h = two_qubit_hamiltonian(&TwoQubitCoefficients::new(1.0, 0.0, 0.0, 0.0, 0.0))
            .unwrap();
        let g = grad_classical_hamiltonian(&h, &entangled_state()).unwrap();
        // Component 0: [sqrt(2)*5 - 3*sqrt(2)] / 25 = 2 sqrt(2) / 25.
        assert_relative_eq!(g[0].re, 2.0 * 2.0f64.sqrt() / 25.0, max_relative = 1e-13);
        assert_abs_diff_eq!(g[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trace_shift_leaves_gradient_unchanged() {
        let ham = two_qubit_hamiltonian(&TwoQubitCoefficients::new(0.3, -1.2, 0.8, 0.5, -0.7))
            .unwrap();
        let shifted = HermitianOperator::new(
            ham.matrix() + DMatrix::<C64>::identity(4, 4) * c(2.5, 0.0),
            EnergyUnit::Dimensionless,
        )
        .unwrap();
        let s = entangled_state();
        let g0 = grad_classical_hamiltonian(&ham, &s).unwrap();
        let g1 = grad_classical_hamiltonian(&shifted, &s).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(g0[k].re, g1[k].re, epsilon = 1e-12);
            assert_abs_diff_eq!(g0[k].im, g1[k].im, epsilon = 1e-12);
        }
    }

    #[test]
    fn value_is_invariant_under_rechart() {
        let ham = two_qubit_hamiltonian(&TwoQubitCoefficients::new(0.3, -1.2, 0.8, 0.5, -0.7))
            .unwrap();
        let s = entangled_state();
        let v0 = classical_hamiltonian(&ham, &s).unwrap();
        let v1 = classical_hamiltonian(&ham, &s.rechart(0).unwrap()).unwrap();
        assert_abs_diff_eq!(v0, v1, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = HermitianOperator::new(DMatrix::identity(3, 3), EnergyUnit::Dimensionless)
            .unwrap();
        assert!(matches!(
            classical_hamiltonian(&h, &entangled_state()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matrix_text_round_trip_with_unit_header() {
        let text = "# unit: cm-1\n1.0 2.0\n2.0 -1.0\n";
        let h = HermitianOperator::parse_matrix_text(text).unwrap();
        assert_eq!(h.unit(), EnergyUnit::WavenumberCmInv);
        assert_abs_diff_eq!(h.matrix()[(0, 1)].re, 2.0);
    }

    #[test]
    fn matrix_text_supports_complex_entries() {
        let text = "1.0 0.5+0.25i\n0.5-0.25i 2.0\n";
        let h = HermitianOperator::parse_matrix_text(text).unwrap();
        assert_abs_diff_eq!(h.matrix()[(0, 1)].im, 0.25);
        assert_abs_diff_eq!(h.matrix()[(1, 0)].im, -0.25);
    }

    #[test]
    fn malformed_matrix_text_is_rejected() {
        assert!(matches!(
            HermitianOperator::parse_matrix_text("1.0 oops\n"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
        assert!(matches!(
            HermitianOperator::parse_matrix_text("1.0 2.0\n2.0\n"),
            Err(Error::ConfigParse { .. })
        ));
        assert!(matches!(
            HermitianOperator::parse_matrix_text(""),
            Err(Error::ConfigParse { .. })
        ));
    }
}
