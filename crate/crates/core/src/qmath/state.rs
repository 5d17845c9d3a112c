//! Pure states and density matrices on qubit registers.

use num_complex::Complex64 as C64;

use super::linalg::hermitian_eig;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Numerical tolerances used when validating states and operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub norm: f64,
    pub hermitian: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub unitary: f64,
    pub imaginary_expectation: f64,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    norm: 1e-12,
    hermitian: 1e-10,
    trace: 1e-10,
    min_eigenvalue: -1e-9,
    unitary: 1e-10,
    imaginary_expectation: 1e-9,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > DEFAULT_TOLERANCES.norm {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state `index` of `n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `|psi><psi|`.
    pub fn outer(&self) -> DensityMatrix {
        let a = &self.amplitudes;
        let matrix = ComplexMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj());
        DensityMatrix::from_matrix_unchecked(matrix)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates `matrix` against the default tolerances.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &DEFAULT_TOLERANCES)
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() || !matrix.rows().is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "{}x{} is not a qubit-register operator",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let rho = Self::from_matrix_unchecked(matrix);
        rho.check_invariants(tol)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square() && matrix.rows().is_power_of_two());
        Self {
            n_qubits: matrix.rows().trailing_zeros() as usize,
            matrix,
        }
    }

    /// `Id / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self::from_matrix_unchecked(
            ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr(rho^2)`, using Hermiticity: the sum of squared moduli of all entries.
    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = hermitian_eig(&self.matrix)?;
        Ok(eig.values[0])
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn check_invariants(&self, tol: &Tolerances) -> Result<()> {
        if !self.matrix.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = self.matrix.hermiticity_error();
        if herm > tol.hermitian {
            return Err(Error::InvalidState(format!("hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.min_eigenvalue()?;
        if min_eig < tol.min_eigenvalue {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// Traces out qubit 0, the most significant factor.
    pub fn partial_trace_first(&self) -> Result<Self> {
        if self.n_qubits < 2 {
            return Err(Error::UnsupportedQubitCount("partial trace", 2));
        }
        let half = self.dim() / 2;
        let m = &self.matrix;
        let reduced =
            ComplexMatrix::from_fn(half, half, |i, j| m[(i, j)] + m[(half + i, half + j)]);
        Ok(Self::from_matrix_unchecked(reduced))
    }

    /// Hermitian part scaled to unit trace. Long drives apply thousands of
    /// unitaries, and this removes the rounding drift they accumulate.
    pub fn renormalized(&self) -> Self {
        let m = &self.matrix;
        let tr = self.trace().re;
        let d = self.dim();
        let fixed =
            ComplexMatrix::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * (0.5 / tr));
        Self::from_matrix_unchecked(fixed)
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.matrix.kron(&other.matrix))
    }

    /// `U rho U^dagger`.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<Self> {
        if unitary.rows() != self.dim() || !unitary.is_square() {
            return Err(Error::dims(
                format!("{0}x{0} unitary", self.dim()),
                format!("{}x{}", unitary.rows(), unitary.cols()),
            ));
        }
        Ok(Self::from_matrix_unchecked(
            self.matrix.conjugate_hermitian(unitary),
        ))
    }
}

/// `Re Tr(rho * obs)`; fails when the trace carries a non-negligible imaginary part.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.rows() != rho.dim() || obs.cols() != rho.dim() {
        return Err(Error::dims(
            format!("{0}x{0}", rho.dim()),
            format!("{}x{}", obs.rows(), obs.cols()),
        ));
    }
    let n = rho.dim();
    let r = rho.matrix().as_slice();
    let o = obs.as_slice();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += r[i * n + k] * o[k * n + i];
        }
    }
    if acc.im.abs() > DEFAULT_TOLERANCES.imaginary_expectation {
        return Err(Error::NonRealExpectation(acc.im));
    }
    Ok(acc.re)
}
