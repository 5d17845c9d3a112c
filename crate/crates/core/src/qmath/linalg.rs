//! Hermitian eigendecomposition and the unitaries generated from it.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use super::state::DEFAULT_TOLERANCES;
use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let weights: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * weights[k] * v[(j, k)].conj())
                .sum()
        })
    }

    /// `exp(-i H t)` from the stored decomposition.
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        self.apply_spectral(|l| C64::new(0.0, -l * t).exp())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_spectral(|l| C64::new(l, 0.0))
    }
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::dims(
            "square matrix",
            format!("{}x{}", h.rows(), h.cols()),
        ));
    }
    let herm = h.hermiticity_error();
    if herm > DEFAULT_TOLERANCES.hermitian {
        return Err(Error::NotHermitian(herm));
    }
    let eig = SymmetricEigen::try_new(h.to_nalgebra(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let n = values.len();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    if values.iter().any(|v| !v.is_finite()) || !vectors.is_finite() {
        return Err(Error::Eigen("non-finite eigenpairs".into()));
    }
    Ok(HermitianEigen { values, vectors })
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_evolution(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(h)?.evolution(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{pauli_x, pauli_z};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&g + &g.dagger()).scale(C64::new(0.5, 0.0))
    }

    #[test]
    fn diagonal_input() {
        let eig = hermitian_eig(&pauli_z()).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn pauli_x_eigenvectors() {
        let eig = hermitian_eig(&pauli_x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14 && (eig.values[1] - 1.0).abs() < 1e-14);
        let minus = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
        let plus = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        for (col, want) in [(0, minus), (1, plus)] {
            // overlap modulus 1 means equality up to a global phase
            let overlap: C64 = (0..2).map(|i| eig.vectors[(i, col)].conj() * want[i]).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_on_random_16() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let h = random_hermitian(16, &mut rng);
            let eig = hermitian_eig(&h).unwrap();
            assert!(eig.reconstruct().max_abs_diff(&h) < 1e-9);
            assert!(eig.vectors.is_unitary(1e-10));
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(8, &mut rng);
        assert!(
            unitary_evolution(&h, 0.0)
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(8))
                < 1e-12
        );
    }

    #[test]
    fn pauli_z_quarter_period() {
        let u = unitary_evolution(&pauli_z(), FRAC_PI_2).unwrap();
        let want = ComplexMatrix::diag(&[C64::new(0.0, -1.0), C64::new(0.0, 1.0)]);
        assert!(u.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn group_property_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(16, &mut rng);
        let eig = hermitian_eig(&h).unwrap();
        let (t1, t2) = (0.37, 1.9);
        let prod = &eig.evolution(t1) * &eig.evolution(t2);
        assert!(prod.max_abs_diff(&eig.evolution(t1 + t2)) < 1e-9);
        assert!(eig.evolution(20.0).is_unitary(1e-10));
    }

    #[test]
    fn evolution_acts_as_phase_on_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(8, &mut rng);
        let eig = hermitian_eig(&h).unwrap();
        let t = 3.3;
        let u = eig.evolution(t);
        for k in 0..8 {
            let v = ComplexMatrix::from_fn(8, 1, |i, _| eig.vectors[(i, k)]);
            let uv = &u * &v;
            let want = v.scale(C64::new(0.0, -eig.values[k] * t).exp());
            assert!(uv.max_abs_diff(&want) < 1e-9);
        }
    }
}
