//! Haar-random unitaries and Ginibre-ensemble density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;
use super::state::DensityMatrix;

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng))
}

/// Haar-distributed `dim x dim` unitary: QR of a Ginibre matrix with the
/// phases of `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g: DMatrix<C64> = ginibre(dim, rng).to_nalgebra();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phases: Vec<C64> = (0..dim)
        .map(|k| {
            let d = r[(k, k)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    ComplexMatrix::from_fn(dim, dim, |i, j| q[(i, j)] * phases[j])
}

pub fn haar_random_1q<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    haar_unitary(2, rng)
}

/// `G G^dagger / Tr(G G^dagger)` with `G` square Ginibre.
pub fn random_density_matrix<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(1 << n_qubits, rng);
    let gg = &g * &g.dagger();
    let tr = gg.trace().re;
    let mut m = gg.scale(C64::new(1.0 / tr, 0.0));
    // enforce exact Hermiticity against rounding in the product
    let n = m.rows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = m[(i, j)];
            m[(j, i)] = z.conj();
        }
    }
    DensityMatrix::from_matrix_unchecked(m)
}
