//! Dense row-major complex matrices sized for a handful of qubits.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dims(rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Largest entrywise modulus of `U^dagger U - I`.
    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.dagger() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Kronecker product with `self` as the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for ia in 0..self.rows {
            for ja in 0..self.cols {
                let a = self[(ia, ja)];
                if a == ZERO {
                    continue;
                }
                for ib in 0..other.rows {
                    let row = (ia * other.rows + ib) * cols + ja * other.cols;
                    let src = &other.data[ib * other.cols..(ib + 1) * other.cols];
                    for (dst, b) in data[row..row + other.cols].iter_mut().zip(src) {
                        *dst = a * b;
                    }
                }
            }
        }
        Self { rows, cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(
                format!("{} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        Ok(self.matmul_unchecked(other))
    }

    fn matmul_unchecked(&self, other: &Self) -> Self {
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let out_row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                let b_row = &other.data[k * p..(k + 1) * p];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self {
            rows: n,
            cols: p,
            data: out,
        }
    }

    /// `U * self * U^dagger` for square `self`, exploiting that the result of
    /// conjugating a Hermitian matrix is Hermitian.
    pub fn conjugate_hermitian(&self, u: &Self) -> Self {
        let n = self.rows;
        debug_assert!(self.is_square() && u.rows == n && u.cols == n);
        let left = u.matmul_unchecked(self);
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let l_row = &left.data[i * n..(i + 1) * n];
            for j in i..n {
                let u_row = &u.data[j * n..(j + 1) * n];
                let mut acc = ZERO;
                for (a, b) in l_row.iter().zip(u_row) {
                    acc += a * b.conj();
                }
                out[i * n + j] = acc;
                if j != i {
                    out[j * n + i] = acc.conj();
                }
            }
        }
        Self {
            rows: n,
            cols: n,
            data: out,
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on incompatible shapes; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "incompatible shapes for product");
        self.matmul_unchecked(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_vec(
        2,
        2,
        vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
    )
    .unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
}

/// Embeds a single-qubit operator on `qubit` (0 = most significant) of an
/// `n_qubits` register.
pub fn embed_single(op: &ComplexMatrix, qubit: usize, n_qubits: usize) -> ComplexMatrix {
    assert!(
        qubit < n_qubits,
        "qubit {qubit} outside {n_qubits}-qubit register"
    );
    let left = ComplexMatrix::identity(1 << qubit);
    let right = ComplexMatrix::identity(1 << (n_qubits - qubit - 1));
    left.kron(op).kron(&right)
}

/// Embeds two single-qubit operators acting on distinct qubits `k` and `l`.
pub fn embed_pair(
    op_k: &ComplexMatrix,
    k: usize,
    op_l: &ComplexMatrix,
    l: usize,
    n_qubits: usize,
) -> ComplexMatrix {
    assert_ne!(k, l, "pair embedding needs distinct qubits");
    let mut acc = ComplexMatrix::identity(1);
    for q in 0..n_qubits {
        let factor = if q == k {
            op_k.clone()
        } else if q == l {
            op_l.clone()
        } else {
            ComplexMatrix::identity(2)
        };
        acc = acc.kron(&factor);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::diag(&v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_flips_first_qubit() {
        let op = pauli_x().kron(&ComplexMatrix::identity(2));
        // |00> is basis index 0, |10> is index 2 with qubit 0 most significant.
        let ket00 = ComplexMatrix::from_real(4, 1, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = &op * &ket00;
        let ket10 = ComplexMatrix::from_real(4, 1, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(out, ket10);
    }

    #[test]
    fn kron_of_diagonals() {
        let got = real_diag(&[1.0, 2.0]).kron(&real_diag(&[3.0, 4.0]));
        assert_eq!(got, real_diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_index_formula() {
        let a = ComplexMatrix::from_fn(2, 3, |i, j| C64::new((i * 3 + j) as f64, 1.0));
        let b = ComplexMatrix::from_fn(3, 2, |i, j| C64::new(1.0, (i + 2 * j) as f64));
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        for ia in 0..2 {
            for ja in 0..3 {
                for ib in 0..3 {
                    for jb in 0..2 {
                        assert_eq!(k[(ia * 3 + ib, ja * 2 + jb)], a[(ia, ja)] * b[(ib, jb)]);
                    }
                }
            }
        }
    }

    #[test]
    fn conjugation_matches_two_products() {
        let u = ComplexMatrix::from_fn(4, 4, |i, j| {
            C64::new((i + j) as f64 * 0.1, (i as f64) - j as f64)
        });
        let h = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else if i < j {
                C64::new(0.5, (i + j) as f64)
            } else {
                C64::new(0.5, -((i + j) as f64))
            }
        });
        let want = &(&u * &h) * &u.dagger();
        assert!(h.conjugate_hermitian(&u).max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn checked_matmul_rejects_bad_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn paulis_are_hermitian_and_unitary() {
        for p in [pauli_x(), pauli_y(), pauli_z()] {
            assert!(p.is_hermitian(0.0));
            assert!(p.is_unitary(0.0));
        }
    }

    #[test]
    fn embed_pair_matches_two_single_embeddings() {
        let xx = embed_pair(&pauli_x(), 1, &pauli_z(), 3, 4);
        let prod = &embed_single(&pauli_x(), 1, 4) * &embed_single(&pauli_z(), 3, 4);
        assert_eq!(xx, prod);
    }
}
