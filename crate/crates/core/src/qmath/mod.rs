//! Dense complex linear algebra and quantum-state primitives for registers
//! of up to about six qubits.
//!
//! Qubit 0 is the most significant factor of every Kronecker product, so the
//! input qubit of a reservoir occupies the leading tensor slot.

mod linalg;
mod matrix;
mod random;
mod state;

pub use linalg::{hermitian_eig, unitary_evolution, HermitianEigen};
pub use matrix::{embed_pair, embed_single, pauli_x, pauli_y, pauli_z, ComplexMatrix};
pub use random::{haar_random_1q, haar_unitary, random_density_matrix};
pub use state::{expectation, DensityMatrix, PureState, Tolerances, DEFAULT_TOLERANCES};

pub use num_complex::Complex64 as C64;
