//! The two reservoir models, each expressed as the ordered unitary segments
//! of one clock cycle plus the observables read out after every segment.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmath::{
    embed_pair, embed_single, haar_random_1q, hermitian_eig, pauli_x, pauli_y, pauli_z,
    ComplexMatrix, DEFAULT_TOLERANCES,
};

#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirModel {
    pub n_qubits: usize,
    /// Unitaries applied in order within one clock cycle.
    pub segments: Vec<ComplexMatrix>,
    pub observables: Vec<ComplexMatrix>,
    /// Read out after every segment (time multiplexing) rather than only at the end of the cycle.
    pub measure_after_each_segment: bool,
}

impl ReservoirModel {
    pub fn new(
        n_qubits: usize,
        segments: Vec<ComplexMatrix>,
        observables: Vec<ComplexMatrix>,
        measure_after_each_segment: bool,
    ) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if segments.is_empty() || observables.is_empty() {
            return Err(Error::InvalidArgument(
                "reservoir needs segments and observables".into(),
            ));
        }
        for (k, seg) in segments.iter().enumerate() {
            if seg.rows() != dim || !seg.is_square() {
                return Err(Error::dims(
                    format!("{dim}x{dim} segment"),
                    format!("segment {k}"),
                ));
            }
            let err = seg.unitarity_error();
            if err > DEFAULT_TOLERANCES.unitary {
                return Err(Error::InvalidArgument(format!(
                    "segment {k} not unitary (error {err:e})"
                )));
            }
        }
        for obs in &observables {
            if obs.rows() != dim || !obs.is_hermitian(DEFAULT_TOLERANCES.hermitian) {
                return Err(Error::InvalidArgument(
                    "observable must be a Hermitian register operator".into(),
                ));
            }
        }
        Ok(Self {
            n_qubits,
            segments,
            observables,
            measure_after_each_segment,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of measurement points per clock cycle.
    pub fn measurement_points(&self) -> usize {
        if self.measure_after_each_segment {
            self.segments.len()
        } else {
            1
        }
    }

    pub fn feature_count(&self) -> usize {
        self.measurement_points() * self.observables.len()
    }

    /// Product of all segments, first segment rightmost.
    pub fn cycle_unitary(&self) -> ComplexMatrix {
        self.segments
            .iter()
            .fold(ComplexMatrix::identity(self.dim()), |acc, seg| seg * &acc)
    }
}

/// `Z_0 .. Z_{n-1}`.
pub fn z_observables(n_qubits: usize) -> Vec<ComplexMatrix> {
    (0..n_qubits)
        .map(|q| embed_single(&pauli_z(), q, n_qubits))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingParams {
    pub n_qubits: usize,
    /// Symmetric coupling matrix; only entries with `i < j` enter the Hamiltonian.
    pub couplings: Vec<Vec<f64>>,
    pub field: f64,
    pub clock_cycle: f64,
    pub virtual_nodes: usize,
    pub coupling_seed: u64,
}

impl IsingParams {
    pub const COUPLING_RANGE: (f64, f64) = (0.25, 0.75);
    pub const DEFAULT_FIELD: f64 = 0.5;
    pub const DEFAULT_CLOCK_CYCLE: f64 = 20.0;
    pub const DEFAULT_VIRTUAL_NODES: usize = 30;

    /// Draws `J_ij` i.i.d. uniform on `[0.25, 0.75]` from `coupling_seed`.
    pub fn sample(
        n_qubits: usize,
        field: f64,
        clock_cycle: f64,
        virtual_nodes: usize,
        coupling_seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(coupling_seed);
        let (lo, hi) = Self::COUPLING_RANGE;
        let mut couplings = vec![vec![0.0; n_qubits]; n_qubits];
        for i in 0..n_qubits {
            for j in (i + 1)..n_qubits {
                let v = rng.random_range(lo..=hi);
                couplings[i][j] = v;
                couplings[j][i] = v;
            }
        }
        Self {
            n_qubits,
            couplings,
            field,
            clock_cycle,
            virtual_nodes,
            coupling_seed,
        }
    }

    pub fn with_defaults(coupling_seed: u64) -> Self {
        Self::sample(
            4,
            Self::DEFAULT_FIELD,
            Self::DEFAULT_CLOCK_CYCLE,
            Self::DEFAULT_VIRTUAL_NODES,
            coupling_seed,
        )
    }

    /// Virtual-node separation `T / N_V`.
    pub fn theta(&self) -> f64 {
        self.clock_cycle / self.virtual_nodes as f64
    }
}

/// `H = sum_{i<j} J_ij X_i X_j + sum_i h Z_i`.
pub fn build_ising_hamiltonian(p: &IsingParams) -> ComplexMatrix {
    let n = p.n_qubits;
    let mut h = ComplexMatrix::zeros(1 << n, 1 << n);
    for i in 0..n {
        for j in (i + 1)..n {
            let xx = embed_pair(&pauli_x(), i, &pauli_x(), j, n);
            h = &h + &xx.scale(C64::new(p.couplings[i][j], 0.0));
        }
        h = &h + &embed_single(&pauli_z(), i, n).scale(C64::new(p.field, 0.0));
    }
    h
}

/// `N_V` identical segments `exp(-i H theta)`, read out through `Z_i`.
pub fn build_ising_model(p: &IsingParams) -> Result<ReservoirModel> {
    if p.virtual_nodes == 0 {
        return Err(Error::InvalidArgument(
            "need at least one virtual node".into(),
        ));
    }
    let eig = hermitian_eig(&build_ising_hamiltonian(p))?;
    let step = eig.evolution(p.theta());
    ReservoirModel::new(
        p.n_qubits,
        vec![step; p.virtual_nodes],
        z_observables(p.n_qubits),
        true,
    )
}

/// `exp(i (a X_k X_l + b Y_k Y_l + c Z_k Z_l))` on an `n_qubits` register.
pub fn two_qubit_phase_gate(
    a: f64,
    b: f64,
    c: f64,
    k: usize,
    l: usize,
    n_qubits: usize,
) -> ComplexMatrix {
    assert_ne!(k, l, "two-qubit gate needs distinct qubits");
    // XX, YY and ZZ commute, so the exponential factorises; each factor
    // squares to the identity: exp(i t P) = cos t + i sin t P.
    let factor = |t: f64, p: ComplexMatrix| {
        let pp = embed_pair(&p, k, &p, l, n_qubits);
        let id = ComplexMatrix::identity(1 << n_qubits);
        &id.scale(C64::new(t.cos(), 0.0)) + &pp.scale(C64::new(0.0, t.sin()))
    };
    let xx = factor(a, pauli_x());
    let yy = factor(b, pauli_y());
    let zz = factor(c, pauli_z());
    &(&xx * &yy) * &zz
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    pub n_qubits: usize,
    pub repetitions: usize,
    pub param_interval: (f64, f64),
    pub gate_seed: u64,
}

impl CircuitParams {
    pub const DEFAULT_REPETITIONS: usize = 10;
    pub const DEFAULT_INTERVAL: (f64, f64) = (0.1, 0.2);

    pub fn with_defaults(gate_seed: u64) -> Self {
        Self {
            n_qubits: 4,
            repetitions: Self::DEFAULT_REPETITIONS,
            param_interval: Self::DEFAULT_INTERVAL,
            gate_seed,
        }
    }

    /// Builds the model with gates drawn from `gate_seed`.
    pub fn build(&self) -> Result<ReservoirModel> {
        build_circuit_model(self, &mut ChaCha8Rng::seed_from_u64(self.gate_seed))
    }
}

/// One dressed two-qubit block: `(pre_k ⊗ pre_l) U_{k,l}(a,b,c) (post_k ⊗ post_l)`.
#[derive(Clone, Debug)]
pub struct CircuitGate {
    pub qubits: (usize, usize),
    pub params: (f64, f64, f64),
    pub pre: (ComplexMatrix, ComplexMatrix),
    pub post: (ComplexMatrix, ComplexMatrix),
}

impl CircuitGate {
    fn sample<R: Rng + ?Sized>(k: usize, l: usize, interval: (f64, f64), rng: &mut R) -> Self {
        let (lo, hi) = interval;
        let params = (
            rng.random_range(lo..=hi),
            rng.random_range(lo..=hi),
            rng.random_range(lo..=hi),
        );
        let pre = (haar_random_1q(rng), haar_random_1q(rng));
        let post = (haar_random_1q(rng), haar_random_1q(rng));
        Self {
            qubits: (k, l),
            params,
            pre,
            post,
        }
    }

    pub fn matrix(&self, n_qubits: usize) -> ComplexMatrix {
        let (k, l) = self.qubits;
        let (a, b, c) = self.params;
        let pre = embed_pair(&self.pre.0, k, &self.pre.1, l, n_qubits);
        let post = embed_pair(&self.post.0, k, &self.post.1, l, n_qubits);
        &(&pre * &two_qubit_phase_gate(a, b, c, k, l, n_qubits)) * &post
    }
}

/// Assembles `[W, V]` repeated `repetitions` times from explicit gate lists.
pub fn circuit_model_from_gates(
    n_qubits: usize,
    w_gates: &[CircuitGate],
    v_gates: &[CircuitGate],
    repetitions: usize,
) -> Result<ReservoirModel> {
    let layer = |gates: &[CircuitGate]| {
        gates
            .iter()
            .fold(ComplexMatrix::identity(1 << n_qubits), |acc, g| {
                &g.matrix(n_qubits) * &acc
            })
    };
    let w = layer(w_gates);
    let v = layer(v_gates);
    let mut segments = Vec::with_capacity(2 * repetitions);
    for _ in 0..repetitions {
        segments.push(w.clone());
        segments.push(v.clone());
    }
    ReservoirModel::new(n_qubits, segments, z_observables(n_qubits), true)
}

/// Brick-wall circuit: `W` couples pairs (0,1), (2,3), ...; `V` couples
/// (1,2), (3,4), ... with open boundaries. Each segment of the cycle is one
/// sublayer, so the unitary per input is `(V W)^{N_W}`.
pub fn build_circuit_model<R: Rng + ?Sized>(
    p: &CircuitParams,
    rng: &mut R,
) -> Result<ReservoirModel> {
    let n = p.n_qubits;
    if n < 2 || p.repetitions == 0 {
        return Err(Error::InvalidArgument(
            "circuit needs at least 2 qubits and one repetition".into(),
        ));
    }
    let (lo, hi) = p.param_interval;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "empty parameter interval [{lo}, {hi}]"
        )));
    }
    let w_gates: Vec<CircuitGate> = (0..n / 2)
        .map(|j| CircuitGate::sample(2 * j, 2 * j + 1, p.param_interval, rng))
        .collect();
    let v_gates: Vec<CircuitGate> = (0..(n - 1) / 2)
        .map(|j| CircuitGate::sample(2 * j + 1, 2 * j + 2, p.param_interval, rng))
        .collect();
    circuit_model_from_gates(n, &w_gates, &v_gates, p.repetitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{unitary_evolution, HermitianEigen};

    fn ising2(j: f64, h: f64) -> IsingParams {
        IsingParams {
            n_qubits: 2,
            couplings: vec![vec![0.0, j], vec![j, 0.0]],
            field: h,
            clock_cycle: 20.0,
            virtual_nodes: 30,
            coupling_seed: 0,
        }
    }

    #[test]
    fn two_qubit_hamiltonian_entries() {
        let h = build_ising_hamiltonian(&ising2(0.5, 0.5));
        assert_eq!(h[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(h[(0, 3)], C64::new(0.5, 0.0));
        assert_eq!(h[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn pure_field_hamiltonian_is_diagonal() {
        let mut p = IsingParams::with_defaults(3);
        p.couplings = vec![vec![0.0; 4]; 4];
        let h = build_ising_hamiltonian(&p);
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j {
                    p.field * (4.0 - 2.0 * (i as u32).count_ones() as f64)
                } else {
                    0.0
                };
                assert!((h[(i, j)] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_field_is_traceless_and_real_symmetric() {
        let mut p = IsingParams::with_defaults(8);
        p.field = 0.0;
        let h = build_ising_hamiltonian(&p);
        assert!(h.trace().norm() < 1e-14);
        let hp = build_ising_hamiltonian(&IsingParams::with_defaults(8));
        assert!(hp.as_slice().iter().all(|z| z.im == 0.0));
        assert!(hp.is_hermitian(1e-12));
    }

    #[test]
    fn couplings_within_range() {
        let p = IsingParams::with_defaults(123);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((0.25..=0.75).contains(&p.couplings[i][j]));
                assert_eq!(p.couplings[i][j], p.couplings[j][i]);
            }
        }
    }

    #[test]
    fn ising_model_shape() {
        let p = IsingParams::with_defaults(1);
        assert!((p.theta() - 20.0 / 30.0).abs() < 1e-15);
        let model = build_ising_model(&p).unwrap();
        assert_eq!(model.feature_count(), 120);
        let full = unitary_evolution(&build_ising_hamiltonian(&p), 20.0).unwrap();
        assert!(model.cycle_unitary().max_abs_diff(&full) < 1e-9);
    }

    #[test]
    fn ising_time_reversal() {
        let eig: HermitianEigen =
            hermitian_eig(&build_ising_hamiltonian(&IsingParams::with_defaults(4))).unwrap();
        let u = eig.evolution(1.3);
        assert!(eig.evolution(-1.3).max_abs_diff(&u.dagger()) < 1e-10);
    }

    #[test]
    fn phase_gate_identity_and_closed_form() {
        assert!(
            two_qubit_phase_gate(0.0, 0.0, 0.0, 0, 1, 2).max_abs_diff(&ComplexMatrix::identity(4))
                < 1e-15
        );
        let a = 0.37;
        let got = two_qubit_phase_gate(a, 0.0, 0.0, 0, 1, 2);
        let xx = pauli_x().kron(&pauli_x());
        let want = &ComplexMatrix::identity(4).scale(C64::new(a.cos(), 0.0))
            + &xx.scale(C64::new(0.0, a.sin()));
        assert!(got.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn phase_gate_matches_generator_exponential() {
        let (a, b, c) = (0.13, 0.17, 0.19);
        let gen = |p: ComplexMatrix, s: f64| embed_pair(&p, 1, &p, 2, 4).scale(C64::new(s, 0.0));
        let g = &(&gen(pauli_x(), a) + &gen(pauli_y(), b)) + &gen(pauli_z(), c);
        let via_eig = unitary_evolution(&g.scale(C64::new(-1.0, 0.0)), 1.0).unwrap();
        let gate = two_qubit_phase_gate(a, b, c, 1, 2, 4);
        assert!(gate.max_abs_diff(&via_eig) < 1e-12);
        assert!((&gate * &g).max_abs_diff(&(&g * &gate)) < 1e-12);
    }

    #[test]
    fn phase_gate_eigenphases() {
        let (a, b, c) = (0.3, 0.5, 0.7);
        let gate = two_qubit_phase_gate(a, b, c, 0, 1, 2);
        // On the Bell basis XX, YY, ZZ are simultaneously diagonal with
        // eigenvalue triples (1,-1,1), (-1,1,1), (1,1,-1), (-1,-1,-1).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bells = [
            ([s, 0.0, 0.0, s], (1.0, -1.0, 1.0)),
            ([0.0, s, s, 0.0], (1.0, 1.0, -1.0)),
            ([s, 0.0, 0.0, -s], (-1.0, 1.0, 1.0)),
            ([0.0, s, -s, 0.0], (-1.0, -1.0, -1.0)),
        ];
        for (v, (x, y, z)) in bells {
            let ket = ComplexMatrix::from_real(4, 1, &v).unwrap();
            let phase = C64::new(0.0, a * x + b * y + c * z).exp();
            assert!((&gate * &ket).max_abs_diff(&ket.scale(phase)) < 1e-12);
        }
    }

    #[test]
    fn circuit_model_shape_and_unitarity() {
        let model = CircuitParams::with_defaults(7).build().unwrap();
        assert_eq!(model.segments.len(), 20);
        assert_eq!(model.feature_count(), 80);
        for seg in &model.segments {
            assert!(seg.is_unitary(1e-10));
        }
    }

    #[test]
    fn circuit_model_is_reproducible() {
        let a = CircuitParams::with_defaults(11).build().unwrap();
        let b = CircuitParams::with_defaults(11).build().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_circuit_is_identity() {
        let id = ComplexMatrix::identity(2);
        let gate = |k, l| CircuitGate {
            qubits: (k, l),
            params: (0.0, 0.0, 0.0),
            pre: (id.clone(), id.clone()),
            post: (id.clone(), id.clone()),
        };
        let model =
            circuit_model_from_gates(4, &[gate(0, 1), gate(2, 3)], &[gate(1, 2)], 10).unwrap();
        for seg in &model.segments {
            assert!(seg.max_abs_diff(&ComplexMatrix::identity(16)) < 1e-15);
        }
    }

    #[test]
    fn circuit_layers_have_open_boundary() {
        // The V sublayer of a four-qubit circuit touches only qubits 1 and 2,
        // so it commutes with any operator on qubits 0 and 3 alone.
        let model = CircuitParams::with_defaults(2).build().unwrap();
        let v = &model.segments[1];
        let probe = embed_pair(&pauli_x(), 0, &pauli_y(), 3, 4);
        assert!((v * &probe).max_abs_diff(&(&probe * v)) < 1e-12);
    }
}
