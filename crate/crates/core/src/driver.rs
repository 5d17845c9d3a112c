//! Drive schemes: the full-history scheme (every output re-feeds the whole
//! input history, quadratic hardware cost) and the reset-window scheme (every
//! output re-feeds only the last `n` inputs, linear hardware cost).
//!
//! Expectation values are linear in the state, so the full-history scheme is
//! simulated in one sequential pass; [`RunStats`] still reports the number of
//! input insertions a measurement-collapsing device would need.
//!
//! Time-multiplexed readouts are evaluated in the Heisenberg picture: the
//! observable read after segment `k` is `V_k^† O V_k` with `V_k` the product of
//! the first `k` segments, applied to the state right after injection. This is
//! the same number as evolving segment by segment and measuring.

use std::io::Write;
use std::ops::Range;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::encode::{encode_input, initial_state, restart_rng, InitialStateKind};
use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, DensityMatrix, Tolerances, DEFAULT_TOLERANCES};
use crate::reservoir::ReservoirModel;

/// Recorded readouts: one row per input step, features followed by a bias column of ones.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMatrix {
    first_step: usize,
    rows: usize,
    n_features: usize,
    values: Vec<f64>,
}

impl StateMatrix {
    /// Builds a matrix from feature rows, appending the bias column.
    pub fn from_features(first_step: usize, features: &[Vec<f64>]) -> Result<Self> {
        let n_features = features.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(features.len() * (n_features + 1));
        for row in features {
            if row.len() != n_features {
                return Err(Error::dims(n_features, row.len()));
            }
            values.extend_from_slice(row);
            values.push(1.0);
        }
        Ok(Self {
            first_step,
            rows: features.len(),
            n_features,
            values,
        })
    }

    fn with_bias(first_step: usize, rows: usize, n_features: usize) -> Self {
        let cols = n_features + 1;
        let mut values = vec![0.0; rows * cols];
        for r in 0..rows {
            values[r * cols + n_features] = 1.0;
        }
        Self {
            first_step,
            rows,
            n_features,
            values,
        }
    }

    /// Input step recorded in row 0.
    pub fn first_step(&self) -> usize {
        self.first_step
    }

    pub fn steps(&self) -> Range<usize> {
        self.first_step..self.first_step + self.rows
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Features plus bias.
    pub fn cols(&self) -> usize {
        self.n_features + 1
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn bias_col(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r)[c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows whose recorded steps fall inside `steps`.
    pub fn slice_steps(&self, steps: Range<usize>) -> Result<Self> {
        if steps.start < self.first_step
            || steps.end > self.first_step + self.rows
            || steps.start > steps.end
        {
            return Err(Error::InvalidArgument(format!(
                "steps {steps:?} outside recorded range {:?}",
                self.steps()
            )));
        }
        let c = self.cols();
        let lo = steps.start - self.first_step;
        let hi = steps.end - self.first_step;
        Ok(Self {
            first_step: steps.start,
            rows: hi - lo,
            n_features: self.n_features,
            values: self.values[lo * c..hi * c].to_vec(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.n_features), (other.rows, other.n_features));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `step,f0,...,f{F-1},bias`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        header.extend((0..self.n_features).map(|f| format!("f{f}")));
        header.push("bias".into());
        w.write_record(&header)?;
        for r in 0..self.rows {
            let mut rec = vec![(self.first_step + r).to_string()];
            rec.extend(self.row(r).iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Input insertions (clock cycles) a measurement-collapsing device would execute.
    pub physical_unitary_count: u64,
    /// Segment unitaries actually applied by the simulation.
    pub wall_segments_applied: u64,
}

#[derive(Clone, Debug)]
pub struct DriveOptions {
    /// Leading input steps that are driven but not recorded.
    pub washout: usize,
    /// Validate the density matrix every this many recorded steps.
    pub invariant_check_every: Option<usize>,
    /// Let reset windows that would start before the first input use the
    /// available shorter history instead of rejecting `washout < n`.
    pub allow_partial_windows: bool,
    pub tolerances: Tolerances,
}

impl DriveOptions {
    pub fn with_washout(washout: usize) -> Self {
        Self {
            washout,
            invariant_check_every: None,
            allow_partial_windows: false,
            tolerances: DEFAULT_TOLERANCES,
        }
    }
}

/// `|psi_E(u)><psi_E(u)| ⊗ Tr_1(rho)`, with `Tr_1(rho)` renormalised.
pub fn inject(rho: &DensityMatrix, u: f64) -> Result<DensityMatrix> {
    let encoded = encode_input(u)?.outer();
    Ok(encoded.tensor(&rho.partial_trace_first()?.renormalized()))
}

/// A reservoir prepared for driving: the full-cycle unitary and the
/// Heisenberg-picture readout functionals.
#[derive(Clone, Debug)]
pub struct CompiledReservoir {
    n_qubits: usize,
    segments_per_cycle: usize,
    cycle: ComplexMatrix,
    /// Per feature, `[Re O_ji, -Im O_ji]` interleaved over `(i, j)` so that the
    /// readout is a real dot product with the interleaved state.
    probes: Vec<Vec<f64>>,
}

impl CompiledReservoir {
    pub fn new(model: &ReservoirModel) -> Self {
        let dim = model.dim();
        let mut prefix = ComplexMatrix::identity(dim);
        let mut probes = Vec::with_capacity(model.feature_count());
        let last = model.segments.len() - 1;
        for (k, seg) in model.segments.iter().enumerate() {
            prefix = seg * &prefix;
            if !model.measure_after_each_segment && k != last {
                continue;
            }
            let prefix_dag = prefix.dagger();
            for obs in &model.observables {
                let heis = &(&prefix_dag * obs) * &prefix;
                let mut probe = Vec::with_capacity(2 * dim * dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let o = heis[(j, i)];
                        probe.push(o.re);
                        probe.push(-o.im);
                    }
                }
                probes.push(probe);
            }
        }
        Self {
            n_qubits: model.n_qubits,
            segments_per_cycle: model.segments.len(),
            cycle: prefix,
            probes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn feature_count(&self) -> usize {
        self.probes.len()
    }

    pub fn cycle_unitary(&self) -> &ComplexMatrix {
        &self.cycle
    }

    /// Readouts over one clock cycle for the state right after injection.
    pub fn measure(&self, injected: &DensityMatrix, out: &mut [f64]) {
        let flat: Vec<f64> = injected
            .matrix()
            .as_slice()
            .iter()
            .flat_map(|z: &C64| [z.re, z.im])
            .collect();
        for (o, probe) in out.iter_mut().zip(&self.probes) {
            *o = flat.iter().zip(probe).map(|(a, b)| a * b).sum();
        }
    }

    fn check(&self, rho: &DensityMatrix, step: usize, opts: &DriveOptions) -> Result<()> {
        rho.check_invariants(&opts.tolerances)
            .map_err(|e| Error::InvariantViolation {
                step,
                detail: e.to_string(),
            })
    }

    fn due(opts: &DriveOptions, recorded: usize) -> bool {
        opts.invariant_check_every
            .is_some_and(|k| k > 0 && recorded.is_multiple_of(k))
    }

    fn validate_inputs(inputs: &[f64], washout: usize) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if washout >= inputs.len() {
            return Err(Error::InvalidArgument(format!(
                "washout {washout} leaves no rows of {} inputs",
                inputs.len()
            )));
        }
        if let Some(&u) = inputs.iter().find(|u| !(-1.0..=1.0).contains(*u)) {
            return Err(Error::InputOutOfRange(u));
        }
        Ok(())
    }

    /// Full-history scheme.
    pub fn run_qcqa(
        &self,
        inputs: &[f64],
        init: InitialStateKind,
        opts: &DriveOptions,
    ) -> Result<(StateMatrix, RunStats)> {
        Self::validate_inputs(inputs, opts.washout)?;
        let seed = init_seed(init);
        let mut rho = initial_state(init, self.n_qubits, &mut restart_rng(seed, 0))?;
        let mut s = StateMatrix::with_bias(
            opts.washout,
            inputs.len() - opts.washout,
            self.feature_count(),
        );
        let f = self.feature_count();
        let cols = f + 1;
        for (step, &u) in inputs.iter().enumerate() {
            let injected = inject(&rho, u)?;
            if step >= opts.washout {
                let r = step - opts.washout;
                self.measure(&injected, &mut s.values[r * cols..r * cols + f]);
            }
            rho = injected.evolve(&self.cycle)?;
            if Self::due(opts, step) {
                self.check(&rho, step, opts)?;
            }
        }
        let m = inputs.len() as u64;
        let stats = RunStats {
            physical_unitary_count: m * (m + 1) / 2,
            wall_segments_applied: m * self.segments_per_cycle as u64,
        };
        Ok((s, stats))
    }

    /// Reset-window scheme with reset length `n`.
    pub fn run_lcqa(
        &self,
        inputs: &[f64],
        reset_length: usize,
        init: InitialStateKind,
        opts: &DriveOptions,
    ) -> Result<(StateMatrix, RunStats)> {
        if reset_length == 0 {
            return Err(Error::InvalidArgument(
                "reset length must be at least 1".into(),
            ));
        }
        if opts.washout < reset_length && !opts.allow_partial_windows {
            return Err(Error::WashoutTooShort {
                washout: opts.washout,
                reset_length,
            });
        }
        Self::validate_inputs(inputs, opts.washout)?;
        let seed = init_seed(init);
        let fixed_init = if init.resamples_per_restart() {
            None
        } else {
            Some(initial_state(
                init,
                self.n_qubits,
                &mut restart_rng(seed, 0),
            )?)
        };
        let rows = inputs.len() - opts.washout;
        let f = self.feature_count();
        let mut s = StateMatrix::with_bias(opts.washout, rows, f);
        s.values
            .par_chunks_mut(f + 1)
            .enumerate()
            .try_for_each(|(r, row)| -> Result<()> {
                let step = opts.washout + r;
                let start = (step + 1).saturating_sub(reset_length);
                let mut rho = match &fixed_init {
                    Some(rho) => rho.clone(),
                    None => initial_state(init, self.n_qubits, &mut restart_rng(seed, step))?,
                };
                for &u in &inputs[start..step] {
                    rho = inject(&rho, u)?.evolve(&self.cycle)?;
                }
                let injected = inject(&rho, inputs[step])?;
                self.measure(&injected, &mut row[..f]);
                if Self::due(opts, r) {
                    self.check(&injected, step, opts)?;
                    self.check(&injected.evolve(&self.cycle)?, step, opts)?;
                }
                Ok(())
            })?;
        let insertions: u64 = (opts.washout..inputs.len())
            .map(|step| (step + 1).min(reset_length) as u64)
            .sum();
        let stats = RunStats {
            physical_unitary_count: insertions,
            wall_segments_applied: insertions * self.segments_per_cycle as u64,
        };
        Ok((s, stats))
    }
}

fn init_seed(init: InitialStateKind) -> u64 {
    match init {
        InitialStateKind::SameRandom { seed } | InitialStateKind::NewRandom { seed } => seed,
        _ => 0,
    }
}

pub fn run_qcqa(
    model: &ReservoirModel,
    inputs: &[f64],
    init: InitialStateKind,
    washout: usize,
) -> Result<(StateMatrix, RunStats)> {
    CompiledReservoir::new(model).run_qcqa(inputs, init, &DriveOptions::with_washout(washout))
}

pub fn run_lcqa(
    model: &ReservoirModel,
    inputs: &[f64],
    reset_length: usize,
    init: InitialStateKind,
    washout: usize,
) -> Result<(StateMatrix, RunStats)> {
    CompiledReservoir::new(model).run_lcqa(
        inputs,
        reset_length,
        init,
        &DriveOptions::with_washout(washout),
    )
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` to every non-bias entry.
pub fn regularize_by_noise<R: Rng + ?Sized>(
    s: &StateMatrix,
    sigma: f64,
    rng: &mut R,
) -> Result<StateMatrix> {
    if sigma.is_nan() || sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise sigma {sigma} must be finite and >= 0"
        )));
    }
    let mut out = s.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let cols = s.cols();
    for r in 0..s.rows {
        for v in &mut out.values[r * cols..r * cols + s.n_features] {
            *v += normal.sample(rng);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{embed_single, expectation, pauli_z, random_density_matrix, PureState};
    use crate::reservoir::{build_ising_model, CircuitParams, IsingParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_inputs(m: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    fn ising() -> ReservoirModel {
        build_ising_model(&IsingParams::with_defaults(3)).unwrap()
    }

    /// Segment-by-segment Schrödinger-picture reference for one clock cycle.
    fn schrodinger_cycle(model: &ReservoirModel, injected: &DensityMatrix) -> Vec<f64> {
        let mut rho = injected.clone();
        let mut out = Vec::new();
        for seg in &model.segments {
            rho = rho.evolve(seg).unwrap();
            for obs in &model.observables {
                out.push(expectation(&rho, obs).unwrap());
            }
        }
        out
    }

    #[test]
    fn inject_into_ground_state() {
        let rho = PureState::basis(4, 0).outer();
        assert_eq!(inject(&rho, -1.0).unwrap(), rho);
    }

    #[test]
    fn inject_sets_first_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z0 = embed_single(&pauli_z(), 0, 4);
        for u in [-0.9, -0.2, 0.0, 0.4, 1.0] {
            let rho = random_density_matrix(4, &mut rng);
            let injected = inject(&rho, u).unwrap();
            assert!((expectation(&injected, &z0).unwrap() + u).abs() < 1e-12);
            assert!((injected.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inject_propagates_range_error() {
        let rho = PureState::basis(4, 0).outer();
        assert!(matches!(inject(&rho, 1.5), Err(Error::InputOutOfRange(_))));
    }

    #[test]
    fn heisenberg_readout_matches_schrodinger_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for model in [ising(), CircuitParams::with_defaults(5).build().unwrap()] {
            let compiled = CompiledReservoir::new(&model);
            let rho = inject(&random_density_matrix(4, &mut rng), 0.3).unwrap();
            let mut fast = vec![0.0; compiled.feature_count()];
            compiled.measure(&rho, &mut fast);
            let slow = schrodinger_cycle(&model, &rho);
            let worst = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "max deviation {worst}");
        }
    }

    #[test]
    fn qcqa_cost_and_shape() {
        let (s, stats) =
            run_qcqa(&ising(), &random_inputs(10, 0), InitialStateKind::Up, 0).unwrap();
        assert_eq!(stats.physical_unitary_count, 55);
        assert_eq!(s.rows(), 10);
        assert_eq!(s.cols(), 121);
        assert!((0..s.rows()).all(|r| s.get(r, 120) == 1.0));
    }

    #[test]
    fn lcqa_cost() {
        let (s, stats) =
            run_lcqa(&ising(), &random_inputs(10, 0), 3, InitialStateKind::Up, 3).unwrap();
        assert_eq!(s.rows(), 7);
        assert_eq!(stats.physical_unitary_count, 21);
    }

    #[test]
    fn lcqa_rejects_short_washout() {
        let err = run_lcqa(&ising(), &random_inputs(10, 0), 4, InitialStateKind::Up, 3);
        assert!(matches!(err, Err(Error::WashoutTooShort { .. })));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(
            run_qcqa(&ising(), &[], InitialStateKind::Up, 0),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn long_window_reproduces_full_history() {
        let model = ising();
        let compiled = CompiledReservoir::new(&model);
        let inputs = random_inputs(20, 4);
        let mut opts = DriveOptions::with_washout(0);
        opts.allow_partial_windows = true;
        let (q, _) = compiled
            .run_qcqa(&inputs, InitialStateKind::Up, &opts)
            .unwrap();
        let (l, _) = compiled
            .run_lcqa(&inputs, 20, InitialStateKind::Up, &opts)
            .unwrap();
        assert!(q.max_abs_diff(&l) < 1e-10);
    }

    #[test]
    fn memoryless_window_depends_only_on_current_input() {
        let inputs = vec![0.3, -0.5, 0.3, 0.9, 0.3];
        let (s, _) = run_lcqa(&ising(), &inputs, 1, InitialStateKind::Up, 1).unwrap();
        // steps 2 and 4 carry the same input
        let diff = s
            .row(1)
            .iter()
            .zip(s.row(3))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn qcqa_is_causal() {
        let model = ising();
        let mut inputs = random_inputs(30, 9);
        let (a, _) = run_qcqa(&model, &inputs, InitialStateKind::Up, 0).unwrap();
        for u in &mut inputs[20..] {
            *u = -*u;
        }
        let (b, _) = run_qcqa(&model, &inputs, InitialStateKind::Up, 0).unwrap();
        for r in 0..20 {
            assert_eq!(a.row(r), b.row(r));
        }
    }

    #[test]
    fn lcqa_window_is_strict() {
        let model = ising();
        let n = 4;
        let mut inputs = random_inputs(20, 2);
        let (a, _) = run_lcqa(&model, &inputs, n, InitialStateKind::Up, n).unwrap();
        let target_step = 12;
        inputs[target_step - n] = -inputs[target_step - n];
        let (b, _) = run_lcqa(&model, &inputs, n, InitialStateKind::Up, n).unwrap();
        let r = target_step - n;
        assert_eq!(a.row(r), b.row(r));
        assert_ne!(a.row(r - 1), b.row(r - 1));
    }

    #[test]
    fn constant_drive_reaches_fixed_point() {
        // contraction under constant drive is geometric but coupling dependent;
        // a 400-step run settles well below 1e-8 after step 250
        let inputs = vec![0.0; 400];
        let (s, _) = run_qcqa(&ising(), &inputs, InitialStateKind::Up, 0).unwrap();
        for r in 251..s.rows() - 1 {
            let d = s
                .row(r)
                .iter()
                .zip(s.row(r + 1))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-8, "row {r} drifts by {d}");
        }
    }

    #[test]
    fn features_are_bounded_expectations() {
        let (s, _) = run_qcqa(&ising(), &random_inputs(50, 1), InitialStateKind::Mixed, 5).unwrap();
        assert!(s.values().iter().all(|v| v.abs() <= 1.0 + 1e-9));
        assert_eq!(s.rows(), 45);
        assert_eq!(s.first_step(), 5);
    }

    #[test]
    fn invariant_checks_pass_on_valid_runs() {
        let compiled = CompiledReservoir::new(&ising());
        let mut opts = DriveOptions::with_washout(5);
        opts.invariant_check_every = Some(3);
        let inputs = random_inputs(40, 3);
        compiled
            .run_qcqa(&inputs, InitialStateKind::NewRandom { seed: 1 }, &opts)
            .unwrap();
        compiled
            .run_lcqa(&inputs, 5, InitialStateKind::Entangled, &opts)
            .unwrap();
    }

    #[test]
    fn noise_regularization() {
        let (s, _) = run_qcqa(&ising(), &random_inputs(20, 1), InitialStateKind::Up, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(regularize_by_noise(&s, 0.0, &mut rng).unwrap(), s);
        assert!(regularize_by_noise(&s, -1.0, &mut rng).is_err());

        let features = vec![vec![0.0; 100]; 1000];
        let clean = StateMatrix::from_features(0, &features).unwrap();
        let sigma = 1e-6;
        let noisy = regularize_by_noise(&clean, sigma, &mut rng).unwrap();
        let mean = (0..noisy.rows())
            .flat_map(|r| noisy.row(r)[..100].to_vec())
            .sum::<f64>()
            / 1e5;
        assert!(mean.abs() < 3.0 * sigma / 1e5_f64.sqrt());
        assert!((0..noisy.rows()).all(|r| noisy.get(r, 100) == 1.0));
    }

    #[test]
    fn csv_header_layout() {
        let s = StateMatrix::from_features(7, &[vec![0.5, -0.25]]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,f0,f1,bias"));
        assert!(lines.next().unwrap().starts_with("7,"));
    }

    #[test]
    fn slicing_by_steps() {
        let feats: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let s = StateMatrix::from_features(5, &feats).unwrap();
        let t = s.slice_steps(8..12).unwrap();
        assert_eq!(t.first_step(), 8);
        assert_eq!(t.rows(), 4);
        assert_eq!(t.get(0, 0), 3.0);
        assert!(s.slice_steps(3..8).is_err());
    }
}
