//! Information processing capacity.
//!
//! Targets are products of Legendre polynomials of delayed inputs. For a
//! polynomial order `k`, every integer partition of `k` (a [`DegreeTuple`])
//! is paired with every admissible assignment of distinct delays (a
//! [`DelayCombination`]); the capacity of the trained readout for each target
//! is summed per order and overall.
//!
//! Delay `d >= 1` at step `t` refers to input `u_{t+1-d}`, so delay 1 is the
//! input injected right before the readout of step `t`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use crate::driver::{regularize_by_noise, StateMatrix};
use crate::error::{Error, Result};
use crate::readout::{capacity, predict, RidgeSolver};

/// Largest order accepted by [`partitions`].
pub const MAX_PARTITION_ORDER: usize = 8;

/// Delay truncation for orders 1 to 6.
pub const DEFAULT_D_MAX: [usize; 6] = [25, 12, 8, 6, 5, 4];

pub const DEFAULT_SURROGATE_COUNT: usize = 50;

pub const DEFAULT_FIXED_THRESHOLD: f64 = 1e-3;

/// Window length used by the windowed difference metric.
pub const DEFAULT_METRIC_WINDOW: usize = 4;

/// Legendre polynomial `P_order(x)` by the three-term recurrence.
pub fn legendre(order: usize, x: f64) -> f64 {
    match order {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for n in 1..order {
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0) * x * cur - nf * prev) / (nf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Non-decreasing positive Legendre degrees `d_1 <= ... <= d_q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeTuple {
    degrees: Vec<usize>,
}

impl DegreeTuple {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() || degrees.contains(&0) || degrees.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(format!(
                "degree tuple {degrees:?} must be non-empty, positive and non-decreasing"
            )));
        }
        Ok(Self { degrees })
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn order(&self) -> usize {
        self.degrees.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

impl fmt::Display for DegreeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.degrees.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("+"))
    }
}

/// Delays aligned with the positions of a [`DegreeTuple`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DelayCombination {
    delays: Vec<usize>,
}

impl DelayCombination {
    /// Validates the delays against `tuple`: same length, positive, pairwise
    /// distinct, strictly decreasing within each run of equal degrees.
    pub fn new(tuple: &DegreeTuple, delays: Vec<usize>) -> Result<Self> {
        if !is_admissible(tuple.degrees(), &delays) {
            return Err(Error::InvalidArgument(format!(
                "delays {delays:?} are not admissible for degrees {:?}",
                tuple.degrees()
            )));
        }
        Ok(Self { delays })
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn max_delay(&self) -> usize {
        self.delays.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for DelayCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.delays.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(":"))
    }
}

fn is_admissible(degrees: &[usize], delays: &[usize]) -> bool {
    if degrees.len() != delays.len() || delays.contains(&0) {
        return false;
    }
    for i in 0..delays.len() {
        for j in i + 1..delays.len() {
            if delays[i] == delays[j] {
                return false;
            }
        }
    }
    (1..delays.len()).all(|j| degrees[j] != degrees[j - 1] || delays[j] < delays[j - 1])
}

/// All partitions of `k`, fewest parts first, lexicographic within a part count.
pub fn partitions(k: usize) -> Result<Vec<DegreeTuple>> {
    if k == 0 || k > MAX_PARTITION_ORDER {
        return Err(Error::InvalidArgument(format!(
            "partition order {k} outside 1..={MAX_PARTITION_ORDER}"
        )));
    }
    fn rec(remaining: usize, min_part: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        for part in min_part..=remaining {
            current.push(part);
            rec(remaining - part, part, current, out);
            current.pop();
        }
    }
    let mut all = Vec::new();
    rec(k, 1, &mut Vec::new(), &mut all);
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(all
        .into_iter()
        .map(|degrees| DegreeTuple { degrees })
        .collect())
}

/// All admissible delay assignments with delays in `1..=d_max`, ordered
/// colexicographically (last position varies slowest).
pub fn delay_combinations(tuple: &DegreeTuple, d_max: usize) -> Vec<DelayCombination> {
    fn rec(degrees: &[usize], d_max: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let j = current.len();
        if j == degrees.len() {
            out.push(current.clone());
            return;
        }
        let upper = if j > 0 && degrees[j] == degrees[j - 1] {
            current[j - 1] - 1
        } else {
            d_max
        };
        for d in 1..=upper {
            if !current.contains(&d) {
                current.push(d);
                rec(degrees, d_max, current, out);
                current.pop();
            }
        }
    }
    let mut all = Vec::new();
    rec(tuple.degrees(), d_max, &mut Vec::new(), &mut all);
    all.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    all.into_iter()
        .map(|delays| DelayCombination { delays })
        .collect()
}

/// `prod_j P_{d_j}(u_{t+1-i_j})` for every step `t` in `steps`.
pub fn target_series(
    inputs: &[f64],
    tuple: &DegreeTuple,
    delays: &DelayCombination,
    steps: Range<usize>,
) -> Result<Vec<f64>> {
    if tuple.len() != delays.delays().len() {
        return Err(Error::dims(tuple.len(), delays.delays().len()));
    }
    let max_delay = delays.max_delay();
    if steps.start + 1 < max_delay {
        return Err(Error::InsufficientHistory {
            first_step: steps.start,
            delay: max_delay,
        });
    }
    if steps.end > inputs.len() {
        return Err(Error::dims(steps.end, inputs.len()));
    }
    Ok(steps
        .map(|t| {
            tuple
                .degrees()
                .iter()
                .zip(delays.delays())
                .map(|(&deg, &d)| legendre(deg, inputs[t + 1 - d]))
                .product()
        })
        .collect())
}

/// Rule deciding which measured capacities count towards the sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    /// Capacities at or below the value are discarded.
    Fixed(f64),
    /// Per degree tuple, a capacity must exceed the largest capacity obtained
    /// for `count` random cyclic shifts of one representative target.
    Surrogate { count: usize },
}

impl Default for ThresholdRule {
    fn default() -> Self {
        Self::Surrogate {
            count: DEFAULT_SURROGATE_COUNT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpcConfig {
    pub max_order: usize,
    /// Largest delay per order; entry `k-1` applies to order `k`.
    pub d_max: Vec<usize>,
    pub threshold: ThresholdRule,
    pub lambda: f64,
    pub noise_sigma: f64,
}

impl Default for IpcConfig {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_D_MAX.len(),
            d_max: DEFAULT_D_MAX.to_vec(),
            threshold: ThresholdRule::default(),
            lambda: 0.0,
            noise_sigma: 0.0,
        }
    }
}

impl IpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_order == 0 || self.max_order > MAX_PARTITION_ORDER {
            return Err(Error::InvalidArgument(format!(
                "max order {} outside 1..={MAX_PARTITION_ORDER}",
                self.max_order
            )));
        }
        if self.d_max.len() < self.max_order {
            return Err(Error::InvalidArgument(format!(
                "{} delay limits given for max order {}",
                self.d_max.len(),
                self.max_order
            )));
        }
        if self.d_max[..self.max_order].contains(&0) {
            return Err(Error::InvalidArgument(
                "delay limits must be positive".into(),
            ));
        }
        match self.threshold {
            ThresholdRule::Fixed(v) if v.is_nan() || v < 0.0 => Err(Error::InvalidArgument(
                format!("fixed threshold {v} must be >= 0"),
            )),
            ThresholdRule::Surrogate { count: 0 } => Err(Error::InvalidArgument(
                "surrogate count must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Largest delay any target will use.
    pub fn history_needed(&self) -> usize {
        self.d_max[..self.max_order]
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// One counted target.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetCapacity {
    pub order: usize,
    pub tuple: DegreeTuple,
    pub delays: DelayCombination,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpcReport {
    /// `IPC_k` for `k = 1..=max_order`.
    pub per_order: BTreeMap<usize, f64>,
    pub total: f64,
    /// Thresholded `C_1(d)`; entry `d-1` is delay `d`.
    pub linear_curve: Vec<f64>,
    /// Targets whose capacity survived the threshold.
    pub per_target: Vec<TargetCapacity>,
    /// Threshold applied to each degree tuple.
    pub thresholds: Vec<(DegreeTuple, f64)>,
    /// Readout columns including the bias; an upper bound on `total`.
    pub readout_nodes: usize,
}

/// Fitted readout shared by every target of one IPC computation.
pub struct CapacityProbe<'a> {
    solver: RidgeSolver,
    test: &'a StateMatrix,
}

impl<'a> CapacityProbe<'a> {
    pub fn new(train: &StateMatrix, test: &'a StateMatrix, lambda: f64) -> Result<Self> {
        if train.cols() != test.cols() {
            return Err(Error::dims(train.cols(), test.cols()));
        }
        Ok(Self {
            solver: RidgeSolver::new(train, lambda)?,
            test,
        })
    }

    /// Trains on `train_target` and returns the capacity on `test_target`.
    pub fn capacity(&self, train_target: &[f64], test_target: &[f64]) -> Result<f64> {
        if test_target.len() != self.test.rows() {
            return Err(Error::dims(self.test.rows(), test_target.len()));
        }
        let w = self.solver.fit(train_target)?;
        Ok(capacity(&predict(self.test, &w)?, test_target))
    }

    /// Capacity of the target rotated cyclically by `shift` across the
    /// concatenated train and test series.
    pub fn shifted_capacity(
        &self,
        train_target: &[f64],
        test_target: &[f64],
        shift: usize,
    ) -> Result<f64> {
        let mut joined: Vec<f64> = train_target.iter().chain(test_target).copied().collect();
        let len = joined.len().max(1);
        joined.rotate_left(shift % len);
        let (tr, te) = joined.split_at(train_target.len());
        self.capacity(tr, te)
    }

    /// Largest capacity over `shifts` cyclic rotations of one target.
    pub fn surrogate_threshold(
        &self,
        train_target: &[f64],
        test_target: &[f64],
        shifts: &[usize],
    ) -> Result<f64> {
        let caps: Result<Vec<f64>> = shifts
            .par_iter()
            .map(|&s| self.shifted_capacity(train_target, test_target, s))
            .collect();
        Ok(caps?.into_iter().fold(0.0, f64::max))
    }
}

/// Shifts drawn uniformly from the middle half of the series, far from the
/// identity in both directions. Shifts are distinct whenever the range holds
/// at least `count` values, since a repeated shift adds no information.
pub fn draw_shifts<R: Rng + ?Sized>(len: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let lo = (len / 4).max(1);
    let hi = (3 * len / 4).max(lo + 1);
    if count <= hi - lo {
        return rand::seq::index::sample(rng, hi - lo, count)
            .into_iter()
            .map(|i| lo + i)
            .collect();
    }
    (0..count).map(|_| rng.random_range(lo..hi)).collect()
}

/// Capacities of all targets up to `cfg.max_order`.
///
/// `inputs` is indexed by absolute step; the state matrices' step ranges
/// select the rows used for training and scoring. Measurement noise of
/// `cfg.noise_sigma` is added to both matrices before fitting.
pub fn compute_ipc<R: Rng + ?Sized>(
    s_train: &StateMatrix,
    s_test: &StateMatrix,
    inputs: &[f64],
    cfg: &IpcConfig,
    rng: &mut R,
) -> Result<IpcReport> {
    cfg.validate()?;
    let need = cfg.history_needed();
    for s in [s_train, s_test] {
        if s.first_step() + 1 < need {
            return Err(Error::InsufficientHistory {
                first_step: s.first_step(),
                delay: need,
            });
        }
        if s.steps().end > inputs.len() {
            return Err(Error::dims(s.steps().end, inputs.len()));
        }
    }
    let train = regularize_by_noise(s_train, cfg.noise_sigma, rng)?;
    let test = regularize_by_noise(s_test, cfg.noise_sigma, rng)?;
    let probe = CapacityProbe::new(&train, &test, cfg.lambda)?;

    let mut families = Vec::new();
    for k in 1..=cfg.max_order {
        for tuple in partitions(k)? {
            let combos = delay_combinations(&tuple, cfg.d_max[k - 1]);
            if !combos.is_empty() {
                families.push((k, tuple, combos));
            }
        }
    }

    let joined_len = train.rows() + test.rows();
    let mut thresholds = Vec::with_capacity(families.len());
    for (_, tuple, combos) in &families {
        let value = match cfg.threshold {
            ThresholdRule::Fixed(v) => v,
            ThresholdRule::Surrogate { count } => {
                // Each surrogate shifts a randomly chosen member of the family, so the
                // threshold follows the family's chance distribution rather than one series
                let shifts = draw_shifts(joined_len, count, rng);
                let members: Vec<usize> = (0..count)
                    .map(|_| rng.random_range(0..combos.len()))
                    .collect();
                let caps = shifts
                    .par_iter()
                    .zip(&members)
                    .map(|(&shift, &m)| {
                        let tr = target_series(inputs, tuple, &combos[m], train.steps())?;
                        let te = target_series(inputs, tuple, &combos[m], test.steps())?;
                        probe.shifted_capacity(&tr, &te, shift)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                caps.into_iter().fold(0.0, f64::max)
            }
        };
        thresholds.push((tuple.clone(), value));
    }

    let jobs: Vec<(usize, usize)> = families
        .iter()
        .enumerate()
        .flat_map(|(f, (_, _, combos))| (0..combos.len()).map(move |c| (f, c)))
        .collect();
    let caps: Vec<f64> = jobs
        .par_iter()
        .map(|&(f, c)| {
            let (_, tuple, combos) = &families[f];
            let tr = target_series(inputs, tuple, &combos[c], train.steps())?;
            let te = target_series(inputs, tuple, &combos[c], test.steps())?;
            probe.capacity(&tr, &te)
        })
        .collect::<Result<_>>()?;

    let mut per_order: BTreeMap<usize, f64> = (1..=cfg.max_order).map(|k| (k, 0.0)).collect();
    let mut linear_curve = vec![0.0; cfg.d_max[0]];
    let mut per_target = Vec::new();
    for (&(f, c), &cap) in jobs.iter().zip(&caps) {
        let (k, tuple, combos) = &families[f];
        if cap <= thresholds[f].1 {
            continue;
        }
        *per_order.get_mut(k).expect("order present") += cap;
        if tuple.degrees() == [1] {
            linear_curve[combos[c].delays()[0] - 1] = cap;
        }
        per_target.push(TargetCapacity {
            order: *k,
            tuple: tuple.clone(),
            delays: combos[c].clone(),
            capacity: cap,
        });
    }
    let total = per_order.values().sum();
    Ok(IpcReport {
        per_order,
        total,
        linear_curve,
        per_target,
        thresholds,
        readout_nodes: train.cols(),
    })
}

/// Comparison of two linear memory curves over the delays one reset window can reach.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitStateMetrics {
    /// Ratio of summed `C_1` over delays `1..=n+1`; `None` if the reference sum is zero.
    pub ratio: Option<f64>,
    /// Difference of the same sums.
    pub difference: f64,
    /// Difference restricted to delays `n+2-window..=n+1`.
    pub windowed_difference: f64,
}

/// `curve[d-1]` holds `C_1(d)`; both curves must reach delay `n + 1`.
pub fn initial_state_metrics(
    curve: &[f64],
    reference: &[f64],
    n: usize,
    window: usize,
) -> Result<InitStateMetrics> {
    let len = n + 1;
    if curve.len() < len || reference.len() < len {
        return Err(Error::InvalidArgument(format!(
            "memory curves of length {} and {} do not reach delay {len}",
            curve.len(),
            reference.len()
        )));
    }
    let sum = |c: &[f64], r: Range<usize>| c[r].iter().sum::<f64>();
    let a = sum(curve, 0..len);
    let b = sum(reference, 0..len);
    let w = len.saturating_sub(window)..len;
    Ok(InitStateMetrics {
        ratio: (b != 0.0).then(|| a / b),
        difference: a - b,
        windowed_difference: sum(curve, w.clone()) - sum(reference, w),
    })
}
