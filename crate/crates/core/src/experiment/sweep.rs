//! Sweep execution.
//!
//! A sweep is a list of cells, each one drive of one reservoir realization
//! followed by a readout evaluation. Cells run on a rayon pool; results are
//! collected in canonical cell order, so output bytes do not depend on the
//! number of workers. A failing cell is recorded and the sweep continues.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ReservoirKind, SchemeSelection};
use super::output::{
    write_records_to, CurveRow, FailureRow, InitMetricRow, IpcOrderRow, ResultRow, Severity,
    TargetRow,
};
use super::seeds::{CellKey, RealizationSeeds, Scheme};
use crate::driver::{regularize_by_noise, CompiledReservoir, DriveOptions, RunStats, StateMatrix};
use crate::encode::InitialStateKind;
use crate::error::{Error, Result};
use crate::ipc::{compute_ipc, initial_state_metrics, IpcConfig, IpcReport};
use crate::readout::{nrmse, predict, RidgeSolver};
use crate::reservoir::{build_ising_model, CircuitParams, IsingParams, ReservoirModel};
use crate::tasks::{make_lorenz_task, uniform_input, LorenzParams, LorenzTask, TaskDataset};

/// NRMSE values outside this range are reported as warnings.
pub const NRMSE_SANITY_RANGE: (f64, f64) = (0.0, 2.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    IpcSweep,
    LorenzSweep,
    InitStudy,
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Self::IpcSweep => "ipc-sweep",
            Self::LorenzSweep => "lorenz-sweep",
            Self::InitStudy => "init-study",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ipc-sweep" => Ok(Self::IpcSweep),
            "lorenz-sweep" => Ok(Self::LorenzSweep),
            "init-study" => Ok(Self::InitStudy),
            other => Err(Error::InvalidArgument(format!(
                "unknown experiment '{other}'"
            ))),
        }
    }
}

/// Builds the reservoir of realization `seed_index`.
pub fn build_model(cfg: &ExperimentConfig, seed_index: u64) -> Result<ReservoirModel> {
    let seeds = RealizationSeeds::new(cfg.master_seed, seed_index);
    match cfg.reservoir {
        ReservoirKind::Ising => {
            let seed = cfg.ising.coupling_seed.unwrap_or(seeds.reservoir);
            build_ising_model(&IsingParams::sample(
                4,
                cfg.ising.h,
                cfg.ising.t,
                cfg.ising.n_v,
                seed,
            ))
        }
        ReservoirKind::Circuit => CircuitParams {
            n_qubits: 4,
            repetitions: cfg.circuit.n_w,
            param_interval: (cfg.circuit.param_lo, cfg.circuit.param_hi),
            gate_seed: cfg.circuit.gate_seed.unwrap_or(seeds.reservoir),
        }
        .build(),
    }
}

/// Initial state named `legend` for realization `seed_index`; the random
/// states are shared by every cell of the realization.
pub fn init_kind(
    cfg: &ExperimentConfig,
    legend: &str,
    seed_index: u64,
) -> Result<InitialStateKind> {
    InitialStateKind::from_legend(
        legend,
        RealizationSeeds::new(cfg.master_seed, seed_index).init_state,
    )
}

/// The cells of `exp`, in canonical order.
pub fn plan_cells(exp: Experiment, cfg: &ExperimentConfig) -> Result<Vec<CellKey>> {
    let mut cells = Vec::new();
    let ns = cfg.reset_lengths();
    for &seed in &cfg.sweep.seeds {
        let base = init_kind(cfg, &cfg.drive.init_state, seed)?;
        if cfg.drive.scheme != SchemeSelection::Lcqa {
            cells.push(CellKey::qcqa(seed, base));
        }
        if cfg.drive.scheme == SchemeSelection::Qcqa {
            continue;
        }
        let states = match exp {
            Experiment::InitStudy => cfg
                .sweep
                .init_states
                .iter()
                .map(|s| init_kind(cfg, s, seed))
                .collect::<Result<Vec<_>>>()?,
            _ => vec![base],
        };
        for init in states {
            for &n in &ns {
                cells.push(CellKey::lcqa(seed, init, n));
            }
        }
    }
    cells.sort();
    Ok(cells)
}

struct Realization {
    reservoir: CompiledReservoir,
    inputs: Vec<f64>,
}

enum CellData {
    Ipc(IpcReport),
    Lorenz(Vec<(LorenzTask, f64)>),
    Curve(Vec<f64>),
}

struct CellOutcome {
    key: CellKey,
    result: Result<(CellData, RunStats)>,
    elapsed: Duration,
}

/// Rows produced by one sweep.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutput {
    pub results: Vec<ResultRow>,
    pub ipc_orders: Vec<IpcOrderRow>,
    pub curves: Vec<CurveRow>,
    pub targets: Vec<TargetRow>,
    pub init_metrics: Vec<InitMetricRow>,
    pub failures: Vec<FailureRow>,
    /// Per-cell wall time; kept out of the CSVs so they stay reproducible.
    pub timings: Vec<(CellKey, Duration)>,
    pub wall_time: Duration,
}

impl SweepOutput {
    /// True when no cell failed; warnings do not count.
    pub fn succeeded(&self) -> bool {
        self.failures.iter().all(|f| f.severity != Severity::Error)
    }

    /// Writes the experiment's CSV files and the `run_meta.txt` sidecar into `dir`.
    pub fn write(
        &self,
        exp: Experiment,
        cfg: &ExperimentConfig,
        workers: usize,
        dir: &Path,
    ) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str| -> PathBuf {
            let p = dir.join(name);
            written.push(p.clone());
            p
        };
        write_records_to(&self.results, &put("results.csv"))?;
        write_records_to(&self.failures, &put("failures.csv"))?;
        match exp {
            Experiment::IpcSweep => {
                write_records_to(&self.ipc_orders, &put("ipc_per_order.csv"))?;
                write_records_to(&self.curves, &put("ipc_linear_curve.csv"))?;
                write_records_to(&self.targets, &put("ipc_targets.csv"))?;
            }
            Experiment::InitStudy => {
                write_records_to(&self.curves, &put("init_curve.csv"))?;
                write_records_to(&self.init_metrics, &put("init_metrics.csv"))?;
            }
            Experiment::LorenzSweep => {}
        }
        let meta = self.meta_text(exp, cfg, workers)?;
        std::fs::write(put("run_meta.txt"), meta)?;
        Ok(written)
    }

    fn meta_text(&self, exp: Experiment, cfg: &ExperimentConfig, workers: usize) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {exp}");
        let _ = writeln!(
            s,
            "version: {} {}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        );
        let _ = writeln!(s, "workers: {workers}");
        let _ = writeln!(s, "wall_time_s: {:.3}", self.wall_time.as_secs_f64());
        let _ = writeln!(s, "cells: {}", self.timings.len());
        let _ = writeln!(
            s,
            "failed_cells: {}",
            self.failures
                .iter()
                .filter(|f| f.severity == Severity::Error)
                .count()
        );
        let _ = writeln!(s, "\n[cell runtimes, seconds]");
        for (key, t) in &self.timings {
            let _ = writeln!(s, "{key} {:.3}", t.as_secs_f64());
        }
        let _ = writeln!(s, "\n[config]");
        s.push_str(&cfg.to_toml_string()?);
        Ok(s)
    }
}

fn check_experiment(exp: Experiment, cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.washout() > cfg.task.init {
        return Err(Error::Config(format!(
            "washout {} exceeds task.init {}; training rows would start before the first recorded step",
            cfg.washout(),
            cfg.task.init
        )));
    }
    match exp {
        Experiment::LorenzSweep => {
            cfg.lorenz_tasks()?;
        }
        Experiment::IpcSweep => {
            if cfg
                .task
                .task
                .is_some_and(|t| t != super::config::TaskKind::Ipc)
            {
                return Err(Error::Config(
                    "ipc-sweep needs task = \"ipc\" or no task".into(),
                ));
            }
        }
        Experiment::InitStudy => {
            if cfg.drive.scheme != SchemeSelection::Both {
                return Err(Error::Config(
                    "init-study compares against the full-history baseline; drive.scheme must be \"both\"".into(),
                ));
            }
        }
    }
    Ok(())
}

fn init_study_ipc(cfg: &ExperimentConfig) -> IpcConfig {
    let max_n = cfg.reset_lengths().into_iter().max().unwrap_or(0);
    let mut ipc = cfg.ipc_config();
    ipc.max_order = 1;
    ipc.d_max[0] = ipc.d_max[0].max(max_n + 1);
    ipc
}

/// Runs every cell of `exp` on a pool of `workers` threads.
pub fn run_experiment(
    exp: Experiment,
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<SweepOutput> {
    check_experiment(exp, cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let start = Instant::now();
    let mut out = pool.install(|| run_cells(exp, cfg))?;
    out.wall_time = start.elapsed();
    Ok(out)
}

fn run_cells(exp: Experiment, cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let cells = plan_cells(exp, cfg)?;
    let lengths = cfg.lengths();
    let lorenz: Option<Vec<(LorenzTask, TaskDataset)>> = match exp {
        Experiment::LorenzSweep => Some(
            cfg.lorenz_tasks()?
                .into_iter()
                .map(|t| Ok((t, make_lorenz_task(t, &LorenzParams::default(), lengths)?)))
                .collect::<Result<_>>()?,
        ),
        _ => None,
    };
    let realizations: BTreeMap<u64, Result<Realization>> = cfg
        .sweep
        .seeds
        .par_iter()
        .map(|&seed| {
            let r = build_model(cfg, seed).and_then(|model| {
                let inputs = match &lorenz {
                    Some(sets) => sets[0].1.input.clone(),
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(
                            RealizationSeeds::new(cfg.master_seed, seed).inputs,
                        );
                        uniform_input(lengths.total(), &mut rng)?
                    }
                };
                Ok(Realization {
                    reservoir: CompiledReservoir::new(&model),
                    inputs,
                })
            });
            (seed, r)
        })
        .collect();

    let ipc_cfg = match exp {
        Experiment::InitStudy => init_study_ipc(cfg),
        _ => cfg.ipc_config(),
    };
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|key| {
            let t = Instant::now();
            let result = match &realizations[&key.seed_index] {
                Ok(r) => run_cell(exp, cfg, key, r, &ipc_cfg, lorenz.as_deref()),
                Err(e) => Err(Error::InvalidArgument(format!("realization failed: {e}"))),
            };
            CellOutcome {
                key: key.clone(),
                result,
                elapsed: t.elapsed(),
            }
        })
        .collect();
    Ok(assemble(exp, cfg, outcomes))
}

fn drive(
    r: &Realization,
    key: &CellKey,
    init: InitialStateKind,
    washout: usize,
) -> Result<(StateMatrix, RunStats)> {
    let opts = DriveOptions::with_washout(washout);
    match key.scheme {
        Scheme::Qcqa => r.reservoir.run_qcqa(&r.inputs, init, &opts),
        Scheme::Lcqa => r.reservoir.run_lcqa(&r.inputs, key.n as usize, init, &opts),
    }
}

fn run_cell(
    exp: Experiment,
    cfg: &ExperimentConfig,
    key: &CellKey,
    r: &Realization,
    ipc_cfg: &IpcConfig,
    lorenz: Option<&[(LorenzTask, TaskDataset)]>,
) -> Result<(CellData, RunStats)> {
    let init = init_kind(cfg, &key.init_state, key.seed_index)?;
    let (s, stats) = drive(r, key, init, cfg.washout())?;
    let lengths = cfg.lengths();
    let train_steps = lengths.init..lengths.init + lengths.train;
    let test_steps = train_steps.end..lengths.total();
    let train = s.slice_steps(train_steps.clone())?;
    let test = s.slice_steps(test_steps.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(key.cell_seed(cfg.master_seed));
    let data = match exp {
        Experiment::IpcSweep => {
            CellData::Ipc(compute_ipc(&train, &test, &r.inputs, ipc_cfg, &mut rng)?)
        }
        Experiment::InitStudy => {
            CellData::Curve(compute_ipc(&train, &test, &r.inputs, ipc_cfg, &mut rng)?.linear_curve)
        }
        Experiment::LorenzSweep => {
            let sets = lorenz.expect("lorenz datasets prepared");
            let train = regularize_by_noise(&train, cfg.noise_sigma(), &mut rng)?;
            let test = regularize_by_noise(&test, cfg.noise_sigma(), &mut rng)?;
            let solver = RidgeSolver::new(&train, cfg.lambda())?;
            let mut scores = Vec::new();
            for (task, d) in sets {
                let w = solver.fit(&d.target[train_steps.clone()])?;
                let y = predict(&test, &w)?;
                scores.push((*task, nrmse(&y, &d.target[test_steps.clone()])?));
            }
            CellData::Lorenz(scores)
        }
    };
    Ok((data, stats))
}

fn assemble(exp: Experiment, cfg: &ExperimentConfig, outcomes: Vec<CellOutcome>) -> SweepOutput {
    let mut out = SweepOutput::default();
    let id = exp.id().to_string();
    let result_row = |key: &CellKey, metric: String, value: f64, stats: &RunStats| ResultRow {
        experiment_id: id.clone(),
        scheme: key.scheme.name().into(),
        n: key.n,
        seed: key.seed_index,
        init_state: key.init_state.clone(),
        metric,
        value,
        physical_unitary_count: stats.physical_unitary_count,
    };
    let failure = |key: &CellKey, severity: Severity, message: String| FailureRow {
        experiment_id: id.clone(),
        scheme: key.scheme.name().into(),
        n: key.n,
        seed: key.seed_index,
        init_state: key.init_state.clone(),
        severity,
        message,
    };
    let mut baselines: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut lcqa_curves: Vec<(CellKey, Vec<f64>, RunStats)> = Vec::new();

    for o in outcomes {
        out.timings.push((o.key.clone(), o.elapsed));
        let (data, stats) = match o.result {
            Ok(v) => v,
            Err(e) => {
                out.failures
                    .push(failure(&o.key, Severity::Error, e.to_string()));
                continue;
            }
        };
        let key = &o.key;
        match data {
            CellData::Ipc(report) => {
                for (&k, &v) in &report.per_order {
                    out.ipc_orders.push(IpcOrderRow {
                        k,
                        ipc_k: v,
                        total: report.total,
                        n: key.n,
                        scheme: key.scheme.name().into(),
                        seed: key.seed_index,
                    });
                    out.results
                        .push(result_row(key, format!("ipc_{k}"), v, &stats));
                }
                out.results
                    .push(result_row(key, "ipc_total".into(), report.total, &stats));
                push_curve(&mut out.curves, key, &report.linear_curve);
                for t in &report.per_target {
                    out.targets.push(TargetRow {
                        k: t.order,
                        tuple: t.tuple.to_string(),
                        delays: t.delays.to_string(),
                        capacity: t.capacity,
                        n: key.n,
                        scheme: key.scheme.name().into(),
                        seed: key.seed_index,
                    });
                }
                if report.total > report.readout_nodes as f64 + 1e-9 {
                    out.failures.push(failure(
                        key,
                        Severity::Warning,
                        format!(
                            "total IPC {} exceeds {} readout nodes",
                            report.total, report.readout_nodes
                        ),
                    ));
                }
            }
            CellData::Lorenz(scores) => {
                for (task, v) in scores {
                    out.results
                        .push(result_row(key, format!("nrmse_{task}"), v, &stats));
                    let (lo, hi) = NRMSE_SANITY_RANGE;
                    if !(lo..=hi).contains(&v) {
                        out.failures.push(failure(
                            key,
                            Severity::Warning,
                            format!("nrmse_{task} = {v} outside [{lo}, {hi}]"),
                        ));
                    }
                }
            }
            CellData::Curve(curve) => {
                push_curve(&mut out.curves, key, &curve);
                out.results
                    .push(result_row(key, "c1_sum".into(), curve.iter().sum(), &stats));
                match key.scheme {
                    Scheme::Qcqa => {
                        baselines.insert(key.seed_index, curve);
                    }
                    Scheme::Lcqa => lcqa_curves.push((key.clone(), curve, stats)),
                }
            }
        }
    }

    if exp == Experiment::InitStudy {
        let window = cfg.sweep.window;
        for (&seed, q) in &baselines {
            for n in cfg.reset_lengths() {
                let key = CellKey {
                    seed_index: seed,
                    scheme: Scheme::Qcqa,
                    init_state: "qcqa".into(),
                    n: n as i64,
                };
                match initial_state_metrics(q, q, n, window) {
                    Ok(m) => out.init_metrics.push(metric_row(&key, m)),
                    Err(e) => out
                        .failures
                        .push(failure(&key, Severity::Error, e.to_string())),
                }
            }
        }
        for (key, curve, stats) in &lcqa_curves {
            let Some(q) = baselines.get(&key.seed_index) else {
                out.failures.push(failure(
                    key,
                    Severity::Error,
                    "no full-history baseline for this seed".into(),
                ));
                continue;
            };
            match initial_state_metrics(curve, q, key.n as usize, window) {
                Ok(m) => {
                    if let Some(r) = m.ratio {
                        out.results.push(result_row(key, "ratio".into(), r, stats));
                    }
                    out.results
                        .push(result_row(key, "difference".into(), m.difference, stats));
                    out.results.push(result_row(
                        key,
                        "windowed_difference".into(),
                        m.windowed_difference,
                        stats,
                    ));
                    out.init_metrics.push(metric_row(key, m));
                }
                Err(e) => out
                    .failures
                    .push(failure(key, Severity::Error, e.to_string())),
            }
        }
        out.init_metrics
            .sort_by(|a, b| (a.seed, &a.init_state, a.n).cmp(&(b.seed, &b.init_state, b.n)));
    }
    out
}

fn metric_row(key: &CellKey, m: crate::ipc::InitStateMetrics) -> InitMetricRow {
    InitMetricRow {
        init_state: key.init_state.clone(),
        n: key.n,
        seed: key.seed_index,
        ratio: m.ratio,
        difference: m.difference,
        windowed_difference: m.windowed_difference,
    }
}

fn push_curve(rows: &mut Vec<CurveRow>, key: &CellKey, curve: &[f64]) {
    for (i, &c1) in curve.iter().enumerate() {
        rows.push(CurveRow {
            delay: i + 1,
            c1,
            n: key.n,
            scheme: key.scheme.name().into(),
            seed: key.seed_index,
            init_state: key.init_state.clone(),
        });
    }
}
