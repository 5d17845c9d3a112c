//! Experiment configuration.
//!
//! A configuration starts from a preset (`paper` or `desk`), and a TOML file
//! overrides any subset of its keys. Unknown keys and malformed values are
//! rejected before anything runs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encode::InitialStateKind;
use crate::error::{Error, Result};
use crate::ipc::{
    IpcConfig, ThresholdRule, DEFAULT_D_MAX, DEFAULT_FIXED_THRESHOLD, DEFAULT_METRIC_WINDOW,
};
use crate::reservoir::{CircuitParams, IsingParams};
use crate::tasks::{LorenzTask, TaskLengths};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReservoirKind {
    Ising,
    Circuit,
}

/// Which drive schemes a sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSelection {
    /// Reset-window cells plus one full-history baseline per seed.
    Both,
    Lcqa,
    Qcqa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Lxx,
    Lxz,
    Ipc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Surrogate,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Reduced lengths for quick runs: 1000/5000/1000 steps, orders up to 3.
    Desk,
    /// Parameter table defaults: 10000/50000/5000 steps, orders up to 6.
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected desk or paper)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Desk => "desk",
            Self::Paper => "paper",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub n_v: usize,
    /// Fixes the couplings for every seed index when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub n_w: usize,
    pub param_lo: f64,
    pub param_hi: f64,
    /// Fixes the gates for every seed index when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub scheme: SchemeSelection,
    /// Restricts the sweep to this single reset length when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reset_length: Option<usize>,
    /// Defaults to the task's init length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub washout: Option<usize>,
    pub init_state: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    /// Defaults to 0 for the Ising reservoir and 1e-2 for the circuit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Defaults to 1e-6 for the Ising reservoir and 0 for the circuit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpcSection {
    pub max_order: usize,
    pub d_max_k1: usize,
    pub d_max_k2: usize,
    pub d_max_k3: usize,
    pub d_max_k4: usize,
    pub d_max_k5: usize,
    pub d_max_k6: usize,
    pub threshold_mode: ThresholdMode,
    pub threshold_value: f64,
    pub surrogate_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    /// Lorenz sweeps run both tasks unless one is named here.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
    pub init: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub reset_lengths: Vec<usize>,
    /// Realization indices; each picks its own couplings or gates and inputs.
    pub seeds: Vec<u64>,
    /// Initial states compared by the init-state study.
    pub init_states: Vec<String>,
    /// Window length of the windowed difference metric.
    pub window: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reservoir: ReservoirKind,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub ising: IsingSection,
    pub circuit: CircuitSection,
    pub drive: DriveSection,
    pub readout: ReadoutSection,
    pub ipc: IpcSection,
    pub task: TaskSection,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Paper)
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let paper = Self {
            reservoir: ReservoirKind::Ising,
            master_seed: 0,
            out_dir: None,
            workers: None,
            ising: IsingSection {
                h: IsingParams::DEFAULT_FIELD,
                t: IsingParams::DEFAULT_CLOCK_CYCLE,
                n_v: IsingParams::DEFAULT_VIRTUAL_NODES,
                coupling_seed: None,
            },
            circuit: CircuitSection {
                n_w: CircuitParams::DEFAULT_REPETITIONS,
                param_lo: CircuitParams::DEFAULT_INTERVAL.0,
                param_hi: CircuitParams::DEFAULT_INTERVAL.1,
                gate_seed: None,
            },
            drive: DriveSection {
                scheme: SchemeSelection::Both,
                reset_length: None,
                washout: None,
                init_state: "up".into(),
            },
            readout: ReadoutSection {
                lambda: None,
                noise_sigma: None,
            },
            ipc: IpcSection {
                max_order: 6,
                d_max_k1: DEFAULT_D_MAX[0],
                d_max_k2: DEFAULT_D_MAX[1],
                d_max_k3: DEFAULT_D_MAX[2],
                d_max_k4: DEFAULT_D_MAX[3],
                d_max_k5: DEFAULT_D_MAX[4],
                d_max_k6: DEFAULT_D_MAX[5],
                threshold_mode: ThresholdMode::Surrogate,
                threshold_value: DEFAULT_FIXED_THRESHOLD,
                surrogate_count: crate::ipc::DEFAULT_SURROGATE_COUNT,
            },
            task: TaskSection {
                task: None,
                init: 10_000,
                train: 50_000,
                test: 5_000,
            },
            sweep: SweepSection {
                reset_lengths: (1..=20).collect(),
                seeds: (0..10).collect(),
                init_states: InitialStateKind::LEGEND
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                window: DEFAULT_METRIC_WINDOW,
            },
        };
        match preset {
            Preset::Paper => paper,
            Preset::Desk => Self {
                ipc: IpcSection {
                    max_order: 3,
                    ..paper.ipc
                },
                task: TaskSection {
                    init: 1_000,
                    train: 5_000,
                    test: 1_000,
                    ..paper.task
                },
                sweep: SweepSection {
                    reset_lengths: vec![1, 2, 3, 5, 10, 15, 20],
                    seeds: (0..5).collect(),
                    ..paper.sweep
                },
                ..paper
            },
        }
    }

    /// Overlays the keys in `text` on `preset` and validates the result.
    pub fn from_toml_str(text: &str, preset: Preset) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::preset(preset))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge_tables(&mut base, user);
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, preset: Preset) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, preset)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn lambda(&self) -> f64 {
        self.readout.lambda.unwrap_or(match self.reservoir {
            ReservoirKind::Ising => 0.0,
            ReservoirKind::Circuit => 1e-2,
        })
    }

    pub fn noise_sigma(&self) -> f64 {
        self.readout.noise_sigma.unwrap_or(match self.reservoir {
            ReservoirKind::Ising => 1e-6,
            ReservoirKind::Circuit => 0.0,
        })
    }

    pub fn lengths(&self) -> TaskLengths {
        TaskLengths {
            init: self.task.init,
            train: self.task.train,
            test: self.task.test,
        }
    }

    pub fn washout(&self) -> usize {
        self.drive.washout.unwrap_or(self.task.init)
    }

    pub fn reset_lengths(&self) -> Vec<usize> {
        match self.drive.reset_length {
            Some(n) => vec![n],
            None => self.sweep.reset_lengths.clone(),
        }
    }

    pub fn d_max(&self) -> Vec<usize> {
        let i = &self.ipc;
        vec![
            i.d_max_k1, i.d_max_k2, i.d_max_k3, i.d_max_k4, i.d_max_k5, i.d_max_k6,
        ]
    }

    pub fn ipc_config(&self) -> IpcConfig {
        IpcConfig {
            max_order: self.ipc.max_order,
            d_max: self.d_max(),
            threshold: match self.ipc.threshold_mode {
                ThresholdMode::Surrogate => ThresholdRule::Surrogate {
                    count: self.ipc.surrogate_count,
                },
                ThresholdMode::Fixed => ThresholdRule::Fixed(self.ipc.threshold_value),
            },
            lambda: self.lambda(),
            noise_sigma: self.noise_sigma(),
        }
    }

    /// Lorenz tasks selected by `task.task`; both when unset.
    pub fn lorenz_tasks(&self) -> Result<Vec<LorenzTask>> {
        match self.task.task {
            None => Ok(vec![LorenzTask::Lxx, LorenzTask::Lxz]),
            Some(TaskKind::Lxx) => Ok(vec![LorenzTask::Lxx]),
            Some(TaskKind::Lxz) => Ok(vec![LorenzTask::Lxz]),
            Some(TaskKind::Ipc) => Err(Error::Config(
                "task = \"ipc\" cannot drive a Lorenz sweep".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let pos = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} = {v} must be finite and positive"
                )))
            }
        };
        if self.master_seed > i64::MAX as u64 {
            return bad(format!(
                "master_seed {} exceeds {}",
                self.master_seed,
                i64::MAX
            ));
        }
        if !self.ising.h.is_finite() {
            return bad(format!("ising.h = {} must be finite", self.ising.h));
        }
        pos("ising.T", self.ising.t)?;
        if self.ising.n_v == 0 {
            return bad("ising.n_v must be at least 1".into());
        }
        if self.circuit.n_w == 0 {
            return bad("circuit.n_w must be at least 1".into());
        }
        if !(self.circuit.param_lo.is_finite() && self.circuit.param_hi.is_finite())
            || self.circuit.param_lo >= self.circuit.param_hi
        {
            return bad(format!(
                "circuit.param_lo = {} must be below circuit.param_hi = {}",
                self.circuit.param_lo, self.circuit.param_hi
            ));
        }
        InitialStateKind::from_legend(&self.drive.init_state, 0)
            .map_err(|e| Error::Config(e.to_string()))?;
        for s in &self.sweep.init_states {
            InitialStateKind::from_legend(s, 0).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(l) = self.readout.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return bad(format!("readout.lambda = {l} must be finite and >= 0"));
            }
        }
        if let Some(s) = self.readout.noise_sigma {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("readout.noise_sigma = {s} must be finite and >= 0"));
            }
        }
        if self.task.train == 0 || self.task.test == 0 {
            return bad("task.train and task.test must be positive".into());
        }
        let ns = self.reset_lengths();
        if ns.is_empty() && self.drive.scheme != SchemeSelection::Qcqa {
            return bad("sweep.reset_lengths is empty".into());
        }
        if ns.contains(&0) {
            return bad("reset lengths must be at least 1".into());
        }
        if has_duplicates(&ns) {
            return bad(format!("duplicate reset lengths in {ns:?}"));
        }
        let max_n = ns.iter().copied().max().unwrap_or(0);
        if self.washout() < max_n {
            return bad(format!(
                "washout {} is shorter than the largest reset length {max_n}",
                self.washout()
            ));
        }
        if self.sweep.seeds.is_empty() {
            return bad("sweep.seeds is empty".into());
        }
        if has_duplicates(&self.sweep.seeds) {
            return bad(format!("duplicate seed indices in {:?}", self.sweep.seeds));
        }
        if has_duplicates(&self.sweep.init_states) {
            return bad(format!(
                "duplicate init states in {:?}",
                self.sweep.init_states
            ));
        }
        if self.sweep.window == 0 {
            return bad("sweep.window must be at least 1".into());
        }
        if self.ipc.threshold_mode == ThresholdMode::Fixed
            && (self.ipc.threshold_value.is_nan() || self.ipc.threshold_value < 0.0)
        {
            return bad(format!(
                "ipc.threshold_value = {} must be >= 0",
                self.ipc.threshold_value
            ));
        }
        let ipc = self.ipc_config();
        ipc.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.washout() + 1 < ipc.history_needed().max(max_n + 1) {
            return bad(format!(
                "washout {} leaves too little input history for delay {}",
                self.washout(),
                ipc.history_needed().max(max_n + 1)
            ));
        }
        Ok(())
    }
}

fn has_duplicates<T: Ord + Clone>(v: &[T]) -> bool {
    let mut s = v.to_vec();
    s.sort();
    s.windows(2).any(|w| w[0] == w[1])
}

fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
