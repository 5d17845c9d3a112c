//! Input encoding on the first qubit and the catalogue of initial reservoir
//! states.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmath::{random_density_matrix, DensityMatrix, PureState};

/// `sqrt((1-u)/2)|0> + sqrt((1+u)/2)|1>`; inputs outside `[-1, 1]` are rejected.
pub fn encode_input(u: f64) -> Result<PureState> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::InputOutOfRange(u));
    }
    PureState::new(vec![
        C64::new(((1.0 - u) / 2.0).sqrt(), 0.0),
        C64::new(((1.0 + u) / 2.0).sqrt(), 0.0),
    ])
}

/// Starting state of the reservoir before the first (or every, under reset)
/// input insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitialStateKind {
    /// `|0...0>`.
    Up,
    /// One random state drawn from `seed`, reused for every restart.
    SameRandom { seed: u64 },
    /// `(|0000> + |1111>)/sqrt(2)`; four qubits only.
    Entangled,
    /// `Id / 2^n`.
    Mixed,
    /// A fresh random state per restart; restart `r` draws from a stream derived from `(seed, r)`.
    NewRandom { seed: u64 },
}

impl InitialStateKind {
    pub const LEGEND: [&'static str; 5] = ["up", "same_random", "entangled", "mixed", "new_random"];

    pub fn legend(&self) -> &'static str {
        match self {
            Self::Up => "up",
            Self::SameRandom { .. } => "same_random",
            Self::Entangled => "entangled",
            Self::Mixed => "mixed",
            Self::NewRandom { .. } => "new_random",
        }
    }

    /// Parses a legend name, attaching `seed` to the random variants.
    pub fn from_legend(name: &str, seed: u64) -> Result<Self> {
        Ok(match name {
            "up" => Self::Up,
            "same_random" => Self::SameRandom { seed },
            "entangled" => Self::Entangled,
            "mixed" => Self::Mixed,
            "new_random" => Self::NewRandom { seed },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown initial state '{other}' (expected one of {})",
                    Self::LEGEND.join(", ")
                )))
            }
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Self::SameRandom { .. } => Self::SameRandom { seed },
            Self::NewRandom { .. } => Self::NewRandom { seed },
            other => other,
        }
    }

    pub fn resamples_per_restart(&self) -> bool {
        matches!(self, Self::NewRandom { .. })
    }
}

impl fmt::Display for InitialStateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.legend())
    }
}

impl FromStr for InitialStateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_legend(s, 0)
    }
}

/// Resolves `kind` to a density matrix. `rng` is only consumed by `NewRandom`;
/// `SameRandom` always regenerates the same matrix from its own seed.
pub fn initial_state<R: Rng + ?Sized>(
    kind: InitialStateKind,
    n_qubits: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument(
            "register needs at least one qubit".into(),
        ));
    }
    Ok(match kind {
        InitialStateKind::Up => PureState::basis(n_qubits, 0).outer(),
        InitialStateKind::Mixed => DensityMatrix::maximally_mixed(n_qubits),
        InitialStateKind::Entangled => {
            if n_qubits != 4 {
                return Err(Error::UnsupportedQubitCount("entangled initial state", 4));
            }
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut amps = vec![C64::new(0.0, 0.0); 16];
            amps[0] = C64::new(s, 0.0);
            amps[15] = C64::new(s, 0.0);
            PureState::new(amps)?.outer()
        }
        InitialStateKind::SameRandom { seed } => {
            random_density_matrix(n_qubits, &mut ChaCha8Rng::seed_from_u64(seed))
        }
        InitialStateKind::NewRandom { .. } => random_density_matrix(n_qubits, rng),
    })
}

/// Stream used by `NewRandom` for restart `restart`.
pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}
