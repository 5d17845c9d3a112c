//! Stable seed derivation.
//!
//! Every seed is the first eight bytes (little endian) of a SHA-256 digest of
//! a tag followed by the little-endian encodings of its parts, so seeds do not
//! depend on sweep composition, iteration order or thread count.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::encode::InitialStateKind;

/// Hashes `tag` and `parts` into a 64-bit seed.
pub fn derive_seed(tag: &str, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Randomness shared by every cell of one realization index: couplings or
/// gates, drive series and random initial states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RealizationSeeds {
    pub reservoir: u64,
    pub inputs: u64,
    pub init_state: u64,
}

impl RealizationSeeds {
    pub fn new(master_seed: u64, seed_index: u64) -> Self {
        let part = |tag| {
            derive_seed(
                tag,
                &[&master_seed.to_le_bytes(), &seed_index.to_le_bytes()],
            )
        };
        Self {
            reservoir: part("reservoir"),
            inputs: part("inputs"),
            init_state: part("init-state"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Qcqa,
    Lcqa,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Qcqa => "qcqa",
            Self::Lcqa => "lcqa",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Identifies one sweep cell. Full-history cells carry `n = -1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub seed_index: u64,
    pub scheme: Scheme,
    pub init_state: String,
    pub n: i64,
}

impl CellKey {
    pub fn qcqa(seed_index: u64, init: InitialStateKind) -> Self {
        Self {
            seed_index,
            scheme: Scheme::Qcqa,
            init_state: init.legend().to_string(),
            n: -1,
        }
    }

    pub fn lcqa(seed_index: u64, init: InitialStateKind, n: usize) -> Self {
        Self {
            seed_index,
            scheme: Scheme::Lcqa,
            init_state: init.legend().to_string(),
            n: n as i64,
        }
    }

    /// Seed for the cell's own randomness (feature noise, surrogate shifts).
    pub fn cell_seed(&self, master_seed: u64) -> u64 {
        derive_seed(
            "cell",
            &[
                &master_seed.to_le_bytes(),
                &self.n.to_le_bytes(),
                &self.seed_index.to_le_bytes(),
                self.init_state.as_bytes(),
                self.scheme.name().as_bytes(),
            ],
        )
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/n={}/seed={}/{}",
            self.scheme, self.n, self.seed_index, self.init_state
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derivation_is_stable() {
        // pinned so an accidental change to the encoding is noticed
        let a = derive_seed("cell", &[&7u64.to_le_bytes()]);
        assert_eq!(a, derive_seed("cell", &[&7u64.to_le_bytes()]));
        assert_ne!(a, derive_seed("cel", &[b"l", &7u64.to_le_bytes()]));
        assert_ne!(
            derive_seed("x", &[b"ab", b"c"]),
            derive_seed("x", &[b"a", b"bc"])
        );
    }

    #[test]
    fn cell_seeds_are_distinct_over_a_large_sweep() {
        let mut seen = HashSet::new();
        let mut count = 0;
        for seed_index in 0..20u64 {
            for name in InitialStateKind::LEGEND {
                let init = InitialStateKind::from_legend(name, 0).unwrap();
                assert!(seen.insert(CellKey::qcqa(seed_index, init).cell_seed(3)));
                count += 1;
                for n in 1..=50 {
                    assert!(seen.insert(CellKey::lcqa(seed_index, init, n).cell_seed(3)));
                    count += 1;
                }
            }
        }
        assert_eq!(seen.len(), count);
    }

    #[test]
    fn realization_streams_differ() {
        let a = RealizationSeeds::new(0, 0);
        let b = RealizationSeeds::new(0, 1);
        let c = RealizationSeeds::new(1, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a.reservoir, a.inputs);
        assert_eq!(a, RealizationSeeds::new(0, 0));
    }
}
