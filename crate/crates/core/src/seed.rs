//! Stable seed derivation.
//!
//! Every random stream in a run is derived from a master seed with the
//! SplitMix64 finaliser, which is a bijection on `u64`. Outputs are therefore
//! identical across platforms and compiler versions.

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream domains. Keeps demand, supply, decisions and calibration apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Demand = 1,
    Supply = 2,
    Decisions = 3,
    Calibration = 4,
    Cell = 5,
    Population = 6,
}

/// Seed for stream `index` of `domain` under `base`.
///
/// For a fixed `base` and `domain` this is injective in `index`.
pub fn derive(base: u64, domain: Domain, index: u64) -> u64 {
    let key = mix64(index) ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    mix64(base ^ mix64(key))
}

/// Seed for one cell of an experiment sweep.
///
/// Injective over `(share_index, replication)` for indices below 2^32.
pub fn cell_seed(master: u64, share_index: usize, replication: usize) -> u64 {
    debug_assert!(share_index < (1 << 32) && replication < (1 << 32));
    derive(master, Domain::Cell, ((share_index as u64) << 32) | replication as u64)
}

/// Seed of the population (demand and driver start positions) shared by all
/// cells of one replication.
pub fn population_seed(master: u64, replication: usize) -> u64 {
    derive(master, Domain::Population, replication as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn cell_seeds_are_distinct() {
        let mut seen = HashSet::new();
        for s in 0..50 {
            for r in 0..50 {
                assert!(seen.insert(cell_seed(42, s, r)));
            }
        }
    }

    #[test]
    fn frozen_values() {
        // stable across releases; outputs depend on these
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive(7, Domain::Demand, 0), derive(7, Domain::Demand, 0));
        assert_ne!(derive(7, Domain::Demand, 0), derive(7, Domain::Supply, 0));
    }
}
