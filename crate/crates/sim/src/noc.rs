//! PE-PE NoC timing.

use std::collections::BTreeMap;

use bts_core::transform::{is_permutation, PermutationRoute, Transfer};

use crate::config::HardwareConfig;
use crate::graph::PermutationCycles;
use crate::SimError;

/// One inter-PE data movement stage.
#[derive(Debug, Clone, Copy)]
pub enum NocStage<'a> {
    /// Fixed all-to-all exchange inside every column or row.
    Transpose(&'a [Transfer]),
    /// One destination per source PE.
    Permutation(&'a [Transfer]),
}

/// Reference cycles for the busiest crossbar port to move its bytes.
pub fn noc_transfer_time(stage: NocStage<'_>, hw: &HardwareConfig) -> Result<u64, SimError> {
    let transfers = match stage {
        NocStage::Transpose(t) => t,
        NocStage::Permutation(t) => {
            if !is_permutation(t) {
                return Err(SimError::Contention);
            }
            t
        }
    };
    let mut out: BTreeMap<usize, u64> = BTreeMap::new();
    let mut inn: BTreeMap<usize, u64> = BTreeMap::new();
    for t in transfers.iter().filter(|t| t.src != t.dst) {
        *out.entry(t.src).or_default() += t.words as u64 * 8;
        *inn.entry(t.dst).or_default() += t.words as u64 * 8;
    }
    let bytes = out.values().chain(inn.values()).copied().max().unwrap_or(0);
    Ok(hw.to_ref_cycles(bytes as f64 * 8.0 / hw.noc.port_bits as f64, hw.freq.noc))
}

/// Vertical and horizontal stage cycles of one automorphism route.
pub fn permutation_cycles(route: &PermutationRoute, hw: &HardwareConfig) -> Result<PermutationCycles, SimError> {
    Ok(PermutationCycles {
        vertical: noc_transfer_time(NocStage::Permutation(&route.vertical_transfers()), hw)?,
        horizontal: noc_transfer_time(NocStage::Permutation(&route.horizontal_transfers()), hw)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bts_core::arith::{find_ntt_prime, TwiddleTable};
    use bts_core::transform::{decompose_permutation, ntt_3d, GridMap};
    use std::collections::BTreeSet;

    #[test]
    fn identity_rotation_is_free() {
        let hw = HardwareConfig::default();
        let map = GridMap::new(64, 32, 64).unwrap();
        let c = permutation_cycles(&decompose_permutation(0, &map), &hw).unwrap();
        assert_eq!(c, PermutationCycles::default());
        let c = permutation_cycles(&decompose_permutation(1, &map), &hw).unwrap();
        assert_eq!(c.vertical, 342);
        assert_eq!(c.horizontal, 342);
    }

    #[test]
    fn transpose_matches_audited_traffic() {
        let hw = HardwareConfig::default();
        let n = 1 << 17;
        let map = GridMap::for_grid(n, 32, 64).unwrap();
        let table = TwiddleTable::new(find_ntt_prime(40, n, &BTreeSet::new()).unwrap());
        let limb: Vec<u64> = (0..n as u64).collect();
        let (_, trace) = ntt_3d(&limb, &map, &table);
        // (N/n_pe)·8·(1 − 1/side) bytes out of every PE
        assert_eq!(noc_transfer_time(NocStage::Transpose(&trace.vertical), &hw).unwrap(), 331);
        assert_eq!(noc_transfer_time(NocStage::Transpose(&trace.horizontal), &hw).unwrap(), 336);
    }

    #[test]
    fn wider_ports_halve_time() {
        let mut hw = HardwareConfig::default();
        let t = [Transfer { src: 0, dst: 1, words: 96 }, Transfer { src: 1, dst: 0, words: 96 }];
        let base = noc_transfer_time(NocStage::Permutation(&t), &hw).unwrap();
        hw.noc.port_bits *= 2;
        assert_eq!(noc_transfer_time(NocStage::Permutation(&t), &hw).unwrap() * 2, base);
    }

    #[test]
    fn contention_detected() {
        let hw = HardwareConfig::default();
        let t = [Transfer { src: 0, dst: 2, words: 1 }, Transfer { src: 1, dst: 2, words: 1 }];
        assert!(matches!(noc_transfer_time(NocStage::Permutation(&t), &hw), Err(SimError::Contention)));
        assert!(noc_transfer_time(NocStage::Transpose(&t), &hw).is_ok());
    }
}
