//! CKKS primitive operations over a full-RNS basis.
//!
//! Ciphertexts rest in the NTT domain. Decryption is ct·(1, -s), so a fresh
//! encryption is (a·s + m + e, a).

mod bconv;
mod encoder;
mod keys;
mod ops;

pub use bconv::{bconv_partial, BConvAccumulator, BConvTable};
pub use encoder::Encoder;
pub use keys::{sample_gaussian, sample_ternary, KeySet, ERROR_STDDEV};
pub use ops::ssa_unfused;

use num_bigint::BigUint;
use thiserror::Error;

use crate::arith::Modulus;
use crate::params::CkksInstance;
use crate::rns::{build_basis, RnsBasis, RnsError};

#[derive(Debug, Error)]
pub enum HeError {
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("scale mismatch: {0} vs {1}")]
    ScaleMismatch(f64, f64),
    #[error("level exhausted")]
    LevelExhausted,
    #[error("no evaluation key for rotation {0}")]
    MissingEvk(usize),
    #[error("operation requires the coefficient domain")]
    DomainError,
    #[error("incomplete BConv group: got {got}, expected {expected}")]
    IncompleteGroup { got: usize, expected: usize },
    #[error("encoded coefficient exceeds the modulus")]
    ScaleOverflow,
    #[error("too many values for the slot count")]
    TooManySlots,
    #[error(transparent)]
    Rns(#[from] RnsError),
}

/// Relative tolerance under which two scales are treated as equal.
pub const SCALE_TOLERANCE: f64 = 1.0 / 65536.0;

/// BConv tables and constants for generalized key switching at every level.
#[derive(Debug, Clone)]
pub struct KeySwitchContext {
    /// modup[ℓ][j]: factor j ∩ C_ℓ → (C_ℓ \ factor j) ∪ B
    modup: Vec<Vec<BConvTable>>,
    /// moddown[ℓ]: B → C_ℓ
    moddown: Vec<BConvTable>,
    p_inv_mod_q: Vec<u64>,
    p_mod_q: Vec<u64>,
}

impl KeySwitchContext {
    pub fn new(basis: &RnsBasis) -> Self {
        let special: Vec<Modulus> = basis.special_primes().iter().map(|q| q.modulus()).collect();
        let data: Vec<Modulus> = basis.data_primes().iter().map(|q| q.modulus()).collect();
        let mut modup = Vec::new();
        let mut moddown = Vec::new();
        for level in 0..=basis.max_level() {
            let slices = (0..basis.active_factors(level))
                .map(|j| {
                    let own = basis.factor(j);
                    let src: Vec<Modulus> = own.clone().filter(|&i| i <= level).map(|i| data[i]).collect();
                    let dst: Vec<Modulus> = (0..=level)
                        .filter(|i| !own.contains(i))
                        .map(|i| data[i])
                        .chain(special.iter().copied())
                        .collect();
                    BConvTable::new(&src, &dst)
                })
                .collect();
            modup.push(slices);
            moddown.push(BConvTable::new(&special, &data[..=level]));
        }
        let p = RnsBasis::product(basis.special_primes());
        let p_mod_q: Vec<u64> = data
            .iter()
            .map(|q| (&p % BigUint::from(q.value())).to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        let p_inv_mod_q = data
            .iter()
            .zip(&p_mod_q)
            .map(|(q, &pm)| q.inv(pm).expect("P is coprime to every q_i"))
            .collect();
        Self {
            modup,
            moddown,
            p_inv_mod_q,
            p_mod_q,
        }
    }

    pub fn modup_table(&self, level: usize, slice: usize) -> &BConvTable {
        &self.modup[level][slice]
    }

    pub fn moddown_table(&self, level: usize) -> &BConvTable {
        &self.moddown[level]
    }

    pub fn p_inv_mod_q(&self) -> &[u64] {
        &self.p_inv_mod_q
    }

    pub fn p_mod_q(&self) -> &[u64] {
        &self.p_mod_q
    }
}

/// Everything needed to run CKKS operations for one instance.
#[derive(Debug, Clone)]
pub struct CkksContext {
    instance: CkksInstance,
    basis: RnsBasis,
    encoder: Encoder,
    ks: KeySwitchContext,
    l_sub: usize,
}

impl CkksContext {
    pub fn new(instance: &CkksInstance) -> Result<Self, HeError> {
        let basis = build_basis(instance)?;
        let ks = KeySwitchContext::new(&basis);
        Ok(Self {
            instance: instance.clone(),
            encoder: Encoder::new(instance.n()),
            basis,
            ks,
            l_sub: 4,
        })
    }

    /// Group size used by ModUp/ModDown base conversions.
    pub fn with_l_sub(mut self, l_sub: usize) -> Self {
        self.l_sub = l_sub;
        self
    }

    pub fn instance(&self) -> &CkksInstance {
        &self.instance
    }

    pub fn basis(&self) -> &RnsBasis {
        &self.basis
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn key_switch_context(&self) -> &KeySwitchContext {
        &self.ks
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn max_level(&self) -> usize {
        self.basis.max_level()
    }

    pub fn slots(&self) -> usize {
        self.degree() / 2
    }

    pub fn default_scale(&self) -> f64 {
        self.instance.scale()
    }
}
