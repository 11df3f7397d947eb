use super::{BootSchedule, CkksInstance, ParamsError, SecurityTable};

/// Bytes of the evk slices touched by one key-switch at level ℓ.
///
/// Only the ⌈(ℓ+1)/α⌉ factors that intersect C_ℓ carry data, so only those
/// slices are streamed; at ℓ = L this is the full key.
pub fn evk_bytes_at_level(ins: &CkksInstance, level: usize) -> u64 {
    let n = ins.n() as u64;
    let k = ins.k() as u64;
    let slices = (level + 1).div_ceil(ins.alpha()) as u64;
    2 * slices * n * (k + level as u64 + 1) * 8
}

/// Seconds to stream the evk of one HMult/HRot at level ℓ.
pub fn tmult_min_bound(ins: &CkksInstance, level: usize, mem_bw: f64) -> f64 {
    evk_bytes_at_level(ins, level) as f64 / mem_bw
}

/// NTT units needed so that (i)NTT work hides under evk streaming.
pub fn min_nttu(ins: &CkksInstance, level: usize, freq: f64, mem_bw: f64) -> f64 {
    let n = ins.n() as f64;
    let dnum = ins.dnum as f64;
    let limbs = (ins.k() + level + 1) as f64;
    let compute = (dnum + 2.0) * limbs * (n * ins.log_n as f64 / 2.0) / freq;
    let load = 2.0 * dnum * limbs * n * 8.0 / mem_bw;
    compute / load
}

/// (T_boot + Σ_{ℓ=1}^{L-L_boot} T_mult(ℓ)) / (L - L_boot) · 2/N.
pub fn amortized_mult_per_slot(
    ins: &CkksInstance,
    schedule: &BootSchedule,
    mem_bw: f64,
) -> Result<f64, ParamsError> {
    if schedule.segments.is_empty() {
        return Err(ParamsError::EmptySchedule);
    }
    if ins.max_level <= schedule.l_boot {
        return Err(ParamsError::InvalidInstance(format!(
            "L = {} does not exceed L_boot = {}",
            ins.max_level, schedule.l_boot
        )));
    }
    let t_boot: f64 = schedule
        .key_switch_ops(ins.max_level)
        .map(|(level, count)| count as f64 * tmult_min_bound(ins, level, mem_bw))
        .sum();
    let usable = ins.max_level - schedule.l_boot;
    let t_mult: f64 = (1..=usable).map(|l| tmult_min_bound(ins, l, mem_bw)).sum();
    Ok((t_boot + t_mult) / usable as f64 * 2.0 / ins.n() as f64)
}

/// Modular multiplications of one HMult, split by primary function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModMultCounts {
    pub ntt: f64,
    pub bconv: f64,
    pub inner_product: f64,
    pub tensor: f64,
    pub ssa: f64,
}

impl ModMultCounts {
    pub fn total(&self) -> f64 {
        self.ntt + self.bconv + self.inner_product + self.tensor + self.ssa
    }

    pub fn bconv_share(&self) -> f64 {
        self.bconv / self.total()
    }
}

/// Counts for an HMult at level ℓ following the key-switching flow: one
/// butterfly multiplication per (i)NTT butterfly, the scale and accumulate steps
/// for both base conversions, the evk inner product, tensor and SSA.
pub fn hmult_mod_mults(ins: &CkksInstance, level: usize) -> ModMultCounts {
    let n = ins.n() as f64;
    let l1 = (level + 1) as f64;
    let k = ins.k() as f64;
    let alpha = ins.alpha();
    let slices = (level + 1).div_ceil(alpha);
    let butterflies = n / 2.0 * ins.log_n as f64;

    // ModUp: every slice converts its own primes to the rest of C_ℓ ∪ B
    let mut modup = 0.0;
    let mut modup_targets = 0.0;
    for j in 0..slices {
        let own = (alpha.min(level + 1 - j * alpha)) as f64;
        let targets = l1 + k - own;
        modup += own * n + own * targets * n;
        modup_targets += targets;
    }
    // ModDown of both polynomials from B to C_ℓ
    let moddown = 2.0 * (k * n + k * l1 * n);
    let ntt_limbs = l1 + modup_targets + 2.0 * k + 2.0 * l1;
    ModMultCounts {
        ntt: ntt_limbs * butterflies,
        bconv: modup + moddown,
        inner_product: 2.0 * slices as f64 * (k + l1) * n,
        tensor: 4.0 * l1 * n,
        ssa: 2.0 * 2.0 * l1 * n,
    }
}

/// BConv share of HMult modular multiplications at ℓ = L.
pub fn complexity_share_bconv(ins: &CkksInstance) -> f64 {
    hmult_mod_mults(ins, ins.max_level).bconv_share()
}

/// BConv share for the deepest instance with λ ≥ `lambda_min` at the given
/// degree and dnum; `dnum = None` selects dnum = L + 1.
pub fn complexity_share_bconv_at(
    log_n: u32,
    dnum: Option<usize>,
    lambda_min: f64,
) -> Option<(CkksInstance, f64)> {
    let table = SecurityTable::default();
    let n = 1usize << log_n;
    (1..400usize)
        .rev()
        .map(|l| CkksInstance::flagship("sweep", log_n, l, dnum.unwrap_or(l + 1)))
        .filter(|ins| ins.validate().is_ok())
        .find(|ins| table.lambda(n, ins.log_pq()) >= lambda_min)
        .map(|ins| {
            let s = complexity_share_bconv(&ins);
            (ins, s)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::builtin_instances;

    #[test]
    fn min_nttu_values() {
        let ins1 = &builtin_instances()[0];
        let v = min_nttu(ins1, 27, 1.2e9, 1e12);
        assert!((v - 1328.0).abs() <= 1.0, "{v}");
        let max = CkksInstance::flagship("max", 17, 27, 28);
        assert!((min_nttu(&max, 27, 1.2e9, 1e12) - 474.3).abs() < 0.5);
        assert!((min_nttu(ins1, 27, 1.2e9, 2e12) - 2.0 * v).abs() < 1e-9);
    }

    #[test]
    fn evk_bound() {
        let ins1 = &builtin_instances()[0];
        assert_eq!(evk_bytes_at_level(ins1, 27), 117_440_512);
        let t = tmult_min_bound(ins1, 27, 1e12);
        assert!((t - 117.44e-6).abs() < 1e-9);
        assert_eq!(evk_bytes_at_level(ins1, 0), 2 * (1 << 17) * 29 * 8);
        assert!((tmult_min_bound(ins1, 27, 2e12) - t / 2.0).abs() < 1e-15);
        // at ℓ = L the active-slice count equals dnum for every instance
        for ins in builtin_instances() {
            let full = 2 * ins.dnum as u64 * ins.n() as u64 * (ins.k() + ins.max_level + 1) as u64 * 8;
            assert_eq!(evk_bytes_at_level(&ins, ins.max_level), full);
        }
    }

    #[test]
    fn degenerate_schedule_is_mean_of_mults() {
        let ins1 = &builtin_instances()[0];
        let s = BootSchedule::empty(19);
        let mean: f64 = (1..=8).map(|l| tmult_min_bound(ins1, l, 1e12)).sum::<f64>() / 8.0;
        let got = amortized_mult_per_slot(ins1, &s, 1e12).unwrap();
        assert!((got - mean * 2.0 / (1 << 17) as f64).abs() < 1e-18);
        let none = BootSchedule {
            l_boot: 19,
            segments: vec![],
        };
        assert_eq!(
            amortized_mult_per_slot(ins1, &none, 1e12),
            Err(ParamsError::EmptySchedule)
        );
    }

    #[test]
    fn bconv_share_decreases_with_dnum() {
        let mut prev = 1.0;
        for dnum in [1usize, 2, 3, 4, 7, 14, 28] {
            let ins = CkksInstance::flagship("x", 17, 27, dnum);
            let s = complexity_share_bconv(&ins);
            assert!(s < prev, "dnum {dnum}: {s}");
            prev = s;
        }
    }
}
