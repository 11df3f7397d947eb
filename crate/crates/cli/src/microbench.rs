//! Canonical amortized-multiplication workload.

use bts_core::params::CkksInstance;
use bts_sim::{Trace, TraceOp};

/// `rounds` × (HMULT + RESCALE from L − L_boot down to level 0, then BOOT),
/// all on one ciphertext `x`.
pub fn microbench(ins: &CkksInstance, l_boot: usize, rounds: usize) -> Result<Trace, String> {
    let start = ins
        .max_level
        .checked_sub(l_boot)
        .filter(|&s| s > 0)
        .ok_or_else(|| format!("L = {} leaves no levels above L_boot = {l_boot}", ins.max_level))?;
    let x = || "x".to_string();
    let mut ops = vec![TraceOp::Decl {
        name: x(),
        level: start,
        offchip: false,
    }];
    for _ in 0..rounds {
        for _ in 0..start {
            ops.push(TraceOp::HMult { a: x(), b: x(), out: x() });
            ops.push(TraceOp::Rescale { a: x(), out: x() });
        }
        ops.push(TraceOp::Boot { a: x(), out: x() });
    }
    Ok(Trace { ops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bts_core::params::builtin_instances;

    #[test]
    fn mult_levels_per_round() {
        let ins = builtin_instances();
        let count = |t: &Trace| t.ops.iter().filter(|o| o.mnemonic() == "HMULT").count();
        assert_eq!(count(&microbench(&ins[0], 19, 1).unwrap()), 8);
        assert_eq!(count(&microbench(&ins[1], 19, 1).unwrap()), 20);
        let two = microbench(&ins[0], 19, 2).unwrap();
        assert_eq!(two.ops[1..18], two.ops[18..35]);
        assert!(two.check(27, 19).is_ok());
        assert!(microbench(&ins[0], 27, 1).is_err());
    }
}
