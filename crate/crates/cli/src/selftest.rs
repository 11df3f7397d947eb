//! Functional property suite behind `bts selftest`.

use std::collections::BTreeSet;

use bts_core::arith::{find_ntt_prime, Modulus, PrimeModulus, TwiddleTable};
use bts_core::heops::{bconv_partial, BConvTable, CkksContext};
use bts_core::params::CkksInstance;
use bts_core::transform::{
    automorphism_index, decompose_permutation, intt_inplace, negacyclic_convolution, ntt, ntt_3d, ntt_inplace,
    GridMap,
};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Toy,
    Flagship,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Twiddle tables for the NTT checks; `fault` corrupts one forward factor.
fn table(bits: u32, n: usize, fault: bool) -> TwiddleTable {
    let q = find_ntt_prime(bits, n, &BTreeSet::new()).expect("NTT prime exists");
    let mut t = TwiddleTable::new(q);
    if fault {
        let i = n / 2 + 1;
        let v = t.factors()[i];
        t.corrupt_factor(i, q.add(v, 1));
    }
    t
}

fn random_limb(rng: &mut ChaCha20Rng, n: usize, q: &PrimeModulus) -> Vec<u64> {
    (0..n).map(|_| rng.gen_range(0..q.value())).collect()
}

fn ntt_round_trip(rng: &mut ChaCha20Rng, log_ns: &[u32], bits: &[u32], limbs: usize, fault: bool) -> Check {
    for &log_n in log_ns {
        let n = 1usize << log_n;
        for &b in bits {
            let t = table(b, n, fault);
            for _ in 0..limbs {
                let a = random_limb(rng, n, t.modulus());
                let mut x = a.clone();
                ntt_inplace(&mut x, &t);
                intt_inplace(&mut x, &t);
                if x != a {
                    return Check::new("ntt-round-trip", false, format!("N=2^{log_n}, {b}-bit prime"));
                }
            }
        }
    }
    Check::new("ntt-round-trip", true, format!("N=2^{}..2^{}", log_ns[0], log_ns[log_ns.len() - 1]))
}

fn convolution(rng: &mut ChaCha20Rng, fault: bool) -> Check {
    for log_n in [4u32, 6, 8] {
        let n = 1usize << log_n;
        let t = table(50, n, fault);
        let q = t.modulus();
        let a = random_limb(rng, n, q);
        let b = random_limb(rng, n, q);
        let (fa, fb) = (ntt(&a, &t), ntt(&b, &t));
        let mut prod: Vec<u64> = fa.iter().zip(&fb).map(|(&x, &y)| q.mul(x, y)).collect();
        intt_inplace(&mut prod, &t);
        if prod != negacyclic_convolution(&a, &b, q) {
            return Check::new("negacyclic-convolution", false, format!("N=2^{log_n}"));
        }
    }
    Check::new("negacyclic-convolution", true, "N ≤ 2^8 against schoolbook")
}

fn ntt_3d_matches(rng: &mut ChaCha20Rng, map: GridMap, fault: bool) -> Check {
    let n = map.degree();
    let t = table(60, n, false);
    let reference = if fault { table(60, n, true) } else { t.clone() };
    let a = random_limb(rng, n, t.modulus());
    let (got, _) = ntt_3d(&a, &map, &t);
    let ok = got == ntt(&a, &reference);
    Check::new("ntt-3d", ok, format!("N={n} on {}x{}x{}", map.nx, map.ny, map.nz))
}

fn automorphism(rng: &mut ChaCha20Rng, map: GridMap, rotations: usize) -> Check {
    let n = map.degree();
    for _ in 0..rotations {
        let r = rng.gen_range(0..n / 2);
        let route = decompose_permutation(r, &map);
        let single = (0..map.n_pe()).all(|pe| route.destination_pes(pe).len() == 1);
        let exact = (0..n).step_by(5).all(|i| route.route(i).0 == automorphism_index(i, r, n));
        if !(single && exact) {
            return Check::new("automorphism-route", false, format!("r={r}"));
        }
    }
    Check::new("automorphism-route", true, format!("{rotations} rotations, N={n}"))
}

fn bconv(rng: &mut ChaCha20Rng, trials: usize) -> Check {
    for trial in 0..trials {
        let n = 1usize << rng.gen_range(1..=8);
        let mut used = BTreeSet::new();
        let mut primes = |count: usize, rng: &mut ChaCha20Rng| -> Vec<Modulus> {
            (0..count)
                .map(|_| {
                    let bits = rng.gen_range(20..=61);
                    let q = find_ntt_prime(bits, n, &used).expect("prime");
                    used.insert(q.value());
                    q.modulus()
                })
                .collect()
        };
        let s = rng.gen_range(1..=6);
        let source = primes(s, rng);
        let t = rng.gen_range(1..=6);
        let target = primes(t, rng);
        let table = BConvTable::new(&source, &target);
        let limbs: Vec<Vec<u64>> = source
            .iter()
            .map(|q| (0..n).map(|_| rng.gen_range(0..q.value())).collect())
            .collect();
        let input: Vec<&[u64]> = limbs.iter().map(Vec::as_slice).collect();
        let out = table.convert(&input);
        let q_s = source.iter().fold(BigUint::from(1u32), |acc, q| acc * q.value());
        let weights: Vec<BigUint> = source
            .iter()
            .map(|q| {
                let qhat = &q_s / q.value();
                let inv = q.inv((&qhat % q.value()).to_u64().unwrap()).unwrap();
                qhat * inv
            })
            .collect();
        for c in 0..n {
            let mut x = BigUint::zero();
            for (w, limb) in weights.iter().zip(&limbs) {
                x += w * limb[c];
            }
            x %= &q_s;
            let ok = (0..=s).any(|e| {
                let v = &x + &q_s * e;
                target
                    .iter()
                    .enumerate()
                    .all(|(i, t)| (&v % t.value()).to_u64().unwrap() == out[i][c])
            });
            if !ok {
                return Check::new("bconv-crt", false, format!("trial {trial}, coefficient {c}"));
            }
        }
        for l_sub in [1, 2, 4, s] {
            if bconv_partial(&table, &input, l_sub).ok().as_ref() != Some(&out) {
                return Check::new("bconv-crt", false, format!("trial {trial}, l_sub {l_sub}"));
            }
        }
    }
    Check::new("bconv-crt", true, format!("{trials} random bases"))
}

fn rel_err(got: &[Complex64], want: &[Complex64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).norm() / w.norm())
        .fold(0.0, f64::max)
}

fn homomorphic(rng: &mut ChaCha20Rng, ins: &CkksInstance, messages: usize, seed: u64) -> Vec<Check> {
    const ROT: usize = 5;
    const BOUND: f64 = 1.0 / 1024.0;
    let ctx = match CkksContext::new(ins) {
        Ok(c) => c,
        Err(e) => return vec![Check::new("he-context", false, e.to_string())],
    };
    let keys = ctx.keygen(seed, &[ROT]);
    let slots = ctx.slots();
    let level = ctx.max_level();
    let scale = ctx.default_scale();
    let mut worst = [0.0f64; 5];
    let msg = |rng: &mut ChaCha20Rng| -> Vec<Complex64> {
        (0..slots)
            .map(|_| Complex64::new(rng.gen_range(0.5..=1.0), rng.gen_range(0.5..=1.0)))
            .collect()
    };
    for _ in 0..messages {
        let u = msg(rng);
        let v = msg(rng);
        let (Ok(pu), Ok(pv)) = (ctx.encode(&u, level, scale), ctx.encode(&v, level, scale)) else {
            return vec![Check::new("he-encode", false, "encoding failed")];
        };
        let cu = ctx.encrypt_pk(&pu, &keys.public, rng);
        let cv = ctx.encrypt_sk(&pv, &keys.secret, rng);
        let dec = |ct: &bts_core::rns::Ciphertext| ctx.decode(&ctx.decrypt(ct, &keys.secret));
        let prod: Vec<_> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        let sum: Vec<_> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let rot: Vec<_> = (0..slots).map(|i| u[(i + ROT) % slots]).collect();
        worst[0] = worst[0].max(rel_err(&dec(&cu), &u));
        let r = [
            ctx.hadd(&cu, &cv).map(|c| rel_err(&dec(&c), &sum)),
            ctx.hmult(&cu, &cv, &keys.mult)
                .and_then(|c| ctx.hrescale(&c))
                .map(|c| rel_err(&dec(&c), &prod)),
            ctx.hrot(&cu, ROT, &keys).map(|c| rel_err(&dec(&c), &rot)),
            ctx.pmult(&cu, &pv).and_then(|c| ctx.hrescale(&c)).map(|c| rel_err(&dec(&c), &prod)),
        ];
        for (w, e) in worst[1..].iter_mut().zip(r) {
            *w = w.max(e.unwrap_or(f64::INFINITY));
        }
    }
    ["he-decrypt", "he-hadd", "he-hmult", "he-hrot", "he-pmult"]
        .iter()
        .zip(worst)
        .map(|(name, e)| Check::new(*name, e < BOUND, format!("max relative error {e:.3e}")))
        .collect()
}

/// Runs the suite; the result lists every property with its outcome.
pub fn run(scale: Scale, seed: u64, inject_fault: bool) -> Vec<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    match scale {
        Scale::Toy => {
            let log_ns: Vec<u32> = (4..=12).collect();
            checks.push(ntt_round_trip(&mut rng, &log_ns, &[30, 50, 60], 2, inject_fault));
            checks.push(convolution(&mut rng, inject_fault));
            checks.push(ntt_3d_matches(&mut rng, GridMap::new(16, 8, 32).unwrap(), inject_fault));
            checks.push(bconv(&mut rng, 10));
            checks.push(automorphism(&mut rng, GridMap::new(16, 8, 32).unwrap(), 50));
            checks.extend(homomorphic(&mut rng, &CkksInstance::toy(12, 4, 1), 100, seed));
            checks.extend(
                homomorphic(&mut rng, &CkksInstance::toy(10, 5, 3), 2, seed)
                    .into_iter()
                    .map(|c| Check { name: format!("{}-dnum3", c.name), ..c }),
            );
        }
        Scale::Flagship => {
            checks.push(ntt_round_trip(&mut rng, &[17], &[50], 28, inject_fault));
            checks.push(ntt_3d_matches(&mut rng, GridMap::new(64, 32, 64).unwrap(), inject_fault));
            checks.push(automorphism(&mut rng, GridMap::new(64, 32, 64).unwrap(), 20));
        }
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_suite_passes_and_fault_is_caught() {
        let ok = run(Scale::Toy, 1, false);
        assert!(ok.iter().all(|c| c.passed), "{ok:?}");
        let bad = run(Scale::Toy, 1, true);
        assert!(bad.iter().any(|c| !c.passed));
        assert!(!bad.iter().find(|c| c.name == "ntt-round-trip").unwrap().passed);
    }
}
