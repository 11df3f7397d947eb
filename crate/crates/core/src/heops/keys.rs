//! Key generation and noise sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::arith::PrimeModulus;
use crate::rns::{Domain, EvaluationKey, PublicKey, RnsPolynomial, SecretKey};
use crate::transform::galois_element;

use super::CkksContext;

/// Standard deviation of the rounded Gaussian error.
pub const ERROR_STDDEV: f64 = 3.2;

pub fn sample_ternary(rng: &mut impl Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-1..=1)).collect()
}

pub fn sample_gaussian(rng: &mut impl Rng, n: usize) -> Vec<i64> {
    let normal = Normal::new(0.0, ERROR_STDDEV).expect("valid deviation");
    (0..n).map(|_| normal.sample(rng).round() as i64).collect()
}

pub(crate) fn sample_uniform(rng: &mut impl Rng, n: usize, moduli: &[PrimeModulus]) -> RnsPolynomial {
    let limbs = moduli
        .iter()
        .map(|q| (0..n).map(|_| rng.gen_range(0..q.value())).collect())
        .collect();
    RnsPolynomial::from_limbs(moduli, limbs, Domain::Ntt)
}

/// Secret, public and evaluation keys produced from one seed.
#[derive(Debug, Clone)]
pub struct KeySet {
    pub secret: SecretKey,
    pub public: PublicKey,
    pub mult: EvaluationKey,
    pub rot: BTreeMap<usize, EvaluationKey>,
}

impl KeySet {
    pub fn rotation_key(&self, r: usize) -> Option<&EvaluationKey> {
        self.rot.get(&r)
    }
}

impl CkksContext {
    /// q_0..q_L followed by p_0..p_{k-1}.
    pub fn full_moduli(&self) -> Vec<PrimeModulus> {
        let b = self.basis();
        b.data_primes().iter().chain(b.special_primes()).copied().collect()
    }

    pub(crate) fn ntt_poly_signed(&self, coeffs: &[i64], moduli: &[PrimeModulus]) -> RnsPolynomial {
        let mut p = RnsPolynomial::from_signed(coeffs, moduli);
        p.to_ntt(self.basis());
        p
    }

    /// Deterministic key generation; `rotations` are slot shifts in 0..N/2.
    pub fn keygen(&self, seed: u64, rotations: &[usize]) -> KeySet {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = self.degree();
        let full = self.full_moduli();
        let coeffs = sample_ternary(&mut rng, n);
        let secret = SecretKey {
            s: self.ntt_poly_signed(&coeffs, &full),
            coeffs,
        };

        let data = self.basis().data_primes();
        let a = sample_uniform(&mut rng, n, data);
        let e = self.ntt_poly_signed(&sample_gaussian(&mut rng, n), data);
        let s_data = secret.s.select(0..data.len());
        let public = PublicKey {
            b: a.mul(&s_data).add(&e),
            a,
        };

        let s2 = s_data.mul(&s_data);
        let mult = self.gen_evk(&secret, &s2, &mut rng);
        let two_n = 2 * n;
        let rot = rotations
            .iter()
            .map(|&r| {
                let g = galois_element(r, two_n);
                let mut rotated = vec![0i64; n];
                for (i, &c) in secret.coeffs.iter().enumerate() {
                    let k = i * g % two_n;
                    if k < n {
                        rotated[k] = c;
                    } else {
                        rotated[k - n] = -c;
                    }
                }
                // HRot adds the switched a(X^g) part, so the key carries -s(X^g)
                let target = self.ntt_poly_signed(&rotated, data).neg();
                (r, self.gen_evk(&secret, &target, &mut rng))
            })
            .collect();
        KeySet {
            secret,
            public,
            mult,
            rot,
        }
    }

    /// dnum slices (b_j, a_j) with b_j = a_j·s + e_j + [q_i ∈ Q_j]·P·s'.
    fn gen_evk(&self, secret: &SecretKey, target: &RnsPolynomial, rng: &mut ChaCha20Rng) -> EvaluationKey {
        let n = self.degree();
        let full = self.full_moduli();
        let basis = self.basis();
        let p_mod_q = self.key_switch_context().p_mod_q();
        let slices = (0..basis.dnum())
            .map(|j| {
                let a = sample_uniform(rng, n, &full);
                let e = self.ntt_poly_signed(&sample_gaussian(rng, n), &full);
                let mut b = a.mul(&secret.s).add(&e);
                for i in basis.factor(j) {
                    let q = full[i];
                    let pm = p_mod_q[i];
                    for (x, &t) in b.limbs_mut()[i].iter_mut().zip(target.limb(i)) {
                        *x = q.add(*x, q.mul(pm, t));
                    }
                }
                (b, a)
            })
            .collect();
        EvaluationKey { slices }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CkksInstance;

    #[test]
    fn gaussian_statistics() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let samples: Vec<i64> = (0..1000).flat_map(|_| sample_gaussian(&mut rng, 64)).collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<i64>() as f64 / n;
        let var = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05, "mean {mean}");
        // rounding adds 1/12 to the variance
        assert!((var.sqrt() - (ERROR_STDDEV.powi(2) + 1.0 / 12.0).sqrt()).abs() < 0.05);
    }

    #[test]
    fn keygen_is_deterministic() {
        let ctx = CkksContext::new(&CkksInstance::toy(8, 3, 2)).unwrap();
        let k1 = ctx.keygen(42, &[1]);
        let k2 = ctx.keygen(42, &[1]);
        assert_eq!(k1.secret, k2.secret);
        assert_eq!(k1.mult, k2.mult);
        assert_eq!(k1.rot, k2.rot);
        assert_ne!(ctx.keygen(43, &[]).secret, k1.secret);
        assert!(k1.secret.coeffs.iter().all(|c| c.abs() <= 1));
        assert_eq!(k1.mult.slices.len(), 2);
        assert!(k1.mult.slices.iter().all(|(b, _)| b.limb_count() == 4 + 2));
    }
}
