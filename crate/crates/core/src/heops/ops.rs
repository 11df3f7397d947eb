//! Encoding, encryption and homomorphic operations.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;

use crate::arith::{Modulus, PrimeModulus};
use crate::rns::{Ciphertext, Domain, EvaluationKey, Plaintext, PublicKey, RnsBasis, RnsPolynomial, SecretKey};
use crate::transform::automorphism_coeff;

use super::keys::{sample_gaussian, sample_ternary, sample_uniform, KeySet};
use super::{bconv_partial, BConvTable, CkksContext, HeError, SCALE_TOLERANCE};

fn check_level(a: usize, b: usize) -> Result<(), HeError> {
    if a == b {
        Ok(())
    } else {
        Err(HeError::LevelMismatch(a, b))
    }
}

fn check_scale(a: f64, b: f64) -> Result<(), HeError> {
    if (a - b).abs() <= SCALE_TOLERANCE * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(HeError::ScaleMismatch(a, b))
    }
}

/// Centered CRT lift of every coefficient to f64.
fn crt_lift(poly: &RnsPolynomial) -> Vec<f64> {
    let moduli = poly.moduli();
    if moduli.len() == 1 {
        let q = moduli[0];
        return poly.limb(0).iter().map(|&x| q.center(x) as f64).collect();
    }
    let big_q = RnsBasis::product(moduli);
    let half = &big_q >> 1;
    let parts: Vec<(BigUint, u64)> = moduli
        .iter()
        .map(|q| {
            let qi = &big_q / q.value();
            let r = (&qi % q.value()).to_u64().unwrap();
            (qi, q.inv(r).unwrap())
        })
        .collect();
    (0..poly.degree())
        .map(|c| {
            let mut x = BigUint::from(0u32);
            for (i, (qi, inv)) in parts.iter().enumerate() {
                x += qi * moduli[i].mul(poly.limb(i)[c], *inv);
            }
            x %= &big_q;
            if x > half {
                -(&big_q - x).to_f64().unwrap()
            } else {
                x.to_f64().unwrap()
            }
        })
        .collect()
}

/// (x - y)·P^{-1} + d computed step by step.
pub fn ssa_unfused(q: &Modulus, p_inv: u64, x: u64, y: u64, d: u64) -> u64 {
    q.add(q.mul(q.sub(x, y), p_inv), d)
}

impl CkksContext {
    pub fn encode(&self, values: &[Complex64], level: usize, scale: f64) -> Result<Plaintext, HeError> {
        if values.len() > self.slots() {
            return Err(HeError::TooManySlots);
        }
        let moduli = self.basis().level_primes(level);
        let bound = (RnsBasis::product(moduli).to_f64().unwrap_or(f64::INFINITY) / 2.0).min(2f64.powi(62));
        let coeffs = self.encoder().embed(values, scale);
        if coeffs.iter().any(|c| !c.is_finite() || c.abs() >= bound) {
            return Err(HeError::ScaleOverflow);
        }
        let ints: Vec<i64> = coeffs.iter().map(|c| c.round() as i64).collect();
        Ok(Plaintext {
            m: self.ntt_poly_signed(&ints, moduli),
            level,
            scale,
        })
    }

    pub fn encode_real(&self, values: &[f64], level: usize, scale: f64) -> Result<Plaintext, HeError> {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.encode(&v, level, scale)
    }

    pub fn decode(&self, pt: &Plaintext) -> Vec<Complex64> {
        let mut m = pt.m.clone();
        m.to_coeff(self.basis());
        self.encoder().project(&crt_lift(&m), pt.scale)
    }

    fn secret_at(&self, sk: &SecretKey, level: usize) -> RnsPolynomial {
        sk.s.select(0..=level)
    }

    pub fn encrypt_sk(&self, pt: &Plaintext, sk: &SecretKey, rng: &mut impl Rng) -> Ciphertext {
        let moduli = self.basis().level_primes(pt.level);
        let a = sample_uniform(rng, self.degree(), moduli);
        let e = self.ntt_poly_signed(&sample_gaussian(rng, self.degree()), moduli);
        let b = a.mul(&self.secret_at(sk, pt.level)).add(&pt.m).add(&e);
        Ciphertext {
            b,
            a,
            level: pt.level,
            scale: pt.scale,
        }
    }

    pub fn encrypt_pk(&self, pt: &Plaintext, pk: &PublicKey, rng: &mut impl Rng) -> Ciphertext {
        let moduli = self.basis().level_primes(pt.level);
        let n = self.degree();
        let v = self.ntt_poly_signed(&sample_ternary(rng, n), moduli);
        let e0 = self.ntt_poly_signed(&sample_gaussian(rng, n), moduli);
        let e1 = self.ntt_poly_signed(&sample_gaussian(rng, n), moduli);
        let pb = pk.b.select(0..=pt.level);
        let pa = pk.a.select(0..=pt.level);
        Ciphertext {
            b: v.mul(&pb).add(&pt.m).add(&e0),
            a: v.mul(&pa).add(&e1),
            level: pt.level,
            scale: pt.scale,
        }
    }

    pub fn decrypt(&self, ct: &Ciphertext, sk: &SecretKey) -> Plaintext {
        let m = ct.b.sub(&ct.a.mul(&self.secret_at(sk, ct.level)));
        Plaintext {
            m,
            level: ct.level,
            scale: ct.scale,
        }
    }

    pub fn hadd(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext, HeError> {
        check_level(x.level, y.level)?;
        check_scale(x.scale, y.scale)?;
        Ok(Ciphertext {
            b: x.b.add(&y.b),
            a: x.a.add(&y.a),
            level: x.level,
            scale: x.scale,
        })
    }

    /// (b0·b1, a0·b1 + a1·b0, a0·a1).
    pub fn tensor_product(
        &self,
        x: &Ciphertext,
        y: &Ciphertext,
    ) -> Result<(RnsPolynomial, RnsPolynomial, RnsPolynomial), HeError> {
        check_level(x.level, y.level)?;
        let d0 = x.b.mul(&y.b);
        let d1 = x.a.mul(&y.b).add(&y.a.mul(&x.b));
        let d2 = x.a.mul(&y.a);
        Ok((d0, d1, d2))
    }

    /// Fast base conversion of a coefficient-domain polynomial.
    pub fn bconv(&self, poly: &RnsPolynomial, target: &[PrimeModulus]) -> Result<RnsPolynomial, HeError> {
        if poly.domain() != Domain::Coefficient {
            return Err(HeError::DomainError);
        }
        let src: Vec<Modulus> = poly.moduli().iter().map(|q| q.modulus()).collect();
        let dst: Vec<Modulus> = target.iter().map(|q| q.modulus()).collect();
        let table = BConvTable::new(&src, &dst);
        let input: Vec<&[u64]> = poly.limbs().iter().map(Vec::as_slice).collect();
        Ok(RnsPolynomial::from_limbs(target, table.convert(&input), Domain::Coefficient))
    }

    /// C_ℓ ∪ B: data primes up to ℓ, then the special primes.
    fn extended_moduli(&self, level: usize) -> Vec<PrimeModulus> {
        let b = self.basis();
        b.level_primes(level).iter().chain(b.special_primes()).copied().collect()
    }

    fn evk_limbs_at(&self, evk_poly: &RnsPolynomial, level: usize) -> RnsPolynomial {
        let l = self.max_level();
        let k = self.basis().k();
        evk_poly.select((0..=level).chain(l + 1..l + 1 + k))
    }

    /// ModUp of every active slice and the inner product with the evk, over C_ℓ ∪ B.
    fn modup_inner_product(
        &self,
        d2: &RnsPolynomial,
        level: usize,
        evk: &EvaluationKey,
    ) -> Result<(RnsPolynomial, RnsPolynomial), HeError> {
        if d2.domain() != Domain::Ntt {
            return Err(HeError::DomainError);
        }
        check_level(d2.limb_count(), level + 1)?;
        let basis = self.basis();
        let ext = self.extended_moduli(level);
        let n = self.degree();
        let mut coeff = d2.clone();
        coeff.to_coeff(basis);
        let mut acc0 = RnsPolynomial::zero(n, &ext, Domain::Ntt);
        let mut acc1 = RnsPolynomial::zero(n, &ext, Domain::Ntt);
        for j in 0..basis.active_factors(level) {
            let own: Vec<usize> = basis.factor(j).filter(|&i| i <= level).collect();
            let src: Vec<&[u64]> = own.iter().map(|&i| coeff.limb(i)).collect();
            let converted = bconv_partial(self.key_switch_context().modup_table(level, j), &src, self.l_sub)?;
            let mut converted = converted.into_iter();
            let limbs: Vec<Vec<u64>> = ext
                .iter()
                .enumerate()
                .map(|(pos, q)| {
                    if own.contains(&pos) {
                        d2.limb(pos).to_vec()
                    } else {
                        let mut v = converted.next().expect("one converted limb per target");
                        crate::transform::ntt_inplace(&mut v, basis.table(q));
                        v
                    }
                })
                .collect();
            let dj = RnsPolynomial::from_limbs(&ext, limbs, Domain::Ntt);
            let (b, a) = &evk.slices[j];
            acc0 = acc0.add(&dj.mul(&self.evk_limbs_at(b, level)));
            acc1 = acc1.add(&dj.mul(&self.evk_limbs_at(a, level)));
        }
        Ok((acc0, acc1))
    }

    /// ModDown of an extended accumulator fused with the SSA addition of `addend`.
    fn mod_down(&self, acc: &RnsPolynomial, level: usize, addend: Option<&RnsPolynomial>) -> Result<RnsPolynomial, HeError> {
        let basis = self.basis();
        let mut p_part = acc.select(level + 1..acc.limb_count());
        p_part.to_coeff(basis);
        let src: Vec<&[u64]> = p_part.limbs().iter().map(Vec::as_slice).collect();
        let converted = bconv_partial(self.key_switch_context().moddown_table(level), &src, self.l_sub)?;
        let moduli = basis.level_primes(level);
        let limbs = converted
            .into_iter()
            .zip(moduli)
            .map(|(mut v, q)| {
                crate::transform::ntt_inplace(&mut v, basis.table(q));
                v
            })
            .collect();
        let conv = RnsPolynomial::from_limbs(moduli, limbs, Domain::Ntt);
        let d2_q = acc.select(0..=level);
        let zero;
        let d1 = match addend {
            Some(d) => d,
            None => {
                zero = RnsPolynomial::zero(self.degree(), moduli, Domain::Ntt);
                &zero
            }
        };
        Ok(self.ssa(&d2_q, &conv, d1))
    }

    /// d2_q·P^{-1} + conv·(-P^{-1}) + d1 as one 4-term multiply-accumulate.
    pub fn ssa(&self, d2_q: &RnsPolynomial, conv: &RnsPolynomial, d1: &RnsPolynomial) -> RnsPolynomial {
        let p_inv = self.key_switch_context().p_inv_mod_q();
        let moduli = d2_q.moduli();
        let limbs = moduli
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let pi = p_inv[i];
                let neg_pi = q.neg(pi);
                d2_q.limb(i)
                    .iter()
                    .zip(conv.limb(i))
                    .zip(d1.limb(i))
                    .map(|((&x, &y), &d)| {
                        let s = x as u128 * pi as u128 + y as u128 * neg_pi as u128 + d as u128;
                        q.reduce_u128(s)
                    })
                    .collect()
            })
            .collect();
        RnsPolynomial::from_limbs(moduli, limbs, Domain::Ntt)
    }

    /// P^{-1}·(d2 · evk), returned as a pair on C_ℓ.
    pub fn key_switch(
        &self,
        d2: &RnsPolynomial,
        evk: &EvaluationKey,
    ) -> Result<(RnsPolynomial, RnsPolynomial), HeError> {
        let level = d2.limb_count() - 1;
        let (acc0, acc1) = self.modup_inner_product(d2, level, evk)?;
        Ok((self.mod_down(&acc0, level, None)?, self.mod_down(&acc1, level, None)?))
    }

    pub fn hmult(&self, x: &Ciphertext, y: &Ciphertext, evk: &EvaluationKey) -> Result<Ciphertext, HeError> {
        check_level(x.level, y.level)?;
        if x.level == 0 {
            return Err(HeError::LevelExhausted);
        }
        let (d0, d1, d2) = self.tensor_product(x, y)?;
        let (acc0, acc1) = self.modup_inner_product(&d2, x.level, evk)?;
        Ok(Ciphertext {
            b: self.mod_down(&acc0, x.level, Some(&d0))?,
            a: self.mod_down(&acc1, x.level, Some(&d1))?,
            level: x.level,
            scale: x.scale * y.scale,
        })
    }

    fn automorphism(&self, poly: &RnsPolynomial, r: usize) -> RnsPolynomial {
        let mut p = poly.clone();
        p.to_coeff(self.basis());
        let limbs = p
            .limbs()
            .iter()
            .zip(p.moduli())
            .map(|(l, q)| automorphism_coeff(l, r, q))
            .collect();
        let mut out = RnsPolynomial::from_limbs(p.moduli(), limbs, Domain::Coefficient);
        out.to_ntt(self.basis());
        out
    }

    /// Rotates slots left by r using the rotation key for r.
    pub fn hrot_with_key(&self, ct: &Ciphertext, r: usize, evk: &EvaluationKey) -> Result<Ciphertext, HeError> {
        let b = self.automorphism(&ct.b, r);
        let a = self.automorphism(&ct.a, r);
        let (acc0, acc1) = self.modup_inner_product(&a, ct.level, evk)?;
        Ok(Ciphertext {
            b: self.mod_down(&acc0, ct.level, Some(&b))?,
            a: self.mod_down(&acc1, ct.level, None)?,
            level: ct.level,
            scale: ct.scale,
        })
    }

    pub fn hrot(&self, ct: &Ciphertext, r: usize, keys: &KeySet) -> Result<Ciphertext, HeError> {
        let evk = keys.rotation_key(r).ok_or(HeError::MissingEvk(r))?;
        self.hrot_with_key(ct, r, evk)
    }

    /// Divides by q_ℓ with rounding and drops the last limb.
    pub fn hrescale(&self, ct: &Ciphertext) -> Result<Ciphertext, HeError> {
        if ct.level == 0 {
            return Err(HeError::LevelExhausted);
        }
        let q_last = self.basis().data_primes()[ct.level];
        Ok(Ciphertext {
            b: self.rescale_poly(&ct.b),
            a: self.rescale_poly(&ct.a),
            level: ct.level - 1,
            scale: ct.scale / q_last.value() as f64,
        })
    }

    fn rescale_poly(&self, poly: &RnsPolynomial) -> RnsPolynomial {
        let basis = self.basis();
        let mut p = poly.clone();
        let (q_last, mut last) = p.pop_limb().expect("at least two limbs");
        crate::transform::intt_inplace(&mut last, basis.table(&q_last));
        let centered: Vec<i64> = last.iter().map(|&x| q_last.center(x)).collect();
        let moduli = p.moduli().to_vec();
        for (limb, q) in p.limbs_mut().iter_mut().zip(&moduli) {
            let mut r: Vec<u64> = centered.iter().map(|&c| q.from_i64(c)).collect();
            crate::transform::ntt_inplace(&mut r, basis.table(q));
            let inv = q.inv(q_last.value() % q.value()).expect("distinct primes");
            for (x, y) in limb.iter_mut().zip(&r) {
                *x = q.mul(q.sub(*x, *y), inv);
            }
        }
        p
    }

    /// Adds the constant c to every slot.
    pub fn cadd(&self, ct: &Ciphertext, c: f64) -> Ciphertext {
        let v = (c * ct.scale).round() as i64;
        let mut b = ct.b.clone();
        let moduli = b.moduli().to_vec();
        for (limb, q) in b.limbs_mut().iter_mut().zip(&moduli) {
            let r = q.from_i64(v);
            for x in limb.iter_mut() {
                *x = q.add(*x, r);
            }
        }
        Ciphertext { b, ..ct.clone() }
    }

    /// Multiplies by an integer constant; the scale is unchanged.
    pub fn cmult(&self, ct: &Ciphertext, c: i64) -> Ciphertext {
        let scalars: Vec<u64> = ct.b.moduli().iter().map(|q| q.from_i64(c)).collect();
        Ciphertext {
            b: ct.b.mul_scalars(&scalars),
            a: ct.a.mul_scalars(&scalars),
            ..ct.clone()
        }
    }

    /// Multiplies by round(c·scale); the ciphertext scale grows by `scale`.
    pub fn cmult_scaled(&self, ct: &Ciphertext, c: f64, scale: f64) -> Ciphertext {
        let mut out = self.cmult(ct, (c * scale).round() as i64);
        out.scale *= scale;
        out
    }

    fn plaintext_at(&self, pt: &Plaintext, level: usize) -> Result<RnsPolynomial, HeError> {
        if pt.level < level {
            return Err(HeError::LevelMismatch(pt.level, level));
        }
        Ok(pt.m.select(0..=level))
    }

    pub fn padd(&self, ct: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext, HeError> {
        check_scale(ct.scale, pt.scale)?;
        let m = self.plaintext_at(pt, ct.level)?;
        Ok(Ciphertext {
            b: ct.b.add(&m),
            ..ct.clone()
        })
    }

    pub fn pmult(&self, ct: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext, HeError> {
        let m = self.plaintext_at(pt, ct.level)?;
        Ok(Ciphertext {
            b: ct.b.mul(&m),
            a: ct.a.mul(&m),
            level: ct.level,
            scale: ct.scale * pt.scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CkksInstance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(log_n: u32, l: usize, dnum: usize) -> (CkksContext, KeySet, ChaCha20Rng) {
        let ctx = CkksContext::new(&CkksInstance::toy(log_n, l, dnum)).unwrap();
        let keys = ctx.keygen(1, &[0, 1, 3]);
        (ctx, keys, ChaCha20Rng::seed_from_u64(2))
    }

    fn random_values(rng: &mut ChaCha20Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn encode_round_trip_and_zero() {
        let (ctx, _, mut rng) = setup(12, 2, 1);
        let v = random_values(&mut rng, ctx.slots());
        let pt = ctx.encode(&v, 2, 2f64.powi(40)).unwrap();
        assert!(max_err(&ctx.decode(&pt), &v) < 2f64.powi(-20));
        let zero = ctx.encode(&[], 2, 2f64.powi(40)).unwrap();
        assert!(zero.m.is_zero());
        let w = random_values(&mut rng, ctx.slots());
        let sum = Plaintext {
            m: pt.m.add(&ctx.encode(&w, 2, 2f64.powi(40)).unwrap().m),
            ..pt.clone()
        };
        let expect: Vec<_> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        assert!(max_err(&ctx.decode(&sum), &expect) < 2f64.powi(-20));
        assert!(matches!(
            ctx.encode(&vec![Complex64::new(1.0, 0.0); ctx.slots()], 0, 2f64.powi(60)),
            Err(HeError::ScaleOverflow)
        ));
    }

    #[test]
    fn encrypt_paths() {
        let (ctx, keys, mut rng) = setup(10, 2, 1);
        let v = random_values(&mut rng, 8);
        let pt = ctx.encode(&v, 2, ctx.default_scale()).unwrap();
        for ct in [
            ctx.encrypt_sk(&pt, &keys.secret, &mut rng),
            ctx.encrypt_pk(&pt, &keys.public, &mut rng),
        ] {
            let out = ctx.decode(&ctx.decrypt(&ct, &keys.secret));
            assert!(max_err(&out[..8], &v) < 1e-6);
        }
    }

    #[test]
    fn hadd_commutes() {
        let (ctx, keys, mut rng) = setup(10, 2, 1);
        let x = ctx.encrypt_sk(&ctx.encode(&random_values(&mut rng, 4), 2, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
        let y = ctx.encrypt_sk(&ctx.encode(&random_values(&mut rng, 4), 2, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
        assert_eq!(ctx.hadd(&x, &y).unwrap(), ctx.hadd(&y, &x).unwrap());
        let z = drop_one(&y);
        assert!(matches!(ctx.hadd(&x, &z), Err(HeError::LevelMismatch(2, 1))));
        let mut w = y.clone();
        w.scale *= 2.0;
        assert!(matches!(ctx.hadd(&x, &w), Err(HeError::ScaleMismatch(..))));
    }

    fn drop_one(ct: &Ciphertext) -> Ciphertext {
        crate::rns::drop_last_limb(ct).unwrap()
    }

    #[test]
    fn ssa_fused_matches_unfused() {
        let (ctx, _, mut rng) = setup(8, 2, 1);
        let moduli = ctx.basis().level_primes(2).to_vec();
        let n = ctx.degree();
        let x = sample_uniform(&mut rng, n, &moduli);
        let y = sample_uniform(&mut rng, n, &moduli);
        let d = sample_uniform(&mut rng, n, &moduli);
        let fused = ctx.ssa(&x, &y, &d);
        let p_inv = ctx.key_switch_context().p_inv_mod_q();
        for (i, q) in moduli.iter().enumerate() {
            for c in 0..n {
                let e = ssa_unfused(q, p_inv[i], x.limb(i)[c], y.limb(i)[c], d.limb(i)[c]);
                assert_eq!(fused.limb(i)[c], e);
            }
        }
        let zero = RnsPolynomial::zero(n, &moduli, Domain::Ntt);
        assert_eq!(ctx.ssa(&zero, &zero, &d), d);
        assert_eq!(ctx.ssa(&x, &x, &zero), zero);
    }

    #[test]
    fn hmult_and_levels() {
        for (l, dnum) in [(4, 1), (5, 3)] {
            let (ctx, keys, mut rng) = setup(10, l, dnum);
            let twos = vec![Complex64::new(2.0, 0.0); ctx.slots()];
            let threes = vec![Complex64::new(3.0, 0.0); ctx.slots()];
            let x = ctx.encrypt_sk(&ctx.encode(&twos, l, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
            let y = ctx.encrypt_sk(&ctx.encode(&threes, l, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
            let z = ctx.hrescale(&ctx.hmult(&x, &y, &keys.mult).unwrap()).unwrap();
            assert_eq!(z.level, l - 1);
            assert!((z.scale / ctx.default_scale() - 1.0).abs() < 1e-3);
            let out = ctx.decode(&ctx.decrypt(&z, &keys.secret));
            assert!(out.iter().all(|v| (v - Complex64::new(6.0, 0.0)).norm() < 6.0 * 2f64.powi(-10)));

            let ones = vec![Complex64::new(1.0, 0.0); ctx.slots()];
            let mut ct = ctx.encrypt_sk(&ctx.encode(&ones, l, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
            for _ in 0..l {
                ct = ctx.hrescale(&ctx.hmult(&ct, &ct, &keys.mult).unwrap()).unwrap();
            }
            assert_eq!(ct.level, 0);
            assert!(matches!(ctx.hmult(&ct, &ct, &keys.mult), Err(HeError::LevelExhausted)));
            assert!(matches!(ctx.hrescale(&ct), Err(HeError::LevelExhausted)));
        }
    }

    #[test]
    fn key_switch_output_is_on_data_base() {
        let (ctx, keys, mut rng) = setup(8, 3, 2);
        let d2 = sample_uniform(&mut rng, ctx.degree(), ctx.basis().level_primes(3));
        let (c0, c1) = ctx.key_switch(&d2, &keys.mult).unwrap();
        assert_eq!(c0.moduli(), ctx.basis().level_primes(3));
        assert_eq!(c1.limb_count(), 4);
    }

    #[test]
    fn rotation() {
        let (ctx, keys, mut rng) = setup(10, 2, 1);
        let v = random_values(&mut rng, ctx.slots());
        let ct = ctx.encrypt_sk(&ctx.encode(&v, 2, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
        for r in [0usize, 1, 3] {
            let out = ctx.decode(&ctx.decrypt(&ctx.hrot(&ct, r, &keys).unwrap(), &keys.secret));
            let expect: Vec<_> = (0..v.len()).map(|i| v[(i + r) % v.len()]).collect();
            assert!(max_err(&out, &expect) < 1e-5, "r = {r}");
        }
        assert!(matches!(ctx.hrot(&ct, 2, &keys), Err(HeError::MissingEvk(2))));
    }

    #[test]
    fn scalar_ops() {
        let (ctx, keys, mut rng) = setup(10, 2, 1);
        let v = random_values(&mut rng, ctx.slots());
        let ct = ctx.encrypt_sk(&ctx.encode(&v, 2, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
        assert_eq!(ctx.cadd(&ct, 0.0), ct);
        assert_eq!(ctx.cmult(&ct, 1), ct);
        let out = ctx.decode(&ctx.decrypt(&ctx.cadd(&ct, 0.5), &keys.secret));
        let expect: Vec<_> = v.iter().map(|x| x + 0.5).collect();
        assert!(max_err(&out, &expect) < 1e-6);
        let out = ctx.decode(&ctx.decrypt(&ctx.cmult(&ct, -3), &keys.secret));
        let expect: Vec<_> = v.iter().map(|x| x * -3.0).collect();
        assert!(max_err(&out, &expect) < 1e-6);
        let w = random_values(&mut rng, ctx.slots());
        let pw = ctx.encode(&w, 2, ctx.default_scale()).unwrap();
        let out = ctx.decode(&ctx.decrypt(&ctx.padd(&ct, &pw).unwrap(), &keys.secret));
        let expect: Vec<_> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        assert!(max_err(&out, &expect) < 1e-6);
        let prod = ctx.hrescale(&ctx.pmult(&ct, &pw).unwrap()).unwrap();
        let out = ctx.decode(&ctx.decrypt(&prod, &keys.secret));
        let expect: Vec<_> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
        assert!(max_err(&out, &expect) < 1e-5);
        let cs = ctx.hrescale(&ctx.cmult_scaled(&ct, 0.25, ctx.default_scale())).unwrap();
        let out = ctx.decode(&ctx.decrypt(&cs, &keys.secret));
        let expect: Vec<_> = v.iter().map(|x| x * 0.25).collect();
        assert!(max_err(&out, &expect) < 1e-5);
    }

    #[test]
    fn bconv_rejects_ntt_domain() {
        let (ctx, _, mut rng) = setup(8, 2, 1);
        let p = sample_uniform(&mut rng, ctx.degree(), ctx.basis().level_primes(1));
        assert!(matches!(ctx.bconv(&p, ctx.basis().special_primes()), Err(HeError::DomainError)));
    }
}
