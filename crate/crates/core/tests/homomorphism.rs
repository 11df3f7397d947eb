use bts_core::heops::{CkksContext, KeySet};
use bts_core::params::CkksInstance;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const MESSAGES: usize = 100;
const ROT: usize = 5;

fn setup() -> (CkksContext, KeySet) {
    let ctx = CkksContext::new(&CkksInstance::toy(12, 4, 1)).unwrap();
    let keys = ctx.keygen(7, &[ROT]);
    (ctx, keys)
}

fn message(rng: &mut ChaCha20Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(0.5..=1.0), rng.gen_range(0.5..=1.0)))
        .collect()
}

fn rel_err(got: &[Complex64], want: &[Complex64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).norm() / w.norm())
        .fold(0.0, f64::max)
}

const BOUND: f64 = 1.0 / 1024.0;

#[test]
fn every_primitive_matches_plaintext_oracle() {
    let (ctx, keys) = setup();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let slots = ctx.slots();
    let level = ctx.max_level();
    let scale = ctx.default_scale();
    let mut worst = [0.0f64; 5];
    for _ in 0..MESSAGES {
        let u = message(&mut rng, slots);
        let v = message(&mut rng, slots);
        let pu = ctx.encode(&u, level, scale).unwrap();
        let pv = ctx.encode(&v, level, scale).unwrap();
        let cu = ctx.encrypt_pk(&pu, &keys.public, &mut rng);
        let cv = ctx.encrypt_sk(&pv, &keys.secret, &mut rng);
        let dec = |ct: &bts_core::rns::Ciphertext| ctx.decode(&ctx.decrypt(ct, &keys.secret));

        worst[0] = worst[0].max(rel_err(&dec(&cu), &u));

        let sum: Vec<_> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        worst[1] = worst[1].max(rel_err(&dec(&ctx.hadd(&cu, &cv).unwrap()), &sum));

        let prod: Vec<_> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        let m = ctx.hrescale(&ctx.hmult(&cu, &cv, &keys.mult).unwrap()).unwrap();
        worst[2] = worst[2].max(rel_err(&dec(&m), &prod));

        let rot: Vec<_> = (0..slots).map(|i| u[(i + ROT) % slots]).collect();
        worst[3] = worst[3].max(rel_err(&dec(&ctx.hrot(&cu, ROT, &keys).unwrap()), &rot));

        let p = ctx.hrescale(&ctx.pmult(&cu, &pv).unwrap()).unwrap();
        worst[4] = worst[4].max(rel_err(&dec(&p), &prod));
    }
    for (name, e) in ["decrypt", "hadd", "hmult", "hrot", "pmult"].iter().zip(worst) {
        assert!(e < BOUND, "{name}: {e}");
    }
}

#[test]
fn dnum_does_not_change_results() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for dnum in [1, 2, 3] {
        let ctx = CkksContext::new(&CkksInstance::toy(10, 5, dnum)).unwrap();
        let keys = ctx.keygen(1, &[1]);
        let u = message(&mut rng, ctx.slots());
        let ct = ctx.encrypt_sk(&ctx.encode(&u, 5, ctx.default_scale()).unwrap(), &keys.secret, &mut rng);
        let sq = ctx.hrescale(&ctx.hmult(&ct, &ct, &keys.mult).unwrap()).unwrap();
        let sq = ctx.hrescale(&ctx.hmult(&sq, &sq, &keys.mult).unwrap()).unwrap();
        let want: Vec<_> = u.iter().map(|x| x.powi(4)).collect();
        let got = ctx.decode(&ctx.decrypt(&sq, &keys.secret));
        assert!(rel_err(&got, &want) < BOUND, "dnum {dnum}");
        let r = ctx.hrot(&sq, 1, &keys).unwrap();
        let got = ctx.decode(&ctx.decrypt(&r, &keys.secret));
        let want: Vec<_> = (0..want.len()).map(|i| want[(i + 1) % want.len()]).collect();
        assert!(rel_err(&got, &want) < BOUND, "dnum {dnum}");
    }
}

#[test]
fn l_sub_does_not_change_key_switch() {
    let base = CkksContext::new(&CkksInstance::toy(8, 5, 2)).unwrap();
    let keys = base.keygen(9, &[]);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let u = message(&mut rng, base.slots());
    let ct = base.encrypt_sk(&base.encode(&u, 5, base.default_scale()).unwrap(), &keys.secret, &mut rng);
    let reference = base.hmult(&ct, &ct, &keys.mult).unwrap();
    for l_sub in [1, 2, 3, 64] {
        let ctx = base.clone().with_l_sub(l_sub);
        assert_eq!(ctx.hmult(&ct, &ct, &keys.mult).unwrap(), reference);
    }
}
