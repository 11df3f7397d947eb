//! Word-sized modular arithmetic, NTT-friendly primes and twiddle tables.

use std::collections::BTreeSet;
use std::ops::Deref;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("no NTT-friendly prime of {bits} bits for N = {degree}")]
    NotFound { bits: u32, degree: usize },
    #[error("invalid modulus {0}")]
    InvalidModulus(u64),
    #[error("{q} is not congruent to 1 mod 2N for N = {degree}")]
    NotNttFriendly { q: u64, degree: usize },
    #[error("degree {0} is not a power of two")]
    InvalidDegree(usize),
}

/// An odd modulus below 2^61 with a precomputed Barrett constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulus {
    value: u64,
    barrett: u128,
}

/// Largest modulus supported by the reduction routines.
pub const MAX_MODULUS_BITS: u32 = 61;

impl Modulus {
    pub fn new(value: u64) -> Result<Self, ArithError> {
        if value < 2 || value >> MAX_MODULUS_BITS != 0 {
            return Err(ArithError::InvalidModulus(value));
        }
        Ok(Self {
            value,
            // floor(2^128 / q); q is never a power of two above 2
            barrett: u128::MAX / value as u128,
        })
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn barrett_const(&self) -> u128 {
        self.barrett
    }

    /// Reduces any 128-bit value.
    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        let (x0, x1) = (x as u64, (x >> 64) as u64);
        let (m0, m1) = (self.barrett as u64, (self.barrett >> 64) as u64);
        let t0 = x0 as u128 * m0 as u128;
        let t1 = x0 as u128 * m1 as u128;
        let t2 = x1 as u128 * m0 as u128;
        let t3 = x1 as u128 * m1 as u128;
        let mid = (t0 >> 64) + (t1 as u64 as u128) + (t2 as u64 as u128);
        let hi = t3 + (t1 >> 64) + (t2 >> 64) + (mid >> 64);
        // only the low word of the quotient matters: the remainder is < 3q
        let mut r = x0.wrapping_sub((hi as u64).wrapping_mul(self.value));
        while r >= self.value {
            r -= self.value;
        }
        r
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if x < self.value {
            x
        } else {
            self.reduce_u128(x as u128)
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.value && b < self.value);
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.value && b < self.value);
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        debug_assert!(a < self.value);
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.value && b < self.value);
        self.reduce_u128(a as u128 * b as u128)
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = self.reduce(a);
        let mut acc = 1 % self.value;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Inverse through Fermat; the modulus must be prime and `a` nonzero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = self.reduce(a);
        if a == 0 {
            return None;
        }
        let r = self.pow(a, self.value - 2);
        (self.mul(r, a) == 1).then_some(r)
    }

    /// Maps a signed integer into [0, q).
    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        let r = (x as i128).rem_euclid(self.value as i128);
        r as u64
    }

    /// Centered lift into (-q/2, q/2].
    #[inline]
    pub fn center(&self, x: u64) -> i64 {
        if x > self.value / 2 {
            x as i64 - self.value as i64
        } else {
            x as i64
        }
    }
}

/// An NTT-friendly prime q = 1 mod 2N together with a primitive 2N-th root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeModulus {
    modulus: Modulus,
    degree_n: usize,
    root_2n: u64,
}

impl Deref for PrimeModulus {
    type Target = Modulus;

    fn deref(&self) -> &Modulus {
        &self.modulus
    }
}

impl PrimeModulus {
    pub fn new(q: u64, degree_n: usize) -> Result<Self, ArithError> {
        if !degree_n.is_power_of_two() {
            return Err(ArithError::InvalidDegree(degree_n));
        }
        let modulus = Modulus::new(q)?;
        if !is_prime(q) {
            return Err(ArithError::InvalidModulus(q));
        }
        let two_n = 2 * degree_n as u64;
        if (q - 1) % two_n != 0 {
            return Err(ArithError::NotNttFriendly { q, degree: degree_n });
        }
        let root_2n = primitive_root_2n(&modulus, degree_n)
            .ok_or(ArithError::NotNttFriendly { q, degree: degree_n })?;
        Ok(Self {
            modulus,
            degree_n,
            root_2n,
        })
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree_n
    }

    #[inline]
    pub fn root_2n(&self) -> u64 {
        self.root_2n
    }

    pub fn bits(&self) -> u32 {
        64 - self.value().leading_zeros()
    }
}

fn primitive_root_2n(q: &Modulus, degree_n: usize) -> Option<u64> {
    let p = q.value();
    let exp = (p - 1) / (2 * degree_n as u64);
    let minus_one = p - 1;
    (2..p.min(1 << 20)).find_map(|g| {
        let x = q.pow(g, exp);
        // x has order exactly 2N iff x^N = -1
        (q.pow(x, degree_n as u64) == minus_one).then_some(x)
    })
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn powmod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod_u64(r, a, m);
        }
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in WITNESSES {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest prime below 2^bit_length that is 1 mod 2N and not excluded.
pub fn find_ntt_prime(
    bit_length: u32,
    degree_n: usize,
    exclude: &BTreeSet<u64>,
) -> Result<PrimeModulus, ArithError> {
    if !degree_n.is_power_of_two() {
        return Err(ArithError::InvalidDegree(degree_n));
    }
    let not_found = ArithError::NotFound {
        bits: bit_length,
        degree: degree_n,
    };
    if !(2..=MAX_MODULUS_BITS).contains(&bit_length) {
        return Err(not_found);
    }
    let two_n = 2 * degree_n as u64;
    let upper = 1u64 << bit_length;
    let lower = 1u64 << (bit_length - 1);
    if two_n >= upper {
        return Err(not_found);
    }
    let mut c = (upper - 1) / two_n * two_n + 1;
    if c >= upper {
        c -= two_n;
    }
    while c > lower {
        if !exclude.contains(&c) && is_prime(c) {
            return PrimeModulus::new(c, degree_n);
        }
        if c < two_n {
            break;
        }
        c -= two_n;
    }
    Err(not_found)
}

#[inline]
pub fn bit_reverse(i: usize, log_n: u32) -> usize {
    if log_n == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - log_n)
    }
}

/// Powers of ξ in bit-reversed order for the radix-2 negacyclic NTT.
#[derive(Debug, Clone)]
pub struct TwiddleTable {
    modulus: PrimeModulus,
    factors: Vec<u64>,
    inverse_factors: Vec<u64>,
    n_inverse: u64,
}

impl TwiddleTable {
    pub fn new(modulus: PrimeModulus) -> Self {
        let n = modulus.degree();
        let log_n = n.trailing_zeros();
        let psi = modulus.root_2n();
        let psi_inv = modulus.inv(psi).expect("root is invertible");
        let mut pows = Vec::with_capacity(n);
        let mut inv_pows = Vec::with_capacity(n);
        let (mut x, mut y) = (1u64, 1u64);
        for _ in 0..n {
            pows.push(x);
            inv_pows.push(y);
            x = modulus.mul(x, psi);
            y = modulus.mul(y, psi_inv);
        }
        let factors = (0..n).map(|i| pows[bit_reverse(i, log_n)]).collect();
        let inverse_factors = (0..n).map(|i| inv_pows[bit_reverse(i, log_n)]).collect();
        let n_inverse = modulus.inv(n as u64 % modulus.value()).expect("N invertible");
        Self {
            modulus,
            factors,
            inverse_factors,
            n_inverse,
        }
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn inverse_factors(&self) -> &[u64] {
        &self.inverse_factors
    }

    pub fn n_inverse(&self) -> u64 {
        self.n_inverse
    }

    /// Overwrites one forward factor; used by fault-injection self-tests.
    pub fn corrupt_factor(&mut self, index: usize, value: u64) {
        self.factors[index] = value % self.modulus.value();
    }
}

/// Default digit split of the on-the-fly twiddle tables.
pub const OT_DEFAULT_M: usize = 64;

/// Two small tables from which any ξ^k is composed with one multiplication.
#[derive(Debug, Clone)]
pub struct OtTables {
    modulus: PrimeModulus,
    m: usize,
    higher: Vec<u64>,
    lower: Vec<u64>,
}

impl OtTables {
    pub fn new(modulus: PrimeModulus, m: usize) -> Self {
        let n = modulus.degree();
        assert!(m.is_power_of_two() && m <= n, "digit split must be a power of two ≤ N");
        let xi = modulus.root_2n();
        let xi_m = modulus.pow(xi, m as u64);
        let mut higher = Vec::with_capacity(n / m);
        let mut x = 1;
        for _ in 0..n / m {
            higher.push(x);
            x = modulus.mul(x, xi_m);
        }
        let mut lower = Vec::with_capacity(m);
        let mut y = 1;
        for _ in 0..m {
            lower.push(y);
            y = modulus.mul(y, xi);
        }
        Self {
            modulus,
            m,
            higher,
            lower,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn higher(&self) -> &[u64] {
        &self.higher
    }

    pub fn lower(&self) -> &[u64] {
        &self.lower
    }

    pub fn stored_entries(&self) -> usize {
        self.higher.len() + self.lower.len()
    }

    /// ξ^k for any k; exponents are taken mod 2N and ξ^N = -1 folds the upper half.
    #[inline]
    pub fn compose(&self, k: usize) -> u64 {
        let n = self.modulus.degree();
        let k = k % (2 * n);
        let (k, negate) = if k >= n { (k - n, true) } else { (k, false) };
        let x = self.modulus.mul(self.higher[k / self.m], self.lower[k % self.m]);
        if negate {
            self.modulus.neg(x)
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q7() -> PrimeModulus {
        PrimeModulus::new(7, 1).unwrap()
    }

    #[test]
    fn small_cases() {
        let q = q7();
        assert_eq!(q.add(3, 5 % 7), 1);
        assert_eq!(q.mul(3, 5), 1);
        assert_eq!(q.add(4, 0), 4);
        assert_eq!(q.mul(6, 1), 6);
        let q17 = PrimeModulus::new(17, 4).unwrap();
        assert_eq!(q17.pow(2, 8), 1);
        assert_eq!(q17.pow(9, 0), 1);
    }

    #[test]
    fn exhaustive_mul_12289() {
        let q = PrimeModulus::new(12289, 2048).unwrap();
        for a in 0..12289u64 {
            for b in 0..12289u64 {
                assert_eq!(q.mul(a, b), a * b % 12289);
            }
        }
    }

    #[test]
    fn random_mul_against_u128_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set = BTreeSet::new();
        let moduli: Vec<_> = [40u32, 50, 60, 61]
            .iter()
            .map(|&b| find_ntt_prime(b, 1 << 12, &set).unwrap())
            .collect();
        for i in 0..1_000_000 {
            let q = &moduli[i % moduli.len()];
            let a = rng.gen_range(0..q.value());
            let b = rng.gen_range(0..q.value());
            let expected = (a as u128 * b as u128 % q.value() as u128) as u64;
            assert_eq!(q.mul(a, b), expected);
            assert_eq!(q.add(a, b), ((a as u128 + b as u128) % q.value() as u128) as u64);
        }
    }

    #[test]
    fn reduce_full_range() {
        let q = Modulus::new((1 << 61) - 1).unwrap();
        for x in [0u128, 1, u128::MAX, u128::MAX - 1, 1 << 127, (1 << 122) + 12345] {
            assert_eq!(q.reduce_u128(x) as u128, x % q.value() as u128);
        }
    }

    #[test]
    fn fermat_and_inverse() {
        let q = find_ntt_prime(50, 1 << 10, &BTreeSet::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = rng.gen_range(1..q.value());
            assert_eq!(q.pow(a, q.value() - 1), 1);
            assert_eq!(q.mul(a, q.inv(a).unwrap()), 1);
        }
        assert_eq!(q.inv(0), None);
    }

    #[test]
    fn miller_rabin_known_values() {
        let primes = [2u64, 3, 12289, 65537, 2305843009213693951, 18446744073709551557];
        let composites = [1u64, 4, 561, 3215031751, 3825123056546413051, 18446744073709551615];
        assert!(primes.iter().all(|&p| is_prime(p)));
        assert!(composites.iter().all(|&c| !is_prime(c)));
    }

    #[test]
    fn ntt_prime_search() {
        let q = find_ntt_prime(14, 2048, &BTreeSet::new()).unwrap();
        assert_eq!(q.value(), 12289);
        for bits in [40u32, 50, 60] {
            let n = 1 << 17;
            let q = find_ntt_prime(bits, n, &BTreeSet::new()).unwrap();
            assert_eq!(q.value() % (2 * n as u64), 1);
            assert!(is_prime(q.value()));
            assert_eq!(q.bits(), bits);
            assert_eq!(q.pow(q.root_2n(), 2 * n as u64), 1);
            assert_eq!(q.pow(q.root_2n(), n as u64), q.value() - 1);
            let excl: BTreeSet<u64> = [q.value()].into();
            let q2 = find_ntt_prime(bits, n, &excl).unwrap();
            assert!(q2.value() < q.value());
        }
        assert!(find_ntt_prime(5, 1 << 10, &BTreeSet::new()).is_err());
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(PrimeModulus::new(15, 1).is_err());
        assert!(PrimeModulus::new(13, 4).is_err());
        assert!(Modulus::new(1 << 62).is_err());
    }

    #[test]
    fn twiddle_table_shape() {
        let q = find_ntt_prime(40, 64, &BTreeSet::new()).unwrap();
        let t = TwiddleTable::new(q);
        assert_eq!(t.factors()[0], 1);
        for (f, g) in t.factors().iter().zip(t.inverse_factors()) {
            assert_eq!(q.mul(*f, *g), 1);
        }
        assert_eq!(q.mul(t.n_inverse(), 64), 1);
    }

    #[test]
    fn ot_compose_exhaustive() {
        for log_n in [4u32, 8, 12] {
            let n = 1usize << log_n;
            let q = find_ntt_prime(50, n, &BTreeSet::new()).unwrap();
            let m = OT_DEFAULT_M.min(n);
            let ot = OtTables::new(q, m);
            assert_eq!(ot.stored_entries(), n / m + m);
            let mut x = 1;
            for k in 0..2 * n {
                assert_eq!(ot.compose(k), x, "k = {k}");
                x = q.mul(x, q.root_2n());
            }
            assert_eq!(ot.compose(0), 1);
            if n > m {
                assert_eq!(ot.compose(m), ot.higher()[1]);
            }
        }
    }

    proptest! {
        #[test]
        fn sub_inverts_add(a in 0u64..(1 << 60), b in 0u64..(1 << 60)) {
            let q = Modulus::new((1u64 << 61) - 1).unwrap();
            prop_assert_eq!(q.sub(q.add(a, b), b), a);
            prop_assert_eq!(q.add(q.neg(a), a), 0);
        }
    }
}
