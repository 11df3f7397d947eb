//! RNS bases, residue-matrix polynomials, and ciphertext/key containers.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};
use std::ops::Range;

use num_bigint::BigUint;
use thiserror::Error;

use crate::arith::{find_ntt_prime, ArithError, PrimeModulus, TwiddleTable};
use crate::params::CkksInstance;
use crate::transform::{intt_inplace, ntt_inplace};

#[derive(Debug, Error)]
pub enum RnsError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("level exhausted")]
    LevelExhausted,
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Coefficient,
    Ntt,
}

/// Data primes q_0..q_L, special primes p_0..p_{k-1}, and the dnum factor layout.
#[derive(Debug, Clone)]
pub struct RnsBasis {
    degree_n: usize,
    data: Vec<PrimeModulus>,
    special: Vec<PrimeModulus>,
    dnum: usize,
    tables: BTreeMap<u64, TwiddleTable>,
}

impl RnsBasis {
    pub fn degree(&self) -> usize {
        self.degree_n
    }

    pub fn data_primes(&self) -> &[PrimeModulus] {
        &self.data
    }

    pub fn special_primes(&self) -> &[PrimeModulus] {
        &self.special
    }

    pub fn max_level(&self) -> usize {
        self.data.len() - 1
    }

    pub fn dnum(&self) -> usize {
        self.dnum
    }

    /// Primes per factor, α = (L+1)/dnum.
    pub fn alpha(&self) -> usize {
        self.data.len() / self.dnum
    }

    pub fn k(&self) -> usize {
        self.special.len()
    }

    /// Data-prime indices of factor Q_j.
    pub fn factor(&self, j: usize) -> Range<usize> {
        let a = self.alpha();
        j * a..(j + 1) * a
    }

    /// Factor indices that intersect C_ℓ.
    pub fn active_factors(&self, level: usize) -> usize {
        (level + 1).div_ceil(self.alpha())
    }

    /// Data primes q_0..q_ℓ.
    pub fn level_primes(&self, level: usize) -> &[PrimeModulus] {
        &self.data[..=level]
    }

    pub fn table(&self, q: &PrimeModulus) -> &TwiddleTable {
        &self.tables[&q.value()]
    }

    pub fn product(primes: &[PrimeModulus]) -> BigUint {
        primes
            .iter()
            .fold(BigUint::from(1u32), |acc, q| acc * q.value())
    }
}

/// Deterministic basis for an instance: q_0, then q_1..q_L, then the special primes.
pub fn build_basis(instance: &CkksInstance) -> Result<RnsBasis, RnsError> {
    instance
        .validate()
        .map_err(RnsError::InvalidInstance)?;
    let n = instance.n();
    let mut used = BTreeSet::new();
    let mut pick = |bits: u32| -> Result<PrimeModulus, RnsError> {
        let q = find_ntt_prime(bits, n, &used)?;
        used.insert(q.value());
        Ok(q)
    };
    let mut data = vec![pick(instance.log_q0_bits)?];
    for _ in 0..instance.max_level {
        data.push(pick(instance.log_q_bits)?);
    }
    let special = (0..instance.k())
        .map(|_| pick(instance.log_p_bits))
        .collect::<Result<Vec<_>, _>>()?;
    let tables = data
        .iter()
        .chain(&special)
        .map(|q| (q.value(), TwiddleTable::new(*q)))
        .collect();
    let basis = RnsBasis {
        degree_n: n,
        data,
        special,
        dnum: instance.dnum,
        tables,
    };
    let p = RnsBasis::product(&basis.special);
    for j in 0..basis.dnum {
        let qj = RnsBasis::product(&basis.data[basis.factor(j)]);
        if p < qj {
            return Err(RnsError::InvalidInstance(format!(
                "special modulus P ({} bits) is smaller than Q_{j} ({} bits)",
                p.bits(),
                qj.bits()
            )));
        }
    }
    Ok(basis)
}

/// A polynomial as one residue vector per modulus (limb-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RnsPolynomial {
    degree_n: usize,
    moduli: Vec<PrimeModulus>,
    limbs: Vec<Vec<u64>>,
    domain: Domain,
}

impl RnsPolynomial {
    pub fn zero(degree_n: usize, moduli: &[PrimeModulus], domain: Domain) -> Self {
        Self {
            degree_n,
            moduli: moduli.to_vec(),
            limbs: vec![vec![0; degree_n]; moduli.len()],
            domain,
        }
    }

    pub fn from_limbs(moduli: &[PrimeModulus], limbs: Vec<Vec<u64>>, domain: Domain) -> Self {
        assert_eq!(moduli.len(), limbs.len());
        let degree_n = limbs.first().map_or(0, Vec::len);
        debug_assert!(limbs
            .iter()
            .zip(moduli)
            .all(|(l, q)| l.len() == degree_n && l.iter().all(|&x| x < q.value())));
        Self {
            degree_n,
            moduli: moduli.to_vec(),
            limbs,
            domain,
        }
    }

    /// Reduces small signed coefficients into every limb.
    pub fn from_signed(coeffs: &[i64], moduli: &[PrimeModulus]) -> Self {
        let limbs = moduli
            .iter()
            .map(|q| coeffs.iter().map(|&c| q.from_i64(c)).collect())
            .collect();
        Self::from_limbs(moduli, limbs, Domain::Coefficient)
    }

    pub fn degree(&self) -> usize {
        self.degree_n
    }

    pub fn moduli(&self) -> &[PrimeModulus] {
        &self.moduli
    }

    pub fn limbs(&self) -> &[Vec<u64>] {
        &self.limbs
    }

    pub fn limbs_mut(&mut self) -> &mut [Vec<u64>] {
        &mut self.limbs
    }

    pub fn limb(&self, i: usize) -> &[u64] {
        &self.limbs[i]
    }

    pub fn limb_count(&self) -> usize {
        self.limbs.len()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn byte_size(&self) -> usize {
        self.degree_n * self.limbs.len() * 8
    }

    pub fn to_ntt(&mut self, basis: &RnsBasis) {
        if self.domain == Domain::Ntt {
            return;
        }
        for (limb, q) in self.limbs.iter_mut().zip(&self.moduli) {
            ntt_inplace(limb, basis.table(q));
        }
        self.domain = Domain::Ntt;
    }

    pub fn to_coeff(&mut self, basis: &RnsBasis) {
        if self.domain == Domain::Coefficient {
            return;
        }
        for (limb, q) in self.limbs.iter_mut().zip(&self.moduli) {
            intt_inplace(limb, basis.table(q));
        }
        self.domain = Domain::Coefficient;
    }

    /// Keeps only the limbs at the given positions.
    pub fn select(&self, idx: impl IntoIterator<Item = usize>) -> Self {
        let (moduli, limbs) = idx
            .into_iter()
            .map(|i| (self.moduli[i], self.limbs[i].clone()))
            .unzip();
        Self {
            degree_n: self.degree_n,
            moduli,
            limbs,
            domain: self.domain,
        }
    }

    pub fn truncate(&mut self, limbs: usize) {
        self.moduli.truncate(limbs);
        self.limbs.truncate(limbs);
    }

    pub fn pop_limb(&mut self) -> Option<(PrimeModulus, Vec<u64>)> {
        Some((self.moduli.pop()?, self.limbs.pop()?))
    }

    fn zip_map(&self, other: &Self, f: impl Fn(&PrimeModulus, u64, u64) -> u64) -> Self {
        assert_eq!(self.moduli, other.moduli, "operands live on different bases");
        assert_eq!(self.domain, other.domain, "operands live in different domains");
        let limbs = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .zip(&self.moduli)
            .map(|((x, y), q)| x.iter().zip(y).map(|(&a, &b)| f(q, a, b)).collect())
            .collect();
        Self {
            degree_n: self.degree_n,
            moduli: self.moduli.clone(),
            limbs,
            domain: self.domain,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |q, a, b| q.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |q, a, b| q.sub(a, b))
    }

    /// Element-wise product; both operands must be in the NTT domain.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.domain, Domain::Ntt, "element-wise product needs NTT domain");
        self.zip_map(other, |q, a, b| q.mul(a, b))
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for (limb, q) in out.limbs.iter_mut().zip(&self.moduli) {
            for x in limb.iter_mut() {
                *x = q.neg(*x);
            }
        }
        out
    }

    /// Multiplies limb i by scalars[i].
    pub fn mul_scalars(&self, scalars: &[u64]) -> Self {
        let mut out = self.clone();
        for ((limb, q), &c) in out.limbs.iter_mut().zip(&self.moduli).zip(scalars) {
            for x in limb.iter_mut() {
                *x = q.mul(*x, c);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|l| l.iter().all(|&x| x == 0))
    }

    fn write_body(&self, w: &mut impl Write) -> io::Result<()> {
        for q in &self.moduli {
            w.write_all(&q.value().to_le_bytes())?;
        }
        for limb in &self.limbs {
            for x in limb {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    fn read_body(
        r: &mut impl Read,
        degree_n: usize,
        limbs: usize,
        domain: Domain,
    ) -> Result<Self, RnsError> {
        let moduli = (0..limbs)
            .map(|_| PrimeModulus::new(read_u64(r)?, degree_n).map_err(RnsError::from))
            .collect::<Result<Vec<_>, _>>()?;
        let mut data = Vec::with_capacity(limbs);
        for q in &moduli {
            let mut buf = vec![0u8; degree_n * 8];
            r.read_exact(&mut buf)?;
            let limb: Vec<u64> = buf
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if limb.iter().any(|&x| x >= q.value()) {
                return Err(RnsError::Format("residue not reduced".into()));
            }
            data.push(limb);
        }
        Ok(Self {
            degree_n,
            moduli,
            limbs: data,
            domain,
        })
    }
}

/// An encrypted message (b, a) over q_0..q_ℓ.
#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext {
    pub b: RnsPolynomial,
    pub a: RnsPolynomial,
    pub level: usize,
    pub scale: f64,
}

impl Ciphertext {
    pub fn byte_size(&self) -> usize {
        self.b.byte_size() + self.a.byte_size()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plaintext {
    pub m: RnsPolynomial,
    pub level: usize,
    pub scale: f64,
}

/// Ternary secret, kept both as raw coefficients and over the full base in NTT form.
#[derive(Debug, Clone, PartialEq)]
pub struct SecretKey {
    pub coeffs: Vec<i64>,
    pub s: RnsPolynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublicKey {
    pub b: RnsPolynomial,
    pub a: RnsPolynomial,
}

/// dnum pairs (b_j, a_j), each over C_L ∪ B in the NTT domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationKey {
    pub slices: Vec<(RnsPolynomial, RnsPolynomial)>,
}

impl EvaluationKey {
    pub fn byte_size(&self) -> usize {
        self.slices
            .iter()
            .map(|(b, a)| b.byte_size() + a.byte_size())
            .sum()
    }
}

/// Drops the last data limb without rescaling.
pub fn drop_last_limb(ct: &Ciphertext) -> Result<Ciphertext, RnsError> {
    if ct.level == 0 {
        return Err(RnsError::LevelExhausted);
    }
    let mut out = ct.clone();
    out.b.truncate(ct.level);
    out.a.truncate(ct.level);
    out.level -= 1;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sizes {
    pub ct_bytes: u64,
    pub evk_bytes: u64,
    pub aggregate_evk_bytes: u64,
}

pub fn sizes(instance: &CkksInstance, level: usize) -> Sizes {
    let n = instance.n() as u64;
    let l = instance.max_level as u64;
    let dnum = instance.dnum as u64;
    let k = instance.k() as u64;
    Sizes {
        ct_bytes: 2 * n * (level as u64 + 1) * 8,
        evk_bytes: 2 * dnum * n * (k + l + 1) * 8,
        aggregate_evk_bytes: 2 * n * (l + 1) * (dnum + 1) * 8,
    }
}

const VERSION: u16 = 1;

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

struct Header {
    degree_n: usize,
    limbs: usize,
    domain: Domain,
    level: usize,
    scale: f64,
}

fn write_header(w: &mut impl Write, magic: &[u8; 4], h: &Header) -> io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.degree_n as u64).to_le_bytes())?;
    w.write_all(&(h.limbs as u32).to_le_bytes())?;
    w.write_all(&[matches!(h.domain, Domain::Ntt) as u8])?;
    w.write_all(&(h.level as u32).to_le_bytes())?;
    w.write_all(&h.scale.to_le_bytes())
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<Header, RnsError> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(RnsError::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&m)
        )));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    if u16::from_le_bytes(b2) != VERSION {
        return Err(RnsError::Format("unsupported version".into()));
    }
    let degree_n = read_u64(r)? as usize;
    if !degree_n.is_power_of_two() {
        return Err(RnsError::Format("degree is not a power of two".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let limbs = u32::from_le_bytes(b4) as usize;
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let domain = match b1[0] {
        0 => Domain::Coefficient,
        1 => Domain::Ntt,
        d => return Err(RnsError::Format(format!("bad domain flag {d}"))),
    };
    r.read_exact(&mut b4)?;
    let level = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    Ok(Header {
        degree_n,
        limbs,
        domain,
        level,
        scale: f64::from_le_bytes(b8),
    })
}

/// Little-endian binary serialization shared by all containers.
pub trait Serialize: Sized {
    fn write_to(&self, w: &mut impl Write) -> io::Result<()>;
    fn read_from(r: &mut impl Read) -> Result<Self, RnsError>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    fn from_bytes(mut bytes: &[u8]) -> Result<Self, RnsError> {
        Self::read_from(&mut bytes)
    }
}

fn poly_header(p: &RnsPolynomial, level: usize, scale: f64) -> Header {
    Header {
        degree_n: p.degree_n,
        limbs: p.limb_count(),
        domain: p.domain,
        level,
        scale,
    }
}

fn read_poly(r: &mut impl Read, h: &Header) -> Result<RnsPolynomial, RnsError> {
    RnsPolynomial::read_body(r, h.degree_n, h.limbs, h.domain)
}

impl Serialize for RnsPolynomial {
    fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, b"BTSP", &poly_header(self, 0, 0.0))?;
        self.write_body(w)
    }

    fn read_from(r: &mut impl Read) -> Result<Self, RnsError> {
        let h = read_header(r, b"BTSP")?;
        read_poly(r, &h)
    }
}

impl Serialize for Ciphertext {
    fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, b"BTSC", &poly_header(&self.b, self.level, self.scale))?;
        self.b.write_body(w)?;
        self.a.write_body(w)
    }

    fn read_from(r: &mut impl Read) -> Result<Self, RnsError> {
        let h = read_header(r, b"BTSC")?;
        let b = read_poly(r, &h)?;
        let a = read_poly(r, &h)?;
        if h.limbs != h.level + 1 {
            return Err(RnsError::Format("limb count does not match level".into()));
        }
        Ok(Self {
            b,
            a,
            level: h.level,
            scale: h.scale,
        })
    }
}

impl Serialize for Plaintext {
    fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, b"BTST", &poly_header(&self.m, self.level, self.scale))?;
        self.m.write_body(w)
    }

    fn read_from(r: &mut impl Read) -> Result<Self, RnsError> {
        let h = read_header(r, b"BTST")?;
        Ok(Self {
            m: read_poly(r, &h)?,
            level: h.level,
            scale: h.scale,
        })
    }
}

impl Serialize for SecretKey {
    fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, b"BTSS", &poly_header(&self.s, 0, 0.0))?;
        for &c in &self.coeffs {
            w.write_all(&[c as i8 as u8])?;
        }
        self.s.write_body(w)
    }

    fn read_from(r: &mut impl Read) -> Result<Self, RnsError> {
        let h = read_header(r, b"BTSS")?;
        let mut raw = vec![0u8; h.degree_n];
        r.read_exact(&mut raw)?;
        let coeffs: Vec<i64> = raw.iter().map(|&b| b as i8 as i64).collect();
        if coeffs.iter().any(|c| c.abs() > 1) {
            return Err(RnsError::Format("secret is not ternary".into()));
        }
        Ok(Self {
            coeffs,
            s: read_poly(r, &h)?,
        })
    }
}

impl Serialize for EvaluationKey {
    fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        let first = &self.slices.first().expect("evaluation key has slices").0;
        // level field carries the slice count
        write_header(w, b"BTSK", &poly_header(first, self.slices.len(), 0.0))?;
        for (b, a) in &self.slices {
            b.write_body(w)?;
            a.write_body(w)?;
        }
        Ok(())
    }

    fn read_from(r: &mut impl Read) -> Result<Self, RnsError> {
        let h = read_header(r, b"BTSK")?;
        let slices = (0..h.level)
            .map(|_| Ok((read_poly(r, &h)?, read_poly(r, &h)?)))
            .collect::<Result<Vec<_>, RnsError>>()?;
        if slices.is_empty() {
            return Err(RnsError::Format("evaluation key without slices".into()));
        }
        Ok(Self { slices })
    }
}
