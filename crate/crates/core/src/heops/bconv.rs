//! Fast base conversion and its grouped partial-sum form.

use crate::arith::Modulus;

use super::HeError;

/// Precomputed [q̂_j^{-1}]_{q_j} and [q̂_j]_{t_i} for one (source → target) pair.
#[derive(Debug, Clone)]
pub struct BConvTable {
    source: Vec<Modulus>,
    target: Vec<Modulus>,
    qhat_inv: Vec<u64>,
    /// qhat_mod_t[i][j] = [q̂_j]_{t_i}
    qhat_mod_t: Vec<Vec<u64>>,
}

impl BConvTable {
    pub fn new(source: &[Modulus], target: &[Modulus]) -> Self {
        let qhat_inv = source
            .iter()
            .enumerate()
            .map(|(j, qj)| {
                let prod = source
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != j)
                    .fold(1u64 % qj.value(), |acc, (_, qm)| qj.mul(acc, qm.value() % qj.value()));
                qj.inv(prod).expect("source moduli are pairwise coprime primes")
            })
            .collect();
        let qhat_mod_t = target
            .iter()
            .map(|t| {
                (0..source.len())
                    .map(|j| {
                        source
                            .iter()
                            .enumerate()
                            .filter(|&(m, _)| m != j)
                            .fold(1u64 % t.value(), |acc, (_, qm)| t.mul(acc, qm.value() % t.value()))
                    })
                    .collect()
            })
            .collect();
        Self {
            source: source.to_vec(),
            target: target.to_vec(),
            qhat_inv,
            qhat_mod_t,
        }
    }

    pub fn source(&self) -> &[Modulus] {
        &self.source
    }

    pub fn target(&self) -> &[Modulus] {
        &self.target
    }

    pub fn qhat_inv(&self) -> &[u64] {
        &self.qhat_inv
    }

    pub fn qhat_mod_target(&self, i: usize, j: usize) -> u64 {
        self.qhat_mod_t[i][j]
    }

    /// Part (1): y_j = [a_j · q̂_j^{-1}]_{q_j} for one source limb.
    fn scale_limb(&self, j: usize, limb: &[u64]) -> Vec<u64> {
        let q = &self.source[j];
        let c = self.qhat_inv[j];
        limb.iter().map(|&a| q.mul(a, c)).collect()
    }

    /// Converts coefficient-domain limbs on the source base to the target base.
    pub fn convert(&self, input: &[&[u64]]) -> Vec<Vec<u64>> {
        assert_eq!(input.len(), self.source.len());
        let n = input.first().map_or(0, |l| l.len());
        let y: Vec<Vec<u64>> = input
            .iter()
            .enumerate()
            .map(|(j, limb)| self.scale_limb(j, limb))
            .collect();
        self.target
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut out = vec![0u64; n];
                for (j, yj) in y.iter().enumerate() {
                    let w = self.qhat_mod_t[i][j];
                    for (o, &v) in out.iter_mut().zip(yj) {
                        *o = t.add(*o, t.mul(t.reduce(v), w));
                    }
                }
                out
            })
            .collect()
    }
}

/// Accumulates BConv output group by group, l_sub source limbs at a time.
#[derive(Debug, Clone)]
pub struct BConvAccumulator<'a> {
    table: &'a BConvTable,
    l_sub: usize,
    consumed: usize,
    acc: Vec<Vec<u64>>,
    groups: usize,
}

impl<'a> BConvAccumulator<'a> {
    pub fn new(table: &'a BConvTable, l_sub: usize, degree_n: usize) -> Self {
        assert!((1..=64).contains(&l_sub), "l_sub must be in 1..=64");
        Self {
            table,
            l_sub,
            consumed: 0,
            acc: vec![vec![0; degree_n]; table.target.len()],
            groups: 0,
        }
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// Adds the next group of source limbs; only the final group may be short.
    pub fn push(&mut self, group: &[&[u64]]) -> Result<(), HeError> {
        let total = self.table.source.len();
        let end = self.consumed + group.len();
        if group.is_empty() || end > total || (group.len() != self.l_sub && end != total) {
            return Err(HeError::IncompleteGroup {
                got: group.len(),
                expected: self.l_sub,
            });
        }
        let y: Vec<Vec<u64>> = group
            .iter()
            .enumerate()
            .map(|(g, limb)| self.table.scale_limb(self.consumed + g, limb))
            .collect();
        for (i, t) in self.table.target.iter().enumerate() {
            let w = &self.table.qhat_mod_t[i][self.consumed..end];
            for (c, out) in self.acc[i].iter_mut().enumerate() {
                // inner sum of at most 64 products < 2^122 each fits in 128 bits
                let inner: u128 = y
                    .iter()
                    .zip(w)
                    .map(|(yj, &wj)| yj[c] as u128 * wj as u128)
                    .sum();
                *out = t.add(*out, t.reduce_u128(inner));
            }
        }
        self.consumed = end;
        self.groups += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<Vec<Vec<u64>>, HeError> {
        if self.consumed != self.table.source.len() {
            return Err(HeError::IncompleteGroup {
                got: self.consumed,
                expected: self.table.source.len(),
            });
        }
        Ok(self.acc)
    }
}

/// Grouped conversion: feeds `input` through an accumulator in chunks of l_sub.
pub fn bconv_partial(table: &BConvTable, input: &[&[u64]], l_sub: usize) -> Result<Vec<Vec<u64>>, HeError> {
    let n = input.first().map_or(0, |l| l.len());
    let mut acc = BConvAccumulator::new(table, l_sub, n);
    for group in input.chunks(l_sub) {
        acc.push(group)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: u64) -> Modulus {
        Modulus::new(v).unwrap()
    }

    #[test]
    fn single_modulus_identity() {
        let t = BConvTable::new(&[m(5)], &[m(7)]);
        assert_eq!(t.convert(&[&[3]]), vec![vec![3]]);
    }

    #[test]
    fn offset_by_source_product() {
        // 7 ≡ (1, 2) mod (3, 5); the fast conversion returns 7 + 15 ≡ 1 mod 7
        let t = BConvTable::new(&[m(3), m(5)], &[m(7)]);
        assert_eq!(t.convert(&[&[1], &[2]]), vec![vec![1]]);
    }

    #[test]
    fn short_group_rejected_mid_stream() {
        let t = BConvTable::new(&[m(3), m(5), m(7), m(11)], &[m(13)]);
        let mut acc = BConvAccumulator::new(&t, 2, 1);
        assert!(acc.push(&[&[1]]).is_err());
        acc.push(&[&[1], &[1]]).unwrap();
        assert!(acc.clone().finish().is_err());
        acc.push(&[&[1], &[1]]).unwrap();
        let ones: [&[u64]; 4] = [&[1]; 4];
        assert_eq!(acc.finish().unwrap(), t.convert(&ones));
    }

    #[test]
    fn short_final_group_accepted() {
        let t = BConvTable::new(&[m(3), m(5), m(7)], &[m(13), m(17)]);
        let input: [&[u64]; 3] = [&[2, 1], &[4, 0], &[6, 5]];
        assert_eq!(bconv_partial(&t, &input, 2).unwrap(), t.convert(&input));
    }
}
