//! Negacyclic NTT, the 3D decomposition over a PE grid, and automorphisms.

use crate::arith::{bit_reverse, OtTables, PrimeModulus, TwiddleTable, OT_DEFAULT_M};

/// In-place forward negacyclic NTT (Cooley-Tukey, bit-reversed output).
pub fn ntt_inplace(a: &mut [u64], table: &TwiddleTable) {
    let n = a.len();
    debug_assert_eq!(n, table.degree());
    let q = table.modulus();
    let psi = table.factors();
    let mut t = n;
    let mut m = 1;
    while m < n {
        t >>= 1;
        for i in 0..m {
            let s = psi[m + i];
            let j1 = 2 * i * t;
            let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let u = *x;
                let v = q.mul(*y, s);
                *x = q.add(u, v);
                *y = q.sub(u, v);
            }
        }
        m <<= 1;
    }
}

/// In-place inverse negacyclic NTT (Gentleman-Sande), including the 1/N scaling.
pub fn intt_inplace(a: &mut [u64], table: &TwiddleTable) {
    let n = a.len();
    debug_assert_eq!(n, table.degree());
    let q = table.modulus();
    let psi_inv = table.inverse_factors();
    let mut t = 1;
    let mut m = n;
    while m > 1 {
        let h = m >> 1;
        for i in 0..h {
            let s = psi_inv[h + i];
            let j1 = 2 * i * t;
            let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let u = *x;
                let v = *y;
                *x = q.add(u, v);
                *y = q.mul(q.sub(u, v), s);
            }
        }
        t <<= 1;
        m = h;
    }
    let n_inv = table.n_inverse();
    for x in a.iter_mut() {
        *x = q.mul(*x, n_inv);
    }
}

pub fn ntt(limb: &[u64], table: &TwiddleTable) -> Vec<u64> {
    let mut v = limb.to_vec();
    ntt_inplace(&mut v, table);
    v
}

pub fn intt(limb: &[u64], table: &TwiddleTable) -> Vec<u64> {
    let mut v = limb.to_vec();
    intt_inplace(&mut v, table);
    v
}

/// Schoolbook product in Z_q[X]/(X^N + 1).
pub fn negacyclic_convolution(a: &[u64], b: &[u64], q: &PrimeModulus) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            let p = q.mul(a[i], b[j]);
            let k = i + j;
            if k < n {
                out[k] = q.add(out[k], p);
            } else {
                out[k - n] = q.sub(out[k - n], p);
            }
        }
    }
    out
}

/// Cube layout of one limb over an nx × ny PE grid with nz residues per PE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridMap {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("grid dimensions must be powers of two")]
    NotPowerOfTwo,
    #[error("residues per PE ({nz}) must be at least the grid side lengths ({nx}, {ny})")]
    TooFewResidues { nx: usize, ny: usize, nz: usize },
}

impl GridMap {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self, GridError> {
        if !(nx.is_power_of_two() && ny.is_power_of_two() && nz.is_power_of_two()) {
            return Err(GridError::NotPowerOfTwo);
        }
        if nz < nx || nz < ny {
            return Err(GridError::TooFewResidues { nx, ny, nz });
        }
        Ok(Self { nx, ny, nz })
    }

    /// Layout of a degree-N limb over a grid with `cols` × `rows` PEs.
    pub fn for_grid(n: usize, rows: usize, cols: usize) -> Result<Self, GridError> {
        if rows * cols == 0 || n % (rows * cols) != 0 {
            return Err(GridError::NotPowerOfTwo);
        }
        Self::new(cols, rows, n / (rows * cols))
    }

    pub fn degree(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn n_pe(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn pe_id(&self, x: usize, y: usize) -> usize {
        x + self.nx * y
    }

    /// PE coordinate (x, y) holding coefficient i.
    #[inline]
    pub fn pe_of(&self, i: usize) -> (usize, usize) {
        (i % self.nx, (i / self.nx) % self.ny)
    }

    #[inline]
    pub fn slot_of(&self, i: usize) -> usize {
        i / (self.nx * self.ny)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }
}

/// A block of residues moved between two PEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transfer {
    pub src: usize,
    pub dst: usize,
    pub words: usize,
}

/// Side information recorded while running [`ntt_3d`].
#[derive(Debug, Clone, Default)]
pub struct Ntt3dTrace {
    pub vertical: Vec<Transfer>,
    pub horizontal: Vec<Transfer>,
    /// Butterflies per PE in the z, y and x steps.
    pub butterflies: [Vec<u64>; 3],
}

impl Ntt3dTrace {
    pub fn butterflies_per_pe(&self, pe: usize) -> u64 {
        self.butterflies.iter().map(|b| b[pe]).sum()
    }
}

/// Cyclic DFT of a power-of-two line with root ψ^step, natural order in and out.
fn cyclic_dft(v: &mut [u64], step: usize, ot: &OtTables, q: &PrimeModulus) -> u64 {
    let s = v.len();
    let log_s = s.trailing_zeros();
    for i in 0..s {
        let j = bit_reverse(i, log_s);
        if i < j {
            v.swap(i, j);
        }
    }
    let mut butterflies = 0;
    let mut len = 2;
    while len <= s {
        let half = len / 2;
        let w_step = step * (s / len);
        for start in (0..s).step_by(len) {
            for j in 0..half {
                let w = ot.compose(w_step * j);
                let u = v[start + j];
                let t = q.mul(v[start + j + half], w);
                v[start + j] = q.add(u, t);
                v[start + j + half] = q.sub(u, t);
                butterflies += 1;
            }
        }
        len <<= 1;
    }
    butterflies
}

fn push_transfer(list: &mut Vec<Transfer>, src: usize, dst: usize, words: usize) {
    if src != dst && words > 0 {
        list.push(Transfer { src, dst, words });
    }
}

/// Negacyclic NTT executed as NTT_z, column transpose, NTT_y, row transpose, NTT_x.
///
/// Output is bit-identical to [`ntt`]; the trace records the inter-PE traffic
/// of both transposes and the per-PE butterfly counts.
pub fn ntt_3d(limb: &[u64], map: &GridMap, table: &TwiddleTable) -> (Vec<u64>, Ntt3dTrace) {
    let GridMap { nx, ny, nz } = *map;
    let n = map.degree();
    assert_eq!(limb.len(), n, "limb length must equal nx·ny·nz");
    let q = table.modulus();
    let ot = OtTables::new(*q, OT_DEFAULT_M.min(n));
    let m = nx * ny;
    let two_n = 2 * n;
    let n_pe = map.n_pe();
    let mut trace = Ntt3dTrace {
        butterflies: [vec![0; n_pe], vec![0; n_pe], vec![0; n_pe]],
        ..Default::default()
    };

    // z step: negacyclic size-nz transform inside every PE, then the cross twiddle
    let mut pes: Vec<Vec<u64>> = vec![Vec::new(); n_pe];
    for y in 0..ny {
        for x in 0..nx {
            let r = x + nx * y;
            let mut line: Vec<u64> = (0..nz)
                .map(|z| q.mul(limb[map.index(x, y, z)], ot.compose(m * z)))
                .collect();
            trace.butterflies[0][r] = cyclic_dft(&mut line, 2 * m, &ot, q);
            for (j0, v) in line.iter_mut().enumerate() {
                *v = q.mul(*v, ot.compose(r * (2 * j0 + 1) % two_n));
            }
            pes[r] = line;
        }
    }

    // column transpose: PE (x, y') collects lines j0 in its block
    let bz = nz / ny;
    let mut next = vec![vec![0u64; nz]; n_pe];
    for x in 0..nx {
        for y in 0..ny {
            let src = map.pe_id(x, y);
            for yd in 0..ny {
                let dst = map.pe_id(x, yd);
                for l in 0..bz {
                    next[dst][l * ny + y] = pes[src][yd * bz + l];
                }
                push_transfer(&mut trace.vertical, src, dst, bz);
            }
        }
    }
    pes = next;

    // y step
    for y in 0..ny {
        for x in 0..nx {
            let p = map.pe_id(x, y);
            let data = &mut pes[p];
            for l in 0..bz {
                let line = &mut data[l * ny..(l + 1) * ny];
                trace.butterflies[1][p] += cyclic_dft(line, two_n / ny, &ot, q);
                for (j0p, v) in line.iter_mut().enumerate() {
                    *v = q.mul(*v, ot.compose(2 * nz * x * j0p % two_n));
                }
            }
        }
    }

    // row transpose: line λ = l·ny + j0' of row y' goes to PE λ / bx
    let bx = nz / nx;
    let mut next = vec![vec![0u64; nz]; n_pe];
    for y in 0..ny {
        for x in 0..nx {
            let src = map.pe_id(x, y);
            for lambda in 0..nz {
                let dst = map.pe_id(lambda / bx, y);
                next[dst][(lambda % bx) * nx + x] = pes[src][lambda];
            }
            for xd in 0..nx {
                push_transfer(&mut trace.horizontal, src, map.pe_id(xd, y), bx);
            }
        }
    }
    pes = next;

    // x step and write-back in bit-reversed order
    let log_n = n.trailing_zeros();
    let mut out = vec![0u64; n];
    for y in 0..ny {
        for x in 0..nx {
            let p = map.pe_id(x, y);
            let data = &mut pes[p];
            for c in 0..bx {
                let line = &mut data[c * nx..(c + 1) * nx];
                trace.butterflies[2][p] += cyclic_dft(line, two_n / nx, &ot, q);
                let lambda = x * bx + c;
                let (l, j0p) = (lambda / ny, lambda % ny);
                let j0 = y * bz + l;
                for (j1p, v) in line.iter().enumerate() {
                    let j = j0 + nz * (j0p + ny * j1p);
                    out[bit_reverse(j, log_n)] = *v;
                }
            }
        }
    }
    (out, trace)
}

/// 5^r mod `modulus` for a power-of-two modulus.
pub fn galois_element(r: usize, modulus: usize) -> usize {
    let mask = modulus - 1;
    let mut acc = 1usize;
    let mut base = 5usize;
    let mut e = r;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.wrapping_mul(base) & mask;
        }
        base = base.wrapping_mul(base) & mask;
        e >>= 1;
    }
    acc & mask
}

/// σ_r(i) = i·5^r mod N.
pub fn automorphism_index(i: usize, r: usize, n: usize) -> usize {
    i.wrapping_mul(galois_element(r, n)) & (n - 1)
}

/// a(X) ↦ a(X^{5^r}) on one coefficient-domain limb.
pub fn automorphism_coeff(limb: &[u64], r: usize, q: &PrimeModulus) -> Vec<u64> {
    let n = limb.len();
    let two_n = 2 * n;
    let g = galois_element(r, two_n);
    let mut out = vec![0u64; n];
    for (i, &c) in limb.iter().enumerate() {
        let k = i * g % two_n;
        if k < n {
            out[k] = c;
        } else {
            out[k - n] = q.neg(c);
        }
    }
    out
}

/// a(X) ↦ a(X^{5^r}) on one limb in the bit-reversed NTT domain.
pub fn automorphism_ntt(limb: &[u64], r: usize) -> Vec<u64> {
    let n = limb.len();
    let log_n = n.trailing_zeros();
    let two_n = 2 * n;
    let g = galois_element(r, two_n);
    (0..n)
        .map(|k| {
            let e = 2 * bit_reverse(k, log_n) + 1;
            let src = (e * g % two_n - 1) / 2;
            limb[bit_reverse(src, log_n)]
        })
        .collect()
}

/// Three-stage routing of one automorphism over the PE grid.
#[derive(Debug, Clone)]
pub struct PermutationRoute {
    pub r: usize,
    pub map: GridMap,
    /// Per PE: destination slot and sign flag for each of its nz residues.
    pub intra_pe: Vec<Vec<(usize, bool)>>,
    /// Per column x: destination row of each source row.
    pub vertical: Vec<Vec<usize>>,
    /// Per row y: destination column of each source column.
    pub horizontal: Vec<Vec<usize>>,
}

pub fn decompose_permutation(r: usize, map: &GridMap) -> PermutationRoute {
    let GridMap { nx, ny, nz } = *map;
    let n = map.degree();
    let m = nx * ny;
    let g = galois_element(r, n);
    let g2 = galois_element(r, 2 * n);
    let mut intra_pe = vec![Vec::with_capacity(nz); m];
    for y in 0..ny {
        for x in 0..nx {
            let p = map.pe_id(x, y);
            for z in 0..nz {
                let i = map.index(x, y, z);
                let dest = i * g % n;
                let negate = i * g2 % (2 * n) >= n;
                intra_pe[p].push((dest / m, negate));
            }
        }
    }
    let vertical = (0..nx)
        .map(|x| (0..ny).map(|y| (x * g / nx + y * g) % ny).collect())
        .collect();
    let horizontal = (0..ny)
        .map(|_| (0..nx).map(|x| x * g % nx).collect())
        .collect();
    PermutationRoute {
        r,
        map: *map,
        intra_pe,
        vertical,
        horizontal,
    }
}

impl PermutationRoute {
    /// Destination index and sign of coefficient i after all three stages.
    pub fn route(&self, i: usize) -> (usize, bool) {
        let map = &self.map;
        let (x, y) = map.pe_of(i);
        let z = map.slot_of(i);
        let (zd, negate) = self.intra_pe[map.pe_id(x, y)][z];
        let yd = self.vertical[x][y];
        let xd = self.horizontal[yd][x];
        (map.index(xd, yd, zd), negate)
    }

    /// Applies the routed permutation to a coefficient-domain limb.
    pub fn apply(&self, limb: &[u64], q: &PrimeModulus) -> Vec<u64> {
        let mut out = vec![0u64; limb.len()];
        for (i, &c) in limb.iter().enumerate() {
            let (d, negate) = self.route(i);
            out[d] = if negate { q.neg(c) } else { c };
        }
        out
    }

    /// Destination PE of every residue of PE `pe`; a single PE by construction.
    pub fn destination_pes(&self, pe: usize) -> Vec<usize> {
        let map = &self.map;
        let (x, y) = (pe % map.nx, pe / map.nx);
        let mut v: Vec<usize> = (0..map.nz)
            .map(|z| {
                let (d, _) = self.route(map.index(x, y, z));
                let (dx, dy) = map.pe_of(d);
                map.pe_id(dx, dy)
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_identity(&self) -> bool {
        self.vertical.iter().all(|c| c.iter().enumerate().all(|(i, &d)| i == d))
            && self.horizontal.iter().all(|c| c.iter().enumerate().all(|(i, &d)| i == d))
            && self.intra_pe.iter().all(|p| p.iter().enumerate().all(|(i, &(d, s))| i == d && !s))
    }

    pub fn vertical_transfers(&self) -> Vec<Transfer> {
        let map = &self.map;
        let mut out = Vec::new();
        for (x, col) in self.vertical.iter().enumerate() {
            for (y, &yd) in col.iter().enumerate() {
                push_transfer(&mut out, map.pe_id(x, y), map.pe_id(x, yd), map.nz);
            }
        }
        out
    }

    pub fn horizontal_transfers(&self) -> Vec<Transfer> {
        let map = &self.map;
        let mut out = Vec::new();
        for (y, row) in self.horizontal.iter().enumerate() {
            for (x, &xd) in row.iter().enumerate() {
                push_transfer(&mut out, map.pe_id(x, y), map.pe_id(xd, y), map.nz);
            }
        }
        out
    }
}

/// True when every source and every destination appears at most once.
pub fn is_permutation(transfers: &[Transfer]) -> bool {
    let mut src: Vec<usize> = transfers.iter().map(|t| t.src).collect();
    let mut dst: Vec<usize> = transfers.iter().map(|t| t.dst).collect();
    src.sort_unstable();
    dst.sort_unstable();
    let n = src.len();
    src.dedup();
    dst.dedup();
    src.len() == n && dst.len() == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::find_ntt_prime;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn table(log_n: u32, bits: u32) -> TwiddleTable {
        TwiddleTable::new(find_ntt_prime(bits, 1 << log_n, &BTreeSet::new()).unwrap())
    }

    fn random_limb(rng: &mut ChaCha8Rng, n: usize, q: u64) -> Vec<u64> {
        (0..n).map(|_| rng.gen_range(0..q)).collect()
    }

    #[test]
    fn delta_maps_to_ones() {
        let t = table(10, 50);
        let mut d = vec![0; 1024];
        d[0] = 1;
        assert!(ntt(&d, &t).iter().all(|&v| v == 1));
        assert_eq!(intt(&vec![1; 1024], &t), d);
    }

    #[test]
    fn exhaustive_round_trip_n4_q17() {
        let q = PrimeModulus::new(17, 4).unwrap();
        let t = TwiddleTable::new(q);
        for code in 0..17u64.pow(4) {
            let a: Vec<u64> = (0..4).map(|i| code / 17u64.pow(i) % 17).collect();
            assert_eq!(intt(&ntt(&a, &t), &t), a);
        }
    }

    #[test]
    fn ntt_evaluates_at_bit_reversed_odd_powers() {
        let t = table(5, 40);
        let q = *t.modulus();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_limb(&mut rng, 32, q.value());
        let out = ntt(&a, &t);
        for (k, &v) in out.iter().enumerate() {
            let e = 2 * bit_reverse(k, 5) as u64 + 1;
            let x = q.pow(q.root_2n(), e);
            let direct = a.iter().rev().fold(0, |acc, &c| q.add(q.mul(acc, x), c));
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn convolution_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for log_n in [4u32, 8, 10] {
            let t = table(log_n, 50);
            let q = *t.modulus();
            let n = 1 << log_n;
            let a = random_limb(&mut rng, n, q.value());
            let b = random_limb(&mut rng, n, q.value());
            let prod: Vec<u64> = ntt(&a, &t)
                .iter()
                .zip(ntt(&b, &t))
                .map(|(x, y)| q.mul(*x, y))
                .collect();
            assert_eq!(intt(&prod, &t), negacyclic_convolution(&a, &b, &q));
        }
    }

    #[test]
    fn ntt_3d_matches_ntt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (nx, ny, nz) in [(16, 8, 32), (4, 4, 4), (2, 8, 16), (8, 2, 8)] {
            let map = GridMap::new(nx, ny, nz).unwrap();
            let n = map.degree();
            let t = table(n.trailing_zeros(), 50);
            let a = random_limb(&mut rng, n, t.modulus().value());
            let (out, trace) = ntt_3d(&a, &map, &t);
            assert_eq!(out, ntt(&a, &t), "grid {nx}x{ny}x{nz}");
            let log_n = n.trailing_zeros() as u64;
            for pe in 0..map.n_pe() {
                assert_eq!(trace.butterflies_per_pe(pe), n as u64 * log_n / 2 / map.n_pe() as u64);
            }
            for tr in &trace.vertical {
                assert_eq!(tr.src % nx, tr.dst % nx);
            }
            for tr in &trace.horizontal {
                assert_eq!(tr.src / nx, tr.dst / nx);
            }
        }
    }

    #[test]
    fn automorphism_examples() {
        let img: Vec<usize> = (0..8).map(|i| automorphism_index(i, 1, 8)).collect();
        assert_eq!(img, vec![0, 5, 2, 7, 4, 1, 6, 3]);
        assert!((0..64).all(|i| automorphism_index(i, 0, 64) == i));
        let q = PrimeModulus::new(17, 8).unwrap();
        let mut x = vec![0u64; 8];
        x[1] = 1;
        let mut expected = vec![0u64; 8];
        expected[5] = 1;
        assert_eq!(automorphism_coeff(&x, 1, &q), expected);
        x = vec![0; 8];
        x[3] = 1;
        // 3·5 = 15 = 8 + 7, so X^3 ↦ -X^7
        let y = automorphism_coeff(&x, 1, &q);
        assert_eq!(y[7], 16);
    }

    #[test]
    fn automorphism_bijective_at_2_17() {
        let n = 1 << 17;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..4 {
            let r = rng.gen_range(0..n / 2);
            let mut seen = vec![false; n];
            for i in 0..n {
                let j = automorphism_index(i, r, n);
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }

    #[test]
    fn ntt_domain_automorphism_commutes() {
        let t = table(8, 50);
        let q = *t.modulus();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_limb(&mut rng, 256, q.value());
        for r in [0, 1, 5, 77] {
            let lhs = ntt(&automorphism_coeff(&a, r, &q), &t);
            assert_eq!(automorphism_ntt(&ntt(&a, &t), r), lhs);
        }
    }

    #[test]
    fn route_matches_index_map_at_2_12() {
        let map = GridMap::new(16, 8, 32).unwrap();
        let n = map.degree();
        let q = find_ntt_prime(40, n, &BTreeSet::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_limb(&mut rng, n, q.value());
        for r in [0usize, 1, 2, 3, 100, 2047] {
            let route = decompose_permutation(r, &map);
            for i in 0..n {
                assert_eq!(route.route(i).0, automorphism_index(i, r, n));
            }
            assert_eq!(route.apply(&a, &q), automorphism_coeff(&a, r, &q));
            for pe in 0..map.n_pe() {
                assert_eq!(route.destination_pes(pe).len(), 1);
            }
            assert!(is_permutation(&route.vertical_transfers()));
            assert!(is_permutation(&route.horizontal_transfers()));
            assert_eq!(route.is_identity(), r == 0);
        }
    }
}
