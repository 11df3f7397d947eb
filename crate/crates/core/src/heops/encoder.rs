//! Canonical-embedding encoder over the 5^j-ordered roots.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::bit_reverse;

#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    rot_group: Vec<usize>,
    ksi_pows: Vec<Complex64>,
}

impl Encoder {
    pub fn new(n: usize) -> Self {
        let m = 2 * n;
        let slots = n / 2;
        let mut rot_group = Vec::with_capacity(slots);
        let mut g = 1usize;
        for _ in 0..slots {
            rot_group.push(g);
            g = g * 5 % m;
        }
        let ksi_pows = (0..=m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
            .collect();
        Self {
            n,
            rot_group,
            ksi_pows,
        }
    }

    pub fn slots(&self) -> usize {
        self.n / 2
    }

    fn fft_special(&self, vals: &mut [Complex64]) {
        let size = vals.len();
        let m = 2 * self.n;
        bit_reverse_array(vals);
        let mut len = 2;
        while len <= size {
            let lenh = len >> 1;
            let lenq = len << 2;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * m / lenq;
                    let u = vals[i + j];
                    let v = vals[i + j + lenh] * self.ksi_pows[idx];
                    vals[i + j] = u + v;
                    vals[i + j + lenh] = u - v;
                }
            }
            len <<= 1;
        }
    }

    fn fft_special_inv(&self, vals: &mut [Complex64]) {
        let size = vals.len();
        let m = 2 * self.n;
        let mut len = size;
        while len >= 2 {
            let lenh = len >> 1;
            let lenq = len << 2;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (lenq - self.rot_group[j] % lenq) * m / lenq;
                    let u = vals[i + j] + vals[i + j + lenh];
                    let v = (vals[i + j] - vals[i + j + lenh]) * self.ksi_pows[idx];
                    vals[i + j] = u;
                    vals[i + j + lenh] = v;
                }
            }
            len >>= 1;
        }
        bit_reverse_array(vals);
        let inv = 1.0 / size as f64;
        for v in vals.iter_mut() {
            *v *= inv;
        }
    }

    /// Real coefficients (before rounding) of the message scaled by Δ.
    pub fn embed(&self, values: &[Complex64], scale: f64) -> Vec<f64> {
        assert!(values.len() <= self.slots(), "at most N/2 slots");
        let slots = self.slots();
        let mut vals = vec![Complex64::new(0.0, 0.0); slots];
        vals[..values.len()].copy_from_slice(values);
        self.fft_special_inv(&mut vals);
        let mut coeffs = vec![0.0; self.n];
        for (i, v) in vals.iter().enumerate() {
            coeffs[i] = v.re * scale;
            coeffs[i + slots] = v.im * scale;
        }
        coeffs
    }

    /// Slot values of real coefficients divided by Δ.
    pub fn project(&self, coeffs: &[f64], scale: f64) -> Vec<Complex64> {
        let slots = self.slots();
        let mut vals: Vec<Complex64> = (0..slots)
            .map(|i| Complex64::new(coeffs[i] / scale, coeffs[i + slots] / scale))
            .collect();
        self.fft_special(&mut vals);
        vals
    }
}

fn bit_reverse_array(v: &mut [Complex64]) {
    let log = v.len().trailing_zeros();
    for i in 0..v.len() {
        let j = bit_reverse(i, log);
        if i < j {
            v.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_without_rounding() {
        let enc = Encoder::new(64);
        let vals: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new(i as f64 * 0.1, -(i as f64) * 0.05))
            .collect();
        let back = enc.project(&enc.embed(&vals, 1.0), 1.0);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_vector_is_constant_polynomial() {
        let enc = Encoder::new(32);
        let c = enc.embed(&[Complex64::new(2.5, 0.0); 16], 1.0);
        assert!((c[0] - 2.5).abs() < 1e-12);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
    }
}
