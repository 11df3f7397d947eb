/// Security level as a piecewise-linear, strictly increasing function of N / log PQ.
///
/// Anchors are the three tabulated instances plus the origin; beyond the last
/// anchor the line through the origin fitted to all anchors sets the slope.
#[derive(Debug, Clone)]
pub struct SecurityTable {
    anchors: Vec<(f64, f64)>,
    tail_slope: f64,
}

impl Default for SecurityTable {
    fn default() -> Self {
        let n = (1u64 << 17) as f64;
        Self::new(&[(n / 3090.0, 133.4), (n / 3210.0, 128.7), (n / 3160.0, 130.8)])
    }
}

impl SecurityTable {
    /// Builds from (N / log PQ, λ) pairs; panics unless λ increases with the ratio.
    pub fn new(points: &[(f64, f64)]) -> Self {
        let mut anchors = vec![(0.0, 0.0)];
        anchors.extend_from_slice(points);
        anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(
            anchors.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1),
            "anchors must be strictly increasing"
        );
        let (sx, sy) = points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
        Self {
            anchors,
            tail_slope: sy / sx,
        }
    }

    pub fn lambda_of_ratio(&self, ratio: f64) -> f64 {
        let last = *self.anchors.last().unwrap();
        if ratio >= last.0 {
            return last.1 + self.tail_slope * (ratio - last.0);
        }
        let i = self.anchors.partition_point(|a| a.0 <= ratio).max(1);
        let (x0, y0) = self.anchors[i - 1];
        let (x1, y1) = self.anchors[i];
        y0 + (y1 - y0) * (ratio - x0) / (x1 - x0)
    }

    pub fn lambda(&self, n: usize, log_pq: u32) -> f64 {
        self.lambda_of_ratio(n as f64 / log_pq as f64)
    }

    /// Largest log PQ reaching at least `lambda` bits at degree N.
    pub fn max_log_pq(&self, n: usize, lambda: f64) -> u32 {
        let mut lo = 1u32;
        let mut hi = 1 << 16;
        if self.lambda(n, lo) < lambda {
            return 0;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.lambda(n, mid) >= lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_reproduced() {
        let t = SecurityTable::default();
        for (pq, l) in [(3090, 133.4), (3210, 128.7), (3160, 130.8)] {
            assert!((t.lambda(1 << 17, pq) - l).abs() < 1e-9);
        }
    }

    #[test]
    fn strictly_decreasing_in_log_pq() {
        let t = SecurityTable::default();
        for n in [1usize << 15, 1 << 16, 1 << 17, 1 << 18] {
            let mut prev = f64::INFINITY;
            for pq in (200..8000).step_by(7) {
                let l = t.lambda(n, pq);
                assert!(l < prev);
                prev = l;
            }
        }
        let pq = t.max_log_pq(1 << 17, 128.0);
        assert!(t.lambda(1 << 17, pq) >= 128.0 && t.lambda(1 << 17, pq + 1) < 128.0);
    }
}
