use std::fmt::Write as _;
use std::ops::RangeInclusive;

use super::{amortized_mult_per_slot, BootSchedule, CkksInstance, SecurityTable};

pub const SWEEP_HEADER: &str = "N,L,dnum,logPQ,lambda,tmult_a_slot_ns,valid";

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub log_n: RangeInclusive<u32>,
    pub levels: RangeInclusive<usize>,
    /// `None` enumerates every dnum in 1..=L+1.
    pub dnums: Option<RangeInclusive<usize>>,
    pub mem_bw: f64,
    pub log_q0_bits: u32,
    pub log_q_bits: u32,
    pub log_p_bits: u32,
    pub schedule: BootSchedule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            log_n: 15..=18,
            levels: 10..=120,
            dnums: None,
            mem_bw: 1e12,
            log_q0_bits: 60,
            log_q_bits: 50,
            log_p_bits: 60,
            schedule: BootSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub max_level: usize,
    pub dnum: usize,
    pub log_pq: Option<u32>,
    pub lambda: Option<f64>,
    pub tmult_a_slot_ns: Option<f64>,
    pub valid: bool,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{},{},", self.n, self.max_level, self.dnum);
        if let Some(v) = self.log_pq {
            let _ = write!(s, "{v}");
        }
        s.push(',');
        if let Some(v) = self.lambda {
            let _ = write!(s, "{v:.2}");
        }
        s.push(',');
        if let Some(v) = self.tmult_a_slot_ns {
            let _ = write!(s, "{v:.4}");
        }
        let _ = write!(s, ",{}", self.valid);
        s
    }

    pub fn instance(&self, cfg: &SweepConfig) -> CkksInstance {
        CkksInstance {
            log_q0_bits: cfg.log_q0_bits,
            log_q_bits: cfg.log_q_bits,
            log_p_bits: cfg.log_p_bits,
            l_boot: cfg.schedule.l_boot,
            ..CkksInstance::flagship("sweep", self.n.trailing_zeros(), self.max_level, self.dnum)
        }
    }
}

/// Evaluates every (N, L, dnum) point of the grid in a fixed order.
pub fn sweep(cfg: &SweepConfig) -> Vec<SweepRow> {
    let table = SecurityTable::default();
    let mut rows = Vec::new();
    for log_n in cfg.log_n.clone() {
        let n = 1usize << log_n;
        for l in cfg.levels.clone() {
            let dnums = cfg.dnums.clone().unwrap_or(1..=l + 1);
            for dnum in dnums {
                let mut row = SweepRow {
                    n,
                    max_level: l,
                    dnum,
                    log_pq: None,
                    lambda: None,
                    tmult_a_slot_ns: None,
                    valid: false,
                };
                let ins = row.instance(cfg);
                if ins.validate().is_ok() {
                    let log_pq = ins.log_pq();
                    row.log_pq = Some(log_pq);
                    row.lambda = Some(table.lambda(n, log_pq));
                    if ins.check_bootstrappable().is_ok() {
                        row.valid = true;
                        row.tmult_a_slot_ns = amortized_mult_per_slot(&ins, &cfg.schedule, cfg.mem_bw)
                            .ok()
                            .map(|t| t * 1e9);
                    }
                }
                rows.push(row);
            }
        }
    }
    rows
}

/// Fastest valid row at degree N with λ ≥ `lambda_min`.
pub fn best_at_security(rows: &[SweepRow], n: usize, lambda_min: f64) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.n == n && r.valid && r.lambda.is_some_and(|l| l >= lambda_min))
        .filter(|r| r.tmult_a_slot_ns.is_some())
        .min_by(|a, b| a.tmult_a_slot_ns.unwrap().total_cmp(&b.tmult_a_slot_ns.unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_flags() {
        let cfg = SweepConfig {
            log_n: 17..=17,
            levels: 18..=21,
            ..Default::default()
        };
        let rows = sweep(&cfg);
        assert_eq!(rows.len(), 19 + 20 + 21 + 22);
        assert!(rows.iter().filter(|r| r.max_level <= 19).all(|r| !r.valid));
        let bad = rows.iter().find(|r| r.max_level == 20 && r.dnum == 2).unwrap();
        assert!(!bad.valid && bad.log_pq.is_none());
        assert_eq!(bad.to_csv(), "131072,20,2,,,,false");
        let good = rows.iter().find(|r| r.max_level == 20 && r.dnum == 1).unwrap();
        assert!(good.valid && good.tmult_a_slot_ns.is_some());
    }

    #[test]
    fn lambda_decreases_with_log_pq() {
        let cfg = SweepConfig {
            log_n: 16..=16,
            levels: 20..=40,
            dnums: Some(1..=1),
            ..Default::default()
        };
        let rows = sweep(&cfg);
        for w in rows.windows(2) {
            assert!(w[1].log_pq > w[0].log_pq);
            assert!(w[1].lambda < w[0].lambda);
        }
    }
}
