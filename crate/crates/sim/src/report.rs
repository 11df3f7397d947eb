//! Simulation results, energy accounting and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::config::HardwareConfig;
use crate::graph::{Resource, TaskKind, RESOURCES};

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRecord {
    pub start: u64,
    pub end: u64,
    pub resource: Resource,
    pub op_id: String,
    pub kind: TaskKind,
    pub spm_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpSpan {
    pub op_id: String,
    pub name: String,
    pub start: u64,
    pub end: u64,
}

/// Busy fractions of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyRow {
    pub epoch: u64,
    pub busy: BTreeMap<Resource, f64>,
    pub spm_bandwidth: f64,
    pub resident_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub total_cycles: u64,
    pub clock_hz: f64,
    pub epoch_cycles: u64,
    pub slots: usize,
    /// Top-level HMULTs, excluding those inside BOOT.
    pub mult_levels: usize,
    pub busy_cycles: BTreeMap<Resource, u64>,
    pub hbm_bytes: u64,
    pub ct_store_bytes: u64,
    pub evk_refetch_bytes: u64,
    pub spm_bytes: u64,
    pub peak_resident_bytes: u64,
    pub peak_temp_bytes: u64,
    pub capacity_bytes: u64,
    pub energy: BTreeMap<&'static str, f64>,
    pub timeline: Vec<TimelineRecord>,
    pub occupancy: Vec<OccupancyRow>,
    pub ops: Vec<OpSpan>,
    hbm_bandwidth: f64,
    spm_bandwidth: f64,
}

impl SimReport {
    pub(crate) fn new(hw: &HardwareConfig, epoch_cycles: u64, slots: usize) -> Self {
        Self {
            total_cycles: 0,
            clock_hz: hw.clock_hz,
            epoch_cycles,
            slots,
            mult_levels: 0,
            busy_cycles: RESOURCES.iter().map(|&r| (r, 0)).collect(),
            hbm_bytes: 0,
            ct_store_bytes: 0,
            evk_refetch_bytes: 0,
            spm_bytes: 0,
            peak_resident_bytes: 0,
            peak_temp_bytes: 0,
            capacity_bytes: hw.scratchpad.capacity_bytes,
            energy: BTreeMap::new(),
            timeline: Vec::new(),
            occupancy: Vec::new(),
            ops: Vec::new(),
            hbm_bandwidth: hw.hbm_bandwidth(),
            spm_bandwidth: hw.scratchpad.bandwidth,
        }
    }

    pub fn seconds(&self) -> f64 {
        self.total_cycles as f64 / self.clock_hz
    }

    pub fn busy_fraction(&self, r: Resource) -> f64 {
        if self.total_cycles == 0 {
            return 0.0;
        }
        (self.busy_cycles[&r] as f64 / self.total_cycles as f64).min(1.0)
    }

    pub fn hbm_achieved_bandwidth(&self) -> f64 {
        if self.total_cycles == 0 {
            return 0.0;
        }
        self.hbm_bytes as f64 / self.seconds()
    }

    pub fn hbm_utilization(&self) -> f64 {
        self.hbm_achieved_bandwidth() / self.hbm_bandwidth
    }

    pub fn spm_utilization(&self) -> f64 {
        if self.total_cycles == 0 {
            return 0.0;
        }
        (self.spm_bytes as f64 / self.seconds() / self.spm_bandwidth).min(1.0)
    }

    pub fn energy_joules(&self) -> f64 {
        self.energy.values().sum()
    }

    /// Whole-run time over (mult levels · slots); `None` without top-level HMULTs.
    pub fn tmult_a_slot(&self) -> Option<f64> {
        (self.mult_levels > 0).then(|| self.seconds() / (self.mult_levels as f64 * self.slots as f64))
    }

    pub(crate) fn finalize(&mut self, mem_events: &[(u64, u64)], hw: &HardwareConfig) {
        self.energy = energy(self, hw);
        self.occupancy = occupancy(self, mem_events);
    }

    pub fn report_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        let mut row = |k: &str, v: String| {
            let _ = writeln!(s, "{k},{v}");
        };
        row("total_cycles", self.total_cycles.to_string());
        row("total_seconds", format!("{:.9e}", self.seconds()));
        row("clock_hz", format!("{:.6e}", self.clock_hz));
        row("epoch_cycles", self.epoch_cycles.to_string());
        for r in RESOURCES {
            row(&format!("busy_{}", r.name()), format!("{:.6}", self.busy_fraction(r)));
        }
        row("hbm_bytes", self.hbm_bytes.to_string());
        row("hbm_ct_store_bytes", self.ct_store_bytes.to_string());
        row("hbm_evk_refetch_bytes", self.evk_refetch_bytes.to_string());
        row("hbm_achieved_bandwidth", format!("{:.6e}", self.hbm_achieved_bandwidth()));
        row("hbm_utilization", format!("{:.6}", self.hbm_utilization()));
        row("spm_utilization", format!("{:.6}", self.spm_utilization()));
        row("peak_resident_bytes", self.peak_resident_bytes.to_string());
        row("peak_temp_bytes", self.peak_temp_bytes.to_string());
        row("scratchpad_capacity_bytes", self.capacity_bytes.to_string());
        for (k, v) in &self.energy {
            row(&format!("energy_{k}_j"), format!("{v:.9e}"));
        }
        row("energy_total_j", format!("{:.9e}", self.energy_joules()));
        row("energy_static", "excluded".into());
        row("ops", self.ops.len().to_string());
        if let Some(t) = self.tmult_a_slot() {
            row("mult_levels", self.mult_levels.to_string());
            row("tmult_a_slot_ns", format!("{:.6}", t * 1e9));
        }
        s
    }

    pub fn timeline_csv(&self) -> String {
        let mut s = String::from("start_cycle,end_cycle,resource,op_id,task_kind\n");
        for t in &self.timeline {
            let _ = writeln!(s, "{},{},{},{},{}", t.start, t.end, t.resource.name(), t.op_id, t.kind.name());
        }
        s
    }

    pub fn occupancy_csv(&self) -> String {
        let mut s = String::from("epoch,start_cycle");
        for r in RESOURCES {
            let _ = write!(s, ",{}", r.name());
        }
        s.push_str(",scratchpad_bw,resident_bytes\n");
        for row in &self.occupancy {
            let _ = write!(s, "{},{}", row.epoch, row.epoch * self.epoch_cycles);
            for r in RESOURCES {
                let _ = write!(s, ",{:.4}", row.busy[&r]);
            }
            let _ = writeln!(s, ",{:.4},{}", row.spm_bandwidth, row.resident_bytes);
        }
        s
    }

    pub fn write_csvs(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.report_csv())?;
        std::fs::write(dir.join("timeline.csv"), self.timeline_csv())?;
        std::fs::write(dir.join("occupancy.csv"), self.occupancy_csv())?;
        Ok(())
    }

    /// Largest resident byte count over the per-epoch samples.
    pub fn audited_peak(&self) -> u64 {
        self.occupancy.iter().map(|r| r.resident_bytes).max().unwrap_or(0).max(self.peak_resident_bytes)
    }
}

/// Joules per component: peak power × busy fraction × wall time. Idle and
/// static power are left out.
pub fn energy(report: &SimReport, hw: &HardwareConfig) -> BTreeMap<&'static str, f64> {
    let t = report.seconds();
    let n_pe = hw.n_pe() as f64;
    let pe = &hw.power.pe_mw;
    let chip = &hw.power.chip_w;
    let b = |r| report.busy_fraction(r);
    let fu = [Resource::Nttu, Resource::BConvModMult, Resource::Mmau, Resource::ModMult, Resource::ModAdd, Resource::Exchange];
    let rf = fu.iter().map(|&r| b(r)).fold(0.0, f64::max);
    let noc = (b(Resource::NocV) + b(Resource::NocH)) / 2.0;
    let hbm = report.hbm_utilization().min(1.0);
    let mut e = BTreeMap::new();
    let mut pe_term = |name, mw: f64, frac: f64| {
        e.insert(name, mw * 1e-3 * n_pe * frac * t);
    };
    pe_term("scratchpad", pe.scratchpad, report.spm_utilization());
    pe_term("register_file", pe.register_file, rf);
    pe_term("nttu", pe.nttu, b(Resource::Nttu));
    pe_term("bconv_modmult", pe.bconv_modmult, b(Resource::BConvModMult));
    pe_term("mmau", pe.mmau, b(Resource::Mmau));
    pe_term("exchange", pe.exchange, b(Resource::Exchange));
    pe_term("modmult", pe.modmult, b(Resource::ModMult));
    pe_term("modadd", pe.modadd, b(Resource::ModAdd));
    e.insert("inter_pe_noc", chip.inter_pe_noc * noc * t);
    e.insert("global_bru", chip.global_bru * b(Resource::Nttu) * t);
    e.insert("local_bru", chip.local_bru * b(Resource::Nttu) * t);
    e.insert("hbm_noc", chip.hbm_noc * hbm * t);
    e.insert("hbm", chip.hbm * hbm * t);
    e.insert("pcie", 0.0);
    e
}

fn occupancy(report: &SimReport, mem_events: &[(u64, u64)]) -> Vec<OccupancyRow> {
    let ep = report.epoch_cycles.max(1);
    let n = report.total_cycles.div_ceil(ep) as usize;
    if n == 0 {
        return Vec::new();
    }
    let mut busy: BTreeMap<Resource, Vec<u64>> = RESOURCES.iter().map(|&r| (r, vec![0; n])).collect();
    let mut spm = vec![0.0f64; n];
    for rec in &report.timeline {
        let lane = busy.get_mut(&rec.resource).unwrap();
        let dur = (rec.end - rec.start).max(1) as f64;
        let mut c = rec.start;
        while c < rec.end {
            let e = (c / ep) as usize;
            let stop = ((e as u64 + 1) * ep).min(rec.end);
            lane[e] += stop - c;
            c = stop;
        }
        let bytes = rec.spm_bytes;
        if bytes > 0 {
            let mut c = rec.start;
            while c < rec.end {
                let e = (c / ep) as usize;
                let stop = ((e as u64 + 1) * ep).min(rec.end);
                spm[e] += bytes as f64 * (stop - c) as f64 / dur;
                c = stop;
            }
        }
    }
    let spm_per_epoch = report.spm_bandwidth * ep as f64 / report.clock_hz;
    let mut resident = vec![0u64; n];
    let mut cur = 0u64;
    let mut it = mem_events.iter().peekable();
    for (e, slot) in resident.iter_mut().enumerate() {
        let end = (e as u64 + 1) * ep;
        let mut peak = cur;
        while let Some(&&(t, used)) = it.peek() {
            if t >= end {
                break;
            }
            cur = used;
            peak = peak.max(used);
            it.next();
        }
        *slot = peak;
    }
    (0..n)
        .map(|e| OccupancyRow {
            epoch: e as u64,
            busy: busy.iter().map(|(&r, v)| (r, v[e] as f64 / ep as f64)).collect(),
            spm_bandwidth: (spm[e] / spm_per_epoch).min(1.0),
            resident_bytes: resident[e],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_machine_costs_nothing() {
        let hw = HardwareConfig::default();
        let mut r = SimReport::new(&hw, 544, 1 << 16);
        r.total_cycles = 1_000_000;
        r.finalize(&[(0, 0)], &hw);
        assert_eq!(r.energy_joules(), 0.0);
        assert_eq!(r.occupancy.len(), 1_000_000usize.div_ceil(544));
        assert!(r.tmult_a_slot().is_none());
    }

    #[test]
    fn energy_is_power_times_busy_time() {
        let hw = HardwareConfig::default();
        let mut r = SimReport::new(&hw, 544, 1 << 16);
        r.total_cycles = 1_200_000;
        r.busy_cycles.insert(Resource::Nttu, 600_000);
        r.finalize(&[(0, 0)], &hw);
        let t = 1e-3;
        let nttu = hw.power.pe_mw.nttu * 1e-3 * 2048.0 * 0.5 * t;
        assert!((r.energy["nttu"] - nttu).abs() < 1e-12);
        assert!((r.energy["register_file"] - hw.power.pe_mw.register_file * 1e-3 * 2048.0 * 0.5 * t).abs() < 1e-12);
        assert_eq!(r.energy["hbm"], 0.0);
    }

    #[test]
    fn occupancy_splits_records_across_epochs() {
        let hw = HardwareConfig::default();
        let mut r = SimReport::new(&hw, 100, 1);
        r.total_cycles = 300;
        r.timeline.push(TimelineRecord {
            start: 50,
            end: 250,
            resource: Resource::ModMult,
            op_id: "1".into(),
            kind: TaskKind::Elementwise,
            spm_bytes: 0,
        });
        r.busy_cycles.insert(Resource::ModMult, 200);
        r.finalize(&[(0, 0), (120, 10), (130, 5)], &hw);
        let busy: Vec<f64> = r.occupancy.iter().map(|o| o.busy[&Resource::ModMult]).collect();
        assert_eq!(busy, vec![0.5, 1.0, 0.5]);
        let res: Vec<u64> = r.occupancy.iter().map(|o| o.resident_bytes).collect();
        assert_eq!(res, vec![0, 10, 5]);
    }
}
