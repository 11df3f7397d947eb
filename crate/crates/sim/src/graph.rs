//! Expansion of HE ops into per-limb task graphs.

use std::fmt;

use bts_core::params::CkksInstance;

use crate::config::HardwareConfig;
use crate::trace::TraceOp;
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    Nttu,
    BConvModMult,
    Mmau,
    ModMult,
    ModAdd,
    Exchange,
    NocV,
    NocH,
    Hbm,
}

pub const RESOURCES: [Resource; 9] = [
    Resource::Nttu,
    Resource::BConvModMult,
    Resource::Mmau,
    Resource::ModMult,
    Resource::ModAdd,
    Resource::Exchange,
    Resource::NocV,
    Resource::NocH,
    Resource::Hbm,
];

impl Resource {
    pub fn name(self) -> &'static str {
        match self {
            Resource::Nttu => "NTTU",
            Resource::BConvModMult => "BConvU-ModMult",
            Resource::Mmau => "MMAU",
            Resource::ModMult => "ModMult",
            Resource::ModAdd => "ModAdd",
            Resource::Exchange => "ExchangeUnit",
            Resource::NocV => "NoC-V",
            Resource::NocH => "NoC-H",
            Resource::Hbm => "HBM",
        }
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskKind {
    Ntt,
    Intt,
    Transpose,
    BConvScale,
    BConvAccumulate,
    Elementwise,
    Ssa,
    EvkLoad,
    CtLoad,
    CtStore,
    PtLoad,
    Permute,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Ntt => "ntt",
            TaskKind::Intt => "intt",
            TaskKind::Transpose => "transpose",
            TaskKind::BConvScale => "bconv-scale",
            TaskKind::BConvAccumulate => "bconv-acc",
            TaskKind::Elementwise => "elementwise",
            TaskKind::Ssa => "ssa",
            TaskKind::EvkLoad => "evk-load",
            TaskKind::CtLoad => "ct-load",
            TaskKind::CtStore => "ct-store",
            TaskKind::PtLoad => "pt-load",
            TaskKind::Permute => "permute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferClass {
    Temp,
    Evk,
    /// A limb of the op's output ciphertext.
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferSpec {
    pub bytes: u64,
    pub class: BufferClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub kind: TaskKind,
    pub resource: Resource,
    pub cycles: u64,
    pub hbm_bytes: u64,
    /// Chip-wide scratchpad traffic.
    pub spm_bytes: u64,
    /// Buffer allocated when the task starts.
    pub creates: Option<usize>,
    /// Buffers that must stay alive until the task finishes.
    pub uses: Vec<usize>,
    pub deps: Vec<usize>,
    /// NTTU pipeline stage; stage s may only start at its fixed offset within an epoch.
    pub stage: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpGraph {
    pub tasks: Vec<Task>,
    pub buffers: Vec<BufferSpec>,
}

impl OpGraph {
    pub fn evk_bytes(&self) -> u64 {
        self.tasks
            .iter()
            .filter(|t| t.kind == TaskKind::EvkLoad)
            .map(|t| t.hbm_bytes)
            .sum()
    }

    pub fn output_bytes(&self) -> u64 {
        self.buffers
            .iter()
            .filter(|b| b.class == BufferClass::Output)
            .map(|b| b.bytes)
            .sum()
    }

    pub fn count(&self, kind: TaskKind) -> usize {
        self.tasks.iter().filter(|t| t.kind == kind).count()
    }

    /// Dependencies always point backwards, so the graph is acyclic by construction.
    pub fn is_topological(&self) -> bool {
        self.tasks.iter().enumerate().all(|(i, t)| t.deps.iter().all(|&d| d < i))
    }
}

/// Primitive HE ops the simulator expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeOp {
    HMult,
    HRot { r: usize },
    HAdd,
    PMult,
    PAdd,
    CMult,
    CAdd,
    Rescale,
    /// Level-0 ct raised to L at the start of bootstrapping.
    ModRaise,
}

impl HeOp {
    pub fn from_trace(op: &TraceOp) -> Result<Self, SimError> {
        Ok(match op {
            TraceOp::HMult { .. } => HeOp::HMult,
            TraceOp::HRot { r, .. } => HeOp::HRot { r: *r },
            TraceOp::HAdd { .. } => HeOp::HAdd,
            TraceOp::PMult { .. } => HeOp::PMult,
            TraceOp::PAdd { .. } => HeOp::PAdd,
            TraceOp::CMult { .. } => HeOp::CMult,
            TraceOp::CAdd { .. } => HeOp::CAdd,
            TraceOp::Rescale { .. } => HeOp::Rescale,
            other => return Err(SimError::UnsupportedOp(other.mnemonic().to_string())),
        })
    }

    pub fn is_key_switch(self) -> bool {
        matches!(self, HeOp::HMult | HeOp::HRot { .. })
    }

    pub fn output_level(self, level: usize, max_level: usize) -> usize {
        match self {
            HeOp::Rescale => level - 1,
            HeOp::ModRaise => max_level,
            _ => level,
        }
    }
}

/// Per-task durations in reference cycles for one (instance, machine) pair.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub n: usize,
    pub max_level: usize,
    pub k: usize,
    pub alpha: usize,
    pub l_sub: usize,
    pub limb_bytes: u64,
    /// Residues of one limb held by each PE.
    pub nz: u64,
    pub epoch: u64,
    pub ntt_stages: [u64; 3],
    pub transpose_v: u64,
    pub transpose_h: u64,
    pub exchange: u64,
    pub modmult: u64,
    pub modadd: u64,
    pub bconv_scale: u64,
    pub ssa: u64,
    clock_hz: f64,
    hbm_bw: f64,
    spm_bytes_per_pe_cycle: f64,
    mmau_hz: f64,
    hw: HardwareConfig,
}

impl CostModel {
    pub fn new(ins: &CkksInstance, hw: &HardwareConfig) -> Self {
        let n = ins.n();
        let n_pe = hw.n_pe();
        let nz = (n / n_pe).max(1) as u64;
        let epoch = hw
            .to_ref_cycles(n as f64 * ins.log_n as f64 / (2.0 * n_pe as f64), hw.freq.nttu)
            .max(3);
        let third = epoch / 3;
        let spm_bytes_per_pe_cycle = hw.scratchpad.bandwidth / n_pe as f64 / hw.clock_hz;
        let transpose = |side: usize| {
            let bytes = nz as f64 * 8.0 * (1.0 - 1.0 / side as f64);
            hw.to_ref_cycles(bytes * 8.0 / hw.noc.port_bits as f64, hw.freq.noc)
        };
        let mut cm = Self {
            n,
            max_level: ins.max_level,
            k: ins.k(),
            alpha: ins.alpha(),
            l_sub: hw.l_sub,
            limb_bytes: n as u64 * 8,
            nz,
            epoch,
            ntt_stages: [third, third, epoch - 2 * third],
            transpose_v: transpose(hw.grid.rows),
            transpose_h: transpose(hw.grid.cols),
            exchange: hw.to_ref_cycles(nz as f64, hw.freq.exchange),
            modmult: hw.to_ref_cycles(nz as f64, hw.freq.modmult),
            modadd: hw.to_ref_cycles(nz as f64, hw.freq.modadd),
            bconv_scale: hw.to_ref_cycles(nz as f64, hw.freq.bconv_modmult),
            ssa: 0,
            clock_hz: hw.clock_hz,
            hbm_bw: hw.hbm_bandwidth(),
            spm_bytes_per_pe_cycle,
            mmau_hz: hw.freq.mmau,
            hw: hw.clone(),
        };
        // four-term fused multiply-add: three reads and one write per residue
        cm.ssa = cm.mmau_cycles(nz as f64, 4.0 * nz as f64 * 8.0);
        cm
    }

    /// MMAU cycles bounded below by the per-PE scratchpad bandwidth.
    fn mmau_cycles(&self, mmau_cycles: f64, spm_bytes_per_pe: f64) -> u64 {
        let compute = self.hw.to_ref_cycles(mmau_cycles, self.mmau_hz);
        let memory = (spm_bytes_per_pe / self.spm_bytes_per_pe_cycle).ceil() as u64;
        compute.max(memory)
    }

    /// Accumulating one l_sub group into |T| target partial sums.
    pub fn bconv_accumulate(&self, targets: usize) -> u64 {
        let t = targets as f64;
        self.mmau_cycles(self.nz as f64 * t, 2.0 * t * self.nz as f64 * 8.0)
    }

    pub fn load_cycles(&self, bytes: u64) -> u64 {
        (bytes as f64 / self.hbm_bw * self.clock_hz).ceil() as u64
    }

    /// Port-limited cycles of a stage that moves `bytes` out of every PE.
    pub fn noc_cycles(&self, bytes_per_pe: u64) -> u64 {
        self.hw.to_ref_cycles(bytes_per_pe as f64 * 8.0 / self.hw.noc.port_bits as f64, self.hw.freq.noc)
    }

    /// Start offset of NTTU stage `s` within an epoch.
    pub fn stage_offset(&self, s: usize) -> u64 {
        self.ntt_stages[..s].iter().sum()
    }

    pub fn active_slices(&self, level: usize) -> usize {
        (level + 1).div_ceil(self.alpha)
    }
}

struct Builder<'a> {
    g: OpGraph,
    c: &'a CostModel,
}

/// NoC cycles of one automorphism stage, per limb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PermutationCycles {
    pub vertical: u64,
    pub horizontal: u64,
}

impl<'a> Builder<'a> {
    fn buffer(&mut self, bytes: u64, class: BufferClass) -> usize {
        self.g.buffers.push(BufferSpec { bytes, class });
        self.g.buffers.len() - 1
    }

    #[allow(clippy::too_many_arguments)]
    fn task(
        &mut self,
        kind: TaskKind,
        resource: Resource,
        cycles: u64,
        spm_bytes: u64,
        deps: Vec<usize>,
        creates: Option<usize>,
        uses: Vec<usize>,
    ) -> usize {
        let hbm_bytes = if resource == Resource::Hbm { spm_bytes } else { 0 };
        self.g.tasks.push(Task {
            kind,
            resource,
            cycles,
            hbm_bytes,
            spm_bytes,
            creates,
            uses,
            deps,
            stage: None,
        });
        self.g.tasks.len() - 1
    }

    fn staged(&mut self, stage: usize, task: usize) -> usize {
        self.g.tasks[task].stage = Some(stage);
        task
    }

    fn load(&mut self, kind: TaskKind, bytes: u64, class: BufferClass, deps: Vec<usize>) -> (usize, usize) {
        let buf = self.buffer(bytes, class);
        let t = self.task(kind, Resource::Hbm, self.c.load_cycles(bytes), bytes, deps, Some(buf), vec![]);
        (t, buf)
    }

    /// z step, column transpose, y step, row transpose, x step.
    fn ntt(&mut self, inverse: bool, deps: Vec<usize>, buf: usize, creates: bool) -> usize {
        let kind = if inverse { TaskKind::Intt } else { TaskKind::Ntt };
        let lb = self.c.limb_bytes;
        let [s0, s1, s2] = self.c.ntt_stages;
        let first = self.task(kind, Resource::Nttu, s0, lb, deps, creates.then_some(buf), vec![buf]);
        let first = self.staged(0, first);
        let v = self.task(TaskKind::Transpose, Resource::NocV, self.c.transpose_v, 0, vec![first], None, vec![buf]);
        let mid = self.task(kind, Resource::Nttu, s1, 0, vec![v], None, vec![buf]);
        let mid = self.staged(1, mid);
        let h = self.task(TaskKind::Transpose, Resource::NocH, self.c.transpose_h, 0, vec![mid], None, vec![buf]);
        let last = self.task(kind, Resource::Nttu, s2, lb, vec![h], None, vec![buf]);
        self.staged(2, last)
    }

    fn elementwise(
        &mut self,
        resource: Resource,
        ops: u64,
        deps: Vec<usize>,
        creates: Option<usize>,
        uses: Vec<usize>,
    ) -> usize {
        let per = if resource == Resource::ModMult { self.c.modmult } else { self.c.modadd };
        let spm = 3 * ops * self.c.limb_bytes;
        self.task(TaskKind::Elementwise, resource, ops * per, spm, deps, creates, uses)
    }

    /// One BConv: l_sub groups of (scale, accumulate) into a fresh partial-sum buffer.
    fn bconv(&mut self, sources: &[(usize, usize)], targets: usize) -> (usize, usize) {
        let partial = self.buffer(targets as u64 * self.c.limb_bytes, BufferClass::Temp);
        let acc_cycles = self.c.bconv_accumulate(targets);
        let mut prev: Option<usize> = None;
        for group in sources.chunks(self.c.l_sub) {
            let deps: Vec<usize> = group.iter().map(|&(t, _)| t).collect();
            let uses: Vec<usize> = group.iter().map(|&(_, b)| b).collect();
            let g = group.len() as u64;
            let scale = self.task(
                TaskKind::BConvScale,
                Resource::BConvModMult,
                g * self.c.bconv_scale,
                2 * g * self.c.limb_bytes,
                deps,
                None,
                uses,
            );
            let mut acc_deps = vec![scale];
            acc_deps.extend(prev);
            let creates = prev.is_none().then_some(partial);
            prev = Some(self.task(
                TaskKind::BConvAccumulate,
                Resource::Mmau,
                acc_cycles,
                2 * targets as u64 * self.c.limb_bytes,
                acc_deps,
                creates,
                vec![partial],
            ));
        }
        (prev.expect("at least one source limb"), partial)
    }

    /// Generalized key switching of `input` (NTT-domain limbs on C_ℓ), with
    /// SSA adding `addends[p]` into output polynomial p. Returns nothing; the
    /// SSA tasks create the output limbs.
    fn key_switch(&mut self, level: usize, input: &[(usize, usize)], addends: [Option<&[(usize, usize)]>; 2]) {
        let c = self.c;
        let lb = c.limb_bytes;
        let q_limbs = level + 1;
        let ext = q_limbs + c.k;
        let slices = c.active_slices(level);

        // ModUp
        let coeff: Vec<(usize, usize)> = input
            .iter()
            .map(|&(t, b)| {
                let buf = self.buffer(lb, BufferClass::Temp);
                let last = self.ntt(true, vec![t], buf, true);
                self.task_uses_extend(last, b);
                (last, buf)
            })
            .collect();
        // modup[j][pos] = (ready task, buffer holding the limb)
        let mut modup: Vec<Vec<(usize, usize)>> = Vec::with_capacity(slices);
        for j in 0..slices {
            let own: Vec<usize> = (j * c.alpha..((j + 1) * c.alpha).min(q_limbs)).collect();
            let targets = ext - own.len();
            let src: Vec<(usize, usize)> = own.iter().map(|&i| coeff[i]).collect();
            let (done, partial) = self.bconv(&src, targets);
            let row = (0..ext)
                .map(|pos| {
                    if own.contains(&pos) {
                        input[pos]
                    } else {
                        (self.ntt(false, vec![done], partial, false), partial)
                    }
                })
                .collect();
            modup.push(row);
        }

        // evk stream: special-prime limbs first so ModDown can start early
        let order: Vec<usize> = (q_limbs..ext).chain(0..q_limbs).collect();
        let mut evk = vec![Vec::new(); ext];
        for &pos in &order {
            for _ in 0..slices {
                evk[pos].push(self.load(TaskKind::EvkLoad, 2 * lb, BufferClass::Evk, vec![]));
            }
        }

        // inner product, both output polynomials accumulated into one buffer
        let mut acc = vec![(0, 0); ext];
        for &pos in &order {
            let mut deps: Vec<usize> = evk[pos].iter().map(|&(t, _)| t).collect();
            let mut uses: Vec<usize> = evk[pos].iter().map(|&(_, b)| b).collect();
            for row in &modup {
                deps.push(row[pos].0);
                uses.push(row[pos].1);
            }
            let buf = self.buffer(2 * lb, BufferClass::Temp);
            let s = slices as u64;
            let mut t = self.elementwise(Resource::ModMult, 2 * s, deps, Some(buf), uses);
            if slices > 1 {
                t = self.elementwise(Resource::ModAdd, 2 * (s - 1), vec![t], None, vec![buf]);
            }
            acc[pos] = (t, buf);
        }

        // ModDown and SSA per output polynomial
        for addend in addends.iter() {
            let p_part: Vec<(usize, usize)> = (q_limbs..ext)
                .map(|pos| {
                    let buf = self.buffer(lb, BufferClass::Temp);
                    let last = self.ntt(true, vec![acc[pos].0], buf, true);
                    self.task_uses_extend(last, acc[pos].1);
                    (last, buf)
                })
                .collect();
            let (done, partial) = self.bconv(&p_part, q_limbs);
            for i in 0..q_limbs {
                let conv = self.ntt(false, vec![done], partial, false);
                let out = self.buffer(lb, BufferClass::Output);
                let mut deps = vec![acc[i].0, conv];
                let mut uses = vec![acc[i].1, partial];
                if let Some(a) = addend {
                    deps.push(a[i].0);
                    uses.push(a[i].1);
                }
                self.task(TaskKind::Ssa, Resource::Mmau, c.ssa, 4 * lb, deps, Some(out), uses);
            }
        }
    }

    fn task_uses_extend(&mut self, task: usize, buf: usize) {
        self.g.tasks[task].uses.push(buf);
    }
}

/// Expands one HE op at input level `level` with all operands resident.
pub fn expand(
    op: HeOp,
    level: usize,
    cost: &CostModel,
    perm: PermutationCycles,
) -> Result<OpGraph, SimError> {
    if level > cost.max_level {
        return Err(SimError::Level(format!("level {level} exceeds L = {}", cost.max_level)));
    }
    if matches!(op, HeOp::HMult | HeOp::Rescale) && level == 0 {
        return Err(SimError::Level("level underflow".into()));
    }
    let mut b = Builder { g: OpGraph::default(), c: cost };
    let lb = cost.limb_bytes;
    let limbs = level + 1;
    match op {
        HeOp::HMult => {
            let mut tensor = Vec::with_capacity(limbs);
            for _ in 0..limbs {
                let buf = b.buffer(3 * lb, BufferClass::Temp);
                let m = b.elementwise(Resource::ModMult, 4, vec![], Some(buf), vec![]);
                let a = b.elementwise(Resource::ModAdd, 1, vec![m], None, vec![buf]);
                tensor.push((a, buf));
            }
            let t = tensor.clone();
            b.key_switch(level, &tensor, [Some(&t), Some(&t)]);
        }
        HeOp::HRot { .. } => {
            let mut permuted = [Vec::with_capacity(limbs), Vec::with_capacity(limbs)];
            for poly in permuted.iter_mut() {
                for _ in 0..limbs {
                    let buf = b.buffer(lb, BufferClass::Temp);
                    let x = b.task(TaskKind::Permute, Resource::Exchange, cost.exchange, 2 * lb, vec![], Some(buf), vec![]);
                    let mut last = x;
                    if perm.vertical > 0 {
                        last = b.task(TaskKind::Permute, Resource::NocV, perm.vertical, 0, vec![last], None, vec![buf]);
                    }
                    if perm.horizontal > 0 {
                        last = b.task(TaskKind::Permute, Resource::NocH, perm.horizontal, 0, vec![last], None, vec![buf]);
                    }
                    poly.push((last, buf));
                }
            }
            let [pb, pa] = permuted;
            b.key_switch(level, &pa, [Some(&pb), None]);
        }
        HeOp::HAdd | HeOp::CAdd | HeOp::CMult => {
            let (res, ops) = match op {
                HeOp::HAdd => (Resource::ModAdd, 2),
                HeOp::CAdd => (Resource::ModAdd, 1),
                _ => (Resource::ModMult, 2),
            };
            for _ in 0..limbs {
                let out = b.buffer(2 * lb, BufferClass::Output);
                b.elementwise(res, ops, vec![], Some(out), vec![]);
            }
        }
        HeOp::PMult | HeOp::PAdd => {
            let (res, ops) = if op == HeOp::PMult { (Resource::ModMult, 2) } else { (Resource::ModAdd, 1) };
            for _ in 0..limbs {
                let (t, pt) = b.load(TaskKind::PtLoad, lb, BufferClass::Temp, vec![]);
                let out = b.buffer(2 * lb, BufferClass::Output);
                b.elementwise(res, ops, vec![t], Some(out), vec![pt]);
            }
        }
        HeOp::Rescale => {
            for _ in 0..2 {
                let last = b.buffer(lb, BufferClass::Temp);
                let it = b.ntt(true, vec![], last, true);
                for _ in 0..level {
                    let buf = b.buffer(lb, BufferClass::Temp);
                    let nt = b.ntt(false, vec![it], buf, true);
                    b.task_uses_extend(nt, last);
                    let sub = b.elementwise(Resource::ModAdd, 1, vec![nt], None, vec![buf]);
                    let out = b.buffer(lb, BufferClass::Output);
                    b.elementwise(Resource::ModMult, 1, vec![sub], Some(out), vec![buf]);
                }
            }
        }
        HeOp::ModRaise => {
            for _ in 0..2 {
                let coeff = b.buffer(lb, BufferClass::Temp);
                let it = b.ntt(true, vec![], coeff, true);
                for _ in 0..=cost.max_level {
                    let out = b.buffer(lb, BufferClass::Output);
                    let nt = b.ntt(false, vec![it], out, true);
                    b.task_uses_extend(nt, coeff);
                }
            }
        }
    }
    Ok(b.g)
}

/// `limbs` independent forward NTTs, each on a fresh resident limb.
pub fn ntt_stream(limbs: usize, cost: &CostModel) -> OpGraph {
    let mut b = Builder { g: OpGraph::default(), c: cost };
    for _ in 0..limbs {
        let buf = b.buffer(cost.limb_bytes, BufferClass::Temp);
        b.ntt(false, vec![], buf, true);
    }
    b.g
}

#[cfg(test)]
mod tests {
    use super::*;
    use bts_core::params::evk_bytes_at_level;

    fn ins1() -> (CkksInstance, CostModel) {
        let ins = CkksInstance::by_name("ins1").unwrap();
        let c = CostModel::new(&ins, &HardwareConfig::default());
        (ins, c)
    }

    #[test]
    fn epoch_and_noc_lengths() {
        let (_, c) = ins1();
        assert_eq!(c.epoch, 544);
        assert_eq!(c.ntt_stages.iter().sum::<u64>(), 544);
        assert_eq!(c.transpose_v, 331);
        assert_eq!(c.transpose_h, 336);
        assert_eq!(c.noc_cycles(512), 342);
    }

    #[test]
    fn hmult_streams_full_evk() {
        let (ins, c) = ins1();
        let g = expand(HeOp::HMult, 27, &c, PermutationCycles::default()).unwrap();
        assert_eq!(g.evk_bytes(), 117_440_512);
        assert_eq!(g.evk_bytes(), evk_bytes_at_level(&ins, 27));
        assert!(g.is_topological());
        // iNTT d2, ModUp NTT, 2 × P-part iNTT, 2 × ModDown NTT
        assert_eq!(g.count(TaskKind::Ntt) + g.count(TaskKind::Intt), 3 * (28 + 28 + 56 + 56));
        assert_eq!(g.output_bytes(), 2 * 28 * c.limb_bytes);
    }

    #[test]
    fn every_ntt_takes_one_epoch_of_nttu() {
        let (_, c) = ins1();
        let g = expand(HeOp::Rescale, 27, &c, PermutationCycles::default()).unwrap();
        let nttu: u64 = g.tasks.iter().filter(|t| t.resource == Resource::Nttu).map(|t| t.cycles).sum();
        assert_eq!(nttu, (2 + 2 * 27) * 544);
    }

    #[test]
    fn hadd_has_no_evk() {
        let (_, c) = ins1();
        let g = expand(HeOp::HAdd, 27, &c, PermutationCycles::default()).unwrap();
        assert_eq!(g.evk_bytes(), 0);
        assert!(g.tasks.iter().all(|t| t.kind == TaskKind::Elementwise));
    }

    #[test]
    fn partial_slices_at_low_level() {
        let ins = CkksInstance::by_name("ins2").unwrap();
        let c = CostModel::new(&ins, &HardwareConfig::default());
        let g = expand(HeOp::HRot { r: 1 }, 5, &c, PermutationCycles { vertical: 342, horizontal: 342 }).unwrap();
        assert_eq!(g.evk_bytes(), evk_bytes_at_level(&ins, 5));
        assert_eq!(g.count(TaskKind::Permute), 3 * 2 * 6);
    }

    #[test]
    fn unsupported_and_underflow() {
        let (_, c) = ins1();
        let boot = TraceOp::Boot { a: "x".into(), out: "y".into() };
        assert!(matches!(HeOp::from_trace(&boot), Err(SimError::UnsupportedOp(_))));
        assert!(expand(HeOp::HMult, 0, &c, PermutationCycles::default()).is_err());
    }
}
