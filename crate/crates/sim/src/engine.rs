//! Event-driven list scheduler over the machine's exclusive resources.
//!
//! Ops run in trace order behind a compute barrier. The op after the current
//! one is instantiated early so its HBM loads (evk, plaintexts, evicted cts)
//! stream while the current op computes.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use bts_core::params::{BootSchedule, CkksInstance};
use bts_core::transform::{decompose_permutation, GridMap};

use crate::config::HardwareConfig;
use crate::graph::{expand, BufferClass, CostModel, HeOp, OpGraph, PermutationCycles, Resource, TaskKind, RESOURCES};
use crate::noc::permutation_cycles;
use crate::report::{OpSpan, SimReport, TimelineRecord};
use crate::trace::{Trace, TraceOp};
use crate::SimError;

#[derive(Debug, Clone)]
enum OpKind {
    Decl { offchip: bool },
    He(HeOp),
    /// A task graph supplied directly, everything resident.
    Graph(OpGraph),
}

#[derive(Debug, Clone)]
struct Lowered {
    id: String,
    name: &'static str,
    kind: OpKind,
    level: usize,
    inputs: Vec<usize>,
    output: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Absent,
    Resident,
    Evicted,
    Freed,
}

#[derive(Debug, Clone)]
struct Version {
    level: usize,
    reads_left: usize,
    is_final: bool,
    state: VState,
    bytes: u64,
    pins: usize,
    last_touch: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TState {
    Pending,
    Running,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Temp,
    Evk,
    Ct(usize),
}

#[derive(Debug, Clone)]
struct RtBuf {
    bytes: u64,
    class: Class,
    users_left: usize,
    live: bool,
}

#[derive(Debug, Clone)]
struct RtTask {
    kind: TaskKind,
    resource: Resource,
    cycles: u64,
    hbm_bytes: u64,
    spm_bytes: u64,
    creates: Option<usize>,
    uses: Vec<usize>,
    succs: Vec<usize>,
    deps_left: usize,
    op: usize,
    state: TState,
    stage: Option<usize>,
}

fn lower(trace: &Trace, ins: &CkksInstance, schedule: &BootSchedule) -> Result<(Vec<Lowered>, Vec<Version>), SimError> {
    let levels = trace.check(ins.max_level, schedule.l_boot)?;
    let mut versions: Vec<Version> = Vec::new();
    let mut current: BTreeMap<&str, usize> = BTreeMap::new();
    let mut ops = Vec::new();
    let new_version = |versions: &mut Vec<Version>, level: usize| {
        versions.push(Version {
            level,
            reads_left: 0,
            is_final: false,
            state: VState::Absent,
            bytes: 0,
            pins: 0,
            last_touch: 0,
        });
        versions.len() - 1
    };
    for (i, op) in trace.ops.iter().enumerate() {
        let id = (i + 1).to_string();
        let mut inputs: Vec<usize> = op.inputs().iter().map(|n| current[n]).collect();
        inputs.dedup();
        let in_level = inputs.first().map(|&v| versions[v].level).unwrap_or(0);
        match op {
            TraceOp::Decl { offchip, .. } => {
                let v = new_version(&mut versions, levels[i]);
                ops.push(Lowered {
                    id,
                    name: "DECL",
                    kind: OpKind::Decl { offchip: *offchip },
                    level: levels[i],
                    inputs,
                    output: Some(v),
                });
                current.insert(op.output(), v);
            }
            TraceOp::Boot { .. } => {
                let mut sub = 0;
                let mut push = |ops: &mut Vec<Lowered>, versions: &mut Vec<Version>, he: HeOp, level: usize, input: usize| {
                    sub += 1;
                    let out_level = he.output_level(level, ins.max_level);
                    let v = new_version(versions, out_level);
                    ops.push(Lowered {
                        id: format!("{}.{}", i + 1, sub),
                        name: "BOOT",
                        kind: OpKind::He(he),
                        level,
                        inputs: vec![input],
                        output: Some(v),
                    });
                    v
                };
                let mut chain = push(&mut ops, &mut versions, HeOp::ModRaise, 0, inputs[0]);
                for (level, seg) in schedule.segment_levels(ins.max_level) {
                    let groups = [
                        (HeOp::HRot { r: 1 }, seg.hrot),
                        (HeOp::HMult, seg.hmult),
                        (HeOp::PMult, seg.pmult),
                        (HeOp::CMult, seg.cmult),
                        (HeOp::HAdd, seg.hadd),
                        (HeOp::CAdd, seg.cadd),
                    ];
                    for (he, count) in groups {
                        for _ in 0..count {
                            chain = push(&mut ops, &mut versions, he, level, chain);
                        }
                    }
                    for j in 0..seg.rescale as usize {
                        let l = level.saturating_sub(j);
                        if l > 0 {
                            chain = push(&mut ops, &mut versions, HeOp::Rescale, l, chain);
                        }
                    }
                }
                // the last sub-op's output stands for the bootstrapped ct
                versions[chain].level = levels[i];
                current.insert(op.output(), chain);
            }
            _ => {
                let he = HeOp::from_trace(op)?;
                let v = new_version(&mut versions, levels[i]);
                ops.push(Lowered {
                    id,
                    name: op.mnemonic(),
                    kind: OpKind::He(he),
                    level: in_level,
                    inputs,
                    output: Some(v),
                });
                current.insert(op.output(), v);
            }
        }
    }
    for op in &ops {
        for &v in &op.inputs {
            versions[v].reads_left += 1;
        }
    }
    for &v in current.values() {
        versions[v].is_final = true;
    }
    Ok((ops, versions))
}

struct Engine<'a> {
    hw: &'a HardwareConfig,
    cost: CostModel,
    grid: Option<GridMap>,
    perm_cache: BTreeMap<usize, PermutationCycles>,
    ops: Vec<Lowered>,
    versions: Vec<Version>,
    tasks: Vec<RtTask>,
    bufs: Vec<RtBuf>,
    ready: BTreeMap<Resource, BTreeSet<usize>>,
    busy: BTreeMap<Resource, Option<usize>>,
    running: BinaryHeap<Reverse<(u64, usize)>>,
    now: u64,
    current: usize,
    instantiated: Vec<bool>,
    activated: Vec<bool>,
    tasks_left: Vec<usize>,
    op_tasks: Vec<Vec<usize>>,
    op_start: Vec<Option<u64>>,
    touch: u64,
    temp_bytes: u64,
    evk_bytes: u64,
    ct_bytes: u64,
    peak_resident: u64,
    peak_temp: u64,
    mem_events: Vec<(u64, u64)>,
    starts: Vec<u64>,
    report: SimReport,
    last_failure: Option<(usize, u64)>,
    wakes: BTreeSet<u64>,
}

const WAKE: usize = usize::MAX;

impl<'a> Engine<'a> {
    fn new(ins: &CkksInstance, hw: &'a HardwareConfig, ops: Vec<Lowered>, versions: Vec<Version>) -> Self {
        let cost = CostModel::new(ins, hw);
        let n_ops = ops.len();
        let mut report = SimReport::new(hw, cost.epoch, ins.n() / 2);
        report.mult_levels = ops
            .iter()
            .filter(|o| o.name == "HMULT")
            .count();
        Self {
            hw,
            grid: GridMap::for_grid(ins.n(), hw.grid.rows, hw.grid.cols).ok(),
            cost,
            perm_cache: BTreeMap::new(),
            ops,
            versions,
            tasks: Vec::new(),
            bufs: Vec::new(),
            ready: RESOURCES.iter().map(|&r| (r, BTreeSet::new())).collect(),
            busy: RESOURCES.iter().map(|&r| (r, None)).collect(),
            running: BinaryHeap::new(),
            now: 0,
            current: 0,
            instantiated: vec![false; n_ops],
            activated: vec![false; n_ops],
            tasks_left: vec![0; n_ops],
            op_tasks: vec![Vec::new(); n_ops],
            op_start: vec![None; n_ops],
            touch: 0,
            temp_bytes: 0,
            evk_bytes: 0,
            ct_bytes: 0,
            peak_resident: 0,
            peak_temp: 0,
            mem_events: vec![(0, 0)],
            starts: Vec::new(),
            report,
            last_failure: None,
            wakes: BTreeSet::new(),
        }
    }

    fn capacity(&self) -> u64 {
        self.hw.scratchpad.capacity_bytes
    }

    fn used(&self) -> u64 {
        self.temp_bytes + self.evk_bytes + self.ct_bytes
    }

    fn note_mem(&mut self) {
        let used = self.used();
        debug_assert!(used <= self.capacity());
        self.peak_resident = self.peak_resident.max(used);
        self.peak_temp = self.peak_temp.max(self.temp_bytes);
        match self.mem_events.last_mut() {
            Some(last) if last.0 == self.now => last.1 = used,
            _ => self.mem_events.push((self.now, used)),
        }
    }

    fn perm(&mut self, r: usize) -> Result<PermutationCycles, SimError> {
        let slots = self.cost.n / 2;
        let r = r % slots.max(1);
        if let Some(&c) = self.perm_cache.get(&r) {
            return Ok(c);
        }
        let c = match self.grid {
            Some(map) => permutation_cycles(&decompose_permutation(r, &map), self.hw)?,
            None if r == 0 => PermutationCycles::default(),
            None => {
                let full = self.cost.noc_cycles(self.cost.nz * 8);
                PermutationCycles { vertical: full, horizontal: full }
            }
        };
        self.perm_cache.insert(r, c);
        Ok(c)
    }

    fn push_task(&mut self, mut t: RtTask, deps: &[usize]) -> usize {
        let id = self.tasks.len();
        t.deps_left = deps.len();
        for &d in deps {
            self.tasks[d].succs.push(id);
        }
        self.tasks.push(t);
        self.tasks_left[self.tasks[id].op] += 1;
        self.op_tasks[self.tasks[id].op].push(id);
        if self.tasks[id].deps_left == 0 && self.eligible(id) {
            self.ready.get_mut(&self.tasks[id].resource).unwrap().insert(id);
        }
        id
    }

    fn eligible(&self, t: usize) -> bool {
        let task = &self.tasks[t];
        task.resource == Resource::Hbm || task.op == self.current && self.activated[task.op]
    }

    fn new_buf(&mut self, bytes: u64, class: Class) -> usize {
        self.bufs.push(RtBuf {
            bytes,
            class,
            users_left: 0,
            live: false,
        });
        self.bufs.len() - 1
    }

    fn instantiate(&mut self, i: usize) -> Result<(), SimError> {
        self.instantiated[i] = true;
        let op = self.ops[i].clone();
        let graph = match &op.kind {
            OpKind::Decl { .. } => return Ok(()),
            OpKind::Graph(g) => g.clone(),
            OpKind::He(he) => {
                let perm = match he {
                    HeOp::HRot { r } => self.perm(*r)?,
                    _ => PermutationCycles::default(),
                };
                expand(*he, op.level, &self.cost, perm)?
            }
        };
        self.touch += 1;
        let mut loads = Vec::new();
        for &v in &op.inputs {
            let ver = &mut self.versions[v];
            ver.pins += 1;
            ver.last_touch = self.touch;
            if ver.state == VState::Evicted {
                ver.state = VState::Resident;
                let limbs = ver.level + 1;
                for _ in 0..limbs {
                    let bytes = 2 * self.cost.limb_bytes;
                    let buf = self.new_buf(bytes, Class::Ct(v));
                    let t = self.push_task(
                        RtTask {
                            kind: TaskKind::CtLoad,
                            resource: Resource::Hbm,
                            cycles: self.cost.load_cycles(bytes),
                            hbm_bytes: bytes,
                            spm_bytes: bytes,
                            creates: Some(buf),
                            uses: vec![],
                            succs: vec![],
                            deps_left: 0,
                            op: i,
                            state: TState::Pending,
                            stage: None,
                        },
                        &[],
                    );
                    self.bufs[buf].users_left = 1;
                    loads.push(t);
                }
            }
        }
        if let Some(v) = op.output {
            let ver = &mut self.versions[v];
            ver.pins += 1;
            ver.last_touch = self.touch;
            ver.state = VState::Resident;
        }
        let buf_base = self.bufs.len();
        for spec in &graph.buffers {
            let class = match spec.class {
                BufferClass::Temp => Class::Temp,
                BufferClass::Evk => Class::Evk,
                BufferClass::Output => match op.output {
                    Some(v) => Class::Ct(v),
                    None => Class::Temp,
                },
            };
            self.new_buf(spec.bytes, class);
        }
        let task_base = self.tasks.len();
        for t in &graph.tasks {
            let mut deps: Vec<usize> = t.deps.iter().map(|&d| d + task_base).collect();
            if deps.is_empty() && t.resource != Resource::Hbm {
                deps.extend(&loads);
            }
            let creates = t.creates.map(|b| b + buf_base);
            let uses: Vec<usize> = t.uses.iter().map(|&b| b + buf_base).collect();
            let mut users: Vec<usize> = uses.clone();
            users.extend(creates);
            users.sort_unstable();
            users.dedup();
            for b in users {
                self.bufs[b].users_left += 1;
            }
            self.push_task(
                RtTask {
                    kind: t.kind,
                    resource: t.resource,
                    cycles: t.cycles,
                    hbm_bytes: t.hbm_bytes,
                    spm_bytes: t.spm_bytes,
                    creates,
                    uses,
                    succs: vec![],
                    deps_left: 0,
                    op: i,
                    state: TState::Pending,
                    stage: t.stage,
                },
                &deps,
            );
        }
        Ok(())
    }

    fn activate(&mut self, i: usize) {
        self.activated[i] = true;
        if let OpKind::Decl { offchip } = self.ops[i].kind {
            let v = self.ops[i].output.expect("DECL defines a version");
            let bytes = 2 * (self.versions[v].level as u64 + 1) * self.cost.limb_bytes;
            self.touch += 1;
            self.versions[v].last_touch = self.touch;
            if !offchip && self.make_room(bytes, 0, false) {
                self.versions[v].state = VState::Resident;
                self.versions[v].bytes = bytes;
                self.ct_bytes += bytes;
                self.note_mem();
            } else {
                self.versions[v].state = VState::Evicted;
            }
            return;
        }
        let ids: Vec<usize> = self.op_tasks[i]
            .iter()
            .copied()
            .filter(|&t| self.tasks[t].state == TState::Pending && self.tasks[t].deps_left == 0)
            .collect();
        for t in ids {
            self.ready.get_mut(&self.tasks[t].resource).unwrap().insert(t);
        }
    }

    fn complete_op(&mut self, i: usize) {
        let op = self.ops[i].clone();
        self.touch += 1;
        for &v in &op.inputs {
            let ver = &mut self.versions[v];
            ver.pins -= 1;
            ver.reads_left -= 1;
        }
        if let Some(v) = op.output {
            if !matches!(op.kind, OpKind::Decl { .. }) {
                self.versions[v].pins -= 1;
            }
            self.versions[v].last_touch = self.touch;
        }
        for v in op.inputs.iter().chain(op.output.iter()) {
            let ver = &self.versions[*v];
            if ver.reads_left == 0 && !ver.is_final && ver.pins == 0 && ver.state == VState::Resident {
                self.ct_bytes -= ver.bytes;
                let ver = &mut self.versions[*v];
                ver.bytes = 0;
                ver.state = VState::Freed;
            }
        }
        self.note_mem();
        if !matches!(op.kind, OpKind::Decl { .. }) {
            self.report.ops.push(OpSpan {
                op_id: op.id.clone(),
                name: op.name.to_string(),
                start: self.op_start[i].unwrap_or(self.now),
                end: self.now,
            });
        }
    }

    fn advance(&mut self) -> Result<(), SimError> {
        while self.current < self.ops.len() {
            let c = self.current;
            if !self.instantiated[c] {
                self.instantiate(c)?;
            }
            if !self.activated[c] {
                self.activate(c);
            }
            if c + 1 < self.ops.len() && !self.instantiated[c + 1] {
                self.instantiate(c + 1)?;
            }
            if self.tasks_left[c] > 0 {
                break;
            }
            self.complete_op(c);
            self.current += 1;
        }
        Ok(())
    }

    /// Evicts unpinned cts (LRU) and, for the current op, drops prefetched evk
    /// until `bytes + reserve` fit.
    fn make_room(&mut self, bytes: u64, reserve: u64, may_drop_evk: bool) -> bool {
        let need = bytes + reserve;
        let cap = self.capacity();
        if need > cap {
            return false;
        }
        while cap - self.used() < need {
            let victim = self
                .versions
                .iter()
                .enumerate()
                .filter(|(_, v)| v.state == VState::Resident && v.pins == 0 && v.bytes > 0)
                .min_by_key(|(i, v)| (v.last_touch, *i))
                .map(|(i, _)| i);
            match victim {
                Some(v) => self.evict(v),
                None => break,
            }
        }
        if may_drop_evk {
            while cap - self.used() < need {
                let victim = (0..self.tasks.len()).rev().find(|&t| {
                    let task = &self.tasks[t];
                    task.op > self.current
                        && task.kind == TaskKind::EvkLoad
                        && task.state == TState::Done
                        && task.creates.is_some_and(|b| self.bufs[b].live)
                });
                match victim {
                    Some(t) => self.drop_prefetch(t),
                    None => break,
                }
            }
        }
        cap - self.used() >= need
    }

    fn evict(&mut self, v: usize) {
        let bytes = self.versions[v].bytes;
        self.ct_bytes -= bytes;
        let ver = &mut self.versions[v];
        ver.bytes = 0;
        ver.state = VState::Evicted;
        if ver.reads_left > 0 {
            let op = self.current.min(self.ops.len() - 1);
            self.push_task(
                RtTask {
                    kind: TaskKind::CtStore,
                    resource: Resource::Hbm,
                    cycles: self.cost.load_cycles(bytes),
                    hbm_bytes: bytes,
                    spm_bytes: bytes,
                    creates: None,
                    uses: vec![],
                    succs: vec![],
                    deps_left: 0,
                    op,
                    state: TState::Pending,
                    stage: None,
                },
                &[],
            );
        }
        self.note_mem();
    }

    fn drop_prefetch(&mut self, t: usize) {
        let b = self.tasks[t].creates.expect("evk load creates a buffer");
        self.release(b);
        self.bufs[b].users_left += 1;
        self.tasks[t].state = TState::Pending;
        self.tasks_left[self.tasks[t].op] += 1;
        let succs = self.tasks[t].succs.clone();
        for s in succs {
            self.tasks[s].deps_left += 1;
        }
        self.ready.get_mut(&Resource::Hbm).unwrap().insert(t);
        self.report.evk_refetch_bytes += self.tasks[t].hbm_bytes;
    }

    fn release(&mut self, b: usize) {
        let buf = &mut self.bufs[b];
        if !buf.live {
            return;
        }
        buf.live = false;
        match buf.class {
            Class::Temp => self.temp_bytes -= buf.bytes,
            Class::Evk => self.evk_bytes -= buf.bytes,
            Class::Ct(_) => {}
        }
        self.note_mem();
    }

    fn try_alloc(&mut self, t: usize) -> bool {
        let Some(b) = self.tasks[t].creates else {
            return true;
        };
        let bytes = self.bufs[b].bytes;
        let prefetch = self.tasks[t].op > self.current;
        let reserve = if prefetch {
            (self.hw.scratchpad.load_reserve * self.capacity() as f64) as u64
        } else {
            0
        };
        let may_drop = self.tasks[t].op == self.current;
        if !self.make_room(bytes, reserve, may_drop) {
            self.last_failure = Some((t, bytes));
            return false;
        }
        self.bufs[b].live = true;
        match self.bufs[b].class {
            Class::Temp => self.temp_bytes += bytes,
            Class::Evk => self.evk_bytes += bytes,
            Class::Ct(v) => {
                self.ct_bytes += bytes;
                self.versions[v].bytes += bytes;
            }
        }
        self.note_mem();
        true
    }

    /// Earliest cycle ≥ now at which `t` may start.
    fn slot_time(&self, t: usize) -> u64 {
        match self.tasks[t].stage {
            None => self.now,
            Some(s) => {
                let ep = self.cost.epoch;
                let at = self.now - self.now % ep + self.cost.stage_offset(s);
                if at < self.now {
                    at + ep
                } else {
                    at
                }
            }
        }
    }

    /// Starts what can start; true if some allocation failed.
    fn dispatch(&mut self) -> bool {
        let mut failed = false;
        for r in RESOURCES {
            if self.busy[&r].is_some() {
                continue;
            }
            let candidates: Vec<usize> = self.ready[&r].iter().copied().collect();
            let mut wake: Option<u64> = None;
            for t in candidates {
                let at = self.slot_time(t);
                if at > self.now {
                    wake = Some(wake.map_or(at, |w| w.min(at)));
                    continue;
                }
                if self.try_alloc(t) {
                    self.ready.get_mut(&r).unwrap().remove(&t);
                    self.start(t);
                    wake = None;
                    break;
                }
                failed = true;
            }
            if let Some(at) = wake {
                if self.wakes.insert(at) {
                    self.running.push(Reverse((at, WAKE)));
                }
            }
        }
        failed
    }

    fn start(&mut self, t: usize) {
        let task = &mut self.tasks[t];
        task.state = TState::Running;
        let end = self.now + task.cycles;
        let r = task.resource;
        let op = task.op;
        self.busy.insert(r, Some(t));
        self.running.push(Reverse((end, t)));
        if self.starts.len() <= t {
            self.starts.resize(t + 1, 0);
        }
        self.starts[t] = self.now;
        self.op_start[op].get_or_insert(self.now);
    }

    fn finish(&mut self, t: usize) {
        let task = self.tasks[t].clone();
        self.tasks[t].state = TState::Done;
        self.busy.insert(task.resource, None);
        let start = self.starts[t];
        *self.report.busy_cycles.entry(task.resource).or_default() += task.cycles;
        self.report.hbm_bytes += task.hbm_bytes;
        self.report.spm_bytes += task.spm_bytes;
        if task.kind == TaskKind::CtStore {
            self.report.ct_store_bytes += task.hbm_bytes;
        }
        self.report.timeline.push(TimelineRecord {
            start,
            end: self.now,
            resource: task.resource,
            op_id: self.ops[task.op].id.clone(),
            kind: task.kind,
            spm_bytes: task.spm_bytes,
        });
        for &s in &task.succs {
            self.tasks[s].deps_left -= 1;
            if self.tasks[s].deps_left == 0 && self.eligible(s) && self.tasks[s].state == TState::Pending {
                self.ready.get_mut(&self.tasks[s].resource).unwrap().insert(s);
            }
        }
        let mut users: Vec<usize> = task.uses.clone();
        users.extend(task.creates);
        users.sort_unstable();
        users.dedup();
        for b in users {
            self.bufs[b].users_left -= 1;
            if self.bufs[b].users_left == 0 && !matches!(self.bufs[b].class, Class::Ct(_)) {
                self.release(b);
            }
        }
        self.tasks_left[task.op] -= 1;
    }

    fn run(mut self) -> Result<SimReport, SimError> {
        self.advance()?;
        loop {
            let failed = self.dispatch();
            let stuck = failed && self.busy.values().all(Option::is_none);
            let next = self.running.peek().filter(|_| !stuck);
            let Some(&Reverse((end, _))) = next else {
                if self.current >= self.ops.len() {
                    break;
                }
                let (t, needed) = self.last_failure.unwrap_or((0, 0));
                let op = self.tasks.get(t).map(|x| self.ops[x.op].id.clone()).unwrap_or_default();
                return Err(SimError::Capacity {
                    op,
                    needed,
                    free: self.capacity() - self.used(),
                    capacity: self.capacity(),
                });
            };
            self.now = end;
            while let Some(&Reverse((e, t))) = self.running.peek() {
                if e != end {
                    break;
                }
                self.running.pop();
                if t == WAKE {
                    self.wakes.remove(&e);
                } else {
                    self.finish(t);
                }
            }
            self.advance()?;
        }
        let mut report = self.report;
        report.total_cycles = self.now;
        report.peak_resident_bytes = self.peak_resident;
        report.peak_temp_bytes = self.peak_temp;
        report.finalize(&self.mem_events, self.hw);
        Ok(report)
    }
}

/// Runs `trace` on `ins` with the given machine and bootstrapping census.
pub fn simulate(
    trace: &Trace,
    ins: &CkksInstance,
    hw: &HardwareConfig,
    schedule: &BootSchedule,
) -> Result<SimReport, SimError> {
    ins.validate().map_err(SimError::Instance)?;
    let (ops, versions) = lower(trace, ins, schedule)?;
    Engine::new(ins, hw, ops, versions).run()
}

/// Runs one task graph as a single op with every operand resident.
pub fn simulate_graph(graph: &OpGraph, ins: &CkksInstance, hw: &HardwareConfig) -> Result<SimReport, SimError> {
    let mut versions = Vec::new();
    let has_output = graph.buffers.iter().any(|b| b.class == BufferClass::Output);
    if has_output {
        versions.push(Version {
            level: 0,
            reads_left: 0,
            is_final: true,
            state: VState::Absent,
            bytes: 0,
            pins: 0,
            last_touch: 0,
        });
    }
    let op = Lowered {
        id: "1".into(),
        name: "GRAPH",
        kind: OpKind::Graph(graph.clone()),
        level: 0,
        inputs: vec![],
        output: has_output.then_some(0),
    };
    Engine::new(ins, hw, vec![op], versions).run()
}
