//! Cycle-stepped, trace-driven out-of-order superscalar core with a six-stage
//! structure: fetch, decode, dispatch, issue (execute folded in), writeback,
//! commit. Renaming against a sized physical register file, ROB/IQ/LSQ
//! capacity limits, a bimodal predictor, and ROI-windowed cycle accounting.
//!
//! Stage evaluation runs in reverse pipeline order within a cycle
//! (commit, resolve, issue, dispatch, decode, fetch), so an instruction
//! advances at most one stage per cycle and results written back in cycle W
//! can feed an issue in the same cycle (full bypass): a 1-cycle producer
//! issued at I wakes its consumer for issue at I+1.

mod analytic;

pub use analytic::analytic_cycles;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cachesim::{CacheSimError, CacheStats, Hierarchy, HierarchyConfig, Port};
use crate::trace::{validate_trace, InstructionRecord, Kind, Trace, NUM_LOGICAL_REGS};

/// Execute latencies per instruction class. Branches and stores use the ALU
/// latency (compare / address generation); loads pay the cache access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latencies {
    pub alu: u32,
    pub mul: u32,
    pub div: u32,
}

impl Default for Latencies {
    fn default() -> Self {
        Self { alu: 1, mul: 3, div: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreConfig {
    pub fetch_width: u32,
    pub decode_width: u32,
    pub dispatch_width: u32,
    pub issue_width: u32,
    pub commit_width: u32,
    pub rob_size: u32,
    pub iq_size: u32,
    pub lsq_size: u32,
    pub phys_regs: u32,
    /// Bimodal 2-bit counter table size (power of two), counters initialized
    /// weakly-not-taken.
    pub predictor_entries: u32,
    /// Front-end refill depth charged after a mispredict resolves.
    pub mispredict_penalty_cycles: u32,
    pub latencies: Latencies,
    pub clock_ghz: f64,
    /// Degenerate-configuration knob: predictions always match the trace.
    pub perfect_predictor: bool,
}

impl Default for CoreConfig {
    fn default() -> Self {
        Self {
            fetch_width: 4,
            decode_width: 4,
            dispatch_width: 4,
            issue_width: 4,
            commit_width: 4,
            rob_size: 64,
            iq_size: 20,
            lsq_size: 12,
            phys_regs: 80,
            predictor_entries: 512,
            mispredict_penalty_cycles: 4,
            latencies: Latencies::default(),
            clock_ghz: 1.0,
            perfect_predictor: false,
        }
    }
}

impl CoreConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let widths = [
            ("fetch_width", self.fetch_width),
            ("decode_width", self.decode_width),
            ("dispatch_width", self.dispatch_width),
            ("issue_width", self.issue_width),
            ("commit_width", self.commit_width),
        ];
        for (name, w) in widths {
            if w == 0 {
                return Err(SimError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [("rob_size", self.rob_size), ("iq_size", self.iq_size), ("lsq_size", self.lsq_size)] {
            if v == 0 {
                return Err(SimError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if self.phys_regs < u32::from(NUM_LOGICAL_REGS) + 1 {
            return Err(SimError::InvalidConfig(format!(
                "phys_regs must be >= {} (32 logical + rename headroom)",
                NUM_LOGICAL_REGS + 1
            )));
        }
        if !self.predictor_entries.is_power_of_two() {
            return Err(SimError::InvalidConfig("predictor_entries must be a power of two".into()));
        }
        if self.latencies.alu == 0 || self.latencies.mul == 0 || self.latencies.div == 0 {
            return Err(SimError::InvalidConfig("latencies must be >= 1".into()));
        }
        if !self.clock_ghz.is_finite() || self.clock_ghz <= 0.0 {
            return Err(SimError::InvalidConfig("clock_ghz must be positive".into()));
        }
        Ok(())
    }

    /// Copy with all five stage widths set to one (the cache-sweep regime).
    pub fn with_widths_of_one(mut self) -> Self {
        self.fetch_width = 1;
        self.decode_width = 1;
        self.dispatch_width = 1;
        self.issue_width = 1;
        self.commit_width = 1;
        self
    }

    fn min_width(&self) -> u32 {
        self.fetch_width
            .min(self.decode_width)
            .min(self.dispatch_width)
            .min(self.issue_width)
            .min(self.commit_width)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid core configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("configuration is not degenerate: {0}")]
    NotDegenerate(String),
    #[error(transparent)]
    Cache(#[from] CacheSimError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommittedCounts {
    pub total: u64,
    pub roi: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StallCycles {
    pub rob_full: u64,
    pub iq_full: u64,
    pub lsq_full: u64,
    pub no_phys_reg: u64,
    pub fetch_stall: u64,
}

impl StallCycles {
    pub fn total(&self) -> u64 {
        self.rob_full + self.iq_full + self.lsq_full + self.no_phys_reg + self.fetch_stall
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchStats {
    pub branches: u64,
    pub mispredicts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub total_cycles: u64,
    pub roi_cycles: u64,
    pub committed_instructions: CommittedCounts,
    pub ipc_roi: f64,
    pub stall_cycles: StallCycles,
    pub branch: BranchStats,
    pub cache: CacheStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StallCause {
    RobFull,
    IqFull,
    LsqFull,
    NoPhysReg,
}

struct Bimodal {
    counters: Vec<u8>,
    mask: u32,
}

impl Bimodal {
    fn new(entries: u32) -> Self {
        // Weakly not-taken.
        Self { counters: vec![1; entries as usize], mask: entries - 1 }
    }

    fn predict(&self, sid: u32) -> bool {
        self.counters[(sid & self.mask) as usize] >= 2
    }

    fn update(&mut self, sid: u32, taken: bool) {
        let c = &mut self.counters[(sid & self.mask) as usize];
        if taken {
            *c = (*c + 1).min(3);
        } else {
            *c = c.saturating_sub(1);
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Fetched {
    idx: usize,
    mispredicted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    seq: u64,
    sid: u32,
    kind: Kind,
    srcs: [Option<u32>; 2],
    dst_phys: Option<u32>,
    prev_phys: Option<u32>,
    addr: u64,
    size: u8,
    taken: bool,
    mispredicted: bool,
    issued: bool,
    done_at: u64,
}

#[derive(Debug, PartialEq, Eq)]
struct ResolveEvent {
    done_at: u64,
    seq: u64,
    sid: u32,
    taken: bool,
    mispredicted: bool,
}

impl Ord for ResolveEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.done_at, self.seq).cmp(&(other.done_at, other.seq))
    }
}

impl PartialOrd for ResolveEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

enum LsqDecision {
    NoConflict,
    Forward,
    Blocked,
}

struct Machine<'a> {
    insts: Vec<&'a InstructionRecord>,
    core: CoreConfig,
    hier: Hierarchy,
    predictor: Bimodal,

    // Rename state.
    rename: [u32; NUM_LOGICAL_REGS as usize],
    ready_at: Vec<u64>,
    free_list: Vec<u32>,
    next_fresh: u32,

    // Backend structures.
    rob: VecDeque<Entry>,
    front_seq: u64,
    next_seq: u64,
    iq: Vec<u64>,
    lsq: VecDeque<u64>,
    unissued_stores: BinaryHeap<Reverse<u64>>,
    resolves: BinaryHeap<Reverse<ResolveEvent>>,

    // Frontend.
    fetch_q: VecDeque<Fetched>,
    decode_q: VecDeque<Fetched>,
    pending_group: Vec<Fetched>,
    deliver_at: u64,
    next_idx: usize,
    resume_at: u64,

    // Accounting.
    committed: u64,
    stalls: StallCycles,
    branch_stats: BranchStats,
    roi_begin: u64,
    roi_end: u64,
    roi_open_cycle: Option<u64>,
    roi_close_cycle: Option<u64>,
}

impl<'a> Machine<'a> {
    fn entry(&self, seq: u64) -> &Entry {
        &self.rob[(seq - self.front_seq) as usize]
    }

    fn entry_mut(&mut self, seq: u64) -> &mut Entry {
        let idx = (seq - self.front_seq) as usize;
        &mut self.rob[idx]
    }

    fn data_access(&mut self, addr: u64, size: u8, write: bool) -> u32 {
        if self.hier.perfect().is_some() {
            return self.hier.access(Port::Data, addr, size, write);
        }
        let line = self.hier.line_bytes(Port::Data);
        let end = addr + u64::from(size) - 1;
        if addr / line == end / line {
            self.hier.access(Port::Data, addr, size, write)
        } else {
            // Line-crossing access: two sequential accesses, summed.
            let second = (addr / line + 1) * line;
            let first_size = (second - addr) as u8;
            let a = self.hier.access(Port::Data, addr, first_size, write);
            let b = self.hier.access(Port::Data, second, (end - second + 1) as u8, write);
            a + b
        }
    }

    fn commit_step(&mut self, t: u64) {
        let mut done = 0;
        while done < self.core.commit_width {
            let Some(head) = self.rob.front() else { break };
            if !head.issued || head.done_at >= t {
                break;
            }
            let head = *head;
            if head.kind == Kind::Store {
                // The store performs its data write at commit; latency is
                // absorbed by the write buffer.
                self.data_access(head.addr, head.size, true);
            }
            if head.kind.is_mem() {
                debug_assert_eq!(self.lsq.front(), Some(&head.seq));
                self.lsq.pop_front();
            }
            if head.kind == Kind::Branch {
                self.branch_stats.branches += 1;
            }
            if let Some(prev) = head.prev_phys {
                self.free_list.push(prev);
            }
            self.rob.pop_front();
            self.front_seq += 1;
            self.committed += 1;
            done += 1;
        }
        if self.roi_open_cycle.is_none() && self.committed >= self.roi_begin {
            self.roi_open_cycle = Some(t);
        }
        if self.roi_close_cycle.is_none() && self.committed >= self.roi_end {
            self.roi_close_cycle = Some(t);
        }
    }

    fn resolve_step(&mut self, t: u64) {
        while let Some(Reverse(ev)) = self.resolves.peek() {
            if ev.done_at > t {
                break;
            }
            let Reverse(ev) = self.resolves.pop().unwrap();
            if !self.core.perfect_predictor {
                self.predictor.update(ev.sid, ev.taken);
            }
            if ev.mispredicted {
                self.branch_stats.mispredicts += 1;
                self.resume_at = t + u64::from(self.core.mispredict_penalty_cycles) + 1;
            }
        }
    }

    /// Youngest older store in the LSQ overlapping the load decides:
    /// exact match forwards, partial overlap blocks, none reads the cache.
    fn lsq_decision(&self, load_seq: u64, addr: u64, size: u8) -> LsqDecision {
        let end = addr + u64::from(size);
        for &seq in self.lsq.iter().rev() {
            if seq >= load_seq {
                continue;
            }
            let e = self.entry(seq);
            if e.kind != Kind::Store {
                continue;
            }
            let s_end = e.addr + u64::from(e.size);
            if e.addr < end && addr < s_end {
                if e.addr == addr && e.size == size {
                    return LsqDecision::Forward;
                }
                return LsqDecision::Blocked;
            }
        }
        LsqDecision::NoConflict
    }

    fn oldest_unissued_store(&mut self) -> u64 {
        while let Some(&Reverse(seq)) = self.unissued_stores.peek() {
            let issued = seq < self.front_seq || self.entry(seq).issued;
            if issued {
                self.unissued_stores.pop();
            } else {
                return seq;
            }
        }
        u64::MAX
    }

    fn issue_step(&mut self, t: u64) {
        let mut slots = self.core.issue_width;
        let mut pos = 0;
        while slots > 0 && pos < self.iq.len() {
            let seq = self.iq[pos];
            let e = *self.entry(seq);
            let ready = e.srcs.iter().flatten().all(|&p| self.ready_at[p as usize] <= t);
            if !ready {
                pos += 1;
                continue;
            }
            let lat = match e.kind {
                Kind::Alu => self.core.latencies.alu,
                Kind::Mul => self.core.latencies.mul,
                Kind::Div => self.core.latencies.div,
                Kind::Branch | Kind::Store => self.core.latencies.alu,
                Kind::Load => {
                    if self.oldest_unissued_store() < seq {
                        pos += 1;
                        continue;
                    }
                    match self.lsq_decision(seq, e.addr, e.size) {
                        LsqDecision::Blocked => {
                            pos += 1;
                            continue;
                        }
                        LsqDecision::Forward => 1,
                        LsqDecision::NoConflict => self.data_access(e.addr, e.size, false),
                    }
                }
            };
            let done_at = t + u64::from(lat);
            {
                let entry = self.entry_mut(seq);
                entry.issued = true;
                entry.done_at = done_at;
            }
            if let Some(p) = e.dst_phys {
                self.ready_at[p as usize] = done_at;
            }
            if e.kind == Kind::Branch && !self.core.perfect_predictor {
                self.resolves.push(Reverse(ResolveEvent {
                    done_at,
                    seq,
                    sid: e.sid,
                    taken: e.taken,
                    mispredicted: e.mispredicted,
                }));
            }
            self.iq.remove(pos);
            slots -= 1;
        }
    }

    fn alloc_phys(&mut self) -> Option<u32> {
        if let Some(p) = self.free_list.pop() {
            self.ready_at[p as usize] = u64::MAX;
            return Some(p);
        }
        if self.next_fresh < self.core.phys_regs {
            let p = self.next_fresh;
            self.next_fresh += 1;
            self.ready_at.push(u64::MAX);
            debug_assert_eq!(self.ready_at.len(), self.next_fresh as usize);
            return Some(p);
        }
        None
    }

    fn dispatch_step(&mut self) -> Option<StallCause> {
        let mut dispatched = 0;
        while dispatched < self.core.dispatch_width {
            let &f = self.decode_q.front()?;
            let rec = self.insts[f.idx];
            if self.rob.len() >= self.core.rob_size as usize {
                return Some(StallCause::RobFull);
            }
            if self.iq.len() >= self.core.iq_size as usize {
                return Some(StallCause::IqFull);
            }
            if rec.kind.is_mem() && self.lsq.len() >= self.core.lsq_size as usize {
                return Some(StallCause::LsqFull);
            }
            let needs_phys = rec.dst.is_some();
            if needs_phys && self.free_list.is_empty() && self.next_fresh >= self.core.phys_regs {
                return Some(StallCause::NoPhysReg);
            }

            self.decode_q.pop_front();
            let srcs = [rec.src1, rec.src2].map(|s| s.map(|r| self.rename[r.0 as usize]));
            let (dst_phys, prev_phys) = match rec.dst {
                Some(d) => {
                    let p = self.alloc_phys().expect("free physical register checked above");
                    let prev = self.rename[d.0 as usize];
                    self.rename[d.0 as usize] = p;
                    (Some(p), Some(prev))
                }
                None => (None, None),
            };
            let seq = self.next_seq;
            self.next_seq += 1;
            self.rob.push_back(Entry {
                seq,
                sid: rec.sid,
                kind: rec.kind,
                srcs,
                dst_phys,
                prev_phys,
                addr: rec.addr.unwrap_or(0),
                size: rec.size.unwrap_or(0),
                taken: rec.taken.unwrap_or(false),
                mispredicted: f.mispredicted,
                issued: false,
                done_at: 0,
            });
            self.iq.push(seq);
            if rec.kind.is_mem() {
                self.lsq.push_back(seq);
            }
            if rec.kind == Kind::Store {
                self.unissued_stores.push(Reverse(seq));
            }
            dispatched += 1;
        }
        None
    }

    fn decode_step(&mut self) {
        let cap = 2 * self.core.decode_width.max(self.core.dispatch_width) as usize;
        let mut moved = 0;
        while moved < self.core.decode_width && !self.fetch_q.is_empty() && self.decode_q.len() < cap {
            self.decode_q.push_back(self.fetch_q.pop_front().unwrap());
            moved += 1;
        }
    }

    fn fetch_step(&mut self, t: u64) -> (bool, bool) {
        // Returns (delivered, stalled-by-frontend).
        if !self.pending_group.is_empty() {
            if self.deliver_at == t {
                for f in self.pending_group.drain(..) {
                    self.fetch_q.push_back(f);
                }
                return (true, false);
            }
            return (false, true);
        }
        if self.next_idx >= self.insts.len() {
            return (false, false);
        }
        if t < self.resume_at {
            return (false, true);
        }
        let cap = 2 * self.core.fetch_width.max(self.core.decode_width) as usize;
        if self.fetch_q.len() >= cap {
            return (false, false);
        }
        let room = cap - self.fetch_q.len();
        let limit = (self.core.fetch_width as usize).min(room);

        let mut group = Vec::with_capacity(limit);
        let first_pc = self.insts[self.next_idx].pc();
        while group.len() < limit && self.next_idx < self.insts.len() {
            let rec = self.insts[self.next_idx];
            let mut stop_after = false;
            let mut mispredicted = false;
            if rec.kind == Kind::Branch {
                let taken = rec.taken.unwrap_or(false);
                let pred = if self.core.perfect_predictor { taken } else { self.predictor.predict(rec.sid) };
                mispredicted = pred != taken;
                // A predicted-taken or to-be-mispredicted branch ends the
                // fetch group; a mispredict additionally halts fetch until
                // its resolution schedules the refill.
                stop_after = pred || mispredicted;
                if mispredicted {
                    self.resume_at = u64::MAX;
                }
            }
            group.push(Fetched { idx: self.next_idx, mispredicted });
            self.next_idx += 1;
            if stop_after {
                break;
            }
        }
        let lat = self.hier.access(Port::IFetch, first_pc, 4, false);
        self.deliver_at = t + u64::from(lat) - 1;
        if self.deliver_at == t {
            for f in group {
                self.fetch_q.push_back(f);
            }
            (true, false)
        } else {
            self.pending_group = group;
            (false, true)
        }
    }
}

/// Run the trace through the core+hierarchy model. Deterministic: identical
/// inputs produce identical results.
pub fn simulate(trace: &Trace, core: &CoreConfig, hier_cfg: &HierarchyConfig) -> Result<SimResult, SimError> {
    core.validate()?;
    hier_cfg.validate()?;
    let violations = validate_trace(trace);
    if let Some(v) = violations.first() {
        return Err(SimError::InvalidTrace(format!("{v} (+{} more)", violations.len() - 1)));
    }

    let insts: Vec<&InstructionRecord> = trace.instructions().collect();
    let n = insts.len() as u64;
    let (roi_begin, roi_end) = trace.roi_bounds();
    let hier = Hierarchy::new(hier_cfg)?;

    if n == 0 {
        return Ok(SimResult {
            total_cycles: 0,
            roi_cycles: 0,
            committed_instructions: CommittedCounts::default(),
            ipc_roi: 0.0,
            stall_cycles: StallCycles::default(),
            branch: BranchStats::default(),
            cache: hier.stats(),
        });
    }

    let mut m = Machine {
        insts,
        core: *core,
        hier,
        predictor: Bimodal::new(core.predictor_entries),
        rename: std::array::from_fn(|i| i as u32),
        ready_at: vec![0; NUM_LOGICAL_REGS as usize],
        free_list: Vec::new(),
        next_fresh: u32::from(NUM_LOGICAL_REGS),
        rob: VecDeque::new(),
        front_seq: 0,
        next_seq: 0,
        iq: Vec::new(),
        lsq: VecDeque::new(),
        unissued_stores: BinaryHeap::new(),
        resolves: BinaryHeap::new(),
        fetch_q: VecDeque::new(),
        decode_q: VecDeque::new(),
        pending_group: Vec::new(),
        deliver_at: 0,
        next_idx: 0,
        resume_at: 0,
        committed: 0,
        stalls: StallCycles::default(),
        branch_stats: BranchStats::default(),
        roi_begin: roi_begin as u64,
        roi_end: roi_end as u64,
        roi_open_cycle: if roi_begin == 0 { Some(0) } else { None },
        roi_close_cycle: if roi_end == 0 { Some(0) } else { None },
    };

    let mut t: u64 = 0;
    let total_cycles = loop {
        t += 1;
        m.commit_step(t);
        if m.committed == n {
            break t;
        }
        m.resolve_step(t);
        m.issue_step(t);
        let dispatch_block = m.dispatch_step();
        m.decode_step();
        let (_, fetch_stalled) = m.fetch_step(t);

        match dispatch_block {
            Some(StallCause::RobFull) => m.stalls.rob_full += 1,
            Some(StallCause::IqFull) => m.stalls.iq_full += 1,
            Some(StallCause::LsqFull) => m.stalls.lsq_full += 1,
            Some(StallCause::NoPhysReg) => m.stalls.no_phys_reg += 1,
            None if fetch_stalled => m.stalls.fetch_stall += 1,
            None => {}
        }

        debug_assert!(m.rob.len() <= m.core.rob_size as usize);
        debug_assert!(m.iq.len() <= m.core.iq_size as usize);
        debug_assert!(m.lsq.len() <= m.core.lsq_size as usize);
        debug_assert!(
            (m.next_fresh as usize - m.free_list.len()) <= m.core.phys_regs as usize,
            "physical register leak"
        );
        debug_assert!(t < 1u64 << 40, "no forward progress");
    };

    let roi_open = m.roi_open_cycle.unwrap_or(0);
    let roi_close = m.roi_close_cycle.unwrap_or(total_cycles);
    let roi_cycles = roi_close - roi_open;
    let roi_committed = m.roi_end - m.roi_begin;
    let ipc_roi = if roi_cycles == 0 { 0.0 } else { roi_committed as f64 / roi_cycles as f64 };

    let result = SimResult {
        total_cycles,
        roi_cycles,
        committed_instructions: CommittedCounts { total: n, roi: roi_committed },
        ipc_roi,
        stall_cycles: m.stalls,
        branch: m.branch_stats,
        cache: m.hier.stats(),
    };
    debug_assert!(result.roi_cycles <= result.total_cycles);
    debug_assert!(result.ipc_roi <= f64::from(core.min_width()) + 1e-9);
    debug_assert!(result.stall_cycles.total() <= result.total_cycles);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachesim::CacheConfig;
    use crate::camodel::CacheGeometry;
    use crate::trace::{Reg, TraceItem};

    fn perfect_hier(lat: u32) -> HierarchyConfig {
        HierarchyConfig {
            l1i: CacheConfig { geometry: CacheGeometry::l1(65536, 32, 4), hit_cycles: 1 },
            l1d: CacheConfig { geometry: CacheGeometry::l1(65536, 32, 4), hit_cycles: 1 },
            l2: CacheConfig { geometry: CacheGeometry::l2(131072, 64, 8), hit_cycles: 6 },
            mem_cycles: 100,
            perfect_cycles: Some(lat),
        }
    }

    fn ample_core() -> CoreConfig {
        CoreConfig {
            rob_size: 1 << 20,
            iq_size: 1 << 20,
            lsq_size: 1 << 20,
            phys_regs: 1 << 20,
            perfect_predictor: true,
            ..CoreConfig::default()
        }
    }

    fn trace_of(items: Vec<TraceItem>) -> Trace {
        Trace { name: "t".into(), items }
    }

    fn independent_alus(n: usize) -> Trace {
        trace_of(
            (0..n)
                .map(|i| {
                    TraceItem::Inst(InstructionRecord::alu(i as u32, Reg((1 + i % 8) as u8), Some(Reg(0)), None))
                })
                .collect(),
        )
    }

    #[test]
    fn eight_independent_alus_width1_take_13_cycles() {
        let core = ample_core().with_widths_of_one();
        let r = simulate(&independent_alus(8), &core, &perfect_hier(1)).unwrap();
        assert_eq!(r.total_cycles, 13);
        assert_eq!(r.committed_instructions.total, 8);
    }

    #[test]
    fn eight_deep_dependent_chain_width4_takes_13_cycles() {
        // r1 <- r1 chain: every op depends on the previous one.
        let items: Vec<TraceItem> = (0..8)
            .map(|i| TraceItem::Inst(InstructionRecord::alu(i, Reg(1), Some(Reg(1)), None)))
            .collect();
        let r = simulate(&trace_of(items), &ample_core(), &perfect_hier(1)).unwrap();
        assert_eq!(r.total_cycles, 13);
    }

    #[test]
    fn single_alu_takes_six_cycles() {
        let r = simulate(&independent_alus(1), &ample_core().with_widths_of_one(), &perfect_hier(1)).unwrap();
        assert_eq!(r.total_cycles, 6);
    }

    #[test]
    fn ten_independent_loads_width1_take_15_cycles() {
        let items: Vec<TraceItem> = (0..10)
            .map(|i| TraceItem::Inst(InstructionRecord::load(i, Reg((1 + i % 8) as u8), None, u64::from(i) * 8, 4)))
            .collect();
        let r = simulate(&trace_of(items), &ample_core().with_widths_of_one(), &perfect_hier(1)).unwrap();
        assert_eq!(r.total_cycles, 15);
    }

    #[test]
    fn empty_roi_only_trace_is_zero_cycles() {
        let t = trace_of(vec![TraceItem::RoiBegin, TraceItem::RoiEnd]);
        let r = simulate(&t, &ample_core(), &perfect_hier(1)).unwrap();
        assert_eq!(r.total_cycles, 0);
        assert_eq!(r.committed_instructions.total, 0);
        assert_eq!(r.roi_cycles, 0);
    }

    #[test]
    fn single_cold_taken_branch_mispredicts_once() {
        // Cold bimodal counter is weakly-not-taken, the branch is taken:
        // fetch c1 (halt), issue c4, resolve c5, commit c6.
        let t = trace_of(vec![TraceItem::Inst(InstructionRecord::branch(0, None, None, true))]);
        let core = CoreConfig {
            rob_size: 1 << 20,
            iq_size: 1 << 20,
            lsq_size: 1 << 20,
            phys_regs: 1 << 20,
            ..CoreConfig::default()
        }
        .with_widths_of_one();
        let r = simulate(&t, &core, &perfect_hier(1)).unwrap();
        assert_eq!(r.branch, BranchStats { branches: 1, mispredicts: 1 });
        assert_eq!(r.total_cycles, 6);
    }

    #[test]
    fn mispredict_penalty_delays_following_instruction() {
        // Mispredicted branch resolves at cycle 5; penalty 4 means the next
        // fetch happens at cycle 10, so the ALU commits at 15.
        let t = trace_of(vec![
            TraceItem::Inst(InstructionRecord::branch(0, None, None, true)),
            TraceItem::Inst(InstructionRecord::alu(1, Reg(1), Some(Reg(0)), None)),
        ]);
        let core = CoreConfig {
            rob_size: 1 << 20,
            iq_size: 1 << 20,
            lsq_size: 1 << 20,
            phys_regs: 1 << 20,
            ..CoreConfig::default()
        }
        .with_widths_of_one();
        let r = simulate(&t, &core, &perfect_hier(1)).unwrap();
        assert_eq!(r.total_cycles, 15);
        assert!(r.stall_cycles.fetch_stall >= 4);
    }

    #[test]
    fn store_to_load_exact_forwarding_beats_cache() {
        // store to A, then load A (exact) vs load B (cold miss in real cache).
        let hier = HierarchyConfig { perfect_cycles: None, ..perfect_hier(1) };
        let forwarded = trace_of(vec![
            TraceItem::Inst(InstructionRecord::store(0, Reg(1), None, 0x100, 4)),
            TraceItem::Inst(InstructionRecord::load(1, Reg(2), None, 0x100, 4)),
        ]);
        let cold = trace_of(vec![
            TraceItem::Inst(InstructionRecord::store(0, Reg(1), None, 0x100, 4)),
            TraceItem::Inst(InstructionRecord::load(1, Reg(2), None, 0x200, 4)),
        ]);
        let core = ample_core();
        let rf = simulate(&forwarded, &core, &hier).unwrap();
        let rc = simulate(&cold, &core, &hier).unwrap();
        assert!(rf.total_cycles < rc.total_cycles);
        // The forwarded load never touched the data cache.
        assert_eq!(rf.cache.l1d.accesses, 1); // just the store's commit write
    }

    #[test]
    fn partial_overlap_blocks_until_store_commits() {
        let hier = HierarchyConfig { perfect_cycles: None, ..perfect_hier(1) };
        let partial = trace_of(vec![
            TraceItem::Inst(InstructionRecord::store(0, Reg(1), None, 0x100, 8)),
            TraceItem::Inst(InstructionRecord::load(1, Reg(2), None, 0x104, 4)),
        ]);
        let exact = trace_of(vec![
            TraceItem::Inst(InstructionRecord::store(0, Reg(1), None, 0x104, 4)),
            TraceItem::Inst(InstructionRecord::load(1, Reg(2), None, 0x104, 4)),
        ]);
        let core = ample_core();
        let rp = simulate(&partial, &core, &hier).unwrap();
        let re = simulate(&exact, &core, &hier).unwrap();
        assert!(rp.total_cycles > re.total_cycles);
    }

    #[test]
    fn in_order_commit_and_throughput_ceiling() {
        let core = CoreConfig { perfect_predictor: true, ..CoreConfig::default() };
        let t = independent_alus(400);
        let r = simulate(&t, &core, &perfect_hier(1)).unwrap();
        assert!(r.ipc_roi <= 4.0);
        assert!(r.ipc_roi > 2.0, "ipc {}", r.ipc_roi);
    }

    #[test]
    fn rob_capacity_limits_inflight_and_causes_stalls() {
        // A long-latency head (DIV chain) with many independent ALUs behind
        // it: a small ROB must stall dispatch.
        let mut items = vec![TraceItem::Inst(InstructionRecord::div(0, Reg(1), Some(Reg(1)), None))];
        for i in 1..64 {
            items.push(TraceItem::Inst(InstructionRecord::alu(i, Reg(2), Some(Reg(0)), None)));
        }
        let t = trace_of(items);
        let small = CoreConfig { rob_size: 8, perfect_predictor: true, ..CoreConfig::default() };
        let big = CoreConfig { rob_size: 128, perfect_predictor: true, ..CoreConfig::default() };
        let rs = simulate(&t, &small, &perfect_hier(1)).unwrap();
        let rb = simulate(&t, &big, &perfect_hier(1)).unwrap();
        assert!(rs.stall_cycles.rob_full > 0);
        assert!(rs.total_cycles >= rb.total_cycles);
    }

    #[test]
    fn resource_growth_never_hurts() {
        // Deterministic mixed trace; widening any one structure must not
        // increase cycles.
        let mut items = Vec::new();
        let mut x = 5u64;
        for i in 0..600u32 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
            let r1 = Reg(1 + (x % 8) as u8);
            let r2 = Reg(9 + ((x >> 8) % 8) as u8);
            match x % 10 {
                0..=3 => items.push(TraceItem::Inst(InstructionRecord::alu(i, r1, Some(r2), None))),
                4 => items.push(TraceItem::Inst(InstructionRecord::mul(i, r1, Some(r2), Some(r1)))),
                5..=6 => items.push(TraceItem::Inst(InstructionRecord::load(
                    i,
                    r1,
                    Some(r2),
                    ((x >> 3) % 4096) & !7,
                    8,
                ))),
                7 => items.push(TraceItem::Inst(InstructionRecord::store(
                    i,
                    r1,
                    Some(r2),
                    ((x >> 3) % 4096) & !7,
                    8,
                ))),
                _ => items.push(TraceItem::Inst(InstructionRecord::branch(i, Some(r1), None, x.is_multiple_of(3)))),
            }
        }
        let t = trace_of(items);
        let hier = HierarchyConfig { perfect_cycles: None, ..perfect_hier(1) };
        let base = CoreConfig::default();
        let cycles = |c: &CoreConfig| simulate(&t, c, &hier).unwrap().total_cycles;
        let c0 = cycles(&base);
        for grown in [
            CoreConfig { rob_size: 128, ..base },
            CoreConfig { iq_size: 40, ..base },
            CoreConfig { lsq_size: 24, ..base },
            CoreConfig { phys_regs: 160, ..base },
        ] {
            assert!(cycles(&grown) <= c0);
        }
    }

    #[test]
    fn no_roi_markers_means_roi_equals_total() {
        let r = simulate(&independent_alus(20), &ample_core(), &perfect_hier(1)).unwrap();
        assert_eq!(r.roi_cycles, r.total_cycles);
        assert_eq!(r.committed_instructions.roi, 20);
    }

    #[test]
    fn invalid_config_rejected() {
        let t = independent_alus(1);
        let bad = CoreConfig { rob_size: 0, ..CoreConfig::default() };
        assert!(matches!(simulate(&t, &bad, &perfect_hier(1)), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn invalid_trace_rejected() {
        let mut rec = InstructionRecord::store(0, Reg(1), None, 0x10, 4);
        rec.dst = Some(Reg(2));
        let t = trace_of(vec![TraceItem::Inst(rec)]);
        assert!(matches!(
            simulate(&t, &CoreConfig::default(), &perfect_hier(1)),
            Err(SimError::InvalidTrace(_))
        ));
    }

    // The serialized result is an external interface: field names are fixed.
    #[test]
    fn sim_result_json_field_names() {
        let r = simulate(&independent_alus(4), &ample_core(), &perfect_hier(1)).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        let keys = |obj: &serde_json::Value| -> Vec<String> {
            let mut k: Vec<String> = obj.as_object().unwrap().keys().cloned().collect();
            k.sort();
            k
        };
        let sorted = |mut v: Vec<&str>| -> Vec<String> {
            v.sort();
            v.into_iter().map(String::from).collect()
        };
        assert_eq!(
            keys(&v),
            sorted(vec![
                "total_cycles",
                "roi_cycles",
                "committed_instructions",
                "ipc_roi",
                "stall_cycles",
                "branch",
                "cache"
            ])
        );
        assert_eq!(keys(&v["committed_instructions"]), sorted(vec!["total", "roi"]));
        assert_eq!(
            keys(&v["stall_cycles"]),
            sorted(vec!["rob_full", "iq_full", "lsq_full", "no_phys_reg", "fetch_stall"])
        );
        assert_eq!(keys(&v["branch"]), sorted(vec!["branches", "mispredicts"]));
        assert_eq!(keys(&v["cache"]), sorted(vec!["l1i", "l1d", "l2"]));
        assert_eq!(
            keys(&v["cache"]["l1d"]),
            sorted(vec!["accesses", "hits", "misses", "writebacks", "miss_rate"])
        );
    }

    #[test]
    fn determinism() {
        let spec = crate::kernels::KernelSpec::new(crate::kernels::KernelKind::FlowClass, 3)
            .with_param("n_packets", 64)
            .with_param("n_buckets", 32);
        let t = crate::kernels::gen_kernel(&spec).unwrap();
        let hier = HierarchyConfig { perfect_cycles: None, ..perfect_hier(1) };
        let a = simulate(&t, &CoreConfig::default(), &hier).unwrap();
        let b = simulate(&t, &CoreConfig::default(), &hier).unwrap();
        assert_eq!(a, b);
    }
}
