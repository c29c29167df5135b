//! Emission machinery shared by the kernel generators.
//!
//! The builder assigns stable static-instruction ids (one per call site
//! label, reused across loop iterations), lays out named data regions in
//! disjoint address ranges, and allocates registers: permanent registers for
//! region base pointers and constants, a round-robin pool for everything
//! else. Values are generation-checked so a stale register read (a value held
//! across too many allocations without pinning) panics during generation
//! rather than silently corrupting the dependence structure.

use std::collections::HashMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::trace::{InstructionRecord, Reg, Trace, TraceItem, NUM_LOGICAL_REGS};

/// Deterministic RNG used by all generators. Only `next_u64` touches the
/// underlying stream, so derived helpers are stable by construction.
pub(crate) struct DetRng(ChaCha12Rng);

impl DetRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha12Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform-ish value in `0..n` (modulo bias is irrelevant here).
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// True with roughly `pct` percent probability.
    pub fn chance(&mut self, pct: u64) -> bool {
        self.below(100) < pct
    }
}

/// A named, disjoint data address range used by a kernel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub name: String,
    pub base: u64,
    pub size: u64,
}

impl Region {
    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.base && addr < self.base + self.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RegionId(usize);

/// A value produced by an emitted instruction, i.e. a register plus the
/// generation of its contents.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Val {
    reg: u8,
    gen: u32,
}

const REGION_BASE: u64 = 0x1000_0000;
const REGION_ALIGN: u64 = 4096;
const MAX_PERMANENT: u8 = 12;

pub(crate) struct TraceBuilder {
    items: Vec<TraceItem>,
    sites: HashMap<&'static str, u32>,
    next_sid: u32,
    regions: Vec<Region>,
    region_base_vals: Vec<Val>,
    next_base: u64,
    /// r1..=permanent_top hold region bases and constants, never recycled.
    permanent_top: u8,
    cursor: u8,
    pinned: u32,
    gens: [u32; NUM_LOGICAL_REGS as usize],
    name: String,
}

impl TraceBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            items: Vec::new(),
            sites: HashMap::new(),
            next_sid: 0,
            regions: Vec::new(),
            region_base_vals: Vec::new(),
            next_base: REGION_BASE,
            permanent_top: 0,
            cursor: 0,
            pinned: 0,
            gens: [0; NUM_LOGICAL_REGS as usize],
            name: name.into(),
        }
    }

    fn sid(&mut self, site: &'static str) -> u32 {
        if let Some(&s) = self.sites.get(site) {
            return s;
        }
        let s = self.next_sid;
        self.next_sid += 1;
        self.sites.insert(site, s);
        s
    }

    fn write_reg(&mut self, reg: u8) -> Val {
        self.gens[reg as usize] += 1;
        Val { reg, gen: self.gens[reg as usize] }
    }

    fn read(&self, v: Val) -> Reg {
        assert_eq!(
            self.gens[v.reg as usize], v.gen,
            "stale register value read through r{} (kernel emission bug)",
            v.reg
        );
        Reg(v.reg)
    }

    fn alloc_permanent(&mut self) -> u8 {
        assert!(self.permanent_top < MAX_PERMANENT, "too many permanent registers");
        self.permanent_top += 1;
        self.permanent_top
    }

    fn alloc_rotating(&mut self) -> u8 {
        let first = self.permanent_top + 1;
        let span = NUM_LOGICAL_REGS - first;
        assert!(span >= 2, "no rotating registers left");
        for step in 0..span {
            let reg = first + (self.cursor + step) % span;
            if self.pinned & (1 << reg) == 0 {
                self.cursor = (self.cursor + step + 1) % span;
                return reg;
            }
        }
        panic!("all rotating registers are pinned");
    }

    /// Keep `v`'s register out of the round-robin pool until unpinned.
    pub fn pin(&mut self, v: Val) {
        self.read(v);
        self.pinned |= 1 << v.reg;
    }

    pub fn unpin(&mut self, v: Val) {
        self.pinned &= !(1 << v.reg);
    }

    /// Replace a pinned loop-carried value: unpins `old`, pins `new`.
    pub fn repin(&mut self, old: Val, new: Val) -> Val {
        self.unpin(old);
        self.pin(new);
        new
    }

    /// Declare a data region; emits one ALU materializing its base pointer
    /// into a permanent register.
    pub fn region(&mut self, site: &'static str, name: &str, size: u64) -> RegionId {
        assert!(size > 0);
        let base = self.next_base;
        let end = base + size;
        self.next_base = (end + REGION_ALIGN) & !(REGION_ALIGN - 1);
        self.next_base += REGION_ALIGN;
        self.regions.push(Region { name: name.to_string(), base, size });

        let reg = self.alloc_permanent();
        let val = self.write_reg(reg);
        let sid = self.sid(site);
        self.items
            .push(TraceItem::Inst(InstructionRecord::alu(sid, Reg(reg), Some(Reg(0)), None)));
        self.region_base_vals.push(val);
        RegionId(self.regions.len() - 1)
    }

    /// The base-pointer value of a region.
    pub fn base(&self, r: RegionId) -> Val {
        self.region_base_vals[r.0]
    }

    /// Materialize a constant into a permanent register (ALU from r0).
    pub fn constant(&mut self, site: &'static str) -> Val {
        let reg = self.alloc_permanent();
        let val = self.write_reg(reg);
        let sid = self.sid(site);
        self.items
            .push(TraceItem::Inst(InstructionRecord::alu(sid, Reg(reg), Some(Reg(0)), None)));
        val
    }

    fn emit_op3(
        &mut self,
        site: &'static str,
        kind: crate::trace::Kind,
        a: Val,
        b: Option<Val>,
    ) -> Val {
        let s1 = Some(self.read(a));
        let s2 = b.map(|v| self.read(v));
        let dst = self.alloc_rotating();
        let out = self.write_reg(dst);
        let sid = self.sid(site);
        let rec = match kind {
            crate::trace::Kind::Alu => InstructionRecord::alu(sid, Reg(dst), s1, s2),
            crate::trace::Kind::Mul => InstructionRecord::mul(sid, Reg(dst), s1, s2),
            crate::trace::Kind::Div => InstructionRecord::div(sid, Reg(dst), s1, s2),
            _ => unreachable!(),
        };
        self.items.push(TraceItem::Inst(rec));
        out
    }

    pub fn alu(&mut self, site: &'static str, a: Val, b: Option<Val>) -> Val {
        self.emit_op3(site, crate::trace::Kind::Alu, a, b)
    }

    pub fn mul(&mut self, site: &'static str, a: Val, b: Val) -> Val {
        self.emit_op3(site, crate::trace::Kind::Mul, a, Some(b))
    }

    pub fn div(&mut self, site: &'static str, a: Val, b: Val) -> Val {
        self.emit_op3(site, crate::trace::Kind::Div, a, Some(b))
    }

    fn region_addr(&self, r: RegionId, offset: u64, size: u8) -> u64 {
        let region = &self.regions[r.0];
        assert!(
            offset + u64::from(size) <= region.size,
            "access past region `{}`: offset {offset} size {size}",
            region.name
        );
        let addr = region.base + offset;
        debug_assert_eq!(addr % u64::from(size), 0, "unaligned access in region `{}`", region.name);
        addr
    }

    pub fn load(&mut self, site: &'static str, r: RegionId, offset: u64, size: u8, base: Val) -> Val {
        let addr = self.region_addr(r, offset, size);
        let b = Some(self.read(base));
        let dst = self.alloc_rotating();
        let out = self.write_reg(dst);
        let sid = self.sid(site);
        self.items.push(TraceItem::Inst(InstructionRecord::load(sid, Reg(dst), b, addr, size)));
        out
    }

    pub fn store(&mut self, site: &'static str, r: RegionId, offset: u64, size: u8, data: Val, base: Val) {
        let addr = self.region_addr(r, offset, size);
        let d = self.read(data);
        let b = Some(self.read(base));
        let sid = self.sid(site);
        self.items.push(TraceItem::Inst(InstructionRecord::store(sid, d, b, addr, size)));
    }

    pub fn branch(&mut self, site: &'static str, a: Option<Val>, b: Option<Val>, taken: bool) {
        let s1 = a.map(|v| self.read(v));
        let s2 = b.map(|v| self.read(v));
        let sid = self.sid(site);
        self.items.push(TraceItem::Inst(InstructionRecord::branch(sid, s1, s2, taken)));
    }

    pub fn roi_begin(&mut self) {
        self.items.push(TraceItem::RoiBegin);
    }

    pub fn roi_end(&mut self) {
        self.items.push(TraceItem::RoiEnd);
    }

    pub fn finish(self) -> (Trace, Vec<Region>) {
        let trace = Trace { name: self.name, items: self.items };
        (trace, self.regions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::validate_trace;

    #[test]
    fn sids_are_stable_per_site() {
        let mut b = TraceBuilder::new("t");
        let z = b.constant("zero");
        b.pin(z);
        for _ in 0..5 {
            let v = b.alu("loop_body", z, None);
            b.branch("loop_back", Some(v), None, true);
        }
        let (t, _) = b.finish();
        let sids: Vec<u32> = t.instructions().map(|r| r.sid).collect();
        // constant + 5x(alu, branch): alu always sid 1, branch always sid 2.
        assert_eq!(sids, vec![0, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn regions_are_disjoint_and_emit_valid_traces() {
        let mut b = TraceBuilder::new("t");
        let r1 = b.region("r1", "a", 1000);
        let r2 = b.region("r2", "b", 4096);
        let base1 = b.base(r1);
        let v = b.load("ld", r1, 4, 4, base1);
        let base2 = b.base(r2);
        b.store("st", r2, 8, 4, v, base2);
        let (t, regions) = b.finish();
        assert!(validate_trace(&t).is_empty());
        let (a, bb) = (&regions[0], &regions[1]);
        assert!(a.base + a.size <= bb.base || bb.base + bb.size <= a.base);
    }

    #[test]
    #[should_panic(expected = "stale register value")]
    fn stale_value_read_panics() {
        let mut b = TraceBuilder::new("t");
        let z = b.constant("zero");
        b.pin(z);
        let held = b.alu("first", z, None);
        // Exhaust the rotating pool so `held`'s register is recycled.
        for _ in 0..40 {
            b.alu("churn", z, None);
        }
        b.alu("use_stale", held, None);
    }

    #[test]
    fn pinned_values_survive_churn() {
        let mut b = TraceBuilder::new("t");
        let z = b.constant("zero");
        b.pin(z);
        let held = b.alu("first", z, None);
        b.pin(held);
        for _ in 0..100 {
            b.alu("churn", z, None);
        }
        b.alu("use_pinned", held, None);
        let (t, _) = b.finish();
        assert!(validate_trace(&t).is_empty());
    }
}
