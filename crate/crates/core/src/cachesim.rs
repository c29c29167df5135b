//! Functional + timing simulation of a two-level cache hierarchy: split
//! L1I/L1D over a unified L2, LRU replacement, write-back/write-allocate.
//!
//! Counting discipline (mirrored by the naive reference in the tests):
//! 1. the port's L1 counts one access; hit ends the walk at `l1.hit_cycles`.
//! 2. an L1 miss makes one demand L2 access (`+ l2.hit_cycles`); an L2 miss
//!    adds `mem_cycles`, installs the line clean in L2 and counts a dirty L2
//!    victim as an L2 writeback.
//! 3. the line is installed in L1 (dirty when the triggering access is a
//!    write); a dirty L1 victim counts one L1 writeback and is sent to L2 as
//!    one more L2 access — present: mark dirty; absent: forwarded to memory
//!    without allocating. Writeback traffic never adds latency.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camodel::CacheGeometry;

#[derive(Debug, Error)]
pub enum CacheSimError {
    #[error("invalid cache configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] crate::camodel::CamodelError),
}

/// One cache level: geometry plus its (possibly model-derived) hit latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub geometry: CacheGeometry,
    pub hit_cycles: u32,
}

/// The full hierarchy. `perfect_cycles`, when set, short-circuits every access
/// to a fixed latency with no state — the degenerate configuration used by the
/// analytic-oracle release gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub l1i: CacheConfig,
    pub l1d: CacheConfig,
    pub l2: CacheConfig,
    pub mem_cycles: u32,
    #[serde(default)]
    pub perfect_cycles: Option<u32>,
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<(), CacheSimError> {
        for (name, c) in [("l1i", &self.l1i), ("l1d", &self.l1d), ("l2", &self.l2)] {
            c.geometry.validate()?;
            if c.hit_cycles == 0 {
                return Err(CacheSimError::Invalid(format!("{name}: hit_cycles must be >= 1")));
            }
        }
        if self.l2.geometry.capacity_bytes < self.l1d.geometry.capacity_bytes {
            return Err(CacheSimError::Invalid(format!(
                "l2 capacity {} smaller than l1d capacity {}",
                self.l2.geometry.capacity_bytes, self.l1d.geometry.capacity_bytes
            )));
        }
        let l1_line = self.l1i.geometry.line_bytes.max(self.l1d.geometry.line_bytes);
        if self.l2.geometry.line_bytes < l1_line {
            return Err(CacheSimError::Invalid("l2 line size smaller than an l1 line size".into()));
        }
        if self.mem_cycles == 0 {
            return Err(CacheSimError::Invalid("mem_cycles must be >= 1".into()));
        }
        if self.perfect_cycles == Some(0) {
            return Err(CacheSimError::Invalid("perfect_cycles must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which L1 array an access goes through. Both share the L2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    IFetch,
    Data,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct LevelCounters {
    accesses: u64,
    hits: u64,
    misses: u64,
    writebacks: u64,
}

/// Per-level statistics snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub writebacks: u64,
    pub miss_rate: f64,
}

impl From<LevelCounters> for LevelStats {
    fn from(c: LevelCounters) -> Self {
        let miss_rate = if c.accesses == 0 { 0.0 } else { c.misses as f64 / c.accesses as f64 };
        LevelStats { accesses: c.accesses, hits: c.hits, misses: c.misses, writebacks: c.writebacks, miss_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub l1i: LevelStats,
    pub l1d: LevelStats,
    pub l2: LevelStats,
}

#[derive(Debug, Clone, Copy)]
struct LineSlot {
    valid: bool,
    tag: u64,
    dirty: bool,
    last_use: u64,
}

const EMPTY_SLOT: LineSlot = LineSlot { valid: false, tag: 0, dirty: false, last_use: 0 };

/// A single set-associative LRU array. Exposed so tests and tools can replay
/// access strings against one level in isolation.
#[derive(Debug, Clone)]
pub struct SetAssocCache {
    line_shift: u32,
    num_sets: u64,
    assoc: usize,
    slots: Vec<LineSlot>,
    tick: u64,
}

impl SetAssocCache {
    pub fn new(geom: &CacheGeometry) -> Result<Self, CacheSimError> {
        geom.validate()?;
        let num_sets = geom.num_sets();
        Ok(Self {
            line_shift: geom.line_bytes.trailing_zeros(),
            num_sets,
            assoc: geom.associativity as usize,
            slots: vec![EMPTY_SLOT; (num_sets as usize) * geom.associativity as usize],
            tick: 0,
        })
    }

    pub fn line_bytes(&self) -> u64 {
        1u64 << self.line_shift
    }

    fn set_range(&self, addr: u64) -> (usize, u64) {
        let line = addr >> self.line_shift;
        let set = (line % self.num_sets) as usize;
        (set * self.assoc, line)
    }

    /// Probe for the line containing `addr`. A hit refreshes recency and, for
    /// writes, marks the line dirty. A miss changes nothing.
    pub fn access_line(&mut self, addr: u64, write: bool) -> bool {
        let (base, tag) = self.set_range(addr);
        self.tick += 1;
        for slot in &mut self.slots[base..base + self.assoc] {
            if slot.valid && slot.tag == tag {
                slot.last_use = self.tick;
                if write {
                    slot.dirty = true;
                }
                return true;
            }
        }
        false
    }

    /// Install the line containing `addr` (caller guarantees it is absent).
    /// Returns the evicted victim as `(line_address, dirty)` if one existed.
    pub fn install(&mut self, addr: u64, dirty: bool) -> Option<(u64, bool)> {
        let (base, tag) = self.set_range(addr);
        self.tick += 1;
        let set = &mut self.slots[base..base + self.assoc];
        debug_assert!(!set.iter().any(|s| s.valid && s.tag == tag), "install of a present line");
        let way = match set.iter().position(|s| !s.valid) {
            Some(free) => free,
            None => {
                // Evict the least recently used way.
                set.iter()
                    .enumerate()
                    .min_by_key(|(_, s)| s.last_use)
                    .map(|(i, _)| i)
                    .unwrap()
            }
        };
        let victim = if set[way].valid {
            Some((set[way].tag << self.line_shift, set[way].dirty))
        } else {
            None
        };
        set[way] = LineSlot { valid: true, tag, dirty, last_use: self.tick };
        victim
    }

    /// Presence check without touching recency.
    pub fn contains(&self, addr: u64) -> bool {
        let (base, tag) = self.set_range(addr);
        self.slots[base..base + self.assoc].iter().any(|s| s.valid && s.tag == tag)
    }

    pub fn reset(&mut self) {
        self.slots.fill(EMPTY_SLOT);
        self.tick = 0;
    }
}

/// Mutable simulation state for one hierarchy instance. Single-owner; one
/// instance per simulation run.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    l1i: SetAssocCache,
    l1d: SetAssocCache,
    l2: SetAssocCache,
    l1i_hit: u32,
    l1d_hit: u32,
    l2_hit: u32,
    mem_cycles: u32,
    perfect: Option<u32>,
    c_l1i: LevelCounters,
    c_l1d: LevelCounters,
    c_l2: LevelCounters,
}

impl Hierarchy {
    pub fn new(cfg: &HierarchyConfig) -> Result<Self, CacheSimError> {
        cfg.validate()?;
        Ok(Self {
            l1i: SetAssocCache::new(&cfg.l1i.geometry)?,
            l1d: SetAssocCache::new(&cfg.l1d.geometry)?,
            l2: SetAssocCache::new(&cfg.l2.geometry)?,
            l1i_hit: cfg.l1i.hit_cycles,
            l1d_hit: cfg.l1d.hit_cycles,
            l2_hit: cfg.l2.hit_cycles,
            mem_cycles: cfg.mem_cycles,
            perfect: cfg.perfect_cycles,
            c_l1i: LevelCounters::default(),
            c_l1d: LevelCounters::default(),
            c_l2: LevelCounters::default(),
        })
    }

    /// Fixed latency when the hierarchy runs in perfect mode.
    pub fn perfect(&self) -> Option<u32> {
        self.perfect
    }

    /// L1 line size seen by a port, for the caller's line-crossing splits.
    pub fn line_bytes(&self, port: Port) -> u64 {
        match port {
            Port::IFetch => self.l1i.line_bytes(),
            Port::Data => self.l1d.line_bytes(),
        }
    }

    /// One access, pre-split so that `addr..addr+size` stays within one L1
    /// line. Returns the access latency in cycles and updates all state.
    pub fn access(&mut self, port: Port, addr: u64, size: u8, is_write: bool) -> u32 {
        if let Some(lat) = self.perfect {
            let c = match port {
                Port::IFetch => &mut self.c_l1i,
                Port::Data => &mut self.c_l1d,
            };
            c.accesses += 1;
            c.hits += 1;
            return lat;
        }
        debug_assert!(size > 0);
        debug_assert_eq!(
            addr >> self.line_bytes(port).trailing_zeros(),
            (addr + u64::from(size) - 1) >> self.line_bytes(port).trailing_zeros(),
            "caller must split line-crossing accesses"
        );

        let (l1, c_l1, l1_hit) = match port {
            Port::IFetch => (&mut self.l1i, &mut self.c_l1i, self.l1i_hit),
            Port::Data => (&mut self.l1d, &mut self.c_l1d, self.l1d_hit),
        };

        c_l1.accesses += 1;
        if l1.access_line(addr, is_write) {
            c_l1.hits += 1;
            return l1_hit;
        }
        c_l1.misses += 1;

        // Demand access to the shared L2.
        self.c_l2.accesses += 1;
        let mut lat = l1_hit + self.l2_hit;
        if self.l2.access_line(addr, false) {
            self.c_l2.hits += 1;
        } else {
            self.c_l2.misses += 1;
            lat += self.mem_cycles;
            if let Some((_, true)) = self.l2.install(addr, false) {
                self.c_l2.writebacks += 1;
            }
        }

        // Fill L1; write-allocate marks the line dirty on a write.
        if let Some((victim_addr, true)) = l1.install(addr, is_write) {
            c_l1.writebacks += 1;
            self.c_l2.accesses += 1;
            if self.l2.access_line(victim_addr, true) {
                self.c_l2.hits += 1;
            } else {
                // Not present in L2: goes straight to memory, no allocation.
                self.c_l2.misses += 1;
            }
        }
        lat
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats { l1i: self.c_l1i.into(), l1d: self.c_l1d.into(), l2: self.c_l2.into() }
    }

    pub fn reset(&mut self) {
        self.l1i.reset();
        self.l1d.reset();
        self.l2.reset();
        self.c_l1i = LevelCounters::default();
        self.c_l1d = LevelCounters::default();
        self.c_l2 = LevelCounters::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KIB: u64 = 1024;

    fn small_cfg() -> HierarchyConfig {
        HierarchyConfig {
            l1i: CacheConfig { geometry: CacheGeometry::l1(KIB, 32, 2), hit_cycles: 1 },
            l1d: CacheConfig { geometry: CacheGeometry::l1(KIB, 32, 2), hit_cycles: 1 },
            l2: CacheConfig { geometry: CacheGeometry::l2(4 * KIB, 64, 4), hit_cycles: 6 },
            mem_cycles: 100,
            perfect_cycles: None,
        }
    }

    #[test]
    fn cold_access_pays_full_miss_path() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        assert_eq!(h.access(Port::Data, 0x1000, 4, false), 1 + 6 + 100);
    }

    #[test]
    fn immediate_reaccess_hits_l1() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        h.access(Port::Data, 0x1000, 4, false);
        assert_eq!(h.access(Port::Data, 0x1000, 4, false), 1);
    }

    #[test]
    fn lru_thrash_over_ways_plus_one_lines() {
        // l1d: 1 KiB, 32 B lines, 2-way => 16 sets. Three lines mapping to
        // set 0 are 0x0, 16*32 = 0x200, 0x400. Round-robin over them misses
        // L1 every time.
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        let addrs = [0x0u64, 0x200, 0x400];
        for round in 0..4 {
            for &a in &addrs {
                let lat = h.access(Port::Data, a, 4, false);
                assert!(lat > 1, "round {round} addr {a:#x} unexpectedly hit L1");
            }
        }
        let s = h.stats();
        assert_eq!(s.l1d.hits, 0);
        assert_eq!(s.l1d.misses, 12);
    }

    #[test]
    fn l2_absorbs_l1_thrash() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        let addrs = [0x0u64, 0x200, 0x400];
        for &a in &addrs {
            h.access(Port::Data, a, 4, false);
        }
        // Second round: L1 misses but L2 hits, so latency is l1+l2 only.
        for &a in &addrs {
            assert_eq!(h.access(Port::Data, a, 4, false), 1 + 6);
        }
    }

    #[test]
    fn write_allocate_and_writeback() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        // Dirty a line in set 0, then push two more lines through the set.
        h.access(Port::Data, 0x0, 4, true);
        h.access(Port::Data, 0x200, 4, false);
        h.access(Port::Data, 0x400, 4, false); // evicts dirty 0x0
        let s = h.stats();
        assert_eq!(s.l1d.writebacks, 1);
        assert!(s.l1d.writebacks <= s.l1d.misses);
    }

    #[test]
    fn ports_are_split_but_share_l2() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        h.access(Port::IFetch, 0x40, 4, false);
        // Same line through the data port: misses L1D, hits shared L2.
        assert_eq!(h.access(Port::Data, 0x40, 4, false), 1 + 6);
        let s = h.stats();
        assert_eq!(s.l1i.accesses, 1);
        assert_eq!(s.l1d.accesses, 1);
        assert_eq!(s.l2.hits, 1);
    }

    #[test]
    fn stats_zero_initially_and_after_reset() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        let zero = h.stats();
        assert_eq!(zero.l1d.accesses, 0);
        h.access(Port::Data, 0x1000, 4, true);
        h.reset();
        assert_eq!(h.stats(), zero);
        // Post-reset access behaves cold.
        assert_eq!(h.access(Port::Data, 0x1000, 4, false), 1 + 6 + 100);
        // Reset twice equals reset once.
        h.reset();
        h.reset();
        assert_eq!(h.stats(), zero);
    }

    #[test]
    fn bookkeeping_identity_holds() {
        let mut h = Hierarchy::new(&small_cfg()).unwrap();
        let mut x = 1u64;
        for i in 0..5000u64 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let addr = (x >> 16) % (8 * KIB);
            let addr = addr & !3;
            h.access(Port::Data, addr, 4, i % 3 == 0);
        }
        let s = h.stats();
        for lvl in [s.l1i, s.l1d, s.l2] {
            assert_eq!(lvl.hits + lvl.misses, lvl.accesses);
            assert!(lvl.writebacks <= lvl.misses);
            assert!((0.0..=1.0).contains(&lvl.miss_rate));
        }
    }

    #[test]
    fn perfect_mode_fixed_latency() {
        let cfg = HierarchyConfig { perfect_cycles: Some(1), ..small_cfg() };
        let mut h = Hierarchy::new(&cfg).unwrap();
        for _ in 0..3 {
            assert_eq!(h.access(Port::Data, 0xdead_0000, 8, false), 1);
        }
        assert_eq!(h.stats().l1d.misses, 0);
    }

    #[test]
    fn l2_smaller_than_l1d_rejected() {
        let mut cfg = small_cfg();
        cfg.l2.geometry.capacity_bytes = 512;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_perfect_latency_rejected() {
        let cfg = HierarchyConfig { perfect_cycles: Some(0), ..small_cfg() };
        assert!(cfg.validate().is_err());
    }
}
