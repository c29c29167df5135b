//! Independent timing oracle for the degenerate configuration: all stage
//! widths one, structures effectively unbounded, every cache access a hit at
//! one fixed latency, perfect prediction.
//!
//! Under that configuration the pipeline reduces to closed-form recurrences
//! (L = the fixed access latency, instructions indexed from 1 in trace
//! order):
//!
//! ```text
//! fetch      F(i) = i * L                (blocking one-wide fetch)
//! eligible   E(i) = F(i) + 3             (decode, dispatch, +1 to issue)
//! issue      I(i) = earliest cycle >= max(E(i), R(i)) that wins the port
//! ready      R(i) = max over true dependences p of I(p) + lat(p),
//!                   plus the load/store ordering rules
//! writeback  W(i) = I(i) + lat(i)
//! commit     C(i) = max(C(i-1) + 1, W(i) + 1)
//! total      C(n); a trace with no instructions takes zero cycles
//! ```
//!
//! The single issue port goes to the oldest ready instruction each cycle;
//! loads wait for every older store to have issued, forward in one cycle
//! from an exact-match store still in flight, and stall behind a partially
//! overlapping one. With no conflicts this collapses to the
//! `6 + Σ max(1, lat(i)) − (pipelining overlap)` form: n independent
//! single-cycle instructions finish in `6 + n − 1` cycles.
//!
//! The implementation below evaluates the recurrences directly — no rename
//! tables, queues, cache state, or predictor — and is the release-gate
//! cross-check for `simulate` under the same configuration.

use crate::cachesim::HierarchyConfig;
use crate::trace::{InstructionRecord, Kind, Trace};

use super::{CoreConfig, SimError};

const NO_DEP: usize = usize::MAX;

/// Exact cycle count for the degenerate configuration. Errors when the
/// configuration is not degenerate.
pub fn analytic_cycles(trace: &Trace, core: &CoreConfig, hier: &HierarchyConfig) -> Result<u64, SimError> {
    core.validate()?;
    let widths = [
        core.fetch_width,
        core.decode_width,
        core.dispatch_width,
        core.issue_width,
        core.commit_width,
    ];
    if widths.iter().any(|&w| w != 1) {
        return Err(SimError::NotDegenerate("all stage widths must be 1".into()));
    }
    if !core.perfect_predictor {
        return Err(SimError::NotDegenerate("perfect predictor required".into()));
    }
    let Some(fixed) = hier.perfect_cycles else {
        return Err(SimError::NotDegenerate("perfect cache (fixed access latency) required".into()));
    };

    let insts: Vec<&InstructionRecord> = trace.instructions().collect();
    let n = insts.len();
    if n == 0 {
        return Ok(0);
    }
    for (name, size) in [("rob_size", core.rob_size), ("iq_size", core.iq_size), ("lsq_size", core.lsq_size)] {
        if (size as usize) < n {
            return Err(SimError::NotDegenerate(format!("{name} must be >= trace length")));
        }
    }
    if (core.phys_regs as u64) < 33 + n as u64 {
        return Err(SimError::NotDegenerate("phys_regs must be effectively unbounded".into()));
    }

    let lat_fetch = u64::from(fixed);
    let latency = |rec: &InstructionRecord| -> u64 {
        u64::from(match rec.kind {
            Kind::Alu | Kind::Store | Kind::Branch => core.latencies.alu,
            Kind::Mul => core.latencies.mul,
            Kind::Div => core.latencies.div,
            Kind::Load => fixed,
        })
    };

    // True dependences through logical registers (rename removes WAR/WAW).
    let mut last_writer = [NO_DEP; 32];
    let mut deps = vec![[NO_DEP; 2]; n];
    let mut stores = Vec::new();
    for (i, rec) in insts.iter().enumerate() {
        for (slot, src) in [rec.src1, rec.src2].into_iter().enumerate() {
            if let Some(r) = src {
                deps[i][slot] = last_writer[r.0 as usize];
            }
        }
        if let Some(d) = rec.dst {
            last_writer[d.0 as usize] = i;
        }
        if rec.kind == Kind::Store {
            stores.push(i);
        }
    }

    let eligible = |i: usize| (i as u64 + 1) * lat_fetch + 3;
    let overlaps = |a: &InstructionRecord, b: &InstructionRecord| {
        let (aa, ae) = (a.addr.unwrap(), a.addr.unwrap() + u64::from(a.size.unwrap()));
        let (ba, be) = (b.addr.unwrap(), b.addr.unwrap() + u64::from(b.size.unwrap()));
        aa < be && ba < ae
    };

    let mut issued = vec![false; n];
    let mut done = vec![0u64; n];
    let mut head = 0usize;
    let mut store_ptr = 0usize;
    let mut t: u64 = 0;

    loop {
        t += 1;
        // Commit (width 1, in order, completed in an earlier cycle).
        if issued[head] && done[head] < t {
            head += 1;
            if head == n {
                return Ok(t);
            }
        }

        // Issue port: oldest ready instruction wins.
        while store_ptr < stores.len() && issued[stores[store_ptr]] {
            store_ptr += 1;
        }
        let oldest_unissued_store = stores.get(store_ptr).copied().unwrap_or(NO_DEP);

        let mut pick = None;
        for i in head..n {
            if issued[i] {
                continue;
            }
            if eligible(i) > t {
                break;
            }
            let ready = deps[i].iter().all(|&p| p == NO_DEP || (issued[p] && done[p] <= t));
            if !ready {
                continue;
            }
            let rec = insts[i];
            let mut lat = latency(rec);
            if rec.kind == Kind::Load {
                if oldest_unissued_store < i {
                    continue;
                }
                // Youngest older store still in flight (index >= head).
                let upper = stores.partition_point(|&s| s < i);
                let mut decision_block = false;
                for &s in stores[..upper].iter().rev() {
                    if s < head {
                        break;
                    }
                    if overlaps(rec, insts[s]) {
                        if insts[s].addr == rec.addr && insts[s].size == rec.size {
                            lat = 1; // forwarded
                        } else {
                            decision_block = true;
                        }
                        break;
                    }
                }
                if decision_block {
                    continue;
                }
            }
            pick = Some((i, lat));
            break;
        }
        if let Some((i, lat)) = pick {
            issued[i] = true;
            done[i] = t + lat;
        }
        debug_assert!(t < 1u64 << 40, "oracle stuck");
    }
}

#[cfg(test)]
mod tests {
    use super::super::{simulate, CoreConfig};
    use super::*;
    use crate::cachesim::{CacheConfig, HierarchyConfig};
    use crate::camodel::CacheGeometry;
    use crate::test_util::random_valid_trace;
    use crate::trace::{Reg, TraceItem};

    fn degenerate_core() -> CoreConfig {
        CoreConfig {
            rob_size: 1 << 24,
            iq_size: 1 << 24,
            lsq_size: 1 << 24,
            phys_regs: 1 << 24,
            perfect_predictor: true,
            ..CoreConfig::default()
        }
        .with_widths_of_one()
    }

    fn perfect_hier(lat: u32) -> HierarchyConfig {
        HierarchyConfig {
            l1i: CacheConfig { geometry: CacheGeometry::l1(65536, 32, 4), hit_cycles: 1 },
            l1d: CacheConfig { geometry: CacheGeometry::l1(65536, 32, 4), hit_cycles: 1 },
            l2: CacheConfig { geometry: CacheGeometry::l2(131072, 64, 8), hit_cycles: 6 },
            mem_cycles: 100,
            perfect_cycles: Some(lat),
        }
    }

    #[test]
    fn empty_trace_is_zero() {
        let t = Trace { name: "t".into(), items: vec![TraceItem::RoiBegin, TraceItem::RoiEnd] };
        assert_eq!(analytic_cycles(&t, &degenerate_core(), &perfect_hier(1)).unwrap(), 0);
    }

    #[test]
    fn one_alu_is_six_cycles() {
        let t = Trace {
            name: "t".into(),
            items: vec![TraceItem::Inst(InstructionRecord::alu(0, Reg(1), Some(Reg(0)), None))],
        };
        assert_eq!(analytic_cycles(&t, &degenerate_core(), &perfect_hier(1)).unwrap(), 6);
    }

    #[test]
    fn ten_independent_loads_close_form() {
        let items: Vec<TraceItem> = (0..10)
            .map(|i| TraceItem::Inst(InstructionRecord::load(i, Reg((1 + i % 8) as u8), None, u64::from(i) * 8, 4)))
            .collect();
        let t = Trace { name: "t".into(), items };
        assert_eq!(analytic_cycles(&t, &degenerate_core(), &perfect_hier(1)).unwrap(), 6 + 10 - 1);
    }

    #[test]
    fn rejects_non_degenerate_configs() {
        let t = Trace {
            name: "t".into(),
            items: vec![TraceItem::Inst(InstructionRecord::alu(0, Reg(1), Some(Reg(0)), None))],
        };
        let wide = CoreConfig { issue_width: 2, ..degenerate_core() };
        assert!(matches!(
            analytic_cycles(&t, &wide, &perfect_hier(1)),
            Err(SimError::NotDegenerate(_))
        ));
        let real_cache = HierarchyConfig { perfect_cycles: None, ..perfect_hier(1) };
        assert!(matches!(
            analytic_cycles(&t, &degenerate_core(), &real_cache),
            Err(SimError::NotDegenerate(_))
        ));
        let two = Trace {
            name: "t".into(),
            items: vec![
                TraceItem::Inst(InstructionRecord::alu(0, Reg(1), Some(Reg(0)), None)),
                TraceItem::Inst(InstructionRecord::alu(1, Reg(2), Some(Reg(0)), None)),
            ],
        };
        let small = CoreConfig { rob_size: 1, ..degenerate_core() };
        assert!(matches!(
            analytic_cycles(&two, &small, &perfect_hier(1)),
            Err(SimError::NotDegenerate(_))
        ));
    }

    #[test]
    fn matches_simulate_on_random_traces() {
        let core = degenerate_core();
        for seed in 0..25u64 {
            let t = random_valid_trace(seed, 400);
            let lat = 1 + (seed % 3) as u32;
            let hier = perfect_hier(lat);
            let oracle = analytic_cycles(&t, &core, &hier).unwrap();
            let sim = simulate(&t, &core, &hier).unwrap();
            assert_eq!(
                sim.total_cycles, oracle,
                "divergence at seed {seed} (fixed latency {lat})"
            );
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        // Equality also holds under arbitrary execute latencies.
        #[test]
        fn matches_simulate_with_random_latencies(
            seed in 0u64..10_000,
            alu in 1u32..4,
            mul in 1u32..8,
            div in 1u32..20,
            lat in 1u32..4,
        ) {
            let mut core = degenerate_core();
            core.latencies = crate::cpu::Latencies { alu, mul, div };
            let t = random_valid_trace(seed, 250);
            let hier = perfect_hier(lat);
            let oracle = analytic_cycles(&t, &core, &hier).unwrap();
            let sim = simulate(&t, &core, &hier).unwrap();
            proptest::prop_assert_eq!(sim.total_cycles, oracle);
        }
    }
}
