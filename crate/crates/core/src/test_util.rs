//! Random valid-trace generation for oracle cross-checks and property tests.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::trace::{InstructionRecord, Reg, Trace, TraceItem};

/// Generate a random but valid trace: a static-instruction pool (stable kind
/// and operands per sid) sampled into a dynamic stream, with addresses drawn
/// from a small pool so loads and stores overlap, and an optional ROI pair.
pub fn random_valid_trace(seed: u64, len: usize) -> Trace {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut below = move |n: u64| -> u64 {
        let v = rng.next_u64();
        v % n
    };

    #[derive(Clone, Copy)]
    struct StaticInst {
        kind: u8,
        dst: u8,
        src1: u8,
        src2: u8,
        size: u8,
    }

    let n_static = 40 + below(160) as usize;
    let mut pool = Vec::with_capacity(n_static);
    for _ in 0..n_static {
        let kind = match below(100) {
            0..=39 => 0u8, // alu
            40..=47 => 1,  // mul
            48..=50 => 2,  // div
            51..=75 => 3,  // load
            76..=89 => 4,  // store
            _ => 5,        // branch
        };
        pool.push(StaticInst {
            kind,
            dst: (1 + below(31)) as u8,
            src1: below(32) as u8,
            src2: below(32) as u8,
            size: [1u8, 2, 4, 8][below(4) as usize],
        });
    }

    let with_roi = below(2) == 0;
    let roi_a = below(len as u64 + 1) as usize;
    let roi_b = roi_a + below((len - roi_a) as u64 + 1) as usize;

    let mut items = Vec::with_capacity(len + 2);
    for i in 0..len {
        if with_roi && i == roi_a {
            items.push(TraceItem::RoiBegin);
        }
        if with_roi && i == roi_b {
            items.push(TraceItem::RoiEnd);
        }
        let sid = below(n_static as u64) as u32;
        let s = pool[sid as usize];
        let rec = match s.kind {
            0 => InstructionRecord::alu(sid, Reg(s.dst), Some(Reg(s.src1)), Some(Reg(s.src2))),
            1 => InstructionRecord::mul(sid, Reg(s.dst), Some(Reg(s.src1)), Some(Reg(s.src2))),
            2 => InstructionRecord::div(sid, Reg(s.dst), Some(Reg(s.src1)), Some(Reg(s.src2))),
            k @ (3 | 4) => {
                // Aligned address from a small pool so memory ops interact.
                let slot = below(512);
                let addr = 0x4000 + slot * 8 + (below(2) * 4) % u64::from(s.size).max(1);
                let addr = addr & !(u64::from(s.size) - 1);
                if k == 3 {
                    InstructionRecord::load(sid, Reg(s.dst), Some(Reg(s.src1)), addr, s.size)
                } else {
                    InstructionRecord::store(sid, Reg(s.dst.max(1)), Some(Reg(s.src1)), addr, s.size)
                }
            }
            _ => InstructionRecord::branch(sid, Some(Reg(s.src1)), Some(Reg(s.src2)), below(2) == 0),
        };
        items.push(TraceItem::Inst(rec));
    }
    if with_roi {
        if roi_a >= len {
            items.push(TraceItem::RoiBegin);
        }
        if roi_b >= len {
            items.push(TraceItem::RoiEnd);
        }
    }
    Trace { name: format!("random-{seed}"), items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::validate_trace;

    #[test]
    fn random_traces_are_valid() {
        for seed in 0..20 {
            let t = random_valid_trace(seed, 300);
            assert!(validate_trace(&t).is_empty(), "seed {seed} invalid");
            assert_eq!(t.num_instructions(), 300);
        }
    }
}
