//! Naive case-insensitive substring search: every needle is slid over the
//! whole haystack, comparing lowercased bytes until the first mismatch.

use super::builder::{DetRng, Region, TraceBuilder};
use crate::trace::Trace;

pub(super) struct HostData {
    pub hay: Vec<u8>,
    /// Stored lowercased, as the setup phase writes them.
    pub needles: Vec<Vec<u8>>,
}

/// Input derivation shared with the test oracle.
pub(super) fn host_data(hay_len: usize, needle_len: usize, n_needles: usize, seed: u64) -> HostData {
    let mut rng = DetRng::new(seed);
    let mut hay = Vec::with_capacity(hay_len);
    for _ in 0..hay_len {
        let mut c = b'a' + rng.below(26) as u8;
        if rng.chance(50) {
            c &= !0x20; // uppercase
        }
        hay.push(c);
    }
    let mut needles = Vec::with_capacity(n_needles);
    for _ in 0..n_needles {
        let mut ndl = Vec::with_capacity(needle_len);
        if rng.chance(60) && hay_len >= needle_len {
            let pos = rng.below((hay_len - needle_len + 1) as u64) as usize;
            ndl.extend(hay[pos..pos + needle_len].iter().map(|c| c | 0x20));
        } else {
            for _ in 0..needle_len {
                ndl.push(b'a' + rng.below(26) as u8);
            }
        }
        needles.push(ndl);
    }
    HostData { hay, needles }
}

pub(super) fn generate(hay_len: usize, needle_len: usize, n_needles: usize, seed: u64) -> (Trace, Vec<Region>) {
    let data = host_data(hay_len, needle_len, n_needles, seed);
    let mut b = TraceBuilder::new("string_search");

    let hay = b.region("rg_hay", "hay", hay_len as u64);
    let ndl = b.region("rg_ndl", "needles", (n_needles * needle_len) as u64);
    let found = b.region("rg_found", "found", (n_needles * 4) as u64);
    let zero = b.constant("c_zero");
    let one = b.constant("c_one");
    b.pin(zero);
    b.pin(one);

    let hay_base = b.base(hay);
    let ndl_base = b.base(ndl);
    let found_base = b.base(found);

    for i in 0..hay_len {
        let v = b.alu("hay_val", zero, None);
        b.store("st_hay", hay, i as u64, 1, v, hay_base);
    }
    for (m, needle) in data.needles.iter().enumerate() {
        for j in 0..needle.len() {
            let v = b.alu("ndl_val", zero, None);
            b.store("st_ndl", ndl, (m * needle_len + j) as u64, 1, v, ndl_base);
        }
    }

    b.roi_begin();
    for (m, needle) in data.needles.iter().enumerate() {
        let mut count = b.alu("cnt_init", zero, None);
        b.pin(count);
        for i in 0..=hay_len - needle_len {
            let mut matched = true;
            for (j, &nb) in needle.iter().enumerate() {
                let ha = b.alu("hay_addr", hay_base, None);
                let c = b.load("ld_hay", hay, (i + j) as u64, 1, ha);
                let lc = b.alu("lower", c, None);
                let na = b.alu("ndl_addr", ndl_base, None);
                let nc = b.load("ld_ndl", ndl, (m * needle_len + j) as u64, 1, na);
                let eq = (data.hay[i + j] | 0x20) == nb;
                b.branch("br_cmp", Some(lc), Some(nc), !eq);
                if !eq {
                    matched = false;
                    break;
                }
            }
            if matched {
                let nc = b.alu("cnt_inc", count, Some(one));
                count = b.repin(count, nc);
            }
        }
        b.store("st_found", found, (m * 4) as u64, 4, count, found_base);
        b.unpin(count);
    }
    b.roi_end();

    b.finish()
}

#[cfg(test)]
/// Reference count of haystack-byte loads the naive search performs:
/// per window, one load per compared character.
pub(super) fn reference_hay_loads(data: &HostData) -> u64 {
    let mut loads = 0u64;
    for needle in &data.needles {
        let k = needle.len();
        for i in 0..=data.hay.len() - k {
            for (j, &nb) in needle.iter().enumerate() {
                loads += 1;
                if (data.hay[i + j] | 0x20) != nb {
                    let _ = j;
                    break;
                }
            }
        }
    }
    loads
}
