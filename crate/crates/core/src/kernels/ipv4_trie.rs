//! IPv4 route lookup over a fixed-stride multibit trie with leaf pushing.
//! Table construction and the lookup stream both run inside the ROI; route
//! prefixes and lookup keys arrive as register values.

use super::builder::{DetRng, Region, TraceBuilder, Val};
use crate::trace::Trace;

const CHILD_BIT: u32 = 1 << 31;

struct HostTrie {
    nodes: Vec<Vec<u32>>,
}

impl HostTrie {
    fn new(fanout: usize) -> Self {
        Self { nodes: vec![vec![0; fanout]] }
    }

    fn is_child(e: u32) -> bool {
        e & CHILD_BIT != 0
    }
}

pub(super) fn generate(n_routes: usize, n_lookups: usize, stride: usize, seed: u64) -> (Trace, Vec<Region>) {
    let mut rng = DetRng::new(seed);
    let levels = 32 / stride;
    let fanout = 1usize << stride;
    let node_bytes = (fanout * 4) as u64;
    let cap_nodes = n_routes * levels + 2;

    let mut b = TraceBuilder::new("ipv4_trie");
    let trie = b.region("rg_trie", "trie", cap_nodes as u64 * node_bytes);
    let zero = b.constant("c_zero");
    b.pin(zero);
    let trie_base = b.base(trie);

    // Routing table to install.
    let mut routes = Vec::with_capacity(n_routes);
    for _ in 0..n_routes {
        let len = 8 + rng.below(17) as u32; // 8..=24
        let prefix = (rng.next_u64() as u32) & (!0u32 << (32 - len));
        let nexthop = 1 + rng.below(1 << 20) as u32;
        routes.push((prefix, len, nexthop));
    }

    let mut host = HostTrie::new(fanout);

    let entry_off = |node: usize, chunk: usize| (node * fanout + chunk) as u64 * 4;
    let chunk_of = |addr: u32, level: usize| ((addr as usize) >> (32 - stride * (level + 1))) & (fanout - 1);

    b.roi_begin();

    // Build the table.
    for &(prefix, len, nexthop) in &routes {
        let depth = (len as usize).div_ceil(stride);
        let key = b.alu("rt_key", zero, None);
        b.pin(key);

        let mut node = 0usize;
        let mut node_val = trie_base;
        for level in 0..depth - 1 {
            let chunk = chunk_of(prefix, level);
            let ch = b.alu("ins_chunk", key, None);
            let ea = b.alu("ins_eaddr", ch, Some(node_val));
            let e = host.nodes[node][chunk];
            let ev = b.load("ld_ins_entry", trie, entry_off(node, chunk), 4, ea);
            let has_child = HostTrie::is_child(e);
            b.branch("br_ins_child", Some(ev), None, has_child);
            if has_child {
                node = (e & !CHILD_BIT) as usize;
                node_val = ev;
            } else {
                // Allocate a child; an existing leaf is pushed down.
                let new_idx = host.nodes.len();
                assert!(new_idx < cap_nodes, "trie node pool overflow");
                host.nodes.push(vec![e; fanout]);
                let push_val = b.alu("push_val", ev, None);
                b.pin(push_val);
                for init_chunk in 0..fanout {
                    let ia = b.alu("init_eaddr", push_val, Some(node_val));
                    b.store("st_init_entry", trie, entry_off(new_idx, init_chunk), 4, push_val, ia);
                }
                b.unpin(push_val);
                host.nodes[node][chunk] = CHILD_BIT | new_idx as u32;
                let cv = b.alu("child_val", ev, None);
                b.store("st_ins_child", trie, entry_off(node, chunk), 4, cv, ea);
                node = new_idx;
                node_val = cv;
            }
        }

        // Final level: prefix expansion over the uncovered low bits.
        let last = depth - 1;
        let extra = depth * stride - len as usize;
        let base_chunk = chunk_of(prefix, last) & !((1 << extra) - 1);
        let nh_val = b.alu("nh_val", key, None);
        b.pin(nh_val);
        for fill in 0..(1usize << extra) {
            let chunk = base_chunk + fill;
            let fa = b.alu("fill_eaddr", nh_val, Some(node_val));
            let e = host.nodes[node][chunk];
            let ev = b.load("ld_fill_entry", trie, entry_off(node, chunk), 4, fa);
            let has_child = HostTrie::is_child(e);
            b.branch("br_fill_child", Some(ev), None, has_child);
            if !has_child {
                host.nodes[node][chunk] = nexthop;
                b.store("st_fill_entry", trie, entry_off(node, chunk), 4, nh_val, fa);
            }
        }
        b.unpin(nh_val);
        b.unpin(key);
    }

    // Lookup stream: mostly addresses under installed prefixes.
    for _ in 0..n_lookups {
        let addr = if rng.chance(70) && !routes.is_empty() {
            let (prefix, len, _) = routes[rng.below(routes.len() as u64) as usize];
            prefix | ((rng.next_u64() as u32) & (!0u32).checked_shr(len).unwrap_or(0))
        } else {
            rng.next_u64() as u32
        };

        let key = b.alu("lk_key", zero, None);
        b.pin(key);
        let mut node = 0usize;
        let mut node_val: Val = trie_base;
        for level in 0..levels {
            let chunk = chunk_of(addr, level);
            let ch = b.alu("lk_chunk", key, None);
            let ea = b.alu("lk_eaddr", ch, Some(node_val));
            let e = host.nodes[node][chunk];
            let ev = b.load("ld_lk_entry", trie, entry_off(node, chunk), 4, ea);
            let descend = HostTrie::is_child(e);
            b.branch("br_lk_child", Some(ev), None, descend);
            if !descend {
                break; // leaf nexthop or default route
            }
            node = (e & !CHILD_BIT) as usize;
            node_val = ev;
        }
        b.unpin(key);
    }
    b.roi_end();

    b.finish()
}
