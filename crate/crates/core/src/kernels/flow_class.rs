//! Packet flow classification: a one-at-a-time hash over the 13-byte 5-tuple
//! (source/destination IP, ports, protocol) indexes a bucket table; chains
//! resolve collisions with one hash-compare load+branch per node.

use super::builder::{DetRng, Region, TraceBuilder};
use crate::trace::Trace;

const FLOW_TUPLE_BYTES: usize = 13;
const FLOW_SLOT_BYTES: usize = 16;
const NODE_BYTES: usize = 16;

fn oat_hash(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0;
    for &byte in bytes {
        h = h.wrapping_add(u32::from(byte));
        h = h.wrapping_add(h << 10);
        h ^= h >> 6;
    }
    h = h.wrapping_add(h << 3);
    h ^= h >> 11;
    h.wrapping_add(h << 15)
}

struct Node {
    hash: u32,
    next: Option<usize>,
}

pub(super) fn generate(n_packets: usize, n_buckets: usize, seed: u64) -> (Trace, Vec<Region>) {
    let mut rng = DetRng::new(seed);
    let n_flows = (n_buckets / 4).max(8);
    let mut b = TraceBuilder::new("flow_class");

    let flows = b.region("rg_flows", "flows", (n_flows * FLOW_SLOT_BYTES) as u64);
    let buckets = b.region("rg_buckets", "buckets", (n_buckets * 4) as u64);
    let nodes = b.region("rg_nodes", "nodes", (n_flows * NODE_BYTES) as u64);
    let zero = b.constant("c_zero");
    let one = b.constant("c_one");
    b.pin(zero);
    b.pin(one);

    let mut tuples = Vec::with_capacity(n_flows);
    for _ in 0..n_flows {
        let mut t = [0u8; FLOW_TUPLE_BYTES];
        for byte in &mut t {
            *byte = rng.below(256) as u8;
        }
        tuples.push(t);
    }

    // Setup: flow templates and an empty bucket table.
    let flows_base = b.base(flows);
    let buckets_base = b.base(buckets);
    let nodes_base = b.base(nodes);
    for (f, t) in tuples.iter().enumerate() {
        for j in 0..t.len() {
            let v = b.alu("flow_val", zero, None);
            b.store("st_flow", flows, (f * FLOW_SLOT_BYTES + j) as u64, 1, v, flows_base);
        }
    }
    for i in 0..n_buckets {
        b.store("st_bucket_init", buckets, (i * 4) as u64, 4, zero, buckets_base);
    }

    let mut table: Vec<Option<usize>> = vec![None; n_buckets];
    let mut pool: Vec<Node> = Vec::new();

    b.roi_begin();
    for _ in 0..n_packets {
        let f = rng.below(n_flows as u64) as usize;
        let h = oat_hash(&tuples[f]);
        let bucket = (h as usize) & (n_buckets - 1);

        // Read the 5-tuple and hash it.
        let mut hv = b.alu("h_init", zero, None);
        b.pin(hv);
        for j in 0..FLOW_TUPLE_BYTES {
            let fa = b.alu("flow_addr", flows_base, None);
            let byte = b.load("ld_flow", flows, (f * FLOW_SLOT_BYTES + j) as u64, 1, fa);
            let h1 = b.alu("hash_add", hv, Some(byte));
            hv = b.repin(hv, h1);
            let h2 = b.alu("hash_shl", hv, None);
            hv = b.repin(hv, h2);
            let h3 = b.alu("hash_shr", hv, None);
            hv = b.repin(hv, h3);
        }
        for site in ["hash_fin1", "hash_fin2", "hash_fin3"] {
            let hf = b.alu(site, hv, None);
            hv = b.repin(hv, hf);
        }
        let bidx = b.alu("bucket_mask", hv, None);
        let ba = b.alu("bucket_addr", bidx, Some(buckets_base));
        b.pin(ba);
        let head = b.load("ld_bucket", buckets, (bucket * 4) as u64, 4, ba);
        b.pin(head);

        // Walk the chain.
        let mut cur = table[bucket];
        let mut cur_val = head;
        b.branch("br_has_chain", Some(head), None, cur.is_some());
        let mut found = false;
        while let Some(idx) = cur {
            let nh = b.load("ld_node_hash", nodes, (idx * NODE_BYTES) as u64, 4, cur_val);
            let matches = pool[idx].hash == h;
            b.branch("br_node_match", Some(nh), Some(hv), matches);
            if matches {
                let ca = b.alu("count_addr", cur_val, None);
                let cnt = b.load("ld_count", nodes, (idx * NODE_BYTES + 8) as u64, 4, ca);
                let cnt2 = b.alu("count_inc", cnt, Some(one));
                b.store("st_count", nodes, (idx * NODE_BYTES + 8) as u64, 4, cnt2, ca);
                found = true;
                break;
            }
            let nx = b.load("ld_node_next", nodes, (idx * NODE_BYTES + 4) as u64, 4, cur_val);
            cur = pool[idx].next;
            b.branch("br_node_next", Some(nx), None, cur.is_some());
            cur_val = nx;
        }

        if !found {
            let idx = pool.len();
            pool.push(Node { hash: h, next: table[bucket] });
            table[bucket] = Some(idx);
            let na = b.alu("new_node_addr", nodes_base, None);
            b.store("st_node_hash", nodes, (idx * NODE_BYTES) as u64, 4, hv, na);
            b.store("st_node_next", nodes, (idx * NODE_BYTES + 4) as u64, 4, head, na);
            b.store("st_node_count", nodes, (idx * NODE_BYTES + 8) as u64, 4, one, na);
            let iv = b.alu("new_node_idx", hv, None);
            b.store("st_bucket_head", buckets, (bucket * 4) as u64, 4, iv, ba);
        }
        b.unpin(head);
        b.unpin(ba);
        b.unpin(hv);
    }
    b.roi_end();

    b.finish()
}
