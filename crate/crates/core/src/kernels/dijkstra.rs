//! All-pairs shortest paths by repeated Dijkstra runs over an adjacency
//! matrix (O(n²) scan variant), plus a per-source average-distance statistic.

use super::builder::{DetRng, Region, TraceBuilder};
use crate::trace::Trace;

const INF: u64 = u64::MAX / 4;

pub(super) fn generate(n: usize, seed: u64) -> (Trace, Vec<Region>) {
    let mut rng = DetRng::new(seed);
    let mut b = TraceBuilder::new("dijkstra");

    let adj = b.region("rg_adj", "adj", (n * n * 4) as u64);
    let dist = b.region("rg_dist", "dist", (n * 4) as u64);
    let visited = b.region("rg_visited", "visited", n as u64);
    let stats = b.region("rg_stats", "stats", (n * 8) as u64);
    let zero = b.constant("c_zero");
    let n_val = b.constant("c_n");
    b.pin(zero);
    b.pin(n_val);

    // Random sparse weighted graph.
    let mut w = vec![0u64; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.chance(30) {
                w[u * n + v] = 1 + rng.below(9);
            }
        }
    }

    // Setup: fill the adjacency matrix.
    let adj_base = b.base(adj);
    for i in 0..n * n {
        let val = b.alu("adj_val", n_val, None);
        b.store("st_adj", adj, (i * 4) as u64, 4, val, adj_base);
    }

    b.roi_begin();
    let dist_base = b.base(dist);
    let vis_base = b.base(visited);
    let stats_base = b.base(stats);
    for src in 0..n {
        let mut d = vec![INF; n];
        let mut vis = vec![false; n];
        d[src] = 0;

        let inf = b.alu("mk_inf", n_val, None);
        b.pin(inf);
        for v in 0..n {
            b.store("st_dist_init", dist, (v * 4) as u64, 4, inf, dist_base);
            b.store("st_vis_init", visited, v as u64, 1, zero, vis_base);
        }
        b.store("st_dist_src", dist, (src * 4) as u64, 4, zero, dist_base);

        for _ in 0..n {
            // Find the nearest unvisited node.
            let mut best = INF;
            let mut best_v = usize::MAX;
            let mut best_val = b.alu("best_init", inf, None);
            b.pin(best_val);
            let mut bestv_val = b.alu("bestv_init", zero, None);
            b.pin(bestv_val);
            for v in 0..n {
                let va = b.alu("vis_addr", vis_base, None);
                let lv = b.load("ld_vis", visited, v as u64, 1, va);
                b.branch("br_vis", Some(lv), None, vis[v]);
                if vis[v] {
                    continue;
                }
                let da = b.alu("dist_addr_scan", dist_base, None);
                let dv = b.load("ld_dist_scan", dist, (v * 4) as u64, 4, da);
                let smaller = d[v] < best;
                b.branch("br_min", Some(dv), Some(best_val), smaller);
                if smaller {
                    best = d[v];
                    best_v = v;
                    let nb = b.alu("upd_best", dv, None);
                    best_val = b.repin(best_val, nb);
                    let nbv = b.alu("upd_bestv", zero, None);
                    bestv_val = b.repin(bestv_val, nbv);
                }
            }
            let found = best_v != usize::MAX && best < INF;
            b.branch("br_found", Some(best_val), None, !found);
            if !found {
                b.unpin(best_val);
                b.unpin(bestv_val);
                break;
            }
            vis[best_v] = true;
            let va2 = b.alu("vis_addr_mark", vis_base, None);
            b.store("st_vis_mark", visited, best_v as u64, 1, bestv_val, va2);

            // Relax the edges out of best_v.
            for v in 0..n {
                let idx = b.mul("adj_idx", bestv_val, n_val);
                let aa = b.alu("adj_addr", idx, Some(adj_base));
                let wv = b.load("ld_adj", adj, ((best_v * n + v) * 4) as u64, 4, aa);
                let has_edge = w[best_v * n + v] != 0;
                b.branch("br_edge", Some(wv), None, !has_edge);
                if !has_edge {
                    continue;
                }
                let cand_w = best.saturating_add(w[best_v * n + v]);
                let cand = b.alu("relax_add", best_val, Some(wv));
                let da2 = b.alu("dist_addr_relax", dist_base, None);
                let dv = b.load("ld_dist_relax", dist, (v * 4) as u64, 4, da2);
                let improves = cand_w < d[v];
                b.branch("br_relax", Some(cand), Some(dv), improves);
                if improves {
                    d[v] = cand_w;
                    b.store("st_relax", dist, (v * 4) as u64, 4, cand, da2);
                }
            }
            b.unpin(best_val);
            b.unpin(bestv_val);
        }
        b.unpin(inf);

        // Average reached distance for this source.
        let mut sum = b.alu("sum_init", zero, None);
        b.pin(sum);
        for v in 0..n {
            let da3 = b.alu("dist_addr_sum", dist_base, None);
            let dv = b.load("ld_dist_sum", dist, (v * 4) as u64, 4, da3);
            let ns = b.alu("sum_add", sum, Some(dv));
            sum = b.repin(sum, ns);
        }
        let avg = b.div("avg_div", sum, n_val);
        b.unpin(sum);
        b.store("st_avg", stats, (src * 8) as u64, 8, avg, stats_base);
    }
    b.roi_end();

    b.finish()
}
