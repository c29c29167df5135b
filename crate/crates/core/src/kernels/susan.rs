//! Corner-detection analog: a 3×3 brightness-difference stencil with
//! thresholded accumulation. Pixels with few similar neighbours are marked.

use super::builder::{DetRng, Region, TraceBuilder};
use crate::trace::Trace;

const BRIGHTNESS_THRESHOLD: i32 = 27;
const CORNER_MAX_SIMILAR: u32 = 4;

pub(super) fn generate(width: usize, height: usize, seed: u64) -> (Trace, Vec<Region>) {
    let mut rng = DetRng::new(seed);
    let mut b = TraceBuilder::new("susan_corners");

    let img = b.region("rg_img", "image", (width * height) as u64);
    let corners = b.region("rg_corners", "corners", (width * height) as u64);
    let zero = b.constant("c_zero");
    let one = b.constant("c_one");
    let thr = b.constant("c_threshold");
    b.pin(zero);
    b.pin(one);
    b.pin(thr);

    // Gradient plus noise, so neighbour-similarity branches vary.
    let mut px = vec![0u8; width * height];
    for y in 0..height {
        for x in 0..width {
            let v = (x as u64 * 2 + y as u64 * 3 + rng.below(48)) & 0xff;
            px[y * width + x] = v as u8;
        }
    }

    let img_base = b.base(img);
    let corners_base = b.base(corners);
    for i in 0..width * height {
        let v = b.alu("px_val", zero, None);
        b.store("st_px", img, i as u64, 1, v, img_base);
    }

    b.roi_begin();
    const NEIGHBOURS: [(isize, isize); 8] =
        [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let ca = b.alu("c_addr", img_base, None);
            b.pin(ca);
            let c = b.load("ld_center", img, (y * width + x) as u64, 1, ca);
            b.pin(c);
            let center = i32::from(px[y * width + x]);

            let mut similar = 0u32;
            let mut nsim = b.alu("nsim_init", zero, None);
            b.pin(nsim);
            for (dy, dx) in NEIGHBOURS {
                let ny = (y as isize + dy) as usize;
                let nx = (x as isize + dx) as usize;
                let na = b.alu("n_addr", ca, None);
                let p = b.load("ld_neighbour", img, (ny * width + nx) as u64, 1, na);
                let neighbour = i32::from(px[ny * width + nx]);
                let mut diff = b.alu("diff", p, Some(c));
                let negative = neighbour < center;
                b.branch("br_sign", Some(diff), None, negative);
                if negative {
                    diff = b.alu("neg", diff, None);
                }
                let is_similar = (neighbour - center).abs() < BRIGHTNESS_THRESHOLD;
                b.branch("br_similar", Some(diff), Some(thr), is_similar);
                if is_similar {
                    similar += 1;
                    let ns = b.alu("nsim_inc", nsim, Some(one));
                    nsim = b.repin(nsim, ns);
                }
            }
            let is_corner = similar < CORNER_MAX_SIMILAR;
            b.branch("br_corner", Some(nsim), None, is_corner);
            if is_corner {
                let oa = b.alu("corner_addr", corners_base, None);
                b.store("st_corner", corners, (y * width + x) as u64, 1, nsim, oa);
            }
            b.unpin(nsim);
            b.unpin(c);
            b.unpin(ca);
        }
    }
    b.roi_end();

    b.finish()
}
