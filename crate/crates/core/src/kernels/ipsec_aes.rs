//! Packet-payload encryption with byte-wise AES-128 (table S-box, 10 rounds):
//! per block, each round reads 16 S-box entries indexed by state bytes.
//! Round keys are expanded host-side and stored during setup.

use super::builder::{DetRng, Region, TraceBuilder};
use crate::trace::Trace;

#[rustfmt::skip]
const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

fn xtime(b: u8) -> u8 {
    let x = b << 1;
    if b & 0x80 != 0 {
        x ^ 0x1b
    } else {
        x
    }
}

/// Shift-rows source index for output position `i = row + 4*col`.
fn sr_src(i: usize) -> usize {
    let (r, c) = (i % 4, i / 4);
    r + 4 * ((c + r) % 4)
}

/// Host-side AES-128. The generator walks the same step functions while
/// emitting the trace; `encrypt` composes them for verification.
pub(super) struct Aes {
    rk: [u8; 176],
}

impl Aes {
    pub fn new(key: &[u8; 16]) -> Self {
        let mut w = [0u8; 176];
        w[..16].copy_from_slice(key);
        let mut rcon: u8 = 1;
        for i in 4..44 {
            let mut t = [w[4 * i - 4], w[4 * i - 3], w[4 * i - 2], w[4 * i - 1]];
            if i % 4 == 0 {
                t.rotate_left(1);
                for b in &mut t {
                    *b = SBOX[*b as usize];
                }
                t[0] ^= rcon;
                rcon = xtime(rcon);
            }
            for j in 0..4 {
                w[4 * i + j] = w[4 * (i - 4) + j] ^ t[j];
            }
        }
        Self { rk: w }
    }

    fn sub_shift(s: &[u8; 16]) -> [u8; 16] {
        let mut out = [0u8; 16];
        for (i, o) in out.iter_mut().enumerate() {
            *o = SBOX[s[sr_src(i)] as usize];
        }
        out
    }

    fn mix_columns(s: &[u8; 16]) -> [u8; 16] {
        let mut out = [0u8; 16];
        for c in 0..4 {
            let a = [s[4 * c], s[4 * c + 1], s[4 * c + 2], s[4 * c + 3]];
            let xt = [xtime(a[0]), xtime(a[1]), xtime(a[2]), xtime(a[3])];
            for r in 0..4 {
                out[4 * c + r] = xt[r] ^ xt[(r + 1) % 4] ^ a[(r + 1) % 4] ^ a[(r + 2) % 4] ^ a[(r + 3) % 4];
            }
        }
        out
    }

    fn add_rk(&self, s: &[u8; 16], round: usize) -> [u8; 16] {
        let mut out = [0u8; 16];
        for (i, o) in out.iter_mut().enumerate() {
            *o = s[i] ^ self.rk[16 * round + i];
        }
        out
    }

    pub fn encrypt(&self, block: [u8; 16]) -> [u8; 16] {
        let mut s = self.add_rk(&block, 0);
        for round in 1..=9 {
            s = Self::sub_shift(&s);
            s = Self::mix_columns(&s);
            s = self.add_rk(&s, round);
        }
        self.add_rk(&Self::sub_shift(&s), 10)
    }
}

pub(super) fn generate(n_blocks: usize, seed: u64) -> (Trace, Vec<Region>) {
    let mut rng = DetRng::new(seed);
    let mut b = TraceBuilder::new("ipsec_aes");

    let sbox = b.region("rg_sbox", "sbox", 256);
    let rk = b.region("rg_rk", "round_keys", 176);
    let pt = b.region("rg_pt", "plaintext", (n_blocks * 16) as u64);
    let ct = b.region("rg_ct", "ciphertext", (n_blocks * 16) as u64);
    let st = b.region("rg_st", "state", 16);
    let st2 = b.region("rg_st2", "state2", 16);
    let zero = b.constant("c_zero");
    b.pin(zero);

    let mut key = [0u8; 16];
    for byte in &mut key {
        *byte = rng.below(256) as u8;
    }
    let aes = Aes::new(&key);
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let mut blk = [0u8; 16];
        for byte in &mut blk {
            *byte = rng.below(256) as u8;
        }
        blocks.push(blk);
    }

    // Setup: S-box table, expanded round keys, payload.
    let sbox_base = b.base(sbox);
    let rk_base = b.base(rk);
    let pt_base = b.base(pt);
    let ct_base = b.base(ct);
    let st_base = b.base(st);
    let st2_base = b.base(st2);
    for i in 0..256u64 {
        let v = b.alu("sbox_val", zero, None);
        b.store("st_sbox", sbox, i, 1, v, sbox_base);
    }
    for i in 0..176u64 {
        let v = b.alu("rk_val", zero, None);
        b.store("st_rk", rk, i, 1, v, rk_base);
    }
    for i in 0..(n_blocks * 16) as u64 {
        let v = b.alu("pt_val", zero, None);
        b.store("st_pt", pt, i, 1, v, pt_base);
    }

    b.roi_begin();
    for (blk_idx, blk) in blocks.iter().enumerate() {
        // Load the payload block into the state buffer.
        for i in 0..16usize {
            let pa = b.alu("in_paddr", pt_base, None);
            let v = b.load("ld_pt", pt, (blk_idx * 16 + i) as u64, 1, pa);
            let sa = b.alu("in_saddr", st_base, None);
            b.store("st_state_in", st, i as u64, 1, v, sa);
        }

        let mut state = aes.add_rk(blk, 0);
        // Whitening AddRoundKey on the state buffer.
        for i in 0..16usize {
            let sa = b.alu("ark_saddr", st_base, None);
            let s = b.load("ld_ark_state", st, i as u64, 1, sa);
            let ka = b.alu("ark_kaddr", rk_base, None);
            let kv = b.load("ld_ark_key", rk, i as u64, 1, ka);
            let x = b.alu("ark_xor", s, Some(kv));
            b.store("st_ark", st, i as u64, 1, x, sa);
        }

        for round in 1..=10usize {
            // SubBytes + ShiftRows: state2[i] = SBOX[state[sr_src(i)]].
            let sub = Aes::sub_shift(&state);
            for i in 0..16usize {
                let sa = b.alu("sb_saddr", st_base, None);
                let s = b.load("ld_sb_state", st, sr_src(i) as u64, 1, sa);
                let ba = b.alu("sb_tbl_addr", s, Some(sbox_base));
                let sb = b.load("ld_sbox", sbox, u64::from(state[sr_src(i)]), 1, ba);
                let da = b.alu("sb_daddr", st2_base, None);
                b.store("st_sb", st2, i as u64, 1, sb, da);
            }

            if round < 10 {
                // MixColumns: state2 -> state.
                let mixed = Aes::mix_columns(&sub);
                for c in 0..4usize {
                    let mut a_vals = Vec::with_capacity(4);
                    for r in 0..4usize {
                        let aa = b.alu("mc_aaddr", st2_base, None);
                        let v = b.load("ld_mc", st2, (4 * c + r) as u64, 1, aa);
                        b.pin(v);
                        a_vals.push(v);
                    }
                    let mut xt_vals = Vec::with_capacity(4);
                    for r in 0..4usize {
                        let byte = sub[4 * c + r];
                        let sh = b.alu("xt_shl", a_vals[r], None);
                        let hi = byte & 0x80 != 0;
                        b.branch("br_xt", Some(a_vals[r]), None, hi);
                        let xt = if hi { b.alu("xt_reduce", sh, None) } else { sh };
                        b.pin(xt);
                        xt_vals.push(xt);
                    }
                    for r in 0..4usize {
                        let t1 = b.alu("mc_x1", xt_vals[r], Some(xt_vals[(r + 1) % 4]));
                        let t2 = b.alu("mc_x2", t1, Some(a_vals[(r + 1) % 4]));
                        let t3 = b.alu("mc_x3", t2, Some(a_vals[(r + 2) % 4]));
                        let t4 = b.alu("mc_x4", t3, Some(a_vals[(r + 3) % 4]));
                        let da = b.alu("mc_daddr", st_base, None);
                        b.store("st_mc", st, (4 * c + r) as u64, 1, t4, da);
                    }
                    for v in xt_vals {
                        b.unpin(v);
                    }
                    for v in a_vals {
                        b.unpin(v);
                    }
                }
                // AddRoundKey on the state buffer.
                state = aes.add_rk(&mixed, round);
                for i in 0..16usize {
                    let sa = b.alu("ark_saddr", st_base, None);
                    let s = b.load("ld_ark_state", st, i as u64, 1, sa);
                    let ka = b.alu("ark_kaddr", rk_base, None);
                    let kv = b.load("ld_ark_key", rk, (16 * round + i) as u64, 1, ka);
                    let x = b.alu("ark_xor", s, Some(kv));
                    b.store("st_ark", st, i as u64, 1, x, sa);
                }
            } else {
                // Final AddRoundKey straight into the ciphertext buffer.
                state = aes.add_rk(&sub, 10);
                for i in 0..16usize {
                    let sa = b.alu("fin_saddr", st2_base, None);
                    let s = b.load("ld_fin_state", st2, i as u64, 1, sa);
                    let ka = b.alu("fin_kaddr", rk_base, None);
                    let kv = b.load("ld_fin_key", rk, (160 + i) as u64, 1, ka);
                    let x = b.alu("fin_xor", s, Some(kv));
                    let ca = b.alu("fin_caddr", ct_base, None);
                    b.store("st_ct", ct, (blk_idx * 16 + i) as u64, 1, x, ca);
                }
            }
        }
        debug_assert_eq!(state, aes.encrypt(*blk));
    }
    b.roi_end();

    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    // FIPS-197 appendix C.1 vector.
    #[test]
    fn aes128_known_answer() {
        let key: [u8; 16] = [
            0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f,
        ];
        let pt: [u8; 16] = [
            0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff,
        ];
        let expect: [u8; 16] = [
            0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a,
        ];
        assert_eq!(Aes::new(&key).encrypt(pt), expect);
    }
}
