//! Trilinear LUT application over 8-bit RGB pixels.
//!
//! Weights use the (1-f)*a + f*b form so lattice points reproduce stored
//! entries exactly; an identity LUT round-trips u8 pixels bit-for-bit.

use crate::cube::PackedLut;

/// Pre-resolved index/fraction for each of the 256 possible 8-bit inputs.
pub struct LutSampler<'a> {
    lut: &'a PackedLut,
    idx: [u32; 256],
    frac: [f32; 256],
}

impl<'a> LutSampler<'a> {
    pub fn new(lut: &'a PackedLut) -> Self {
        let n = lut.n as u32;
        let scale = (n - 1) as f32;
        let mut idx = [0u32; 256];
        let mut frac = [0f32; 256];
        for v in 0..256usize {
            let pos = (v as f32 / 255.0) * scale;
            let mut i = pos.floor() as u32;
            if i > n - 2 {
                i = n - 2;
            }
            idx[v] = i;
            frac[v] = pos - i as f32;
        }
        LutSampler { lut, idx, frac }
    }

    #[inline]
    pub fn map(&self, px: [u8; 3]) -> [u8; 3] {
        let n = self.lut.n;
        let (r, g, b) = (px[0] as usize, px[1] as usize, px[2] as usize);
        let (ri, gi, bi) = (self.idx[r] as usize, self.idx[g] as usize, self.idx[b] as usize);
        let (fr, fg, fb) = (self.frac[r], self.frac[g], self.frac[b]);
        let (wr, wg, wb) = (1.0 - fr, 1.0 - fg, 1.0 - fb);

        let stride_g = n * 3;
        let stride_b = n * n * 3;
        let base = bi * stride_b + gi * stride_g + ri * 3;
        let d = &self.lut.data;

        let mut out = [0u8; 3];
        for c in 0..3 {
            let o = base + c;
            let c00 = wr * d[o] + fr * d[o + 3];
            let c10 = wr * d[o + stride_g] + fr * d[o + stride_g + 3];
            let c01 = wr * d[o + stride_b] + fr * d[o + stride_b + 3];
            let c11 = wr * d[o + stride_b + stride_g] + fr * d[o + stride_b + stride_g + 3];
            let c0 = wg * c00 + fg * c10;
            let c1 = wg * c01 + fg * c11;
            let v = wb * c0 + fb * c1;
            out[c] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        }
        out
    }

    /// Grade an interleaved RGB8 buffer in place.
    pub fn map_buffer(&self, buf: &mut [u8]) {
        for px in buf.chunks_exact_mut(3) {
            let mapped = self.map([px[0], px[1], px[2]]);
            px.copy_from_slice(&mapped);
        }
    }
}
