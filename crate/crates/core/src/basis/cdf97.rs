//! Separable 2-D Cohen–Daubechies–Feauveau 9/7 wavelet via lifting.
//!
//! Lifting constants are the Daubechies–Sweldens factorization of the 9/7
//! biorthogonal filter pair. Boundaries use whole-sample symmetric extension
//! (the JPEG 2000 convention), so any length ≥ 2 is handled without padding and
//! an `rows × cols` image maps to exactly `rows × cols` coefficients. The
//! scaling makes the low-pass analysis filter have DC gain √2, which keeps the
//! basis close to orthonormal.
//!
//! Coefficient layout: the coarsest approximation band first, then detail
//! bands from coarsest to finest level. Within a level the bands are ordered
//! HL (horizontal detail), LH (vertical detail), HH (diagonal), each
//! flattened row-major.

use crate::scalar::Real;

const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
const ZETA: f64 = 1.149_604_398_860_241;

pub const MAX_LEVELS: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Cdf97 {
    rows: usize,
    cols: usize,
    levels: usize,
    /// `layout[k]` is the row-major position in the in-place (Mallat) buffer
    /// holding flattened coefficient `k`.
    layout: Vec<usize>,
}

/// Number of low-pass samples for a signal of length `n`.
#[inline]
fn low_len(n: usize) -> usize {
    n.div_ceil(2)
}

impl Cdf97 {
    pub(crate) fn new(rows: usize, cols: usize, levels: usize) -> Result<Self, String> {
        if !(1..=MAX_LEVELS).contains(&levels) {
            return Err(format!("wavelet levels must be in 1..={MAX_LEVELS}, got {levels}"));
        }
        let (mut h, mut w) = (rows, cols);
        for _ in 0..levels {
            if h < 2 || w < 2 {
                return Err(format!(
                    "{rows}x{cols} image too small for {levels} wavelet levels"
                ));
            }
            h = low_len(h);
            w = low_len(w);
        }
        let layout = Self::build_layout(rows, cols, levels);
        Ok(Self { rows, cols, levels, layout })
    }

    fn build_layout(rows: usize, cols: usize, levels: usize) -> Vec<usize> {
        // sizes[l] = region transformed at level l (0 = finest)
        let mut sizes = Vec::with_capacity(levels + 1);
        let (mut h, mut w) = (rows, cols);
        sizes.push((h, w));
        for _ in 0..levels {
            h = low_len(h);
            w = low_len(w);
            sizes.push((h, w));
        }
        let mut layout = Vec::with_capacity(rows * cols);
        let push_band = |layout: &mut Vec<usize>, r0: usize, r1: usize, c0: usize, c1: usize| {
            for r in r0..r1 {
                for c in c0..c1 {
                    layout.push(r * cols + c);
                }
            }
        };
        let (lh, lw) = sizes[levels];
        push_band(&mut layout, 0, lh, 0, lw);
        for level in (0..levels).rev() {
            let (h, w) = sizes[level];
            let (hl, wl) = sizes[level + 1];
            push_band(&mut layout, 0, hl, wl, w); // HL
            push_band(&mut layout, hl, h, 0, wl); // LH
            push_band(&mut layout, hl, h, wl, w); // HH
        }
        debug_assert_eq!(layout.len(), rows * cols);
        layout
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn levels(&self) -> usize {
        self.levels
    }

    pub(crate) fn forward<T: Real>(&self, x: &[T]) -> Vec<T> {
        let mut buf = x.to_vec();
        let mut scratch = Vec::with_capacity(self.rows.max(self.cols));
        let (mut h, mut w) = (self.rows, self.cols);
        for _ in 0..self.levels {
            for r in 0..h {
                let row = &mut buf[r * self.cols..r * self.cols + w];
                forward_1d(row, &mut scratch);
            }
            let mut col = vec![T::zero(); h];
            for c in 0..w {
                for r in 0..h {
                    col[r] = buf[r * self.cols + c];
                }
                forward_1d(&mut col, &mut scratch);
                for r in 0..h {
                    buf[r * self.cols + c] = col[r];
                }
            }
            h = low_len(h);
            w = low_len(w);
        }
        self.layout.iter().map(|&p| buf[p]).collect()
    }

    pub(crate) fn inverse<T: Real>(&self, coeffs: &[T]) -> Vec<T> {
        let mut buf = vec![T::zero(); self.rows * self.cols];
        for (k, &p) in self.layout.iter().enumerate() {
            buf[p] = coeffs[k];
        }
        let mut sizes = Vec::with_capacity(self.levels);
        let (mut h, mut w) = (self.rows, self.cols);
        for _ in 0..self.levels {
            sizes.push((h, w));
            h = low_len(h);
            w = low_len(w);
        }
        let mut scratch = Vec::with_capacity(self.rows.max(self.cols));
        for &(h, w) in sizes.iter().rev() {
            let mut col = vec![T::zero(); h];
            for c in 0..w {
                for r in 0..h {
                    col[r] = buf[r * self.cols + c];
                }
                inverse_1d(&mut col, &mut scratch);
                for r in 0..h {
                    buf[r * self.cols + c] = col[r];
                }
            }
            for r in 0..h {
                let row = &mut buf[r * self.cols..r * self.cols + w];
                inverse_1d(row, &mut scratch);
            }
        }
        buf
    }
}

/// Odd-sample update `d[i] += c * (s[i] + s[i+1])`, mirroring past the end.
fn predict<T: Real>(s: &[T], d: &mut [T], c: T) {
    let ns = s.len();
    for (i, di) in d.iter_mut().enumerate() {
        let right = if i + 1 < ns { s[i + 1] } else { s[i] };
        *di += c * (s[i] + right);
    }
}

/// Even-sample update `s[i] += c * (d[i-1] + d[i])`, mirroring at both ends.
fn update<T: Real>(s: &mut [T], d: &[T], c: T) {
    let nd = d.len();
    for (i, si) in s.iter_mut().enumerate() {
        let left = if i > 0 { d[i - 1] } else { d[0] };
        let right = if i < nd { d[i] } else { d[i - 1] };
        *si += c * (left + right);
    }
}

/// In-place single-level forward transform: output is `[low | high]`.
pub(crate) fn forward_1d<T: Real>(x: &mut [T], scratch: &mut Vec<T>) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let ns = low_len(n);
    scratch.clear();
    scratch.extend(x.iter().step_by(2));
    scratch.extend(x.iter().skip(1).step_by(2));
    let (s, d) = scratch.split_at_mut(ns);
    predict(s, d, T::lit(ALPHA));
    update(s, d, T::lit(BETA));
    predict(s, d, T::lit(GAMMA));
    update(s, d, T::lit(DELTA));
    let zeta = T::lit(ZETA);
    s.iter_mut().for_each(|v| *v *= zeta);
    d.iter_mut().for_each(|v| *v /= zeta);
    x.copy_from_slice(scratch);
}

/// Inverse of [`forward_1d`].
pub(crate) fn inverse_1d<T: Real>(x: &mut [T], scratch: &mut Vec<T>) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let ns = low_len(n);
    scratch.clear();
    scratch.extend_from_slice(x);
    let (s, d) = scratch.split_at_mut(ns);
    let zeta = T::lit(ZETA);
    s.iter_mut().for_each(|v| *v /= zeta);
    d.iter_mut().for_each(|v| *v *= zeta);
    update(s, d, -T::lit(DELTA));
    predict(s, d, -T::lit(GAMMA));
    update(s, d, -T::lit(BETA));
    predict(s, d, -T::lit(ALPHA));
    for (i, v) in s.iter().enumerate() {
        x[2 * i] = *v;
    }
    for (i, v) in d.iter().enumerate() {
        x[2 * i + 1] = *v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Published CDF 9/7 analysis filters (unit DC gain low-pass, symmetric).
    const LOW_TAPS: [f64; 5] = [
        0.602_949_018_236,
        0.266_864_118_443,
        -0.078_223_266_529,
        -0.016_864_118_443,
        0.026_748_757_411,
    ];
    const HIGH_TAPS: [f64; 4] = [
        1.115_087_052_457,
        -0.591_271_763_114,
        -0.057_543_526_229,
        0.091_271_763_114,
    ];

    fn mirror(x: &[f64], mut i: isize) -> f64 {
        let n = x.len() as isize;
        loop {
            if i < 0 {
                i = -i;
            } else if i >= n {
                i = 2 * (n - 1) - i;
            } else {
                return x[i as usize];
            }
        }
    }

    /// Direct convolution with the filter bank on a symmetrically extended signal.
    fn filter_bank(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..low_len(n) {
            let c = 2 * i as isize;
            let v: f64 = (-4isize..=4)
                .map(|j| LOW_TAPS[j.unsigned_abs()] * mirror(x, c + j))
                .sum();
            out.push(v * std::f64::consts::SQRT_2);
        }
        for i in 0..n / 2 {
            let c = 2 * i as isize + 1;
            let v: f64 = (-3isize..=3)
                .map(|j| HIGH_TAPS[j.unsigned_abs()] * mirror(x, c + j))
                .sum();
            out.push(v / std::f64::consts::SQRT_2);
        }
        out
    }

    #[test]
    fn lifting_matches_filter_bank_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 7, 14, 27, 28, 32, 64] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut y = x.clone();
            forward_1d(&mut y, &mut Vec::new());
            let oracle = filter_bank(&x);
            for (a, b) in y.iter().zip(&oracle) {
                // published taps carry 12 decimals
                assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn one_dimensional_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..40 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut y = x.clone();
            let mut s = Vec::new();
            forward_1d(&mut y, &mut s);
            inverse_1d(&mut y, &mut s);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_image_has_no_detail_energy() {
        let t = Cdf97::new(28, 28, 3).unwrap();
        let c = t.forward(&vec![0.75f64; 784]);
        // 28 -> 14 -> 7 -> 4: approximation band is 4x4
        for (k, v) in c.iter().enumerate().skip(16) {
            assert!(v.abs() < 1e-9, "detail coefficient {k} = {v}");
        }
        // each 2-D level multiplies DC by (sqrt 2)^2
        for v in &c[..16] {
            assert!((v - 0.75 * 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn layout_is_a_permutation() {
        for (r, c, l) in [(28, 28, 3), (28, 28, 4), (9, 13, 2), (32, 32, 1)] {
            let t = Cdf97::new(r, c, l).unwrap();
            let mut seen = vec![false; r * c];
            for &p in &t.layout {
                assert!(!seen[p]);
                seen[p] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn rejects_bad_depth() {
        assert!(Cdf97::new(28, 28, 0).is_err());
        assert!(Cdf97::new(28, 28, 5).is_err());
        assert!(Cdf97::new(4, 4, 3).is_err());
    }
}
