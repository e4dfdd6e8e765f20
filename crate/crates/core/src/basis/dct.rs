//! Orthonormal DCT-II, optionally applied block-wise.
//!
//! With `block == n` this is the ordinary length-`n` DCT. With smaller blocks
//! the signal is cut into `n / block` contiguous pieces, each transformed
//! independently, and the coefficients are interleaved so that coefficient
//! `k` is frequency `k / blocks` of block `k % blocks`. The first `blocks`
//! columns are then the DC atoms of every block, with disjoint supports.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub(crate) struct BlockDct<T> {
    n: usize,
    block: usize,
    /// `table[f * block + i]` = value of frequency `f` at sample `i`.
    table: Vec<T>,
}

impl<T: Real> BlockDct<T> {
    pub(crate) fn new(n: usize, block: usize) -> Result<Self, String> {
        if block == 0 || n % block != 0 {
            return Err(format!("DCT block {block} must divide dimension {n}"));
        }
        let b = block as f64;
        let mut table = Vec::with_capacity(block * block);
        for f in 0..block {
            let scale = if f == 0 { (1.0 / b).sqrt() } else { (2.0 / b).sqrt() };
            for i in 0..block {
                let arg = std::f64::consts::PI * (2 * i + 1) as f64 * f as f64 / (2.0 * b);
                table.push(T::lit(scale * arg.cos()));
            }
        }
        Ok(Self { n, block, table })
    }

    pub(crate) fn block(&self) -> usize {
        self.block
    }

    fn blocks(&self) -> usize {
        self.n / self.block
    }

    pub(crate) fn forward(&self, x: &[T]) -> Vec<T> {
        let nb = self.blocks();
        let mut out = vec![T::zero(); self.n];
        for b in 0..nb {
            let seg = &x[b * self.block..(b + 1) * self.block];
            for f in 0..self.block {
                let atom = &self.table[f * self.block..(f + 1) * self.block];
                out[f * nb + b] = crate::scalar::dot(atom, seg);
            }
        }
        out
    }

    pub(crate) fn inverse(&self, c: &[T]) -> Vec<T> {
        let nb = self.blocks();
        let mut out = vec![T::zero(); self.n];
        for b in 0..nb {
            let seg = &mut out[b * self.block..(b + 1) * self.block];
            for f in 0..self.block {
                let coef = c[f * nb + b];
                if coef == T::zero() {
                    continue;
                }
                let atom = &self.table[f * self.block..(f + 1) * self.block];
                seg.iter_mut().zip(atom).for_each(|(s, &a)| *s += coef * a);
            }
        }
        out
    }
}
