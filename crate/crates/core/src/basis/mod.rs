//! Analysis/synthesis transform pairs over `R^N`.
//!
//! Coefficients are `c = A x` and reconstruction is `x = S c`, with `S A = I`.
//! Columns of `S` are the basis functions `ψ_k`; rows of `A` are the dual
//! (analysis) functions `ψ̃_k`. For the orthonormal kinds `A = Sᵀ` and the two
//! coincide. The CDF 9/7 wavelet is biorthogonal: `⟨ψ̃_i, ψ_j⟩ = δ_ij` but
//! `ψ̃_k ≠ ψ_k`.

mod cdf97;
mod dct;
mod orthonormal;

pub use cdf97::MAX_LEVELS as MAX_WAVELET_LEVELS;
pub use orthonormal::random_orthonormal_columns;

use crate::error::{check_dim, Error, Result};
use crate::scalar::{norm1, Real};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

use cdf97::Cdf97;
use dct::BlockDct;

/// Which transform a [`Basis`] implements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind {
    Identity,
    /// Orthonormalized seeded Gaussian matrix.
    RandomOrthonormal { seed: u64 },
    /// Multilevel 2-D CDF 9/7 wavelet on a `rows × cols` image.
    Cdf97 { rows: usize, cols: usize, levels: usize },
    /// Orthonormal DCT-II over contiguous blocks; `block == n` is the full DCT.
    Dct { block: usize },
    /// Caller-supplied orthonormal columns.
    Explicit,
}

impl BasisKind {
    pub fn is_orthonormal(&self) -> bool {
        !matches!(self, BasisKind::Cdf97 { .. })
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::Identity => write!(f, "identity"),
            BasisKind::RandomOrthonormal { seed } => write!(f, "random_orthonormal(seed={seed})"),
            BasisKind::Cdf97 { rows, cols, levels } => {
                write!(f, "cdf97({rows}x{cols}, levels={levels})")
            }
            BasisKind::Dct { block } => write!(f, "dct(block={block})"),
            BasisKind::Explicit => write!(f, "explicit"),
        }
    }
}

/// ℓ₁ geometry of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisInfo<T> {
    /// `max_k ‖ψ_k‖₁` over synthesis columns.
    pub m: T,
    /// `‖ψ_k‖₁` for every synthesis column.
    pub per_column_l1: Vec<T>,
    /// `‖ψ̃_k‖₁` for every analysis row. Equal to `per_column_l1` for
    /// orthonormal kinds.
    pub per_row_l1: Vec<T>,
}

impl<T: Real> BasisInfo<T> {
    /// Constant used by the support-preservation certificate. A perturbation
    /// moves coefficient `k` by at most `ε ‖ψ̃_k‖₁`; the larger of the row and
    /// column maxima is taken so the bound also covers the synthesis side.
    pub fn certificate_m(&self) -> T {
        self.per_row_l1.iter().fold(self.m, |m, &v| m.max(v))
    }
}

enum Repr<T> {
    Identity,
    /// Orthonormal columns stored contiguously: column `k` at `[k*n..(k+1)*n]`.
    Columns(Vec<T>),
    Wavelet(Cdf97),
    Dct(BlockDct<T>),
}

/// Materialized operators for transforms without a closed-form adjoint.
struct Dense<T> {
    /// Row-major `A`: row `k` is `ψ̃_k`.
    analysis_rows: Vec<T>,
    /// Column-major `S`: column `k` is `ψ_k`.
    synthesis_cols: Vec<T>,
}

/// An analysis/synthesis pair over `R^N`. Immutable after construction; all
/// transforms take `&self` and may be called from many threads.
pub struct Basis<T: Real> {
    kind: BasisKind,
    n: usize,
    repr: Repr<T>,
    dense: OnceLock<Dense<T>>,
    info: OnceLock<BasisInfo<T>>,
}

impl<T: Real> fmt::Debug for Basis<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl<T: Real> Basis<T> {
    fn with_repr(kind: BasisKind, n: usize, repr: Repr<T>) -> Self {
        Self { kind, n, repr, dense: OnceLock::new(), info: OnceLock::new() }
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("basis dimension must be positive".into()));
        }
        Ok(Self::with_repr(BasisKind::Identity, n, Repr::Identity))
    }

    /// Full random orthonormal basis of `R^n` from a seeded Gaussian matrix.
    pub fn random_orthonormal(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("basis dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = random_orthonormal_columns::<T, _>(n, n, &mut rng);
        Ok(Self::with_repr(
            BasisKind::RandomOrthonormal { seed },
            n,
            Repr::Columns(cols.concat()),
        ))
    }

    /// 2-D CDF 9/7 wavelet on `rows × cols` images with `levels` decompositions.
    pub fn cdf97(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        let t = Cdf97::new(rows, cols, levels).map_err(Error::InvalidArgument)?;
        Ok(Self::with_repr(
            BasisKind::Cdf97 { rows, cols, levels },
            rows * cols,
            Repr::Wavelet(t),
        ))
    }

    pub fn dct(n: usize, block: usize) -> Result<Self> {
        let t = BlockDct::new(n, block).map_err(Error::InvalidArgument)?;
        Ok(Self::with_repr(BasisKind::Dct { block }, n, Repr::Dct(t)))
    }

    /// Basis from explicit columns, which must be orthonormal to `tol`.
    pub fn from_orthonormal_columns(columns: Vec<Vec<T>>, tol: T) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no columns supplied".into()));
        }
        for c in &columns {
            check_dim(n, c.len())?;
        }
        for i in 0..n {
            for j in i..n {
                let g = crate::scalar::dot(&columns[i], &columns[j]);
                let want = if i == j { T::one() } else { T::zero() };
                if (g - want).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "columns {i} and {j} are not orthonormal (inner product {g})"
                    )));
                }
            }
        }
        Ok(Self::with_repr(BasisKind::Explicit, n, Repr::Columns(columns.concat())))
    }

    /// Builds the basis described by `kind` on `R^n`.
    pub fn from_kind(kind: &BasisKind, n: usize) -> Result<Self> {
        match *kind {
            BasisKind::Identity => Self::identity(n),
            BasisKind::RandomOrthonormal { seed } => Self::random_orthonormal(n, seed),
            BasisKind::Cdf97 { rows, cols, levels } => {
                check_dim(n, rows * cols)?;
                Self::cdf97(rows, cols, levels)
            }
            BasisKind::Dct { block } => Self::dct(n, block),
            BasisKind::Explicit => Err(Error::InvalidArgument(
                "explicit bases must be built from their columns".into(),
            )),
        }
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Image geometry for 2-D bases.
    pub fn shape(&self) -> Option<(usize, usize)> {
        match &self.repr {
            Repr::Wavelet(t) => Some((t.rows(), t.cols())),
            _ => None,
        }
    }

    pub fn levels(&self) -> Option<usize> {
        match &self.repr {
            Repr::Wavelet(t) => Some(t.levels()),
            _ => None,
        }
    }

    pub fn dct_block(&self) -> Option<usize> {
        match &self.repr {
            Repr::Dct(t) => Some(t.block()),
            _ => None,
        }
    }

    pub fn is_orthonormal(&self) -> bool {
        self.kind.is_orthonormal()
    }

    /// Coefficients `c = A x`.
    pub fn analyze(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.n, x.len())?;
        Ok(self.analyze_unchecked(x))
    }

    /// Reconstruction `x = S c`.
    pub fn synthesize(&self, c: &[T]) -> Result<Vec<T>> {
        check_dim(self.n, c.len())?;
        Ok(self.synthesize_unchecked(c))
    }

    /// `Aᵀ c`: the transpose of analysis.
    pub fn analyze_adjoint(&self, c: &[T]) -> Result<Vec<T>> {
        check_dim(self.n, c.len())?;
        Ok(self.analyze_adjoint_unchecked(c))
    }

    /// `Sᵀ v`: inner products `⟨ψ_k, v⟩` with every synthesis column.
    pub fn synthesize_adjoint(&self, v: &[T]) -> Result<Vec<T>> {
        check_dim(self.n, v.len())?;
        Ok(self.synthesize_adjoint_unchecked(v))
    }

    /// Synthesis column `ψ_k = S e_k`.
    pub fn basis_column(&self, k: usize) -> Result<Vec<T>> {
        self.check_index(k)?;
        Ok(match &self.repr {
            Repr::Columns(q) => q[k * self.n..(k + 1) * self.n].to_vec(),
            Repr::Wavelet(_) => self.dense().synthesis_cols[k * self.n..(k + 1) * self.n].to_vec(),
            _ => self.synthesize_unchecked(&unit(self.n, k)),
        })
    }

    /// Analysis row `ψ̃_k`, so that coefficient `k` of `x` is `⟨ψ̃_k, x⟩`.
    pub fn analysis_row(&self, k: usize) -> Result<Vec<T>> {
        self.check_index(k)?;
        Ok(match &self.repr {
            Repr::Wavelet(_) => self.dense().analysis_rows[k * self.n..(k + 1) * self.n].to_vec(),
            _ => self.basis_column(k)?,
        })
    }

    /// Column and row ℓ₁ norms, computed by materializing every column once.
    pub fn info(&self) -> &BasisInfo<T> {
        self.info.get_or_init(|| {
            let per_column_l1: Vec<T> = (0..self.n)
                .map(|k| norm1(&self.basis_column(k).expect("index in range")))
                .collect();
            let per_row_l1 = if self.is_orthonormal() {
                per_column_l1.clone()
            } else {
                (0..self.n)
                    .map(|k| norm1(&self.analysis_row(k).expect("index in range")))
                    .collect()
            };
            let m = per_column_l1.iter().fold(T::zero(), |m, &v| m.max(v));
            BasisInfo { m, per_column_l1, per_row_l1 }
        })
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: k, n: self.n })
        }
    }

    pub(crate) fn analyze_unchecked(&self, x: &[T]) -> Vec<T> {
        match &self.repr {
            Repr::Identity => x.to_vec(),
            Repr::Columns(q) => q.chunks_exact(self.n).map(|col| crate::scalar::dot(col, x)).collect(),
            Repr::Wavelet(t) => t.forward(x),
            Repr::Dct(t) => t.forward(x),
        }
    }

    pub(crate) fn synthesize_unchecked(&self, c: &[T]) -> Vec<T> {
        match &self.repr {
            Repr::Identity => c.to_vec(),
            Repr::Columns(q) => combine_columns(q, self.n, c),
            Repr::Wavelet(t) => t.inverse(c),
            Repr::Dct(t) => t.inverse(c),
        }
    }

    pub(crate) fn analyze_adjoint_unchecked(&self, c: &[T]) -> Vec<T> {
        match &self.repr {
            Repr::Wavelet(_) => combine_columns(&self.dense().analysis_rows, self.n, c),
            _ => self.synthesize_unchecked(c),
        }
    }

    pub(crate) fn synthesize_adjoint_unchecked(&self, v: &[T]) -> Vec<T> {
        match &self.repr {
            Repr::Wavelet(_) => self
                .dense()
                .synthesis_cols
                .chunks_exact(self.n)
                .map(|col| crate::scalar::dot(col, v))
                .collect(),
            _ => self.analyze_unchecked(v),
        }
    }

    fn dense(&self) -> &Dense<T> {
        self.dense.get_or_init(|| {
            let n = self.n;
            let mut analysis_rows = vec![T::zero(); n * n];
            let mut synthesis_cols = Vec::with_capacity(n * n);
            for j in 0..n {
                let e = unit(n, j);
                // column j of A
                for (k, v) in self.analyze_unchecked(&e).into_iter().enumerate() {
                    analysis_rows[k * n + j] = v;
                }
                synthesis_cols.extend(self.synthesize_unchecked(&e));
            }
            Dense { analysis_rows, synthesis_cols }
        })
    }
}

fn unit<T: Real>(n: usize, k: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[k] = T::one();
    e
}

/// `Σ_k c_k · v_k` where `v_k` are the contiguous length-`n` chunks of `vectors`.
fn combine_columns<T: Real>(vectors: &[T], n: usize, c: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (col, &ck) in vectors.chunks_exact(n).zip(c) {
        if ck == T::zero() {
            continue;
        }
        out.iter_mut().zip(col).for_each(|(o, &v)| *o += ck * v);
    }
    out
}
