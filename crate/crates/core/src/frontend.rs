//! Sparsifying front end: analysis, hard top-K selection, synthesis.

use crate::basis::Basis;
use crate::error::{check_dim, Error, Result};
use crate::scalar::Real;
use std::cmp::Ordering;
use std::sync::Arc;

/// Ordering used for top-K selection: larger magnitude first, ties to the
/// lower index.
fn by_magnitude<T: Real>(c: &[T]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&i, &j| {
        c[j].abs()
            .partial_cmp(&c[i].abs())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    }
}

/// Indices of the `k` largest-magnitude entries of `c`, ascending.
pub fn top_k_indices<T: Real>(c: &[T], k: usize) -> Result<Vec<usize>> {
    let n = c.len();
    if k == 0 || k > n {
        return Err(Error::SparsityOutOfRange { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, by_magnitude(c));
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// Keeps the `k` largest-magnitude entries of `c` and zeroes the rest.
pub fn sparse_k<T: Real>(c: &[T], k: usize) -> Result<Vec<T>> {
    let keep = top_k_indices(c, k)?;
    let mut out = vec![T::zero(); c.len()];
    for i in keep {
        out[i] = c[i];
    }
    Ok(out)
}

/// `K = round(ρ N)` with halves rounded up, clamped to `1..=N`.
pub fn k_from_rho(rho: f64, n: usize) -> Result<usize> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
    }
    let k = (rho * n as f64 + 0.5).floor() as usize;
    Ok(k.clamp(1, n))
}

/// The `K` coefficient indices retained for a signal, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Support from explicit indices; sorted and checked for duplicates.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate support index".into()));
        }
        Ok(Self { indices })
    }

    /// `{0, …, k-1}`.
    pub fn leading(k: usize) -> Self {
        Self { indices: (0..k).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    fn mask<T: Real>(&self, c: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); c.len()];
        for &i in &self.indices {
            out[i] = c[i];
        }
        out
    }
}

/// Outcome of the support-preservation check.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport<T> {
    /// Magnitude of the smallest retained coefficient.
    pub lambda: T,
    /// Magnitude of the largest discarded coefficient (zero for exactly
    /// K-sparse signals).
    pub tail: T,
    pub epsilon: T,
    /// ℓ₁ constant of the basis (see [`crate::basis::BasisInfo::certificate_m`]).
    pub m: T,
    /// `λ / ε`.
    pub snr: T,
    /// `(λ - tail) / ε > 2M`; reduces to `λ / ε > 2M` when `tail = 0`.
    pub certified: bool,
}

/// A basis plus a sparsity level `1 ≤ K ≤ N`.
#[derive(Debug, Clone)]
pub struct FrontEnd<T: Real> {
    basis: Arc<Basis<T>>,
    k: usize,
}

impl<T: Real> FrontEnd<T> {
    pub fn new(basis: Arc<Basis<T>>, k: usize) -> Result<Self> {
        let n = basis.dim();
        if k == 0 || k > n {
            return Err(Error::SparsityOutOfRange { k, n });
        }
        Ok(Self { basis, k })
    }

    pub fn with_rho(basis: Arc<Basis<T>>, rho: f64) -> Result<Self> {
        let k = k_from_rho(rho, basis.dim())?;
        Self::new(basis, k)
    }

    pub fn basis(&self) -> &Basis<T> {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<Basis<T>> {
        Arc::clone(&self.basis)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn rho(&self) -> f64 {
        self.k as f64 / self.dim() as f64
    }

    /// `supp(x)`: indices of the K largest analysis coefficients of `x`.
    pub fn support(&self, x: &[T]) -> Result<SupportSet> {
        check_dim(self.dim(), x.len())?;
        let c = self.basis.analyze_unchecked(x);
        Ok(SupportSet { indices: top_k_indices(&c, self.k)? })
    }

    /// `proj(v, x) = Σ_{k ∈ supp(x)} ψ_k ⟨ψ̃_k, v⟩`.
    pub fn proj(&self, v: &[T], x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), v.len())?;
        let s = self.support(x)?;
        Ok(self.proj_onto(&s, v))
    }

    /// Projection of `v` onto the atoms indexed by `support`.
    pub fn proj_onto(&self, support: &SupportSet, v: &[T]) -> Vec<T> {
        let c = self.basis.analyze_unchecked(v);
        self.basis.synthesize_unchecked(&support.mask(&c))
    }

    /// Transpose of [`proj`](Self::proj): `Σ_{k ∈ supp(x)} ψ̃_k ⟨ψ_k, v⟩`.
    /// Identical to `proj` on orthonormal bases. `wᵀ proj(e, x) =
    /// eᵀ proj_adjoint(w, x)`, which makes this the direction a perturbation
    /// must follow to move the classifier output through the front end.
    pub fn proj_adjoint(&self, v: &[T], x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), v.len())?;
        let s = self.support(x)?;
        Ok(self.proj_adjoint_onto(&s, &self.basis.synthesize_adjoint_unchecked(v)))
    }

    /// Adjoint projection given `Sᵀ v`, precomputed once when `v` is reused
    /// across many supports.
    pub fn proj_adjoint_onto(&self, support: &SupportSet, st_v: &[T]) -> Vec<T> {
        self.basis.analyze_adjoint_unchecked(&support.mask(st_v))
    }

    /// `x̂ = S · sparse_K(A x̄)`.
    pub fn apply(&self, x_bar: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), x_bar.len())?;
        let c = self.basis.analyze_unchecked(x_bar);
        Ok(self.basis.synthesize_unchecked(&sparse_k(&c, self.k)?))
    }

    /// Checks whether every perturbation with `‖e‖∞ ≤ ε` leaves `supp(x)`
    /// unchanged. Each coefficient moves by at most `ε M`, so the retained
    /// and discarded sets cannot swap while `λ - tail > 2 ε M`.
    pub fn check_high_snr(&self, x: &[T], epsilon: T) -> Result<SnrReport<T>> {
        check_dim(self.dim(), x.len())?;
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        let c = self.basis.analyze_unchecked(x);
        let keep = top_k_indices(&c, self.k)?;
        let lambda = keep.iter().map(|&i| c[i].abs()).fold(T::infinity(), T::min);
        let support = SupportSet { indices: keep };
        let tail = (0..c.len())
            .filter(|&i| !support.contains(i))
            .map(|i| c[i].abs())
            .fold(T::zero(), T::max);
        let m = self.basis.info().certificate_m();
        let two = T::lit(2.0);
        let certified = lambda > T::zero() && (lambda - tail) / epsilon > two * m;
        Ok(SnrReport { lambda, tail, epsilon, m, snr: lambda / epsilon, certified })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dot, norm2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_fe(n: usize, k: usize) -> FrontEnd<f64> {
        FrontEnd::new(Arc::new(Basis::identity(n).unwrap()), k).unwrap()
    }

    #[test]
    fn sparse_k_examples() {
        assert_eq!(sparse_k(&[3.0, -1.0, 0.5, 2.0], 2).unwrap(), vec![3.0, 0.0, 0.0, 2.0]);
        let c = [0.3, -7.0, 2.0];
        assert_eq!(sparse_k(&c, 3).unwrap(), c.to_vec());
        assert_eq!(sparse_k(&[1.0, -1.0, 0.0], 1).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(sparse_k(&[1.0], 0), Err(Error::SparsityOutOfRange { .. })));
        assert!(matches!(sparse_k(&[1.0], 2), Err(Error::SparsityOutOfRange { .. })));
    }

    #[test]
    fn rho_rounding() {
        assert_eq!(k_from_rho(0.02, 784).unwrap(), 16); // 15.68
        assert_eq!(k_from_rho(0.5, 3).unwrap(), 2); // 1.5 rounds up
        assert_eq!(k_from_rho(1e-6, 784).unwrap(), 1);
        assert_eq!(k_from_rho(1.0, 784).unwrap(), 784);
        assert!(k_from_rho(0.0, 10).is_err());
        assert!(k_from_rho(1.5, 10).is_err());
    }

    #[test]
    fn identity_support_examples() {
        let x = [0.0, 5.0, 0.0, -2.0];
        assert_eq!(identity_fe(4, 1).support(&x).unwrap().indices(), &[1]);
        assert_eq!(identity_fe(4, 2).support(&x).unwrap().indices(), &[1, 3]);
    }

    #[test]
    fn identity_proj_is_masking() {
        let fe = identity_fe(4, 2);
        let x = [0.0, 5.0, 0.0, -2.0];
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(fe.proj(&v, &x).unwrap(), vec![0.0, 2.0, 0.0, 4.0]);
    }

    #[test]
    fn proj_of_orthogonal_complement_vanishes() {
        let basis = Arc::new(Basis::<f64>::random_orthonormal(16, 2).unwrap());
        let fe = FrontEnd::new(basis.clone(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = fe.support(&x).unwrap();
        // a combination of atoms outside the support
        let mut c = vec![0.0; 16];
        for i in 0..16 {
            if !s.contains(i) {
                c[i] = rng.random_range(-1.0..1.0);
            }
        }
        let v = basis.synthesize(&c).unwrap();
        assert!(norm2(&fe.proj(&v, &x).unwrap()) < 1e-12);
    }

    #[test]
    fn k_sparse_signal_passes_unchanged() {
        let basis = Arc::new(Basis::<f64>::cdf97(28, 28, 3).unwrap());
        let fe = FrontEnd::new(basis.clone(), 16).unwrap();
        let mut c = vec![0.0; 784];
        for (j, i) in [0usize, 5, 17, 40, 99, 300, 500, 783].iter().enumerate() {
            c[*i] = (j as f64 + 1.0) * if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        let x = basis.synthesize(&c).unwrap();
        let y = fe.apply(&x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn full_rank_front_end_is_identity() {
        let basis = Arc::new(Basis::<f64>::random_orthonormal(12, 4).unwrap());
        let fe = FrontEnd::new(basis, 12).unwrap();
        let x: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let y = fe.apply(&x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn high_snr_output_is_signal_plus_projection() {
        let n = 32;
        let basis = Arc::new(Basis::<f64>::random_orthonormal(n, 9).unwrap());
        let fe = FrontEnd::new(basis.clone(), 3).unwrap();
        let mut c = vec![0.0; n];
        c[2] = 10.0;
        c[7] = -8.0;
        c[20] = 9.0;
        let x = basis.synthesize(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(-0.05..0.05)).collect();
        assert!(fe.check_high_snr(&x, 0.05).unwrap().certified);
        let xe: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + b).collect();
        let got = fe.apply(&xe).unwrap();
        let p = fe.proj(&e, &x).unwrap();
        for i in 0..n {
            assert!((got[i] - (x[i] + p[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn snr_identity_examples() {
        let fe = identity_fe(4, 1);
        let x = [1.0, 0.0, 0.0, 0.0];
        let r = fe.check_high_snr(&x, 0.25).unwrap();
        assert_eq!((r.lambda, r.m, r.snr, r.certified), (1.0, 1.0, 4.0, true));
        let r = fe.check_high_snr(&x, 0.6).unwrap();
        assert!((r.snr - 1.0 / 0.6).abs() < 1e-12);
        assert!(!r.certified);
        let r = fe.check_high_snr(&[0.0; 4], 0.1).unwrap();
        assert_eq!((r.lambda, r.certified), (0.0, false));
        assert!(fe.check_high_snr(&x, 0.0).is_err());
    }

    #[test]
    fn snr_accounts_for_discarded_energy() {
        // λ/ε = 100 but the runner-up coefficient sits right behind λ
        let fe = identity_fe(2, 1);
        let r = fe.check_high_snr(&[1.0, 0.99], 0.01).unwrap();
        assert!(r.snr > 2.0 * r.m);
        assert!(!r.certified);
    }

    #[test]
    fn adjoint_identity_on_wavelet() {
        let basis = Arc::new(Basis::<f64>::cdf97(8, 8, 2).unwrap());
        let fe = FrontEnd::new(basis, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut draw = || -> Vec<f64> { (0..64).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (x, w, e) = (draw(), draw(), draw());
        let lhs = dot(&w, &fe.proj(&e, &x).unwrap());
        let rhs = dot(&e, &fe.proj_adjoint(&w, &x).unwrap());
        assert!((lhs - rhs).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn sparse_k_is_idempotent(c in prop::collection::vec(-10.0f64..10.0, 1..40), k in 1usize..40) {
            let k = k.min(c.len());
            let once = sparse_k(&c, k).unwrap();
            prop_assert_eq!(sparse_k(&once, k).unwrap(), once.clone());
        }

        #[test]
        fn retained_energy_grows_with_k(c in prop::collection::vec(-10.0f64..10.0, 2..40)) {
            let mut last = 0.0;
            for k in 1..=c.len() {
                let e = norm2(&sparse_k(&c, k).unwrap());
                prop_assert!(e >= last);
                last = e;
            }
        }

        #[test]
        fn support_has_k_distinct_indices(c in prop::collection::vec(-3i8..3, 1..30), k in 1usize..30) {
            let c: Vec<f64> = c.into_iter().map(f64::from).collect();
            let k = k.min(c.len());
            let idx = top_k_indices(&c, k).unwrap();
            prop_assert_eq!(idx.len(), k);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            // every discarded magnitude is ≤ every kept one
            let min_kept = idx.iter().map(|&i| c[i].abs()).fold(f64::INFINITY, f64::min);
            for i in 0..c.len() {
                if !idx.contains(&i) {
                    prop_assert!(c[i].abs() <= min_kept);
                }
            }
        }

        #[test]
        fn projection_identity_orthonormal(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..24);
            let k = rng.random_range(1..=n);
            let fe = FrontEnd::new(Arc::new(Basis::<f64>::random_orthonormal(n, seed).unwrap()), k).unwrap();
            let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
            let (x, w, e) = (draw(), draw(), draw());
            let lhs = dot(&w, &fe.proj(&e, &x).unwrap()).abs();
            let rhs = dot(&e, &fe.proj(&w, &x).unwrap()).abs();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            // idempotence
            let p = fe.proj(&e, &x).unwrap();
            let pp = fe.proj(&p, &x).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
