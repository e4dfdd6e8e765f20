//! Random orthonormal columns from Gaussian matrices.

use crate::scalar::Real;
use rand::Rng;
use rand_distr::StandardNormal;

/// Draws `k` orthonormal vectors in `R^n` distributed as the first `k`
/// columns of a Haar-random orthogonal matrix.
///
/// Modified Gram–Schmidt with one re-orthogonalization pass on i.i.d.
/// standard normal columns. Dividing by the (positive) norm fixes the sign of
/// the implied R diagonal. A column that collapses numerically is redrawn.
pub fn random_orthonormal_columns<T: Real, R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Vec<Vec<T>> {
    assert!(k <= n, "cannot draw {k} orthonormal vectors in dimension {n}");
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(k);
    let floor = T::lit(1e-6);
    while cols.len() < k {
        let mut v: Vec<T> = (0..n)
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let raw = crate::scalar::norm2(&v);
        for _pass in 0..2 {
            for q in &cols {
                let p = crate::scalar::dot(q, &v);
                v.iter_mut().zip(q).for_each(|(vi, &qi)| *vi -= p * qi);
            }
        }
        let norm = crate::scalar::norm2(&v);
        if norm <= floor * raw {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    cols
}
