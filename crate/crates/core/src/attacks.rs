//! ℓ∞-bounded perturbations against a linear score `wᵀx`, with and without
//! the sparsifying front end.
//!
//! All three attacks are closed-form sign perturbations. Distortions are the
//! change in `wᵀx̂` assuming the front end keeps the clean support (the
//! high-SNR regime); [`measured_distortion`] gives the end-to-end value.

use crate::error::{check_dim, Error, Result};
use crate::frontend::{FrontEnd, SupportSet};
use crate::scalar::{dot, norm1, Real};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// No front end: `e = ε sign(w)`.
    Baseline,
    /// Front end present but ignored by the adversary: `e = ε sign(w)`.
    SemiWhite,
    /// Adversary knows the front end and aligns `e` with the projected weights.
    White,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::Baseline => "baseline",
            AttackKind::SemiWhite => "semi_white",
            AttackKind::White => "white",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport<T> {
    pub kind: AttackKind,
    pub epsilon: T,
    /// Perturbation, `‖e‖∞ ≤ ε`.
    pub e: Vec<T>,
    /// Predicted `|wᵀx̂ − wᵀx|`.
    pub delta: T,
}

fn check_epsilon<T: Real>(epsilon: T) -> Result<()> {
    if epsilon > T::zero() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))
    }
}

fn signed<T: Real>(v: &[T], epsilon: T) -> Vec<T> {
    v.iter().map(|x| x.sign0() * epsilon).collect()
}

/// `e = ε sign(w)`, `Δ₀ = ε ‖w‖₁`.
pub fn attack_baseline<T: Real>(w: &[T], epsilon: T) -> Result<AttackReport<T>> {
    check_epsilon(epsilon)?;
    Ok(AttackReport {
        kind: AttackKind::Baseline,
        epsilon,
        e: signed(w, epsilon),
        delta: epsilon * norm1(w),
    })
}

/// `e = ε sign(w)` passed through the front end: `Δ_SW = |wᵀ proj(e, x)|`,
/// which on orthonormal bases equals `ε |sign(w)ᵀ proj(w, x)|`.
pub fn attack_semi_white<T: Real>(
    fe: &FrontEnd<T>,
    w: &[T],
    x: &[T],
    epsilon: T,
) -> Result<AttackReport<T>> {
    check_epsilon(epsilon)?;
    check_dim(fe.dim(), w.len())?;
    let support = fe.support(x)?;
    let e = signed(w, epsilon);
    let delta = dot(w, &fe.proj_onto(&support, &e)).abs();
    Ok(AttackReport { kind: AttackKind::SemiWhite, epsilon, e, delta })
}

/// `e = ε sign(p)` with `p` the adjoint projection of `w` on `supp(x)`, the
/// exact maximizer of `|wᵀ proj(e, x)|` over the ℓ∞ ball. `Δ_W = ε ‖p‖₁`.
/// On orthonormal bases `p = proj(w, x)`.
pub fn attack_white<T: Real>(
    fe: &FrontEnd<T>,
    w: &[T],
    x: &[T],
    epsilon: T,
) -> Result<AttackReport<T>> {
    check_epsilon(epsilon)?;
    check_dim(fe.dim(), w.len())?;
    let p = fe.proj_adjoint(w, x)?;
    Ok(AttackReport {
        kind: AttackKind::White,
        epsilon,
        e: signed(&p, epsilon),
        delta: epsilon * norm1(&p),
    })
}

/// White-box attacker for a fixed `w`, reusing `Sᵀw` across many inputs.
#[derive(Debug, Clone)]
pub struct WhiteBoxAttacker<'a, T: Real> {
    fe: &'a FrontEnd<T>,
    st_w: Vec<T>,
    epsilon: T,
}

impl<'a, T: Real> WhiteBoxAttacker<'a, T> {
    pub fn new(fe: &'a FrontEnd<T>, w: &[T], epsilon: T) -> Result<Self> {
        check_epsilon(epsilon)?;
        let st_w = fe.basis().synthesize_adjoint(w)?;
        Ok(Self { fe, st_w, epsilon })
    }

    pub fn attack(&self, x: &[T]) -> Result<AttackReport<T>> {
        let support = self.fe.support(x)?;
        Ok(self.attack_on(&support))
    }

    pub fn attack_on(&self, support: &SupportSet) -> AttackReport<T> {
        let p = self.fe.proj_adjoint_onto(support, &self.st_w);
        AttackReport {
            kind: AttackKind::White,
            epsilon: self.epsilon,
            e: signed(&p, self.epsilon),
            delta: self.epsilon * norm1(&p),
        }
    }
}

/// End-to-end distortion `|wᵀ(f(x + e) − f(x))|` through the front end `f`.
/// Matches the closed-form delta whenever `supp(x + e) = supp(x)`.
pub fn measured_distortion<T: Real>(fe: &FrontEnd<T>, w: &[T], x: &[T], e: &[T]) -> Result<T> {
    check_dim(fe.dim(), e.len())?;
    let xe: Vec<T> = x.iter().zip(e).map(|(&a, &b)| a + b).collect();
    let clean = fe.apply(x)?;
    let attacked = fe.apply(&xe)?;
    let diff: Vec<T> = attacked.iter().zip(&clean).map(|(&a, &b)| a - b).collect();
    Ok(dot(w, &diff).abs())
}

/// Points the perturbation against the true class: `+e` for the first digit
/// of the pair (negative score side), `−e` for the second.
pub fn directed_perturbation<T: Real>(e: &[T], label: u8, pair: (u8, u8)) -> Result<Vec<T>> {
    if label == pair.0 {
        Ok(e.to_vec())
    } else if label == pair.1 {
        Ok(e.iter().map(|&v| -v).collect())
    } else {
        Err(Error::InvalidArgument(format!(
            "label {label} is not one of the pair {}/{}",
            pair.0, pair.1
        )))
    }
}
