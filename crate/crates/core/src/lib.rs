//! Sparsifying front ends for linear classifiers under `ℓ∞`-bounded attacks.
//!
//! The numeric core ([`basis`], [`frontend`], [`attacks`], [`svm`]) is generic
//! over [`Real`] (`f32` or `f64`); the aliases below fix it to one width.
//! Data loading and the Monte-Carlo harness work in `f64`.

pub mod attacks;
pub mod basis;
pub mod dataio;
pub mod ensemble;
pub mod error;
pub mod frontend;
pub mod scalar;
pub mod stats;
pub mod svm;

pub use attacks::{
    attack_baseline, attack_semi_white, attack_white, directed_perturbation, measured_distortion,
    AttackKind, AttackReport, WhiteBoxAttacker,
};
pub use basis::{Basis, BasisInfo, BasisKind};
pub use error::{Error, Result};
pub use frontend::{k_from_rho, sparse_k, top_k_indices, FrontEnd, SnrReport, SupportSet};
pub use scalar::Real;
pub use svm::{Class, Evaluation, LinearModel, ModelFrontEnd, SavedModel, TrainConfig};

pub type Basis64 = Basis<f64>;
pub type Basis32 = Basis<f32>;
pub type FrontEnd64 = FrontEnd<f64>;
pub type FrontEnd32 = FrontEnd<f32>;
pub type LinearModel64 = LinearModel<f64>;
pub type LinearModel32 = LinearModel<f32>;
pub type AttackReport64 = AttackReport<f64>;
pub type AttackReport32 = AttackReport<f32>;
pub type SnrReport64 = SnrReport<f64>;
