//! Linear SVM trained with averaged Pegasos-style stochastic subgradient
//! descent on the primal hinge-loss objective.

use crate::basis::BasisKind;
use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, Real};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which side of the pair a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    /// First digit `d1`, `f(x) < 0`, target `y = -1`.
    First,
    /// Second digit `d2`, `f(x) ≥ 0`, target `y = +1`.
    Second,
}

impl Class {
    pub fn target<T: Real>(self) -> T {
        match self {
            Class::First => -T::one(),
            Class::Second => T::one(),
        }
    }

    pub fn from_label(label: u8, pair: (u8, u8)) -> Result<Self> {
        if label == pair.0 {
            Ok(Class::First)
        } else if label == pair.1 {
            Ok(Class::Second)
        } else {
            Err(Error::InvalidArgument(format!("label {label} not in pair {}/{}", pair.0, pair.1)))
        }
    }

    pub fn digit(self, pair: (u8, u8)) -> u8 {
        match self {
            Class::First => pair.0,
            Class::Second => pair.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Regularization strength `λ` in `λ/2 ‖w‖² + mean hinge`.
    pub lambda: f64,
    pub epochs: usize,
    /// Step sizes are `1 / (λ (t + offset))`; `offset = 0` is plain Pegasos.
    pub step_offset: f64,
    /// Epochs excluded from the iterate average.
    pub burn_in_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lambda: 1e-5, epochs: 100, step_offset: 0.0, burn_in_epochs: 1, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("train config: {what}")));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.step_offset >= 0.0 && self.step_offset.is_finite()) {
            return bad("step_offset must be non-negative");
        }
        if self.burn_in_epochs >= self.epochs {
            return bad("burn_in_epochs must be smaller than epochs");
        }
        Ok(())
    }
}

/// `f(x) = wᵀx + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Real> LinearModel<T> {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn score(&self, x: &[T]) -> T {
        dot(&self.w, x) + self.b
    }

    /// `First` when `f(x) < 0`, otherwise `Second` (including `f(x) = 0`).
    pub fn predict(&self, x: &[T]) -> Class {
        if self.score(x) < T::zero() {
            Class::First
        } else {
            Class::Second
        }
    }

    /// `λ/2 ‖w‖² + mean hinge loss`.
    pub fn objective(&self, samples: &[Vec<T>], classes: &[Class], lambda: T) -> T {
        let hinge: T = samples
            .iter()
            .zip(classes)
            .map(|(x, c)| (T::one() - c.target::<T>() * self.score(x)).max(T::zero()))
            .sum();
        let reg = lambda * T::lit(0.5) * (dot(&self.w, &self.w) + self.b * self.b);
        reg + hinge / T::from_usize_lossy(samples.len().max(1))
    }
}

/// Per-epoch diagnostics of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Objective of the averaged iterate at the end of each post-burn-in epoch.
    pub epoch_objective: Vec<f64>,
}

/// Minimizes `λ/2 (‖w‖² + b²) + (1/n) Σ max(0, 1 − y (wᵀx + b))`.
///
/// The bias is handled as an extra weight on a constant feature. Sample
/// order is reshuffled every epoch from `cfg.seed`, so runs are reproducible.
/// Returns the average of all iterates after the burn-in epochs.
pub fn train<T: Real>(
    samples: &[Vec<T>],
    classes: &[Class],
    cfg: &TrainConfig,
) -> Result<(LinearModel<T>, TrainReport)> {
    cfg.validate()?;
    check_dim(samples.len(), classes.len())?;
    if samples.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    if !classes.contains(&Class::First) || !classes.contains(&Class::Second) {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    let n = samples[0].len();
    for x in samples {
        check_dim(n, x.len())?;
    }

    let lambda = T::lit(cfg.lambda);
    let mut w = vec![T::zero(); n];
    let mut b = T::zero();
    let mut avg_w = vec![T::zero(); n];
    let mut avg_b = T::zero();
    let mut averaged = 0usize;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = 0usize;
    let mut report = TrainReport { epoch_objective: Vec::new() };

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = T::one() / (lambda * (T::from_usize_lossy(t) + T::lit(cfg.step_offset)));
            let y = classes[i].target::<T>();
            let x = &samples[i];
            let margin = y * (dot(&w, x) + b);
            let shrink = T::one() - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            b *= shrink;
            if margin < T::one() {
                let step = eta * y;
                w.iter_mut().zip(x).for_each(|(v, &xi)| *v += step * xi);
                b += step;
            }
            if epoch >= cfg.burn_in_epochs {
                averaged += 1;
                let inv = T::one() / T::from_usize_lossy(averaged);
                avg_w.iter_mut().zip(&w).for_each(|(a, &v)| *a += (v - *a) * inv);
                avg_b += (b - avg_b) * inv;
            }
        }
        if epoch >= cfg.burn_in_epochs {
            let model = LinearModel { w: avg_w.clone(), b: avg_b };
            let obj = model.objective(samples, classes, lambda).to_f64_lossy();
            if !obj.is_finite() {
                return Err(Error::Training(format!("objective diverged at epoch {epoch}")));
            }
            report.epoch_objective.push(obj);
        }
    }
    if avg_w.iter().any(|v| !v.is_finite()) || !avg_b.is_finite() {
        return Err(Error::Training("non-finite weights".into()));
    }
    Ok((LinearModel { w: avg_w, b: avg_b }, report))
}

/// Accuracy with the exact count it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn from_predictions(pred: &[Class], truth: &[Class]) -> Result<Self> {
        check_dim(truth.len(), pred.len())?;
        if truth.is_empty() {
            return Err(Error::InvalidArgument("cannot evaluate an empty set".into()));
        }
        let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
        Ok(Self { correct, total: truth.len() })
    }
}

pub fn evaluate<T: Real>(model: &LinearModel<T>, samples: &[Vec<T>], classes: &[Class]) -> Result<Evaluation> {
    check_dim(samples.len(), classes.len())?;
    let pred: Vec<Class> = samples.iter().map(|x| model.predict(x)).collect();
    Evaluation::from_predictions(&pred, classes)
}

/// Front-end settings stored with a model trained on sparsified data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFrontEnd {
    pub basis: BasisKind,
    pub k: usize,
}

/// On-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub n: usize,
    pub w: Vec<f64>,
    pub b: f64,
    pub pair: (u8, u8),
    pub split_seed: u64,
    pub train: TrainConfig,
    pub frontend: Option<ModelFrontEnd>,
}

impl SavedModel {
    pub fn new<T: Real>(
        model: &LinearModel<T>,
        pair: (u8, u8),
        split_seed: u64,
        train: TrainConfig,
        frontend: Option<ModelFrontEnd>,
    ) -> Self {
        Self {
            n: model.dim(),
            w: model.w.iter().map(|v| v.to_f64_lossy()).collect(),
            b: model.b.to_f64_lossy(),
            pair,
            split_seed,
            train,
            frontend,
        }
    }

    pub fn model<T: Real>(&self) -> Result<LinearModel<T>> {
        check_dim(self.n, self.w.len())?;
        if self.w.iter().any(|v| !v.is_finite()) || !self.b.is_finite() {
            return Err(Error::Format("model has non-finite weights".into()));
        }
        if let Some(fe) = &self.frontend {
            if fe.k == 0 || fe.k > self.n {
                return Err(Error::SparsityOutOfRange { k: fe.k, n: self.n });
            }
        }
        Ok(LinearModel { w: self.w.iter().map(|&v| T::lit(v)).collect(), b: T::lit(self.b) })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let saved: Self = serde_json::from_reader(file)?;
        saved.model::<f64>()?;
        Ok(saved)
    }
}
