//! Monte-Carlo checks of the ensemble-averaged distortion results.
//!
//! Classifier weights are drawn i.i.d. from a symmetric distribution with
//! `μ = E|w₁|` and `σ² = E[w₁²]`; the support is fixed to the first `K`
//! columns of the basis. Every trial draws from its own ChaCha stream keyed by
//! `(seed, trial)`, so statistics do not depend on the number of workers.
//! Distortions are per unit budget (`ε = 1`).

use crate::basis::{random_orthonormal_columns, Basis};
use crate::error::{Error, Result};
use crate::frontend::FrontEnd;
use crate::scalar::{dot, norm1, norm_inf};
use crate::stats::{ks_critical_1pct, ks_statistic, linear_fit, normal_cdf, LinearFit, Summary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// Symmetric weight distributions (zero mean, zero median).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum WeightDist {
    StandardNormal,
    /// `±scale` with equal probability.
    RademacherScaled { scale: f64 },
    /// Uniform on `[-half_width, half_width]`.
    UniformSymmetric { half_width: f64 },
}

impl fmt::Display for WeightDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDist::StandardNormal => write!(f, "standard_normal"),
            WeightDist::RademacherScaled { scale } => write!(f, "rademacher({scale})"),
            WeightDist::UniformSymmetric { half_width } => write!(f, "uniform({half_width})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightModel {
    pub dist: WeightDist,
    pub seed: u64,
}

impl WeightModel {
    pub fn new(dist: WeightDist, seed: u64) -> Result<Self> {
        let ok = match dist {
            WeightDist::StandardNormal => true,
            WeightDist::RademacherScaled { scale } => scale > 0.0 && scale.is_finite(),
            WeightDist::UniformSymmetric { half_width } => half_width > 0.0 && half_width.is_finite(),
        };
        if ok {
            Ok(Self { dist, seed })
        } else {
            Err(Error::InvalidArgument(format!("degenerate weight distribution {dist}")))
        }
    }

    pub fn standard_normal(seed: u64) -> Self {
        Self { dist: WeightDist::StandardNormal, seed }
    }

    /// `μ = E|w₁|`.
    pub fn mu(&self) -> f64 {
        match self.dist {
            WeightDist::StandardNormal => (2.0 / std::f64::consts::PI).sqrt(),
            WeightDist::RademacherScaled { scale } => scale,
            WeightDist::UniformSymmetric { half_width } => half_width / 2.0,
        }
    }

    /// `σ² = E[w₁²]`.
    pub fn sigma2(&self) -> f64 {
        match self.dist {
            WeightDist::StandardNormal => 1.0,
            WeightDist::RademacherScaled { scale } => scale * scale,
            WeightDist::UniformSymmetric { half_width } => half_width * half_width / 3.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| match self.dist {
                WeightDist::StandardNormal => rng.sample(StandardNormal),
                WeightDist::RademacherScaled { scale } => {
                    if rng.random::<bool>() {
                        scale
                    } else {
                        -scale
                    }
                }
                WeightDist::UniformSymmetric { half_width } => {
                    rng.random_range(-half_width..=half_width)
                }
            })
            .collect()
    }
}

/// Where the `K` support columns come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum EnsembleBasis {
    /// A fresh Haar-random orthonormal basis every trial.
    RandomOrthonormal { seed: u64 },
    Identity,
    /// Fixed block DCT (see [`Basis::dct`]); the first `N / block` columns
    /// have disjoint supports.
    BlockDct { block: usize },
}

impl fmt::Display for EnsembleBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleBasis::RandomOrthonormal { seed } => write!(f, "random_orthonormal(seed={seed})"),
            EnsembleBasis::Identity => write!(f, "identity"),
            EnsembleBasis::BlockDct { block } => write!(f, "block_dct({block})"),
        }
    }
}

const WEIGHT_DOMAIN: u64 = 0x5745_4947_4854_5300;
const BASIS_DOMAIN: u64 = 0x4241_5349_5300_0000;

/// Independent stream for `trial` under `(seed, domain)`.
fn trial_rng(seed: u64, domain: u64, trial: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial as u64);
    rng
}

/// Support columns for one trial.
enum Columns {
    Fixed(Vec<Vec<f64>>),
    Random { seed: u64 },
    Identity,
}

impl Columns {
    fn new(basis: EnsembleBasis, n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::SparsityOutOfRange { k, n });
        }
        Ok(match basis {
            EnsembleBasis::RandomOrthonormal { seed } => Columns::Random { seed },
            EnsembleBasis::Identity => Columns::Identity,
            EnsembleBasis::BlockDct { block } => {
                let b = Basis::<f64>::dct(n, block)?;
                Columns::Fixed((0..k).map(|i| b.basis_column(i)).collect::<Result<_>>()?)
            }
        })
    }

    fn draw(&self, n: usize, k: usize, trial: usize) -> std::borrow::Cow<'_, [Vec<f64>]> {
        use std::borrow::Cow;
        match self {
            Columns::Fixed(c) => Cow::Borrowed(c),
            Columns::Random { seed } => {
                let mut rng = trial_rng(*seed, BASIS_DOMAIN, trial);
                Cow::Owned(random_orthonormal_columns(n, k, &mut rng))
            }
            Columns::Identity => Cow::Owned(
                (0..k)
                    .map(|i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        e
                    })
                    .collect(),
            ),
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    Ok(())
}

/// Summary of a Monte-Carlo quantity, optionally with the raw draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub trials: usize,
    pub mean: f64,
    pub var: f64,
    pub std_err: f64,
    pub var_std_err: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl EnsembleStats {
    fn from_values(values: Vec<f64>) -> Self {
        let s = Summary::of(&values);
        Self {
            trials: s.n,
            mean: s.mean,
            var: s.var,
            std_err: s.std_err,
            var_std_err: s.var_std_err,
            values,
        }
    }
}

/// Semi-white box distortion draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiWhiteSim {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub sigma2: f64,
    /// `Z_K = Σ_{i ≤ K} U_i V_i` with `U_i = ψ_iᵀw`, `V_i = ψ_iᵀ sign(w)`.
    pub z: EnsembleStats,
    /// `Δ_SW / K = |Z_K| / K`.
    pub ratio: EnsembleStats,
}

/// Draws `Δ_SW / K` over `trials` independent `(w, basis)` pairs.
pub fn simulate_semiwhite(
    n: usize,
    k: usize,
    wm: &WeightModel,
    basis: EnsembleBasis,
    trials: usize,
) -> Result<SemiWhiteSim> {
    check_trials(trials)?;
    let cols = Columns::new(basis, n, k)?;
    let z: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(wm.seed, WEIGHT_DOMAIN, t);
            let w = wm.sample(n, &mut rng);
            let s: Vec<f64> = w.iter().map(|v| sign0(*v)).collect();
            cols.draw(n, k, t).iter().map(|psi| dot(psi, &w) * dot(psi, &s)).sum()
        })
        .collect();
    let ratio = z.iter().map(|v| v.abs() / k as f64).collect();
    Ok(SemiWhiteSim {
        n,
        k,
        mu: wm.mu(),
        sigma2: wm.sigma2(),
        z: EnsembleStats::from_values(z),
        ratio: EnsembleStats::from_values(ratio),
    })
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Convergence of `Δ_SW / K` to `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub mu: f64,
    pub mean_ratio: f64,
    pub std_err: f64,
    /// `|mean − μ| / std_err`.
    pub z_score: f64,
    pub mean_ok: bool,
    pub delta: f64,
    /// Fraction of trials with `|Δ_SW/K − μ| > δ`.
    pub exceed_frac: f64,
    /// Chebyshev bound `(σ² + μ²) / (K δ²)`.
    pub chebyshev_bound: f64,
    pub binomial_std_err: f64,
    pub concentration_ok: bool,
    pub passed: bool,
}

/// Mean of `Δ_SW/K` within `mean_band` standard errors of `μ`, and the
/// exceedance frequency at `delta` below the Chebyshev bound plus three
/// binomial standard errors.
pub fn check_semiwhite_convergence(sim: &SemiWhiteSim, delta: f64, mean_band: f64) -> ConvergenceCheck {
    let r = &sim.ratio;
    let z_score = (r.mean - sim.mu).abs() / r.std_err;
    let exceed = r.values.iter().filter(|v| (*v - sim.mu).abs() > delta).count();
    let p = exceed as f64 / r.trials as f64;
    let binomial_std_err = (p * (1.0 - p) / r.trials as f64).sqrt();
    let chebyshev_bound = (sim.sigma2 + sim.mu * sim.mu) / (sim.k as f64 * delta * delta);
    let mean_ok = z_score <= mean_band;
    let concentration_ok = p <= chebyshev_bound + 3.0 * binomial_std_err;
    ConvergenceCheck {
        n: sim.n,
        k: sim.k,
        trials: r.trials,
        mu: sim.mu,
        mean_ratio: r.mean,
        std_err: r.std_err,
        z_score,
        mean_ok,
        delta,
        exceed_frac: p,
        chebyshev_bound,
        binomial_std_err,
        concentration_ok,
        passed: mean_ok && concentration_ok,
    }
}

/// Mean and variance of `Z_K` against `Kμ` and `K(σ² + μ²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub mean_z: f64,
    pub expected_mean: f64,
    pub mean_std_err: f64,
    pub mean_ok: bool,
    pub var_z: f64,
    pub var_bound: f64,
    /// Relative allowance `4 · se(var) / var`.
    pub var_slack: f64,
    pub var_ok: bool,
    pub passed: bool,
}

pub fn check_moments(
    n: usize,
    k: usize,
    wm: &WeightModel,
    basis: EnsembleBasis,
    trials: usize,
) -> Result<MomentCheck> {
    let sim = simulate_semiwhite(n, k, wm, basis, trials)?;
    let z = &sim.z;
    let kf = k as f64;
    let expected_mean = kf * sim.mu;
    let var_bound = kf * (sim.sigma2 + sim.mu * sim.mu);
    let mean_ok = (z.mean - expected_mean).abs() <= 4.0 * z.std_err;
    let var_slack = if z.var > 0.0 { 4.0 * z.var_std_err / z.var } else { 0.0 };
    let var_ok = z.var <= var_bound * (1.0 + var_slack);
    Ok(MomentCheck {
        n,
        k,
        trials,
        mean_z: z.mean,
        expected_mean,
        mean_std_err: z.std_err,
        mean_ok,
        var_z: z.var,
        var_bound,
        var_slack,
        var_ok,
        passed: mean_ok && var_ok,
    })
}

/// Both sides of the white-box triangle bound for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhiteBoundCheck {
    /// `‖proj_adjoint(w, x)‖₁`, the white-box distortion per unit budget.
    pub delta_w: f64,
    /// `Σ_{k ∈ supp(x)} |⟨ψ_k, w⟩| ‖ψ̃_k‖₁`.
    pub bound: f64,
    /// `delta_w ≤ bound + 1e-9`.
    pub holds: bool,
    /// Equality within `1e-9`.
    pub tight: bool,
}

pub const BOUND_TOL: f64 = 1e-9;

pub fn check_white_bound(fe: &FrontEnd<f64>, w: &[f64], x: &[f64]) -> Result<WhiteBoundCheck> {
    let support = fe.support(x)?;
    let st_w = fe.basis().synthesize_adjoint(w)?;
    let delta_w = norm1(&fe.proj_adjoint_onto(&support, &st_w));
    let info = fe.basis().info();
    let bound = support
        .indices()
        .iter()
        .map(|&k| st_w[k].abs() * info.per_row_l1[k])
        .sum();
    Ok(bound_from(delta_w, bound))
}

fn bound_from(delta_w: f64, bound: f64) -> WhiteBoundCheck {
    WhiteBoundCheck {
        delta_w,
        bound,
        holds: delta_w <= bound + BOUND_TOL,
        tight: (bound - delta_w).abs() <= BOUND_TOL,
    }
}

/// Which column the CLT check projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CltColumn {
    /// First column of a random orthonormal basis (delocalized).
    RandomOrthonormal,
    /// A coordinate vector; `‖ψ‖∞ = 1` violates the hypothesis.
    Identity,
}

/// Normality of `Z = ψᵀw` for a fixed column `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltCheck {
    pub n: usize,
    pub trials: usize,
    pub column: CltColumn,
    pub column_linf: f64,
    /// `‖ψ‖∞ ≤ 1/sqrt(log₂ N)`, the finite-N stand-in for `‖ψ‖∞ = o(1)`.
    pub hypothesis_ok: bool,
    pub ks: f64,
    pub ks_critical: f64,
    pub ks_ok: bool,
    pub var_z: f64,
    pub sigma2: f64,
    pub var_std_err: f64,
    pub var_ok: bool,
    /// Both statistical checks pass; only meaningful when `hypothesis_ok`.
    pub passed: bool,
}

pub fn delocalized_linf_threshold(n: usize) -> f64 {
    1.0 / (n as f64).log2().max(1.0).sqrt()
}

pub fn check_clt(
    n: usize,
    wm: &WeightModel,
    basis_seed: u64,
    trials: usize,
    column: CltColumn,
) -> Result<CltCheck> {
    check_trials(trials)?;
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let psi = match column {
        CltColumn::RandomOrthonormal => {
            let mut rng = trial_rng(basis_seed, BASIS_DOMAIN, 0);
            random_orthonormal_columns::<f64, _>(n, 1, &mut rng).remove(0)
        }
        CltColumn::Identity => {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        }
    };
    let z: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| dot(&psi, &wm.sample(n, &mut trial_rng(wm.seed, WEIGHT_DOMAIN, t))))
        .collect();
    let sd = wm.sigma2().sqrt();
    let ks = ks_statistic(&z, |v| normal_cdf(v, sd));
    let ks_critical = ks_critical_1pct(trials);
    let s = Summary::of(&z);
    let column_linf = norm_inf(&psi);
    let ks_ok = ks < ks_critical;
    let var_ok = (s.var - wm.sigma2()).abs() <= 4.0 * s.var_std_err;
    Ok(CltCheck {
        n,
        trials,
        column,
        column_linf,
        hypothesis_ok: column_linf <= delocalized_linf_threshold(n),
        ks,
        ks_critical,
        ks_ok,
        var_z: s.var,
        sigma2: wm.sigma2(),
        var_std_err: s.var_std_err,
        var_ok,
        passed: ks_ok && var_ok,
    })
}

/// Block length used for the localized orthonormal basis at dimension `n`:
/// the power of two at least `(log₂ n)² / 4`, capped at `n`.
pub fn localized_block(n: usize) -> usize {
    let l = (n as f64).log2();
    let target = (l * l / 4.0).ceil().max(2.0) as usize;
    target.next_power_of_two().min(n)
}

/// `max ‖ψ_k‖₁ ≤ 2 ln N`, the finite-N stand-in for `‖ψ_k‖₁ = O(log N)`.
pub fn localized_l1_threshold(n: usize) -> f64 {
    2.0 * (n as f64).ln()
}

/// White-box distortion statistics at one `(N, K)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhiteRow {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub basis: String,
    pub distribution: String,
    pub mean_delta_w: f64,
    pub std_err_delta_w: f64,
    pub mean_bound: f64,
    /// Every trial satisfied `Δ_W ≤ bound + 1e-9`.
    pub all_below_bound: bool,
    /// Every trial had `Δ_W = bound` within `1e-9`.
    pub all_tight: bool,
    /// `mean Δ_SW / (K μ)`.
    pub semiwhite_ratio: f64,
    /// `mean Δ_W / (K ln² N)`.
    pub polylog_ratio: f64,
    /// Fraction of trials with `Δ_W > σ K ln² N`.
    pub polylog_exceed_frac: f64,
    pub max_col_l1: f64,
    pub max_col_linf: f64,
    pub l1_hypothesis: bool,
    pub linf_hypothesis: bool,
}

impl WhiteRow {
    pub fn hypotheses_hold(&self) -> bool {
        self.l1_hypothesis && self.linf_hypothesis
    }
}

/// Simulates `Δ_W`, its triangle bound, and `Δ_SW` with support `{0..K}`.
pub fn simulate_white(
    n: usize,
    k: usize,
    wm: &WeightModel,
    basis: EnsembleBasis,
    trials: usize,
) -> Result<WhiteRow> {
    check_trials(trials)?;
    let cols = Columns::new(basis, n, k)?;
    struct Draw {
        delta_w: f64,
        bound: f64,
        delta_sw: f64,
        l1: f64,
        linf: f64,
    }
    let draws: Vec<Draw> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = wm.sample(n, &mut trial_rng(wm.seed, WEIGHT_DOMAIN, t));
            let s: Vec<f64> = w.iter().map(|v| sign0(*v)).collect();
            let psis = cols.draw(n, k, t);
            let mut proj = vec![0.0; n];
            let (mut bound, mut z, mut l1, mut linf) = (0.0, 0.0, 0.0f64, 0.0f64);
            for psi in psis.iter() {
                let u = dot(psi, &w);
                let col_l1 = norm1(psi);
                bound += u.abs() * col_l1;
                z += u * dot(psi, &s);
                l1 = l1.max(col_l1);
                linf = linf.max(norm_inf(psi));
                proj.iter_mut().zip(psi.iter()).for_each(|(p, &v)| *p += u * v);
            }
            Draw { delta_w: norm1(&proj), bound, delta_sw: z.abs(), l1, linf }
        })
        .collect();
    let dw: Vec<f64> = draws.iter().map(|d| d.delta_w).collect();
    let s = Summary::of(&dw);
    let ln = (n as f64).ln();
    let polylog = k as f64 * ln * ln;
    let threshold = wm.sigma2().sqrt() * polylog;
    let max_col_l1 = draws.iter().map(|d| d.l1).fold(0.0, f64::max);
    let max_col_linf = draws.iter().map(|d| d.linf).fold(0.0, f64::max);
    Ok(WhiteRow {
        n,
        k,
        trials,
        basis: basis.to_string(),
        distribution: wm.dist.to_string(),
        mean_delta_w: s.mean,
        std_err_delta_w: s.std_err,
        mean_bound: draws.iter().map(|d| d.bound).sum::<f64>() / trials as f64,
        all_below_bound: draws.iter().all(|d| d.delta_w <= d.bound + BOUND_TOL),
        all_tight: draws.iter().all(|d| (d.bound - d.delta_w).abs() <= BOUND_TOL),
        semiwhite_ratio: draws.iter().map(|d| d.delta_sw).sum::<f64>()
            / trials as f64
            / (k as f64 * wm.mu()),
        polylog_ratio: s.mean / polylog,
        polylog_exceed_frac: dw.iter().filter(|&&v| v > threshold).count() as f64 / trials as f64,
        max_col_l1,
        max_col_linf,
        l1_hypothesis: max_col_l1 <= localized_l1_threshold(n),
        linf_hypothesis: max_col_linf <= delocalized_linf_threshold(n),
    })
}

/// Mean `Δ_W` against `K` at fixed `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhiteKSweep {
    pub rows: Vec<WhiteRow>,
    pub fit: LinearFit,
    /// Largest `|mean − fit| / fit` over the sweep.
    pub max_fit_deviation: f64,
    /// Hypotheses hold at every point, so the linearity assertions apply.
    pub armed: bool,
    /// `R² ≥ 0.99` and every mean within 10% of the fitted line.
    pub linear_ok: bool,
    pub all_below_bound: bool,
}

pub const LINEAR_R2_MIN: f64 = 0.99;
pub const LINEAR_MAX_DEVIATION: f64 = 0.10;

pub fn sweep_white_vs_k(
    n: usize,
    ks: &[usize],
    wm: &WeightModel,
    basis: EnsembleBasis,
    trials: usize,
) -> Result<WhiteKSweep> {
    if ks.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sparsity levels".into()));
    }
    let rows = ks
        .iter()
        .map(|&k| simulate_white(n, k, wm, basis, trials))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_delta_w).collect();
    let fit = linear_fit(&xs, &ys);
    let max_fit_deviation = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| ((y - fit.predict(x)) / fit.predict(x)).abs())
        .fold(0.0, f64::max);
    Ok(WhiteKSweep {
        armed: rows.iter().all(WhiteRow::hypotheses_hold),
        linear_ok: fit.r2 >= LINEAR_R2_MIN && max_fit_deviation <= LINEAR_MAX_DEVIATION,
        all_below_bound: rows.iter().all(|r| r.all_below_bound),
        rows,
        fit,
        max_fit_deviation,
    })
}

/// `Δ_W` over growing `N` at fixed `ρ = K/N`, on the localized block DCT
/// sized by [`localized_block`].
pub fn sweep_white_scaling(
    n_list: &[usize],
    rho: f64,
    wm: &WeightModel,
    trials: usize,
) -> Result<Vec<WhiteRow>> {
    n_list
        .iter()
        .map(|&n| {
            let k = crate::frontend::k_from_rho(rho, n)?;
            simulate_white(n, k, wm, EnsembleBasis::BlockDct { block: localized_block(n) }, trials)
        })
        .collect()
}

/// Outcome of many random triangle-bound instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhiteBoundSweep {
    pub instances: usize,
    pub violations: usize,
    pub identity_instances: usize,
    pub identity_tight: usize,
    pub max_ratio: f64,
}

/// Random small instances: half on random orthonormal bases with random
/// signals, half on identity bases where the bound must be tight.
pub fn white_bound_instances(instances: usize, seed: u64) -> Result<WhiteBoundSweep> {
    let results: Vec<(bool, WhiteBoundCheck)> = (0..instances)
        .into_par_iter()
        .map(|t| -> Result<(bool, WhiteBoundCheck)> {
            let mut rng = trial_rng(seed, WEIGHT_DOMAIN, t);
            let n = rng.random_range(2..=16usize);
            let k = rng.random_range(1..=n);
            let identity = t % 2 == 1;
            let basis = if identity {
                Basis::identity(n)?
            } else {
                let cols = random_orthonormal_columns::<f64, _>(n, n, &mut rng);
                Basis::from_orthonormal_columns(cols, 1e-9)?
            };
            let fe = FrontEnd::new(std::sync::Arc::new(basis), k)?;
            let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            Ok((identity, check_white_bound(&fe, &w, &x)?))
        })
        .collect::<Result<_>>()?;
    Ok(WhiteBoundSweep {
        instances,
        violations: results.iter().filter(|(_, c)| !c.holds).count(),
        identity_instances: results.iter().filter(|(id, _)| *id).count(),
        identity_tight: results.iter().filter(|(id, c)| *id && c.tight).count(),
        max_ratio: results
            .iter()
            .filter(|(_, c)| c.bound > 0.0)
            .map(|(_, c)| c.delta_w / c.bound)
            .fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn closed_form_moments() {
        let wm = WeightModel::standard_normal(0);
        assert!((wm.mu() - 0.797_884_560_802_865_4).abs() < 1e-15);
        let r = WeightModel::new(WeightDist::RademacherScaled { scale: 2.0 }, 0).unwrap();
        assert_eq!((r.mu(), r.sigma2()), (2.0, 4.0));
        let u = WeightModel::new(WeightDist::UniformSymmetric { half_width: 3.0 }, 0).unwrap();
        assert_eq!((u.mu(), u.sigma2()), (1.5, 3.0));
        assert!(WeightModel::new(WeightDist::RademacherScaled { scale: 0.0 }, 0).is_err());
    }

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(1, WEIGHT_DOMAIN, 3).random();
        let b: u64 = trial_rng(1, WEIGHT_DOMAIN, 3).random();
        let c: u64 = trial_rng(1, WEIGHT_DOMAIN, 4).random();
        let d: u64 = trial_rng(1, BASIS_DOMAIN, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn identity_full_support_is_mean_abs_weight() {
        let wm = WeightModel::standard_normal(5);
        let sim = simulate_semiwhite(64, 64, &wm, EnsembleBasis::Identity, 10).unwrap();
        for (t, &r) in sim.ratio.values.iter().enumerate() {
            let w = wm.sample(64, &mut trial_rng(5, WEIGHT_DOMAIN, t));
            let direct = w.iter().map(|v| v.abs()).sum::<f64>() / 64.0;
            assert!((r - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn single_identity_column_is_abs_weight() {
        let wm = WeightModel::standard_normal(2);
        let sim = simulate_semiwhite(8, 1, &wm, EnsembleBasis::Identity, 2000).unwrap();
        // Z₁ = |w₁|: var = σ² − μ² = 1 − 2/π
        assert!(sim.z.values.iter().all(|&z| z >= 0.0));
        assert!((sim.z.var - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 4.0 * sim.z.var_std_err);
        assert!(sim.z.var <= 1.0 + 2.0 / std::f64::consts::PI);
    }

    #[test]
    fn white_bound_examples() {
        // identity: disjoint supports give equality
        let fe = FrontEnd::new(Arc::new(Basis::identity(4).unwrap()), 2).unwrap();
        let c = check_white_bound(&fe, &[0.5, -1.0, 2.0, 0.1], &[1.0, 0.0, 3.0, 0.0]).unwrap();
        assert!(c.holds && c.tight);
        assert!((c.delta_w - 2.5).abs() < 1e-15);

        // two overlapping atoms with opposite signs on the second coordinate
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cols = vec![
            vec![s, s, 0.0, 0.0],
            vec![s, -s, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ];
        let basis = Arc::new(Basis::from_orthonormal_columns(cols, 1e-12).unwrap());
        let fe = FrontEnd::new(basis.clone(), 2).unwrap();
        let x = basis.synthesize(&[3.0, 2.0, 0.0, 0.0]).unwrap();
        let c = check_white_bound(&fe, &[1.0, 0.0, 0.0, 0.0], &x).unwrap();
        // proj(w) = e₁, so Δ_W = 1 while each atom contributes (1/√2)·√2
        assert!((c.delta_w - 1.0).abs() < 1e-12);
        assert!((c.bound - 2.0).abs() < 1e-12);
        assert!(c.holds && !c.tight);
    }

    #[test]
    fn localized_block_sizes() {
        assert_eq!(localized_block(256), 16);
        assert_eq!(localized_block(1024), 32);
        assert_eq!(localized_block(2048), 32);
        assert_eq!(localized_block(4), 2);
    }

    #[test]
    fn block_dct_leading_columns_give_exact_bound() {
        let wm = WeightModel::standard_normal(3);
        let row = simulate_white(256, 8, &wm, EnsembleBasis::BlockDct { block: 16 }, 50).unwrap();
        assert!(row.all_below_bound && row.all_tight);
        assert!(row.hypotheses_hold());
        let rnd = simulate_white(256, 8, &wm, EnsembleBasis::RandomOrthonormal { seed: 1 }, 50).unwrap();
        assert!(rnd.all_below_bound);
        assert!(!rnd.l1_hypothesis);
    }

    #[test]
    fn clt_identity_column_violates_hypothesis() {
        let wm = WeightModel::new(WeightDist::RademacherScaled { scale: 1.0 }, 4).unwrap();
        let c = check_clt(256, &wm, 0, 2000, CltColumn::Identity).unwrap();
        assert!(!c.hypothesis_ok);
        assert_eq!(c.column_linf, 1.0);
        // Z = w₁ is ±1, nowhere near Gaussian
        assert!(!c.ks_ok);
    }

    #[test]
    fn statistics_are_reproducible() {
        let wm = WeightModel::standard_normal(9);
        let basis = EnsembleBasis::RandomOrthonormal { seed: 2 };
        let a = simulate_semiwhite(32, 4, &wm, basis, 100).unwrap();
        let b = simulate_semiwhite(32, 4, &wm, basis, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argument_errors() {
        let wm = WeightModel::standard_normal(0);
        assert!(simulate_semiwhite(8, 9, &wm, EnsembleBasis::Identity, 10).is_err());
        assert!(simulate_semiwhite(8, 2, &wm, EnsembleBasis::Identity, 1).is_err());
        assert!(sweep_white_vs_k(8, &[2], &wm, EnsembleBasis::Identity, 10).is_err());
    }
}
