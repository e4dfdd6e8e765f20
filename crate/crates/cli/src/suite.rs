//! The Monte-Carlo verification suite over the ensemble checks.

use crate::config::EnsembleConfig;
use crate::output::{ensure_dir, write_csv, write_manifest};
use crate::CliError;
use serde::Serialize;
use sparse_defense::ensemble::{
    check_clt, check_moments, check_semiwhite_convergence, white_bound_instances, simulate_semiwhite,
    sweep_white_scaling, sweep_white_vs_k, CltColumn, EnsembleBasis, WeightDist, WeightModel, WhiteRow,
};
use std::path::{Path, PathBuf};

pub fn parse_distribution(name: &str, seed: u64) -> Result<WeightModel, CliError> {
    let dist = match name {
        "standard_normal" => WeightDist::StandardNormal,
        "rademacher" => WeightDist::RademacherScaled { scale: 1.0 },
        "uniform" => WeightDist::UniformSymmetric { half_width: 1.0 },
        other => {
            return Err(CliError::Config(format!(
                "unknown distribution {other:?} (expected standard_normal, rademacher or uniform)"
            )))
        }
    };
    Ok(WeightModel::new(dist, seed)?)
}

/// One named check; `armed = false` means its hypotheses do not hold and
/// the result is informational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub armed: bool,
    pub passed: bool,
    pub seed: u64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn failed(&self) -> bool {
        self.armed && !self.passed
    }
}

/// One CSV row per simulated `(N, K, distribution)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub check: String,
    pub n: usize,
    pub k: usize,
    pub distribution: String,
    pub basis: String,
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_err: f64,
    pub bound: f64,
    pub l1_hypothesis: Option<bool>,
    pub linf_hypothesis: Option<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
    pub rows: Vec<EnsembleRow>,
    pub white_rows: Vec<WhiteRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| c.failed()).collect()
    }
}

/// Per-check seed so that the checks draw from unrelated streams.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
}

/// `Δ_SW / K` converges to `μ` at `(semiwhite_n, semiwhite_k)`.
pub fn semiwhite(cfg: &EnsembleConfig, dist: &str) -> Result<(CheckOutcome, EnsembleRow), CliError> {
    let seed = sub_seed(cfg.seed, 1);
    let wm = parse_distribution(dist, seed)?;
    let basis = EnsembleBasis::RandomOrthonormal { seed: sub_seed(cfg.seed, 2) };
    let sim = simulate_semiwhite(cfg.semiwhite_n, cfg.semiwhite_k, &wm, basis, cfg.semiwhite_trials)?;
    let c = check_semiwhite_convergence(&sim, cfg.semiwhite_delta, cfg.semiwhite_band);
    let outcome = CheckOutcome {
        name: format!("semiwhite/{dist}"),
        armed: true,
        passed: c.passed,
        seed,
        detail: format!(
            "N={} K={} trials={}: mean {:.5} vs mu {:.5} ({:.2} SE, limit {}); P(|r-mu|>{}) = {:.4} vs Chebyshev {:.4} + 3*{:.4}",
            c.n, c.k, c.trials, c.mean_ratio, c.mu, c.z_score, cfg.semiwhite_band, c.delta,
            c.exceed_frac, c.chebyshev_bound, c.binomial_std_err
        ),
    };
    let row = EnsembleRow {
        check: "semiwhite".into(),
        n: c.n,
        k: c.k,
        distribution: dist.into(),
        basis: basis.to_string(),
        trials: c.trials,
        mean: c.mean_ratio,
        variance: sim.ratio.var,
        std_err: c.std_err,
        bound: c.chebyshev_bound,
        l1_hypothesis: None,
        linf_hypothesis: None,
        passed: c.passed,
    };
    Ok((outcome, row))
}

pub fn moments(cfg: &EnsembleConfig, n: usize, k: usize, dist: &str) -> Result<(CheckOutcome, EnsembleRow), CliError> {
    let seed = sub_seed(cfg.seed, 3 + n as u64 * 1000 + k as u64);
    let wm = parse_distribution(dist, seed)?;
    let basis = EnsembleBasis::RandomOrthonormal { seed: sub_seed(seed, 4) };
    let c = check_moments(n, k, &wm, basis, cfg.moments_trials)?;
    let outcome = CheckOutcome {
        name: format!("moments/{dist}/N{n}/K{k}"),
        armed: true,
        passed: c.passed,
        seed,
        detail: format!(
            "mean Z {:.4} vs K*mu {:.4} (SE {:.4}); var Z {:.4} vs bound {:.4} (slack {:.3})",
            c.mean_z, c.expected_mean, c.mean_std_err, c.var_z, c.var_bound, c.var_slack
        ),
    };
    let row = EnsembleRow {
        check: "moments".into(),
        n,
        k,
        distribution: dist.into(),
        basis: basis.to_string(),
        trials: c.trials,
        mean: c.mean_z,
        variance: c.var_z,
        std_err: c.mean_std_err,
        bound: c.var_bound,
        l1_hypothesis: None,
        linf_hypothesis: None,
        passed: c.passed,
    };
    Ok((outcome, row))
}

pub fn white_bound(cfg: &EnsembleConfig) -> Result<CheckOutcome, CliError> {
    let seed = sub_seed(cfg.seed, 5);
    let s = white_bound_instances(cfg.bound_instances, seed)?;
    Ok(CheckOutcome {
        name: "white_bound".into(),
        armed: true,
        passed: s.violations == 0 && s.identity_tight == s.identity_instances,
        seed,
        detail: format!(
            "{} instances, {} violations; identity tight {}/{}; max ratio {:.6}",
            s.instances, s.violations, s.identity_tight, s.identity_instances, s.max_ratio
        ),
    })
}

pub fn clt(cfg: &EnsembleConfig, column: CltColumn) -> Result<(CheckOutcome, EnsembleRow), CliError> {
    let seed = sub_seed(cfg.seed, 6);
    let wm = parse_distribution("standard_normal", seed)?;
    let c = check_clt(cfg.clt_n, &wm, sub_seed(cfg.seed, 7), cfg.clt_trials, column)?;
    let name = match column {
        CltColumn::RandomOrthonormal => "clt/random_column",
        CltColumn::Identity => "clt/identity_column",
    };
    let outcome = CheckOutcome {
        name: name.into(),
        armed: c.hypothesis_ok,
        passed: c.passed,
        seed,
        detail: format!(
            "N={} trials={}: KS {:.5} vs critical {:.5}; var {:.4} vs {} (SE {:.4}); |psi|_inf {:.4} ({})",
            c.n,
            c.trials,
            c.ks,
            c.ks_critical,
            c.var_z,
            c.sigma2,
            c.var_std_err,
            c.column_linf,
            if c.hypothesis_ok { "hypothesis holds" } else { "hypothesis violated" }
        ),
    };
    let row = EnsembleRow {
        check: name.into(),
        n: c.n,
        k: 1,
        distribution: wm.dist.to_string(),
        basis: format!("{column:?}"),
        trials: c.trials,
        mean: c.ks,
        variance: c.var_z,
        std_err: c.var_std_err,
        bound: c.ks_critical,
        l1_hypothesis: None,
        linf_hypothesis: Some(c.hypothesis_ok),
        passed: c.passed,
    };
    Ok((outcome, row))
}

fn white_outcomes(name: &str, n: usize, seed: u64, s: &sparse_defense::ensemble::WhiteKSweep) -> Vec<CheckOutcome> {
    vec![
        CheckOutcome {
            name: format!("{name}/bound"),
            armed: true,
            passed: s.all_below_bound,
            seed,
            detail: format!("every trial below its triangle bound: {}", s.all_below_bound),
        },
        CheckOutcome {
            name: format!("{name}/linear_in_k"),
            armed: s.armed,
            passed: s.linear_ok,
            seed,
            detail: format!(
                "N={n} K={:?}: slope {:.4} intercept {:.4} R^2 {:.5}, max deviation {:.2}%{}",
                s.rows.iter().map(|r| r.k).collect::<Vec<_>>(),
                s.fit.slope,
                s.fit.intercept,
                s.fit.r2,
                100.0 * s.max_fit_deviation,
                if s.armed { "" } else { " (hypotheses do not hold; informational)" }
            ),
        },
    ]
}

/// `Δ_W` against `K` on the localized block DCT (armed) and on random
/// orthonormal columns (informational).
pub fn white_vs_k(cfg: &EnsembleConfig) -> Result<(Vec<CheckOutcome>, Vec<WhiteRow>), CliError> {
    let seed = sub_seed(cfg.seed, 8);
    let wm = parse_distribution("standard_normal", seed)?;
    let block = sparse_defense::ensemble::localized_block(cfg.white_n);
    let local = sweep_white_vs_k(cfg.white_n, &cfg.white_ks, &wm, EnsembleBasis::BlockDct { block }, cfg.white_trials)?;
    let mut checks = white_outcomes("white/localized", cfg.white_n, seed, &local);
    let mut rows = local.rows;

    let ks: Vec<usize> = cfg.white_ks.iter().copied().filter(|&k| k <= cfg.white_random_n).collect();
    if ks.len() >= 2 {
        let basis = EnsembleBasis::RandomOrthonormal { seed: sub_seed(cfg.seed, 9) };
        let rnd = sweep_white_vs_k(cfg.white_random_n, &ks, &wm, basis, cfg.white_random_trials)?;
        checks.extend(white_outcomes("white/random", cfg.white_random_n, seed, &rnd));
        rows.extend(rnd.rows);
    }
    Ok((checks, rows))
}

pub const SEMIWHITE_RATIO_BAND: (f64, f64) = (0.9, 1.1);

/// `Δ_W` over growing `N` at fixed `ρ`, with the semi-white ratio check.
pub fn white_scaling(cfg: &EnsembleConfig) -> Result<(Vec<CheckOutcome>, Vec<WhiteRow>), CliError> {
    let seed = sub_seed(cfg.seed, 10);
    let wm = parse_distribution("standard_normal", seed)?;
    let rows = sweep_white_scaling(&cfg.scaling_ns, cfg.scaling_rho, &wm, cfg.scaling_trials)?;
    let (lo, hi) = SEMIWHITE_RATIO_BAND;
    let ratio_ok = rows.iter().all(|r| r.semiwhite_ratio >= lo && r.semiwhite_ratio <= hi);
    let bound_ok = rows.iter().all(|r| r.all_below_bound);
    let describe = |f: fn(&WhiteRow) -> f64| {
        rows.iter().map(|r| format!("N={}: {:.4}", r.n, f(r))).collect::<Vec<_>>().join(", ")
    };
    let checks = vec![
        CheckOutcome {
            name: "white/scaling/bound".into(),
            armed: true,
            passed: bound_ok,
            seed,
            detail: format!("every trial below its triangle bound: {bound_ok}"),
        },
        CheckOutcome {
            name: "white/scaling/semiwhite_ratio".into(),
            armed: true,
            passed: ratio_ok,
            seed,
            detail: format!("mean Δ_SW/(Kμ) in [{lo}, {hi}]: {}", describe(|r| r.semiwhite_ratio)),
        },
        CheckOutcome {
            name: "white/scaling/polylog".into(),
            armed: false,
            passed: true,
            seed,
            detail: format!(
                "mean Δ_W/(K ln²N): {}; exceedance of σK ln²N: {}",
                describe(|r| r.polylog_ratio),
                describe(|r| r.polylog_exceed_frac)
            ),
        },
    ];
    Ok((checks, rows))
}

pub fn run_ensemble_suite(cfg: &EnsembleConfig) -> Result<SuiteReport, CliError> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for dist in &cfg.distributions {
        let (c, r) = semiwhite(cfg, dist)?;
        log::info!("{}: {}", c.name, c.detail);
        checks.push(c);
        rows.push(r);
    }
    for &(n, k) in &cfg.moments_sizes {
        let (c, r) = moments(cfg, n, k, "standard_normal")?;
        log::info!("{}: {}", c.name, c.detail);
        checks.push(c);
        rows.push(r);
    }
    checks.push(white_bound(cfg)?);
    for column in [CltColumn::RandomOrthonormal, CltColumn::Identity] {
        let (c, r) = clt(cfg, column)?;
        checks.push(c);
        rows.push(r);
    }
    let (c, mut white_rows) = white_vs_k(cfg)?;
    checks.extend(c);
    let (c, scaling_rows) = white_scaling(cfg)?;
    checks.extend(c);
    white_rows.extend(scaling_rows);
    Ok(SuiteReport { checks, rows, white_rows })
}

pub fn write_suite(report: &SuiteReport, cfg: &EnsembleConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(out_dir)?;
    let stats = out_dir.join("ensemble.csv");
    write_csv(&stats, &report.rows)?;
    let white = out_dir.join("ensemble_white.csv");
    write_csv(&white, &report.white_rows)?;
    let checks = out_dir.join("ensemble_checks.csv");
    write_csv(&checks, &report.checks)?;
    let outputs = vec![stats, white, checks];
    let manifest = write_manifest(out_dir, "ensemble", cfg, outputs.clone(), &report.checks)?;
    Ok(outputs.into_iter().chain([manifest]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EnsembleConfig {
        EnsembleConfig {
            semiwhite_n: 32,
            semiwhite_k: 8,
            semiwhite_trials: 400,
            moments_sizes: vec![(32, 4)],
            moments_trials: 400,
            bound_instances: 500,
            clt_n: 256,
            clt_trials: 500,
            white_n: 256,
            white_ks: vec![2, 4, 8, 16],
            white_trials: 100,
            white_random_n: 64,
            white_random_trials: 50,
            scaling_ns: vec![256, 512],
            scaling_trials: 200,
            distributions: vec!["standard_normal".into()],
            ..Default::default()
        }
    }

    #[test]
    fn distribution_names() {
        assert_eq!(parse_distribution("rademacher", 1).unwrap().mu(), 1.0);
        assert!(parse_distribution("cauchy", 1).is_err());
    }

    #[test]
    fn small_suite_runs_and_is_reproducible() {
        let cfg = small();
        let a = run_ensemble_suite(&cfg).unwrap();
        let b = run_ensemble_suite(&cfg).unwrap();
        assert_eq!(a, b);
        let bound = a.checks.iter().find(|c| c.name == "white_bound").unwrap();
        assert!(bound.passed);
        let identity = a.checks.iter().find(|c| c.name == "clt/identity_column").unwrap();
        assert!(!identity.armed);
        assert!(!a.white_rows.is_empty());
    }

    #[test]
    fn outputs_are_written() {
        let mut cfg = small();
        cfg.semiwhite_trials = 50;
        cfg.moments_trials = 50;
        let report = run_ensemble_suite(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_suite(&report, &cfg, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        assert!(files.iter().all(|f| f.exists()));
    }
}
