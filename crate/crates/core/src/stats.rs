//! Sample statistics used by the Monte-Carlo checks.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Asymptotic Kolmogorov–Smirnov critical coefficient at the 1% level.
pub const KS_COEFF_1PCT: f64 = 1.6276;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// `sqrt(var / n)`.
    pub std_err: f64,
    /// Standard error of `var`, from the fourth central moment.
    pub var_std_err: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 2, "need at least two samples");
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), &x| {
            let d = (x - mean) * (x - mean);
            (a + d, b + d * d)
        });
        let var = m2 / (nf - 1.0);
        let m4 = m4 / nf;
        let pop_var = m2 / nf;
        let var_std_err = ((m4 - pop_var * pop_var).max(0.0) / nf).sqrt();
        Self { n, mean, var, std_err: (var / nf).sqrt(), var_std_err }
    }
}

/// `sup_x |F_n(x) − F(x)|` for the empirical CDF of `xs`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_critical_1pct(n: usize) -> f64 {
    KS_COEFF_1PCT / (n as f64).sqrt()
}

pub fn normal_cdf(x: f64, sd: f64) -> f64 {
    Normal::new(0.0, sd).expect("positive sd").cdf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares `y ≈ slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_known_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.var - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.std_err - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_line_fits_perfectly() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_uniform_grid() {
        // midpoints of n cells: D = 1/(2n) against U(0,1)
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
        assert!((ks_critical_1pct(5000) - 0.02302).abs() < 1e-4);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_984_540_054, 1.0) - 0.975).abs() < 1e-9);
        assert!((normal_cdf(2.0, 2.0) - normal_cdf(1.0, 1.0)).abs() < 1e-15);
    }
}
