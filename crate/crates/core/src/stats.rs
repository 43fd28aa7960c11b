//! Monte Carlo summaries shared by the estimators.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
    pub wall_time: f64,
    pub metadata: BTreeMap<String, String>,
}

impl EstimatorReport {
    pub fn new(estimate: f64, stderr: f64, n: usize, seed: u64) -> Self {
        Self { estimate, stderr: stderr.max(0.0), n: n.max(1), seed, wall_time: 0.0, metadata: BTreeMap::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn timed(mut self, started: std::time::Instant) -> Self {
        self.wall_time = started.elapsed().as_secs_f64();
        self
    }

    /// `estimate -/+ z * stderr`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.estimate - z * self.stderr, self.estimate + z * self.stderr)
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, (v / n as f64).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Sample variance with its delete-one jackknife standard error, computed in
/// closed form from the leave-one-out moments.
pub fn variance_jackknife(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "variance needs at least two samples");
    let nf = n as f64;
    let m = xs.iter().sum::<f64>() / nf;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let var = ss / (nf - 1.0);
    if n < 3 {
        return (var, 0.0);
    }
    // Leave-one-out: ss_i = ss - n/(n-1) (x_i - m)^2, var_i = ss_i / (n-2).
    let loo: Vec<f64> = xs.iter().map(|x| (ss - nf / (nf - 1.0) * (x - m).powi(2)) / (nf - 2.0)).collect();
    let lm = loo.iter().sum::<f64>() / nf;
    let jk = ((nf - 1.0) / nf * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
    (var, jk)
}

/// Binomial proportion with standard error `sqrt(p(1-p)/n)`.
pub fn proportion(successes: usize, n: usize) -> (f64, f64) {
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Pearson chi-square test of `counts` against equal cell probabilities.
/// Returns `(statistic, p_value)`.
pub fn chi_square_uniform(counts: &[usize]) -> (f64, f64) {
    let k = counts.len();
    let total: usize = counts.iter().sum();
    let expected = total as f64 / k as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (stat, chi_square_sf(stat, (k - 1) as f64))
}

/// Chi-square test that paired counts come from equal probabilities:
/// `sum (a - b)^2 / (a + b)` over pairs with `a + b > 0`.
pub fn chi_square_paired(pairs: &[(usize, usize)]) -> (f64, f64) {
    let mut stat = 0.0;
    let mut dof = 0usize;
    for &(a, b) in pairs {
        if a + b > 0 {
            stat += (a as f64 - b as f64).powi(2) / (a + b) as f64;
            dof += 1;
        }
    }
    if dof == 0 {
        return (0.0, 1.0);
    }
    (stat, chi_square_sf(stat, dof as f64))
}

fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).map(|d| 1.0 - d.cdf(stat)).unwrap_or(f64::NAN)
}

/// Rounds to 12 significant digits and formats without trailing noise, so
/// outputs are byte-stable.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.11e}", x);
    let v: f64 = s.parse().unwrap();
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_matches_brute_force() {
        let xs = [0.3, -1.2, 2.5, 0.0, 1.1, -0.4, 0.9];
        let (v, se) = variance_jackknife(&xs);
        assert!((v - sample_variance(&xs)).abs() < 1e-14);
        let n = xs.len() as f64;
        let loo: Vec<f64> = (0..xs.len())
            .map(|i| {
                let rest: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
                sample_variance(&rest)
            })
            .collect();
        let lm = loo.iter().sum::<f64>() / n;
        let brute = ((n - 1.0) / n * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
        assert!((se - brute).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 50, Z95);
        assert!(lo.abs() < 1e-12);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn chi_square_uniform_extremes() {
        let (s, p) = chi_square_uniform(&[100, 100, 100, 100]);
        assert_eq!(s, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = chi_square_uniform(&[400, 0, 0, 0]);
        assert!(p < 1e-10);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5e-7), "-0.00000025");
        assert_eq!(fmt_sig(123456789012345.0), "123456789012000");
    }
}
