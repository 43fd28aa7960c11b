//! Ornstein-Uhlenbeck machinery around the threshold variance: the covariance
//! representation of Var(T), delocalisation of the threshold location,
//! hypercontractivity and tail profiles.

use std::time::Instant;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{ou_partner, ExactSampler, FieldSample};
use crate::grid::GridSpec;
use crate::kernel::StationaryKernel;
use crate::montecarlo::try_run_replicates;
use crate::percolation::EventSpec;
use crate::rng::{derive_seed, tag};
use crate::stats::{mean_se, variance_jackknife, wilson_interval, EstimatorReport, Z95};
use crate::threshold::{threshold_sweep, ThresholdResult};

/// Gauss-Legendre nodes and weights on `(0, 1)`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre_unit(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(invalid("quadrature needs at least one node"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] to [0, 1].
        nodes[i] = (1.0 - x) / 2.0;
        nodes[n - 1 - i] = (1.0 + x) / 2.0;
        weights[i] = w / 2.0;
        weights[n - 1 - i] = w / 2.0;
    }
    Ok((nodes, weights))
}

/// The function `h` in Var(h(T)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum VarianceWeight {
    /// `h(t) = t`.
    Identity,
    /// `h(t) = exp(theta t / 2)`.
    Exponential { theta: f64 },
}

impl VarianceWeight {
    pub fn h(&self, t: f64) -> f64 {
        match *self {
            Self::Identity => t,
            Self::Exponential { theta } => (theta * t / 2.0).exp(),
        }
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::Exponential { theta } => theta / 2.0 * (theta * t / 2.0).exp(),
        }
    }
}

fn kernel_between(kernel: &StationaryKernel, grid: &GridSpec, a: &ThresholdResult, b: &ThresholdResult) -> f64 {
    let d = grid.displacement(a.cell(), b.cell());
    kernel.radial(d.0.hypot(d.1))
}

/// How `(f, f~)` pairs are allocated to quadrature nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum PairDesign {
    /// Each node draws its own `n_pairs` pairs.
    #[default]
    Independent,
    /// The same `n_pairs` pairs are evaluated at every node; estimates for
    /// different node counts then share their randomness.
    Shared,
}

/// Covariance-formula estimate of Var(T) for `h(t) = t`.
pub fn variance_formula_rhs(
    kernel: &StationaryKernel,
    grid: &GridSpec,
    e: &EventSpec,
    n_pairs: usize,
    quad_nodes: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<EstimatorReport> {
    let w = VarianceWeight::Identity;
    variance_formula_rhs_h(kernel, grid, e, n_pairs, quad_nodes, master_seed, workers, w, PairDesign::Independent)
}

/// Covariance-formula estimate of Var(h(T)):
/// `int_0^1 E[kappa(S - S_s) h'(T) h'(T_s)] ds` with `f_s = s f + sqrt(1 - s^2) f~`.
///
/// With [`PairDesign::Independent`] node errors are independent and combine
/// in quadrature; with [`PairDesign::Shared`] the error is that of the
/// per-pair weighted sums.
#[allow(clippy::too_many_arguments)]
pub fn variance_formula_rhs_h(
    kernel: &StationaryKernel,
    grid: &GridSpec,
    e: &EventSpec,
    n_pairs: usize,
    quad_nodes: usize,
    master_seed: u64,
    workers: Option<usize>,
    weight: VarianceWeight,
    design: PairDesign,
) -> Result<EstimatorReport> {
    let started = Instant::now();
    if n_pairs < 2 {
        return Err(invalid("variance formula needs at least two pairs per node"));
    }
    e.check_within(grid.nx, grid.ny)?;
    let sampler = ExactSampler::new(kernel, grid)?;
    let (nodes, weights) = gauss_legendre_unit(quad_nodes)?;
    let term = |f: &FieldSample, a: &ThresholdResult, fresh: &FieldSample, s: f64| {
        let fs = ou_partner(f, fresh, s)?;
        let b = threshold_sweep(&fs, e)?;
        Ok::<f64, Error>(kernel_between(kernel, grid, a, &b) * weight.h_prime(a.t) * weight.h_prime(b.t))
    };
    let draw = |i: u64| {
        let f = sampler.sample(derive_seed(master_seed, i, tag::FIELD));
        let fresh = sampler.sample(derive_seed(master_seed, i, tag::FRESH));
        let a = threshold_sweep(&f, e)?;
        Ok::<_, Error>((f, fresh, a))
    };
    let mid = n_pairs / 2;
    let (est, se, halves) = match design {
        PairDesign::Independent => {
            let ys = try_run_replicates(n_pairs * quad_nodes, workers, |i| {
                let (f, fresh, a) = draw(i)?;
                term(&f, &a, &fresh, nodes[i as usize / n_pairs])
            })?;
            let (mut est, mut var, mut halves) = (0.0, 0.0, [0.0; 2]);
            for (q, chunk) in ys.chunks(n_pairs).enumerate() {
                let (m, se) = mean_se(chunk);
                est += weights[q] * m;
                var += (weights[q] * se).powi(2);
                halves[0] += weights[q] * mean_se(&chunk[..mid]).0;
                halves[1] += weights[q] * mean_se(&chunk[mid..]).0;
            }
            (est, var.sqrt(), halves)
        }
        PairDesign::Shared => {
            let ys = try_run_replicates(n_pairs, workers, |i| {
                let (f, fresh, a) = draw(i)?;
                let mut y = 0.0;
                for (s, w) in nodes.iter().zip(&weights) {
                    y += w * term(&f, &a, &fresh, *s)?;
                }
                Ok(y)
            })?;
            let (m, se) = mean_se(&ys);
            (m, se, [mean_se(&ys[..mid]).0, mean_se(&ys[mid..]).0])
        }
    };
    Ok(EstimatorReport::new(est, se, n_pairs * quad_nodes, master_seed)
        .with_meta("quad_nodes", quad_nodes)
        .with_meta("design", format!("{design:?}").to_lowercase())
        .with_meta("first_half", crate::stats::fmt_sig(halves[0]))
        .with_meta("second_half", crate::stats::fmt_sig(halves[1]))
        .timed(started))
}

/// Threshold heights of `n` independent exact samples.
pub fn sample_thresholds(
    sampler: &ExactSampler,
    e: &EventSpec,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<ThresholdResult>> {
    try_run_replicates(n, workers, |i| threshold_sweep(&sampler.sample(derive_seed(master_seed, i, tag::FIELD)), e))
}

/// Sample variance of T over `n` independent fields, jackknife standard error.
pub fn empirical_variance_t(
    kernel: &StationaryKernel,
    grid: &GridSpec,
    e: &EventSpec,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<EstimatorReport> {
    empirical_variance_h(kernel, grid, e, n, master_seed, workers, VarianceWeight::Identity)
}

/// Sample variance of h(T) with jackknife standard error.
pub fn empirical_variance_h(
    kernel: &StationaryKernel,
    grid: &GridSpec,
    e: &EventSpec,
    n: usize,
    master_seed: u64,
    workers: Option<usize>,
    weight: VarianceWeight,
) -> Result<EstimatorReport> {
    let started = Instant::now();
    if n < 2 {
        return Err(invalid("empirical variance needs n >= 2"));
    }
    e.check_within(grid.nx, grid.ny)?;
    let sampler = ExactSampler::new(kernel, grid)?;
    let ts: Vec<f64> =
        sample_thresholds(&sampler, e, n, master_seed, workers)?.iter().map(|r| weight.h(r.t)).collect();
    let (v, se) = variance_jackknife(&ts);
    Ok(EstimatorReport::new(v, se, n, master_seed).timed(started))
}

/// Empirical delocalisation profile of the threshold location.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelocProfile {
    pub grid: GridSpec,
    /// Ball radii in field units, ascending.
    pub radii: Vec<f64>,
    /// Largest hit frequency of a ball of each radius centred at a cell centre.
    pub sigma: Vec<f64>,
    /// Hit counts of the threshold location per grid cell.
    pub counts: Vec<usize>,
    pub n: usize,
}

pub fn hit_counts(grid: &GridSpec, locations: &[usize]) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; grid.len()];
    for &s in locations {
        *counts.get_mut(s).ok_or_else(|| Error::OutOfBounds(format!("location {s} outside grid")))? += 1;
    }
    Ok(counts)
}

/// sigma(r) = max over cell centres x of the fraction of samples in B_x(r).
pub fn deloc_profile(grid: &GridSpec, locations: &[usize], radii: &[f64]) -> Result<DelocProfile> {
    if locations.len() < 100 {
        return Err(invalid("delocalisation profile needs at least 100 samples"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("radii must be positive and strictly ascending"));
    }
    let counts = hit_counts(grid, locations)?;
    let hits: Vec<usize> = (0..grid.len()).filter(|&i| counts[i] > 0).collect();
    let n = locations.len();
    let sigma = radii
        .iter()
        .map(|&r| {
            let best = (0..grid.len())
                .map(|x| {
                    hits.iter()
                        .filter(|&&j| {
                            let d = grid.displacement(x, j);
                            d.0.hypot(d.1) <= r * (1.0 + 1e-12)
                        })
                        .map(|&j| counts[j])
                        .sum::<usize>()
                })
                .max()
                .unwrap_or(0);
            best as f64 / n as f64
        })
        .collect();
    Ok(DelocProfile { grid: *grid, radii: radii.to_vec(), sigma, counts, n })
}

/// Chi-square test that hit counts are symmetric under the reflection
/// `col -> nx - 1 - col` (or rows when `vertical_axis` is false).
pub fn mirror_symmetry_test(grid: &GridSpec, counts: &[usize], vertical_axis: bool) -> (f64, f64) {
    let mut pairs = Vec::new();
    for row in 0..grid.ny {
        for col in 0..grid.nx {
            let (mc, mr) = if vertical_axis { (grid.nx - 1 - col, row) } else { (col, grid.ny - 1 - row) };
            let (i, j) = (grid.index(col, row), grid.index(mc, mr));
            if i < j {
                pairs.push((counts[i], counts[j]));
            }
        }
    }
    crate::stats::chi_square_paired(&pairs)
}

/// Histogram of threshold locations over `sectors` equal angular sectors
/// about `center` (grid units, sector 0 starting on the positive x-axis).
pub fn angular_histogram(grid: &GridSpec, locations: &[usize], center: (f64, f64), sectors: usize) -> Vec<usize> {
    let mut hist = vec![0usize; sectors];
    let tau = std::f64::consts::TAU;
    for &s in locations {
        let (c, r) = grid.coords(s);
        let theta = (r as f64 + 0.5 - center.1).atan2(c as f64 + 0.5 - center.0).rem_euclid(tau);
        hist[((theta / tau * sectors as f64) as usize).min(sectors - 1)] += 1;
    }
    hist
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub r_grid: Vec<f64>,
    /// max{kappa_bar(r), 1/|ln sigma(r)|}; NaN where sigma is degenerate.
    pub m_bar: Vec<f64>,
    /// sigma^3 r^-4 max{ln r, |ln sigma|}^-2; NaN where sigma is degenerate.
    pub m_lower: Vec<f64>,
    /// Radii where sigma is 0 or 1.
    pub degenerate: Vec<bool>,
    pub var_hat: f64,
    /// var_hat / min over non-degenerate radii of m_bar.
    pub ratio: f64,
}

pub fn m_bar(kappa_bar: f64, sigma: f64) -> f64 {
    kappa_bar.max(1.0 / sigma.ln().abs())
}

pub fn m_lower(sigma: f64, r: f64) -> f64 {
    sigma.powi(3) * r.powi(-4) * r.ln().max(sigma.ln().abs()).powi(-2)
}

/// Tabulates the upper and lower bound functionals on `r_grid`; each radius
/// must be one of the profile's radii.
pub fn bound_report(kernel: &StationaryKernel, deloc: &DelocProfile, var_hat: f64, r_grid: &[f64]) -> Result<BoundReport> {
    let g = deloc.grid;
    let search = ((g.nx * g.nx + g.ny * g.ny) as f64).sqrt() * g.spacing;
    let mut out = BoundReport {
        r_grid: r_grid.to_vec(),
        m_bar: vec![],
        m_lower: vec![],
        degenerate: vec![],
        var_hat,
        ratio: f64::NAN,
    };
    for &r in r_grid {
        let k = deloc
            .radii
            .iter()
            .position(|x| (x - r).abs() <= 1e-12 * r.max(1.0))
            .ok_or_else(|| invalid(format!("radius {r} not in the delocalisation profile")))?;
        let sigma = deloc.sigma[k];
        let degenerate = !(sigma > 0.0 && sigma < 1.0);
        out.degenerate.push(degenerate);
        if degenerate {
            out.m_bar.push(f64::NAN);
            out.m_lower.push(f64::NAN);
        } else {
            let kb = kernel.kappa_bar(r, search.max(r), g.spacing / 4.0)?;
            out.m_bar.push(m_bar(kb, sigma));
            out.m_lower.push(m_lower(sigma, r));
        }
    }
    let inf = out.m_bar.iter().filter(|v| v.is_finite()).fold(f64::INFINITY, |a, &b| a.min(b));
    if inf.is_finite() {
        out.ratio = var_hat / inf;
    }
    Ok(out)
}

/// Enlarged super-cells: `b x b` blocks, each grown by its eight neighbouring
/// blocks (clipped to the grid).
#[derive(Clone, Debug, PartialEq)]
pub struct CellPartition {
    pub block: usize,
    /// For each enlarged cell, membership by grid index.
    pub members: Vec<Vec<bool>>,
}

impl CellPartition {
    pub fn blocks(grid: &GridSpec, block: usize) -> Result<Self> {
        if block == 0 {
            return Err(invalid("block size must be positive"));
        }
        let (bx, by) = (grid.nx.div_ceil(block), grid.ny.div_ceil(block));
        let mut members = Vec::with_capacity(bx * by);
        for j in 0..by {
            for i in 0..bx {
                let m = (0..grid.len())
                    .map(|k| {
                        let (c, r) = grid.coords(k);
                        (c / block).abs_diff(i) <= 1 && (r / block).abs_diff(j) <= 1
                    })
                    .collect();
                members.push(m);
            }
        }
        Ok(Self { block, members })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperCell {
    /// P[S(f) in C', S(f_t) in C'].
    pub lhs: f64,
    pub lhs_se: f64,
    /// P[S(f) in C']^(2 / (1 + e^-t)).
    pub rhs: f64,
    pub rhs_se: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypercontractivityReport {
    pub t: f64,
    pub n_pairs: usize,
    pub cells: Vec<HyperCell>,
    pub violations: usize,
}

/// Checks `P[S in C', S_t in C'] <= P[S in C']^(2/p(t))`, `p(t) = 1 + e^-t`,
/// per enlarged cell. A cell is violated when the left side exceeds the right
/// by more than three combined standard errors. `t = inf` is allowed.
#[allow(clippy::too_many_arguments)]
pub fn hypercontractivity_check(
    kernel: &StationaryKernel,
    grid: &GridSpec,
    e: &EventSpec,
    partition: &CellPartition,
    t: f64,
    n_pairs: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<HypercontractivityReport> {
    if !(t >= 0.0) {
        return Err(invalid("t must be non-negative"));
    }
    if n_pairs < 2 {
        return Err(invalid("need at least two pairs"));
    }
    if partition.members.iter().any(|m| m.len() != grid.len()) {
        return Err(Error::GridMismatch("partition does not match grid".into()));
    }
    let s = (-t).exp();
    let sampler = ExactSampler::new(kernel, grid)?;
    let locs = try_run_replicates(n_pairs, workers, |i| {
        let f = sampler.sample(derive_seed(master_seed, i, tag::FIELD));
        let fresh = sampler.sample(derive_seed(master_seed, i, tag::FRESH));
        let ft = ou_partner(&f, &fresh, s)?;
        Ok((threshold_sweep(&f, e)?.cell(), threshold_sweep(&ft, e)?.cell()))
    })?;
    let a = 2.0 / (1.0 + s);
    let nf = n_pairs as f64;
    let cells: Vec<HyperCell> = partition
        .members
        .iter()
        .map(|m| {
            let single = locs.iter().filter(|(x, _)| m[*x]).count();
            let both = locs.iter().filter(|(x, y)| m[*x] && m[*y]).count();
            let (p, p_se) = crate::stats::proportion(single, n_pairs);
            let (lhs, lhs_se) = crate::stats::proportion(both, n_pairs);
            let rhs = p.powf(a);
            let rhs_se = if p > 0.0 { a * p.powf(a - 1.0) * p_se } else { 0.0 };
            // With zero variance estimates fall back to one binomial count.
            let combined = (lhs_se.powi(2) + rhs_se.powi(2)).sqrt().max(1.0 / nf);
            HyperCell { lhs, lhs_se, rhs, rhs_se, violated: lhs - rhs > 3.0 * combined }
        })
        .collect();
    let violations = cells.iter().filter(|c| c.violated).count();
    Ok(HypercontractivityReport { t, n_pairs, cells, violations })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TanhBound {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Estimated absolute quadrature error of `lhs`.
    pub error: f64,
    pub holds: bool,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> (f64, f64) {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return (left + right + delta / 15.0, delta.abs() / 15.0);
        }
        let (l, le) = step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1);
        let (r, re) = step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
        (l + r, le + re)
    }
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `int_0^inf alpha^tanh(t/2) e^-t dt` against `2 / |ln alpha|`, with the
/// integral taken in `u = e^-t` as `int_0^1 alpha^((1-u)/(1+u)) du`.
pub fn tanh_bound_check(alpha: f64) -> Result<TanhBound> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha={alpha} outside (0, 1)")));
    }
    let la = alpha.ln();
    let (lhs, error) = adaptive_simpson(&|u| (la * (1.0 - u) / (1.0 + u)).exp(), 0.0, 1.0, 1e-11);
    let rhs = 2.0 / la.abs();
    Ok(TanhBound { alpha, lhs, rhs, error, holds: lhs <= rhs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailProfile {
    pub thresholds: Vec<f64>,
    pub mean: f64,
    pub exceedance: Vec<f64>,
    pub counts: Vec<usize>,
    pub wilson: Vec<(f64, f64)>,
    /// Least-squares `lambda` in `P[|T - mean| >= t] ~ exp(-lambda t)` over
    /// thresholds with positive exceedance; `None` if there are none.
    pub rate: Option<f64>,
    pub n: usize,
}

pub fn tail_profile(samples: &[f64], thresholds: &[f64]) -> Result<TailProfile> {
    if samples.len() < 1000 {
        return Err(invalid("tail profile needs at least 1000 samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("threshold samples".into()));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let counts: Vec<usize> =
        thresholds.iter().map(|&t| samples.iter().filter(|x| (*x - mean).abs() >= t).count()).collect();
    let exceedance = counts.iter().map(|&c| c as f64 / n as f64).collect::<Vec<_>>();
    let wilson = counts.iter().map(|&c| wilson_interval(c, n, Z95)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &p) in thresholds.iter().zip(&exceedance) {
        if t > 0.0 && p > 0.0 {
            num += t * -p.ln();
            den += t * t;
        }
    }
    let rate = (den > 0.0).then(|| num / den);
    Ok(TailProfile { thresholds: thresholds.to_vec(), mean, exceedance, counts, wilson, rate, n })
}
