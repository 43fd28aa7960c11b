use excursion_core::ou_variance::*;
use excursion_core::percolation::{EventSpec, Rect};
use excursion_core::{GridSpec, StationaryKernel};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Var(min(X, Y)) for independent standard normals, by quadrature of the
/// density 2 phi(x) (1 - Phi(x)).
fn var_min_oracle() -> f64 {
    let nd = Normal::new(0.0, 1.0).unwrap();
    let dens = |x: f64| 2.0 * nd.pdf(x) * (1.0 - nd.cdf(x));
    let m1 = simpson(|x| x * dens(x), -12.0, 12.0, 20_000);
    let m2 = simpson(|x| x * x * dens(x), -12.0, 12.0, 20_000);
    m2 - m1 * m1
}

#[test]
fn var_min_oracle_matches_closed_form() {
    assert!((var_min_oracle() - (1.0 - 1.0 / std::f64::consts::PI)).abs() < 1e-9);
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    for n in [1, 2, 5, 16, 32] {
        let (x, w) = gauss_legendre_unit(n).unwrap();
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x.iter().all(|v| *v > 0.0 && *v < 1.0));
        for k in 0..2 * n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k}");
        }
    }
    assert!(gauss_legendre_unit(0).is_err());
}

fn one_cell() -> (StationaryKernel, GridSpec, EventSpec) {
    (StationaryKernel::gaussian(1.0), GridSpec::square(1, 1.0).unwrap(), EventSpec::left_right(Rect::square(0, 0, 1)))
}

#[test]
fn single_cell_formula_is_exact() {
    let (k, g, e) = one_cell();
    let r = variance_formula_rhs(&k, &g, &e, 50, 16, 1, Some(1)).unwrap();
    assert!((r.estimate - 1.0).abs() < 1e-13);
    assert!(r.stderr < 1e-13);
    let v = empirical_variance_t(&k, &g, &e, 20_000, 2, Some(1)).unwrap();
    assert!((v.estimate - 1.0).abs() < 3.0 * v.stderr, "{v:?}");
}

#[test]
fn exponential_weight_on_single_cell() {
    // T = -f(cell) is standard normal; Var(exp(T/2)) = e^{1/2} - e^{1/4}.
    let (k, g, e) = one_cell();
    let w = VarianceWeight::Exponential { theta: 1.0 };
    let exact = 0.5f64.exp() - 0.25f64.exp();
    let rhs = variance_formula_rhs_h(&k, &g, &e, 20_000, 16, 3, Some(1), w, PairDesign::Shared).unwrap();
    assert!((rhs.estimate - exact).abs() < 3.0 * rhs.stderr, "{rhs:?} vs {exact}");
    let emp = empirical_variance_h(&k, &g, &e, 50_000, 4, Some(1), w).unwrap();
    assert!((emp.estimate - exact).abs() < 3.0 * emp.stderr, "{emp:?} vs {exact}");
}

#[test]
fn two_cell_strip_matches_var_min() {
    let k = StationaryKernel::white(1.0);
    let g = GridSpec::new(2, 1, 1.0).unwrap();
    let e = EventSpec::left_right(Rect::new(0, 0, 2, 1));
    let oracle = var_min_oracle();
    let rhs = variance_formula_rhs(&k, &g, &e, 5_000, 16, 5, Some(1)).unwrap();
    assert!((rhs.estimate - oracle).abs() < 3.0 * rhs.stderr, "{rhs:?} vs {oracle}");
    let emp = empirical_variance_t(&k, &g, &e, 50_000, 6, Some(1)).unwrap();
    assert!((emp.estimate - oracle).abs() < 3.0 * emp.stderr, "{emp:?} vs {oracle}");
}

#[test]
fn halves_agree_and_node_doubling_is_stable() {
    let k = StationaryKernel::gaussian(1.0);
    let g = GridSpec::square(6, 1.0).unwrap();
    let e = EventSpec::left_right(Rect::square(0, 0, 6));
    let a = variance_formula_rhs_h(&k, &g, &e, 4_000, 16, 7, Some(1), VarianceWeight::Identity, PairDesign::Shared)
        .unwrap();
    let b = variance_formula_rhs_h(&k, &g, &e, 4_000, 32, 7, Some(1), VarianceWeight::Identity, PairDesign::Shared)
        .unwrap();
    assert!((a.estimate - b.estimate).abs() < a.stderr, "{a:?} {b:?}");
    let h1: f64 = a.metadata["first_half"].parse().unwrap();
    let h2: f64 = a.metadata["second_half"].parse().unwrap();
    assert!((h1 - h2).abs() < 3.0 * a.stderr * 2.0, "{h1} {h2}");
}

#[test]
fn deloc_single_cell_and_monotone() {
    let g = GridSpec::square(1, 1.0).unwrap();
    let d = deloc_profile(&g, &[0; 100], &[0.5, 1.0, 3.0]).unwrap();
    assert_eq!(d.sigma, vec![1.0; 3]);
    assert!(deloc_profile(&g, &[0; 99], &[1.0]).is_err());
    let g = GridSpec::square(10, 1.0).unwrap();
    let locs: Vec<usize> = (0..500).map(|i| (i * 37) % 100).collect();
    let d = deloc_profile(&g, &locs, &[0.5, 1.0, 1.5, 3.0, 4.5]).unwrap();
    assert!(d.sigma.windows(2).all(|w| w[0] <= w[1]));
    // sigma(3r) <= 16 sigma(r)
    assert!(d.sigma[3] <= 16.0 * d.sigma[1]);
    assert!(d.sigma[4] <= 16.0 * d.sigma[2]);
}

#[test]
fn bound_report_arithmetic() {
    assert_eq!(m_bar(0.5, (-1.0f64).exp()), 1.0);
    assert!((m_bar(1e-6, 1e-4) - 1.0 / 1e4f64.ln()).abs() < 1e-15);
    assert!((m_bar(1e-6, 1e-4) - 0.108_573_620_475_812_9).abs() < 1e-12);
    // (1e-4)^3 * 10^-4 / ln(1e4)^2
    let want = 1e-16 / (4.0 * 10f64.ln()).powi(2);
    assert!((m_lower(1e-4, 10.0) / want - 1.0).abs() < 1e-12);
    assert!((m_lower(1e-4, 10.0) - 1.18e-18).abs() < 0.01e-18);

    let g = GridSpec::square(4, 1.0).unwrap();
    let d = deloc_profile(&g, &[0; 100], &[1.0, 2.0]).unwrap();
    let rep = bound_report(&StationaryKernel::gaussian(1.0), &d, 0.3, &[1.0]).unwrap();
    assert_eq!(rep.degenerate, vec![true]);
    assert!(rep.m_bar[0].is_nan() && rep.ratio.is_nan());
    assert!(bound_report(&StationaryKernel::gaussian(1.0), &d, 0.3, &[1.5]).is_err());
}

#[test]
fn tanh_bound_values() {
    for alpha in [0.999, 0.9, (-1.0f64).exp(), 0.1, 0.01, 1e-6] {
        let b = tanh_bound_check(alpha).unwrap();
        // Independent oracle: Simpson in t on [0, 60].
        let la = alpha.ln();
        let oracle = simpson(|t| (la * (t / 2.0).tanh()).exp() * (-t).exp(), 0.0, 60.0, 600_000);
        assert!((b.lhs - oracle).abs() < 1e-8, "alpha={alpha} {} vs {oracle}", b.lhs);
        assert!(b.error < 1e-8);
        assert!(b.holds && b.lhs <= b.rhs);
    }
    assert_eq!(tanh_bound_check((-1.0f64).exp()).unwrap().rhs, 2.0);
    assert!((tanh_bound_check(0.01).unwrap().rhs - 0.434_294_481_903_251_8).abs() < 1e-12);
    assert!(tanh_bound_check(1.0).is_err() && tanh_bound_check(0.0).is_err());
}

#[test]
fn tail_profile_cases() {
    let t = tail_profile(&[0.3; 1000], &[0.1, 1.0]).unwrap();
    assert_eq!(t.exceedance, vec![0.0, 0.0]);
    assert!(t.rate.is_none());
    assert!(tail_profile(&[0.0; 999], &[1.0]).is_err());

    let (k, g, e) = one_cell();
    let sampler = excursion_core::field::ExactSampler::new(&k, &g).unwrap();
    let ts: Vec<f64> = sample_thresholds(&sampler, &e, 20_000, 11, Some(1)).unwrap().iter().map(|r| r.t).collect();
    let tp = tail_profile(&ts, &[1.96]).unwrap();
    let se = (0.05f64 * 0.95 / 20_000.0).sqrt();
    assert!((tp.exceedance[0] - 0.05).abs() < 3.0 * se, "{:?}", tp.exceedance);
    assert!(tp.wilson[0].0 <= tp.exceedance[0] && tp.exceedance[0] <= tp.wilson[0].1);
}

#[test]
fn hypercontractivity_extremes() {
    let k = StationaryKernel::gaussian(1.0);
    let g = GridSpec::square(6, 1.0).unwrap();
    let e = EventSpec::left_right(Rect::square(0, 0, 6));
    let part = CellPartition::blocks(&g, 2).unwrap();
    assert_eq!(part.members.len(), 9);
    let r0 = hypercontractivity_check(&k, &g, &e, &part, 0.0, 2_000, 3, Some(1)).unwrap();
    assert_eq!(r0.violations, 0);
    for c in &r0.cells {
        assert!((c.lhs - c.rhs).abs() < 1e-12);
    }
    let rinf = hypercontractivity_check(&k, &g, &e, &part, f64::INFINITY, 5_000, 4, Some(1)).unwrap();
    assert_eq!(rinf.violations, 0);
    let rl = hypercontractivity_check(&k, &g, &e, &part, 2f64.ln(), 5_000, 5, Some(1)).unwrap();
    assert_eq!(rl.violations, 0);
}

#[test]
fn mirror_and_angular_helpers() {
    let g = GridSpec::square(4, 1.0).unwrap();
    let counts: Vec<usize> = (0..16).map(|i| [3, 5, 5, 3][i % 4]).collect();
    assert_eq!(mirror_symmetry_test(&g, &counts, true).0, 0.0);
    assert!(mirror_symmetry_test(&g, &counts, false).1 > 0.99);
    let h = angular_histogram(&g, &[g.index(3, 2), g.index(0, 2), g.index(0, 1), g.index(3, 1)], (2.0, 2.0), 4);
    assert_eq!(h, vec![1, 1, 1, 1]);
}
