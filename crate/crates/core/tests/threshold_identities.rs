use excursion_core::percolation::{EventSpec, Rect};
use excursion_core::threshold::{threshold_sweep, ThresholdResult};
use excursion_core::{FieldSample, GridSpec};
use proptest::prelude::*;

fn field(n: usize, values: Vec<f64>) -> FieldSample {
    FieldSample::from_values(GridSpec::square(n, 1.0).unwrap(), values).unwrap()
}

fn events(n: i64) -> Vec<EventSpec> {
    vec![
        EventSpec::left_right(Rect::square(0, 0, n)),
        EventSpec::cross_arc(n, 1, n - 2).unwrap(),
        EventSpec::annulus((n as f64 / 2.0, n as f64 / 2.0), 0.9, n as f64 / 2.0 - 0.6),
    ]
}

fn sweep(f: &FieldSample, e: &EventSpec) -> ThresholdResult {
    threshold_sweep(f, e).unwrap()
}

const N: usize = 6;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shift_equivariance(v in prop::collection::vec(-3.0..3.0f64, N * N), c in -2.0..2.0f64) {
        let f = field(N, v.clone());
        let g = field(N, v.iter().map(|x| x + c).collect());
        for e in events(N as i64) {
            let (a, b) = (sweep(&f, &e), sweep(&g, &e));
            prop_assert!((b.t - (a.t - c)).abs() < 1e-12);
            prop_assert_eq!(a.s, b.s);
        }
    }

    #[test]
    fn lipschitz_in_sup_norm(
        v in prop::collection::vec(-3.0..3.0f64, N * N),
        d in prop::collection::vec(-0.5..0.5f64, N * N),
    ) {
        let f = field(N, v.clone());
        let g = field(N, v.iter().zip(&d).map(|(x, y)| x + y).collect());
        let sup = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for e in events(N as i64) {
            prop_assert!((sweep(&f, &e).t - sweep(&g, &e).t).abs() <= sup + 1e-12);
        }
    }

    #[test]
    fn decreasing_in_the_field(
        v in prop::collection::vec(-3.0..3.0f64, N * N),
        d in prop::collection::vec(0.0..1.0f64, N * N),
    ) {
        let f = field(N, v.clone());
        let g = field(N, v.iter().zip(&d).map(|(x, y)| x + y).collect());
        for e in events(N as i64) {
            prop_assert!(sweep(&g, &e).t <= sweep(&f, &e).t);
        }
    }

    #[test]
    fn directional_derivative(
        v in prop::collection::vec(-3.0..3.0f64, N * N),
        h in prop::collection::vec(-1.0..1.0f64, N * N),
    ) {
        let f = field(N, v.clone());
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 1e-6);
        let eps = gap / 4.0;
        let g = field(N, v.iter().zip(&h).map(|(x, y)| x + eps * y).collect());
        for e in events(N as i64) {
            let a = sweep(&f, &e);
            let s = a.cell();
            let b = sweep(&g, &e);
            prop_assert_eq!(a.s, b.s);
            prop_assert!((b.t - a.t + eps * h[s]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn circuit_duality(v in prop::collection::vec(-3.0..3.0f64, 9 * 9)) {
        use excursion_core::threshold::annulus_crossing_threshold;
        let f = field(9, v.clone());
        let neg = field(9, v.iter().map(|x| -x).collect());
        let circ = sweep(&f, &EventSpec::annulus((4.5, 4.5), 1.2, 3.8));
        let dual = annulus_crossing_threshold(&neg, (4.5, 4.5), 1.2, 3.8).unwrap();
        prop_assert_eq!(circ.t, -dual.t);
        prop_assert_eq!(circ.s, dual.s);
    }
}
