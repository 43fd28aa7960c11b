use excursion_core::percolation::{has_event, BoundaryArc, Config, EventSpec, Rect, Side, Transform};
use excursion_core::rng::rng_from_seed;
use excursion_core::rsw::*;
use rand::Rng;

const DENSITIES: [f64; 3] = [0.3, 0.5, 0.7];

fn assert_clean(rep: &FuzzReport) {
    if let Some(c) = rep.counterexamples.first() {
        panic!("{}: counterexample {}", rep.plan, c.to_json());
    }
}

fn rect_cross(e: &EventSpec) -> (Rect, BoundaryArc, BoundaryArc) {
    match e {
        EventSpec::RectCross { rect, s0, s2 } => (*rect, *s0, *s2),
        other => panic!("not a rectangle crossing: {other:?}"),
    }
}

#[test]
fn cross_x_cross_places_copies_as_in_the_proof() {
    let plan = plan_cross_x_cross(10, 4, 3, 7).unwrap();
    assert_eq!(plan.copies.len(), 3);
    let (rect, s0, s2) = rect_cross(&plan.copies[2].event());
    assert_eq!(rect, Rect::new(6, 0, 10, 10));
    assert_eq!(s0, rect.full_side(Side::Right));
    assert_eq!(s2, rect.side_arc(Side::Left, 3, 7).unwrap());
    match plan.copies[1].event() {
        EventSpec::XEvent { rect, arcs } => {
            assert_eq!(rect, Rect::new(6, 0, 4, 10));
            assert_eq!(arcs[0], rect.side_arc(Side::Left, 0, 3).unwrap());
            assert_eq!(arcs[3], rect.side_arc(Side::Right, 7, 10).unwrap());
        }
        other => panic!("expected an X event, got {other:?}"),
    }
    assert_eq!(rect_cross(&plan.target).0, Rect::new(0, 0, 16, 10));
}

#[test]
fn plans_reject_bad_geometry() {
    assert!(plan_cross_x_cross(8, 0, 2, 4).is_err());
    assert!(plan_cross_x_cross(8, 9, 2, 4).is_err());
    assert!(plan_cross_x_cross(8, 4, 5, 4).is_err());
    assert!(plan_cross_x_cross(8, 4, 2, 9).is_err());
    assert!(plan_cross_x_cross(-8, 4, 2, 4).is_err());
    assert!(plan_x_from_crossings(8, 3, 0).is_err());
    assert!(plan_x_from_crossings(8, 10, 0).is_err());
    assert!(plan_long_rectangle(12).is_err());
    assert!(plan_long_rectangle(0).is_err());
    assert!(plan_circuit_chain(1, 3).is_err());
    assert!(plan_circuit_chain(5, 0).is_err());
}

#[test]
fn copy_counts() {
    assert_eq!(plan_cross_x_cross(8, 4, 2, 6).unwrap().copies.len(), 3);
    assert_eq!(plan_x_from_crossings(8, 2, 3).unwrap().copies.len(), 5);
    let long = plan_long_rectangle(8).unwrap();
    assert_eq!(long.copies.len(), 15);
    let arcs = long
        .copies
        .iter()
        .filter(|c| matches!(&c.base, EventSpec::RectCross { s2, .. } if s2.len == 3))
        .count();
    assert_eq!(arcs, 10);
    // no copy is repeated
    for (i, a) in long.copies.iter().enumerate() {
        for b in &long.copies[i + 1..] {
            assert_ne!(a.event(), b.event());
        }
    }
    assert_eq!(plan_circuit_gluing(8).unwrap().copies.len(), 6);
}

#[test]
fn trivial_configurations() {
    for plan in builtin_plans(8).unwrap() {
        let full = Config::filled(plan.width(), plan.height(), true);
        assert!(hypothesis_holds(&plan, &full), "{}", plan.name);
        assert!(has_event(&full, &plan.target).unwrap(), "{}", plan.name);
        assert!(verify_plan(&plan, &full).unwrap().is_ok());
        let empty = Config::filled(plan.width(), plan.height(), false);
        assert!(!hypothesis_holds(&plan, &empty));
        assert!(verify_plan(&plan, &empty).unwrap().is_ok());
        let small = Config::filled(plan.width() - 1, plan.height(), true);
        assert!(verify_plan(&plan, &small).is_err());
    }
}

#[test]
fn fuzz_builtin_plans_at_sizes_8_and_16() {
    for size in [8, 16] {
        for plan in builtin_plans(size).unwrap() {
            let rep = fuzz_plan(&plan, 10_000, &DENSITIES, 17 + size as u64, None).unwrap();
            assert_eq!(rep.n_configs, 30_000);
            assert_clean(&rep);
        }
    }
}

#[test]
fn long_rectangle_fuzz_at_r8_with_1e5_configs() {
    let plan = plan_long_rectangle(8).unwrap();
    let rep = fuzz_plan(&plan, 34_000, &DENSITIES, 5, None).unwrap();
    assert!(rep.n_configs >= 100_000);
    assert!(rep.n_hypothesis > 10_000, "hypothesis rarely held: {}", rep.n_hypothesis);
    assert_clean(&rep);
}

#[test]
fn straight_row_is_vacuous_for_the_long_rectangle() {
    let plan = plan_long_rectangle(16).unwrap();
    let row = Config::from_fn(plan.width(), plan.height(), |_, y| y == 8);
    assert!(has_event(&row, &plan.target).unwrap());
    assert!(!hypothesis_holds(&plan, &row));
    assert!(verify_plan(&plan, &row).unwrap().is_ok());
}

#[test]
fn each_connection_pattern_of_the_x_event_is_exercised() {
    let (r, q, a, b) = (12, 6, 4, 7);
    let plan = plan_cross_x_cross(r, q, a, b).unwrap();
    let patterns = connection_patterns();
    assert_eq!(patterns.len(), 16);
    for (k, pattern) in patterns.iter().enumerate() {
        let rep = fuzz_with(&plan, 1000, 99, k as u64, None, |rng| {
            let p = [0.2, 0.35, 0.5][rng.random_range(0..3)];
            forced_pattern_config(r, q, a, b, *pattern, p, rng)
        })
        .unwrap();
        assert_clean(&rep);
        assert!(rep.n_hypothesis > 0, "pattern {pattern:?} never met the hypothesis");
    }
}

#[test]
fn annealing_finds_no_counterexample_on_builtin_plans() {
    for plan in [
        plan_cross_x_cross(8, 4, 2, 5).unwrap(),
        plan_x_from_crossings(8, 2, 2).unwrap(),
        plan_long_rectangle(8).unwrap(),
        plan_circuit_chain(3, 2).unwrap(),
    ] {
        let rep = adversarial_search(&plan, 24, 4000, 8, None).unwrap();
        assert_clean(&rep);
    }
}

/// The four copies the long-rectangle argument rests on survive the
/// adversary, and dropping any one of them lets it win.
#[test]
fn long_rectangle_core_is_sufficient_and_minimal() {
    let full = plan_long_rectangle(8).unwrap();
    let core_idx = [3, 5, 10, 11];
    let core = ConstructionPlan { copies: core_idx.iter().map(|&i| full.copies[i].clone()).collect(), ..full.clone() };
    assert_clean(&adversarial_search(&core, 60, 8000, 1, None).unwrap());
    for drop in 0..4 {
        let mut weak = core.clone();
        weak.copies.remove(drop);
        let rep = adversarial_search(&weak, 60, 8000, 2, None).unwrap();
        assert!(!rep.is_clean(), "dropping copy {drop} left the plan sound");
    }
}

#[test]
fn corrupted_plan_is_caught() {
    let mut plan = plan_long_rectangle(8).unwrap();
    plan.target = EventSpec::left_right(Rect::new(0, 0, 11, 8));
    plan.bounding_box = Rect::new(0, 0, 11, 8);
    let config = Config::from_fn(11, 8, |x, _| x < 10);
    let Verdict::Counterexample(cex) = verify_plan(&plan, &config).unwrap() else {
        panic!("widened target not caught");
    };
    let js = cex.to_json();
    assert_eq!(js["width"], 11);
    let back = rle_decode(js["config"].as_str().unwrap(), 11, 8).unwrap();
    assert_eq!(back, config);
    assert!(!adversarial_search(&plan, 4, 200, 3, None).unwrap().is_clean());
}

#[test]
fn rle_round_trip() {
    let mut rng = rng_from_seed(4);
    for _ in 0..50 {
        let (nx, ny) = (rng.random_range(1..20), rng.random_range(1..20));
        let c = random_config(nx, ny, 0.5, &mut rng);
        assert_eq!(rle_decode(&rle_encode(&c), nx, ny).unwrap(), c);
    }
    assert!(rle_decode("3a/2a", 3, 2).is_err());
    assert!(rle_decode("3a", 3, 2).is_err());
    assert!(rle_decode("3x", 3, 1).is_err());
}

#[test]
fn transforms_commute_with_event_evaluation() {
    let mut rng = rng_from_seed(12);
    let base = EventSpec::cross_arc(6, 2, 5).unwrap();
    for q in 0..4u8 {
        for rx in [false, true] {
            for ry in [false, true] {
                let t = placed(6, 6, q, rx, ry, 3, 2);
                let copy = EventCopy::new(base.clone(), t);
                let inv = t.inverse();
                assert_eq!(copy.event().transform(&inv), base);
                for _ in 0..40 {
                    let c = random_config(12, 12, 0.55, &mut rng);
                    let back = c.transformed(&inv, 6, 6);
                    assert_eq!(has_event(&c, &copy.event()).unwrap(), has_event(&back, &base).unwrap());
                }
            }
        }
    }
    assert_eq!(Transform::identity().inverse(), Transform::identity());
}

#[test]
fn log_star_values() {
    assert_eq!(log_star(2.0, 1.0).unwrap(), LogStar::Finite(0));
    assert_eq!(log_star(2.0, 0.5).unwrap(), LogStar::Finite(0));
    assert_eq!(log_star(2.0, 16.0).unwrap(), LogStar::Finite(3));
    assert_eq!(log_star(2.0, 65536.0).unwrap(), LogStar::Finite(4));
    assert_eq!(log_star(10.0, 1e10).unwrap(), LogStar::Finite(2));
    let b = 2f64.powf(0.25);
    assert_eq!(log_star(b, 4.0).unwrap(), LogStar::Divergent);
    // above the attracting fixed point 16 the iterates fall back onto it
    assert_eq!(log_star(b, 1e6).unwrap(), LogStar::Divergent);
    // below the repelling fixed point near 1.24 they escape under 1
    assert!(matches!(log_star(b, 1.2).unwrap(), LogStar::Finite(_)));
    assert!(log_star(1.0, 4.0).is_err());
    assert!(log_star(0.5, 4.0).is_err());
    assert!(log_star(2.0, f64::INFINITY).is_err());
}

#[test]
fn good_scales() {
    let xs: Vec<f64> = (1..=4096).map(|x| x as f64).collect();
    let all = good_scale_search(&xs, |x| x, 1.0, 512.0).unwrap();
    assert_eq!(all.len(), 512);
    let ones = good_scale_search(&xs, |_| 1.0, 4.0, 512.0).unwrap();
    assert_eq!(ones.len(), 509);
    assert!(good_scale_search(&xs, |x| 2.0 * x, 1.0, 8.0).is_err());
    assert!(good_scale_search(&xs, |_| 0.5, 1.0, 8.0).is_err());

    // direct evaluation oracle for alpha = sqrt(x)
    let alpha = |x: f64| x.sqrt();
    let good = good_scale_search(&xs[..2048], alpha, 16.0, 1024.0).unwrap();
    let oracle = |x: f64| {
        xs[..2048].iter().any(|&y| {
            (x / 4.0..=x).contains(&y) && (alpha(y) >= y / 4.0 || (y <= x / 2.0 && alpha(y + alpha(x)) <= 2.0 * alpha(y)))
        })
    };
    let expect: Vec<f64> = xs[..2048].iter().copied().filter(|&x| (16.0..=1024.0).contains(&x) && oracle(x)).collect();
    assert_eq!(good, expect);
    let mut x = 16.0;
    while 2.0 * x <= 1024.0 {
        assert!(good.iter().any(|&g| g >= x && g <= 2.0 * x), "no good scale in [{x}, {}]", 2.0 * x);
        x *= 2.0;
    }
}

#[test]
fn alpha_on_degenerate_distributions() {
    let full = estimate_alpha_with(16, 200, 1, None, (0, 0), |_| Config::filled(16, 16, true)).unwrap();
    assert_eq!(full.alpha, Some(0));
    assert!(full.half_arc_holds());
    assert_eq!(full.report(1).estimate, 0.0);
    let empty = estimate_alpha_with(16, 200, 1, None, (0, 0), |_| Config::filled(16, 16, false)).unwrap();
    assert_eq!(empty.alpha, None);
    assert_eq!(empty.report(1).metadata["status"], "undefined");
    assert!(estimate_alpha_with(15, 200, 1, None, (0, 0), |_| Config::filled(16, 16, true)).is_err());
    assert!(estimate_alpha_with(16, 50, 1, None, (0, 0), |_| Config::filled(16, 16, true)).is_err());
}

/// Only the lowest `k` rows are active: the crossing reaches the right side
/// exactly when the arc dips to row `k - 1`, so alpha is the least even
/// width whose centred arc starts at or below `k`.
#[test]
fn alpha_matches_a_hand_computed_distribution() {
    let r = 16;
    let est = estimate_alpha_with(r, 400, 3, None, (0, 0), |seed| {
        let k = 1 + (seed % 16) as i64;
        Config::from_fn(16, 16, move |_, y| y < k)
    })
    .unwrap();
    // the arc [(R - a)/2, (R + a)/2] touches row k - 1 iff (R - a)/2 <= k
    let width_for = |k: i64| (0..=r).step_by(2).find(|&a| (r - a) / 2 <= k).unwrap();
    let mut need: Vec<i64> = (0..400u64)
        .map(|i| width_for(1 + (excursion_core::rng::derive_seed(3, i, excursion_core::rng::tag::FIELD) % 16) as i64))
        .collect();
    need.sort();
    assert_eq!(est.alpha, Some(need[99]));
}
