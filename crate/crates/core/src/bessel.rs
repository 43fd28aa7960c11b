//! Zeroth-order Bessel function of the first kind.
//!
//! Power series on `|x| <= 12`, Hankel asymptotic expansion beyond. Both
//! branches are accurate to about `1e-11` absolute at the switch point.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 12.0;

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-3) {
            break;
        }
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // Hankel coefficients for order zero: |a_k| = prod_{j<=k} (2j-1)^2 / (k! 8^k),
    // sign (-1)^k. P takes even k, Q odd k, each with alternating sign.
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0_f64; // |a_k| / x^k
    let mut prev = f64::INFINITY;
    for k in 0..200u32 {
        if k > 0 {
            let kf = f64::from(k);
            term *= (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
        }
        if term > prev {
            break;
        }
        prev = term;
        let signed = term * if k % 2 == 0 { 1.0 } else { -1.0 };
        let half = k / 2;
        let alt = if half % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += alt * signed;
        } else {
            q += alt * signed;
        }
        if term < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
