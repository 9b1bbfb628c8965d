//! Special functions not covered by `statrs`.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::quad::{integrate, Tolerance};

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 12.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= -q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let (p, q) = hankel_pq(x);
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// `1 − J0(x)` without cancellation for small `x`.
pub fn one_minus_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= -q / ((k * k) as f64);
            sum -= term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        1.0 - bessel_j0(x)
    }
}

// Asymptotic P, Q for order zero, summed until the terms start growing.
fn hankel_pq(x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k(0) x^{-k}
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let m = (2 * k - 1) as f64;
            a *= -(m * m) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

/// Modified Bessel function of the second kind `K_ν(x)` for `x > 0`,
/// from `∫_0^∞ exp(−x cosh t) cosh(νt) dt`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k requires x > 0");
    // Integrand is below exp(-700) relative to the peak past t_max.
    let t_max = ((700.0 + nu.abs() * 50.0) / x + 1.0).acosh() + 1.0;
    let t_max = t_max.min(60.0);
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let r = integrate(f, 0.0, t_max, Tolerance::new(0.0, 1e-13))
        .or_else(|_| integrate(f, 0.0, t_max, Tolerance::new(0.0, 1e-10)))
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    r * (-x).exp()
}

/// `ln erfc(x)`, accurate deep into the upper tail.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 3.0 {
        return statrs::function::erf::erfc(x).ln();
    }
    // erfc(x) = exp(−x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    let mut cf = x;
    for k in (1..80).rev() {
        cf = x + (k as f64 * 0.5) / cf;
    }
    -x * x - 0.5 * PI.ln() - cf.ln()
}
