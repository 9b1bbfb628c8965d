//! Adaptive Gauss–Kronrod quadrature.
//!
//! Global adaptive G7/K15 with a panel heap ordered by error. The error of a
//! panel is taken as |K15 − G7|, which over-estimates the K15 error and keeps
//! the reported tolerance honest. A log-space variant integrates `exp(ℓ(u))`
//! without ever forming the integrand, for test integrals whose values span
//! hundreds of orders of magnitude.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute/relative tolerance pair. Converged when error ≤ max(abs, rel·|I|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-8, rel: 1e-6 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (value, error) = gk15(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a: lo,
        b: hi,
        value,
        error,
    });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    while total_err > tol.target(total) {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                estimate: sign * total,
                achieved: total_err,
                requested: tol.target(total),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                estimate: sign * total,
                achieved: total_err,
                requested: tol.target(total),
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Re-sum occasionally to shed accumulated cancellation.
        if evaluations % 3000 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(Integral {
        value: sign * total,
        abs_error: total_err,
        evaluations,
    })
}

/// Integrate over consecutive segments `points[0]..points[1]..…`, splitting at
/// known kinks or jumps of the integrand.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let mut out = Integral {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };
    let n_seg = points.len().saturating_sub(1).max(1) as f64;
    let seg_tol = Tolerance::new(tol.abs / n_seg, tol.rel);
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = integrate(&f, w[0], w[1], seg_tol)?;
        out.value += r.value;
        out.abs_error += r.abs_error;
        out.evaluations += r.evaluations;
    }
    Ok(out)
}

/// Integrate `f` over `[a, ∞)` using the map `x = a + t/(1 − t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Integral> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Natural log of `∫_a^b exp(ℓ(u)) du`, accurate to relative `rel`.
///
/// Panels are refined by their contribution on the log scale, so integrands
/// that rise or fall by thousands of e-folds across the interval are handled.
pub fn log_integrate<F: Fn(f64) -> f64>(ell: F, a: f64, b: f64, rel: f64) -> f64 {
    #[derive(Clone, Copy)]
    struct LPanel {
        a: f64,
        b: f64,
        ln_value: f64,
        ln_err: f64,
    }
    impl PartialEq for LPanel {
        fn eq(&self, o: &Self) -> bool {
            self.ln_err == o.ln_err
        }
    }
    impl Eq for LPanel {}
    impl PartialOrd for LPanel {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for LPanel {
        fn cmp(&self, o: &Self) -> Ordering {
            self.ln_err.total_cmp(&o.ln_err)
        }
    }

    let eval = |lo: f64, hi: f64| -> LPanel {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut vals = [0.0f64; 15];
        vals[0] = ell(c);
        for i in 0..7 {
            vals[1 + 2 * i] = ell(c - h * XGK[i]);
            vals[2 + 2 * i] = ell(c + h * XGK[i]);
        }
        let m = vals
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return LPanel {
                a: lo,
                b: hi,
                ln_value: m,
                ln_err: m,
            };
        }
        let e = |v: f64| if v.is_nan() { 0.0 } else { (v - m).exp() };
        let mut k = WGK[7] * e(vals[0]);
        let mut g = WG[3] * e(vals[0]);
        for i in 0..7 {
            let s = e(vals[1 + 2 * i]) + e(vals[2 + 2 * i]);
            k += WGK[i] * s;
            if i % 2 == 1 {
                g += WG[i / 2] * s;
            }
        }
        let ln_value = m + (k * h).ln();
        let ln_err = m + ((k - g) * h).abs().max(1e-300).ln();
        LPanel {
            a: lo,
            b: hi,
            ln_value,
            ln_err,
        }
    };

    let ln_add = |x: f64, y: f64| -> f64 {
        if x == f64::NEG_INFINITY {
            return y;
        }
        if y == f64::NEG_INFINITY {
            return x;
        }
        let (hi, lo) = if x > y { (x, y) } else { (y, x) };
        hi + (lo - hi).exp().ln_1p()
    };

    // Running sums of value and error, kept in linear scale relative to a
    // reference that only moves upwards.
    struct Sums {
        reference: f64,
        value: f64,
        err: f64,
    }
    impl Sums {
        fn rebase(&mut self, to: f64) {
            if to > self.reference {
                let s = if self.reference == f64::NEG_INFINITY {
                    0.0
                } else {
                    (self.reference - to).exp()
                };
                self.value *= s;
                self.err *= s;
                self.reference = to;
            }
        }
        fn add(&mut self, p: &LPanel, sign: f64) {
            if p.ln_value.is_finite() {
                self.rebase(p.ln_value);
                self.value += sign * (p.ln_value - self.reference).exp();
            }
            if p.ln_err.is_finite() {
                self.rebase(p.ln_err);
                self.err += sign * (p.ln_err - self.reference).exp();
            }
        }
    }

    let first = eval(a, b);
    if first.ln_value == f64::INFINITY || first.ln_value.is_nan() {
        return first.ln_value;
    }
    let mut sums = Sums {
        reference: f64::NEG_INFINITY,
        value: 0.0,
        err: 0.0,
    };
    sums.add(&first, 1.0);
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let total = |heap: &BinaryHeap<LPanel>| {
        heap.iter()
            .fold(f64::NEG_INFINITY, |acc, p| ln_add(acc, p.ln_value))
    };
    for _ in 0..MAX_PANELS {
        if sums.value <= 0.0 {
            return total(&heap);
        }
        if sums.err.max(0.0) <= rel * sums.value {
            // Confirm with an exact resummation to rule out drift.
            let t = total(&heap);
            let e = heap
                .iter()
                .fold(f64::NEG_INFINITY, |acc, p| ln_add(acc, p.ln_err));
            if e - t <= rel.ln() {
                return t;
            }
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        sums.add(&worst, -1.0);
        let (l, r) = (eval(worst.a, mid), eval(mid, worst.b));
        sums.add(&l, 1.0);
        sums.add(&r, 1.0);
        heap.push(l);
        heap.push(r);
    }
    total(&heap)
}

/// `ln(e^x + e^y)` without overflow.
pub fn ln_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}
