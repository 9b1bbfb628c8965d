//! Regular variation, escape-rate profiles, integral tests and empirical
//! limsup estimation.
//!
//! All integral tests are evaluated in the variable `u = ln r`, with the
//! integrand kept on the log scale, so that profiles such as `(log r)^{1/λ}`
//! and integrands that vary by thousands of e-folds can be classified over
//! `r` up to `exp(10¹²)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gst::{LogPhi, TailModel};
use crate::levy::{DensityProfile, ProfileClass};
use crate::potentials::Potential;
use crate::quad::{ln_add_exp, log_integrate};
use crate::special::ln_erfc;
use crate::spectral::SpectralSolution;

/// Slowly varying factor `L`, evaluated on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SlowlyVarying {
    One,
    Constant { value: f64 },
    /// `(log r)^power`.
    LogPower { power: f64 },
}

impl SlowlyVarying {
    pub fn validate(&self) -> Result<()> {
        match self {
            SlowlyVarying::Constant { value } if !(*value > 0.0 && value.is_finite()) => {
                Err(invalid("slowly.value", "must be positive"))
            }
            SlowlyVarying::LogPower { power } if !power.is_finite() => {
                Err(invalid("slowly.power", "must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// `ln L(r)` from `ln r`.
    pub fn ln_eval_ln(&self, ln_r: f64) -> f64 {
        match self {
            SlowlyVarying::One => 0.0,
            SlowlyVarying::Constant { value } => value.ln(),
            SlowlyVarying::LogPower { power } => {
                if *power == 0.0 {
                    0.0
                } else {
                    power * ln_r.ln()
                }
            }
        }
    }

    /// Smallest `ln r` at which the factor is defined and positive.
    pub fn ln_r_min(&self) -> f64 {
        match self {
            SlowlyVarying::LogPower { power } if *power != 0.0 => 1.0,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// `R(r) = r^λ L(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegVarFunction {
    pub lambda: f64,
    pub slowly: SlowlyVarying,
}

impl RegVarFunction {
    pub fn new(lambda: f64, slowly: SlowlyVarying) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "index must be positive"));
        }
        slowly.validate()?;
        Ok(Self { lambda, slowly })
    }

    pub fn ln_eval_ln(&self, ln_r: f64) -> f64 {
        self.lambda * ln_r + self.slowly.ln_eval_ln(ln_r)
    }

    /// `max |ln(R(s r)/R(r)) − λ ln s|` over `s ∈ {2, 10}` and the last
    /// quarter of a geometric grid in `ln r` reaching `ln_r_max`.
    pub fn index_deviation(&self, ln_r_max: f64) -> f64 {
        let lo = self.slowly.ln_r_min().max(1.0) + 1.0;
        let grid = geometric(lo, ln_r_max, 64);
        let mut dev: f64 = 0.0;
        for &u in &grid[48..] {
            for s in [2.0f64, 10.0] {
                let d = self.ln_eval_ln(u + s.ln()) - self.ln_eval_ln(u) - self.lambda * s.ln();
                dev = dev.max(d.abs());
            }
        }
        dev
    }

    /// `ln R*(y)`, where `R*(y) = inf{s : R(s) ≥ y}` is found by bisection
    /// in `ln s`.
    pub fn asymptotic_inverse_ln(&self, ln_y: f64) -> f64 {
        let mut lo = self.slowly.ln_r_min().max(0.0) + 1e-9;
        let mut hi = (ln_y / self.lambda).abs() * 2.0 + lo + 64.0;
        while self.ln_eval_ln(hi) < ln_y {
            hi *= 2.0;
        }
        if self.ln_eval_ln(lo) >= ln_y {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_eval_ln(mid) >= ln_y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugateMethod {
    ClosedForm,
    NumericInverse,
}

/// The conjugate `L*` with `R*(r) ≈ r^{1/λ} L*(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateSlowlyVarying {
    pub base: RegVarFunction,
    pub method: ConjugateMethod,
    /// `|ln L(r / L(r)^{1/λ}) − ln L(r)|` at the end of the check grid.
    pub check_deviation: f64,
}

const CONJUGATE_CHECK_LN_R_MAX: f64 = 1e8;
const CONJUGATE_CHECK_TOL: f64 = 1e-3;

impl ConjugateSlowlyVarying {
    /// `ln L*(r)` from `ln r`.
    pub fn ln_eval_ln(&self, ln_r: f64) -> f64 {
        let lambda = self.base.lambda;
        match self.method {
            ConjugateMethod::ClosedForm => -self.base.slowly.ln_eval_ln(ln_r / lambda) / lambda,
            ConjugateMethod::NumericInverse => self.base.asymptotic_inverse_ln(ln_r) - ln_r / lambda,
        }
    }
}

/// Builds `L*` for `R(r) = r^λ L(r)`.
///
/// The closed form `L*(r) = L(r^{1/λ})^{−1/λ}` is used when
/// `L(r / L(r)^{1/λ}) / L(r) → 1` is confirmed on a geometric grid;
/// otherwise the numeric asymptotic inverse is used and a warning is
/// returned alongside.
pub fn conjugate_slowly_varying(
    slowly: SlowlyVarying,
    lambda: f64,
) -> Result<(ConjugateSlowlyVarying, Option<String>)> {
    let base = RegVarFunction::new(lambda, slowly)?;
    let lo = slowly.ln_r_min().max(1.0) + 9.0;
    let grid = geometric(lo, CONJUGATE_CHECK_LN_R_MAX, 48);
    let devs: Vec<f64> = grid
        .iter()
        .map(|&u| {
            let l = slowly.ln_eval_ln(u);
            (slowly.ln_eval_ln(u - l / lambda) - l).abs()
        })
        .collect();
    let tail = &devs[devs.len() / 2..];
    let shrinking = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    let last = *devs.last().expect("non-empty grid");
    let ok = last.is_finite() && last <= CONJUGATE_CHECK_TOL && shrinking;
    let method = if ok {
        ConjugateMethod::ClosedForm
    } else {
        ConjugateMethod::NumericInverse
    };
    let warning = (!ok).then(|| {
        format!("slow-variation check failed (deviation {last:.3e}); using numeric asymptotic inverse")
    });
    Ok((
        ConjugateSlowlyVarying {
            base,
            method,
            check_deviation: last,
        },
        warning,
    ))
}

/// Non-decreasing escape-rate profile `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileFunction {
    /// `(r (log r)^{2θ₁+1} ⋯ (log_k r)^{2θ_k+δ})^{1/(2γ−d)}`.
    IteratedLogPower {
        gamma: f64,
        d: usize,
        thetas: Vec<f64>,
        delta: f64,
    },
    /// `(log r)^{1/λ} L*(log r)` with `L*` conjugate to `L`.
    LogPower { lambda: f64, slowly: SlowlyVarying },
    /// `r^exponent`.
    Power { exponent: f64 },
    Constant { value: f64 },
    /// Piecewise linear in `(ln r, ln τ)`, extended linearly beyond the table.
    Tabulated { ln_r: Vec<f64>, ln_tau: Vec<f64> },
    /// `factor · τ_inner`.
    Scaled {
        factor: f64,
        inner: Box<ProfileFunction>,
    },
}

impl ProfileFunction {
    pub fn log_power(lambda: f64) -> Self {
        ProfileFunction::LogPower {
            lambda,
            slowly: SlowlyVarying::One,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        ProfileFunction::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProfileFunction::IteratedLogPower {
                gamma,
                d,
                thetas,
                delta,
            } => {
                if thetas.is_empty() {
                    return Err(invalid(
                        "profile.thetas",
                        "iterated-log profile needs the exponents θ₁..θ_k (k ≥ 1) and δ",
                    ));
                }
                if thetas.len() > 3 {
                    return Err(invalid("profile.thetas", "at most three iterated logarithms"));
                }
                if !(2.0 * gamma - *d as f64 > 0.0) {
                    return Err(invalid("profile.gamma", "requires 2γ − d > 0"));
                }
                if !(*delta > 0.0 && delta.is_finite()) || thetas.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("profile.delta", "θ_i must be finite and δ > 0"));
                }
            }
            ProfileFunction::LogPower { lambda, slowly } => {
                RegVarFunction::new(*lambda, *slowly)?;
            }
            ProfileFunction::Power { exponent } => {
                if !(*exponent >= 0.0 && exponent.is_finite()) {
                    return Err(invalid("profile.exponent", "must be nonnegative"));
                }
            }
            ProfileFunction::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(invalid("profile.value", "must be positive"));
                }
            }
            ProfileFunction::Tabulated { ln_r, ln_tau } => {
                if ln_r.len() < 2 || ln_r.len() != ln_tau.len() {
                    return Err(invalid("profile.ln_r", "need at least two matching samples"));
                }
                if ln_r.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("profile.ln_r", "must be strictly increasing"));
                }
                if ln_tau.windows(2).any(|w| w[1] < w[0]) {
                    return Err(invalid("profile.ln_tau", "profile must be non-decreasing"));
                }
            }
            ProfileFunction::Scaled { factor, inner } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(invalid("profile.factor", "must be positive"));
                }
                inner.validate()?;
            }
        }
        let lo = self.ln_r_min();
        let grid = geometric(lo.max(0.0) + 1.0, 1e9, 200);
        let vals: Vec<f64> = grid.iter().map(|&u| self.ln_tau(u)).collect();
        if vals.iter().any(|v| v.is_nan()) {
            return Err(invalid("profile", "profile is not finite on its domain"));
        }
        let tail = &vals[vals.len() / 4..];
        if tail.windows(2).any(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0)) {
            return Err(invalid("profile", "profile is not eventually non-decreasing"));
        }
        Ok(())
    }

    /// Left end of the domain, as `ln r`.
    pub fn ln_r_min(&self) -> f64 {
        match self {
            ProfileFunction::IteratedLogPower { thetas, .. } => {
                // log_k r > e ⇔ r > exp_k(e); expressed for u = ln r.
                let mut u = std::f64::consts::E;
                for _ in 1..thetas.len() {
                    u = u.exp();
                }
                u
            }
            ProfileFunction::LogPower { slowly, .. } => match slowly {
                SlowlyVarying::LogPower { power } if *power != 0.0 => std::f64::consts::E,
                _ => 0.0,
            },
            ProfileFunction::Tabulated { ln_r, .. } => ln_r[0],
            ProfileFunction::Scaled { inner, .. } => inner.ln_r_min(),
            _ => 0.0,
        }
    }

    /// `ln τ(r)` from `ln r`.
    pub fn ln_tau(&self, ln_r: f64) -> f64 {
        match self {
            ProfileFunction::IteratedLogPower {
                gamma,
                d,
                thetas,
                delta,
            } => {
                let q = 2.0 * gamma - *d as f64;
                let k = thetas.len();
                let mut acc = ln_r;
                let mut log_i = ln_r;
                for (i, th) in thetas.iter().enumerate() {
                    let e = if i + 1 == k { 2.0 * th + delta } else { 2.0 * th + 1.0 };
                    acc += e * log_i.ln();
                    log_i = log_i.ln();
                }
                acc / q
            }
            ProfileFunction::LogPower { lambda, slowly } => {
                let u = ln_r.ln();
                let conj = match slowly {
                    SlowlyVarying::One => 0.0,
                    _ => match conjugate_slowly_varying(*slowly, *lambda) {
                        Ok((c, _)) => c.ln_eval_ln(u),
                        Err(_) => f64::NAN,
                    },
                };
                u / lambda + conj
            }
            ProfileFunction::Power { exponent } => exponent * ln_r,
            ProfileFunction::Constant { value } => value.ln(),
            ProfileFunction::Tabulated { ln_r: xs, ln_tau: ys } => {
                let n = xs.len();
                let i = xs.partition_point(|x| *x <= ln_r).clamp(1, n - 1) - 1;
                let t = (ln_r - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
            ProfileFunction::Scaled { factor, inner } => factor.ln() + inner.ln_tau(ln_r),
        }
    }

    /// `τ(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        self.ln_tau(r.ln()).exp()
    }
}

/// Non-decreasing positive `κ` of the tail-bound lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KappaFunction {
    Constant { value: f64 },
    /// `scale · r^exponent`.
    Power { exponent: f64, scale: f64 },
}

impl KappaFunction {
    pub fn one() -> Self {
        KappaFunction::Constant { value: 1.0 }
    }

    pub fn power(exponent: f64) -> Self {
        KappaFunction::Power {
            exponent,
            scale: 1.0,
        }
    }

    /// The choice `κ(r) = r^{β ∨ ϑ}` when the density or the potential has
    /// an exponential factor, `κ ≡ 1` otherwise.
    pub fn for_setting(density: &DensityProfile, potential: Option<&Potential>) -> Self {
        let mut e: f64 = 0.0;
        if density.mu > 0.0 && density.beta > 0.0 {
            e = e.max(density.beta);
        }
        if let Some(Potential::ExpPolyLog { eta, vartheta, .. }) = potential {
            if *eta > 0.0 && *vartheta > 0.0 {
                e = e.max(*vartheta);
            }
        }
        if e > 0.0 {
            Self::power(e)
        } else {
            Self::one()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            KappaFunction::Constant { value } => *value > 0.0 && value.is_finite(),
            KappaFunction::Power { exponent, scale } => {
                *exponent >= 0.0 && exponent.is_finite() && *scale > 0.0 && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("kappa", "must be positive and non-decreasing"))
        }
    }

    pub fn ln_eval_ln(&self, ln_r: f64) -> f64 {
        match self {
            KappaFunction::Constant { value } => value.ln(),
            KappaFunction::Power { exponent, scale } => scale.ln() + exponent * ln_r,
        }
    }

    /// `r κ′(r) / κ(r)`.
    pub fn elasticity(&self) -> f64 {
        match self {
            KappaFunction::Constant { .. } => 0.0,
            KappaFunction::Power { exponent, .. } => *exponent,
        }
    }

    /// `−r (1/κ)′(r) = r κ′ / κ²`.
    pub fn minus_r_d_inverse(&self, ln_r: f64) -> f64 {
        self.elasticity() * (-self.ln_eval_ln(ln_r)).exp()
    }
}

/// Outcome of the tail-bound lemma check on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    /// (i) `h r^d → 0`, (ii) integrability of `h r^{d−1}`, (iii) `C¹`.
    pub preconditions: [bool; 3],
    pub precondition_notes: Vec<String>,
    pub l_holds: bool,
    pub u_holds: bool,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    /// `∫_{s>r} h s^{d−1} ds ≥ h r^d / ((A₁+B₁) κ)` at every grid point.
    pub lower_conclusion_ok: bool,
    /// `∫_{s>r} h s^{d−1} ds ≤ h r^d / ((A₂+B₂) κ)` at every grid point.
    pub upper_conclusion_ok: bool,
    /// `(r, ln tail, ln lower bound, ln upper bound)`.
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl TailBoundReport {
    /// Conclusions hold wherever the corresponding condition holds.
    pub fn conclusion_ok(&self) -> bool {
        (!self.l_holds || self.lower_conclusion_ok) && (!self.u_holds || self.upper_conclusion_ok)
    }

    pub fn passes(&self) -> bool {
        self.preconditions.iter().all(|&p| p) && self.l_holds && self.u_holds && self.conclusion_ok()
    }
}

const TAIL_BOUND_EXTENSION: f64 = 1e4;
const TAIL_BOUND_SLACK: f64 = 1e-6;

/// Checks the differential conditions (L) and (U) by finite differences on
/// an extended grid, extracts the constants, and compares the resulting
/// bounds with a direct quadrature of `∫_{s>r} h(s) s^{d−1} ds`.
///
/// `ln_h` maps `ln r` to `ln h(r)`. Under (L) the tail integral is bounded
/// below by `h r^d / ((A₁+B₁) κ)`; under (U) it is bounded above by
/// `h r^d / ((A₂+B₂) κ)`.
pub fn tail_bound_check<F>(ln_h: F, kappa: &KappaFunction, d: usize, r_range: (f64, f64)) -> Result<TailBoundReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    kappa.validate()?;
    let (r_lo, r_hi) = r_range;
    if !(r_lo >= 1.0 && r_hi > r_lo && r_hi.is_finite()) {
        return Err(invalid("r_range", "need 1 ≤ r_lo < r_hi < ∞"));
    }
    let df = d as f64;
    let (u_lo, u_hi) = (r_lo.ln(), (r_hi * TAIL_BOUND_EXTENSION).ln());
    let ext: Vec<f64> = (0..=600)
        .map(|i| u_lo + (u_hi - u_lo) * i as f64 / 600.0)
        .collect();

    // d ln h / d ln r by central differences at two step sizes.
    let slope = |u: f64, s: f64| (ln_h(u + s) - ln_h(u - s)) / (2.0 * s);
    let mut notes = Vec::new();
    let mut c1 = true;
    let mut a_vals = Vec::with_capacity(ext.len());
    let mut b_vals = Vec::with_capacity(ext.len());
    for &u in &ext {
        let s1 = slope(u, 1e-4);
        let s2 = slope(u, 2e-4);
        if !(s1.is_finite() && s2.is_finite()) || (s1 - s2).abs() > 1e-4 * s1.abs().max(1.0) {
            c1 = false;
        }
        a_vals.push(kappa.minus_r_d_inverse(u));
        b_vals.push((-s1 - df) * (-kappa.ln_eval_ln(u)).exp());
    }
    if !c1 {
        notes.push("(iii) finite differences of ln h are not consistent".into());
    }

    let decay: Vec<f64> = ext.iter().map(|&u| ln_h(u) + df * u).collect();
    let last_part = &decay[decay.len() * 9 / 10..];
    let vanishing = decay.last().is_some_and(|l| *l < decay[0])
        && last_part.windows(2).all(|w| w[1] < w[0]);
    if !vanishing {
        notes.push("(i) h(r) r^d is not decreasing towards zero".into());
    }

    let ln_tail = |u: f64| log_integrate(|v| ln_h(v) + df * v, u, u + 700.0, 1e-10);
    let tail0 = ln_tail(u_lo);
    let integrable = tail0.is_finite();
    if !integrable {
        notes.push("(ii) h(r) r^{d−1} is not integrable".into());
    }

    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let a1 = max(&a_vals).max(0.0);
    let b1 = max(&b_vals);
    let a2 = min(&a_vals);
    let b2 = min(&b_vals);
    let l_holds = b1 > 0.0 && b1.is_finite() && a1.is_finite();
    let u_holds = a2 >= 0.0 && b2 > 0.0 && b2.is_finite();

    let pts: Vec<f64> = (0..=24)
        .map(|i| u_lo + (r_hi.ln() - u_lo) * i as f64 / 24.0)
        .collect();
    let rows: Vec<(f64, f64, f64, f64)> = pts
        .par_iter()
        .map(|&u| {
            let ln_n = ln_h(u) + df * u - kappa.ln_eval_ln(u);
            let lower = ln_n - (a1 + b1).ln();
            let upper = ln_n - (a2.max(0.0) + b2).ln();
            (u.exp(), ln_tail(u), lower, upper)
        })
        .collect();
    let slack = TAIL_BOUND_SLACK;
    let lower_conclusion_ok = rows.iter().all(|(_, t, lo, _)| *t >= lo - slack);
    let upper_conclusion_ok = rows.iter().all(|(_, t, _, up)| *t <= up + slack);
    Ok(TailBoundReport {
        preconditions: [vanishing, integrable, c1],
        precondition_notes: notes,
        l_holds,
        u_holds,
        a1,
        b1,
        a2,
        b2,
        lower_conclusion_ok,
        upper_conclusion_ok,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Number of geometric windows `[u₀2^j, u₀2^{j+1}]` in `u = ln r`.
pub const CLASSIFIER_WINDOWS: usize = 40;
/// Consecutive trailing windows inspected.
pub const CLASSIFIER_RUN: usize = 6;
/// Window ratio at or above which the partial integrals fail to converge.
pub const DIVERGENT_RATIO: f64 = 0.999;
/// Window ratio at or below which the partial integrals contract.
pub const FINITE_RATIO: f64 = 0.98;
/// Largest extrapolated tail, relative to the accumulated mass, for a
/// finite verdict.
pub const FINITE_TAIL_FRACTION: f64 = 1e-3;

/// Result of classifying one integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// `(u_lo, u_hi, ln ∫_window)` in `u = ln r`.
    pub partial_values: Vec<(f64, f64, f64)>,
    pub ln_accumulated: f64,
    /// Geometric extrapolation of the remaining mass (log scale).
    pub ln_extrapolated_tail: f64,
    /// Trailing window ratios.
    pub ratios: Vec<f64>,
}

/// Relative accuracy of each window mass; well below the ratio margins.
const WINDOW_REL_TOL: f64 = 1e-5;

/// Classifies `∫^∞ F(r) dr` from `ln F` given as a function of `ln r`.
pub fn classify_ln_integrand<F: Fn(f64) -> f64>(ln_f: F, ln_r_start: f64) -> Classification {
    let u0 = ln_r_start.max(0.0) + 1.0;
    let ell = |u: f64| {
        let v = u + ln_f(u);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut partial = Vec::with_capacity(CLASSIFIER_WINDOWS);
    let mut a = u0;
    for _ in 0..CLASSIFIER_WINDOWS {
        let b = 2.0 * a;
        partial.push((a, b, log_integrate(ell, a, b, WINDOW_REL_TOL)));
        a = b;
    }
    let ln_acc = partial
        .iter()
        .fold(f64::NEG_INFINITY, |acc, p| ln_add_exp(acc, p.2));
    let ln_ratio = |x: f64, y: f64| -> f64 {
        if y == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if x == f64::NEG_INFINITY || y == f64::INFINITY {
            f64::INFINITY
        } else {
            y - x
        }
    };
    let k = partial.len();
    let ln_ratios: Vec<f64> = (k - CLASSIFIER_RUN..k)
        .map(|j| ln_ratio(partial[j - 1].2, partial[j].2))
        .collect();
    let ratios: Vec<f64> = ln_ratios.iter().map(|l| l.exp()).collect();
    let rho = ratios.iter().copied().fold(0.0, f64::max);
    let last = partial[k - 1].2;
    let ln_tail = if last == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if rho >= 1.0 {
        f64::INFINITY
    } else {
        last + (rho / (1.0 - rho)).ln()
    };
    let verdict = if ratios.iter().all(|&r| r >= DIVERGENT_RATIO) || ln_acc == f64::INFINITY {
        Verdict::Divergent
    } else if ratios.iter().all(|&r| r <= FINITE_RATIO)
        && (ln_tail == f64::NEG_INFINITY || ln_tail - ln_acc <= FINITE_TAIL_FRACTION.ln())
    {
        Verdict::Finite
    } else {
        Verdict::Inconclusive
    };
    Classification {
        verdict,
        partial_values: partial,
        ln_accumulated: ln_acc,
        ln_extrapolated_tail: ln_tail,
        ratios,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalStatus {
    /// Bisection ran all iterations between a divergent and a finite scale.
    Resolved,
    /// Bisection stopped at a midpoint classified inconclusively, which
    /// happens when the integrand is nearly balanced at the threshold;
    /// `lower` (divergent) and `upper` (finite) remain conclusive.
    Bracketed,
    /// Finite already at the smallest scale: the constant is 0.
    Zero,
    /// Divergent even at the largest scale: the constant is ∞.
    Infinite,
    /// An endpoint or midpoint classified inconclusively; `lower..upper`
    /// brackets the threshold as far as it was resolved.
    Inconclusive,
}

/// Threshold scale `c*` between divergent (`c < c*`) and finite (`c > c*`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstant {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub status: CriticalStatus,
    pub iterations: usize,
}

pub const BISECTION_C_MIN: f64 = 1e-3;
pub const BISECTION_C_MAX: f64 = 1e3;
pub const BISECTION_ITERATIONS: usize = 40;

/// Bisection on `ln c` over `[10⁻³, 10³]`.
pub fn bisect_critical<F: Fn(f64) -> Verdict>(verdict_at: F) -> CriticalConstant {
    let lo_v = verdict_at(BISECTION_C_MIN);
    let hi_v = verdict_at(BISECTION_C_MAX);
    let make = |value, lower, upper, status, iterations| CriticalConstant {
        value,
        lower,
        upper,
        status,
        iterations,
    };
    match (lo_v, hi_v) {
        (Verdict::Finite, _) => return make(0.0, 0.0, BISECTION_C_MIN, CriticalStatus::Zero, 0),
        (Verdict::Divergent, Verdict::Divergent) => {
            return make(f64::INFINITY, BISECTION_C_MAX, f64::INFINITY, CriticalStatus::Infinite, 0)
        }
        (Verdict::Divergent, Verdict::Finite) => {}
        _ => {
            return make(
                f64::NAN,
                BISECTION_C_MIN,
                BISECTION_C_MAX,
                CriticalStatus::Inconclusive,
                0,
            )
        }
    }
    let (mut lo, mut hi) = (BISECTION_C_MIN.ln(), BISECTION_C_MAX.ln());
    for it in 0..BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        match verdict_at(mid.exp()) {
            Verdict::Divergent => lo = mid,
            Verdict::Finite => hi = mid,
            Verdict::Inconclusive => {
                return make(
                    mid.exp(),
                    lo.exp(),
                    hi.exp(),
                    CriticalStatus::Bracketed,
                    it + 1,
                )
            }
        }
    }
    make(
        (0.5 * (lo + hi)).exp(),
        lo.exp(),
        hi.exp(),
        CriticalStatus::Resolved,
        BISECTION_ITERATIONS,
    )
}

/// Mass of `φ₀²` outside the ball of radius `s`: grid sum inside the
/// certified window, closed-form integral of the fitted radial tail beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryTail {
    pub d: usize,
    pub window: f64,
    pub tail: TailModel,
    /// Node radii inside the window, descending.
    radii: Vec<f64>,
    /// Normalized mass at radius ≥ `radii[i]`, excluding the analytic tail.
    cumulative: Vec<f64>,
    /// `ln` of the normalized analytic mass beyond the window.
    ln_tail_at_window: f64,
    /// `ln A²` with `φ₀² ≈ A² e^{2·shape(r)}` beyond the window (normalized).
    ln_amp2: f64,
}

impl StationaryTail {
    pub fn new(sol: &SpectralSolution) -> Result<Self> {
        let lp = LogPhi::new(sol)?;
        let grid = sol.grid;
        let d = grid.d;
        let hv = grid.cell_volume();
        let w = lp.window;
        let dirs: Vec<Vec<f64>> = match d {
            1 => vec![vec![w], vec![-w]],
            _ => (0..32)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 32.0;
                    vec![w * a.cos(), w * a.sin()]
                })
                .collect(),
        };
        // Mean of φ₀² on the sphere of radius w, on the log scale.
        let mean_sq = dirs
            .iter()
            .map(|x| (2.0 * lp.eval(x)).exp())
            .sum::<f64>()
            / dirs.len() as f64;
        let ln_amp2 = mean_sq.ln() - 2.0 * lp.tail.shape(w);
        let ln_tail_raw = ln_analytic_mass(d, lp.tail, ln_amp2, w.ln())?;

        let mut nodes: Vec<(f64, f64)> = (0..grid.len())
            .map(|i| (grid.radius(i), (2.0 * lp.ln_phi[i]).exp() * hv))
            .filter(|(r, _)| *r <= w)
            .collect();
        nodes.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total = nodes.iter().map(|n| n.1).sum::<f64>() + ln_tail_raw.exp();
        let mut radii: Vec<f64> = Vec::with_capacity(nodes.len());
        let mut cumulative: Vec<f64> = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        for (r, m) in nodes {
            acc += m / total;
            match radii.last() {
                Some(last) if (last - r).abs() <= 1e-12 * w => {
                    *cumulative.last_mut().expect("paired") = acc;
                }
                _ => {
                    radii.push(r);
                    cumulative.push(acc);
                }
            }
        }
        Ok(Self {
            d,
            window: w,
            tail: lp.tail,
            radii,
            cumulative,
            ln_tail_at_window: ln_tail_raw - total.ln(),
            ln_amp2: ln_amp2 - total.ln(),
        })
    }

    /// `ln ∫_{|x| ≥ s} φ₀² dx` (normalized) from `ln s`.
    pub fn ln_mass_beyond(&self, ln_s: f64) -> f64 {
        if ln_s > self.window.ln() {
            return ln_analytic_mass(self.d, self.tail, self.ln_amp2, ln_s).unwrap_or(f64::NEG_INFINITY);
        }
        let s = ln_s.exp();
        // Radii are descending; interpolate the shell masses linearly so
        // that the tail mass is continuous in s.
        let k = self.radii.partition_point(|r| *r >= s);
        let grid_part = if k == self.radii.len() {
            *self.cumulative.last().unwrap_or(&0.0)
        } else {
            let (r_hi, m_hi) = if k == 0 {
                (self.window, 0.0)
            } else {
                (self.radii[k - 1], self.cumulative[k - 1])
            };
            let (r_lo, m_lo) = (self.radii[k], self.cumulative[k]);
            if r_hi > r_lo {
                m_hi + (m_lo - m_hi) * (r_hi - s) / (r_hi - r_lo)
            } else {
                m_lo
            }
        };
        ln_add_exp(grid_part.ln(), self.ln_tail_at_window)
    }
}

// ln of A² · |S^{d−1}| · ∫_s^∞ r^{d−1} e^{2·shape(r)} dr.
fn ln_analytic_mass(d: usize, tail: TailModel, ln_amp2: f64, ln_s: f64) -> Result<f64> {
    let ln_area = match d {
        1 => 2f64.ln(),
        _ => std::f64::consts::TAU.ln(),
    };
    let s = ln_s.exp();
    let j = match (tail, d) {
        (TailModel::Gaussian { q }, 1) if q > 0.0 => {
            (0.5 * (std::f64::consts::PI / (2.0 * q)).sqrt()).ln() + ln_erfc(s * (2.0 * q).sqrt())
        }
        (TailModel::Gaussian { q }, _) if q > 0.0 => -2.0 * q * s * s - (4.0 * q).ln(),
        (TailModel::Exponential { k }, 1) if k > 0.0 => -2.0 * k * s - (2.0 * k).ln(),
        (TailModel::Exponential { k }, _) if k > 0.0 => {
            if s.is_infinite() {
                f64::NEG_INFINITY
            } else {
                -2.0 * k * s + (s / (2.0 * k) + 1.0 / (4.0 * k * k)).ln()
            }
        }
        (TailModel::Power { p }, _) if 2.0 * p > d as f64 => {
            let e = 2.0 * p - d as f64;
            -e * ln_s - e.ln()
        }
        _ => {
            return Err(Error::NotApplicable(format!(
                "fitted tail {tail:?} is not square integrable"
            )))
        }
    };
    Ok(ln_area + ln_amp2 + j)
}

/// Result of the general integral test `I_{φ₀}(c, τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralTestReport {
    pub c: f64,
    pub classification: Classification,
}

/// `I_{φ₀}(c,τ) = ∫_1^∞ dr ∫_{|x| ≥ τ(r)} φ₀²(c x) dx
///             = ∫_1^∞ c^{−d} M(c τ(r)) dr`, with `M` the tail mass of `φ₀²`.
pub fn integral_test_general(sol: &SpectralSolution, tau: &ProfileFunction, c: f64) -> Result<GeneralTestReport> {
    let tail = StationaryTail::new(sol)?;
    general_with_tail(&tail, tau, c)
}

pub fn general_with_tail(tail: &StationaryTail, tau: &ProfileFunction, c: f64) -> Result<GeneralTestReport> {
    tau.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", "must be positive"));
    }
    let d = tail.d as f64;
    let ln_c = c.ln();
    let classification = classify_ln_integrand(
        |u| tail.ln_mass_beyond(ln_c + tau.ln_tau(u)) - d * ln_c,
        tau.ln_r_min(),
    );
    Ok(GeneralTestReport { c, classification })
}

/// `c_{φ₀}(τ)` by bisection of the general test.
pub fn critical_constant_general(sol: &SpectralSolution, tau: &ProfileFunction) -> Result<CriticalConstant> {
    let tail = StationaryTail::new(sol)?;
    tau.validate()?;
    Ok(bisect_critical(|c| {
        general_with_tail(&tail, tau, c)
            .map(|r| r.classification.verdict)
            .unwrap_or(Verdict::Inconclusive)
    }))
}

/// Profile data for the explicit integrals of the confining and decaying
/// regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSetting {
    pub density: DensityProfile,
    /// Confining potential supplying `g^{up}`, `g^{low}`; `None` for the
    /// decaying regime.
    pub potential: Option<Potential>,
    pub kappa: KappaFunction,
}

/// Which integrand to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "integral", rename_all = "snake_case")]
pub enum ProfileIntegral {
    /// `∫ (g^{low}(cτ) f(cτ))² τ^d / κ(τ) dr`.
    Low,
    /// `∫ (g^{up}(cτ) f(cτ))² τ^d / κ(τ) dr`.
    Up,
    /// `∫ f(cτ)² τ^d / κ(τ) dr`.
    NuKappa,
    /// `∫ exp(−2cθ√(|λ₀|+ε) τ) τ^{d−1} dr`.
    LambdaEps { theta: f64, lambda0: f64, epsilon: f64 },
}

impl ProfileSetting {
    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        self.kappa.validate()?;
        if let Some(p) = &self.potential {
            p.validate(self.density.d)?;
            if p.ln_one_vee_envelopes_ln(1.0).is_none() {
                return Err(Error::NotApplicable(
                    "profile integrals need a radial potential with closed-form envelopes".into(),
                ));
            }
        }
        Ok(())
    }

    /// `ln` of the `r`-integrand at `ln r`.
    pub fn ln_integrand(&self, which: ProfileIntegral, tau: &ProfileFunction, c: f64, ln_r: f64) -> f64 {
        let d = self.density.d as f64;
        let lt = tau.ln_tau(ln_r);
        let ls = c.ln() + lt;
        let ln_f = |ls: f64| self.density.ln_value_ln(ls);
        let weight = d * lt - self.kappa.ln_eval_ln(lt);
        match which {
            ProfileIntegral::NuKappa => 2.0 * ln_f(ls) + weight,
            ProfileIntegral::Low | ProfileIntegral::Up => {
                let Some(p) = &self.potential else {
                    return f64::NAN;
                };
                let Some((ln_up, ln_low)) = p.ln_one_vee_envelopes_ln(ls) else {
                    return f64::NAN;
                };
                // g^{low} = 1/(1 ∨ V_low) ≥ g^{up} = 1/(1 ∨ V_up).
                let ln_g = if matches!(which, ProfileIntegral::Low) {
                    -ln_low
                } else {
                    -ln_up
                };
                2.0 * (ln_f(ls) + ln_g) + weight
            }
            ProfileIntegral::LambdaEps {
                theta,
                lambda0,
                epsilon,
            } => -2.0 * c * theta * (lambda0.abs() + epsilon).sqrt() * lt.exp() + (d - 1.0) * lt,
        }
    }

    pub fn classify(&self, which: ProfileIntegral, tau: &ProfileFunction, c: f64) -> Classification {
        classify_ln_integrand(|u| self.ln_integrand(which, tau, c, u), tau.ln_r_min())
    }

    pub fn critical(&self, which: ProfileIntegral, tau: &ProfileFunction) -> CriticalConstant {
        bisect_critical(|c| self.classify(which, tau, c).verdict)
    }
}

/// Classifications and induced constants of the explicit integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTestReport {
    pub c: f64,
    pub low: Option<Classification>,
    pub up: Option<Classification>,
    pub nu_kappa: Option<Classification>,
    pub lambda_eps: Option<Classification>,
    /// `inf{c : I^{low}(c,τ) < ∞}`.
    pub c_low: Option<CriticalConstant>,
    /// `sup{c : I^{up}(c,τ) = ∞}`.
    pub c_up: Option<CriticalConstant>,
    /// `inf{c : I_{ν,κ}(c,τ) < ∞}`.
    pub c_nu_kappa: Option<CriticalConstant>,
    /// `sup{c : I^ε_{λ₀,κ}(c,τ) = ∞}`.
    pub c_lambda_eps: Option<CriticalConstant>,
    pub inconclusive: bool,
}

/// Runs the explicit integral tests at scale `c` and bisects the induced
/// constants. With a potential the confining pair `I^{low}`, `I^{up}` is
/// evaluated; without one, `I_{ν,κ}` and, when `eps_params` is given,
/// `I^ε_{λ₀,κ}`.
pub fn integral_test_profile(
    setting: &ProfileSetting,
    tau: &ProfileFunction,
    c: f64,
    eps_params: Option<ProfileIntegral>,
) -> Result<ProfileTestReport> {
    setting.validate()?;
    tau.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", "must be positive"));
    }
    let mut report = ProfileTestReport {
        c,
        low: None,
        up: None,
        nu_kappa: None,
        lambda_eps: None,
        c_low: None,
        c_up: None,
        c_nu_kappa: None,
        c_lambda_eps: None,
        inconclusive: false,
    };
    if setting.potential.is_some() {
        let ((low, up), (c_low, c_up)) = rayon::join(
            || {
                (
                    setting.classify(ProfileIntegral::Low, tau, c),
                    setting.classify(ProfileIntegral::Up, tau, c),
                )
            },
            || {
                rayon::join(
                    || setting.critical(ProfileIntegral::Low, tau),
                    || setting.critical(ProfileIntegral::Up, tau),
                )
            },
        );
        report.low = Some(low);
        report.up = Some(up);
        report.c_low = Some(c_low);
        report.c_up = Some(c_up);
    } else {
        report.nu_kappa = Some(setting.classify(ProfileIntegral::NuKappa, tau, c));
        report.c_nu_kappa = Some(setting.critical(ProfileIntegral::NuKappa, tau));
        if let Some(which @ ProfileIntegral::LambdaEps { .. }) = eps_params {
            report.lambda_eps = Some(setting.classify(which, tau, c));
            report.c_lambda_eps = Some(setting.critical(which, tau));
        }
    }
    let cls = [&report.low, &report.up, &report.nu_kappa, &report.lambda_eps];
    let crit = [&report.c_low, &report.c_up, &report.c_nu_kappa, &report.c_lambda_eps];
    report.inconclusive = cls
        .iter()
        .any(|c| c.as_ref().is_some_and(|c| c.verdict == Verdict::Inconclusive))
        || crit
            .iter()
            .any(|c| c.as_ref().is_some_and(|c| c.status == CriticalStatus::Inconclusive));
    Ok(report)
}

/// Catalogued regimes with closed-form escape constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum EscapeCase {
    /// Confining `V = e^{η r^ϑ} r^ρ log(1+r)^σ` with density profile `f`.
    Confining {
        density: DensityProfile,
        eta: f64,
        vartheta: f64,
        rho: f64,
        sigma: f64,
        delta: Option<f64>,
    },
    /// Decaying potential with density profile `f`. For exponential
    /// (class L3) profiles `low_lying` selects between `φ₀ ≍ 1 ∧ ν` and the
    /// eigenvalue-controlled regime, where `theta` is required.
    Decaying {
        density: DensityProfile,
        lambda0: f64,
        low_lying: bool,
        theta: Option<f64>,
        delta: Option<f64>,
    },
    /// `log f + log g = −A R(r) + o(R(r))` with `R` regularly varying.
    RegularlyVarying {
        a: f64,
        lambda: f64,
        slowly: SlowlyVarying,
    },
    OrnsteinUhlenbeck { gamma: f64 },
    BrownianWell { lambda0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PotentialDominated,
    Balanced,
    JumpDominated,
    PolynomialJumpsExpPotential,
    PolynomialJumpsPolynomialPotential,
    DecayingPolynomial,
    DecayingStretched,
    DecayingLowLying,
    DecayingNearZero,
    RegularlyVarying,
    OrnsteinUhlenbeck,
    BrownianWell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Exact,
    LowerBound,
}

/// `limsup |X_n| / τ(n) = value` (or `≥ value`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeConstant {
    pub regime: Regime,
    pub profile: ProfileFunction,
    pub value: f64,
    pub kind: ConstantKind,
}

fn delta_required(delta: Option<f64>) -> Result<f64> {
    match delta {
        Some(d) if d > 0.0 && d.is_finite() => Ok(d),
        _ => Err(invalid(
            "delta",
            "iterated-log profile requires δ > 0 (with θ₁ fixed by the model)",
        )),
    }
}

fn zero_or_infinity(delta: f64) -> f64 {
    if delta > 1.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Closed-form escape constant and matching profile for a catalogued case.
pub fn escape_constant(case: &EscapeCase) -> Result<EscapeConstant> {
    let exact = |regime, profile, value| EscapeConstant {
        regime,
        profile,
        value,
        kind: ConstantKind::Exact,
    };
    match case {
        EscapeCase::Confining {
            density,
            eta,
            vartheta,
            rho,
            sigma,
            delta,
        } => {
            density.validate()?;
            let exp_pot = *eta > 0.0 && *vartheta > 0.0;
            match density.classify() {
                ProfileClass::L2 | ProfileClass::L3 => {
                    let (mu, beta) = (density.mu, density.beta);
                    if exp_pot && *vartheta > beta {
                        Ok(exact(
                            Regime::PotentialDominated,
                            ProfileFunction::log_power(*vartheta),
                            (2.0 * eta).powf(-1.0 / vartheta),
                        ))
                    } else if exp_pot && *vartheta == beta {
                        Ok(exact(
                            Regime::Balanced,
                            ProfileFunction::log_power(*vartheta),
                            (2.0 * (mu + eta)).powf(-1.0 / vartheta),
                        ))
                    } else {
                        Ok(exact(
                            Regime::JumpDominated,
                            ProfileFunction::log_power(beta),
                            (2.0 * mu).powf(-1.0 / beta),
                        ))
                    }
                }
                ProfileClass::L1 if exp_pot => Ok(exact(
                    Regime::PolynomialJumpsExpPotential,
                    ProfileFunction::log_power(*vartheta),
                    (2.0 * eta).powf(-1.0 / vartheta),
                )),
                ProfileClass::L1 if *eta == 0.0 => {
                    let delta = delta_required(*delta)?;
                    Ok(exact(
                        Regime::PolynomialJumpsPolynomialPotential,
                        ProfileFunction::IteratedLogPower {
                            gamma: density.gamma + rho,
                            d: density.d,
                            thetas: vec![-sigma],
                            delta,
                        },
                        zero_or_infinity(delta),
                    ))
                }
                _ => Err(Error::Uncatalogued(format!("confining case {case:?}"))),
            }
        }
        EscapeCase::Decaying {
            density,
            lambda0,
            low_lying,
            theta,
            delta,
        } => {
            density.validate()?;
            if !(*lambda0 < 0.0) {
                return Err(invalid("lambda0", "decaying regime needs λ₀ < 0"));
            }
            match density.classify() {
                ProfileClass::L1 => {
                    let delta = delta_required(*delta)?;
                    Ok(exact(
                        Regime::DecayingPolynomial,
                        ProfileFunction::IteratedLogPower {
                            gamma: density.gamma,
                            d: density.d,
                            thetas: vec![0.0],
                            delta,
                        },
                        zero_or_infinity(delta),
                    ))
                }
                ProfileClass::L2 => Ok(exact(
                    Regime::DecayingStretched,
                    ProfileFunction::log_power(density.beta),
                    (2.0 * density.mu).powf(-1.0 / density.beta),
                )),
                ProfileClass::L3 if *low_lying => Ok(exact(
                    Regime::DecayingLowLying,
                    ProfileFunction::log_power(1.0),
                    1.0 / (2.0 * density.mu),
                )),
                ProfileClass::L3 => {
                    let theta = theta
                        .filter(|t| *t > 0.0)
                        .ok_or_else(|| invalid("theta", "eigenvalue-controlled regime needs θ > 0"))?;
                    Ok(EscapeConstant {
                        regime: Regime::DecayingNearZero,
                        profile: ProfileFunction::log_power(1.0),
                        value: 1.0 / (2.0 * theta * lambda0.abs().sqrt()),
                        kind: ConstantKind::LowerBound,
                    })
                }
                ProfileClass::Unsupported => Err(Error::Uncatalogued(format!("decaying case {case:?}"))),
            }
        }
        EscapeCase::RegularlyVarying { a, lambda, slowly } => {
            if !(*a > 0.0) {
                return Err(invalid("a", "must be positive"));
            }
            RegVarFunction::new(*lambda, *slowly)?;
            Ok(exact(
                Regime::RegularlyVarying,
                ProfileFunction::LogPower {
                    lambda: *lambda,
                    slowly: *slowly,
                },
                (2.0 * a).powf(-1.0 / lambda),
            ))
        }
        EscapeCase::OrnsteinUhlenbeck { gamma } => {
            if !(*gamma > 0.0) {
                return Err(invalid("gamma", "must be positive"));
            }
            Ok(exact(
                Regime::OrnsteinUhlenbeck,
                ProfileFunction::log_power(2.0),
                1.0 / gamma.sqrt(),
            ))
        }
        EscapeCase::BrownianWell { lambda0 } => {
            if !(*lambda0 < 0.0) {
                return Err(invalid("lambda0", "needs a bound state λ₀ < 0"));
            }
            Ok(exact(
                Regime::BrownianWell,
                ProfileFunction::log_power(1.0),
                1.0 / (2.0 * (2.0 * lambda0.abs()).sqrt()),
            ))
        }
    }
}

/// Events `|X_n| ≥ c τ(n)` after burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub c: f64,
    pub count: usize,
    pub last_index: Option<usize>,
}

/// Running maximum of `|X_n|/τ(n)` and exceedance counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLimsup {
    pub n_max: usize,
    pub burn_in: usize,
    /// `(n, running max)` at logarithmically spaced checkpoints.
    pub trace: Vec<(usize, f64)>,
    pub c_hat: f64,
    /// Heuristic band `ĉ (1 ± 1/ln n_max)`, the relative Gumbel scale of
    /// the maximum of `n_max` light-tailed draws.
    pub band: (f64, f64),
    pub exceedances: Vec<Exceedance>,
}

impl EmpiricalLimsup {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("n,running_max\n");
        for (n, m) in &self.trace {
            s.push_str(&format!("{n},{m:.12e}\n"));
        }
        s
    }

    pub fn exceedance_csv(&self) -> String {
        let mut s = String::from("c,count,last_index\n");
        for e in &self.exceedances {
            let last = e.last_index.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{:.12e},{},{}\n", e.c, e.count, last));
        }
        s
    }
}

pub const LIMSUP_MIN_N: usize = 1000;

/// `norms[k] = |X_{k+1}|`. Indices before `max(⌈√n_max⌉, τ-domain)` are
/// discarded as burn-in.
pub fn empirical_limsup(norms: &[f64], tau: &ProfileFunction, c_grid: &[f64]) -> Result<EmpiricalLimsup> {
    let n_max = norms.len();
    if n_max < LIMSUP_MIN_N {
        return Err(invalid("n_max", format!("{n_max} < {LIMSUP_MIN_N}")));
    }
    tau.validate()?;
    let dom = tau.ln_r_min().exp().ceil() as usize + 1;
    let burn_in = ((n_max as f64).sqrt().ceil() as usize).max(dom).max(2);
    if burn_in >= n_max {
        return Err(invalid("n_max", "too short for the profile domain"));
    }
    let ratios: Vec<f64> = (burn_in..=n_max)
        .into_par_iter()
        .map(|n| norms[n - 1] / tau.ln_tau((n as f64).ln()).exp())
        .collect();
    let mut checkpoints: Vec<usize> = (0..=200)
        .map(|i| {
            let l = (burn_in as f64).ln() + ((n_max as f64).ln() - (burn_in as f64).ln()) * i as f64 / 200.0;
            l.exp().round() as usize
        })
        .map(|n| n.clamp(burn_in, n_max))
        .collect();
    checkpoints.dedup();
    let mut trace = Vec::with_capacity(checkpoints.len());
    let mut run = f64::NEG_INFINITY;
    let mut next = 0;
    for (k, r) in ratios.iter().enumerate() {
        let n = burn_in + k;
        run = run.max(*r);
        if next < checkpoints.len() && n == checkpoints[next] {
            trace.push((n, run));
            next += 1;
        }
    }
    let c_hat = run;
    let rel = 1.0 / (n_max as f64).ln();
    let exceedances = c_grid
        .par_iter()
        .map(|&c| {
            let mut count = 0;
            let mut last = None;
            for (k, r) in ratios.iter().enumerate() {
                if *r >= c {
                    count += 1;
                    last = Some(burn_in + k);
                }
            }
            Exceedance {
                c,
                count,
                last_index: last,
            }
        })
        .collect();
    Ok(EmpiricalLimsup {
        n_max,
        burn_in,
        trace,
        c_hat,
        band: (c_hat * (1.0 - rel), c_hat * (1.0 + rel)),
        exceedances,
    })
}

// n points geometric between a and b (inclusive), a, b > 0.
fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
