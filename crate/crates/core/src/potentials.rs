//! Confining and decaying potentials, unit-ball envelopes and spherical
//! profiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Potential {
    /// `coeff·|x|^{2n} + offset`.
    Polynomial { coeff: f64, n: u32, offset: f64 },
    /// `|x|⁴ − b|x|²`.
    DoubleWell { b: f64 },
    /// `e^{η r^ϑ} r^ρ log(1+r)^σ`.
    ExpPolyLog {
        eta: f64,
        vartheta: f64,
        rho: f64,
        sigma: f64,
    },
    /// `−depth` on the closed ball of radius `radius`, zero outside.
    Well { depth: f64, radius: f64 },
    /// `−min(a1 r^{−β1}, a2 r^{−β2})`.
    Coulomb { a1: f64, beta1: f64, a2: f64, beta2: f64 },
    /// `−min(a1 r^{−β1}, a2 r^{−β2} e^{−b r})`.
    Yukawa {
        a1: f64,
        beta1: f64,
        a2: f64,
        beta2: f64,
        b: f64,
    },
    /// `−a / cosh²(b r)`.
    PoschlTeller { a: f64, b: f64 },
    /// `a((1 − e^{−b(r − r0)})² − 1)`.
    Morse { a: f64, b: f64, r0: f64 },
    /// Tabulated one-dimensional potential, linearly interpolated and
    /// extrapolated with the end slopes.
    Custom {
        nodes: Vec<f64>,
        values: Vec<f64>,
        kind: PotentialKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Confining,
    Decaying,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Increasing,
    Valley(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitBallEnvelope {
    pub v_up: f64,
    pub v_low: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlmostConstantReport {
    pub radii: Vec<f64>,
    /// `(1 ∨ V_up)/(1 ∨ V_low)` along the test rays.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub almost_constant: bool,
}

/// Reporting threshold for the almost-constant diagnostic.
pub const ALMOST_CONSTANT_RATIO: f64 = 4.0;
/// Default number of sample points for sampled envelopes.
pub const DEFAULT_SAMPLES: usize = 64;

impl Potential {
    pub fn harmonic() -> Self {
        Potential::Polynomial {
            coeff: 1.0,
            n: 1,
            offset: 0.0,
        }
    }

    /// `γ²x²/2 − γ/2`, whose Brownian ground state is Gaussian.
    pub fn ornstein_uhlenbeck(gamma: f64) -> Self {
        Potential::Polynomial {
            coeff: 0.5 * gamma * gamma,
            n: 1,
            offset: -0.5 * gamma,
        }
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            Potential::Polynomial { .. }
            | Potential::DoubleWell { .. }
            | Potential::ExpPolyLog { .. } => PotentialKind::Confining,
            Potential::Custom { kind, .. } => *kind,
            _ => PotentialKind::Decaying,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be positive")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be nonnegative")))
            }
        };
        match self {
            Potential::Polynomial { coeff, n, offset } => {
                pos("coeff", *coeff)?;
                if *n == 0 {
                    return Err(invalid("n", "must be at least 1"));
                }
                if !offset.is_finite() {
                    return Err(invalid("offset", "must be finite"));
                }
                Ok(())
            }
            Potential::DoubleWell { b } => pos("b", *b),
            Potential::ExpPolyLog {
                eta,
                vartheta,
                rho,
                sigma,
            } => {
                nonneg("eta", *eta)?;
                nonneg("vartheta", *vartheta)?;
                nonneg("rho", *rho)?;
                nonneg("sigma", *sigma)?;
                let grows = (*eta > 0.0 && *vartheta > 0.0) || *rho > 0.0 || *sigma > 0.0;
                if grows {
                    Ok(())
                } else {
                    Err(invalid("exp_poly_log", "parameters do not give a confining potential"))
                }
            }
            Potential::Well { depth, radius } => {
                pos("depth", *depth)?;
                pos("radius", *radius)
            }
            Potential::Coulomb { a1, beta1, a2, beta2 } => {
                pos("a1", *a1)?;
                pos("a2", *a2)?;
                pos("beta1", *beta1)?;
                if beta2 < beta1 {
                    return Err(invalid("beta2", "must be at least beta1"));
                }
                Ok(())
            }
            Potential::Yukawa {
                a1,
                beta1,
                a2,
                beta2,
                b,
            } => {
                pos("a1", *a1)?;
                pos("a2", *a2)?;
                pos("beta1", *beta1)?;
                pos("b", *b)?;
                if beta2 < beta1 {
                    return Err(invalid("beta2", "must be at least beta1"));
                }
                Ok(())
            }
            Potential::PoschlTeller { a, b } => {
                pos("a", *a)?;
                pos("b", *b)
            }
            Potential::Morse { a, b, r0 } => {
                pos("a", *a)?;
                pos("b", *b)?;
                nonneg("r0", *r0)
            }
            Potential::Custom { nodes, values, .. } => {
                if d != 1 {
                    return Err(invalid("custom", "tabulated potentials are one-dimensional"));
                }
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(invalid("nodes", "need at least two nodes matching values"));
                }
                if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("nodes", "must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    fn is_radial(&self) -> bool {
        !matches!(self, Potential::Custom { .. })
    }

    /// Radial profile `v(r)` with `V(x) = v(|x|)`; custom tables are evaluated
    /// at `r` directly.
    pub fn radial(&self, r: f64) -> f64 {
        match self {
            Potential::Polynomial { coeff, n, offset } => coeff * r.powi(2 * *n as i32) + offset,
            Potential::DoubleWell { b } => {
                let r2 = r * r;
                r2 * r2 - b * r2
            }
            Potential::ExpPolyLog {
                eta,
                vartheta,
                rho,
                sigma,
            } => {
                let mut v = (eta * r.powf(*vartheta)).exp();
                if *rho != 0.0 {
                    v *= r.powf(*rho);
                }
                if *sigma != 0.0 {
                    v *= r.ln_1p().powf(*sigma);
                }
                v
            }
            Potential::Well { depth, radius } => {
                if r <= *radius {
                    -depth
                } else {
                    0.0
                }
            }
            Potential::Coulomb { a1, beta1, a2, beta2 } => {
                -(a1 * r.powf(-beta1)).min(a2 * r.powf(-beta2))
            }
            Potential::Yukawa {
                a1,
                beta1,
                a2,
                beta2,
                b,
            } => -(a1 * r.powf(-beta1)).min(a2 * r.powf(-beta2) * (-b * r).exp()),
            Potential::PoschlTeller { a, b } => -a / (b * r).cosh().powi(2),
            Potential::Morse { a, b, r0 } => {
                let e = 1.0 - (-b * (r - r0)).exp();
                a * (e * e - 1.0)
            }
            Potential::Custom { nodes, values, .. } => interp_table(nodes, values, r),
        }
    }

    fn shape(&self) -> Option<Shape> {
        match self {
            Potential::Polynomial { .. }
            | Potential::ExpPolyLog { .. }
            | Potential::Well { .. }
            | Potential::Coulomb { .. }
            | Potential::Yukawa { .. }
            | Potential::PoschlTeller { .. } => Some(Shape::Increasing),
            Potential::DoubleWell { b } => Some(Shape::Valley((b / 2.0).sqrt())),
            Potential::Morse { r0, .. } => Some(Shape::Valley(*r0)),
            Potential::Custom { .. } => None,
        }
    }

    /// `V(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Custom { nodes, values, .. } => interp_table(nodes, values, x[0]),
            _ => self.radial(norm(x)),
        }
    }

    /// Value used on a grid with spacing `h`: singular families are evaluated
    /// no closer than `h/2` to the origin.
    pub fn eval_regularized(&self, x: &[f64], h: f64) -> f64 {
        match self {
            Potential::Coulomb { .. } | Potential::Yukawa { .. } => {
                self.radial(norm(x).max(0.5 * h))
            }
            _ => self.eval(x),
        }
    }

    /// Radius beyond which `V_up ≤ 1`, so both spherical profiles equal 1.
    pub fn decay_radius(&self) -> Option<f64> {
        match self {
            Potential::Well { .. }
            | Potential::Coulomb { .. }
            | Potential::Yukawa { .. }
            | Potential::PoschlTeller { .. } => Some(1.0),
            Potential::Morse { r0, .. } => Some((r0 + 1.0).max(1.0)),
            _ => None,
        }
    }

    /// Closed-form envelope over `B(x,1)` for radial families.
    pub fn envelope_closed_form(&self, x: &[f64]) -> Option<UnitBallEnvelope> {
        let shape = self.shape()?;
        let r = norm(x);
        let lo = (r - 1.0).max(0.0);
        let hi = r + 1.0;
        let (v_lo, v_hi) = (self.radial(lo), self.radial(hi));
        Some(match shape {
            Shape::Increasing => UnitBallEnvelope {
                v_up: v_hi,
                v_low: v_lo,
            },
            Shape::Valley(rm) => UnitBallEnvelope {
                v_up: v_lo.max(v_hi),
                v_low: self.radial(rm.clamp(lo, hi)),
            },
        })
    }

    /// Envelope by deterministic sampling of the closed unit ball.
    pub fn envelope_sampled(&self, x: &[f64], samples: usize) -> UnitBallEnvelope {
        let pts = ball_points(x, samples);
        let mut v_up = f64::NEG_INFINITY;
        let mut v_low = f64::INFINITY;
        for p in &pts {
            let v = self.eval(p);
            v_up = v_up.max(v);
            v_low = v_low.min(v);
        }
        UnitBallEnvelope { v_up, v_low }
    }

    /// `(1 ∨ V_up)` and `(1 ∨ V_low)` on the log scale at radius `e^{ln_r}`,
    /// for radial families; valid for radii far beyond `f64` range.
    pub fn ln_one_vee_envelopes_ln(&self, ln_r: f64) -> Option<(f64, f64)> {
        let shape = self.shape()?;
        let ln_v = |ln_s: f64| self.ln_radial_ln(ln_s);
        // ln(r ± 1) = ln r + ln(1 ± e^{−ln r})
        let ln_hi = ln_r + (-ln_r).exp().ln_1p();
        let ln_lo = if ln_r > 0.0 {
            let t = -(-ln_r).exp();
            if t <= -1.0 {
                f64::NEG_INFINITY
            } else {
                ln_r + t.ln_1p()
            }
        } else {
            f64::NEG_INFINITY
        };
        let lv_hi = ln_v(ln_hi);
        let lv_lo = ln_v(ln_lo);
        let (up, low) = match shape {
            Shape::Increasing => (lv_hi, lv_lo),
            Shape::Valley(rm) => {
                let r = ln_r.exp();
                let low = if rm >= r - 1.0 && rm <= r + 1.0 {
                    ln_v(rm.ln())
                } else if rm < r - 1.0 {
                    lv_lo
                } else {
                    lv_hi
                };
                (lv_lo.max(lv_hi), low)
            }
        };
        Some((up.max(0.0), low.max(0.0)))
    }

    /// `ln v(r)` from `ln r` where `v > 0`; `−∞` where `v ≤ 0`.
    pub fn ln_radial_ln(&self, ln_r: f64) -> f64 {
        let from_value = |v: f64| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
        match self {
            Potential::ExpPolyLog {
                eta,
                vartheta,
                rho,
                sigma,
            } => {
                let mut out = eta * (vartheta * ln_r).exp() + rho * ln_r;
                if *sigma != 0.0 {
                    // log(1 + r) = ln r + ln(1 + e^{−ln r})
                    let l1p = if ln_r > 30.0 {
                        ln_r + (-ln_r).exp()
                    } else {
                        ln_r.exp().ln_1p()
                    };
                    out += sigma * l1p.ln();
                }
                out
            }
            Potential::Polynomial { coeff, n, offset } if ln_r > 20.0 => {
                let lead = coeff.ln() + 2.0 * *n as f64 * ln_r;
                lead + (offset * (-lead).exp()).ln_1p()
            }
            Potential::DoubleWell { b } if ln_r > 20.0 => {
                4.0 * ln_r + (-b * (-2.0 * ln_r).exp()).ln_1p()
            }
            _ => from_value(self.radial(ln_r.exp())),
        }
    }

    /// Spherical profiles `(g_up, g_low)` at radius `r > 1`: root-mean-square
    /// of `(1 ∨ V_up)^{−1}` and `(1 ∨ V_low)^{−1}` over the sphere of radius
    /// `r`, with the normalized surface measure.
    pub fn g_profiles(&self, d: usize, r: f64) -> Result<(f64, f64)> {
        if !(r > 1.0) {
            return Err(invalid("r", "g profiles are defined for r > 1"));
        }
        if self.is_radial() {
            let env = self
                .envelope_closed_form(&radial_point(d, r, 0.0))
                .expect("radial family");
            return Ok((1.0 / env.v_up.max(1.0), 1.0 / env.v_low.max(1.0)));
        }
        let dirs = sphere_points(d, 64);
        let (mut su, mut sl) = (0.0, 0.0);
        for u in &dirs {
            let x: Vec<f64> = u.iter().map(|c| c * r).collect();
            let env = self.envelope_sampled(&x, DEFAULT_SAMPLES);
            su += env.v_up.max(1.0).powi(-2);
            sl += env.v_low.max(1.0).powi(-2);
        }
        let m = dirs.len() as f64;
        Ok(((su / m).sqrt(), (sl / m).sqrt()))
    }

    /// Almost-constant-on-unit-balls diagnostic along the coordinate axes.
    pub fn almost_constant(&self, d: usize) -> AlmostConstantReport {
        let radii: Vec<f64> = (0..32).map(|j| 10.0 * 100f64.powf(j as f64 / 31.0)).collect();
        let mut ratios = Vec::with_capacity(radii.len());
        for &r in &radii {
            let mut worst: f64 = 1.0;
            for sign in [-1.0, 1.0] {
                let x = radial_point(d, sign * r, 0.0);
                let env = self
                    .envelope_closed_form(&x)
                    .unwrap_or_else(|| self.envelope_sampled(&x, DEFAULT_SAMPLES));
                let q = env.v_up.max(1.0) / env.v_low.max(1.0);
                worst = worst.max(if q.is_finite() { q } else { f64::INFINITY });
            }
            ratios.push(worst);
        }
        let max_ratio = ratios.iter().copied().fold(1.0, f64::max);
        AlmostConstantReport {
            radii,
            almost_constant: max_ratio <= ALMOST_CONSTANT_RATIO,
            ratios,
            max_ratio,
        }
    }
}

/// Closed form where available, sampled otherwise.
pub fn unit_ball_envelope(v: &Potential, x: &[f64], samples: usize) -> Result<UnitBallEnvelope> {
    if samples < 8 {
        return Err(invalid("samples", "need at least 8 sample points"));
    }
    Ok(v
        .envelope_closed_form(x)
        .unwrap_or_else(|| v.envelope_sampled(x, samples)))
}

pub fn potential_eval(v: &Potential, x: &[f64]) -> f64 {
    v.eval(x)
}

pub fn g_profiles(v: &Potential, d: usize, r: f64) -> Result<(f64, f64)> {
    v.g_profiles(d, r)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn radial_point(d: usize, r: f64, angle: f64) -> Vec<f64> {
    match d {
        1 => vec![r],
        _ => {
            let mut p = vec![0.0; d];
            p[0] = r * angle.cos();
            p[1] = r * angle.sin();
            p
        }
    }
}

fn interp_table(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let seg = if x <= nodes[0] {
        0
    } else if x >= nodes[n - 1] {
        n - 2
    } else {
        nodes.partition_point(|&t| t <= x) - 1
    };
    let (x0, x1) = (nodes[seg], nodes[seg + 1]);
    let w = (x - x0) / (x1 - x0);
    values[seg] + w * (values[seg + 1] - values[seg])
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

/// Center, radial extremes, the point nearest the origin, and Halton points
/// filling the closed unit ball around `x`.
fn ball_points(x: &[f64], samples: usize) -> Vec<Vec<f64>> {
    let d = x.len();
    let r = norm(x);
    let unit: Vec<f64> = if r > 0.0 {
        x.iter().map(|v| v / r).collect()
    } else {
        let mut u = vec![0.0; d];
        u[0] = 1.0;
        u
    };
    let shift = |s: f64, dir: &[f64]| -> Vec<f64> {
        x.iter().zip(dir).map(|(a, b)| a + s * b).collect()
    };
    let mut pts = vec![x.to_vec(), shift(1.0, &unit), shift(-1.0, &unit)];
    // Nearest point of the ball to the origin.
    if r <= 1.0 {
        pts.push(vec![0.0; d]);
    }
    if d >= 2 {
        let perp = vec![-unit[1], unit[0]];
        let mut p = vec![0.0; d];
        p[0] = perp[0];
        p[1] = perp[1];
        pts.push(shift(1.0, &p));
        pts.push(shift(-1.0, &p));
    }
    for i in 1..=samples {
        match d {
            1 => {
                let t = 2.0 * radical_inverse(i, 2) - 1.0;
                pts.push(vec![x[0] + t]);
            }
            _ => {
                let rad = radical_inverse(i, 2).sqrt();
                let ang = 2.0 * PI * radical_inverse(i, 3);
                let mut p = x.to_vec();
                p[0] += rad * ang.cos();
                p[1] += rad * ang.sin();
                pts.push(p);
            }
        }
    }
    pts
}

fn sphere_points(d: usize, m: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..m)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / m as f64;
                let mut p = vec![0.0; d];
                p[0] = a.cos();
                p[1] = a.sin();
                p
            })
            .collect(),
    }
}
