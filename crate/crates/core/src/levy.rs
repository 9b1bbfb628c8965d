//! Isotropic Lévy models: symbols, exact Lévy densities and the two-regime
//! density profiles used by the tail theory.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::quad::{integrate, integrate_to_infinity, integrate_with_breaks, Tolerance};
use crate::special::{bessel_j0, bessel_k, one_minus_j0};

/// Two-regime profile `f(r) = r^{−d−α}` on `(0,1]`, `e^{−μ r^β} r^{−γ}` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub d: usize,
    pub alpha: f64,
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileClass {
    L1,
    L2,
    L3,
    Unsupported,
}

impl DensityProfile {
    pub fn new(d: usize, alpha: f64, mu: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            d,
            alpha,
            mu,
            beta,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Polynomial tail of an isotropic α-stable law.
    pub fn stable(d: usize, alpha: f64) -> Self {
        Self {
            d,
            alpha,
            mu: 0.0,
            beta: 0.0,
            gamma: d as f64 + alpha,
        }
    }

    /// Exponential tail of the relativistic α-stable law with mass `m`.
    pub fn relativistic(d: usize, alpha: f64, mass: f64) -> Self {
        Self {
            d,
            alpha,
            mu: mass.powf(1.0 / alpha),
            beta: 1.0,
            gamma: (d as f64 + 1.0 + alpha) / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "dimension must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid("alpha", format!("{} not in (0,2)", self.alpha)));
        }
        for (name, v) in [("mu", self.mu), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("{v} must be finite and nonnegative")));
            }
        }
        Ok(())
    }

    pub fn classify(&self) -> ProfileClass {
        let d = self.d as f64;
        if self.mu == 0.0 {
            if self.gamma > d {
                ProfileClass::L1
            } else {
                ProfileClass::Unsupported
            }
        } else if self.beta > 0.0 && self.beta < 1.0 {
            ProfileClass::L2
        } else if self.beta == 1.0 && self.gamma > (d + 1.0) / 2.0 {
            ProfileClass::L3
        } else {
            ProfileClass::Unsupported
        }
    }

    /// `f(r)` for `r > 0`.
    pub fn value(&self, r: f64) -> f64 {
        if r <= 1.0 {
            r.powf(-(self.d as f64) - self.alpha)
        } else {
            (-self.mu * r.powf(self.beta)).exp() * r.powf(-self.gamma)
        }
    }

    /// `ln f(r)` given `ln r`; usable far beyond the range of `f64` radii.
    pub fn ln_value_ln(&self, ln_r: f64) -> f64 {
        if ln_r <= 0.0 {
            (-(self.d as f64) - self.alpha) * ln_r
        } else {
            let tail = if self.mu == 0.0 {
                0.0
            } else {
                -self.mu * (self.beta * ln_r).exp()
            };
            tail - self.gamma * ln_r
        }
    }

    /// `d/dr ln f(r)` on the outer regime `r > 1`.
    pub fn ln_derivative(&self, r: f64) -> f64 {
        if r <= 1.0 {
            (-(self.d as f64) - self.alpha) / r
        } else {
            -self.mu * self.beta * r.powf(self.beta - 1.0) - self.gamma / r
        }
    }
}

/// Checked evaluation of the profile.
pub fn density_eval(profile: &DensityProfile, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("{r} must be positive and finite")));
    }
    Ok(profile.value(r))
}

pub fn classify_profile(profile: &DensityProfile) -> ProfileClass {
    profile.classify()
}

/// Closed-form family of the symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SymbolForm {
    /// `ψ = w|ξ|^α`.
    Stable { weight: f64 },
    /// `ψ = (|ξ|² + m^{2/α})^{α/2} − m`.
    Relativistic { mass: f64 },
    /// `ψ = w|ξ|^α + σ²|ξ|²/2` with `σ² > 0`.
    StablePlusDiffusion { weight: f64 },
    /// No jump part: `ψ = σ²|ξ|²/2`.
    Diffusion,
    /// `ν = f` exactly; `ψ` by quadrature.
    GenericFromDensity,
}

/// An isotropic Lévy model. The diffusion part contributes `σ²|ξ|²/2` to the
/// symbol, so the generator is `σ²Δ/2 + jump part`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    pub diffusion_coeff: f64,
    pub density_profile: DensityProfile,
    pub symbol_form: SymbolForm,
}

impl LevyModel {
    pub fn stable(d: usize, alpha: f64, weight: f64) -> Self {
        Self {
            diffusion_coeff: 0.0,
            density_profile: DensityProfile::stable(d, alpha),
            symbol_form: SymbolForm::Stable { weight },
        }
    }

    pub fn stable_plus_diffusion(d: usize, alpha: f64, weight: f64, sigma2: f64) -> Self {
        Self {
            diffusion_coeff: sigma2,
            density_profile: DensityProfile::stable(d, alpha),
            symbol_form: SymbolForm::StablePlusDiffusion { weight },
        }
    }

    pub fn relativistic(d: usize, alpha: f64, mass: f64) -> Self {
        Self {
            diffusion_coeff: 0.0,
            density_profile: DensityProfile::relativistic(d, alpha, mass),
            symbol_form: SymbolForm::Relativistic { mass },
        }
    }

    /// Brownian motion with generator `σ²Δ/2`. The profile is carried only
    /// for dimension bookkeeping.
    pub fn brownian(d: usize, sigma2: f64) -> Self {
        Self {
            diffusion_coeff: sigma2,
            density_profile: DensityProfile::stable(d, 1.0),
            symbol_form: SymbolForm::Diffusion,
        }
    }

    pub fn generic(profile: DensityProfile, sigma2: f64) -> Self {
        Self {
            diffusion_coeff: sigma2,
            density_profile: profile,
            symbol_form: SymbolForm::GenericFromDensity,
        }
    }

    pub fn dim(&self) -> usize {
        self.density_profile.d
    }

    pub fn has_jumps(&self) -> bool {
        !matches!(self.symbol_form, SymbolForm::Diffusion)
    }

    pub fn validate(&self) -> Result<()> {
        self.density_profile.validate()?;
        if !(self.diffusion_coeff >= 0.0 && self.diffusion_coeff.is_finite()) {
            return Err(invalid("sigma2", "must be finite and nonnegative"));
        }
        if self.dim() > 2 {
            return Err(invalid("d", "only d = 1 and d = 2 are supported"));
        }
        match self.symbol_form {
            SymbolForm::Stable { weight } | SymbolForm::StablePlusDiffusion { weight }
                if !(weight > 0.0) =>
            {
                Err(invalid("weight", "must be positive"))
            }
            SymbolForm::StablePlusDiffusion { .. } if self.diffusion_coeff <= 0.0 => {
                Err(invalid("sigma2", "stable_plus_diffusion needs sigma2 > 0"))
            }
            SymbolForm::Relativistic { mass } if !(mass > 0.0) => {
                Err(invalid("mass", "must be positive"))
            }
            SymbolForm::Diffusion if self.diffusion_coeff <= 0.0 => {
                Err(invalid("sigma2", "a pure diffusion needs sigma2 > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Radial Lévy density `ν(r)`; zero for a pure diffusion.
    pub fn levy_density(&self, r: f64) -> f64 {
        let d = self.dim() as f64;
        let alpha = self.density_profile.alpha;
        match self.symbol_form {
            SymbolForm::Stable { weight } | SymbolForm::StablePlusDiffusion { weight } => {
                weight * stable_constant(self.dim(), alpha) * r.powf(-d - alpha)
            }
            SymbolForm::Relativistic { mass } => {
                let order = 0.5 * (d + alpha);
                let m_root = mass.powf(1.0 / alpha);
                let pref = alpha * 2f64.powf(0.5 * (alpha - d)) * mass.powf(order / alpha)
                    / (PI.powf(0.5 * d) * gamma(1.0 - 0.5 * alpha));
                pref * bessel_k(order, m_root * r) / r.powf(order)
            }
            SymbolForm::Diffusion => 0.0,
            SymbolForm::GenericFromDensity => self.density_profile.value(r),
        }
    }

    /// `ψ(ξ)`; only `|ξ|` matters.
    pub fn symbol(&self, xi: &[f64]) -> Result<f64> {
        let k = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.symbol_radial(k)
    }

    /// `ψ` as a function of `|ξ|`.
    pub fn symbol_radial(&self, k: f64) -> Result<f64> {
        if !k.is_finite() {
            return Err(invalid("xi", "must be finite"));
        }
        let diffusion = 0.5 * self.diffusion_coeff * k * k;
        if k == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.density_profile.alpha;
        let jump = match self.symbol_form {
            SymbolForm::Stable { weight } | SymbolForm::StablePlusDiffusion { weight } => {
                weight * k.powf(alpha)
            }
            SymbolForm::Relativistic { mass } => {
                let m2 = mass.powf(2.0 / alpha);
                // (k² + m2)^{α/2} − m written to avoid cancellation at small k.
                let ratio = k * k / m2;
                mass * ((0.5 * alpha) * ratio.ln_1p()).exp_m1()
            }
            SymbolForm::Diffusion => 0.0,
            SymbolForm::GenericFromDensity => generic_symbol(&self.density_profile, k)?,
        };
        Ok(jump + diffusion)
    }

    /// `∫_{|z|<ε} |z|² ν(z) dz`, the variance rate of jumps below `ε`.
    pub fn small_jump_variance(&self, eps: f64) -> Result<f64> {
        if !self.has_jumps() {
            return Ok(0.0);
        }
        let d = self.dim();
        let surface = sphere_area(d);
        let alpha = self.density_profile.alpha;
        match self.symbol_form {
            SymbolForm::Stable { weight } | SymbolForm::StablePlusDiffusion { weight } => {
                Ok(surface * weight * stable_constant(d, alpha) * eps.powf(2.0 - alpha)
                    / (2.0 - alpha))
            }
            _ => {
                // r^{d+1} ν(r) ~ r^{1−α}: substitute r = ε t^{1/(2−α)}.
                let p = 1.0 / (2.0 - alpha);
                let g = |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    let r = eps * t.powf(p);
                    let dr = eps * p * t.powf(p - 1.0);
                    r.powi(d as i32 + 1) * self.levy_density(r) * dr
                };
                Ok(surface * integrate(g, 0.0, 1.0, Tolerance::new(1e-14, 1e-10))?.value)
            }
        }
    }

    /// Total mass of `ν` outside the ball of radius `eps`.
    pub fn large_jump_rate(&self, eps: f64) -> Result<f64> {
        if !self.has_jumps() {
            return Ok(0.0);
        }
        let d = self.dim();
        let surface = sphere_area(d);
        let alpha = self.density_profile.alpha;
        match self.symbol_form {
            SymbolForm::Stable { weight } | SymbolForm::StablePlusDiffusion { weight } => {
                Ok(surface * weight * stable_constant(d, alpha) * eps.powf(-alpha) / alpha)
            }
            _ => {
                let g = |r: f64| r.powi(d as i32 - 1) * self.levy_density(r);
                let tol = Tolerance::new(1e-13, 1e-10);
                let near = if eps < 1.0 {
                    integrate(g, eps, 1.0, tol)?.value
                } else {
                    0.0
                };
                Ok(surface * (near + integrate_to_infinity(g, eps.max(1.0), tol)?.value))
            }
        }
    }
}

/// Surface measure of the unit sphere in `ℝ^d` (2 for d = 1).
pub fn sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * PI.powf(h) / gamma(h)
}

/// Constant `C_{d,α}` with `∫(1 − cos ξ·z) C|z|^{−d−α} dz = |ξ|^α`.
pub fn stable_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (d + alpha))
        / (PI.powf(0.5 * d) * gamma(1.0 - 0.5 * alpha))
}

fn symbol_tol() -> Tolerance {
    Tolerance::new(1e-8, 1e-6)
}

// ∫_0^1 (1 − cos kr) r^{−1−α} dr with r = t^{1/(2−α)} removing the endpoint
// singularity; shared by d = 1 and (with J0) by d = 2.
fn inner_part<F: Fn(f64) -> f64>(alpha: f64, one_minus: F, tol: Tolerance) -> Result<f64> {
    let p = 1.0 / (2.0 - alpha);
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let r = t.powf(p);
        // (1 − cos)(r) r^{−1−α} dr/dt with dr/dt = p t^{p−1}
        one_minus(r) * r.powf(-1.0 - alpha) * p * t.powf(p - 1.0)
    };
    Ok(integrate(g, 0.0, 1.0, tol)?.value)
}

fn generic_symbol(profile: &DensityProfile, k: f64) -> Result<f64> {
    let tol = symbol_tol();
    match profile.d {
        1 => {
            let alpha = profile.alpha;
            let one_minus = |r: f64| 2.0 * (0.5 * k * r).sin().powi(2);
            let inner = inner_part(alpha, one_minus, tol)?;
            let outer = outer_part_1d(profile, k, tol)?;
            Ok(2.0 * (inner + outer))
        }
        2 => {
            // 2π ∫ (1 − J0(kr)) f(r) r dr; on (0,1] f(r) r = r^{−1−α}.
            let inner = inner_part(profile.alpha, |r| one_minus_j0(k * r), tol)?;
            let outer = outer_part_2d(profile, k, tol)?;
            Ok(2.0 * PI * (inner + outer))
        }
        _ => Err(invalid("d", "symbol quadrature supports d = 1, 2")),
    }
}

// Crude bound on |f'''(r)| from the logarithmic derivative.
fn third_derivative_bound(profile: &DensityProfile, r: f64) -> f64 {
    let g = profile.ln_derivative(r).abs() + 3.0 / r;
    profile.value(r) * g.powi(3)
}

// ∫_1^∞ (1 − cos kr) f(r) dr. Integrates to R = jπ/k, then closes the tail
// with ∫_R^∞ f and one integration-by-parts term for the cosine.
fn outer_part_1d(profile: &DensityProfile, k: f64, tol: Tolerance) -> Result<f64> {
    let half = PI / k;
    let mut r_end = 1.0 + 8.0 * half;
    while third_derivative_bound(profile, r_end) / k.powi(4) > 1e-12 && r_end < 1e6 {
        r_end *= 1.5;
    }
    let j = (r_end / half).ceil();
    let r_end = j * half;
    let mut breaks = vec![1.0];
    let first = (1.0 / half).floor() + 1.0;
    let mut m = first;
    while m * half < r_end {
        breaks.push(m * half);
        m += 1.0;
    }
    breaks.push(r_end);
    let g = |r: f64| 2.0 * (0.5 * k * r).sin().powi(2) * profile.value(r);
    let body = integrate_with_breaks(g, &breaks, tol)?.value;
    let tail_f = integrate_to_infinity(|r| profile.value(r), r_end, tol)?.value;
    // ∫_R^∞ cos(kr) f dr ≈ −cos(kR) f'(R)/k² when sin(kR) = 0.
    let cos_kr = if (j as i64) % 2 == 0 { 1.0 } else { -1.0 };
    let fprime = profile.value(r_end) * profile.ln_derivative(r_end);
    let tail_cos = -cos_kr * fprime / (k * k);
    Ok(body + tail_f - tail_cos)
}

fn outer_part_2d(profile: &DensityProfile, k: f64, tol: Tolerance) -> Result<f64> {
    let half = PI / k;
    let tail_mass = |r: f64| -> Result<f64> {
        Ok(integrate_to_infinity(|s| profile.value(s) * s, r, tol)?.value)
    };
    // The J0 part of the tail is bounded by sqrt(2/(πkR)) times the mass.
    let mut r_end = 1.0 + 8.0 * half;
    while (2.0 / (PI * k * r_end)).sqrt() * tail_mass(r_end)? > 1e-10 && r_end < 1e4 {
        r_end *= 1.5;
    }
    let mut breaks = vec![1.0];
    let mut m = (1.0 / half).floor() + 1.0;
    while m * half < r_end {
        breaks.push(m * half);
        m += 1.0;
    }
    breaks.push(r_end);
    let g = |r: f64| (1.0 - bessel_j0(k * r)) * profile.value(r) * r;
    let body = integrate_with_breaks(g, &breaks, tol)?.value;
    Ok(body + tail_mass(r_end)?)
}

/// Outcome of the numerical jump-paring check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpParingReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub passes: Vec<bool>,
    pub worst_ratio: f64,
    /// Ratio at the last radius over the ratio at the first.
    pub growth: f64,
    pub cap: f64,
    pub bounded: bool,
}

/// Default pass/fail cap on the convolution ratio.
pub const JUMP_PARING_CAP: f64 = 50.0;

/// Evaluates `∫_{|y|>1/2, |x−y|>1/2} f(|x−y|) f(|y|) dy / f(|x|)` on `r_grid`.
pub fn check_jump_paring(
    profile: &DensityProfile,
    r_grid: &[f64],
    cap: f64,
) -> Result<JumpParingReport> {
    profile.validate()?;
    if r_grid.iter().any(|&r| !(r >= 1.0)) {
        return Err(invalid("r_grid", "all radii must be ≥ 1"));
    }
    let mut ratios = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let conv = match profile.d {
            1 => convolution_1d(profile, r)?,
            2 => convolution_2d(profile, r)?,
            _ => return Err(invalid("d", "jump-paring check supports d = 1, 2")),
        };
        ratios.push(conv / profile.value(r));
    }
    let passes: Vec<bool> = ratios.iter().map(|&q| q.is_finite() && q <= cap).collect();
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let growth = match (ratios.first(), ratios.last()) {
        (Some(a), Some(b)) if *a > 0.0 => b / a,
        _ => 1.0,
    };
    Ok(JumpParingReport {
        radii: r_grid.to_vec(),
        bounded: passes.iter().all(|&p| p),
        ratios,
        passes,
        worst_ratio,
        growth,
        cap,
    })
}

fn conv_tol() -> Tolerance {
    Tolerance::new(1e-12, 1e-7)
}

fn convolution_1d(profile: &DensityProfile, r: f64) -> Result<f64> {
    let f = |y: f64| profile.value((r - y).abs()) * profile.value(y.abs());
    let tol = conv_tol();
    // Rescale so the absolute tolerance is meaningful for tiny f(r).
    let scale = profile.value(r).max(1e-300);
    let g = |y: f64| f(y) / scale;
    let mut total = 0.0;
    total += integrate_to_infinity(|s| g(-s), 1.0, tol)?.value;
    total += integrate(g, -1.0, -0.5, tol)?.value;
    let mut mid = vec![0.5, r - 0.5];
    for b in [1.0, r - 1.0] {
        if b > 0.5 && b < r - 0.5 {
            mid.push(b);
        }
    }
    mid.sort_by(f64::total_cmp);
    total += integrate_with_breaks(g, &mid, tol)?.value;
    total += integrate(g, r + 0.5, r + 1.0, tol)?.value;
    total += integrate_to_infinity(g, r + 1.0, tol)?.value;
    Ok(total * scale)
}

fn convolution_2d(profile: &DensityProfile, r: f64) -> Result<f64> {
    let scale = profile.value(r).max(1e-300);
    let tol = conv_tol();
    // y = ρ(cos φ, sin φ), x = (r, 0); |x − y|² = r² + ρ² − 2rρ cos φ.
    let inner = |rho: f64| -> f64 {
        let dist = |phi: f64| (r * r + rho * rho - 2.0 * r * rho * phi.cos()).max(0.0).sqrt();
        let phi_at = |s: f64| {
            let c = (r * r + rho * rho - s * s) / (2.0 * r * rho);
            c.clamp(-1.0, 1.0).acos()
        };
        // Region |x − y| > 1/2 is φ > φ(1/2).
        let lo = phi_at(0.5);
        if lo >= PI {
            return 0.0;
        }
        let mut pts = vec![lo, PI];
        let kink = phi_at(1.0);
        if kink > lo && kink < PI {
            pts.insert(1, kink);
        }
        let g = |phi: f64| profile.value(dist(phi).max(1e-300)) / scale;
        2.0 * integrate_with_breaks(g, &pts, tol)
            .map(|v| v.value)
            .unwrap_or(f64::NAN)
    };
    let outer = |rho: f64| inner(rho) * profile.value(rho) * rho;
    let mut pts = vec![0.5, 1.0];
    for b in [r - 1.0, r - 0.5, r + 0.5, r + 1.0] {
        if b > 1.0 {
            pts.push(b);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let last = *pts.last().expect("non-empty");
    let body = integrate_with_breaks(outer, &pts, tol)?.value;
    let tail = integrate_to_infinity(outer, last, tol)?.value;
    let total = body + tail;
    if !total.is_finite() {
        return Err(crate::error::Error::Quadrature {
            estimate: total,
            achieved: f64::NAN,
            requested: tol.rel,
        });
    }
    Ok(total * scale)
}
