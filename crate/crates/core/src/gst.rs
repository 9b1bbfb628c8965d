//! Ground-state-transformed objects: intrinsic kernel, stationary density,
//! drift and jump-bias fields, sandwich and comparison diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::potentials::{unit_ball_envelope, Potential, PotentialKind};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::spectral::{fk_kernel, Grid, SpectralSolution};

/// Rows of the intrinsic kernel whose `φ₀` falls below this fraction of its
/// maximum are excluded from defect measurements: dividing by `φ₀(x)` there
/// amplifies roundoff without bound.
pub const KERNEL_FLOOR: f64 = 1e-6;

/// Largest Markov-normalization defect `intrinsic_kernel` accepts.
pub const MAX_NORMALIZATION_DEFECT: f64 = 1e-4;

/// `ũ(t,x,y) = e^{λ₀t} u(t,x,y) / (φ₀(x)φ₀(y))` over the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicKernel {
    pub t: f64,
    pub size: usize,
    pub values: Vec<f64>,
    /// `φ₀²(y) h^d`; sums to one.
    pub stationary_weights: Vec<f64>,
    /// Rows above the kernel floor.
    pub row_mask: Vec<bool>,
    /// `max_x |Σ_y ũ(t,x,y) φ₀²(y) h^d − 1|` over masked rows.
    pub normalization_defect: f64,
    pub truncation: f64,
    pub clamped: usize,
}

impl IntrinsicKernel {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    /// Transition probabilities `ũ(t,x_i,y) φ₀²(y) h^d` out of node `i`.
    pub fn transition_row(&self, i: usize) -> Vec<f64> {
        self.row(i)
            .iter()
            .zip(&self.stationary_weights)
            .map(|(u, w)| u * w)
            .collect()
    }

    /// `max |ũ − ũᵀ|` relative to `max ũ`, over masked rows and columns.
    pub fn asymmetry(&self) -> f64 {
        let n = self.size;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in (0..n).filter(|&i| self.row_mask[i]) {
            for j in (0..n).filter(|&j| self.row_mask[j]) {
                scale = scale.max(self.get(i, j).abs());
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

pub fn intrinsic_kernel(sol: &SpectralSolution, t: f64, m_modes: Option<usize>) -> Result<IntrinsicKernel> {
    let m = m_modes.unwrap_or(sol.modes.len());
    let u = fk_kernel(sol, t, m)?;
    let phi = sol.normalized_phi0();
    let h = sol.grid.cell_volume();
    let n = u.size;
    let growth = (sol.lambda0 * t).exp();
    let weights: Vec<f64> = phi.iter().map(|p| p * p * h).collect();
    let pmax = phi.iter().copied().fold(0.0, f64::max);
    let row_mask: Vec<bool> = phi.iter().map(|&p| p >= KERNEL_FLOOR * pmax).collect();
    let mut values = u.values;
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let a = growth / phi[i];
        for (v, pj) in row.iter_mut().zip(&phi) {
            *v *= a / pj;
        }
    });
    let normalization_defect = (0..n)
        .into_par_iter()
        .filter(|&i| row_mask[i])
        .map(|i| {
            let s: f64 = values[i * n..(i + 1) * n]
                .iter()
                .zip(&weights)
                .map(|(u, w)| u * w)
                .sum();
            (s - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);
    if normalization_defect > MAX_NORMALIZATION_DEFECT {
        return Err(Error::NormalizationDefect {
            defect: normalization_defect,
            tol: MAX_NORMALIZATION_DEFECT,
        });
    }
    Ok(IntrinsicKernel {
        t,
        size: n,
        values,
        stationary_weights: weights,
        row_mask,
        normalization_defect,
        truncation: u.truncation,
        clamped: u.clamped,
    })
}

/// Chapman–Kolmogorov defect between `ũ(2t)` and `ũ(t)∘ũ(t)` composed under
/// the stationary weights: the largest total-variation distance between the
/// two transition laws over masked rows.
pub fn chapman_kolmogorov_defect(k_t: &IntrinsicKernel, k_2t: &IntrinsicKernel) -> f64 {
    let n = k_t.size;
    let w = &k_t.stationary_weights;
    (0..n)
        .into_par_iter()
        .filter(|&i| k_t.row_mask[i])
        .map(|i| {
            let mut comp = vec![0.0; n];
            for (z, &uz) in k_t.row(i).iter().enumerate() {
                let a = uz * w[z];
                if a == 0.0 {
                    continue;
                }
                for (c, v) in comp.iter_mut().zip(k_t.row(z)) {
                    *c += a * v;
                }
            }
            k_2t
                .row(i)
                .iter()
                .zip(&comp)
                .zip(w)
                .map(|((d, c), wy)| (d - c).abs() * wy)
                .sum::<f64>()
        })
        .reduce(|| 0.0, f64::max)
}

/// `φ₀²` normalized to unit mass on the grid (a density: `Σ p h^d = 1`).
pub fn stationary_density(sol: &SpectralSolution) -> Vec<f64> {
    let h = sol.grid.cell_volume();
    let s: f64 = sol.phi0.iter().map(|p| p * p).sum::<f64>() * h;
    sol.phi0.iter().map(|p| p * p / s).collect()
}

/// Radial tail model of `ln φ₀` beyond the certified window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TailModel {
    /// `ln φ₀ ≈ a − q r²`.
    Gaussian { q: f64 },
    /// `ln φ₀ ≈ a − k r`.
    Exponential { k: f64 },
    /// `ln φ₀ ≈ a − p ln r`.
    Power { p: f64 },
}

impl TailModel {
    pub(crate) fn shape(self, r: f64) -> f64 {
        match self {
            TailModel::Gaussian { q } => -q * r * r,
            TailModel::Exponential { k } => -k * r,
            TailModel::Power { p } => -p * r.ln(),
        }
    }

    /// Least-squares choice among the three models on `(r, ln φ₀)` samples.
    pub fn fit(r: &[f64], ln_phi: &[f64]) -> Self {
        let mut best: Option<(f64, TailModel)> = None;
        let features: [(fn(f64) -> f64, fn(f64) -> TailModel); 3] = [
            (|r| r * r, |b| TailModel::Gaussian { q: b }),
            (|r| r, |b| TailModel::Exponential { k: b }),
            (|r| r.ln(), |b| TailModel::Power { p: b }),
        ];
        for (feat, make) in features {
            let s: Vec<f64> = r.iter().map(|&x| feat(x)).collect();
            let (a, b) = linear_fit(&s, ln_phi);
            let rss: f64 = s
                .iter()
                .zip(ln_phi)
                .map(|(x, y)| (y - a - b * x).powi(2))
                .sum();
            let model = make((-b).max(0.0));
            if best.is_none_or(|(r0, _)| rss < r0) {
                best = Some((rss, model));
            }
        }
        best.map(|b| b.1).unwrap_or(TailModel::Exponential { k: 0.0 })
    }
}

/// Least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Slope of `ln v` against `ln r`.
pub fn log_log_slope(r: &[f64], v: &[f64]) -> f64 {
    let lx: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    linear_fit(&lx, &ly).1
}

/// Off-grid `ln φ₀`: (bi)linear inside the grid, radial tail model beyond
/// the certified window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPhi {
    pub grid: Grid,
    pub ln_phi: Vec<f64>,
    /// Nodal central-difference gradient, one vector per axis.
    pub grad: Vec<Vec<f64>>,
    /// Certified radius.
    pub window: f64,
    pub tail: TailModel,
}

impl LogPhi {
    pub fn new(sol: &SpectralSolution) -> Result<Self> {
        let grid = sol.grid;
        let h = grid.spacing();
        let phi = sol.normalized_phi0();
        let ln_phi: Vec<f64> = phi.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect();
        let window = sol.certified_radius();
        if window < 4.0 * h {
            return Err(Error::WindowTooSmall(format!(
                "certified radius {window:.3e} below four grid spacings"
            )));
        }
        let n = grid.n;
        let grad: Vec<Vec<f64>> = (0..grid.d)
            .map(|axis| {
                let stride = if grid.d == 1 || axis == 1 { 1 } else { n };
                (0..grid.len())
                    .map(|idx| {
                        let pos = if grid.d == 1 || axis == 1 { idx % n } else { idx / n };
                        if pos == 0 {
                            (ln_phi[idx + stride] - ln_phi[idx]) / h
                        } else if pos == n - 1 {
                            (ln_phi[idx] - ln_phi[idx - stride]) / h
                        } else {
                            (ln_phi[idx + stride] - ln_phi[idx - stride]) / (2.0 * h)
                        }
                    })
                    .collect()
            })
            .collect();
        let (mut rs, mut ls) = (Vec::new(), Vec::new());
        for (i, &l) in ln_phi.iter().enumerate() {
            let r = grid.radius(i);
            if r >= (0.5 * window).max(h) && r <= window {
                rs.push(r);
                ls.push(l);
            }
        }
        if rs.len() < 4 {
            return Err(Error::WindowTooSmall("too few nodes to fit the tail".into()));
        }
        let tail = TailModel::fit(&rs, &ls);
        Ok(Self {
            grid,
            ln_phi,
            grad,
            window,
            tail,
        })
    }

    fn interp(&self, values: &[f64], x: &[f64]) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.n;
        let locate = |c: f64| {
            let t = ((c + g.half_width) / h).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            (i, t - i as f64)
        };
        match g.d {
            1 => {
                let (i, f) = locate(x[0]);
                (1.0 - f) * values[i] + f * values[i + 1]
            }
            _ => {
                let (i, fi) = locate(x[0]);
                let (j, fj) = locate(x[1]);
                let v = |a: usize, b: usize| values[a * n + b];
                (1.0 - fi) * ((1.0 - fj) * v(i, j) + fj * v(i, j + 1))
                    + fi * ((1.0 - fj) * v(i + 1, j) + fj * v(i + 1, j + 1))
            }
        }
    }

    /// `ln φ₀(x)` for any `x` (normalized `φ₀`).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r <= self.window {
            return self.interp(&self.ln_phi, x);
        }
        let s = self.window / r;
        let anchor: Vec<f64> = x.iter().map(|c| c * s).collect();
        self.interp(&self.ln_phi, &anchor) + self.tail.shape(r) - self.tail.shape(self.window)
    }

    pub fn inside(&self, x: &[f64]) -> bool {
        norm(x) <= self.window
    }

    /// `∇ ln φ₀(x)` inside the certified window.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.inside(x) {
            return Err(Error::OutsideWindow {
                x: norm(x),
                radius: self.window,
            });
        }
        Ok(self.grad.iter().map(|g| self.interp(g, x)).collect())
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Drift and jump-bias fields of the transformed process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GstFields {
    pub log_phi: LogPhi,
    pub model: LevyModel,
}

pub fn gst_fields(sol: &SpectralSolution, model: &LevyModel) -> Result<GstFields> {
    if model.dim() != sol.grid.d {
        return Err(crate::error::invalid("model.d", "dimension differs from the solution grid"));
    }
    Ok(GstFields {
        log_phi: LogPhi::new(sol)?,
        model: *model,
    })
}

impl GstFields {
    pub fn window(&self) -> f64 {
        self.log_phi.window
    }

    /// `φ₀(x+z)/φ₀(x)`; `x` must lie in the certified window, `x+z` may not.
    pub fn bias(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if !self.log_phi.inside(x) {
            return Err(Error::OutsideWindow {
                x: norm(x),
                radius: self.window(),
            });
        }
        let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
        Ok((self.log_phi.eval(&y) - self.log_phi.eval(x)).exp())
    }

    /// `σ²∇ln φ₀(x)`.
    pub fn diffusive_drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s2 = self.model.diffusion_coeff;
        Ok(self.log_phi.gradient(x)?.into_iter().map(|g| s2 * g).collect())
    }

    /// `∫_{0<|z|≤1} (φ₀(x+z)/φ₀(x) − 1) z ν(z) dz`, as a principal value
    /// pairing `z` with `−z`.
    pub fn compensator(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = x.len();
        if !self.model.has_jumps() {
            return Ok(vec![0.0; d]);
        }
        if !self.log_phi.inside(x) {
            return Err(Error::OutsideWindow {
                x: norm(x),
                radius: self.window(),
            });
        }
        let l0 = self.log_phi.eval(x);
        let b = |z: &[f64]| {
            let y: Vec<f64> = x.iter().zip(z).map(|(a, c)| a + c).collect();
            (self.log_phi.eval(&y) - l0).exp()
        };
        let h = self.log_phi.grid.spacing();
        let breaks: Vec<f64> = (0..)
            .map(|k| k as f64 * h)
            .take_while(|&r| r < 1.0)
            .chain(std::iter::once(1.0))
            .collect();
        let tol = Tolerance::new(1e-12, 1e-9);
        match d {
            1 => {
                let f = |r: f64| {
                    if r <= 0.0 {
                        return 0.0;
                    }
                    (b(&[r]) - b(&[-r])) * r * self.model.levy_density(r)
                };
                Ok(vec![integrate_with_breaks(f, &breaks, tol)?.value])
            }
            _ => {
                const M: usize = 32;
                let mut out = vec![0.0; d];
                for (axis, o) in out.iter_mut().enumerate() {
                    let f = |r: f64| {
                        if r <= 0.0 {
                            return 0.0;
                        }
                        let mut s = 0.0;
                        for k in 0..M {
                            let th = std::f64::consts::PI * (k as f64 + 0.5) / M as f64;
                            let e = [th.cos(), th.sin()];
                            let zp = [r * e[0], r * e[1]];
                            let zm = [-zp[0], -zp[1]];
                            s += (b(&zp) - b(&zm)) * e[axis];
                        }
                        s * std::f64::consts::PI / M as f64 * r * r * self.model.levy_density(r)
                    };
                    *o = integrate_with_breaks(f, &breaks, tol)?.value;
                }
                Ok(out)
            }
        }
    }

    /// Drift of the transformed process: `σ²∇ln φ₀ + compensator`.
    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let a = self.diffusive_drift(x)?;
        let c = self.compensator(x)?;
        Ok(a.iter().zip(&c).map(|(u, v)| u + v).collect())
    }

    /// Drift of the discretized SDE in which jumps below `eps` are replaced by
    /// a Brownian component of per-coordinate variance rate `s_ε`:
    /// `(σ² + s_ε)∇ln φ₀`. Jumps of size `≥ eps` then need no compensation
    /// because `ν` is symmetric.
    pub fn sde_drift(&self, x: &[f64], small_jump_var: f64) -> Result<Vec<f64>> {
        let k = self.model.diffusion_coeff + small_jump_var;
        Ok(self.log_phi.gradient(x)?.into_iter().map(|g| k * g).collect())
    }
}

/// Which ground-state estimate the sandwich check assessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichRegime {
    /// `φ₀ ≍ (1∧ν)/(1∨V)`.
    Confining,
    /// `φ₀ ≍ 1∧ν`.
    DecayingSandwich,
    /// `φ₀ ≳ e^{−θ√(|λ₀|+ε)|x|} ∨ (1∧ν)` with `θ` fitted.
    DecayingExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub r: f64,
    pub phi0: f64,
    pub nu: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub regime: SandwichRegime,
    pub window: (f64, f64),
    pub rows: Vec<SandwichRow>,
    /// Range of `φ₀(1∨V_up)/(1∧ν)` (confining) or `φ₀/(1∧ν)` (decaying).
    pub lower_ratio_range: (f64, f64),
    /// Range of `φ₀(1∨V_low)/(1∧ν)` (confining) or `φ₀/(1∧ν)` (decaying).
    pub upper_ratio_range: (f64, f64),
    /// Log-log slope of `φ₀` over the outer half of the window.
    pub tail_slope: f64,
    /// Best-fit `θ` in the exponential lower bound (exponential regime).
    pub theta: Option<f64>,
    pub epsilon: f64,
}

impl SandwichReport {
    /// Largest over smallest ratio, across both ratio families.
    pub fn spread(&self) -> f64 {
        let lo = self.lower_ratio_range.0.min(self.upper_ratio_range.0);
        let hi = self.lower_ratio_range.1.max(self.upper_ratio_range.1);
        hi / lo
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,phi0,nu,lower_ratio,upper_ratio\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.r, r.phi0, r.nu, r.lower_ratio, r.upper_ratio
            ));
        }
        s
    }
}

/// Options for [`sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichOptions {
    /// Inner radius of the window.
    pub r_min: f64,
    /// `ε` in the exponential lower bound.
    pub epsilon: f64,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        Self {
            r_min: 2.0,
            epsilon: 0.1,
        }
    }
}

/// Ratios of `φ₀` against its predicted two-sided bounds over the certified
/// window, on the positive first axis and its mirror.
pub fn sandwich_check(
    sol: &SpectralSolution,
    model: &LevyModel,
    potential: &Potential,
    opts: &SandwichOptions,
) -> Result<SandwichReport> {
    if !model.has_jumps() {
        return Err(Error::NotApplicable(
            "sandwich bounds involve ν; the model has no jump part".into(),
        ));
    }
    let grid = sol.grid;
    let r_max = sol.certified_radius();
    if r_max < 2.0 * opts.r_min {
        return Err(Error::WindowTooSmall(format!(
            "certified radius {r_max:.3} is below twice r_min = {:.3}",
            opts.r_min
        )));
    }
    let phi = sol.normalized_phi0();
    let decaying = potential.kind() == PotentialKind::Decaying;
    let exponential = model.density_profile.mu > 0.0 && model.density_profile.beta >= 1.0;
    let regime = match (decaying, exponential) {
        (false, _) => SandwichRegime::Confining,
        (true, false) => SandwichRegime::DecayingSandwich,
        (true, true) => SandwichRegime::DecayingExponential,
    };
    let axis_node = |idx: usize| {
        let x = grid.node(idx);
        x[1..].iter().all(|c| c.abs() < 1e-12) && x[0] >= opts.r_min && x[0] <= r_max
    };
    let mut rows = Vec::new();
    for idx in (0..grid.len()).filter(|&i| axis_node(i)) {
        let x = grid.node(idx);
        let r = x[0];
        let mirror = phi[grid.mirror(idx)];
        let p = 0.5 * (phi[idx] + mirror);
        let nu = model.levy_density(r);
        let base = nu.min(1.0);
        let (lower_ratio, upper_ratio) = if decaying {
            (p / base, p / base)
        } else {
            let env = unit_ball_envelope(potential, &x, 64)?;
            (p * env.v_up.max(1.0) / base, p * env.v_low.max(1.0) / base)
        };
        rows.push(SandwichRow {
            r,
            phi0: p,
            nu,
            lower_ratio,
            upper_ratio,
        });
    }
    if rows.len() < 4 {
        return Err(Error::WindowTooSmall("fewer than four nodes in the window".into()));
    }
    let range = |f: fn(&SandwichRow) -> f64| {
        rows.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let lower_ratio_range = range(|r| r.lower_ratio);
    let upper_ratio_range = range(|r| r.upper_ratio);
    let outer: Vec<&SandwichRow> = rows.iter().filter(|r| r.r >= 0.5 * r_max).collect();
    let tail_slope = log_log_slope(
        &outer.iter().map(|r| r.r).collect::<Vec<_>>(),
        &outer.iter().map(|r| r.phi0).collect::<Vec<_>>(),
    );
    let theta = (regime == SandwichRegime::DecayingExponential).then(|| {
        let (_, k) = linear_fit(
            &outer.iter().map(|r| r.r).collect::<Vec<_>>(),
            &outer.iter().map(|r| r.phi0.ln()).collect::<Vec<_>>(),
        );
        -k / (sol.lambda0.abs() + opts.epsilon).sqrt()
    });
    Ok(SandwichReport {
        regime,
        window: (opts.r_min, r_max),
        rows,
        lower_ratio_range,
        upper_ratio_range,
        tail_slope,
        theta,
        epsilon: opts.epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub c: f64,
    /// Smallest ratio `φ₀⁽¹⁾(cx)/φ₀⁽²⁾(x)` over the window.
    pub min_ratio: f64,
    /// Log-log slope of the ratio over the outer half of the window.
    pub slope: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub window: (f64, f64),
    pub entries: Vec<ComparisonEntry>,
    pub min_ratio: f64,
    /// The liminf condition is supported for every tested `c`.
    pub condition_holds: bool,
}

/// Slope below which the ratio is judged to tend to zero.
pub const COMPARISON_SLOPE_FLOOR: f64 = -0.25;

/// Evaluates `φ₀⁽¹⁾(cx)/φ₀⁽²⁾(x)` for `c ∈ {c0, 2c0, 4c0}` along the first
/// axis, for `x` in the certified window of the second solution; `φ₀⁽¹⁾` uses
/// its tail model beyond its own window.
pub fn compare_ground_states(sol1: &SpectralSolution, sol2: &SpectralSolution, c0: f64) -> Result<ComparisonReport> {
    if sol1.grid.d != sol2.grid.d {
        return Err(Error::WindowTooSmall("solutions live in different dimensions".into()));
    }
    if !(c0 > 0.0) {
        return Err(crate::error::invalid("c0", "must be positive"));
    }
    let l1 = LogPhi::new(sol1)?;
    let l2 = LogPhi::new(sol2)?;
    let hi = l2.window;
    let lo = 0.25 * hi;
    let d = sol1.grid.d;
    let radii: Vec<f64> = (0..=64).map(|k| lo + (hi - lo) * k as f64 / 64.0).collect();
    let point = |r: f64| {
        let mut x = vec![0.0; d];
        x[0] = r;
        x
    };
    let mut entries = Vec::new();
    for c in [c0, 2.0 * c0, 4.0 * c0] {
        let lr: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let a = l1.eval(&point(c * r)) + l1.eval(&point(-c * r));
                let b = l2.eval(&point(r)) + l2.eval(&point(-r));
                0.5 * (a - b)
            })
            .collect();
        let min_ratio = lr.iter().copied().fold(f64::INFINITY, f64::min).exp();
        let half = radii.len() / 2;
        let lx: Vec<f64> = radii[half..].iter().map(|r| r.ln()).collect();
        let slope = linear_fit(&lx, &lr[half..]).1;
        entries.push(ComparisonEntry {
            c,
            min_ratio,
            slope,
            holds: min_ratio > 0.0 && slope >= COMPARISON_SLOPE_FLOOR,
        });
    }
    Ok(ComparisonReport {
        window: (lo, hi),
        min_ratio: entries.iter().map(|e| e.min_ratio).fold(f64::INFINITY, f64::min),
        condition_holds: entries.iter().all(|e| e.holds),
        entries,
    })
}
