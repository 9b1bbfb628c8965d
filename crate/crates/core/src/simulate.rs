//! Samplers for the transformed process: iid stationary draws, kernel chains
//! on the grid, and an Euler scheme for the jump SDE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gst::{stationary_density, GstFields, IntrinsicKernel};
use crate::levy::{LevyModel, SymbolForm};
use crate::potentials::PotentialKind;
use crate::quad::{integrate, Tolerance};
use crate::spectral::{Grid, SpectralSolution};

/// Seed and stream of a ChaCha8 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Generator for the `k`-th member of a farm of independent paths.
    pub fn child(&self, k: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(1 + k),
        }
    }
}

/// States in `ℝ^d`, stored contiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct States {
    pub d: usize,
    pub data: Vec<f64>,
}

impl States {
    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn norms(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.d)
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.data.chunks_exact(self.d).map(|x| x[axis]).collect()
    }

    /// Node states spread uniformly over their grid cells, which turns a law
    /// on the nodes into the matching cell-uniform law of [`GridCdf`].
    pub fn cell_jittered(&self, spacing: f64, rng: RngSpec) -> Self {
        let mut r = rng.rng();
        let data = self
            .data
            .iter()
            .map(|x| x + (r.random::<f64>() - 0.5) * spacing)
            .collect();
        Self { d: self.d, data }
    }
}

/// One proposed jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub z: Vec<f64>,
    /// `φ₀(x+z)/φ₀(x)` at the proposal.
    pub bias: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostics {
    /// States projected back onto the certified window.
    pub clamp_count: usize,
    pub max_norm: f64,
    pub proposals: usize,
    pub accepted: usize,
    /// Proposals whose bias exceeded the thinning majorant (zero by
    /// construction; nonzero signals an inconsistent envelope).
    pub envelope_violations: usize,
}

/// A sampled path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GstPath {
    pub times: Vec<f64>,
    pub states: States,
    pub jump_log: Vec<JumpRecord>,
    pub diagnostics: PathDiagnostics,
}

impl GstPath {
    /// Columnar text: time, coordinates.
    pub fn to_csv(&self) -> String {
        let d = self.states.d;
        let mut s = String::from("time");
        for k in 0..d {
            s.push_str(&format!(",x{k}"));
        }
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.9e}"));
            for v in self.states.get(i) {
                s.push_str(&format!(",{v:.12e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Cumulative mass table for inverse-CDF sampling over grid cells.
#[derive(Debug, Clone)]
struct CellTable {
    grid: Grid,
    /// d = 1: cumulative cell masses. d = 2: cumulative row masses.
    outer: Vec<f64>,
    /// d = 2: per-row cumulative masses.
    inner: Vec<Vec<f64>>,
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = w
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    let total = acc;
    for v in &mut out {
        *v /= total;
    }
    out
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl CellTable {
    fn new(grid: Grid, mass: &[f64]) -> Self {
        let n = grid.n;
        match grid.d {
            1 => Self {
                grid,
                outer: cumulative(mass.iter().copied()),
                inner: Vec::new(),
            },
            _ => Self {
                grid,
                outer: cumulative(mass.chunks_exact(n).map(|r| r.iter().sum::<f64>())),
                inner: mass.chunks_exact(n).map(|r| cumulative(r.iter().copied())).collect(),
            },
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let h = self.grid.spacing();
        let axis = self.grid.axis();
        let i = pick(&self.outer, rng.random::<f64>());
        out.push(axis[i] + (rng.random::<f64>() - 0.5) * h);
        if self.grid.d == 2 {
            let j = pick(&self.inner[i], rng.random::<f64>());
            out.push(axis[j] + (rng.random::<f64>() - 0.5) * h);
        }
    }
}

/// iid draws from `φ₀²` on the grid: a cell is chosen by inverse CDF
/// (conditionally per axis in d = 2) and the point is uniform within it.
pub fn sample_stationary(sol: &SpectralSolution, n: usize, rng: RngSpec) -> Result<States> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let table = CellTable::new(sol.grid, &stationary_density(sol));
    let mut r = rng.rng();
    let mut data = Vec::with_capacity(n * sol.grid.d);
    for _ in 0..n {
        table.sample(&mut r, &mut data);
    }
    Ok(States { d: sol.grid.d, data })
}

/// CDF of the cell-uniform law with the given nodal density (d = 1), or of
/// the marginal of one coordinate (d = 2).
#[derive(Debug, Clone, PartialEq)]
pub struct GridCdf {
    edges: Vec<f64>,
    cum: Vec<f64>,
}

impl GridCdf {
    pub fn new(grid: &Grid, density: &[f64], axis: usize) -> Self {
        let n = grid.n;
        let h = grid.spacing();
        let cell: Vec<f64> = match grid.d {
            1 => density.to_vec(),
            _ => (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if axis == 0 { density[i * n + j] } else { density[j * n + i] })
                        .sum()
                })
                .collect(),
        };
        let edges: Vec<f64> = (0..=n).map(|i| -grid.half_width + (i as f64 - 0.5) * h).collect();
        let mut cum = vec![0.0];
        cum.extend(cumulative(cell.into_iter()));
        Self { edges, cum }
    }

    pub fn stationary(sol: &SpectralSolution, axis: usize) -> Self {
        Self::new(&sol.grid, &stationary_density(sol), axis)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.edges[0] {
            return 0.0;
        }
        let last = self.edges.len() - 1;
        if x >= self.edges[last] {
            return 1.0;
        }
        let k = self.edges.partition_point(|&e| e <= x) - 1;
        let f = (x - self.edges[k]) / (self.edges[k + 1] - self.edges[k]);
        self.cum[k] + f * (self.cum[k + 1] - self.cum[k])
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Cumulative transition rows of an intrinsic kernel.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    pub grid: Grid,
    pub t: f64,
    rows: Vec<Vec<f64>>,
}

impl TransitionTable {
    pub fn new(kernel: &IntrinsicKernel, grid: Grid) -> Result<Self> {
        if kernel.size != grid.len() {
            return Err(invalid("kernel", "size differs from the grid"));
        }
        let rows = (0..kernel.size)
            .into_par_iter()
            .map(|i| cumulative(kernel.transition_row(i).into_iter()))
            .collect();
        Ok(Self {
            grid,
            t: kernel.t,
            rows,
        })
    }

    pub fn step<R: Rng>(&self, idx: usize, rng: &mut R) -> usize {
        pick(&self.rows[idx], rng.random::<f64>())
    }
}

/// Chain on the grid nodes with transition law `ũ(t,x,·)φ₀²(·)h^d`, started
/// at the node nearest to `x0`.
pub fn simulate_chain(
    kernel: &IntrinsicKernel,
    grid: Grid,
    x0: &[f64],
    n_steps: usize,
    rng: RngSpec,
) -> Result<GstPath> {
    let table = TransitionTable::new(kernel, grid)?;
    chain_path(&table, x0, n_steps, rng)
}

pub fn chain_path(table: &TransitionTable, x0: &[f64], n_steps: usize, rng: RngSpec) -> Result<GstPath> {
    let grid = table.grid;
    let mut idx = grid
        .nearest(x0)
        .ok_or_else(|| invalid("x0", "starting point lies outside the grid"))?;
    let mut r = rng.rng();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut data = Vec::with_capacity((n_steps + 1) * grid.d);
    let mut max_norm: f64 = 0.0;
    for k in 0..=n_steps {
        if k > 0 {
            idx = table.step(idx, &mut r);
        }
        times.push(k as f64 * table.t);
        let x = grid.node(idx);
        max_norm = max_norm.max(grid.radius(idx));
        data.extend_from_slice(&x);
    }
    Ok(GstPath {
        times,
        states: States { d: grid.d, data },
        jump_log: Vec::new(),
        diagnostics: PathDiagnostics {
            max_norm,
            ..Default::default()
        },
    })
}

/// Radii of jumps of size at least `ε`, drawn from the radial law of `ν`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialJumpSampler {
    /// `r = ε U^{−1/α}`.
    Stable { eps: f64, alpha: f64 },
    /// Inverse of a tabulated radial CDF on `[ε, r_max]`; the mass beyond
    /// `r_max` is below `1e−12` of the total and is dropped.
    Table { radii: Vec<f64>, cdf: Vec<f64> },
}

impl RadialJumpSampler {
    pub fn new(model: &LevyModel, eps: f64) -> Result<Self> {
        match model.symbol_form {
            SymbolForm::Stable { .. } | SymbolForm::StablePlusDiffusion { .. } => Ok(Self::Stable {
                eps,
                alpha: model.density_profile.alpha,
            }),
            SymbolForm::Diffusion => Err(Error::NotApplicable("the model has no jumps".into())),
            _ => {
                let d = model.dim() as i32;
                let total = model.large_jump_rate(eps)?;
                let g = |r: f64| r.powi(d - 1) * model.levy_density(r) * crate::levy::sphere_area(model.dim());
                let mut r_max = eps.max(1.0);
                while model.large_jump_rate(r_max)? > 1e-12 * total && r_max < 1e8 {
                    r_max *= 2.0;
                }
                const M: usize = 2048;
                let ratio = (r_max / eps).powf(1.0 / M as f64);
                let radii: Vec<f64> = (0..=M).map(|k| eps * ratio.powi(k as i32)).collect();
                let mut cdf = vec![0.0];
                let tol = Tolerance::new(1e-16, 1e-10);
                for w in radii.windows(2) {
                    let piece = integrate(g, w[0], w[1], tol)?.value;
                    cdf.push(cdf.last().copied().unwrap_or(0.0) + piece);
                }
                let top = *cdf.last().expect("nonempty");
                for c in &mut cdf {
                    *c /= top;
                }
                Ok(Self::Table { radii, cdf })
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            Self::Stable { eps, alpha } => eps * (1.0 - u).powf(-1.0 / alpha),
            Self::Table { radii, cdf } => {
                let k = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[k - 1], cdf[k]);
                let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                // Log-linear within the cell.
                radii[k - 1] * (radii[k] / radii[k - 1]).powf(f)
            }
        }
    }
}

/// Options for [`simulate_sde`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdeOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Jump cutoff `ε`; defaults to the grid spacing.
    pub eps_jump: Option<f64>,
    /// Record the state every this many steps.
    pub record_every: usize,
    pub log_jumps: bool,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 10.0,
            eps_jump: None,
            record_every: 100,
            log_jumps: false,
        }
    }
}

/// Largest drift displacement per step, in grid spacings.
pub const DRIFT_STEP_FACTOR: f64 = 4.0;

/// Precomputed ingredients of the SDE scheme, shared by all paths of a farm.
#[derive(Debug, Clone)]
pub struct SdeScheme<'a> {
    pub fields: &'a GstFields,
    pub eps: f64,
    /// Per-coordinate variance rate of the folded small jumps.
    pub small_jump_var: f64,
    /// `ν(|z| ≥ ε)`.
    pub jump_rate: f64,
    /// Upper bound of `φ₀` (normalized), for the thinning majorant.
    pub ln_phi_sup: f64,
    pub sampler: Option<RadialJumpSampler>,
    pub opts: SdeOptions,
}

impl<'a> SdeScheme<'a> {
    pub fn new(sol: &SpectralSolution, fields: &'a GstFields, opts: SdeOptions) -> Result<Self> {
        if sol.kind == PotentialKind::Decaying && sol.lambda0 >= 0.0 {
            return Err(Error::NoBoundState {
                lambda0: sol.lambda0,
                gap_tol: 0.0,
            });
        }
        if !(opts.dt > 0.0 && opts.horizon >= opts.dt) {
            return Err(invalid("dt", "need 0 < dt ≤ horizon"));
        }
        let steps = opts.horizon / opts.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid("horizon", "must be a multiple of dt"));
        }
        if opts.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        let model = &fields.model;
        let h = sol.grid.spacing();
        let eps = opts.eps_jump.unwrap_or(h);
        if !(eps > 0.0) {
            return Err(invalid("eps_jump", "must be positive"));
        }
        let small_jump_var = model.small_jump_variance(eps)? / model.dim() as f64;
        let jump_rate = model.large_jump_rate(eps)?;
        let sampler = if model.has_jumps() {
            Some(RadialJumpSampler::new(model, eps)?)
        } else {
            None
        };
        let ln_phi_sup = fields.log_phi.ln_phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scheme = Self {
            fields,
            eps,
            small_jump_var,
            jump_rate,
            ln_phi_sup,
            sampler,
            opts,
        };
        let limit = DRIFT_STEP_FACTOR * h;
        let worst = scheme.max_drift(sol)? * opts.dt;
        if worst > limit {
            return Err(Error::TimeStepTooLarge {
                displacement: worst,
                limit,
            });
        }
        Ok(scheme)
    }

    fn max_drift(&self, sol: &SpectralSolution) -> Result<f64> {
        let w = self.fields.window();
        let mut m: f64 = 0.0;
        for i in 0..sol.grid.len() {
            let x = sol.grid.node(i);
            if sol.grid.radius(i) <= w {
                let v = self.fields.sde_drift(&x, self.small_jump_var)?;
                m = m.max(v.iter().map(|c| c * c).sum::<f64>().sqrt());
            }
        }
        Ok(m)
    }

    /// Largest time step the drift check admits.
    pub fn dt_max(&self, sol: &SpectralSolution) -> Result<f64> {
        Ok(DRIFT_STEP_FACTOR * sol.grid.spacing() / self.max_drift(sol)?.max(f64::MIN_POSITIVE))
    }

    fn clamp(&self, x: &mut [f64], diag: &mut PathDiagnostics) {
        let w = self.fields.window();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > w {
            let s = w / r * (1.0 - 1e-12);
            for v in x.iter_mut() {
                *v *= s;
            }
            diag.clamp_count += 1;
        }
    }

    fn direction<R: Rng>(&self, d: usize, rng: &mut R) -> Vec<f64> {
        if d == 1 {
            vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
        } else {
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            vec![th.cos(), th.sin()]
        }
    }

    /// One path from `x0`.
    pub fn run(&self, x0: &[f64], rng: RngSpec) -> Result<GstPath> {
        let d = x0.len();
        if d != self.fields.log_phi.grid.d {
            return Err(invalid("x0", "dimension differs from the grid"));
        }
        let mut r = rng.rng();
        let mut diag = PathDiagnostics::default();
        let mut x = x0.to_vec();
        self.clamp(&mut x, &mut diag);
        let opts = self.opts;
        let n_steps = (opts.horizon / opts.dt).round() as usize;
        let sd = ((self.fields.model.diffusion_coeff + self.small_jump_var) * opts.dt).sqrt();
        let exp1 = Exp::new(1.0).expect("unit rate");
        let mut times = vec![0.0];
        let mut data = x.clone();
        let mut jump_log = Vec::new();
        for step in 0..n_steps {
            let t0 = step as f64 * opts.dt;
            let drift = self.fields.sde_drift(&x, self.small_jump_var)?;
            for (xi, b) in x.iter_mut().zip(&drift) {
                let g: f64 = StandardNormal.sample(&mut r);
                *xi += b * opts.dt + sd * g;
            }
            self.clamp(&mut x, &mut diag);
            if let Some(sampler) = &self.sampler {
                // Thinning against the majorant sup φ₀ / φ₀(x).
                let mut s = 0.0;
                loop {
                    let ln_m = self.ln_phi_sup - self.fields.log_phi.eval(&x);
                    let rate = self.jump_rate * ln_m.exp();
                    s += exp1.sample(&mut r) / rate;
                    if s >= opts.dt {
                        break;
                    }
                    let rad = sampler.sample(&mut r);
                    let z: Vec<f64> = self.direction(d, &mut r).into_iter().map(|u| u * rad).collect();
                    let bias = self.fields.bias(&x, &z)?;
                    let ratio = bias / ln_m.exp();
                    if ratio > 1.0 + 1e-9 {
                        diag.envelope_violations += 1;
                    }
                    let accepted = r.random::<f64>() < ratio;
                    diag.proposals += 1;
                    if opts.log_jumps {
                        jump_log.push(JumpRecord {
                            time: t0 + s,
                            z: z.clone(),
                            bias,
                            accepted,
                        });
                    }
                    if accepted {
                        diag.accepted += 1;
                        for (xi, zi) in x.iter_mut().zip(&z) {
                            *xi += zi;
                        }
                        self.clamp(&mut x, &mut diag);
                    }
                }
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            diag.max_norm = diag.max_norm.max(norm);
            if (step + 1) % opts.record_every == 0 {
                times.push((step + 1) as f64 * opts.dt);
                data.extend_from_slice(&x);
            }
        }
        Ok(GstPath {
            times,
            states: States { d, data },
            jump_log,
            diagnostics: diag,
        })
    }
}

/// Euler scheme for the transformed SDE: drift `(σ² + s_ε)∇ln φ₀` with the
/// matching Brownian part, and jumps of size `≥ ε` proposed from `ν` and
/// accepted with probability `φ₀(x+z)/φ₀(x)` over a state-dependent majorant.
pub fn simulate_sde(sol: &SpectralSolution, fields: &GstFields, x0: &[f64], opts: SdeOptions, rng: RngSpec) -> Result<GstPath> {
    SdeScheme::new(sol, fields, opts)?.run(x0, rng)
}

/// Farm of independent SDE paths, path `k` using `rng.child(k)`, started from
/// the given points.
pub fn simulate_sde_farm(
    sol: &SpectralSolution,
    fields: &GstFields,
    starts: &States,
    opts: SdeOptions,
    rng: RngSpec,
) -> Result<Vec<GstPath>> {
    let scheme = SdeScheme::new(sol, fields, opts)?;
    (0..starts.len())
        .into_par_iter()
        .map(|k| scheme.run(starts.get(k), rng.child(k as u64)))
        .collect()
}
