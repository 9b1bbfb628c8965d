use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::operator::{build_operator, Operator};
use crate::error::{invalid, Error, Result};
use crate::levy::LevyModel;
use crate::potentials::{Potential, PotentialKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Dense for one-dimensional grids with at most 512 nodes, Lanczos
    /// otherwise.
    #[default]
    Auto,
    Lanczos,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub n_modes: usize,
    pub method: EigenMethod,
    /// Largest admissible `max_boundary |φ₀| / max |φ₀|`.
    pub boundary_tol: f64,
    pub auto_expand: bool,
    pub max_expansions: usize,
    /// Decaying potentials must bind below `−gap_tol`.
    pub gap_tol: f64,
    pub cg_tol: f64,
    pub max_krylov: usize,
    /// Relative eigen-residual required of every solve.
    pub residual_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            n_modes: 2,
            method: EigenMethod::Auto,
            boundary_tol: 1e-10,
            auto_expand: true,
            max_expansions: 3,
            gap_tol: 1e-6,
            cg_tol: 1e-14,
            max_krylov: 300,
            residual_tol: 1e-8,
        }
    }
}

/// One eigenpair; `vector` is normalized so that `Σ v² h^d = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

/// Ground state and low spectrum of `H` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSolution {
    pub grid: Grid,
    /// Strictly positive ground state, `Σ φ₀² h^d = 1`.
    pub phi0: Vec<f64>,
    pub lambda0: f64,
    pub lambda1: f64,
    pub model_hash: String,
    pub kind: PotentialKind,
    /// Eigenpairs in increasing order; `modes[0]` is the ground state.
    pub modes: Vec<Mode>,
    /// `‖Hφ₀ − λ₀φ₀‖ / (‖H‖_bound ‖φ₀‖)`.
    pub residual: f64,
    /// `max_boundary φ₀ / max φ₀`.
    pub boundary_ratio: f64,
    /// Nodes whose sign had to be repaired (roundoff-level negatives).
    pub sign_repairs: usize,
    pub method: EigenMethod,
}

impl SpectralSolution {
    pub fn gap(&self) -> f64 {
        self.lambda1 - self.lambda0
    }

    /// `φ₀` rescaled to unit `L²` norm on the grid, whatever was stored.
    pub fn normalized_phi0(&self) -> Vec<f64> {
        let h = self.grid.cell_volume();
        let s = self.phi0.iter().map(|v| v * v).sum::<f64>() * h;
        let k = 1.0 / s.sqrt();
        self.phi0.iter().map(|v| v * k).collect()
    }

    /// Copy with `φ₀` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.phi0 {
            *v *= factor;
        }
        out
    }

    /// Nodes where `φ₀ ≥ floor · max φ₀`.
    pub fn mask_above(&self, floor: f64) -> Vec<bool> {
        let max = self.phi0.iter().copied().fold(0.0, f64::max);
        self.phi0.iter().map(|&v| v >= floor * max).collect()
    }

    /// Radius of the certified window: nodes with `φ₀` above 10³ times the
    /// boundary value, reported as the largest radius `r` such that every node
    /// with `|x| ≤ r` qualifies.
    pub fn certified_radius(&self) -> f64 {
        let b = self
            .grid
            .boundary_indices()
            .iter()
            .map(|&i| self.phi0[i])
            .fold(0.0, f64::max);
        let thr = 1e3 * b;
        let mut r_fail = f64::INFINITY;
        for (i, &v) in self.phi0.iter().enumerate() {
            if v <= thr {
                r_fail = r_fail.min(self.grid.radius(i));
            }
        }
        r_fail.min(self.grid.half_width) - self.grid.spacing()
    }
}

/// Conjugate gradients for `(H − shift) x = b`, Jacobi preconditioned.
pub fn cg_solve(
    op: &Operator,
    shift: f64,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let diag = op.diagonal(shift);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        op.apply(&p, &mut ap);
        for (a, pv) in ap.iter_mut().zip(&p) {
            *a -= shift * pv;
        }
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= tol * bnorm {
            return Ok((x, it + 1));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Roundoff floors the attainable residual; accept a near miss.
    let mut check = vec![0.0; n];
    op.apply(&x, &mut check);
    let res: f64 = check
        .iter()
        .zip(&x)
        .zip(b)
        .map(|((hx, xv), bv)| (hx - shift * xv - bv).powi(2))
        .sum::<f64>()
        .sqrt();
    if res <= 1e3 * tol * bnorm {
        Ok((x, max_iter))
    } else {
        Err(Error::EigenNonConvergence {
            iterations: max_iter,
            residual: res / bnorm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let s = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= s;
    }
    s
}

// Deterministic start vector with both even and odd content.
fn start_vector(grid: &Grid) -> Vec<f64> {
    let s = 0.25 * grid.half_width;
    (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let tilt: f64 = x.iter().enumerate().map(|(k, v)| (0.3 + 0.1 * k as f64) * v).sum();
            let jitter = ((i as f64 * 0.618_033_988_749_895).fract() - 0.5) * 1e-3;
            (-r2 / (s * s)).exp() * (1.0 + tilt / grid.half_width) + jitter
        })
        .collect()
}

/// Lowest `k` eigenpairs by Lanczos on `(H − σ)^{-1}` with full
/// reorthogonalization. Vectors are returned with unit Euclidean norm.
fn lanczos(op: &Operator, k: usize, opts: &SolveOptions) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = op.len();
    let sigma = op.min_v() - 1.0;
    let max_iter = opts.max_krylov.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = start_vector(&op.grid);
    normalize(&mut v);
    basis.push(v);
    let cg_iters = 20 * (n as f64).sqrt() as usize + 2000;
    let mut converged: Option<(Vec<f64>, DMatrix<f64>)> = None;
    for j in 0..max_iter {
        let (mut w, _) = cg_solve(op, sigma, &basis[j], opts.cg_tol, cg_iters)?;
        let a = dot(&w, &basis[j]);
        alphas.push(a);
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = dot(&w, &w).sqrt();
        let m = j + 1;
        if m >= k + 2 && (m % 4 == 0 || b < 1e-14 || m == max_iter) {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
            let ok = order.iter().take(k).all(|&i| {
                let theta = eig.eigenvalues[i];
                (b * eig.eigenvectors[(m - 1, i)]).abs() <= 1e-13 * theta.abs()
            });
            if ok || b < 1e-14 {
                let thetas: Vec<f64> = order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
                let mut s = DMatrix::<f64>::zeros(m, k);
                for (c, &i) in order.iter().take(k).enumerate() {
                    for r in 0..m {
                        s[(r, c)] = eig.eigenvectors[(r, i)];
                    }
                }
                converged = Some((thetas, s));
                break;
            }
        }
        if j + 1 == max_iter {
            break;
        }
        betas.push(b);
        for x in w.iter_mut() {
            *x /= b;
        }
        basis.push(w);
    }
    let (thetas, s) = converged.ok_or(Error::EigenNonConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })?;
    let mut out = Vec::with_capacity(k);
    for (c, theta) in thetas.iter().enumerate() {
        let mut y = vec![0.0; n];
        for (r, q) in basis.iter().enumerate().take(s.nrows()) {
            let coef = s[(r, c)];
            for (yi, qi) in y.iter_mut().zip(q) {
                *yi += coef * qi;
            }
        }
        normalize(&mut y);
        out.push((sigma + 1.0 / theta, y));
    }
    Ok(out)
}

/// Dense matrix of the discretized operator (one-dimensional grids).
pub fn dense_matrix(op: &Operator) -> Result<DMatrix<f64>> {
    if op.grid.d != 1 {
        return Err(invalid("grid.d", "dense assembly is one-dimensional"));
    }
    let n = op.grid.n;
    let mut buf: Vec<Complex64> = op
        .multiplier
        .iter()
        .map(|&m| Complex64::new(m, 0.0))
        .collect();
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    let c: Vec<f64> = buf.iter().map(|z| z.re / n as f64).collect();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = c[(i + n - j) % n];
        }
        h[(i, i)] += op.v[i];
    }
    // Exact symmetry despite FFT roundoff.
    let ht = h.transpose();
    Ok((h + ht) * 0.5)
}

/// Full dense eigendecomposition, ascending; unit Euclidean vectors.
pub fn dense_eigen(op: &Operator) -> Result<Vec<(f64, Vec<f64>)>> {
    let h = dense_matrix(op)?;
    let eig = SymmetricEigen::new(h);
    let n = op.grid.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(order
        .into_iter()
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
        .collect())
}

fn residual_of(op: &Operator, v: &[f64], lambda: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    op.apply(v, &mut hv);
    let r: f64 = hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    r / (op.norm_bound() * dot(v, v).sqrt())
}

fn rayleigh(op: &Operator, v: &[f64]) -> f64 {
    let mut hv = vec![0.0; v.len()];
    op.apply(v, &mut hv);
    dot(v, &hv) / dot(v, v)
}

// Shifted inverse iteration just below λ₀ to polish the ground vector.
fn polish_ground(op: &Operator, v: &mut Vec<f64>, lambda0: f64, lambda1: f64, opts: &SolveOptions) {
    let shift = lambda0 - 0.5 * (lambda1 - lambda0).max(1e-6);
    let mut best = residual_of(op, v, lambda0);
    for _ in 0..8 {
        let Ok((mut w, _)) = cg_solve(op, shift, v, opts.cg_tol, 20_000) else {
            return;
        };
        normalize(&mut w);
        let lam = rayleigh(op, &w);
        let res = residual_of(op, &w, lam);
        if res < best {
            best = res;
            *v = w;
        } else {
            break;
        }
    }
}

/// Ground state of an assembled operator (no grid expansion).
pub fn ground_state(op: &Operator, opts: &SolveOptions) -> Result<SpectralSolution> {
    let k = opts.n_modes.max(2);
    if k > op.len() {
        return Err(Error::ModeCount {
            requested: k,
            available: op.len(),
        });
    }
    let method = match opts.method {
        EigenMethod::Auto if op.grid.d == 1 && op.grid.n <= 512 => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Lanczos,
        m => m,
    };
    let mut pairs = match method {
        EigenMethod::Dense => dense_eigen(op)?,
        _ => lanczos(op, k, opts)?,
    };
    if method == EigenMethod::Lanczos {
        for p in pairs.iter_mut() {
            p.0 = rayleigh(op, &p.1);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (l0, l1) = (pairs[0].0, pairs[1].0);
        let mut v = std::mem::take(&mut pairs[0].1);
        polish_ground(op, &mut v, l0, l1, opts);
        pairs[0].0 = rayleigh(op, &v);
        pairs[0].1 = v;
    } else if opts.n_modes > 0 && opts.n_modes < pairs.len() && opts.n_modes != op.len() {
        // Dense keeps every mode; they are needed for complete kernels.
    }
    let lambda0 = pairs[0].0;
    let lambda1 = pairs[1].0;
    if op.kind() == PotentialKind::Decaying && lambda0 >= -opts.gap_tol {
        return Err(Error::NoBoundState {
            lambda0,
            gap_tol: opts.gap_tol,
        });
    }
    let residual = residual_of(op, &pairs[0].1, lambda0);
    if residual > opts.residual_tol {
        return Err(Error::EigenNonConvergence {
            iterations: opts.max_krylov,
            residual,
        });
    }
    // Fix the sign and repair roundoff-level negatives.
    let mut v0 = pairs[0].1.clone();
    if v0.iter().sum::<f64>() < 0.0 {
        for x in v0.iter_mut() {
            *x = -*x;
        }
    }
    let vmax = v0.iter().copied().fold(0.0, f64::max);
    let vmin = v0.iter().copied().fold(f64::INFINITY, f64::min);
    if vmin < -1e-6 * vmax {
        return Err(Error::SignChange { ratio: vmin / vmax });
    }
    let tiny = f64::MIN_POSITIVE;
    let mut sign_repairs = 0;
    for x in v0.iter_mut() {
        if *x <= 0.0 {
            sign_repairs += 1;
            *x = x.abs().max(tiny);
        }
    }
    let inv_sqrt_h = 1.0 / op.grid.cell_volume().sqrt();
    let phi0: Vec<f64> = v0.iter().map(|x| x * inv_sqrt_h).collect();
    let boundary_ratio = op
        .grid
        .boundary_indices()
        .iter()
        .map(|&i| phi0[i])
        .fold(0.0, f64::max)
        / phi0.iter().copied().fold(0.0, f64::max);
    let keep = if method == EigenMethod::Dense {
        pairs.len()
    } else {
        k
    };
    let modes: Vec<Mode> = pairs
        .into_iter()
        .take(keep)
        .enumerate()
        .map(|(i, (lambda, v))| Mode {
            lambda,
            vector: if i == 0 {
                phi0.clone()
            } else {
                v.iter().map(|x| x * inv_sqrt_h).collect()
            },
        })
        .collect();
    Ok(SpectralSolution {
        grid: op.grid,
        phi0,
        lambda0,
        lambda1,
        model_hash: op.model_hash.clone(),
        kind: op.kind(),
        modes,
        residual,
        boundary_ratio,
        sign_repairs,
        method,
    })
}

/// Builds the operator and solves, widening the grid (same spacing or finer)
/// while the ground state leaks through the boundary. Decaying potentials
/// accept leakage and report it.
pub fn solve(
    model: &LevyModel,
    potential: &Potential,
    grid: Grid,
    opts: &SolveOptions,
) -> Result<(SpectralSolution, Operator)> {
    let mut grid = grid;
    let mut expansions = 0;
    loop {
        let op = build_operator(model, potential, grid)?;
        let sol = ground_state(&op, opts)?;
        if sol.boundary_ratio <= opts.boundary_tol || potential.kind() == PotentialKind::Decaying {
            return Ok((sol, op));
        }
        if !opts.auto_expand || expansions >= opts.max_expansions {
            return Err(Error::BoundaryLeak {
                ratio: sol.boundary_ratio,
                tol: opts.boundary_tol,
            });
        }
        expansions += 1;
        grid = Grid::new(grid.d, 2.0 * grid.half_width, 2 * grid.n)?;
    }
}

/// `λ₀` of Brownian motion (`−Δ/2`) in the well `−v·1{|x| ≤ a}`, solving
/// `tan(a√(2(v−E))) = √(E/(v−E))` for `E = |λ₀|` with `a√(2(v−E)) < π/2`.
pub fn well_eigenvalue(a: f64, v: f64) -> Result<f64> {
    if !(a > 0.0 && v > 0.0) {
        return Err(invalid("well", "a and v must be positive"));
    }
    // g(E) = k sin(ka) − κ cos(ka), k = √(2(v−E)), κ = √(2E); decreasing root.
    let g = |e: f64| {
        let k = (2.0 * (v - e)).sqrt();
        let kappa = (2.0 * e).sqrt();
        k * (k * a).sin() - kappa * (k * a).cos()
    };
    let mut lo = (v - std::f64::consts::PI.powi(2) / (8.0 * a * a)).max(0.0);
    let mut hi = v;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * v.max(1.0) {
            break;
        }
    }
    Ok(-0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_eigenvalue_regression_and_equation() {
        let l = well_eigenvalue(1.0, 1.0).unwrap();
        let e = -l;
        let k = (2.0 * (1.0 - e)).sqrt();
        assert!(((k).tan() - (e / (1.0 - e)).sqrt()).abs() < 1e-10);
        assert!(k < std::f64::consts::FRAC_PI_2);
        assert!((e - 0.603_898).abs() < 1e-5, "{e}");
    }

    #[test]
    fn cg_solves_shifted_system() {
        let g = Grid::new(1, 6.0, 128).unwrap();
        let op = build_operator(&LevyModel::stable(1, 1.0, 1.0), &Potential::harmonic(), g).unwrap();
        let b: Vec<f64> = (0..128).map(|i| ((i as f64) * 0.1).sin()).collect();
        let (x, _) = cg_solve(&op, -1.0, &b, 1e-13, 5000).unwrap();
        let mut hx = vec![0.0; 128];
        op.apply(&x, &mut hx);
        for i in 0..128 {
            assert!((hx[i] + x[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let g = Grid::new(1, 8.0, 256).unwrap();
        let op = build_operator(&LevyModel::stable(1, 1.0, 1.0), &Potential::harmonic(), g).unwrap();
        let dense = ground_state(
            &op,
            &SolveOptions {
                method: EigenMethod::Dense,
                ..Default::default()
            },
        )
        .unwrap();
        let lan = ground_state(
            &op,
            &SolveOptions {
                method: EigenMethod::Lanczos,
                n_modes: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((dense.lambda0 - lan.lambda0).abs() < 1e-9);
        assert!((dense.lambda1 - lan.lambda1).abs() < 1e-8);
        for m in 0..4 {
            assert!((dense.modes[m].lambda - lan.modes[m].lambda).abs() < 1e-8);
        }
        let diff = dense
            .phi0
            .iter()
            .zip(&lan.phi0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }
}
