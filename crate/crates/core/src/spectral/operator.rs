use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use sha2::{Digest, Sha256};

use super::grid::Grid;
use crate::error::Result;
use crate::levy::LevyModel;
use crate::potentials::{Potential, PotentialKind};

/// Discretized `H = ψ(−i∇) + V` on a periodic grid.
///
/// The kinetic part acts as a Fourier multiplier, so one application costs
/// two FFTs.
pub struct Operator {
    pub grid: Grid,
    pub model: LevyModel,
    pub potential: Potential,
    /// `V` at the nodes (cell-averaged for wells, regularized for
    /// singular families).
    pub v: Vec<f64>,
    /// `ψ` at the discrete frequencies, FFT order.
    pub multiplier: Vec<f64>,
    pub model_hash: String,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Operator")
            .field("grid", &self.grid)
            .field("model", &self.model)
            .field("potential", &self.potential)
            .field("model_hash", &self.model_hash)
            .finish()
    }
}

/// Provenance hash of a (model, potential) pair.
pub fn model_hash(model: &LevyModel, potential: &Potential) -> String {
    let json = serde_json::to_string(&(model, potential)).expect("serializable");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub fn build_operator(model: &LevyModel, potential: &Potential, grid: Grid) -> Result<Operator> {
    grid.validate()?;
    model.validate()?;
    potential.validate(grid.d)?;
    if model.dim() != grid.d {
        return Err(crate::error::invalid(
            "grid.d",
            format!("model dimension {} differs from grid {}", model.dim(), grid.d),
        ));
    }
    let norms = grid.frequency_norms();
    let multiplier = symbol_table(model, &norms)?;
    let v = potential_on_grid(potential, &grid);
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(grid.n);
    let inverse = planner.plan_fft_inverse(grid.n);
    Ok(Operator {
        grid,
        model: *model,
        potential: potential.clone(),
        v,
        multiplier,
        model_hash: model_hash(model, potential),
        forward,
        inverse,
    })
}

// ψ is radial: evaluate once per distinct |ξ|.
fn symbol_table(model: &LevyModel, norms: &[f64]) -> Result<Vec<f64>> {
    let mut uniq: Vec<f64> = norms.to_vec();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();
    let vals: Vec<Result<f64>> = uniq.par_iter().map(|&k| model.symbol_radial(k)).collect();
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(norms
        .iter()
        .map(|k| {
            let i = uniq.partition_point(|u| u < k);
            vals[i]
        })
        .collect())
}

fn potential_on_grid(potential: &Potential, grid: &Grid) -> Vec<f64> {
    let h = grid.spacing();
    (0..grid.len())
        .map(|idx| {
            let x = grid.node(idx);
            match potential {
                Potential::Well { depth, radius } => -depth * well_cell_fraction(&x, h, *radius),
                _ => potential.eval_regularized(&x, h),
            }
        })
        .collect()
}

// Fraction of the cell centred at x lying inside the ball of the given radius.
fn well_cell_fraction(x: &[f64], h: f64, radius: f64) -> f64 {
    match x.len() {
        1 => {
            let lo = (x[0] - 0.5 * h).max(-radius);
            let hi = (x[0] + 0.5 * h).min(radius);
            ((hi - lo) / h).clamp(0.0, 1.0)
        }
        _ => {
            const M: usize = 16;
            let mut inside = 0usize;
            for a in 0..M {
                for b in 0..M {
                    let px = x[0] + ((a as f64 + 0.5) / M as f64 - 0.5) * h;
                    let py = x[1] + ((b as f64 + 0.5) / M as f64 - 0.5) * h;
                    if px * px + py * py <= radius * radius {
                        inside += 1;
                    }
                }
            }
            inside as f64 / (M * M) as f64
        }
    }
}

impl Operator {
    pub fn kind(&self) -> PotentialKind {
        self.potential.kind()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let m = self.multiplier.iter().copied().fold(0.0, f64::max);
        let v = self.v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        m + v
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Applies only the Fourier multiplier `ψ(−i∇)`.
    pub fn apply_kinetic(&self, x: &[f64], out: &mut [f64]) {
        let n = self.grid.n;
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, true);
        let scale = 1.0 / self.grid.len() as f64;
        for (b, m) in buf.iter_mut().zip(&self.multiplier) {
            *b *= m * scale;
        }
        self.transform(&mut buf, false);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re;
        }
        debug_assert_eq!(out.len(), n.pow(self.grid.d as u32));
    }

    /// `out = H x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_kinetic(x, out);
        for ((o, v), xi) in out.iter_mut().zip(&self.v).zip(x) {
            *o += v * xi;
        }
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let plan = if forward { &self.forward } else { &self.inverse };
        let n = self.grid.n;
        match self.grid.d {
            1 => plan.process(buf),
            _ => {
                plan.process(buf); // rows
                let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
                transpose(buf, &mut t, n);
                plan.process(&mut t); // columns
                transpose(&t, buf, n);
            }
        }
    }

    /// Jacobi preconditioner diagonal for `H − shift`.
    pub fn diagonal(&self, shift: f64) -> Vec<f64> {
        let mean_m = self.multiplier.iter().sum::<f64>() / self.multiplier.len() as f64;
        self.v.iter().map(|v| mean_m + v - shift).collect()
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_in_kernel_of_kinetic_part() {
        let g = Grid::new(1, 5.0, 64).unwrap();
        let op = build_operator(&LevyModel::brownian(1, 2.0), &Potential::harmonic(), g).unwrap();
        let ones = vec![1.0; 64];
        let mut out = vec![0.0; 64];
        op.apply_kinetic(&ones, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn fourier_modes_are_eigenvectors_of_multiplier() {
        let g = Grid::new(2, 4.0, 64).unwrap();
        let op = build_operator(&LevyModel::stable(2, 1.0, 1.0), &Potential::harmonic(), g).unwrap();
        let (ka, kb) = (3.0, -5.0);
        let w = std::f64::consts::PI / g.half_width;
        let x: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.node(i);
                (w * (ka * p[0] + kb * p[1])).cos()
            })
            .collect();
        let mut out = vec![0.0; g.len()];
        op.apply_kinetic(&x, &mut out);
        let lam = w * (ka * ka + kb * kb as f64).sqrt();
        for (o, xi) in out.iter().zip(&x) {
            assert!((o - lam * xi).abs() < 1e-10);
        }
    }

    #[test]
    fn well_is_cell_averaged() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        let v = potential_on_grid(
            &Potential::Well {
                depth: 2.0,
                radius: 1.0,
            },
            &g,
        );
        let h = g.spacing();
        let integral: f64 = v.iter().sum::<f64>() * h;
        assert!((integral + 4.0).abs() < 1e-12);
    }
}
