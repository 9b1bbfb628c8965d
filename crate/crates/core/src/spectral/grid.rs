use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid on `[−R, R)^d` with `n` nodes per axis.
///
/// Nodes are `x_i = −R + i·h`, `h = 2R/n`. As a periodic lattice the node set
/// is symmetric about the origin: node `i` mirrors to `(n − i) mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(d: usize, half_width: f64, n: usize) -> Result<Self> {
        let g = Self { d, half_width, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d == 1 || self.d == 2) {
            return Err(invalid("grid.d", "only d = 1 and d = 2 are supported"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid("grid.half_width", "must be positive"));
        }
        if self.n < 64 || !self.n.is_power_of_two() {
            return Err(invalid("grid.n", format!("{} must be a power of two ≥ 64", self.n)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| -self.half_width + i as f64 * h).collect()
    }

    /// Coordinates of flat node `idx` (row-major, last axis fastest).
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        match self.d {
            1 => vec![-self.half_width + idx as f64 * h],
            _ => {
                let (i, j) = (idx / self.n, idx % self.n);
                vec![
                    -self.half_width + i as f64 * h,
                    -self.half_width + j as f64 * h,
                ]
            }
        }
    }

    pub fn radius(&self, idx: usize) -> f64 {
        self.node(idx).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Index of the node `−x`.
    pub fn mirror(&self, idx: usize) -> usize {
        let m = |i: usize| (self.n - i) % self.n;
        match self.d {
            1 => m(idx),
            _ => m(idx / self.n) * self.n + m(idx % self.n),
        }
    }

    /// Angular frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as i64;
        (0..n)
            .map(|j| {
                let k = if j < n / 2 { j } else { j - n };
                PI * k as f64 / self.half_width
            })
            .collect()
    }

    /// `|ξ|` for every flat frequency index.
    pub fn frequency_norms(&self) -> Vec<f64> {
        let f = self.frequencies();
        match self.d {
            1 => f.iter().map(|v| v.abs()).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for a in &f {
                    for b in &f {
                        out.push((a * a + b * b).sqrt());
                    }
                }
                out
            }
        }
    }

    /// Indices of the outermost layer of nodes.
    pub fn boundary_indices(&self) -> Vec<usize> {
        match self.d {
            1 => vec![0, 1, self.n - 1],
            _ => {
                let n = self.n;
                (0..self.len())
                    .filter(|&k| {
                        let (i, j) = (k / n, k % n);
                        i <= 1 || j <= 1 || i == n - 1 || j == n - 1
                    })
                    .collect()
            }
        }
    }

    /// Flat index of the node nearest to `x`, or `None` outside the grid.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let h = self.spacing();
        let mut idx = 0usize;
        for &c in x.iter().take(self.d) {
            let i = ((c + self.half_width) / h).round();
            if !(i >= 0.0 && i < self.n as f64) {
                return None;
            }
            idx = idx * self.n + i as usize;
        }
        Some(idx)
    }
}
