use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::SpectralSolution;
use crate::error::{invalid, Error, Result};

/// Dense kernel matrix over grid nodes, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub t: f64,
    pub size: usize,
    pub values: Vec<f64>,
    /// Estimated relative truncation error `e^{−(λ_m − λ₀)t}`; zero when
    /// every mode of the discrete operator was kept.
    pub truncation: f64,
    /// Negative entries set to zero.
    pub clamped: usize,
    pub modes_used: usize,
}

impl KernelMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    /// `max |K − Kᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.size;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Truncation tolerance above which `fk_kernel` refuses.
pub const KERNEL_TRUNCATION_TOL: f64 = 1e-6;

/// Feynman–Kac kernel `u(t,x,y) = Σ_{k<m} e^{−λ_k t} φ_k(x) φ_k(y)` from the
/// stored eigenpairs. Negative entries (truncation or roundoff) are clamped
/// to zero and counted.
pub fn fk_kernel(sol: &SpectralSolution, t: f64, m_modes: usize) -> Result<KernelMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", "must be positive"));
    }
    if m_modes == 0 || m_modes > sol.modes.len() {
        return Err(Error::ModeCount {
            requested: m_modes,
            available: sol.modes.len(),
        });
    }
    let n = sol.grid.len();
    let complete = m_modes == n;
    let truncation = if complete {
        0.0
    } else {
        let last = sol.modes[m_modes - 1].lambda;
        (-(last - sol.lambda0) * t).exp()
    };
    if truncation > KERNEL_TRUNCATION_TOL {
        return Err(Error::Truncation {
            estimate: truncation,
            tol: KERNEL_TRUNCATION_TOL,
        });
    }
    let modes = &sol.modes[..m_modes];
    let weights: Vec<f64> = modes.iter().map(|m| (-(m.lambda) * t).exp()).collect();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (k, m) in modes.iter().enumerate() {
            let a = weights[k] * m.vector[i];
            if a == 0.0 {
                continue;
            }
            for (r, v) in row.iter_mut().zip(&m.vector) {
                *r += a * v;
            }
        }
    });
    let mut clamped = 0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    Ok(KernelMatrix {
        t,
        size: n,
        values,
        truncation,
        clamped,
        modes_used: m_modes,
    })
}
