//! Discretization of `H = ψ(−i∇) + V`, ground states and Feynman–Kac kernels.

pub mod artifact;
mod eigen;
mod grid;
mod kernel;
mod operator;

pub use eigen::{
    cg_solve, dense_eigen, dense_matrix, ground_state, solve, well_eigenvalue, EigenMethod, Mode,
    SolveOptions, SpectralSolution,
};
pub use grid::Grid;
pub use kernel::{fk_kernel, KernelMatrix, KERNEL_TRUNCATION_TOL};
pub use operator::{build_operator, model_hash, Operator};
