use std::f64::consts::PI;

use gstlab::levy::LevyModel;
use gstlab::potentials::Potential;
use gstlab::spectral::{build_operator, fk_kernel, solve, well_eigenvalue, EigenMethod, Grid, SolveOptions};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Independent dense assembly of `H = ψ(−i d/dx) + V` on a periodic 1-d
/// grid: `K_jk = (1/n) Σ_m ψ(ξ_m) cos(ξ_m (j − k) h)`.
fn dense_oracle(model: &LevyModel, potential: &Potential, grid: Grid) -> Vec<f64> {
    let n = grid.n;
    let h = grid.spacing();
    let xi: Vec<f64> = (0..n)
        .map(|m| {
            let k = m as i64 - (n / 2) as i64;
            PI * k as f64 / grid.half_width
        })
        .collect();
    let psi: Vec<f64> = xi.iter().map(|&x| model.symbol(&[x]).unwrap()).collect();
    let row: Vec<f64> = (0..n)
        .map(|l| {
            xi.iter()
                .zip(&psi)
                .map(|(&x, &p)| p * (x * l as f64 * h).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            a[(j, k)] = row[j.abs_diff(k)];
        }
        a[(j, j)] += potential.eval(&[-grid.half_width + j as f64 * h]);
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn ou() -> (LevyModel, Potential) {
    (LevyModel::brownian(1, 1.0), Potential::ornstein_uhlenbeck(1.0))
}

fn stable_harmonic() -> (LevyModel, Potential) {
    (LevyModel::stable(1, 1.0, 1.0), Potential::harmonic())
}

fn dense() -> SolveOptions {
    SolveOptions {
        method: EigenMethod::Dense,
        ..SolveOptions::default()
    }
}

#[test]
fn ou_operator_annihilates_closed_form_ground_state() {
    let (model, pot) = ou();
    let grid = Grid::new(1, 12.0, 1024).unwrap();
    let op = build_operator(&model, &pot, grid).unwrap();
    let phi: Vec<f64> = grid
        .axis()
        .iter()
        .map(|x| PI.powf(-0.25) * (-x * x / 2.0).exp())
        .collect();
    let mut out = vec![0.0; phi.len()];
    op.apply(&phi, &mut out);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(norm(&out) / norm(&phi) <= 1e-6, "{}", norm(&out) / norm(&phi));
}

#[test]
fn ou_spectrum_matches_dense_oracle() {
    let (model, pot) = ou();
    let grid = Grid::new(1, 12.0, 256).unwrap();
    let (sol, _) = solve(&model, &pot, grid, &SolveOptions::default()).unwrap();
    let oracle = dense_oracle(&model, &pot, grid);
    assert!((sol.lambda0 - oracle[0]).abs() < 1e-8);
    assert!((sol.lambda1 - oracle[1]).abs() < 1e-8);
    assert!(sol.lambda0.abs() < 1e-8);
    assert!((sol.lambda1 - 1.0).abs() < 1e-6);
}

#[test]
fn stable_harmonic_matches_dense_oracle_and_regression() {
    let (model, pot) = stable_harmonic();
    let grid = Grid::new(1, 40.0, 512).unwrap();
    let opts = SolveOptions {
        boundary_tol: 1e-3,
        auto_expand: false,
        ..dense()
    };
    let (sol, _) = solve(&model, &pot, grid, &opts).unwrap();
    let oracle = dense_oracle(&model, &pot, grid);
    assert!((sol.lambda0 - oracle[0]).abs() < 1e-6, "{} vs {}", sol.lambda0, oracle[0]);
    assert!((sol.lambda0 - 1.0182879757).abs() < 1e-9, "{}", sol.lambda0);
    let lanczos = SolveOptions {
        method: EigenMethod::Lanczos,
        ..opts
    };
    let (sl, _) = solve(&model, &pot, grid, &lanczos).unwrap();
    assert!((sl.lambda0 - oracle[0]).abs() < 1e-6);
}

#[test]
fn finite_well_matches_transcendental_equation() {
    let model = LevyModel::brownian(1, 1.0);
    let pot = Potential::Well {
        depth: 1.0,
        radius: 1.0,
    };
    let (sol, _) = solve(&model, &pot, Grid::new(1, 20.0, 1024).unwrap(), &SolveOptions::default()).unwrap();
    assert!((sol.lambda0 - well_eigenvalue(1.0, 1.0).unwrap()).abs() < 1e-3);
}

#[test]
fn deep_well_limit() {
    // v − |λ₀| → π²/(8a²) as v → ∞; the approach is slow (∝ 1/√v).
    let target = PI * PI / 8.0;
    let gap = |v: f64| v + well_eigenvalue(1.0, v).unwrap();
    assert!((gap(1e4) / target - 1.0).abs() < 0.02);
    assert!((gap(100.0) / target - 1.0).abs() < 0.15);
    assert!(gap(1e4) > gap(100.0));
}

#[test]
fn well_depth_monotonicity() {
    let model = LevyModel::brownian(1, 1.0);
    let grid = Grid::new(1, 20.0, 1024).unwrap();
    let l: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&v| {
            let pot = Potential::Well {
                depth: v,
                radius: 1.0,
            };
            solve(&model, &pot, grid, &SolveOptions::default()).unwrap().0.lambda0
        })
        .collect();
    assert!(l[0] >= l[1] && l[1] >= l[2], "{l:?}");
}

#[test]
fn solve_invariants_on_catalog_problems() {
    let cases = [
        (ou(), Grid::new(1, 12.0, 256).unwrap(), SolveOptions::default()),
        (
            stable_harmonic(),
            Grid::new(1, 40.0, 512).unwrap(),
            SolveOptions {
                boundary_tol: 1e-3,
                auto_expand: false,
                ..SolveOptions::default()
            },
        ),
        (
            (LevyModel::relativistic(2, 1.0, 1.0), Potential::harmonic()),
            Grid::new(2, 8.0, 64).unwrap(),
            SolveOptions {
                boundary_tol: 1e-3,
                auto_expand: false,
                ..SolveOptions::default()
            },
        ),
    ];
    for ((model, pot), grid, opts) in cases {
        let (sol, _) = solve(&model, &pot, grid, &opts).unwrap();
        assert!(sol.residual <= 1e-8, "residual {}", sol.residual);
        assert!(sol.phi0.iter().all(|&v| v > 0.0));
        let mass: f64 = sol.phi0.iter().map(|v| v * v).sum::<f64>() * sol.grid.cell_volume();
        assert!((mass - 1.0).abs() <= 1e-10);
        assert!(sol.lambda0 < sol.lambda1);
    }
}

#[test]
fn grid_refinement_convergence() {
    let (model, pot) = ou();
    let l = |n| {
        solve(&model, &pot, Grid::new(1, 12.0, n).unwrap(), &SolveOptions::default())
            .unwrap()
            .0
            .lambda0
    };
    assert!((l(128) - l(256)).abs() < 1e-4);
    let (model, pot) = stable_harmonic();
    let opts = SolveOptions {
        method: EigenMethod::Lanczos,
        boundary_tol: 1e-3,
        auto_expand: false,
        ..SolveOptions::default()
    };
    let l = |n| solve(&model, &pot, Grid::new(1, 40.0, n).unwrap(), &opts).unwrap().0.lambda0;
    let (a, b) = (l(1024), l(2048));
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn fk_kernel_symmetry_and_long_time_limit() {
    let (model, pot) = ou();
    let grid = Grid::new(1, 10.0, 128).unwrap();
    let (sol, _) = solve(&model, &pot, grid, &SolveOptions { n_modes: 128, ..dense() }).unwrap();
    let k = fk_kernel(&sol, 0.5, 128).unwrap();
    assert!(k.asymmetry() <= 1e-14 * k.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let t = 8.0;
    let k = fk_kernel(&sol, t, 128).unwrap();
    let bound = (-(sol.lambda1 - sol.lambda0) * t).exp();
    let mut worst: f64 = 0.0;
    for i in (0..grid.n).step_by(4) {
        for j in (0..grid.n).step_by(4) {
            let lead = (-sol.lambda0 * t).exp() * sol.phi0[i] * sol.phi0[j];
            if lead > 1e-3 * sol.phi0[grid.n / 2].powi(2) {
                worst = worst.max((k.get(i, j) / lead - 1.0).abs());
            }
        }
    }
    assert!(worst < bound * 50.0, "{worst} vs e^(-gap t) = {bound}");
}

/// `E^x[exp(−∫₀^t V(B_s) ds)]` by Monte Carlo, trapezoidal time integral.
fn feynman_kac_mc(pot: &Potential, x: f64, t: f64, paths: usize, steps: usize, seed: u64) -> f64 {
    let dt = t / steps as f64;
    let sum: f64 = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut b = x;
            let mut acc = 0.5 * pot.eval(&[b]);
            for s in 1..=steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                b += dt.sqrt() * z;
                let w = if s == steps { 0.5 } else { 1.0 };
                acc += w * pot.eval(&[b]);
            }
            (-acc * dt).exp()
        })
        .sum();
    sum / paths as f64
}

#[test]
fn fk_kernel_matches_monte_carlo() {
    let (model, pot) = ou();
    let grid = Grid::new(1, 10.0, 128).unwrap();
    let (sol, _) = solve(&model, &pot, grid, &SolveOptions { n_modes: 128, ..dense() }).unwrap();
    let k = fk_kernel(&sol, 1.0, 128).unwrap();
    let h = grid.spacing();
    for x in [0.0, 1.0, -2.0] {
        let i = grid.nearest(&[x]).unwrap();
        let xi = grid.node(i)[0];
        let grid_mass: f64 = k.row(i).iter().sum::<f64>() * h;
        let mc = feynman_kac_mc(&pot, xi, 1.0, 100_000, 400, 17);
        assert!((grid_mass / mc - 1.0).abs() < 0.02, "x = {xi}: {grid_mass} vs {mc}");
    }
}
