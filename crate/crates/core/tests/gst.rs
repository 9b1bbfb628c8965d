use std::f64::consts::PI;

use gstlab::gst::{
    chapman_kolmogorov_defect, compare_ground_states, gst_fields, intrinsic_kernel, sandwich_check,
    stationary_density, SandwichOptions, SandwichRegime,
};
use gstlab::levy::LevyModel;
use gstlab::potentials::Potential;
use gstlab::spectral::{solve, EigenMethod, Grid, SolveOptions, SpectralSolution};
use gstlab::Error;
use proptest::prelude::*;

fn all_modes(n: usize) -> SolveOptions {
    SolveOptions {
        method: EigenMethod::Dense,
        n_modes: n,
        ..SolveOptions::default()
    }
}

fn ou(gamma: f64, n: usize) -> (SpectralSolution, LevyModel) {
    let model = LevyModel::brownian(1, 1.0);
    let grid = Grid::new(1, 10.0 / gamma.sqrt(), n).unwrap();
    let (sol, _) = solve(&model, &Potential::ornstein_uhlenbeck(gamma), grid, &all_modes(n)).unwrap();
    (sol, model)
}

fn stable_harmonic() -> (SpectralSolution, LevyModel, Potential) {
    let model = LevyModel::stable(1, 1.0, 1.0);
    let pot = Potential::harmonic();
    let opts = SolveOptions {
        boundary_tol: 1e-3,
        auto_expand: false,
        ..all_modes(256)
    };
    let (sol, _) = solve(&model, &pot, Grid::new(1, 30.0, 256).unwrap(), &opts).unwrap();
    (sol, model, pot)
}

#[test]
fn intrinsic_kernel_is_markov_and_symmetric() {
    let (a, _) = ou(1.0, 128);
    let (b, _, _) = stable_harmonic();
    for sol in [&a, &b] {
        for t in [0.25, 1.0, 3.0] {
            let k = intrinsic_kernel(sol, t, None).unwrap();
            assert!(k.normalization_defect < 1e-6, "t = {t}: {}", k.normalization_defect);
            assert!(k.asymmetry() < 1e-9, "t = {t}: {}", k.asymmetry());
        }
    }
}

#[test]
fn intrinsic_kernel_tends_to_one() {
    // max |ũ(t) − 1| ≤ C e^{−(λ₁−λ₀)t}: the scaled deviation settles to a
    // constant once higher modes have died out.
    let (sol, _) = ou(1.0, 128);
    let grid = sol.grid;
    let inner: Vec<usize> = (0..grid.n).filter(|&i| grid.node(i)[0].abs() <= 3.0).collect();
    let scaled: Vec<f64> = [6.0, 9.0, 12.0]
        .iter()
        .map(|&t| {
            let k = intrinsic_kernel(&sol, t, None).unwrap();
            let worst = inner
                .iter()
                .flat_map(|&i| inner.iter().map(move |&j| (i, j)))
                .map(|(i, j)| (k.get(i, j) - 1.0).abs())
                .fold(0.0f64, f64::max);
            worst * (sol.gap() * t).exp()
        })
        .collect();
    assert!((scaled[1] / scaled[0] - 1.0).abs() < 0.1, "{scaled:?}");
    assert!((scaled[2] / scaled[1] - 1.0).abs() < 0.02, "{scaled:?}");
    assert!(scaled[2] < 20.0, "{scaled:?}");
}

/// OU transition density for `dX = −X dt + dB`, divided by the stationary
/// density `π^{−1/2} e^{−y²}`.
fn mehler(t: f64, x: f64, y: f64) -> f64 {
    let m = x * (-t).exp();
    let v = 0.5 * (1.0 - (-2.0 * t).exp());
    let p = (-(y - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
    p / ((-y * y).exp() / PI.sqrt())
}

#[test]
fn ou_intrinsic_kernel_matches_mehler() {
    let (sol, _) = ou(1.0, 128);
    let k = intrinsic_kernel(&sol, 1.0, None).unwrap();
    let grid = sol.grid;
    let mut worst: f64 = 0.0;
    for i in 0..grid.n {
        for j in 0..grid.n {
            let (x, y) = (grid.node(i)[0], grid.node(j)[0]);
            if x.abs() <= 3.0 && y.abs() <= 3.0 {
                worst = worst.max((k.get(i, j) - mehler(1.0, x, y)).abs());
            }
        }
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn chapman_kolmogorov() {
    let (a, _) = ou(1.0, 128);
    let (b, _, _) = stable_harmonic();
    for sol in [&a, &b] {
        let k1 = intrinsic_kernel(sol, 0.5, None).unwrap();
        let k2 = intrinsic_kernel(sol, 1.0, None).unwrap();
        assert!(chapman_kolmogorov_defect(&k1, &k2) < 1e-5);
    }
}

#[test]
fn ou_stationary_density_is_gaussian() {
    for gamma in [1.0, 4.0] {
        let (sol, _) = ou(gamma, 256);
        let p = stationary_density(&sol);
        let grid = sol.grid;
        let mut worst: f64 = 0.0;
        let mut asym: f64 = 0.0;
        for i in 0..grid.n {
            let x = grid.node(i)[0];
            worst = worst.max((p[i] - (gamma / PI).sqrt() * (-gamma * x * x).exp()).abs());
            asym = asym.max((p[i] - p[grid.mirror(i)]).abs());
        }
        assert!(worst < 1e-6, "γ = {gamma}: {worst}");
        assert!(asym <= 1e-10);
        let mass: f64 = p.iter().sum::<f64>() * grid.spacing();
        assert!((mass - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ou_drift_is_linear() {
    for gamma in [1.0, 2.0] {
        let (sol, model) = ou(gamma, 256);
        let f = gst_fields(&sol, &model).unwrap();
        for x in [-2.0, -0.5, 0.0, 0.3, 1.0, 2.5] {
            let x = x / gamma.sqrt();
            let b = f.drift(&[x]).unwrap()[0];
            assert!((b + gamma * x).abs() < 1e-6, "γ = {gamma}, x = {x}: {b}");
            assert_eq!(f.bias(&[x], &[0.0]).unwrap(), 1.0);
        }
    }
}

#[test]
fn finite_well_drift_outside() {
    let model = LevyModel::brownian(1, 1.0);
    let pot = Potential::Well {
        depth: 1.0,
        radius: 1.0,
    };
    let (sol, _) = solve(&model, &pot, Grid::new(1, 20.0, 1024).unwrap(), &SolveOptions::default()).unwrap();
    let f = gst_fields(&sol, &model).unwrap();
    let speed = (2.0 * sol.lambda0.abs()).sqrt();
    for x in [1.5f64, 2.0, 4.0, 6.0, -2.5, -5.0] {
        let b = f.drift(&[x]).unwrap()[0];
        assert!((b + speed * x.signum()).abs() < 1e-4, "x = {x}: {b} vs {speed}");
    }
}

#[test]
fn sandwich_requires_jumps() {
    let (sol, model) = ou(1.0, 128);
    let r = sandwich_check(&sol, &model, &Potential::ornstein_uhlenbeck(1.0), &SandwichOptions::default());
    assert!(matches!(r, Err(Error::NotApplicable(_))));
}

#[test]
fn sandwich_low_lying_exponential_jumps() {
    // Relativistic jumps (class L3, ν ≍ e^{−r} r^{−3/2}) in a deep well:
    // |λ₀| exceeds the mass, so φ₀ ≍ 1∧ν.
    let model = LevyModel::relativistic(1, 1.0, 1.0);
    let pot = Potential::Well {
        depth: 6.0,
        radius: 1.0,
    };
    let opts = SolveOptions::default();
    let (sol, _) = solve(&model, &pot, Grid::new(1, 40.0, 1024).unwrap(), &opts).unwrap();
    assert!(sol.lambda0 < -1.0, "{}", sol.lambda0);
    let rep = sandwich_check(&sol, &model, &pot, &SandwichOptions::default()).unwrap();
    assert_eq!(rep.regime, SandwichRegime::DecayingExponential);
    assert!(rep.spread() < 10.0, "spread {}", rep.spread());
}

#[test]
fn comparison_identity_ratio_is_one() {
    let (sol, _) = ou(1.0, 256);
    let rep = compare_ground_states(&sol, &sol, 1.0).unwrap();
    let e = rep.entries.iter().find(|e| e.c == 1.0).unwrap();
    assert!((e.min_ratio - 1.0).abs() < 1e-12, "{}", e.min_ratio);
}

fn scaled_outputs_agree(sol: &SpectralSolution, model: &LevyModel, kappa: f64) -> Result<(), TestCaseError> {
    let scaled = sol.scaled(kappa);
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale.max(f64::MIN_POSITIVE);
    let k0 = intrinsic_kernel(sol, 1.0, None).unwrap();
    let k1 = intrinsic_kernel(&scaled, 1.0, None).unwrap();
    let kmax = k0.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in k0.values.iter().zip(&k1.values) {
        prop_assert!(rel(*a, *b, kmax) <= 1e-12);
    }
    let (p0, p1) = (stationary_density(sol), stationary_density(&scaled));
    let pmax = p0.iter().fold(0.0f64, |a, v| a.max(*v));
    for (a, b) in p0.iter().zip(&p1) {
        prop_assert!(rel(*a, *b, pmax) <= 1e-12);
    }
    let (f0, f1) = (gst_fields(sol, model).unwrap(), gst_fields(&scaled, model).unwrap());
    let xs = [-1.5, -0.4, 0.0, 0.7, 2.0];
    let dmax = xs
        .iter()
        .map(|&x| f0.drift(&[x]).unwrap()[0].abs())
        .fold(0.0f64, f64::max);
    for x in xs {
        prop_assert!(rel(f0.drift(&[x]).unwrap()[0], f1.drift(&[x]).unwrap()[0], dmax) <= 1e-12);
        let (b0, b1) = (f0.bias(&[x], &[0.8]).unwrap(), f1.bias(&[x], &[0.8]).unwrap());
        prop_assert!(rel(b0, b1, b0) <= 1e-12);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_invariance(log_kappa in -7.0f64..7.0) {
        let (sol, model) = ou(1.0, 128);
        scaled_outputs_agree(&sol, &model, log_kappa.exp())?;
    }

    #[test]
    fn bias_cocycle(x in -4.0f64..4.0, z in -3.0f64..3.0, w in -3.0f64..3.0) {
        let (sol, model, _) = stable_harmonic();
        let f = gst_fields(&sol, &model).unwrap();
        prop_assume!(f.log_phi.inside(&[x + z]));
        let lhs = f.bias(&[x], &[z]).unwrap() * f.bias(&[x + z], &[w]).unwrap();
        let rhs = f.bias(&[x], &[z + w]).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}
