use gstlab::gst::{gst_fields, intrinsic_kernel};
use gstlab::levy::LevyModel;
use gstlab::potentials::{Potential, PotentialKind};
use gstlab::simulate::{
    chain_path, ks_critical_1pct, ks_statistic, sample_stationary, simulate_sde, simulate_sde_farm, GridCdf, RngSpec,
    SdeOptions, States, TransitionTable,
};
use gstlab::spectral::{solve, EigenMethod, Grid, SolveOptions, SpectralSolution};
use gstlab::Error;

fn all_modes(n: usize) -> SolveOptions {
    SolveOptions {
        method: EigenMethod::Dense,
        n_modes: n,
        ..SolveOptions::default()
    }
}

fn ou() -> (SpectralSolution, LevyModel) {
    let model = LevyModel::brownian(1, 1.0);
    let grid = Grid::new(1, 10.0, 256).unwrap();
    let (sol, _) = solve(&model, &Potential::ornstein_uhlenbeck(1.0), grid, &all_modes(256)).unwrap();
    (sol, model)
}

fn stable_harmonic() -> (SpectralSolution, LevyModel) {
    let model = LevyModel::stable(1, 1.0, 1.0);
    let opts = SolveOptions {
        boundary_tol: 1e-3,
        auto_expand: false,
        ..all_modes(256)
    };
    let (sol, _) = solve(&model, &Potential::harmonic(), Grid::new(1, 30.0, 256).unwrap(), &opts).unwrap();
    (sol, model)
}

/// Two-sample Kolmogorov–Smirnov distance.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n)
}

#[test]
fn stationary_sampler_matches_ou_law() {
    let (sol, _) = ou();
    let n = 1_000_000;
    let s = sample_stationary(&sol, n, RngSpec::new(1, 0)).unwrap();
    let x = s.coordinate(0);
    let (m, v) = mean_var(&x);
    assert!(m.abs() < 0.005, "{m}");
    assert!((v - 0.5).abs() < 0.01, "{v}");
    let cdf = GridCdf::stationary(&sol, 0);
    let d = ks_statistic(&x, |t| cdf.eval(t));
    assert!(d < ks_critical_1pct(n), "{d}");
    // Independent check against the exact Gaussian law N(0, 1/2).
    let erf_cdf = |t: f64| 0.5 * (1.0 + statrs::function::erf::erf(t));
    let d_exact = ks_statistic(&x, erf_cdf);
    assert!(d_exact < ks_critical_1pct(n), "{d_exact}");
    let again = sample_stationary(&sol, n, RngSpec::new(1, 0)).unwrap();
    assert_eq!(s, again);
}

#[test]
fn chain_preserves_stationary_marginals() {
    let (sol, _) = stable_harmonic();
    let k = intrinsic_kernel(&sol, 0.5, None).unwrap();
    let table = TransitionTable::new(&k, sol.grid).unwrap();
    let cdf = GridCdf::stationary(&sol, 0);
    let n = 4000;
    let starts = sample_stationary(&sol, n, RngSpec::new(5, 0)).unwrap();
    let paths: Vec<_> = (0..n)
        .map(|i| chain_path(&table, starts.get(i), 100, RngSpec::new(5, 1).child(i as u64)).unwrap())
        .collect();
    for step in [1, 10, 100] {
        let mut data = Vec::with_capacity(n);
        for p in &paths {
            data.extend_from_slice(p.states.get(step));
        }
        let jittered = States { d: 1, data }.cell_jittered(sol.grid.spacing(), RngSpec::new(5, 2 + step as u64));
        let d = ks_statistic(&jittered.coordinate(0), |t| cdf.eval(t));
        assert!(d < ks_critical_1pct(n), "step {step}: {d}");
    }
}

#[test]
fn chain_autocorrelation_decays_at_the_gap() {
    // φ₁/φ₀ is bounded for the stable model and is an exact eigenfunction of
    // the discrete chain, so its lag-k autocorrelation is e^{−gap·t·k}.
    let (sol, _) = stable_harmonic();
    let t = 0.5;
    let k = intrinsic_kernel(&sol, t, None).unwrap();
    let table = TransitionTable::new(&k, sol.grid).unwrap();
    let phi0 = &sol.modes[0].vector;
    let phi1 = &sol.modes[1].vector;
    let f: Vec<f64> = phi1.iter().zip(phi0).map(|(a, b)| a / b).collect();
    let n = 400_000;
    let path = chain_path(&table, &[0.0], n, RngSpec::new(9, 0)).unwrap();
    let obs: Vec<f64> = path
        .states
        .coordinate(0)
        .iter()
        .map(|x| f[sol.grid.nearest(&[*x]).unwrap()])
        .collect();
    let (m, v) = mean_var(&obs);
    let gap = sol.lambda1 - sol.lambda0;
    for lag in [1usize, 2] {
        let c = obs
            .windows(lag + 1)
            .map(|w| (w[0] - m) * (w[lag] - m))
            .sum::<f64>()
            / ((obs.len() - lag) as f64 * v);
        let want = (-gap * t * lag as f64).exp();
        assert!((c - want).abs() < 0.02, "lag {lag}: {c} vs {want}");
    }
}

#[test]
fn ou_sde_forgets_its_start() {
    let (sol, model) = ou();
    let fields = gst_fields(&sol, &model).unwrap();
    let n = 2000;
    let starts = States {
        d: 1,
        data: vec![2.0; n],
    };
    let opts = SdeOptions {
        dt: 0.01,
        horizon: 50.0,
        record_every: 5000,
        ..SdeOptions::default()
    };
    let paths = simulate_sde_farm(&sol, &fields, &starts, opts, RngSpec::new(3, 0)).unwrap();
    let last: Vec<f64> = paths.iter().map(|p| *p.states.data.last().unwrap()).collect();
    let cdf = GridCdf::stationary(&sol, 0);
    let d = ks_statistic(&last, |t| cdf.eval(t));
    assert!(d < ks_critical_1pct(n), "{d}");
    assert!(paths.iter().all(|p| p.diagnostics.clamp_count == 0));
}

#[test]
fn stable_sde_occupation_matches_ground_state() {
    let (sol, model) = stable_harmonic();
    let fields = gst_fields(&sol, &model).unwrap();
    let opts = SdeOptions {
        dt: 0.01,
        horizon: 10_000.0,
        record_every: 100,
        ..SdeOptions::default()
    };
    let path = simulate_sde(&sol, &fields, &[0.0], opts, RngSpec::new(4, 0)).unwrap();
    // Drop a burn-in of 100 time units; records are one time unit apart.
    let x: Vec<f64> = path.states.coordinate(0)[101..].to_vec();
    let cdf = GridCdf::stationary(&sol, 0);
    let d = ks_statistic(&x, |t| cdf.eval(t));
    assert!(d < 3.0 * ks_critical_1pct(x.len()), "{d}");
    assert_eq!(path.diagnostics.envelope_violations, 0);
}

#[test]
fn catalog_stable_run_never_clamps() {
    let model = LevyModel::stable(1, 1.0, 1.0);
    let opts = SolveOptions {
        boundary_tol: 1e-3,
        auto_expand: false,
        ..all_modes(512)
    };
    let (sol, _) = solve(&model, &Potential::harmonic(), Grid::new(1, 40.0, 512).unwrap(), &opts).unwrap();
    let fields = gst_fields(&sol, &model).unwrap();
    let starts = sample_stationary(&sol, 500, RngSpec::new(10, 0)).unwrap();
    let opts = SdeOptions {
        dt: 0.01,
        horizon: 10.0,
        ..SdeOptions::default()
    };
    let paths = simulate_sde_farm(&sol, &fields, &starts, opts, RngSpec::new(10, 1)).unwrap();
    let clamps: usize = paths.iter().map(|p| p.diagnostics.clamp_count).sum();
    assert_eq!(clamps, 0);
}

#[test]
fn chain_and_sde_agree_in_law() {
    let (sol, model) = stable_harmonic();
    let fields = gst_fields(&sol, &model).unwrap();
    let n = 100_000;
    let t = 1.0;
    let starts = sample_stationary(&sol, n, RngSpec::new(6, 0)).unwrap();

    let k = intrinsic_kernel(&sol, t, None).unwrap();
    let table = TransitionTable::new(&k, sol.grid).unwrap();
    let mut chain = Vec::with_capacity(n);
    for i in 0..n {
        let p = chain_path(&table, starts.get(i), 1, RngSpec::new(6, 1).child(i as u64)).unwrap();
        chain.extend_from_slice(p.states.get(1));
    }
    let chain = States { d: 1, data: chain }.cell_jittered(sol.grid.spacing(), RngSpec::new(6, 2));

    let opts = SdeOptions {
        dt: 0.01,
        horizon: t,
        record_every: 100,
        ..SdeOptions::default()
    };
    let paths = simulate_sde_farm(&sol, &fields, &starts, opts, RngSpec::new(6, 3)).unwrap();
    let sde: Vec<f64> = paths.iter().map(|p| p.states.data.last().unwrap().abs()).collect();
    let d = ks_two_sample(&chain.norms(), &sde);
    assert!(d < 0.02, "{d}");
}

#[test]
fn reweighted_jump_log_recovers_levy_measure() {
    // Accepted jumps arrive with intensity ν(z)·φ₀(x+z)/φ₀(x); dividing each
    // by its bias leaves ν itself.
    // A weak confinement keeps the bias near one over |z| ≤ 5, so the
    // reweighted counts have small variance.
    let model = LevyModel::stable(1, 1.0, 1.0);
    let v = Potential::Polynomial {
        coeff: 0.02,
        n: 1,
        offset: 0.0,
    };
    let opts = SolveOptions {
        boundary_tol: 1e-3,
        auto_expand: false,
        ..all_modes(512)
    };
    let (sol, _) = solve(&model, &v, Grid::new(1, 80.0, 512).unwrap(), &opts).unwrap();
    let fields = gst_fields(&sol, &model).unwrap();
    let eps = sol.grid.spacing();
    let opts = SdeOptions {
        dt: 0.01,
        horizon: 20_000.0,
        record_every: 1_000_000,
        log_jumps: true,
        ..SdeOptions::default()
    };
    let path = simulate_sde(&sol, &fields, &[0.0], opts, RngSpec::new(8, 0)).unwrap();
    let edges = [eps, 0.5, 1.0, 2.5, 5.0];
    let mut w = [0.0; 4];
    let mut counts = [0usize; 4];
    for j in path.jump_log.iter().filter(|j| j.accepted) {
        let r = j.z[0].abs();
        if let Some(b) = (0..4).find(|&b| r >= edges[b] && r < edges[b + 1]) {
            w[b] += 1.0 / j.bias;
            counts[b] += 1;
        }
    }
    // ν(r) ∝ r^{−2} for α = 1.
    let mass = |a: f64, b: f64| 1.0 / a - 1.0 / b;
    let total_w: f64 = w.iter().sum();
    let total_m = mass(edges[0], edges[4]);
    for b in 0..4 {
        let got = w[b] / total_w;
        let want = mass(edges[b], edges[b + 1]) / total_m;
        assert!((got / want - 1.0).abs() < 0.05, "bin {b} ({} jumps): {got} vs {want}", counts[b]);
    }
    // Absolute rate: two directions, each with density c/r².
    let c = model.levy_density(1.0);
    let rate = total_w / opts.horizon;
    assert!((rate / (2.0 * c * total_m) - 1.0).abs() < 0.05, "{rate}");
}

#[test]
fn sde_paths_repeat_under_a_seed() {
    let (sol, model) = stable_harmonic();
    let fields = gst_fields(&sol, &model).unwrap();
    let opts = SdeOptions {
        dt: 0.01,
        horizon: 5.0,
        record_every: 10,
        log_jumps: true,
        ..SdeOptions::default()
    };
    let a = simulate_sde(&sol, &fields, &[1.0], opts, RngSpec::new(2, 0)).unwrap();
    let b = simulate_sde(&sol, &fields, &[1.0], opts, RngSpec::new(2, 0)).unwrap();
    let c = simulate_sde(&sol, &fields, &[1.0], opts, RngSpec::new(2, 1)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.states, c.states);
    assert_eq!(a.times.len(), 51);
}

#[test]
fn flat_potential_has_no_ground_state() {
    let model = LevyModel::stable(1, 1.0, 1.0);
    let v = Potential::Custom {
        nodes: vec![-1.0, 1.0],
        values: vec![0.0, 0.0],
        kind: PotentialKind::Decaying,
    };
    let r = solve(&model, &v, Grid::new(1, 20.0, 128).unwrap(), &all_modes(128));
    assert!(matches!(r, Err(Error::NoBoundState { .. })), "{r:?}");
}

#[test]
fn sde_rejects_bad_options() {
    let (sol, model) = ou();
    let fields = gst_fields(&sol, &model).unwrap();
    let bad = [
        SdeOptions { dt: 0.0, ..SdeOptions::default() },
        SdeOptions { dt: 0.03, horizon: 0.1, ..SdeOptions::default() },
        SdeOptions { record_every: 0, ..SdeOptions::default() },
        SdeOptions { dt: 5.0, horizon: 10.0, ..SdeOptions::default() },
    ];
    for opts in bad {
        assert!(simulate_sde(&sol, &fields, &[0.0], opts, RngSpec::new(0, 0)).is_err(), "{opts:?}");
    }
}
