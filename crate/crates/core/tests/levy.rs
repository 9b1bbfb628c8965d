use approx::assert_relative_eq;
use gstlab::levy::{check_jump_paring, DensityProfile, LevyModel, ProfileClass, JUMP_PARING_CAP};
use proptest::prelude::*;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `ψ(ξ) = 2∫₀^∞ (1 − cos ξr) f(r) dr` for the d = 1 profile with `μ = 0`.
fn symbol_oracle_l1(alpha: f64, gamma: f64, xi: f64) -> f64 {
    // r = t^{2/(2−α)} removes the r^{−1−α} singularity: the integrand becomes
    // bounded at t = 0.
    let p = 2.0 / (2.0 - alpha);
    let inner = simpson(
        |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            let r = t.powf(p);
            (1.0 - (xi * r).cos()) * r.powf(-1.0 - alpha) * p * t.powf(p - 1.0)
        },
        0.0,
        1.0,
        40_000,
    );
    // ∫₁^∞ r^{−γ} dr − ∫₁^L cos(ξr) r^{−γ} dr − tail, the tail by one
    // integration by parts.
    let l = 4000.0;
    let cos_part = simpson(|r: f64| (xi * r).cos() * r.powf(-gamma), 1.0, l, 800_000);
    let cos_tail = -(xi * l).sin() * l.powf(-gamma) / xi;
    let outer = 1.0 / (gamma - 1.0) - cos_part - cos_tail;
    2.0 * (inner + outer)
}

#[test]
fn symbol_closed_forms() {
    let m = LevyModel::stable(1, 1.0, 1.0);
    assert_eq!(m.symbol(&[0.0]).unwrap(), 0.0);
    assert_relative_eq!(m.symbol(&[2.0]).unwrap(), 2.0, max_relative = 1e-15);
    let r = LevyModel::relativistic(1, 1.0, 1.0);
    assert_eq!(r.symbol(&[0.0]).unwrap(), 0.0);
    assert_relative_eq!(r.symbol(&[1.0]).unwrap(), 2f64.sqrt() - 1.0, max_relative = 1e-12);
}

#[test]
fn generic_symbol_matches_quadrature_oracle() {
    let profile = DensityProfile::new(1, 0.5, 0.0, 0.0, 2.5).unwrap();
    let m = LevyModel::generic(profile, 0.0);
    let oracle = symbol_oracle_l1(0.5, 2.5, 1.0);
    assert_relative_eq!(m.symbol(&[1.0]).unwrap(), oracle, max_relative = 1e-6);
}

#[test]
fn density_values() {
    let p = DensityProfile::new(1, 0.5, 0.0, 0.0, 2.5).unwrap();
    assert_relative_eq!(p.value(0.5), 2.828427124746190, max_relative = 1e-12);
    assert_relative_eq!(p.value(2.0), 0.176776695296637, max_relative = 1e-12);
    let q = DensityProfile::new(1, 1.0, 1.0, 1.0, 2.0).unwrap();
    assert_relative_eq!(q.value(3.0), (-3f64).exp() / 9.0, max_relative = 1e-14);
}

#[test]
fn classification_examples() {
    let c = |mu, beta, gamma| DensityProfile::new(1, 1.0, mu, beta, gamma).unwrap().classify();
    assert_eq!(c(0.0, 0.0, 3.0), ProfileClass::L1);
    assert_eq!(c(1.0, 0.5, 0.0), ProfileClass::L2);
    assert_eq!(c(1.0, 1.0, 0.5), ProfileClass::Unsupported);
    assert_eq!(c(1.0, 1.0, 2.0), ProfileClass::L3);
}

fn unit_grid() -> Vec<f64> {
    (1..=16).map(|k| k as f64).collect()
}

#[test]
fn jump_paring_regression_values() {
    // Worst convolution ratio on {1,…,16}, recorded per family.
    let cases = [
        (DensityProfile::new(1, 1.0, 0.0, 0.0, 3.0).unwrap(), 8.756974638488463),
        (DensityProfile::new(1, 1.0, 1.0, 0.5, 1.0).unwrap(), 6.0537134053528225),
        (DensityProfile::new(1, 1.0, 1.0, 1.0, 2.0).unwrap(), 10.757129736033269),
    ];
    for (p, expected) in cases {
        let r = check_jump_paring(&p, &unit_grid(), JUMP_PARING_CAP).unwrap();
        assert!(r.bounded, "{p:?}");
        assert!(r.worst_ratio < JUMP_PARING_CAP);
        assert_relative_eq!(r.worst_ratio, expected, max_relative = 1e-5);
    }
}

#[test]
fn jump_paring_l1_and_l3_examples() {
    let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
    for p in [
        DensityProfile::new(1, 1.0, 0.0, 0.0, 3.0).unwrap(),
        DensityProfile::new(1, 1.0, 1.0, 1.0, 2.0).unwrap(),
    ] {
        let r = check_jump_paring(&p, &grid, JUMP_PARING_CAP).unwrap();
        assert!(r.passes.iter().all(|&b| b), "{p:?}: {:?}", r.ratios);
    }
}

#[test]
fn jump_paring_fails_for_super_exponential_tail() {
    let p = DensityProfile::new(1, 1.0, 1.0, 2.0, 0.0).unwrap();
    assert_eq!(p.classify(), ProfileClass::Unsupported);
    let r = check_jump_paring(&p, &unit_grid(), JUMP_PARING_CAP).unwrap();
    assert!(!r.bounded);
    assert!(r.ratios.windows(2).skip(2).all(|w| w[1] > w[0]), "{:?}", r.ratios);
}

fn closed_form_model() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        (0.1f64..1.95, 0.1f64..3.0).prop_map(|(a, w)| LevyModel::stable(1, a, w)),
        (0.1f64..1.95, 0.1f64..3.0).prop_map(|(a, w)| LevyModel::stable(2, a, w)),
        (0.1f64..1.95, 0.05f64..4.0).prop_map(|(a, m)| LevyModel::relativistic(1, a, m)),
        (0.1f64..1.95, 0.1f64..3.0, 0.1f64..2.0).prop_map(|(a, w, s)| LevyModel::stable_plus_diffusion(2, a, w, s)),
        (0.1f64..3.0).prop_map(|s| LevyModel::brownian(1, s)),
    ]
}

fn profile() -> impl Strategy<Value = DensityProfile> {
    (1usize..=2, 0.1f64..1.95, 0.0f64..3.0, 0.0f64..2.0, 0.0f64..5.0)
        .prop_map(|(d, a, mu, beta, gamma)| DensityProfile::new(d, a, mu, beta, gamma).unwrap())
}

proptest! {
    #[test]
    fn symbol_nonnegative_even_zero_at_origin(m in closed_form_model(), x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let xi: Vec<f64> = if m.dim() == 1 { vec![x] } else { vec![x, y] };
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let v = m.symbol(&xi).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v, m.symbol(&neg).unwrap());
        prop_assert_eq!(m.symbol(&vec![0.0; m.dim()]).unwrap(), 0.0);
    }

    #[test]
    fn density_non_increasing(p in profile(), r0 in 0.01f64..20.0, steps in proptest::collection::vec(0.001f64..2.0, 1..20)) {
        // Positivity is checked on the log scale: f itself underflows for
        // steep exponential tails.
        let mut r = r0;
        let mut prev = p.value(r);
        let mut prev_ln = p.ln_value_ln(r.ln());
        prop_assert!(prev_ln.is_finite());
        for s in steps {
            r += s;
            let v = p.value(r);
            let v_ln = p.ln_value_ln(r.ln());
            prop_assert!(v <= prev, "f({r}) = {v} > {prev}");
            prop_assert!(v_ln.is_finite() && v_ln <= prev_ln + 1e-12 * prev_ln.abs().max(1.0));
            prev = v;
            prev_ln = v_ln;
        }
    }

    #[test]
    fn classification_is_pure_and_survives_serialization(p in profile()) {
        let json = serde_json::to_string(&p).unwrap();
        let back: DensityProfile = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, p);
        prop_assert_eq!(back.classify(), p.classify());
        prop_assert_eq!(p.classify(), p.classify());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn generic_symbol_nonnegative_and_even(a in 0.2f64..1.8, gamma in 1.5f64..4.0, x in 0.1f64..20.0) {
        let m = LevyModel::generic(DensityProfile::new(1, a, 0.0, 0.0, gamma).unwrap(), 0.0);
        let v = m.symbol(&[x]).unwrap();
        prop_assert!(v > 0.0);
        prop_assert_eq!(v, m.symbol(&[-x]).unwrap());
    }
}
