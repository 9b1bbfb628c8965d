use approx::assert_relative_eq;
use gstlab::potentials::{g_profiles, potential_eval, unit_ball_envelope, Potential, PotentialKind};
use proptest::prelude::*;

#[test]
fn evaluation_examples() {
    let quad = Potential::Polynomial {
        coeff: 1.0,
        n: 1,
        offset: 0.0,
    };
    assert_eq!(potential_eval(&quad, &[2.0]), 4.0);
    assert_eq!(potential_eval(&Potential::PoschlTeller { a: 1.0, b: 1.0 }, &[0.0]), -1.0);
    let morse = Potential::Morse {
        a: 1.0,
        b: 1.0,
        r0: 0.0,
    };
    assert_eq!(potential_eval(&morse, &[0.0]), -1.0);
}

#[test]
fn envelope_examples() {
    let quad = Potential::Polynomial {
        coeff: 1.0,
        n: 1,
        offset: 0.0,
    };
    let e = unit_ball_envelope(&quad, &[3.0], 64).unwrap();
    assert_eq!((e.v_up, e.v_low), (16.0, 4.0));
    let well = Potential::Well {
        depth: 1.0,
        radius: 1.0,
    };
    let e = unit_ball_envelope(&well, &[0.0], 64).unwrap();
    assert_eq!((e.v_up, e.v_low), (-1.0, -1.0));
    let exp = Potential::ExpPolyLog {
        eta: 1.0,
        vartheta: 1.0,
        rho: 0.0,
        sigma: 0.0,
    };
    let e = unit_ball_envelope(&exp, &[5.0], 64).unwrap();
    assert_relative_eq!(e.v_up, 6f64.exp(), max_relative = 1e-15);
    assert_relative_eq!(e.v_low, 4f64.exp(), max_relative = 1e-15);
}

#[test]
fn g_profile_examples() {
    let quad = Potential::Polynomial {
        coeff: 1.0,
        n: 1,
        offset: 0.0,
    };
    let (up, low) = g_profiles(&quad, 1, 10.0).unwrap();
    assert_relative_eq!(up, 1.0 / 121.0, max_relative = 1e-15);
    assert_relative_eq!(low, 1.0 / 81.0, max_relative = 1e-15);
    let quartic = Potential::Polynomial {
        coeff: 1.0,
        n: 2,
        offset: 0.0,
    };
    let (up, low) = g_profiles(&quartic, 1, 5.0).unwrap();
    assert_relative_eq!(up, 1.0 / 1296.0, max_relative = 1e-15);
    assert_relative_eq!(low, 1.0 / 256.0, max_relative = 1e-15);
    let coulomb = Potential::Coulomb {
        a1: 1.0,
        beta1: 1.0,
        a2: 1.0,
        beta2: 2.0,
    };
    assert_eq!(g_profiles(&coulomb, 2, 3.0).unwrap(), (1.0, 1.0));
}

fn confining_radial() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (0.1f64..5.0, 1u32..4, -2.0f64..2.0).prop_map(|(coeff, n, offset)| Potential::Polynomial { coeff, n, offset }),
        (0.0f64..2.0, 0.1f64..1.5, 0.0f64..3.0, 0.0f64..2.0).prop_map(|(eta, vartheta, rho, sigma)| {
            Potential::ExpPolyLog {
                eta,
                vartheta,
                rho: if eta == 0.0 && sigma == 0.0 { rho + 0.5 } else { rho },
                sigma,
            }
        }),
    ]
}

fn any_potential() -> impl Strategy<Value = Potential> {
    prop_oneof![
        confining_radial(),
        (0.1f64..4.0).prop_map(|b| Potential::DoubleWell { b }),
        (0.1f64..5.0, 0.2f64..3.0).prop_map(|(depth, radius)| Potential::Well { depth, radius }),
        (0.1f64..3.0, 0.1f64..1.0, 0.1f64..3.0, 1.0f64..3.0)
            .prop_map(|(a1, beta1, a2, beta2)| Potential::Coulomb { a1, beta1, a2, beta2 }),
        (0.1f64..3.0, 0.1f64..1.0, 0.1f64..3.0, 1.0f64..3.0, 0.1f64..2.0)
            .prop_map(|(a1, beta1, a2, beta2, b)| Potential::Yukawa { a1, beta1, a2, beta2, b }),
        (0.1f64..3.0, 0.1f64..3.0).prop_map(|(a, b)| Potential::PoschlTeller { a, b }),
        (0.1f64..3.0, 0.1f64..3.0, 0.0f64..3.0).prop_map(|(a, b, r0)| Potential::Morse { a, b, r0 }),
    ]
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        (-20.0f64..20.0).prop_map(|x| vec![x]),
        (-20.0f64..20.0, -20.0f64..20.0).prop_map(|(x, y)| vec![x, y]),
    ]
}

proptest! {
    #[test]
    fn envelope_brackets_value(v in any_potential(), x in point()) {
        let e = unit_ball_envelope(&v, &x, 64).unwrap();
        let val = v.eval(&x);
        prop_assert!(e.v_low <= val + 1e-12 * val.abs().max(1.0), "{} > {val}", e.v_low);
        prop_assert!(val <= e.v_up + 1e-12 * val.abs().max(1.0), "{val} > {}", e.v_up);
    }

    #[test]
    fn g_up_below_g_low(v in any_potential(), d in 1usize..=2, r in 1.01f64..40.0) {
        let (up, low) = g_profiles(&v, d, r).unwrap();
        prop_assert!(up > 0.0 && up <= low + 1e-15, "{up} > {low}");
    }

    #[test]
    fn closed_form_matches_sampled_for_monotone_families(v in confining_radial(), x in point()) {
        prop_assume!(x.iter().map(|c| c * c).sum::<f64>().sqrt() > 1.0);
        let closed = v.envelope_closed_form(&x).unwrap();
        let sampled = v.envelope_sampled(&x, 64);
        let tol = |a: f64| 1e-10 * a.abs().max(1.0);
        prop_assert!((closed.v_up - sampled.v_up).abs() <= tol(closed.v_up), "{closed:?} vs {sampled:?}");
        prop_assert!((closed.v_low - sampled.v_low).abs() <= tol(closed.v_low), "{closed:?} vs {sampled:?}");
    }

    #[test]
    fn decaying_profiles_are_one_far_out(v in any_potential(), d in 1usize..=2, extra in 0.0f64..50.0) {
        prop_assume!(v.kind() == PotentialKind::Decaying);
        let r = v.decay_radius().unwrap().max(1.0) + 1e-9 + extra;
        prop_assert_eq!(g_profiles(&v, d, r).unwrap(), (1.0, 1.0));
    }
}
