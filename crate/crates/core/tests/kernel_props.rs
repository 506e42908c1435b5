//! Property tests for the expression kernel: algebraic laws, commuting total
//! derivatives, and the probabilistic zero cross-check.

use gtfe_core::rat::rint;
use gtfe_core::symexpr::{
    eval_with_scale, parse, total_derivative, Bindings, Dep, Expr, Indep, Jet, Slot,
};
use proptest::prelude::*;

/// Small random expressions over t, x, u and low-order jets.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::t()),
        Just(Expr::x()),
        Just(Expr::u()),
        Just(Expr::jet(Dep::U, 0, 1)),
        Just(Expr::jet(Dep::V, 0, 0)),
        (-4i64..=4).prop_map(Expr::int),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), 1u8..=3).prop_map(|(a, n)| a.pow(&rint(n as i64)).unwrap()),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn addition_commutes(a in arb_expr(), b in arb_expr()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
    }

    #[test]
    fn multiplication_distributes(a in arb_expr(), b in arb_expr(), c in arb_expr()) {
        let lhs = a.mul(&b.add(&c));
        let rhs = a.mul(&b).add(&a.mul(&c));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn total_derivatives_commute(e in arb_expr()) {
        let xt = total_derivative(&total_derivative(&e, Indep::X).unwrap(), Indep::T).unwrap();
        let tx = total_derivative(&total_derivative(&e, Indep::T).unwrap(), Indep::X).unwrap();
        prop_assert_eq!(xt, tx);
    }

    #[test]
    fn diff_commutes_with_canonicalize(e in arb_expr()) {
        let s = Slot::Jet(Jet::new(Dep::U, 0, 0));
        let d1 = gtfe_core::symexpr::diff(&e, &s).canonicalize();
        let d2 = gtfe_core::symexpr::diff(&e.canonicalize(), &s);
        prop_assert_eq!(d1, d2);
    }

    #[test]
    fn canonical_zero_iff_numeric_zero(e in arb_expr()) {
        // atom-free rational-exponent expressions: exact zero recognition
        // cross-checked by 20 random rational probes
        prop_assume!(e.is_atom_free());
        let expanded = e.add(&Expr::one()).pow(&rint(2)).unwrap();
        let manual = e.mul(&e).add(&e.scale(&rint(2).into())).add(&Expr::one());
        let diff = expanded.sub(&manual);
        prop_assert!(diff.is_zero(), "algebraic identity failed: {}", diff);

        // a canonically nonzero expression evaluates away from zero at some probe
        if !e.is_zero() {
            let mut nonzero_somewhere = false;
            for k in 0..20u32 {
                let mut b = Bindings::new();
                let v = |i: u32| (i as f64 * 0.37 + k as f64 * 0.61).sin() * 1.5 + 2.6;
                b.insert(Slot::t(), v(1));
                b.insert(Slot::x(), v(2));
                b.insert(Slot::Jet(Jet::new(Dep::U, 0, 0)), v(3));
                b.insert(Slot::Jet(Jet::new(Dep::U, 0, 1)), v(4));
                b.insert(Slot::Jet(Jet::new(Dep::V, 0, 0)), v(5));
                if let Ok((val, scale)) = eval_with_scale(&e, &b) {
                    if val.abs() > 1e-10 * scale.max(1.0) {
                        nonzero_somewhere = true;
                        break;
                    }
                }
            }
            prop_assert!(nonzero_somewhere, "nonzero canonical form evaluated to zero everywhere: {}", e);
        }
    }

    #[test]
    fn render_parse_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(e, back, "round trip failed for {}", text);
    }
}
