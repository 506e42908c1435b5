use super::*;
use crate::model::{case3_triplet, instantiate};
use crate::prolong::verify_generator;
use crate::rat::rq;
use crate::model::SystemForm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

fn power(c: i64, shift: i64, e: Rat) -> CoefFn {
    CoefFn::PowerShifted {
        c: rint(c),
        shift: rint(shift),
        exponent: RatOrParam::Rat(e),
    }
}

#[test]
fn table1_rows_verbatim() {
    // row 3
    let r = classify(&case3_triplet(&rint(3), &rint(1), &rint(5), &rq(1, 2))).unwrap();
    assert_eq!(r.case, CaseId::Case(3));
    assert!(r.transform.is_identity());
    assert_eq!(r.generators.len(), 3);
    // row 2
    let exp = |c: i64, rate: i64| CoefFn::ExpLaw {
        c: rint(c),
        rate: RatOrParam::Rat(rint(rate)),
    };
    let tr = Triplet::new(exp(1, 1), exp(2, 2), exp(3, 3)).unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(2));
    // row 4
    let tr = Triplet::new(
        CoefFn::constant(rint(1)),
        CoefFn::constant(rint(2)),
        CoefFn::LogForm {
            l: rint(3),
            g: rint(0),
            l1: rint(0),
            l0: rint(0),
        },
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(4));
    assert!(r.transform.is_identity());
    // rows 5, 6
    let r = classify(&Triplet::new(exp(1, 2), CoefFn::Zero, CoefFn::Zero).unwrap()).unwrap();
    assert_eq!(r.case, CaseId::Case(5));
    assert_eq!(r.generators.len(), 4);
    let r = classify(&case3_triplet(&rint(3), &rint(0), &rint(0), &rint(0))).unwrap();
    assert_eq!(r.case, CaseId::Case(6));
    assert_eq!(r.generators.len(), 4);
    // rows 7, 8
    let r = classify(
        &Triplet::new(CoefFn::constant(rint(1)), CoefFn::constant(rint(3)), CoefFn::Zero).unwrap(),
    )
    .unwrap();
    assert_eq!(r.case, CaseId::Case(7));
    let r = classify(&Triplet::new(CoefFn::constant(rint(1)), CoefFn::Zero, CoefFn::Zero).unwrap())
        .unwrap();
    assert_eq!(r.case, CaseId::Case(8));
    // row 1: arbitrary smooth K
    let tr = Triplet::new(
        CoefFn::Custom {
            expr: crate::symexpr::parse("u^3 + u").unwrap(),
        },
        CoefFn::Zero,
        CoefFn::Zero,
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(1));
}

#[test]
fn shifted_power_reduces_to_case3() {
    // ((u+2)^3, 5(u+2)^2, 1/2 (u+2)^2) with gamma=3, mu=2: exponent 2*2-3+1=2
    let tr = Triplet::new(
        power(1, 2, rint(3)),
        power(5, 2, rint(2)),
        power(1, 2, rint(2)),
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(3));
    assert_eq!(r.transform.moves, vec![Move::UShift { s: rint(2) }]);
    // normalized system classifies to the same case with identity transform
    let again = classify(&r.normalized).unwrap();
    assert_eq!(again.case, CaseId::Case(3));
    assert!(again.transform.is_identity());
    // the transform constants report B = 2
    assert_eq!(r.transform.constants().b, rint(2));
}

#[test]
fn proof_system_134_reduces_to_case3_gamma_eq_mu() {
    // u_t = -[(u)^2 v_x]_x + 3[(u)^2 u_x]_x + 5 u^3 + 7 u
    let tr = Triplet::new(
        power(1, 0, rint(2)),
        power(3, 0, rint(2)),
        CoefFn::PowerPlusLinear {
            c: rint(5),
            shift: rint(0),
            exponent: RatOrParam::Rat(rint(3)),
            l1: rint(7),
        },
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(3));
    assert_eq!(
        r.transform.moves,
        vec![Move::PowerGauge {
            rate: rint(-7),
            gamma: rint(2)
        }]
    );
    assert_eq!(r.params.get("mu"), Some(&rint(2)));
    // normalized: (u^2, 3u^2, 5u^3)
    assert_eq!(r.normalized.f, power(5, 0, rint(3)));
    let again = classify(&r.normalized).unwrap();
    assert_eq!(again.case, CaseId::Case(3));
    assert!(again.transform.is_identity());
}

#[test]
fn proof_system_137_reduces_to_case6() {
    // u_t = -[(u+1)^4 v_x]_x + 2(u+1): shift then power gauge
    let tr = Triplet::new(
        power(1, 1, rint(4)),
        CoefFn::Zero,
        CoefFn::Linear {
            l1: rint(2),
            l0: rint(2),
        },
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(6), "diagnostics: {:?}", r.diagnostics);
    assert_eq!(r.transform.moves.len(), 2);
    let again = classify(&r.normalized).unwrap();
    assert!(again.transform.is_identity());
    assert_eq!(again.case, CaseId::Case(6));
}

#[test]
fn proof_system_36_reduces_to_case4() {
    // u_t = -v_xx + 3u_xx + 2(u+5)ln(u+5) + 4u + 20
    let tr = Triplet::new(
        CoefFn::constant(rint(1)),
        CoefFn::constant(rint(3)),
        CoefFn::LogForm {
            l: rint(2),
            g: rint(5),
            l1: rint(4),
            l0: rint(20),
        },
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(4));
    assert_eq!(
        r.transform.moves,
        vec![
            Move::UShift { s: rint(5) },
            Move::ConstGauge {
                c: ExactScalar {
                    r: rint(1),
                    rho: rint(2)
                }
            }
        ]
    );
    // wrong intercept: no symmetry
    let bad = Triplet::new(
        CoefFn::constant(rint(1)),
        CoefFn::constant(rint(3)),
        CoefFn::LogForm {
            l: rint(2),
            g: rint(5),
            l1: rint(4),
            l0: rint(19),
        },
    )
    .unwrap();
    let r = classify(&bad).unwrap();
    assert_eq!(r.case, CaseId::Trivial);
    assert!(r.diagnostics.iter().any(|d| d.contains("(18)")));
}

#[test]
fn proof_system_45_reduces_to_case8() {
    // lambda1 = 0: u_t = -v_xx + 3 -> u* = u - 3t
    let tr = Triplet::new(
        CoefFn::constant(rint(1)),
        CoefFn::Zero,
        CoefFn::constant(rint(3)),
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(8));
    assert_eq!(r.transform.moves, vec![Move::ULinearT { c: rint(-3) }]);
    // lambda1 != 0: u_t = -v_xx + 2u + 6 -> shift by 3, exponential gauge
    let tr = Triplet::new(
        CoefFn::constant(rint(1)),
        CoefFn::Zero,
        CoefFn::Linear {
            l1: rint(2),
            l0: rint(6),
        },
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(8));
    assert_eq!(
        r.transform.moves,
        vec![Move::UShift { s: rint(3) }, Move::ExpGauge { rate: rint(-2) }]
    );
}

#[test]
fn wrong_exponent_goes_trivial_with_diagnostic() {
    // (u^3, d u, u^5): 5 != 2*1-3+1 = 0
    let tr = Triplet::new(power(1, 0, rint(3)), power(2, 0, rint(1)), power(1, 0, rint(5))).unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Trivial);
    assert!(r.diagnostics.iter().any(|d| d.contains("(18)")), "{:?}", r.diagnostics);
    assert_eq!(r.generators.len(), 2); // P_t, P_x only
}

#[test]
fn k_coefficient_time_rescale() {
    // K = 4u^3: time scale k=4 divides D, F
    let tr = Triplet::new(power(4, 0, rint(3)), power(2, 0, rint(1)), power(8, 0, rint(0))).unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(3));
    assert_eq!(r.transform.moves[0], Move::TimeScale { k: rint(4) });
    assert_eq!(r.params.get("d"), Some(&rq(1, 2)));
    assert_eq!(r.params.get("lambda"), Some(&rint(2)));
    assert_eq!(r.transform.constants().c0, rint(4));
}

#[test]
fn emitted_generators_are_symmetries_after_normalization() {
    // (134)-style system: verify the emitted generators annihilate the
    // normalized system exactly
    let tr = Triplet::new(
        power(1, 0, rint(2)),
        power(3, 0, rint(2)),
        CoefFn::PowerPlusLinear {
            c: rint(5),
            shift: rint(0),
            exponent: RatOrParam::Rat(rint(3)),
            l1: rint(7),
        },
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    for g in &r.generators {
        let rep = verify_generator(
            &r.normalized,
            &ParamSample::default(),
            &g.field,
            SystemForm::Pair,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(rep.max_residual, 0.0, "generator {} failed", g.name);
    }
}

#[test]
fn pushforward_of_135_algebra_lands_in_case3_span() {
    // Q* = e^{-gamma l1 t}(∂_t + l1 u ∂_u + l1 v ∂_v) is the extra symmetry of
    // the (134)-form system (gamma = mu = 2, l1 = 7 here, shift 0). Its
    // pushforward under the power gauge must lie in the span of
    // {P_t, P_x, D3} of the normalized case-3 system.
    let (gamma, l1) = (rint(2), rint(7));
    let minus_gl1 = -(&gamma * &l1);
    let e = Expr::exp(Expr::t().scale(&minus_gl1));
    let qstar = VectorField::pair(
        e.clone(),
        Expr::zero(),
        e.mul(&Expr::u()).scale(&l1),
        e.mul(&Expr::v()).scale(&l1),
    );
    let t = EquivalenceTransform {
        moves: vec![Move::PowerGauge {
            rate: -l1.clone(),
            gamma: gamma.clone(),
        }],
    };
    let pushed = apply_to_field(&t, &qstar).unwrap();
    // span of the case-3 basis with gamma = mu = 2
    let basis = [p_t(), p_x(), d3(&gamma, &gamma)];
    // solve pushed = sum c_i basis_i exactly: use structure_constants with a
    // zero commutator trick is not applicable; check directly
    let coeffs = super::structure_constants(
        &VectorField::pair(Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()),
        &VectorField::pair(Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()),
        &basis,
    );
    assert!(coeffs.is_some());
    // direct span check: pushed - c*D3 - b*P_t with solved coefficients
    let lin = |f: &VectorField| {
        [
            f.xi0.clone(),
            f.xi1.clone(),
            f.eta(Dep::U),
            f.eta(Dep::V),
        ]
    };
    // pushed should equal (1/(l1*gamma...)) combination; verify membership by
    // exact solve on stacked coefficients
    use crate::symexpr::{solve_rational_system, Factor, Monomial};
    use std::collections::BTreeMap;
    type MonoKey = (usize, Vec<(Factor, Rat)>);
    let mut monos: BTreeMap<MonoKey, usize> = BTreeMap::new();
    let midx = |slot: usize, m: &Monomial, monos: &mut BTreeMap<MonoKey, usize>| {
        let key = (slot, m.factors.clone());
        let next = monos.len();
        *monos.entry(key).or_insert(next)
    };
    let mut cols = Vec::new();
    for b in &basis {
        let mut col = Vec::new();
        for (slot, e) in lin(b).into_iter().enumerate() {
            for m in &e.terms {
                col.push((midx(slot, m, &mut monos), m.coeff.clone()));
            }
        }
        cols.push(col);
    }
    let mut rhs_entries = Vec::new();
    for (slot, e) in lin(&pushed).into_iter().enumerate() {
        for m in &e.terms {
            rhs_entries.push((midx(slot, m, &mut monos), m.coeff.clone()));
        }
    }
    let rows = monos.len();
    let mut mat = vec![vec![Rat::zero(); basis.len()]; rows];
    for (j, col) in cols.iter().enumerate() {
        for (i, c) in col {
            mat[*i][j] = c.clone();
        }
    }
    let mut rhs = vec![Rat::zero(); rows];
    for (i, c) in rhs_entries {
        rhs[i] = c;
    }
    let sol = solve_rational_system(&mat, &rhs);
    assert!(sol.is_some(), "pushforward not in the case-3 span: {:?}", pushed);
}

#[test]
fn commutator_closure_case3() {
    let (g, m) = (rint(3), rint(1));
    let basis = [p_t(), p_x(), d3(&g, &m)];
    for a in &basis {
        for b in &basis {
            let c = structure_constants(a, b, &basis);
            assert!(c.is_some(), "commutator not in span");
        }
    }
}

#[test]
fn xinf_witnesses_satisfy_constraint() {
    for d in [rint(0), rint(1), rq(-3, 2)] {
        for p in xinf_witnesses(&d) {
            assert!(xinf_constraint_ok(&p, &d).unwrap(), "witness failed for d={d}");
        }
    }
    // exponential witness e^{theta x + (d theta^2 - theta^4) t}
    let theta = rint(2);
    let d = rint(1);
    let rate = &d * &theta * &theta - &theta * &theta * &theta * &theta;
    let p = Expr::exp(Expr::x().scale(&theta).add(&Expr::t().scale(&rate)));
    assert!(xinf_constraint_ok(&p, &d).unwrap());
}

#[test]
fn instantiate_respects_case_restrictions() {
    // sample violating gamma^2 + mu^2 != 0 for a case-2 target
    let tr = Triplet::new(
        CoefFn::ExpLaw {
            c: rint(1),
            rate: RatOrParam::Param("gamma".into()),
        },
        CoefFn::ExpLaw {
            c: rint(1),
            rate: RatOrParam::Param("mu".into()),
        },
        CoefFn::Zero,
    )
    .unwrap();
    let s = ParamSample::of(&[("gamma", rint(0)), ("mu", rint(0))]);
    let inst = instantiate(&tr, &s).unwrap();
    // both rates degenerate: instantiation flags it, classification lands on 7/8
    assert_eq!(inst.degenerations.len(), 2);
    let r = classify(&inst.triplet).unwrap();
    assert_eq!(r.case, CaseId::Case(7));
}

#[test]
fn symbolic_classification_is_conditional() {
    let tr = Triplet::new(
        CoefFn::PowerShifted {
            c: rint(1),
            shift: rint(0),
            exponent: RatOrParam::Param("gamma".into()),
        },
        CoefFn::Zero,
        CoefFn::Zero,
    )
    .unwrap();
    let r = classify(&tr).unwrap();
    assert_eq!(r.case, CaseId::Case(6));
    assert!(r.diagnostics.iter().any(|d| d.contains("conditional")));
}
