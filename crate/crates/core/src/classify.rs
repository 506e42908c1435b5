//! The group-classification decision procedure: maps a structured triplet to
//! its Table-1 case, emitting the generator basis and the normalizing
//! equivalence transform.

use crate::model::{CoefFn, ParamSample, RatOrParam, Triplet};
use crate::prolong::VectorField;
use crate::rat::{rint, render_rat, Rat};
use crate::symexpr::{subst_symbols, Dep, Expr, Indep, Slot};
use num_traits::{One, Zero};
use std::fmt;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("transform leaves the structured families: {0}")]
    OutsideFamilies(String),
    #[error("restriction violated for case {case}: {what}")]
    Restriction { case: u8, what: String },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Expr(#[from] crate::symexpr::ExprError),
}

/// Exact scalar of the form r·e^rho (rho = 0 for plain rationals).
#[derive(Clone, Debug, PartialEq)]
pub struct ExactScalar {
    pub r: Rat,
    pub rho: Rat,
}

impl ExactScalar {
    pub fn rat(r: Rat) -> Self {
        ExactScalar {
            r,
            rho: Rat::zero(),
        }
    }

    pub fn one() -> Self {
        Self::rat(Rat::one())
    }

    pub fn to_expr(&self) -> Expr {
        Expr::exp(Expr::num(self.rho.clone())).scale(&self.r)
    }

    pub fn to_f64(&self) -> f64 {
        crate::rat::to_f64(&self.r) * crate::rat::to_f64(&self.rho).exp()
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rho.is_zero() {
            write!(f, "{}", render_rat(&self.r))
        } else if self.r.is_one() {
            write!(f, "e^({})", render_rat(&self.rho))
        } else {
            write!(f, "{}*e^({})", render_rat(&self.r), render_rat(&self.rho))
        }
    }
}

/// One elementary normalization move. Every move is an instance of the
/// composite local substitution
/// t -> C0 t + C1 e^{C2 t}, x -> C3 x,
/// u -> C4 + C5 t + C6 e^{C7 t}(u + B), v -> C8 + C9 e^{C10 t} v.
#[derive(Clone, Debug, PartialEq)]
pub enum Move {
    /// t* = k t: normalizes the leading coefficient of K (divides K, D, F by k)
    TimeScale { k: Rat },
    /// u* = u + s: removes the common shift of the power families
    UShift { s: Rat },
    /// u* = u + c t: removes a constant reaction term (K, D constant)
    ULinearT { c: Rat },
    /// u* = e^{rate t} u, v* = e^{rate t} v: removes a pure linear reaction
    /// (K, D constant)
    ExpGauge { rate: Rat },
    /// u* = e^{rate t} u, v* = e^{rate t} v, t* = e^{theta t}/theta with
    /// theta = -rate·gamma: removes the linear part of the reaction in the
    /// power branch
    PowerGauge { rate: Rat, gamma: Rat },
    /// u* = c u, v* = c v with c = e^rho: normalizes the log-form reaction
    ConstGauge { c: ExactScalar },
}

/// A normalizing transform as an ordered chain of elementary moves, each an
/// instance of the composite substitution parametrized below.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EquivalenceTransform {
    pub moves: Vec<Move>,
}

impl EquivalenceTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.moves.is_empty()
    }

    /// The fused constants of the composite map.
    pub fn constants(&self) -> TransformConstants {
        let mut c = TransformConstants::identity();
        for m in &self.moves {
            match m {
                Move::TimeScale { k } => c.c0 *= k,
                Move::UShift { s } => c.b += s,
                Move::ULinearT { c: lin } => c.c5 = lin.clone(),
                Move::ExpGauge { rate } => {
                    c.c7 = rate.clone();
                    c.c10 = rate.clone();
                }
                Move::PowerGauge { rate, gamma } => {
                    c.c7 = rate.clone();
                    c.c10 = rate.clone();
                    let theta = -(rate * gamma);
                    c.c1 = Rat::one() / theta.clone();
                    c.c2 = theta * c.c0.clone();
                    c.c0 = Rat::zero();
                }
                Move::ConstGauge { c: cg } => {
                    c.c6 = cg.clone();
                    c.c9 = cg.clone();
                }
            }
        }
        c
    }
}

/// Constants of the composite map
/// t -> C0 t + C1 e^{C2 t}, x -> C3 x,
/// u -> C4 + C5 t + C6 e^{C7 t}(u + B), v -> C8 + C9 e^{C10 t} v.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformConstants {
    pub c0: Rat,
    pub c1: Rat,
    pub c2: Rat,
    pub c3: Rat,
    pub c4: Rat,
    pub c5: Rat,
    pub c6: ExactScalar,
    pub c7: Rat,
    /// u-preshift B (fuses a shift with a gauge)
    pub b: Rat,
    pub c8: Rat,
    pub c9: ExactScalar,
    pub c10: Rat,
}

impl TransformConstants {
    pub fn identity() -> Self {
        TransformConstants {
            c0: Rat::one(),
            c1: Rat::zero(),
            c2: Rat::zero(),
            c3: Rat::one(),
            c4: Rat::zero(),
            c5: Rat::zero(),
            c6: ExactScalar::one(),
            c7: Rat::zero(),
            b: Rat::zero(),
            c8: Rat::zero(),
            c9: ExactScalar::one(),
            c10: Rat::zero(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self == &Self::identity()
    }
}

/// Table-1 case identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseId {
    Case(u8),
    Trivial,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseId::Case(n) => write!(f, "case {n}"),
            CaseId::Trivial => write!(f, "Trivial"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Restriction {
    pub what: String,
    pub satisfied: bool,
}

/// A named generator for reporting.
#[derive(Clone, Debug)]
pub struct NamedField {
    pub name: String,
    pub field: VectorField,
}

#[derive(Clone, Debug)]
pub struct ClassificationResult {
    pub case: CaseId,
    pub normalized: Triplet,
    pub transform: EquivalenceTransform,
    /// Parameters of the normalized system (gamma, mu, d, lambda as relevant).
    pub params: ParamSample,
    pub generators: Vec<NamedField>,
    pub restrictions: Vec<Restriction>,
    /// Why the triplet is Trivial (which classification equation fails), or
    /// conditions left unresolved for symbolic inputs.
    pub diagnostics: Vec<String>,
}

// ---------------------------------------------------------------------------
// Transform application
// ---------------------------------------------------------------------------

fn coef_scale(c: &CoefFn, factor: &Rat) -> CoefFn {
    match c {
        CoefFn::Zero => CoefFn::Zero,
        CoefFn::Constant { c } => CoefFn::constant(c * factor),
        CoefFn::PowerShifted { c, shift, exponent } => CoefFn::PowerShifted {
            c: c * factor,
            shift: shift.clone(),
            exponent: exponent.clone(),
        },
        CoefFn::ExpLaw { c, rate } => CoefFn::ExpLaw {
            c: c * factor,
            rate: rate.clone(),
        },
        CoefFn::Linear { l1, l0 } => CoefFn::Linear {
            l1: l1 * factor,
            l0: l0 * factor,
        },
        CoefFn::LogForm { l, g, l1, l0 } => CoefFn::LogForm {
            l: l * factor,
            g: g.clone(),
            l1: l1 * factor,
            l0: l0 * factor,
        },
        CoefFn::PowerPlusLinear {
            c,
            shift,
            exponent,
            l1,
        } => CoefFn::PowerPlusLinear {
            c: c * factor,
            shift: shift.clone(),
            exponent: exponent.clone(),
            l1: l1 * factor,
        },
        CoefFn::Custom { expr } => CoefFn::Custom {
            expr: expr.scale(factor),
        },
    }
}

/// G*(z) = G(z - s) on the structured families.
fn coef_shift(c: &CoefFn, s: &Rat) -> Result<CoefFn, ClassifyError> {
    Ok(match c {
        CoefFn::Zero | CoefFn::Constant { .. } => c.clone(),
        CoefFn::PowerShifted { c, shift, exponent } => CoefFn::PowerShifted {
            c: c.clone(),
            shift: shift - s,
            exponent: exponent.clone(),
        },
        CoefFn::ExpLaw { .. } => {
            return Err(ClassifyError::OutsideFamilies(
                "shifting an exponential law produces an irrational coefficient".into(),
            ));
        }
        CoefFn::Linear { l1, l0 } => CoefFn::Linear {
            l1: l1.clone(),
            l0: l0 - &(l1 * s),
        },
        CoefFn::LogForm { l, g, l1, l0 } => CoefFn::LogForm {
            l: l.clone(),
            g: g - s,
            l1: l1.clone(),
            l0: l0 - &(l1 * s),
        },
        CoefFn::PowerPlusLinear {
            c,
            shift,
            exponent,
            l1,
        } => CoefFn::PowerPlusLinear {
            c: c.clone(),
            shift: shift - s,
            exponent: exponent.clone(),
            l1: l1.clone(),
        },
        CoefFn::Custom { .. } => {
            return Err(ClassifyError::OutsideFamilies(
                "cannot shift a custom coefficient".into(),
            ))
        }
    })
}

fn is_const_coef(c: &CoefFn) -> Option<Rat> {
    match c {
        CoefFn::Zero => Some(Rat::zero()),
        CoefFn::Constant { c } => Some(c.clone()),
        _ => None,
    }
}

fn power_coef(e: Rat, c: Rat) -> CoefFn {
    if c.is_zero() {
        CoefFn::Zero
    } else {
        CoefFn::PowerShifted {
            c,
            shift: Rat::zero(),
            exponent: RatOrParam::Rat(e),
        }
    }
}

/// Applies one move to a triplet, erroring when the move's validity
/// assumptions do not hold for the triplet's family shape.
fn apply_move(tr: &Triplet, m: &Move) -> Result<Triplet, ClassifyError> {
    match m {
        Move::TimeScale { k } => {
            let inv = Rat::one() / k.clone();
            Ok(Triplet {
                k: coef_scale(&tr.k, &inv),
                d: coef_scale(&tr.d, &inv),
                f: coef_scale(&tr.f, &inv),
            })
        }
        Move::UShift { s } => Ok(Triplet {
            k: coef_shift(&tr.k, s)?,
            d: coef_shift(&tr.d, s)?,
            f: coef_shift(&tr.f, s)?,
        }),
        Move::ULinearT { c } => {
            let f0 = is_const_coef(&tr.f).ok_or_else(|| {
                ClassifyError::OutsideFamilies("u + ct gauge needs a constant reaction".into())
            })?;
            if is_const_coef(&tr.k).is_none() || is_const_coef(&tr.d).is_none() {
                return Err(ClassifyError::OutsideFamilies(
                    "u + ct gauge needs constant K and D".into(),
                ));
            }
            Ok(Triplet {
                k: tr.k.clone(),
                d: tr.d.clone(),
                f: CoefFn::constant(f0 + c.clone()),
            })
        }
        Move::ExpGauge { rate } => {
            if is_const_coef(&tr.k).is_none() || is_const_coef(&tr.d).is_none() {
                return Err(ClassifyError::OutsideFamilies(
                    "exponential gauge needs constant K and D".into(),
                ));
            }
            let ok = match &tr.f {
                CoefFn::Zero => rate.is_zero(),
                CoefFn::Linear { l1, l0 } => l0.is_zero() && *l1 == -rate.clone(),
                _ => false,
            };
            if !ok {
                return Err(ClassifyError::OutsideFamilies(
                    "exponential gauge must cancel a pure linear reaction".into(),
                ));
            }
            Ok(Triplet {
                k: tr.k.clone(),
                d: tr.d.clone(),
                f: CoefFn::Zero,
            })
        }
        Move::PowerGauge { rate, gamma } => {
            let k_ok = matches!(&tr.k, CoefFn::PowerShifted { c, shift, exponent }
                if c.is_one() && shift.is_zero() && exponent.rat() == Some(gamma));
            let d_ok = match &tr.d {
                CoefFn::Zero => true,
                CoefFn::PowerShifted { shift, exponent, .. } => {
                    shift.is_zero() && exponent.rat() == Some(gamma)
                }
                _ => false,
            };
            let lambda = match &tr.f {
                CoefFn::Linear { l1, l0 } if l0.is_zero() && *l1 == -rate.clone() => {
                    Some(Rat::zero())
                }
                CoefFn::PowerPlusLinear {
                    c,
                    shift,
                    exponent,
                    l1,
                } if shift.is_zero()
                    && exponent.rat() == Some(&(gamma + Rat::one()))
                    && *l1 == -rate.clone() =>
                {
                    Some(c.clone())
                }
                _ => None,
            };
            let (k_ok, d_ok, Some(lambda)) = (k_ok, d_ok, lambda) else {
                return Err(ClassifyError::OutsideFamilies(
                    "power gauge shape mismatch".into(),
                ));
            };
            if !(k_ok && d_ok) {
                return Err(ClassifyError::OutsideFamilies(
                    "power gauge shape mismatch".into(),
                ));
            }
            let d = match &tr.d {
                CoefFn::PowerShifted { c, .. } => c.clone(),
                _ => Rat::zero(),
            };
            Ok(Triplet {
                k: tr.k.clone(),
                d: power_coef(gamma.clone(), d),
                f: power_coef(gamma + Rat::one(), lambda),
            })
        }
        Move::ConstGauge { c } => {
            if is_const_coef(&tr.k).is_none() || is_const_coef(&tr.d).is_none() {
                return Err(ClassifyError::OutsideFamilies(
                    "constant gauge needs constant K and D".into(),
                ));
            }
            match &tr.f {
                CoefFn::LogForm { l, g, l1, l0 }
                    if g.is_zero()
                        && l0.is_zero()
                        && !l.is_zero()
                        && c.r.is_one()
                        && c.rho == l1 / l =>
                {
                    Ok(Triplet {
                        k: tr.k.clone(),
                        d: tr.d.clone(),
                        f: CoefFn::LogForm {
                            l: l.clone(),
                            g: Rat::zero(),
                            l1: Rat::zero(),
                            l0: Rat::zero(),
                        },
                    })
                }
                _ => Err(ClassifyError::OutsideFamilies(
                    "constant gauge expects the shifted log-form reaction".into(),
                )),
            }
        }
    }
}

/// Applies the transform to a triplet.
pub fn apply_to_triplet(
    t: &EquivalenceTransform,
    tr: &Triplet,
) -> Result<Triplet, ClassifyError> {
    let mut cur = tr.clone();
    for m in &t.moves {
        cur = apply_move(&cur, m)?;
    }
    Ok(cur)
}

/// Pushforward of a vector field under the transform: coefficients of the
/// transformed generator expressed in the starred variables.
pub fn apply_to_field(
    t: &EquivalenceTransform,
    x: &VectorField,
) -> Result<VectorField, ClassifyError> {
    let mut cur = x.clone();
    for m in &t.moves {
        cur = push_move(&cur, m)?;
    }
    Ok(cur)
}

fn subst_tuv(
    e: &Expr,
    t_repl: &Expr,
    u_repl: &Expr,
    v_repl: &Expr,
) -> Result<Expr, ClassifyError> {
    Ok(subst_symbols(e, &|s| match s {
        Slot::Indep(Indep::T) => Some(t_repl.clone()),
        Slot::Jet(j) if j.dep == Dep::U && j.dt == 0 && j.dx == 0 => Some(u_repl.clone()),
        Slot::Jet(j) if j.dep == Dep::V && j.dt == 0 && j.dx == 0 => Some(v_repl.clone()),
        _ => None,
    })?)
}

fn push_move(x: &VectorField, m: &Move) -> Result<VectorField, ClassifyError> {
    let (tt, uu, vv) = (Expr::t(), Expr::u(), Expr::v());
    // xi0* = X(t*), eta1* = X(u*), eta2* = X(v*), re-expressed in the starred
    // variables via the inverse map
    let map = |f: &VectorField,
               tstar: &Expr,
               ustar: &Expr,
               vstar: &Expr,
               inv_t: &Expr,
               inv_u: &Expr,
               inv_v: &Expr|
     -> Result<VectorField, ClassifyError> {
        let xi0 = subst_tuv(&f.apply(tstar), inv_t, inv_u, inv_v)?;
        let eta1 = subst_tuv(&f.apply(ustar), inv_t, inv_u, inv_v)?;
        let eta2 = subst_tuv(&f.apply(vstar), inv_t, inv_u, inv_v)?;
        let xi1 = subst_tuv(&f.xi1, inv_t, inv_u, inv_v)?;
        Ok(VectorField::pair(xi0, xi1, eta1, eta2))
    };
    match m {
        Move::TimeScale { k } => {
            let tstar = tt.scale(k);
            let inv_t = Expr::t().scale(&(Rat::one() / k.clone()));
            map(x, &tstar, &uu, &vv, &inv_t, &uu, &vv)
        }
        Move::UShift { s } => {
            let ustar = uu.add(&Expr::num(s.clone()));
            let inv_u = Expr::u().sub(&Expr::num(s.clone()));
            map(x, &tt, &ustar, &vv, &tt, &inv_u, &vv)
        }
        Move::ULinearT { c } => {
            let ustar = uu.add(&tt.scale(c));
            let inv_u = Expr::u().sub(&Expr::t().scale(c));
            map(x, &tt, &ustar, &vv, &tt, &inv_u, &vv)
        }
        Move::ExpGauge { rate } => {
            let g = Expr::exp(tt.scale(rate));
            let ginv = Expr::exp(tt.scale(&-rate.clone()));
            let ustar = g.mul(&uu);
            let vstar = g.mul(&vv);
            let inv_u = ginv.mul(&Expr::u());
            let inv_v = ginv.mul(&Expr::v());
            map(x, &tt, &ustar, &vstar, &tt, &inv_u, &inv_v)
        }
        Move::PowerGauge { rate, gamma } => {
            // t* = e^{theta t}/theta with theta = -rate*gamma;
            // e^{rate t} = (theta t*)^{-1/gamma}
            let theta = -(rate * gamma);
            let tstar = Expr::exp(tt.scale(&theta)).scale(&(Rat::one() / theta.clone()));
            let g = Expr::exp(tt.scale(rate));
            let ustar = g.mul(&uu);
            let vstar = g.mul(&vv);
            let theta_t = Expr::t().scale(&theta);
            let inv_t = Expr::ln(theta_t.clone()).scale(&(Rat::one() / theta.clone()));
            let pow_pos = theta_t.pow(&(Rat::one() / gamma.clone()))?;
            let inv_u = Expr::u().mul(&pow_pos);
            let inv_v = Expr::v().mul(&pow_pos);
            map(x, &tstar, &ustar, &vstar, &inv_t, &inv_u, &inv_v)
        }
        Move::ConstGauge { c } => {
            let ce = c.to_expr();
            let cinv = ExactScalar {
                r: Rat::one() / c.r.clone(),
                rho: -c.rho.clone(),
            }
            .to_expr();
            let ustar = ce.mul(&uu);
            let vstar = ce.mul(&vv);
            let inv_u = cinv.mul(&Expr::u());
            let inv_v = cinv.mul(&Expr::v());
            map(x, &tt, &ustar, &vstar, &tt, &inv_u, &inv_v)
        }
    }
}

/// Forward numeric map (t, x, u, v) -> (t*, x*, u*, v*), for transforming
/// solution evaluators.
pub fn map_point(t: &EquivalenceTransform, p: [f64; 4]) -> [f64; 4] {
    let mut cur = p;
    let f = crate::rat::to_f64;
    for m in &t.moves {
        let [tt, xx, uu, vv] = cur;
        cur = match m {
            Move::TimeScale { k } => [f(k) * tt, xx, uu, vv],
            Move::UShift { s } => [tt, xx, uu + f(s), vv],
            Move::ULinearT { c } => [tt, xx, uu + f(c) * tt, vv],
            Move::ExpGauge { rate } => {
                let g = (f(rate) * tt).exp();
                [tt, xx, g * uu, g * vv]
            }
            Move::PowerGauge { rate, gamma } => {
                let theta = -f(rate) * f(gamma);
                let g = (f(rate) * tt).exp();
                [(theta * tt).exp() / theta, xx, g * uu, g * vv]
            }
            Move::ConstGauge { c } => {
                let g = c.to_f64();
                [tt, xx, g * uu, g * vv]
            }
        };
    }
    cur
}

// ---------------------------------------------------------------------------
// Generators (Table 1, operator column)
// ---------------------------------------------------------------------------

fn p_t() -> VectorField {
    VectorField::pair(Expr::one(), Expr::zero(), Expr::zero(), Expr::zero())
}

fn p_x() -> VectorField {
    VectorField::pair(Expr::zero(), Expr::one(), Expr::zero(), Expr::zero())
}

fn d1() -> VectorField {
    VectorField::pair(
        Expr::t().scale(&rint(4)),
        Expr::x(),
        Expr::zero(),
        Expr::v().scale(&rint(-2)),
    )
}

fn scaling_i() -> VectorField {
    VectorField::pair(Expr::zero(), Expr::zero(), Expr::u(), Expr::v())
}

/// D2 = 2(gamma-2mu) t ∂_t + (gamma-mu) x ∂_x + 2 ∂_u - 2(gamma-mu) v ∂_v
fn d2(gamma: &Rat, mu: &Rat) -> VectorField {
    let gm = gamma - mu;
    VectorField::pair(
        Expr::t().scale(&((gamma - &(rint(2) * mu)) * rint(2))),
        Expr::x().scale(&gm),
        Expr::int(2),
        Expr::v().scale(&(-gm * rint(2))),
    )
}

/// D3 = 2(gamma-2mu) t ∂_t + (gamma-mu) x ∂_x + 2u ∂_u + 2(mu-gamma+1) v ∂_v
fn d3(gamma: &Rat, mu: &Rat) -> VectorField {
    VectorField::pair(
        Expr::t().scale(&((gamma - &(rint(2) * mu)) * rint(2))),
        Expr::x().scale(&(gamma - mu)),
        Expr::u().scale(&rint(2)),
        Expr::v().scale(&((mu - gamma + Rat::one()) * rint(2))),
    )
}

/// Q1 = e^{lambda t}(u ∂_u + v ∂_v)
fn q1(lambda: &Rat) -> VectorField {
    let g = Expr::exp(Expr::t().scale(lambda));
    VectorField::pair(
        Expr::zero(),
        Expr::zero(),
        g.mul(&Expr::u()),
        g.mul(&Expr::v()),
    )
}

/// X_inf = P(t,x) ∂_u + P_xx(t,x) ∂_v.
pub fn x_infinity(p: &Expr) -> Result<VectorField, ClassifyError> {
    use crate::symexpr::total_derivative;
    let pxx = total_derivative(&total_derivative(p, Indep::X)?, Indep::X)?;
    Ok(VectorField::pair(
        Expr::zero(),
        Expr::zero(),
        p.clone(),
        pxx,
    ))
}

/// Checks the linear constraint P_t + P_xxxx - d P_xx = 0 for a witness.
pub fn xinf_constraint_ok(p: &Expr, d: &Rat) -> Result<bool, ClassifyError> {
    use crate::symexpr::total_derivative;
    let dx = |e: &Expr| total_derivative(e, Indep::X);
    let pt = total_derivative(p, Indep::T)?;
    let pxx = dx(&dx(p)?)?;
    let pxxxx = dx(&dx(&pxx)?)?;
    Ok(pt.add(&pxxxx).sub(&pxx.scale(d)).is_zero())
}

/// Polynomial witnesses P(t,x) solving P_t + P_xxxx - d P_xx = 0.
pub fn xinf_witnesses(d: &Rat) -> Vec<Expr> {
    let t = Expr::t();
    let x = Expr::x();
    let x2 = x.mul(&x);
    let x3 = x2.mul(&x);
    let x4 = x2.mul(&x2);
    vec![
        Expr::one(),
        x.clone(),
        x2.clone().add(&t.scale(&(rint(2) * d))),
        x3.add(&t.mul(&x).scale(&(rint(6) * d))),
        x4.add(&t.mul(&x2).scale(&(rint(12) * d)))
            .add(&t.mul(&t).scale(&(rint(12) * d * d)))
            .sub(&t.scale(&rint(24))),
    ]
}

/// The Table-1 generator basis for a case, instantiated at the given
/// parameters (gamma, mu, d, lambda as relevant).
pub fn generators_for_case(
    case: CaseId,
    s: &ParamSample,
) -> Result<Vec<NamedField>, ClassifyError> {
    let get = |n: &str| s.get(n).cloned().unwrap_or_else(Rat::zero);
    let named = |name: &str, f: VectorField| NamedField {
        name: name.to_string(),
        field: f,
    };
    let mut base = vec![named("P_t", p_t()), named("P_x", p_x())];
    match case {
        CaseId::Trivial => Ok(base),
        CaseId::Case(1) => {
            base.push(named("D1", d1()));
            Ok(base)
        }
        CaseId::Case(2) => {
            let (g, m) = (get("gamma"), get("mu"));
            check_case2_3_restrictions(2, &g, &m, &get("d"), &get("lambda"))?;
            base.push(named("D2", d2(&g, &m)));
            Ok(base)
        }
        CaseId::Case(3) => {
            let (g, m) = (get("gamma"), get("mu"));
            check_case2_3_restrictions(3, &g, &m, &get("d"), &get("lambda"))?;
            base.push(named("D3", d3(&g, &m)));
            Ok(base)
        }
        CaseId::Case(4) => {
            let l = get("lambda");
            if l.is_zero() {
                return Err(ClassifyError::Restriction {
                    case: 4,
                    what: "lambda != 0".into(),
                });
            }
            base.push(named("Q1", q1(&l)));
            Ok(base)
        }
        CaseId::Case(5) => {
            let g = get("gamma");
            if g.is_zero() {
                return Err(ClassifyError::Restriction {
                    case: 5,
                    what: "gamma != 0".into(),
                });
            }
            base.push(named("D1", d1()));
            base.push(named("D2(mu=gamma)", d2(&g, &g)));
            Ok(base)
        }
        CaseId::Case(6) => {
            let g = get("gamma");
            if g.is_zero() {
                return Err(ClassifyError::Restriction {
                    case: 6,
                    what: "gamma != 0".into(),
                });
            }
            base.push(named("D1", d1()));
            base.push(named("D3(mu=gamma)", d3(&g, &g)));
            Ok(base)
        }
        CaseId::Case(7) => {
            let d = get("d");
            if d.is_zero() {
                return Err(ClassifyError::Restriction {
                    case: 7,
                    what: "d != 0".into(),
                });
            }
            base.push(named("I", scaling_i()));
            for (i, p) in xinf_witnesses(&d).into_iter().enumerate() {
                base.push(named(&format!("Xinf[P{}]", i + 1), x_infinity(&p)?));
            }
            Ok(base)
        }
        CaseId::Case(8) => {
            base.push(named("I", scaling_i()));
            base.push(named("D1", d1()));
            for (i, p) in xinf_witnesses(&Rat::zero()).into_iter().enumerate() {
                base.push(named(&format!("Xinf[P{}]", i + 1), x_infinity(&p)?));
            }
            Ok(base)
        }
        CaseId::Case(n) => Err(ClassifyError::Restriction {
            case: n,
            what: "unknown case".into(),
        }),
    }
}

fn check_case2_3_restrictions(
    case: u8,
    gamma: &Rat,
    mu: &Rat,
    d: &Rat,
    lambda: &Rat,
) -> Result<(), ClassifyError> {
    if gamma.is_zero() && mu.is_zero() {
        return Err(ClassifyError::Restriction {
            case,
            what: "gamma^2 + mu^2 != 0".into(),
        });
    }
    if d.is_zero() && lambda.is_zero() {
        return Err(ClassifyError::Restriction {
            case,
            what: "d^2 + lambda^2 != 0".into(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The decision procedure
// ---------------------------------------------------------------------------

struct Pipeline {
    moves: Vec<Move>,
    tr: Triplet,
    diagnostics: Vec<String>,
}

impl Pipeline {
    fn push(&mut self, m: Move) -> Result<(), ClassifyError> {
        self.tr = apply_move(&self.tr, &m)?;
        self.moves.push(m);
        Ok(())
    }
}

/// Leading coefficient of K for the k=1 time rescale.
fn k_leading(c: &CoefFn) -> Option<Rat> {
    match c {
        CoefFn::Constant { c } => Some(c.clone()),
        CoefFn::PowerShifted { c, .. } => Some(c.clone()),
        CoefFn::ExpLaw { c, .. } => Some(c.clone()),
        _ => None,
    }
}

/// The common shift of the power branch. Errors (as a message) when the
/// family members disagree.
fn common_shift(tr: &Triplet) -> Result<Option<Rat>, String> {
    let mut shift: Option<Rat> = None;
    let mut check = |slot: &str, s: &Rat| -> Result<(), String> {
        match &shift {
            None => {
                shift = Some(s.clone());
                Ok(())
            }
            Some(prev) if prev == s => Ok(()),
            Some(prev) => Err(format!(
                "{slot} carries shift {} but an earlier member carries {}",
                render_rat(s),
                render_rat(prev)
            )),
        }
    };
    for (slot, c) in [("K", &tr.k), ("D", &tr.d), ("F", &tr.f)] {
        match c {
            CoefFn::PowerShifted { shift: s, exponent, .. } => {
                if exponent.rat() != Some(&Rat::zero()) {
                    check(slot, s)?;
                }
            }
            CoefFn::PowerPlusLinear { shift: s, .. } => check(slot, s)?,
            _ => {}
        }
    }
    Ok(shift.filter(|s| !s.is_zero()))
}

/// Classifies a triplet per the Table-1 decision procedure.
pub fn classify(tr: &Triplet) -> Result<ClassificationResult, ClassifyError> {
    if !tr.is_concrete() {
        return classify_symbolic(tr);
    }
    let mut pl = Pipeline {
        moves: vec![],
        tr: tr.clone(),
        diagnostics: vec![],
    };

    if let CoefFn::Custom { .. } = &tr.k {
        return finish_custom(pl);
    }

    // common shift removal, then the k=1 time rescale
    match common_shift(&pl.tr) {
        Ok(Some(s)) => pl.push(Move::UShift { s })?,
        Ok(None) => {}
        Err(why) => {
            pl.diagnostics.push(format!(
                "inconsistent shifts: {why} (classification equations (16)/(17))"
            ));
            return finish_trivial(pl);
        }
    }
    if let Some(k) = k_leading(&pl.tr.k) {
        if !k.is_one() {
            pl.push(Move::TimeScale { k })?;
        }
    }

    match pl.tr.k.clone() {
        CoefFn::PowerShifted { shift, exponent, .. } if shift.is_zero() => {
            let gamma = exponent.rat().unwrap().clone();
            classify_power_branch(pl, gamma)
        }
        CoefFn::PowerShifted { .. } => {
            pl.diagnostics
                .push("K carries a shift that could not be removed (equation (16))".into());
            finish_trivial(pl)
        }
        CoefFn::ExpLaw { rate, .. } => {
            let gamma = rate.rat().unwrap().clone();
            classify_exp_branch(pl, gamma)
        }
        CoefFn::Constant { .. } => match pl.tr.d.clone() {
            CoefFn::PowerShifted { shift, exponent, .. }
                if shift.is_zero() && !exponent.rat().unwrap().is_zero() =>
            {
                classify_power_branch(pl, Rat::zero())
            }
            CoefFn::ExpLaw { .. } => classify_exp_branch(pl, Rat::zero()),
            CoefFn::Zero | CoefFn::Constant { .. } => classify_const_branch(pl),
            other => {
                pl.diagnostics.push(format!(
                    "D family '{}' incompatible with constant K (equation (17))",
                    coef_kind(&other)
                ));
                finish_trivial(pl)
            }
        },
        CoefFn::Zero => unreachable!("K is never zero"),
        other => {
            pl.diagnostics.push(format!(
                "K family '{}' is outside the classified families (equation (16))",
                coef_kind(&other)
            ));
            finish_trivial(pl)
        }
    }
}

fn coef_kind(c: &CoefFn) -> &'static str {
    match c {
        CoefFn::Zero => "zero",
        CoefFn::Constant { .. } => "constant",
        CoefFn::PowerShifted { .. } => "power",
        CoefFn::ExpLaw { .. } => "exp",
        CoefFn::Linear { .. } => "linear",
        CoefFn::LogForm { .. } => "log",
        CoefFn::PowerPlusLinear { .. } => "power+linear",
        CoefFn::Custom { .. } => "custom",
    }
}

/// K = u^gamma (gamma = 0 when K is constant but D is a power).
fn classify_power_branch(
    mut pl: Pipeline,
    gamma: Rat,
) -> Result<ClassificationResult, ClassifyError> {
    let (d_coef, mu_from_d): (Rat, Option<Rat>) = match &pl.tr.d {
        CoefFn::Zero => (Rat::zero(), None),
        CoefFn::Constant { c } => (c.clone(), Some(Rat::zero())),
        CoefFn::PowerShifted { c, shift, exponent } if shift.is_zero() => {
            (c.clone(), Some(exponent.rat().unwrap().clone()))
        }
        other => {
            pl.diagnostics.push(format!(
                "D family '{}' incompatible with the power branch (equation (17))",
                coef_kind(other)
            ));
            return finish_trivial(pl);
        }
    };

    let f = pl.tr.f.clone();
    match f {
        CoefFn::Zero => {
            if d_coef.is_zero() {
                if gamma.is_zero() {
                    return finish_case(pl, 8, &[]);
                }
                return finish_case(pl, 6, &[("gamma", gamma)]);
            }
            let mu = mu_from_d.unwrap();
            finish_case(
                pl,
                3,
                &[
                    ("gamma", gamma),
                    ("mu", mu),
                    ("d", d_coef),
                    ("lambda", Rat::zero()),
                ],
            )
        }
        CoefFn::Constant { c: lambda } => {
            power_case3(pl, gamma, mu_from_d, d_coef, lambda, Rat::zero())
        }
        CoefFn::PowerShifted {
            c: lambda,
            shift,
            exponent,
        } => {
            if !shift.is_zero() {
                pl.diagnostics
                    .push("F carries a leftover shift (equation (18))".into());
                return finish_trivial(pl);
            }
            let nu = exponent.rat().unwrap().clone();
            power_case3(pl, gamma, mu_from_d, d_coef, lambda, nu)
        }
        CoefFn::Linear { l1, l0 } => {
            if !l0.is_zero() {
                pl.diagnostics
                    .push("linear reaction intercept survives the shift (equation (18))".into());
                return finish_trivial(pl);
            }
            let fits_case3 = mu_from_d
                .as_ref()
                .map(|mu| rint(2) * mu - &gamma + Rat::one() == Rat::one() && !d_coef.is_zero())
                .unwrap_or(false);
            if fits_case3 {
                let mu = mu_from_d.unwrap();
                return finish_case(
                    pl,
                    3,
                    &[("gamma", gamma), ("mu", mu), ("d", d_coef), ("lambda", l1)],
                );
            }
            if gamma.is_zero() {
                pl.diagnostics
                    .push("pure linear reaction with K=1 and power D admits no gauge (equation (18))".into());
                return finish_trivial(pl);
            }
            let d_ok = mu_from_d.as_ref().map(|m| m == &gamma).unwrap_or(true);
            if !d_ok {
                pl.diagnostics.push(
                    "linear reaction needs D-exponent = gamma for the gauge (equation (17))"
                        .into(),
                );
                return finish_trivial(pl);
            }
            pl.push(Move::PowerGauge {
                rate: -l1,
                gamma: gamma.clone(),
            })?;
            if d_coef.is_zero() {
                finish_case(pl, 6, &[("gamma", gamma)])
            } else {
                finish_case(
                    pl,
                    3,
                    &[
                        ("gamma", gamma.clone()),
                        ("mu", gamma),
                        ("d", d_coef),
                        ("lambda", Rat::zero()),
                    ],
                )
            }
        }
        CoefFn::PowerPlusLinear {
            c: lambda,
            shift,
            exponent,
            l1,
        } => {
            if !shift.is_zero() {
                pl.diagnostics
                    .push("F carries a leftover shift (equation (18))".into());
                return finish_trivial(pl);
            }
            let e = exponent.rat().unwrap().clone();
            if l1.is_zero() {
                return power_case3(pl, gamma, mu_from_d, d_coef, lambda, e);
            }
            let d_ok = mu_from_d.as_ref().map(|m| m == &gamma).unwrap_or(true);
            if gamma.is_zero() || e != &gamma + Rat::one() || !d_ok {
                pl.diagnostics.push(
                    "power-plus-linear reaction does not match the gauged family (equation (18))"
                        .into(),
                );
                return finish_trivial(pl);
            }
            pl.push(Move::PowerGauge {
                rate: -l1,
                gamma: gamma.clone(),
            })?;
            finish_case(
                pl,
                3,
                &[
                    ("gamma", gamma.clone()),
                    ("mu", gamma),
                    ("d", d_coef),
                    ("lambda", lambda),
                ],
            )
        }
        other => {
            pl.diagnostics.push(format!(
                "F family '{}' incompatible with the power branch (equation (18))",
                coef_kind(&other)
            ));
            finish_trivial(pl)
        }
    }
}

/// The exponent relation nu = 2mu - gamma + 1 of case 3.
fn power_case3(
    mut pl: Pipeline,
    gamma: Rat,
    mu_from_d: Option<Rat>,
    d_coef: Rat,
    lambda: Rat,
    nu: Rat,
) -> Result<ClassificationResult, ClassifyError> {
    let mu = match mu_from_d {
        Some(mu) => {
            if rint(2) * &mu - &gamma + Rat::one() != nu {
                pl.diagnostics.push(format!(
                    "reaction exponent {} != 2mu-gamma+1 (equation (18))",
                    render_rat(&nu)
                ));
                return finish_trivial(pl);
            }
            mu
        }
        None => (nu + &gamma - Rat::one()) / rint(2),
    };
    if gamma.is_zero() && mu.is_zero() {
        pl.diagnostics
            .push("gamma^2 + mu^2 = 0: constant coefficients belong to cases 4/7/8".into());
        return finish_trivial(pl);
    }
    finish_case(
        pl,
        3,
        &[
            ("gamma", gamma),
            ("mu", mu),
            ("d", d_coef),
            ("lambda", lambda),
        ],
    )
}

/// K = e^{gamma u} (gamma = 0 when K is constant but D exponential).
fn classify_exp_branch(
    mut pl: Pipeline,
    gamma: Rat,
) -> Result<ClassificationResult, ClassifyError> {
    let (d_coef, mu_from_d): (Rat, Option<Rat>) = match &pl.tr.d {
        CoefFn::Zero => (Rat::zero(), None),
        CoefFn::Constant { c } => (c.clone(), Some(Rat::zero())),
        CoefFn::ExpLaw { c, rate } => (c.clone(), Some(rate.rat().unwrap().clone())),
        other => {
            pl.diagnostics.push(format!(
                "D family '{}' incompatible with the exponential branch (equation (17))",
                coef_kind(other)
            ));
            return finish_trivial(pl);
        }
    };
    let (lambda, rho): (Rat, Option<Rat>) = match &pl.tr.f {
        CoefFn::Zero => (Rat::zero(), None),
        CoefFn::Constant { c } => (c.clone(), Some(Rat::zero())),
        CoefFn::ExpLaw { c, rate } => (c.clone(), Some(rate.rat().unwrap().clone())),
        other => {
            pl.diagnostics.push(format!(
                "F family '{}' incompatible with the exponential branch (equation (18))",
                coef_kind(other)
            ));
            return finish_trivial(pl);
        }
    };
    if d_coef.is_zero() && lambda.is_zero() {
        if gamma.is_zero() {
            return finish_case(pl, 8, &[]);
        }
        return finish_case(pl, 5, &[("gamma", gamma)]);
    }
    let mu = match (&mu_from_d, &rho) {
        (Some(mu), Some(r)) if !lambda.is_zero() => {
            if rint(2) * mu - &gamma != *r {
                pl.diagnostics.push(format!(
                    "reaction rate {} != 2mu-gamma (equation (18))",
                    render_rat(r)
                ));
                return finish_trivial(pl);
            }
            mu.clone()
        }
        (Some(mu), _) => mu.clone(),
        (None, Some(r)) => (r + &gamma) / rint(2),
        (None, None) => unreachable!("d or lambda nonzero"),
    };
    if gamma.is_zero() && mu.is_zero() {
        pl.diagnostics
            .push("gamma^2 + mu^2 = 0: constant coefficients belong to cases 4/7/8".into());
        return finish_trivial(pl);
    }
    finish_case(
        pl,
        2,
        &[
            ("gamma", gamma),
            ("mu", mu),
            ("d", d_coef),
            ("lambda", lambda),
        ],
    )
}

/// K = 1, D constant: cases 4, 7, 8 via the gauges.
fn classify_const_branch(mut pl: Pipeline) -> Result<ClassificationResult, ClassifyError> {
    let d = is_const_coef(&pl.tr.d).unwrap();
    match pl.tr.f.clone() {
        CoefFn::Zero => finish_78(pl, d),
        CoefFn::Constant { c } => {
            pl.push(Move::ULinearT { c: -c })?;
            finish_78(pl, d)
        }
        CoefFn::Linear { l1, l0 } => {
            if l1.is_zero() {
                if !l0.is_zero() {
                    pl.push(Move::ULinearT { c: -l0 })?;
                }
                return finish_78(pl, d);
            }
            if !l0.is_zero() {
                pl.push(Move::UShift { s: l0 / &l1 })?;
            }
            pl.push(Move::ExpGauge { rate: -l1 })?;
            finish_78(pl, d)
        }
        CoefFn::LogForm { l, g, l1, l0 } => {
            if l.is_zero() {
                pl.tr.f = CoefFn::Linear { l1, l0 };
                return classify_const_branch(pl);
            }
            if l0 != &l1 * &g {
                pl.diagnostics.push(
                    "log-form reaction needs l0 = l1*gamma for invariance (equation (18))".into(),
                );
                return finish_trivial(pl);
            }
            if !g.is_zero() {
                pl.push(Move::UShift { s: g })?;
            }
            if !l1.is_zero() {
                pl.push(Move::ConstGauge {
                    c: ExactScalar {
                        r: Rat::one(),
                        rho: &l1 / &l,
                    },
                })?;
            }
            finish_case(pl, 4, &[("lambda", l), ("d", d)])
        }
        other => {
            pl.diagnostics.push(format!(
                "F family '{}' with constant K, D admits no extra symmetry (equation (18))",
                coef_kind(&other)
            ));
            finish_trivial(pl)
        }
    }
}

fn finish_78(pl: Pipeline, d: Rat) -> Result<ClassificationResult, ClassifyError> {
    if d.is_zero() {
        finish_case(pl, 8, &[])
    } else {
        finish_case(pl, 7, &[("d", d)])
    }
}

fn finish_custom(mut pl: Pipeline) -> Result<ClassificationResult, ClassifyError> {
    if pl.tr.d.is_zero() && pl.tr.f.is_zero() {
        let generators = generators_for_case(CaseId::Case(1), &ParamSample::default())?;
        return Ok(ClassificationResult {
            case: CaseId::Case(1),
            normalized: pl.tr.clone(),
            transform: EquivalenceTransform { moves: pl.moves },
            params: ParamSample::default(),
            generators,
            restrictions: vec![Restriction {
                what: "K arbitrary (outside the parametric families); D = F = 0".into(),
                satisfied: true,
            }],
            diagnostics: pl.diagnostics,
        });
    }
    pl.diagnostics
        .push("arbitrary K with nonzero D or F admits only translations".into());
    finish_trivial(pl)
}

fn finish_trivial(pl: Pipeline) -> Result<ClassificationResult, ClassifyError> {
    let generators = generators_for_case(CaseId::Trivial, &ParamSample::default())?;
    Ok(ClassificationResult {
        case: CaseId::Trivial,
        normalized: pl.tr,
        transform: EquivalenceTransform { moves: pl.moves },
        params: ParamSample::default(),
        generators,
        restrictions: vec![],
        diagnostics: pl.diagnostics,
    })
}

fn restriction_report(case: u8, s: &ParamSample) -> Vec<Restriction> {
    let get = |n: &str| s.get(n).cloned().unwrap_or_else(Rat::zero);
    let nz = |r: &Rat| !r.is_zero();
    match case {
        2 | 3 => vec![
            Restriction {
                what: "gamma^2 + mu^2 != 0".into(),
                satisfied: nz(&get("gamma")) || nz(&get("mu")),
            },
            Restriction {
                what: "d^2 + lambda^2 != 0".into(),
                satisfied: nz(&get("d")) || nz(&get("lambda")),
            },
        ],
        4 => vec![Restriction {
            what: "lambda != 0".into(),
            satisfied: nz(&get("lambda")),
        }],
        5 | 6 => vec![Restriction {
            what: "gamma != 0".into(),
            satisfied: nz(&get("gamma")),
        }],
        7 => vec![Restriction {
            what: "d != 0".into(),
            satisfied: nz(&get("d")),
        }],
        _ => vec![],
    }
}

fn finish_case(
    pl: Pipeline,
    case: u8,
    params: &[(&str, Rat)],
) -> Result<ClassificationResult, ClassifyError> {
    let sample = ParamSample::of(
        &params
            .iter()
            .map(|(n, r)| (*n, r.clone()))
            .collect::<Vec<_>>(),
    );
    let restrictions = restriction_report(case, &sample);
    if restrictions.iter().any(|r| !r.satisfied) {
        let mut pl = pl;
        for r in &restrictions {
            if !r.satisfied {
                pl.diagnostics.push(format!("restriction fails: {}", r.what));
            }
        }
        return finish_trivial(pl);
    }
    let generators = generators_for_case(CaseId::Case(case), &sample)?;
    Ok(ClassificationResult {
        case: CaseId::Case(case),
        normalized: pl.tr,
        transform: EquivalenceTransform { moves: pl.moves },
        params: sample,
        generators,
        restrictions,
        diagnostics: pl.diagnostics,
    })
}

/// Family-level classification for symbolic parameters: value-dependent
/// restrictions are reported as conditions, not resolved.
fn classify_symbolic(tr: &Triplet) -> Result<ClassificationResult, ClassifyError> {
    let mut diagnostics = vec!["symbolic parameters: conditional classification".to_string()];
    let case = match (&tr.k, &tr.d, &tr.f) {
        (CoefFn::PowerShifted { .. }, CoefFn::Zero, CoefFn::Zero) => {
            diagnostics.push("conditional on gamma != 0 (else case 8)".into());
            CaseId::Case(6)
        }
        (CoefFn::PowerShifted { .. }, _, _) => {
            diagnostics.push(
                "conditional on exponent(F) = 2mu-gamma+1 and the Table-1 restrictions".into(),
            );
            CaseId::Case(3)
        }
        (CoefFn::ExpLaw { .. }, CoefFn::Zero, CoefFn::Zero) => {
            diagnostics.push("conditional on gamma != 0".into());
            CaseId::Case(5)
        }
        (CoefFn::ExpLaw { .. }, _, _) => {
            diagnostics
                .push("conditional on rate(F) = 2mu-gamma and the Table-1 restrictions".into());
            CaseId::Case(2)
        }
        _ => {
            diagnostics.push("family shape not recognized symbolically".into());
            CaseId::Trivial
        }
    };
    Ok(ClassificationResult {
        case,
        normalized: tr.clone(),
        transform: EquivalenceTransform::identity(),
        params: ParamSample::default(),
        generators: generators_for_case(CaseId::Trivial, &ParamSample::default())?,
        restrictions: vec![],
        diagnostics,
    })
}

/// Structure constants of [a, b] in the rational span of a basis, by exact
/// linear solve on the coefficient expressions. None when outside the span.
pub fn structure_constants(
    a: &VectorField,
    b: &VectorField,
    basis: &[VectorField],
) -> Option<Vec<Rat>> {
    use crate::symexpr::{solve_rational_system, Factor, Monomial};
    use std::collections::BTreeMap;
    let comm = a.commutator(b);
    let components = |f: &VectorField| -> Vec<Expr> {
        vec![f.xi0.clone(), f.xi1.clone(), f.eta(Dep::U), f.eta(Dep::V)]
    };
    type MonoKey = (usize, Vec<(Factor, Rat)>);
    let mut monomials: BTreeMap<MonoKey, usize> = BTreeMap::new();
    let idx = |slot: usize, m: &Monomial, mono: &mut BTreeMap<MonoKey, usize>| {
        let key = (slot, m.factors.clone());
        let next = mono.len();
        *mono.entry(key).or_insert(next)
    };
    let mut cols: Vec<Vec<(usize, Rat)>> = Vec::new();
    for base in basis {
        let mut col = Vec::new();
        for (slot, e) in components(base).into_iter().enumerate() {
            for m in &e.terms {
                col.push((idx(slot, m, &mut monomials), m.coeff.clone()));
            }
        }
        cols.push(col);
    }
    let mut rhs_entries = Vec::new();
    for (slot, e) in components(&comm).into_iter().enumerate() {
        for m in &e.terms {
            rhs_entries.push((idx(slot, m, &mut monomials), m.coeff.clone()));
        }
    }
    let rows = monomials.len();
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
    solve_rational_system(&mat, &rhs)
}

#[cfg(test)]
mod tests;
