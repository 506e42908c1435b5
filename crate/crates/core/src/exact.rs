//! Catalog of the closed-form exact solutions, their parameter-constraint
//! solvers (quartics and transcendental relations), and symbolic/numeric
//! residual certification.
//!
//! Entries (systems are instances of u_t = -[u^g v_x]_x + d[u^m u_x]_x
//! + lambda u^(2m-g+1), v = u_xx):
//!
//! - E1: traveling power front u = a (a1 x - a2 t)^{1/mu} on (g, m) = (3mu, mu),
//!   amplitude from a quartic in a^mu;
//! - E2: stationary-shape hyperbola u = C e^{lambda t}/x on (-4, -2);
//! - E3/E3b: separable power profile u = phi(t) x^{2/mu} on (2mu, mu), phi from
//!   a transcendental relation (lambda = 0 / lambda != 0);
//! - E4: stationary u = a x^{2/mu} on (2mu, mu), a from a quadratic in a^mu;
//! - E5/E6: decaying sinusoid / exponential profile over 1/t on (2, 1);
//! - E7/E7b: quartic polynomial self-similar solutions on (1, 0);
//! - E8: squared-parabola profile on (1, 1/4) with square-root reaction.

use crate::model::{build_system, case3_triplet, ParamSample, SystemForm, Triplet};
use crate::numerics::roots::{real_roots, residual_at};
use crate::rat::{render_rat, rint, rq, to_f64, Rat};
use crate::symexpr::{
    eval_with_scale, subst_symbols, total_derivative, Bindings, Dep, Expr, ExprError, Indep, Jet,
    Slot,
};
use num_traits::{One, Signed, Zero};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ExactError {
    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),
    #[error("missing parameter '{0}'")]
    MissingParam(String),
    #[error("parameter restriction violated: {0}")]
    Restriction(String),
    #[error("(t, x) = ({0}, {1}) outside the validity domain: {2}")]
    DomainViolation(f64, f64, String),
    #[error("no admissible root; complex root set: {0:?}")]
    NoAdmissibleRoot(Vec<(f64, f64)>),
    #[error("no root on the bracketed monotone branch")]
    NoRootInBracket,
    #[error("integration path crosses a pole of the rational integrand")]
    PoleCrossed,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// One catalog entry, fully instantiated at exact parameter values.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub title: &'static str,
    pub triplet: Triplet,
    /// exact parameter values used to build the forms
    pub params: ParamSample,
    /// u(t, x); the E3 profile carries the opaque parameters phi/phiprime
    pub u_form: Expr,
    /// v(t, x), always the symbolic second x-derivative of u_form
    pub v_form: Expr,
    /// the printed v-form when it disagrees with u_xx (suspected typo, kept
    /// for the record and never trusted)
    pub printed_v: Option<Expr>,
    /// sampling rectangle [t0, t1] x [x0, x1] inside the validity domain
    pub region: (f64, f64, f64, f64),
    /// predicate description for error messages
    pub validity: &'static str,
    pub notes: Vec<String>,
}

pub const CATALOG_IDS: [&str; 10] = [
    "E1", "E2", "E3", "E3b", "E4", "E5", "E6", "E7", "E7b", "E8",
];

fn need(params: &ParamSample, name: &str) -> Result<Rat, ExactError> {
    params
        .get(name)
        .cloned()
        .ok_or_else(|| ExactError::MissingParam(name.to_string()))
}

fn tshift(params: &ParamSample) -> (Expr, f64) {
    // time enters as (t - t_shift); positive shift moves the singularity to
    // t_shift, negative shift avoids it
    match params.get("t_shift") {
        Some(s) => (Expr::t().sub(&Expr::num(s.clone())), to_f64(s)),
        None => (Expr::t(), 0.0),
    }
}

/// Builds a catalog entry at exact parameter values.
pub fn build_entry(id: &str, params: &ParamSample) -> Result<CatalogEntry, ExactError> {
    let p = params;
    match id {
        "E1" => {
            let mu = need(p, "mu")?;
            let (d, lambda) = (need(p, "d")?, need(p, "lambda")?);
            let (a1, a2) = (need(p, "alpha1")?, need(p, "alpha2")?);
            let alpha = need(p, "alpha")?;
            let g = rint(3) * &mu;
            let triplet = case3_triplet(&g, &mu, &d, &lambda);
            let omega = Expr::x().scale(&a1).sub(&Expr::t().scale(&a2));
            let inv_mu = Rat::one() / mu.clone();
            let u = omega.pow(&inv_mu)?.scale(&alpha);
            let v = omega
                .pow(&(&inv_mu - &rint(2)))?
                .scale(&(&alpha * &inv_mu * (&inv_mu - &Rat::one()) * &a1 * &a1));
            // region: a1 x - a2 t > 0
            let (t0, t1) = (0.1, 0.5);
            let xlo = (to_f64(&a2) * t1 + 0.5) / to_f64(&a1);
            Ok(CatalogEntry {
                id: "E1",
                title: "traveling power front on (u^{3mu}, d u^mu, lambda u^{1-mu})",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (t0, t1, xlo, xlo + 2.0),
                validity: "alpha1 x - alpha2 t > 0",
                notes: vec![],
            })
        }
        "E2" => {
            let (c, d, lambda) = (need(p, "C")?, need(p, "d")?, need(p, "lambda")?);
            let triplet = case3_triplet(&rint(-4), &rint(-2), &d, &lambda);
            let elt = Expr::exp(Expr::t().scale(&lambda));
            let u = elt.mul(&Expr::x().pow(&rint(-1))?).scale(&c);
            let v = elt
                .mul(&Expr::x().pow(&rint(-3))?)
                .scale(&(rint(2) * &c));
            Ok(CatalogEntry {
                id: "E2",
                title: "u = C e^{lambda t}/x on (u^-4, d u^-2, lambda u)",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (0.0, 1.0, 1.0, 3.0),
                validity: "x > 0",
                notes: vec![],
            })
        }
        "E3" | "E3b" => {
            let mu = need(p, "mu")?;
            let d = need(p, "d")?;
            let lambda = if id == "E3b" {
                need(p, "lambda")?
            } else {
                Rat::zero()
            };
            for bad in [rint(1), rint(2), rint(-2)] {
                if mu == bad {
                    return Err(ExactError::Restriction(format!(
                        "mu must avoid 1, +/-2 (got {})",
                        render_rat(&mu)
                    )));
                }
            }
            let triplet = case3_triplet(&(rint(2) * &mu), &mu, &d, &lambda);
            let e_u = rint(2) / mu.clone();
            let phi = Expr::param("phi");
            let u = phi.mul(&Expr::x().pow(&e_u)?);
            let v = phi
                .mul(&Expr::x().pow(&(&e_u - &rint(2)))?)
                .scale(&(&e_u * (&e_u - &Rat::one())));
            Ok(CatalogEntry {
                id: if id == "E3" { "E3" } else { "E3b" },
                title: "separable power profile with transcendental phi(t)",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (0.0, 1.0, 0.5, 2.5),
                validity: "x > 0; phi on a pole-free monotone branch",
                notes: vec!["phi bound numerically from the implicit relation".into()],
            })
        }
        "E4" => {
            let mu = need(p, "mu")?;
            let (d, lambda) = (need(p, "d")?, need(p, "lambda")?);
            let alpha = need(p, "alpha")?;
            let triplet = case3_triplet(&(rint(2) * &mu), &mu, &d, &lambda);
            let e_u = rint(2) / mu.clone();
            let u = Expr::x().pow(&e_u)?.scale(&alpha);
            let v = Expr::x()
                .pow(&(&e_u - &rint(2)))?
                .scale(&(rint(2) * &alpha * (rint(2) - mu.clone()) / (&mu * &mu)));
            Ok(CatalogEntry {
                id: "E4",
                title: "stationary u = alpha x^{2/mu} on (u^{2mu}, d u^mu, lambda u)",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (0.0, 1.0, 0.5, 2.5),
                validity: "x > 0",
                notes: vec![],
            })
        }
        "E5" => {
            let (d, lambda) = (need(p, "d")?, need(p, "lambda")?);
            let theta = need(p, "theta")?;
            let theta0 = p.get("theta0").cloned().unwrap_or_else(Rat::zero);
            if lambda.is_zero() {
                return Err(ExactError::Restriction("lambda != 0".into()));
            }
            let triplet = case3_triplet(&rint(1), &rint(1), &d, &lambda);
            let (tt, shift) = tshift(p);
            let tinv = tt.pow(&rint(-1))?;
            let abs_l = lambda.abs();
            let s = Expr::sin(Expr::x().scale(&theta).add(&Expr::num(theta0.clone())));
            let u = Expr::num(-rq(2, 3) / lambda.clone())
                .add(&s.scale(&(rq(2, 3) / abs_l.clone())))
                .mul(&tinv);
            let v = s
                .scale(&(-(rq(2, 3) / abs_l) * &theta * &theta))
                .mul(&tinv);
            let (reg_t0, reg_t1) = if shift > 0.0 {
                (shift + 0.5, shift + 1.5)
            } else {
                (1.0 - shift, 2.0 - shift)
            };
            Ok(CatalogEntry {
                id: "E5",
                title: "decaying sinusoid u = (-2/(3 lambda) + 2 sin(theta x + theta0)/(3|lambda|))/t",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (reg_t0, reg_t1, 0.0, std::f64::consts::TAU),
                validity: "t != t_shift",
                notes: vec![],
            })
        }
        "E6" => {
            let (d, lambda) = (need(p, "d")?, need(p, "lambda")?);
            let theta = need(p, "theta")?;
            let c1 = need(p, "C1")?;
            if lambda.is_zero() || c1.is_zero() {
                return Err(ExactError::Restriction("lambda != 0 and C1 != 0".into()));
            }
            let triplet = case3_triplet(&rint(1), &rint(1), &d, &lambda);
            let (tt, shift) = tshift(p);
            let tinv = tt.pow(&rint(-1))?;
            let ep = Expr::exp(Expr::x().scale(&theta));
            let em = Expr::exp(Expr::x().scale(&-theta.clone()));
            let c2 = Rat::one() / (rint(9) * &c1 * &lambda * &lambda);
            let u = Expr::num(-rq(2, 3) / lambda.clone())
                .add(&ep.scale(&c1))
                .add(&em.scale(&c2))
                .mul(&tinv);
            let th2 = &theta * &theta;
            let v = ep
                .scale(&(&c1 * &th2))
                .add(&em.scale(&(&c2 * &th2)))
                .mul(&tinv);
            let (reg_t0, reg_t1) = if shift > 0.0 {
                (shift + 0.5, shift + 1.5)
            } else {
                (1.0 - shift, 2.0 - shift)
            };
            Ok(CatalogEntry {
                id: "E6",
                title: "exponential profile over 1/t",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (reg_t0, reg_t1, 0.0, 1.5),
                validity: "t != t_shift",
                notes: vec![],
            })
        }
        "E7" => {
            let lambda = need(p, "lambda")?;
            let triplet = case3_triplet(&rint(1), &rint(0), &rint(0), &lambda);
            let tinv = Expr::t().pow(&rint(-1))?;
            let x = Expr::x();
            let x2 = x.mul(&x);
            let x4 = x2.mul(&x2);
            let u = x4
                .mul(&tinv)
                .scale(&rq(1, 120))
                .add(&Expr::t().scale(&(rq(5, 6) * &lambda)));
            let v = x2.mul(&tinv).scale(&rq(1, 10));
            Ok(CatalogEntry {
                id: "E7",
                title: "self-similar quartic u = x^4/(120 t) + 5 lambda t/6 on (u, 0, lambda)",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (1.0, 2.0, -1.0, 1.0),
                validity: "t > 0",
                notes: vec![],
            })
        }
        "E7b" => {
            let lambda = need(p, "lambda")?;
            let c0 = need(p, "C0")?;
            let c1 = need(p, "C1")?;
            let c2 = need(p, "C2")?;
            let c3 = need(p, "C3")?;
            let triplet = case3_triplet(&rint(1), &rint(0), &rint(0), &lambda);
            let t = Expr::t();
            let x = Expr::x();
            let x2 = x.mul(&x);
            let x3 = x2.mul(&x);
            let x4 = x2.mul(&x2);
            let tp = |e: Rat| t.pow(&e);
            let coef0 = tp(rq(-1, 5))?.scale(&c0)
                + tp(rq(-2, 5))?.scale(&(rint(30) * &c1 * &c3))
                + tp(rq(-3, 5))?.scale(&(rint(900) * &c2 * &c3 * &c3))
                + tp(rint(-1))?.scale(&(rint(6750) * &c3 * &c3 * &c3 * &c3))
                + t.scale(&(rq(5, 6) * &lambda));
            let coef1 = tp(rq(-2, 5))?.scale(&c1)
                + tp(rq(-3, 5))?.scale(&(rint(60) * &c2 * &c3))
                + tp(rint(-1))?.scale(&(rint(900) * &c3 * &c3 * &c3));
            let coef2 =
                tp(rq(-3, 5))?.scale(&c2) + tp(rint(-1))?.scale(&(rint(45) * &c3 * &c3));
            let coef3 = tp(rint(-1))?.scale(&c3);
            let coef4 = tp(rint(-1))?.scale(&rq(1, 120));
            let u = coef0
                .add(&coef1.mul(&x))
                .add(&coef2.mul(&x2))
                .add(&coef3.mul(&x3))
                .add(&coef4.mul(&x4));
            // v is recomputed as the symbolic second x-derivative; the printed
            // form (kept below) is inconsistent with v = u_xx
            let v = total_derivative(&total_derivative(&u, Indep::X)?, Indep::X)?;
            let printed_v = coef2
                .scale(&rint(2))
                .mul(&x2)
                .add(&x2.scale(&(rint(6) * &c3)).mul(&tp(rint(-1))?))
                .add(&x3.mul(&tp(rint(-1))?).scale(&rq(1, 10)));
            Ok(CatalogEntry {
                id: "E7b",
                title: "generalized quartic ansatz solution (printed v recomputed)",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: Some(printed_v),
                region: (1.0, 2.0, -1.0, 1.0),
                validity: "t > 0",
                notes: vec![
                    "printed v-form is inconsistent with v = u_xx (suspected typo); \
                     certified with v recomputed as the second x-derivative of u"
                        .into(),
                ],
            })
        }
        "E8" => {
            let lambda = need(p, "lambda")?;
            let triplet = case3_triplet(&rint(1), &rq(1, 4), &rint(0), &lambda);
            let x2 = Expr::x().mul(&Expr::x());
            // g = x^2/(sqrt(120) sqrt(t)) + 5 lambda t/11; u = g^2
            let g = x2
                .mul(&Expr::t().pow(&rq(-1, 2))?)
                .mul(&Expr::int(120).pow(&rq(-1, 2))?)
                .add(&Expr::t().scale(&(rq(5, 11) * &lambda)));
            let u = g.mul(&g);
            let v = x2
                .mul(&Expr::t().pow(&rint(-1))?)
                .scale(&rq(1, 10))
                .add(
                    &Expr::t()
                        .pow(&rq(1, 2))?
                        .mul(&Expr::int(30).pow(&rq(-1, 2))?)
                        .scale(&(rq(10, 11) * &lambda)),
                );
            Ok(CatalogEntry {
                id: "E8",
                title: "squared parabola on (u, 0, lambda sqrt(u))",
                triplet,
                params: p.clone(),
                u_form: u,
                v_form: v,
                printed_v: None,
                region: (1.0, 2.0, 0.5, 2.0),
                validity: "t > 0 and sqrt(u) branch positive",
                notes: vec![],
            })
        }
        other => Err(ExactError::UnknownEntry(other.to_string())),
    }
}

/// Admissible parameter samples for each entry (>= 3 per entry), chosen so
/// the constraint equations hold exactly over the rationals.
pub fn admissible_samples(id: &str) -> Result<Vec<ParamSample>, ExactError> {
    let s = |pairs: &[(&str, Rat)]| ParamSample::of(pairs);
    Ok(match id {
        // lambda derived from the quartic (51**) given rational alpha
        "E1" => vec![
            // mu=1, a1=1, a2=1, d=1, alpha=1: 0 - 1 - 1 - lambda = 0
            s(&[
                ("mu", rint(1)),
                ("d", rint(1)),
                ("alpha1", rint(1)),
                ("alpha2", rint(1)),
                ("alpha", rint(1)),
                ("lambda", rint(-2)),
            ]),
            // mu=2, a1=1, a2=1, d=1, alpha=1: 3 - 4 - 8 - 16 lambda = 0
            s(&[
                ("mu", rint(2)),
                ("d", rint(1)),
                ("alpha1", rint(1)),
                ("alpha2", rint(1)),
                ("alpha", rint(1)),
                ("lambda", rq(-9, 16)),
            ]),
            // mu=1/2: (1/2)(0)... coefficients: (1-mu)(1-2mu) = 0 at mu=1/2:
            // -d a1^2 (1/4) alpha - a2 (1/8) alpha^(1/2)... use alpha = 4,
            // z = alpha^mu = 2: -(1/4)(4)... solve lambda directly below
            s(&[
                ("mu", rq(1, 2)),
                ("d", rint(1)),
                ("alpha1", rint(1)),
                ("alpha2", rint(2)),
                ("alpha", rint(4)),
                // 0 - d mu^2 z^2 - a2 mu^3 z - lambda mu^4 = 0 with z = 2:
                // -(1/4)(4) - 2(1/8)(2) - lambda/16 = 0 => lambda = -24
                ("lambda", rint(-24)),
            ]),
        ],
        "E2" => vec![
            s(&[("C", rint(1)), ("d", rint(1)), ("lambda", rint(0))]),
            s(&[("C", rint(10)), ("d", rint(1)), ("lambda", rint(0))]),
            s(&[("C", rint(3)), ("d", rq(1, 2)), ("lambda", rint(2))]),
            s(&[("C", rint(2)), ("d", rint(-1)), ("lambda", rint(-1))]),
        ],
        "E3" => vec![
            s(&[("mu", rint(4)), ("d", rint(1)), ("t0", rint(0))]),
            s(&[("mu", rint(4)), ("d", rint(-1)), ("t0", rint(0))]),
            s(&[("mu", rint(3)), ("d", rint(1)), ("t0", rint(0))]),
        ],
        "E3b" => vec![
            s(&[("mu", rint(4)), ("d", rint(1)), ("lambda", rint(1)), ("t0", rint(0))]),
            s(&[("mu", rint(4)), ("d", rint(1)), ("lambda", rint(-1)), ("t0", rint(0))]),
            s(&[("mu", rint(3)), ("d", rint(2)), ("lambda", rint(1)), ("t0", rint(0))]),
        ],
        // lambda = (4(4-mu^2)(1-mu) a^{2mu} - 2 d mu^2 (mu+2) a^mu)/mu^4
        "E4" => vec![
            s(&[("mu", rint(1)), ("d", rint(1)), ("alpha", rint(1)), ("lambda", rint(-6))]),
            s(&[("mu", rint(2)), ("d", rint(1)), ("alpha", rint(1)), ("lambda", rint(-2))]),
            s(&[
                ("mu", rint(3)),
                ("d", rint(1)),
                ("alpha", rint(1)),
                ("lambda", rq(-50, 81)),
            ]),
            s(&[("mu", rint(1)), ("d", rint(2)), ("alpha", rint(3)), ("lambda", rint(-36))]),
        ],
        // theta^4 + d theta^2 - lambda/2 = 0
        "E5" => vec![
            s(&[("d", rint(0)), ("lambda", rint(2)), ("theta", rint(1))]),
            s(&[("d", rint(1)), ("lambda", rint(4)), ("theta", rint(1)), ("theta0", rq(1, 3))]),
            s(&[
                ("d", rint(0)),
                ("lambda", rint(32)),
                ("theta", rint(2)),
                ("t_shift", rint(1)),
            ]),
            s(&[("d", rint(3)), ("lambda", rint(8)), ("theta", rint(1)), ("t_shift", rint(-1))]),
        ],
        // theta^4 - d theta^2 - lambda/2 = 0
        "E6" => vec![
            s(&[("d", rint(0)), ("lambda", rint(2)), ("theta", rint(1)), ("C1", rint(1))]),
            s(&[("d", rint(3)), ("lambda", rint(-4)), ("theta", rint(1)), ("C1", rq(1, 2))]),
            s(&[
                ("d", rint(0)),
                ("lambda", rint(32)),
                ("theta", rint(2)),
                ("C1", rint(1)),
                ("t_shift", rint(-1)),
            ]),
        ],
        "E7" => vec![
            s(&[("lambda", rint(0))]),
            s(&[("lambda", rint(1))]),
            s(&[("lambda", rint(-2))]),
            s(&[("lambda", rq(3, 7))]),
        ],
        "E7b" => vec![
            s(&[
                ("lambda", rint(1)),
                ("C0", rint(1)),
                ("C1", rint(1)),
                ("C2", rint(1)),
                ("C3", rint(1)),
            ]),
            s(&[
                ("lambda", rint(0)),
                ("C0", rint(2)),
                ("C1", rint(0)),
                ("C2", rint(1)),
                ("C3", rint(3)),
            ]),
            s(&[
                ("lambda", rq(1, 2)),
                ("C0", rint(0)),
                ("C1", rint(1)),
                ("C2", rint(0)),
                ("C3", rq(1, 3)),
            ]),
            // C0 = C1 = C2 = C3 = 0 must reduce to E7
            s(&[
                ("lambda", rint(1)),
                ("C0", rint(0)),
                ("C1", rint(0)),
                ("C2", rint(0)),
                ("C3", rint(0)),
            ]),
        ],
        "E8" => vec![
            s(&[("lambda", rint(1))]),
            s(&[("lambda", rint(2))]),
            s(&[("lambda", rq(1, 2))]),
        ],
        other => return Err(ExactError::UnknownEntry(other.to_string())),
    })
}

// ---------------------------------------------------------------------------
// Parameter-constraint solving (quartics / quadratics in a^mu or theta^2)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RootReport {
    /// the polynomial, constant term first
    pub poly: Vec<f64>,
    /// admissible solution-parameter values (alpha or theta)
    pub admissible: Vec<f64>,
    /// back-substitution residuals for the admissible roots
    pub residuals: Vec<f64>,
    /// the full complex root set (re, im)
    pub complex_roots: Vec<(f64, f64)>,
    /// what the polynomial variable stands for
    pub variable: &'static str,
}

/// Solves the entry's parameter constraint. E1: quartic in z = alpha^mu;
/// E4: quadratic in z = alpha^mu; E5/E6: quadratic in w = theta^2.
pub fn solve_parameters(id: &str, params: &ParamSample) -> Result<RootReport, ExactError> {
    let f = |name: &str| need(params, name).map(|r| to_f64(&r));
    let (poly, variable, admissible_map): (Vec<f64>, &'static str, Box<dyn Fn(f64) -> Option<f64>>) =
        match id {
            "E1" => {
                let mu = f("mu")?;
                let (d, lambda) = (f("d")?, f("lambda")?);
                let (a1, a2) = (f("alpha1")?, f("alpha2")?);
                // a1^4 (1-mu)(1-2mu) z^4 - d a1^2 mu^2 z^2 - a2 mu^3 z - lambda mu^4
                let poly = vec![
                    -lambda * mu.powi(4),
                    -a2 * mu.powi(3),
                    -d * a1 * a1 * mu * mu,
                    0.0,
                    a1.powi(4) * (1.0 - mu) * (1.0 - 2.0 * mu),
                ];
                let inv_mu = 1.0 / mu;
                (
                    poly,
                    "z = alpha^mu",
                    Box::new(move |z: f64| (z > 0.0).then(|| z.powf(inv_mu))),
                )
            }
            "E4" => {
                let mu = f("mu")?;
                let (d, lambda) = (f("d")?, f("lambda")?);
                // 4(4-mu^2)(1-mu) z^2 - 2 d mu^2 (mu+2) z - lambda mu^4
                let poly = vec![
                    -lambda * mu.powi(4),
                    -2.0 * d * mu * mu * (mu + 2.0),
                    4.0 * (4.0 - mu * mu) * (1.0 - mu),
                ];
                let inv_mu = 1.0 / mu;
                (
                    poly,
                    "z = alpha^mu",
                    Box::new(move |z: f64| (z > 0.0).then(|| z.powf(inv_mu))),
                )
            }
            "E5" => {
                let (d, lambda) = (f("d")?, f("lambda")?);
                // w^2 + d w - lambda/2 with w = theta^2
                (
                    vec![-lambda / 2.0, d, 1.0],
                    "w = theta^2",
                    Box::new(|w: f64| (w > 0.0).then(|| w.sqrt())),
                )
            }
            "E6" => {
                let (d, lambda) = (f("d")?, f("lambda")?);
                (
                    vec![-lambda / 2.0, -d, 1.0],
                    "w = theta^2",
                    Box::new(|w: f64| (w > 0.0).then(|| w.sqrt())),
                )
            }
            other => return Err(ExactError::UnknownEntry(other.to_string())),
        };
    let zs = real_roots(&poly);
    let complex_roots: Vec<(f64, f64)> = crate::numerics::polynomial_roots(&poly)
        .into_iter()
        .map(|z| (z.re, z.im))
        .collect();
    let mut admissible = Vec::new();
    let mut residuals = Vec::new();
    for z in zs {
        if let Some(a) = admissible_map(z) {
            admissible.push(a);
            residuals.push(residual_at(&poly, z));
        }
    }
    if admissible.is_empty() {
        return Err(ExactError::NoAdmissibleRoot(complex_roots));
    }
    Ok(RootReport {
        poly,
        admissible,
        residuals,
        complex_roots,
        variable,
    })
}

// ---------------------------------------------------------------------------
// The transcendental profile phi(t) of E3/E3b
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Case2Profile {
    pub mu: f64,
    pub d: f64,
    pub lambda: f64,
    pub t0: f64,
}

impl Case2Profile {
    pub fn from_params(p: &ParamSample) -> Result<Self, ExactError> {
        Ok(Case2Profile {
            mu: to_f64(&need(p, "mu")?),
            d: to_f64(&need(p, "d")?),
            lambda: p.get("lambda").map(to_f64).unwrap_or(0.0),
            t0: p.get("t0").map(to_f64).unwrap_or(0.0),
        })
    }

    fn ab(&self) -> (f64, f64) {
        let mu = self.mu;
        let alpha = self.d * mu * mu / (2.0 * (1.0 - mu) * (mu - 2.0));
        let beta = self.lambda * mu.powi(4) / (4.0 * (1.0 - mu) * (mu * mu - 4.0));
        (alpha, beta)
    }

    /// Closed-form integral of 1/(z^2 + alpha z + beta) from 0 to s, by the
    /// discriminant cases; errors when [0, s] crosses a pole.
    fn rational_integral(&self, s: f64) -> Result<f64, ExactError> {
        let (alpha, beta) = self.ab();
        let disc = alpha * alpha - 4.0 * beta;
        if disc > 1e-12 {
            let sq = disc.sqrt();
            let r1 = (-alpha + sq) / 2.0;
            let r2 = (-alpha - sq) / 2.0;
            // pole-free check on [min(0,s), max(0,s)]
            let (lo, hi) = if s >= 0.0 { (0.0, s) } else { (s, 0.0) };
            for r in [r1, r2] {
                if r > lo && r < hi {
                    return Err(ExactError::PoleCrossed);
                }
            }
            Ok(((s - r1) / (s - r2) * (-r2) / (-r1)).abs().ln() / (r1 - r2))
        } else if disc < -1e-12 {
            let sq = (-disc).sqrt();
            Ok(2.0 / sq * (((2.0 * s + alpha) / sq).atan() - (alpha / sq).atan()))
        } else {
            let pole = -alpha / 2.0;
            let (lo, hi) = if s >= 0.0 { (0.0, s) } else { (s, 0.0) };
            if pole > lo && pole < hi {
                return Err(ExactError::PoleCrossed);
            }
            Ok(1.0 / (pole - s) - 1.0 / pole)
        }
    }

    /// The implicit relation H(phi) whose level sets define phi(t):
    /// lambda = 0: ln|1 + A phi^-mu| - A phi^-mu;
    /// lambda != 0: ln(phi^2mu / |phi^2mu + alpha phi^mu + beta|) - alpha I(phi^mu).
    pub fn relation(&self, phi: f64) -> Result<f64, ExactError> {
        if phi <= 0.0 {
            return Err(ExactError::Restriction("phi > 0".into()));
        }
        let mu = self.mu;
        if self.lambda == 0.0 {
            let a = self.d / (2.0 * (1.0 - 1.0 / mu) * (2.0 / mu - 1.0));
            let s = a * phi.powf(-mu);
            Ok((1.0 + s).abs().ln() - s)
        } else {
            let (alpha, beta) = self.ab();
            let z = phi.powf(mu);
            let p = z * z + alpha * z + beta;
            let i = self.rational_integral(z)?;
            Ok((z * z / p.abs()).ln() - alpha * i)
        }
    }

    /// Right-hand side of the time map: H(phi) = rate * (t - t0).
    pub fn rate(&self) -> f64 {
        let mu = self.mu;
        if self.lambda == 0.0 {
            self.d * self.d * (2.0 / mu + 1.0) / ((1.0 - 1.0 / mu) * (2.0 / mu - 1.0))
        } else {
            2.0 * self.lambda * mu
        }
    }

    /// d phi / dt along the branch, from the exact derivative of the relation.
    pub fn phi_prime(&self, phi: f64) -> f64 {
        let mu = self.mu;
        if self.lambda == 0.0 {
            let a = self.d / (2.0 * (1.0 - 1.0 / mu) * (2.0 / mu - 1.0));
            let hprime =
                mu * a * a * phi.powf(-2.0 * mu - 1.0) / (1.0 + a * phi.powf(-mu));
            self.rate() / hprime
        } else {
            let (alpha, beta) = self.ab();
            let z = phi.powf(mu);
            let p = z * z + alpha * z + beta;
            let hprime = 2.0 * mu / phi - mu * phi.powf(mu - 1.0) * (2.0 * z + 2.0 * alpha) / p;
            self.rate() / hprime
        }
    }

    /// Positive equilibria of the reduced first-order flow (branch ends).
    pub fn equilibria(&self) -> Vec<f64> {
        let (alpha, beta) = self.ab();
        real_roots(&[beta, alpha, 1.0])
            .into_iter()
            .filter(|&z| z > 0.0)
            .map(|z| z.powf(1.0 / self.mu))
            .collect()
    }

    /// Solves H(phi) = rate (t - t0) for phi on the monotone branch that
    /// contains `anchor`.
    pub fn phi_at(&self, t: f64, anchor: f64) -> Result<f64, ExactError> {
        let target = self.rate() * (t - self.t0);
        let eqs = self.equilibria();
        let mut lo = 1e-12;
        let mut hi = f64::INFINITY;
        for e in &eqs {
            if *e < anchor && *e > lo {
                lo = *e;
            }
            if *e > anchor && *e < hi {
                hi = *e;
            }
        }
        // finite search bracket inside (lo, hi)
        let mut a = if lo == 1e-12 { anchor * 1e-6 } else { lo + (anchor - lo) * 1e-9 };
        let mut b = if hi.is_finite() {
            hi - (hi - anchor) * 1e-9
        } else {
            // expand upward until the relation passes the target or saturates
            let mut b = anchor.max(1e-6);
            let mut last = self.relation(b)?;
            let fa = self.relation(a)?;
            let dir_up = last > fa;
            for _ in 0..200 {
                b *= 2.0;
                let v = self.relation(b)?;
                if (dir_up && v >= target) || (!dir_up && v <= target) {
                    break;
                }
                if (v - last).abs() < 1e-15 * v.abs().max(1.0) {
                    break; // saturated
                }
                last = v;
            }
            b
        };
        let mut fa = self.relation(a)?;
        let mut fb = self.relation(b)?;
        if (fa - target) * (fb - target) > 0.0 {
            // Near a finite equilibrium the relation diverges only
            // logarithmically, so late times sit closer to the equilibrium
            // than float resolution: the equilibrium is the solution value.
            let increasing = fb > fa;
            let beyond_b = (increasing && target > fb) || (!increasing && target < fb);
            let beyond_a = (increasing && target < fa) || (!increasing && target > fa);
            if beyond_b && hi.is_finite() {
                return Ok(hi);
            }
            if beyond_a && lo > 1e-12 {
                return Ok(lo);
            }
            return Err(ExactError::NoRootInBracket);
        }
        for _ in 0..300 {
            let m = 0.5 * (a + b);
            let fm = self.relation(m)?;
            if (fa - target) * (fm - target) <= 0.0 {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
            if (b - a).abs() < 1e-15 * b.abs().max(1e-12) {
                break;
            }
        }
        let _ = fb;
        let mut phi = 0.5 * (a + b);
        // Newton polish on H(phi) - target
        for _ in 0..6 {
            let h = self.relation(phi)? - target;
            let hp = self.rate() / self.phi_prime(phi);
            let step = h / hp;
            let next = phi - step;
            if next > a && next < b {
                phi = next;
            } else {
                break;
            }
        }
        Ok(phi)
    }
}

// ---------------------------------------------------------------------------
// Evaluation and residual certification
// ---------------------------------------------------------------------------

fn exact_bindings(entry: &CatalogEntry, t: f64, x: f64) -> Bindings {
    let mut b = Bindings::new();
    b.insert(Slot::t(), t);
    b.insert(Slot::x(), x);
    for (name, val) in &entry.params.0 {
        b.insert(Slot::Param(name.clone()), to_f64(val));
    }
    b
}

fn check_domain(entry: &CatalogEntry, t: f64, x: f64) -> Result<(), ExactError> {
    let bad = |why: &str| Err(ExactError::DomainViolation(t, x, why.to_string()));
    match entry.id {
        "E1" => {
            let a1 = to_f64(entry.params.get("alpha1").unwrap());
            let a2 = to_f64(entry.params.get("alpha2").unwrap());
            if a1 * x - a2 * t <= 0.0 {
                return bad("alpha1 x - alpha2 t must be positive");
            }
        }
        "E2" | "E3" | "E3b" | "E4" => {
            if x <= 0.0 {
                return bad("x must be positive");
            }
        }
        "E7" | "E7b" | "E8" => {
            if t <= 0.0 {
                return bad("t must be positive");
            }
        }
        "E5" | "E6" => {
            let shift = entry
                .params
                .get("t_shift")
                .map(to_f64)
                .unwrap_or(0.0);
            if (t - shift).abs() < 1e-12 {
                return bad("t coincides with the singular time");
            }
        }
        _ => {}
    }
    Ok(())
}

/// Evaluates (u, v) at a point inside the validity domain. For E3/E3b the
/// profile phi is solved from the transcendental relation (anchor: the value
/// of phi at the anchor point of the branch).
pub fn evaluate_solution(
    entry: &CatalogEntry,
    t: f64,
    x: f64,
    phi_anchor: Option<f64>,
) -> Result<(f64, f64), ExactError> {
    check_domain(entry, t, x)?;
    let mut b = exact_bindings(entry, t, x);
    if matches!(entry.id, "E3" | "E3b") {
        let prof = Case2Profile::from_params(&entry.params)?;
        let anchor = phi_anchor.unwrap_or(0.5);
        let phi = prof.phi_at(t, anchor)?;
        b.insert(Slot::Param("phi".into()), phi);
    }
    let u = crate::symexpr::eval_numeric(&entry.u_form, &b)?;
    let v = crate::symexpr::eval_numeric(&entry.v_form, &b)?;
    Ok((u, v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckMethod {
    Symbolic,
    NumericGrid { n: usize },
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub entry: &'static str,
    pub method: CheckMethod,
    pub max_s1: f64,
    pub max_s2: f64,
    pub verdict: bool,
    pub notes: Vec<String>,
}

/// The S1 residual with the solution substituted, as an expression in (t, x)
/// (and phi/phiprime for E3).
fn s1_residual_expr(entry: &CatalogEntry) -> Result<Expr, ExactError> {
    let sys = build_system(&entry.triplet, SystemForm::Pair)?;
    // derivatives of the forms for every jet in the system
    let dt_u = if matches!(entry.id, "E3" | "E3b") {
        // u = phi x^{2/mu}: u_t = phiprime x^{2/mu}
        subst_symbols(&entry.u_form, &|s| match s {
            Slot::Param(p) if p == "phi" => Some(Expr::param("phiprime")),
            _ => None,
        })?
    } else {
        total_derivative(&entry.u_form, Indep::T)?
    };
    let dx = |e: &Expr| total_derivative(e, Indep::X);
    let u_x = dx(&entry.u_form)?;
    let u_xx = dx(&u_x)?;
    let v_x = dx(&entry.v_form)?;
    let v_xx = dx(&v_x)?;
    let table: Vec<(Jet, Expr)> = vec![
        (Jet::new(Dep::U, 0, 0), entry.u_form.clone()),
        (Jet::new(Dep::U, 1, 0), dt_u),
        (Jet::new(Dep::U, 0, 1), u_x),
        (Jet::new(Dep::U, 0, 2), u_xx),
        (Jet::new(Dep::V, 0, 0), entry.v_form.clone()),
        (Jet::new(Dep::V, 0, 1), v_x),
        (Jet::new(Dep::V, 0, 2), v_xx),
    ];
    Ok(subst_symbols(&sys.equations[0], &|s| {
        let Slot::Jet(j) = s else { return None };
        table.iter().find(|(jet, _)| jet == j).map(|(_, e)| e.clone())
    })?)
}

/// Certifies the entry: symbolic zero where the substituted residual is
/// atom-free (or cancels outright), otherwise the max relative residual over
/// a 32x32 probe grid inside the validity region. S2 checks v = u_xx.
pub fn residual_check(entry: &CatalogEntry, tol: f64) -> Result<ResidualReport, ExactError> {
    let s1 = s1_residual_expr(entry)?;
    let s2 = total_derivative(&total_derivative(&entry.u_form, Indep::X)?, Indep::X)?
        .sub(&entry.v_form);
    let mut notes = entry.notes.clone();
    if s1.is_zero() && s2.is_zero() {
        return Ok(ResidualReport {
            entry: entry.id,
            method: CheckMethod::Symbolic,
            max_s1: 0.0,
            max_s2: 0.0,
            verdict: true,
            notes,
        });
    }
    // numeric probe on a 32x32 grid
    let n = 32;
    let (t0, t1, x0, x1) = entry.region;
    let prof = if matches!(entry.id, "E3" | "E3b") {
        Some(Case2Profile::from_params(&entry.params)?)
    } else {
        None
    };
    let mut max_s1 = 0.0f64;
    let mut max_s2 = 0.0f64;
    for i in 0..n {
        let t = t0 + (t1 - t0) * (i as f64 + 0.5) / n as f64;
        let mut phi_pair: Option<(f64, f64)> = None;
        if let Some(p) = &prof {
            let phi = p.phi_at(t, 0.5)?;
            phi_pair = Some((phi, p.phi_prime(phi)));
        }
        for j in 0..n {
            let x = x0 + (x1 - x0) * (j as f64 + 0.5) / n as f64;
            check_domain(entry, t, x)?;
            let mut b = exact_bindings(entry, t, x);
            if let Some((phi, phip)) = phi_pair {
                b.insert(Slot::Param("phi".into()), phi);
                b.insert(Slot::Param("phiprime".into()), phip);
            }
            let (r1, sc1) = eval_with_scale(&s1, &b)?;
            let (r2, sc2) = eval_with_scale(&s2, &b)?;
            max_s1 = max_s1.max(r1.abs() / sc1.max(1.0));
            max_s2 = max_s2.max(r2.abs() / sc2.max(1.0));
        }
    }
    let verdict = max_s1 <= tol && max_s2 <= tol;
    if !verdict {
        notes.push(format!(
            "FAILED: max |S1| = {max_s1:.3e}, max |S2| = {max_s2:.3e} above tolerance {tol:.1e}"
        ));
    }
    Ok(ResidualReport {
        entry: entry.id,
        method: CheckMethod::NumericGrid { n },
        max_s1,
        max_s2,
        verdict,
        notes,
    })
}

/// A numeric (t, x) -> (u, v) closure for the PDE oracle.
pub fn reference_fn(
    entry: &CatalogEntry,
) -> impl Fn(f64, f64) -> Option<(f64, f64)> + '_ {
    move |t, x| evaluate_solution(entry, t, x, None).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry_with(id: &str, k: usize) -> CatalogEntry {
        let samples = admissible_samples(id).unwrap();
        build_entry(id, &samples[k]).unwrap()
    }

    #[test]
    fn e2_evaluates_to_spec_values() {
        // C=1, lambda=0, x=2: u = 0.5, v = 0.25
        let e = entry_with("E2", 0);
        let (u, v) = evaluate_solution(&e, 0.7, 2.0, None).unwrap();
        assert_eq!(u, 0.5);
        assert_eq!(v, 0.25);
        // boundary x = 0 is a domain error
        assert!(matches!(
            evaluate_solution(&e, 0.7, 0.0, None),
            Err(ExactError::DomainViolation(..))
        ));
    }

    #[test]
    fn e7_evaluates_to_spec_values() {
        // lambda=0, t=1, x=2: u = 16/120 = 2/15, v = 4/10 = 2/5
        let e = entry_with("E7", 0);
        let (u, v) = evaluate_solution(&e, 1.0, 2.0, None).unwrap();
        assert!((u - 2.0 / 15.0).abs() < 1e-15);
        assert!((v - 2.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn symbolic_zero_entries() {
        for (id, k) in [("E2", 0), ("E2", 2), ("E4", 0), ("E4", 2), ("E7", 1), ("E7b", 0)] {
            let e = entry_with(id, k);
            let r = residual_check(&e, 1e-9).unwrap();
            assert_eq!(r.method, CheckMethod::Symbolic, "{id} sample {k}: {:?}", r);
            assert!(r.verdict);
        }
    }

    #[test]
    fn numeric_entries_certify() {
        for (id, k) in [("E1", 0), ("E1", 1), ("E5", 0), ("E6", 0), ("E8", 0)] {
            let e = entry_with(id, k);
            let r = residual_check(&e, 1e-9).unwrap();
            assert!(r.verdict, "{id} sample {k}: {:?}", r);
        }
    }

    #[test]
    fn e7b_reduces_to_e7_when_cs_vanish() {
        let e7b = entry_with("E7b", 3); // all C_i = 0
        let e7 = build_entry(
            "E7",
            &ParamSample::of(&[("lambda", rint(1))]),
        )
        .unwrap();
        assert_eq!(e7b.u_form, e7.u_form);
        assert_eq!(e7b.v_form, e7.v_form);
        // and the printed v really is inconsistent with u_xx for general C
        let e = entry_with("E7b", 0);
        let uxx = total_derivative(
            &total_derivative(&e.u_form, Indep::X).unwrap(),
            Indep::X,
        )
        .unwrap();
        assert!(!uxx.sub(e.printed_v.as_ref().unwrap()).is_zero());
    }

    #[test]
    fn root_solvers_match_spec_examples() {
        // E4 at (mu, d, lambda) = (1, 1, -6): quartic degenerates, alpha = 1
        let r = solve_parameters(
            "E4",
            &ParamSample::of(&[("mu", rint(1)), ("d", rint(1)), ("lambda", rint(-6))]),
        )
        .unwrap();
        assert_eq!(r.admissible.len(), 1);
        assert!((r.admissible[0] - 1.0).abs() < 1e-12);
        assert!(r.residuals[0] <= 1e-12);
        // E5 at (d, lambda) = (0, 2): theta^4 = 1 -> theta = 1
        let r = solve_parameters(
            "E5",
            &ParamSample::of(&[("d", rint(0)), ("lambda", rint(2))]),
        )
        .unwrap();
        assert_eq!(r.admissible, vec![1.0]);
        // E6 same
        let r = solve_parameters(
            "E6",
            &ParamSample::of(&[("d", rint(0)), ("lambda", rint(2))]),
        )
        .unwrap();
        assert_eq!(r.admissible, vec![1.0]);
        // no admissible root reports the complex set
        let r = solve_parameters(
            "E5",
            &ParamSample::of(&[("d", rint(0)), ("lambda", rint(-2))]),
        );
        assert!(matches!(r, Err(ExactError::NoAdmissibleRoot(_))));
    }

    #[test]
    fn e1_quartic_recovers_seeded_alpha() {
        let samples = admissible_samples("E1").unwrap();
        for s in &samples {
            let r = solve_parameters("E1", s).unwrap();
            let want = to_f64(s.get("alpha").unwrap());
            assert!(
                r.admissible.iter().any(|a| (a - want).abs() < 1e-9),
                "seeded alpha {want} not recovered: {:?}",
                r.admissible
            );
        }
    }

    #[test]
    fn phi_relation_consistent_with_ode() {
        // d phi/dt from the implicit relation equals the (3-9) right-hand side
        for (mu, d, lambda) in [(4.0, 1.0, 0.0), (4.0, 1.0, 1.0), (4.0, -1.0, 0.0), (3.0, 2.0, 1.0)]
        {
            let prof = Case2Profile {
                mu,
                d,
                lambda,
                t0: 0.0,
            };
            let rhs = |phi: f64| -> f64 {
                let c1 = (4.0 / mu) * (1.0 / mu - 1.0) * (4.0 / (mu * mu) - 1.0);
                let c2 = d * (2.0 / mu) * (2.0 / mu + 1.0);
                -c1 * phi.powf(2.0 * mu + 1.0) + c2 * phi.powf(mu + 1.0) + lambda * phi
            };
            for phi in [0.3, 0.5, 0.9] {
                let got = prof.phi_prime(phi);
                let want = rhs(phi);
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "mu={mu} d={d} lambda={lambda} phi={phi}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn phi_solver_tracks_known_exponential_case() {
        // mu = -2 collapses (3-9) to phi' = lambda phi; the E3b relation is
        // restricted away from mu = -2, so instead check the solver against a
        // direct integration for mu = 4, lambda = 0, d = -1 (monotone decay;
        // t0 is the blow-up time, so work at t > t0)
        let prof = Case2Profile {
            mu: 4.0,
            d: -1.0,
            lambda: 0.0,
            t0: -1.0,
        };
        let phi0 = prof.phi_at(0.0, 0.5).unwrap();
        // step the ODE crudely and compare at t = 0.2
        let mut phi = phi0;
        let n = 200_000;
        let h = 0.2 / n as f64;
        for _ in 0..n {
            phi += h * prof.phi_prime(phi);
        }
        let implicit = prof.phi_at(0.2, phi).unwrap();
        assert!(
            (phi - implicit).abs() < 1e-6 * phi.abs(),
            "{phi} vs {implicit}"
        );
        // relation residual at the solved value is tiny
        let target = prof.rate() * (0.2 - prof.t0);
        assert!((prof.relation(implicit).unwrap() - target).abs() < 1e-12);
    }

    #[test]
    fn shifted_e5_preserves_residual_zero() {
        // t -> t - t0 and t -> t + t0 keep the residual certified
        for k in [2usize, 3] {
            let e = entry_with("E5", k);
            let r = residual_check(&e, 1e-9).unwrap();
            assert!(r.verdict, "shifted E5 sample {k}: {:?}", r);
        }
    }
}
