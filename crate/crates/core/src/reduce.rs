//! The five symmetry reductions of the power-law system
//! u_t = -[u^gamma v_x]_x + d[u^mu u_x]_x + lambda u^(2mu-gamma+1), v = u_xx:
//! ansatz construction, reduced-ODE emission, and symbolic verification
//! against the printed fourth-order forms.

use crate::model::{build_system, case3_triplet, SystemForm};
use crate::rat::{rint, Rat};
use crate::symexpr::{
    diff, solve_linear_atom, subst_opaque, subst_symbols, total_derivative, Dep, Expr, ExprError,
    Factor, Indep, Jet, Monomial, OpaqueAtom, Slot,
};
use num_traits::{One, Zero};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ReduceError {
    #[error("all-zero operator (alpha1 = alpha2 = alpha3 = 0)")]
    ZeroOperator,
    #[error("gamma^2 + mu^2 = 0")]
    ZeroExponents,
    #[error("ansatz/selection mismatch: nonconstant leftover in the fiber: {0}")]
    MixedFiber(String),
    #[error("reduced second equation not solvable for psi")]
    PsiNotSolvable,
    #[error("emitted ODE does not match the printed form; difference: {0}")]
    PrintedMismatch(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Which of the five reductions applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionTag {
    /// alpha3 = 0: plane waves
    TravelingWave,
    /// alpha3 != 0, gamma = 2mu != 0, alpha1 = 0: separable power profile
    PowerSeparable,
    /// alpha3 != 0, gamma = 2mu != 0, alpha1 != 0: exponentially scaled wave
    ScalingExponential,
    /// alpha3 != 0, gamma = mu != 0: wave with logarithmic drift
    LogTimeWave,
    /// alpha3 != 0, gamma != 2mu, gamma != mu: self-similar scaling
    SelfSimilar,
}

impl std::fmt::Display for ReductionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReductionTag::TravelingWave => "traveling-wave",
            ReductionTag::PowerSeparable => "power-separable",
            ReductionTag::ScalingExponential => "scaling-exponential",
            ReductionTag::LogTimeWave => "log-time-wave",
            ReductionTag::SelfSimilar => "self-similar",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ReductionCase {
    pub tag: ReductionTag,
    pub a1: Rat,
    pub a2: Rat,
    pub a3: Rat,
    pub gamma: Rat,
    pub mu: Rat,
}

/// Picks the reduction for the general operator
/// X = a1 P_t + a2 P_x + a3 D3 of the case-3 system.
pub fn select_reduction(
    a1: Rat,
    a2: Rat,
    a3: Rat,
    gamma: Rat,
    mu: Rat,
) -> Result<ReductionCase, ReduceError> {
    if a1.is_zero() && a2.is_zero() && a3.is_zero() {
        return Err(ReduceError::ZeroOperator);
    }
    if gamma.is_zero() && mu.is_zero() {
        return Err(ReduceError::ZeroExponents);
    }
    let two_mu = rint(2) * &mu;
    let tag = if a3.is_zero() {
        ReductionTag::TravelingWave
    } else if gamma == two_mu {
        if a1.is_zero() {
            ReductionTag::PowerSeparable
        } else {
            ReductionTag::ScalingExponential
        }
    } else if gamma == mu {
        ReductionTag::LogTimeWave
    } else {
        ReductionTag::SelfSimilar
    };
    Ok(ReductionCase {
        tag,
        a1,
        a2,
        a3,
        gamma,
        mu,
    })
}

/// The invariant and the solution ansatz, as expressions in (t, x) with
/// opaque profiles phi, psi of the invariant.
#[derive(Clone, Debug)]
pub struct AnsatzMaps {
    /// omega(t, x)
    pub omega: Expr,
    /// u(t, x) in terms of phi(omega)
    pub u_map: Expr,
    /// v(t, x) in terms of psi(omega)
    pub v_map: Expr,
    /// degeneracy remarks (e.g. the profile is linear in x and u_xxx = 0)
    pub notes: Vec<String>,
    /// substitution of the non-invariant variable in terms of (omega, fiber)
    inverse: Vec<(Slot, Expr)>,
}

fn phi_of(arg: Expr) -> Expr {
    Expr::opaque(OpaqueAtom::new("phi", vec![arg], vec![0]))
}

fn psi_of(arg: Expr) -> Expr {
    Expr::opaque(OpaqueAtom::new("psi", vec![arg], vec![0]))
}

fn omega_var() -> Expr {
    Expr::param("omega")
}

/// Builds the ansatz maps for the case. Exact forms:
/// traveling wave: omega = a1 x - a2 t, u = phi, v = psi;
/// power-separable: omega = t, u = phi x^{2/mu}, v = psi x^{2/mu - 2};
/// scaling-exponential: omega = x e^{-(a3 mu/a1) t}, u = phi e^{(2a3/a1) t},
///   v = psi e^{(2a3/a1)(1-mu) t};
/// log-time wave: omega = x + (a2/(2 mu a3)) ln t, u = phi t^{-1/mu},
///   v = psi t^{-1/mu};
/// self-similar: omega = x t^{(mu-gamma)/(2(gamma-2mu))},
///   u = phi t^{1/(gamma-2mu)}, v = psi t^{(1-gamma+mu)/(gamma-2mu)}.
/// Translation parts the printed ansatz absorbs: a time translation removes
/// alpha1 except in the traveling-wave and exponential-scaling cases, and an
/// x-translation removes alpha2 except in the traveling-wave and log-time
/// cases (where it enters the invariant).
pub fn effective_operator(rc: &ReductionCase) -> (Rat, Rat, Vec<String>) {
    let mut notes = Vec::new();
    let mut a1 = rc.a1.clone();
    let mut a2 = rc.a2.clone();
    match rc.tag {
        ReductionTag::TravelingWave => {}
        ReductionTag::ScalingExponential => {
            if !a2.is_zero() {
                notes.push("alpha2 absorbed by an x-translation".into());
                a2 = Rat::zero();
            }
        }
        ReductionTag::PowerSeparable => {
            if !a2.is_zero() {
                notes.push("alpha2 absorbed by an x-translation".into());
                a2 = Rat::zero();
            }
        }
        ReductionTag::LogTimeWave => {
            if !a1.is_zero() {
                notes.push("alpha1 absorbed by a time translation".into());
                a1 = Rat::zero();
            }
        }
        ReductionTag::SelfSimilar => {
            if !a1.is_zero() {
                notes.push("alpha1 absorbed by a time translation".into());
                a1 = Rat::zero();
            }
            if !a2.is_zero() {
                notes.push("alpha2 absorbed by an x-translation".into());
                a2 = Rat::zero();
            }
        }
    }
    (a1, a2, notes)
}

pub fn build_ansatz(rc: &ReductionCase) -> Result<AnsatzMaps, ReduceError> {
    let (t, x) = (Expr::t(), Expr::x());
    let (eff_a1, eff_a2, mut notes) = effective_operator(rc);
    let rc = &ReductionCase {
        a1: eff_a1,
        a2: eff_a2,
        ..rc.clone()
    };
    Ok(match rc.tag {
        ReductionTag::TravelingWave => {
            let omega = x.scale(&rc.a1).sub(&t.scale(&rc.a2));
            AnsatzMaps {
                u_map: phi_of(omega.clone()),
                v_map: psi_of(omega.clone()),
                omega,
                notes,
                // x = (omega + a2 t)/a1 when a1 != 0, else t = -omega/a2
                inverse: if !rc.a1.is_zero() {
                    vec![(
                        Slot::x(),
                        omega_var()
                            .add(&Expr::t().scale(&rc.a2))
                            .scale(&(Rat::one() / rc.a1.clone())),
                    )]
                } else {
                    vec![(
                        Slot::t(),
                        omega_var().scale(&(-Rat::one() / rc.a2.clone())),
                    )]
                },
            }
        }
        ReductionTag::PowerSeparable => {
            let e_u = rint(2) / rc.mu.clone();
            let e_v = &e_u - &rint(2);
            if rc.mu == rint(1) || rc.mu == rint(2) {
                notes.push(format!(
                    "mu = {}: the profile is polynomial of degree <= 2 in x, u_xxx = 0, and \
                     the problem collapses to second-order reaction-diffusion",
                    crate::rat::render_rat(&rc.mu)
                ));
            }
            if !e_u.is_integer() {
                notes.push("fractional x-power: evaluation restricted to x > 0".into());
            }
            let omega = t.clone();
            AnsatzMaps {
                u_map: phi_of(omega.clone()).mul(&x.pow(&e_u)?),
                v_map: psi_of(omega.clone()).mul(&x.pow(&e_v)?),
                omega,
                notes,
                inverse: vec![(Slot::t(), omega_var())],
            }
        }
        ReductionTag::ScalingExponential => {
            let c = &rc.a3 * &rc.mu / &rc.a1;
            let b = rint(2) * &rc.a3 / &rc.a1;
            let omega = x.mul(&Expr::exp(t.scale(&-c.clone())));
            AnsatzMaps {
                u_map: phi_of(omega.clone()).mul(&Expr::exp(t.scale(&b))),
                v_map: psi_of(omega.clone())
                    .mul(&Expr::exp(t.scale(&(&b * &(Rat::one() - rc.mu.clone()))))),
                omega,
                notes,
                inverse: vec![(Slot::x(), omega_var().mul(&Expr::exp(Expr::t().scale(&c))))],
            }
        }
        ReductionTag::LogTimeWave => {
            let c = rc.a2.clone() / (rint(2) * &rc.mu * &rc.a3);
            let e = -(Rat::one() / rc.mu.clone());
            let omega = x.add(&Expr::ln(t.clone()).scale(&c));
            AnsatzMaps {
                u_map: phi_of(omega.clone()).mul(&t.pow(&e)?),
                v_map: psi_of(omega.clone()).mul(&t.pow(&e)?),
                omega,
                notes,
                inverse: vec![(
                    Slot::x(),
                    omega_var().sub(&Expr::ln(Expr::t()).scale(&c)),
                )],
            }
        }
        ReductionTag::SelfSimilar => {
            let den = &rc.gamma - &(rint(2) * &rc.mu);
            let e_omega = (&rc.mu - &rc.gamma) / (rint(2) * &den);
            let e_u = Rat::one() / den.clone();
            let e_v = (Rat::one() - &rc.gamma + rc.mu.clone()) / den.clone();
            let omega = x.mul(&t.pow(&e_omega)?);
            AnsatzMaps {
                u_map: phi_of(omega.clone()).mul(&t.pow(&e_u)?),
                v_map: psi_of(omega.clone()).mul(&t.pow(&e_v)?),
                omega,
                notes,
                inverse: vec![(
                    Slot::x(),
                    omega_var().mul(&Expr::t().pow(&-e_omega.clone())?),
                )],
            }
        }
    })
}

/// The reduced ODE data: the emitted fourth-order (or first-order) equation,
/// the psi-relation, and the match against the printed form.
#[derive(Clone, Debug)]
pub struct ReducedODE {
    /// residual of S1 after the reduction and psi-elimination; = 0 is the ODE
    pub ode: Expr,
    /// psi expressed through phi (from the reduced S2)
    pub psi_relation: Expr,
    /// the printed form it matches
    pub printed: Expr,
    /// emitted = factor × printed
    pub factor: Expr,
    /// dimension of the equivalent first-order system
    pub first_order_dim: usize,
    /// fiber factor stripped from S1 (rendered, for the record)
    pub stripped_fiber: String,
}

/// Derivatives of the maps for every jet appearing in the pair system.
fn jet_table(maps: &AnsatzMaps) -> Result<Vec<(Jet, Expr)>, ReduceError> {
    let mut out = Vec::new();
    let derivs = |base: &Expr, dep: Dep, out: &mut Vec<(Jet, Expr)>| -> Result<(), ReduceError> {
        let dt = total_derivative(base, Indep::T)?;
        let dx = total_derivative(base, Indep::X)?;
        let dxx = total_derivative(&dx, Indep::X)?;
        out.push((Jet::new(dep, 0, 0), base.clone()));
        out.push((Jet::new(dep, 1, 0), dt));
        out.push((Jet::new(dep, 0, 1), dx.clone()));
        out.push((Jet::new(dep, 0, 2), dxx));
        Ok(())
    };
    derivs(&maps.u_map, Dep::U, &mut out)?;
    derivs(&maps.v_map, Dep::V, &mut out)?;
    Ok(out)
}

/// Substitutes the ansatz into an expression on jet space, rewrites the
/// non-invariant variable, and strips the common fiber factor.
fn reduce_equation(maps: &AnsatzMaps, eq: &Expr) -> Result<(String, Expr), ReduceError> {
    let table = jet_table(maps)?;
    let substituted = subst_symbols(eq, &|s| {
        let Slot::Jet(j) = s else { return None };
        table.iter().find(|(jet, _)| jet == j).map(|(_, e)| e.clone())
    })?;
    // rewrite the fiber variable
    let rewritten = subst_symbols(&substituted, &|s| {
        maps.inverse
            .iter()
            .find(|(slot, _)| slot == s)
            .map(|(_, e)| e.clone())
    })?;
    strip_fiber(&rewritten)
}

/// Splits off the (t, x, exp, ln)-factors; exactly one fiber signature must
/// remain across all monomials.
fn strip_fiber(e: &Expr) -> Result<(String, Expr), ReduceError> {
    use std::collections::BTreeMap;
    let is_fiber_factor = |f: &Factor| match f {
        Factor::Indep(_) => true,
        Factor::Elem(_, arg) => {
            // exp(c t) fibers; ln(t) would be a leftover too
            crate::symexpr::split_by_jets(arg, &|_| false).is_ok()
                && !arg
                    .terms
                    .iter()
                    .all(|m| m.factors.is_empty())
                && mentions_indep(arg)
        }
        _ => false,
    };
    let mut groups: BTreeMap<Vec<(Factor, Rat)>, Expr> = BTreeMap::new();
    for m in &e.terms {
        let mut key: Vec<(Factor, Rat)> = Vec::new();
        let mut rest: Vec<(Factor, Rat)> = Vec::new();
        for (f, ex) in &m.factors {
            if is_fiber_factor(f) {
                key.push((f.clone(), ex.clone()));
            } else {
                rest.push((f.clone(), ex.clone()));
            }
        }
        key.sort();
        let piece = Expr {
            terms: vec![Monomial {
                coeff: m.coeff.clone(),
                factors: rest,
            }],
        };
        groups
            .entry(key)
            .and_modify(|acc| *acc = acc.add(&piece))
            .or_insert(piece);
    }
    groups.retain(|_, v| !v.is_zero());
    match groups.len() {
        0 => Ok(("1".into(), Expr::zero())),
        1 => {
            let (key, expr) = groups.into_iter().next().unwrap();
            let fiber = Expr {
                terms: vec![Monomial {
                    coeff: Rat::one(),
                    factors: key,
                }],
            };
            Ok((fiber.to_string(), expr))
        }
        _ => {
            let keys: Vec<String> = groups
                .keys()
                .map(|k| {
                    Expr {
                        terms: vec![Monomial {
                            coeff: Rat::one(),
                            factors: k.clone(),
                        }],
                    }
                    .to_string()
                })
                .collect();
            Err(ReduceError::MixedFiber(keys.join(" vs ")))
        }
    }
}

fn mentions_indep(e: &Expr) -> bool {
    e.terms.iter().any(|m| {
        m.factors.iter().any(|(f, _)| match f {
            Factor::Indep(_) => true,
            Factor::Elem(_, a) => mentions_indep(a),
            Factor::Pow(b) => mentions_indep(b),
            Factor::Opaque(a) => a.args.iter().any(mentions_indep),
            _ => false,
        })
    })
}

/// Substitutes psi^{(k)} -> d^k/domega^k of the solved psi-relation.
fn eliminate_psi(e: &Expr, psi_rhs: &Expr) -> Expr {
    subst_opaque(e, &|a: &OpaqueAtom| {
        if a.name != "psi" {
            return Ok(None);
        }
        let mut cur = psi_rhs.clone();
        for _ in 0..a.d[0] {
            cur = diff(&cur, &Slot::Param("omega".into()));
        }
        Ok(Some(cur))
    })
    .expect("psi substitution is total")
}

/// phi-atom power with the omega argument.
fn phi_pow(e: &Rat, d: u8) -> Expr {
    Expr::opaque(OpaqueAtom::new("phi", vec![omega_var()], vec![d]))
        .pow(e)
        .expect("phi power")
}

fn phi_d(d: u8) -> Expr {
    phi_pow(&Rat::one(), d)
}

/// The printed fourth-order (or first-order) reduced equations.
pub fn printed_ode(rc: &ReductionCase, d: &Rat, lambda: &Rat) -> Result<Expr, ReduceError> {
    let (g, m) = (rc.gamma.clone(), rc.mu.clone());
    let om = omega_var();
    Ok(match rc.tag {
        ReductionTag::TravelingWave => {
            // a1^4 phi^g phi'''' + g a1^4 phi^{g-1} phi' phi'''
            //  - d a1^2 phi^m phi'' - d a1^2 m phi^{m-1} phi'^2
            //  - a2 phi' - lambda phi^{1-g+2m}
            let a1_2 = &rc.a1 * &rc.a1;
            let a1_4 = &a1_2 * &a1_2;
            phi_pow(&g, 0)
                .mul(&phi_d(4))
                .scale(&a1_4)
                .add(&phi_pow(&(&g - &Rat::one()), 0).mul(&phi_d(1)).mul(&phi_d(3)).scale(&(&g * &a1_4)))
                .sub(&phi_pow(&m, 0).mul(&phi_d(2)).scale(&(d * &a1_2)))
                .sub(
                    &phi_pow(&(&m - &Rat::one()), 0)
                        .mul(&phi_d(1).pow(&rint(2))?)
                        .scale(&(d * &a1_2 * &m)),
                )
                .sub(&phi_d(1).scale(&rc.a2))
                .sub(&phi_pow(&(Rat::one() - &g + rint(2) * &m), 0).scale(lambda))
        }
        ReductionTag::PowerSeparable => {
            // phi' = -(4/m)(1/m-1)(4/m^2-1) phi^{2m+1} + d(2/m)(2/m+1) phi^{m+1} + lambda phi
            let c1 = rint(4) / &m * (Rat::one() / &m - Rat::one()) * (rint(4) / (&m * &m) - Rat::one());
            let c2 = d * &(rint(2) / &m) * (rint(2) / &m + Rat::one());
            phi_d(1)
                .add(&phi_pow(&(rint(2) * &m + Rat::one()), 0).scale(&c1))
                .sub(&phi_pow(&(&m + &Rat::one()), 0).scale(&c2))
                .sub(&phi_pow(&Rat::one(), 0).scale(lambda))
        }
        ReductionTag::ScalingExponential => {
            // a1 phi^{2m} phi'''' + 2m a1 phi^{2m-1} phi' phi'''
            //  - d a1 phi^m phi'' - d a1 m phi^{m-1} phi'^2
            //  - a3 m omega phi' - (a1 lambda - 2 a3) phi
            let two_m = rint(2) * &m;
            phi_pow(&two_m, 0)
                .mul(&phi_d(4))
                .scale(&rc.a1)
                .add(
                    &phi_pow(&(&two_m - &Rat::one()), 0)
                        .mul(&phi_d(1))
                        .mul(&phi_d(3))
                        .scale(&(&two_m * &rc.a1)),
                )
                .sub(&phi_pow(&m, 0).mul(&phi_d(2)).scale(&(d * &rc.a1)))
                .sub(
                    &phi_pow(&(&m - &Rat::one()), 0)
                        .mul(&phi_d(1).pow(&rint(2))?)
                        .scale(&(d * &rc.a1 * &m)),
                )
                .sub(&om.mul(&phi_d(1)).scale(&(&rc.a3 * &m)))
                .sub(&phi_d(0).scale(&(&rc.a1 * lambda - rint(2) * &rc.a3)))
        }
        ReductionTag::LogTimeWave => {
            // 2 a3 m phi^m phi'''' + 2 a3 m^2 phi^{m-1} phi' phi'''
            //  - 2 a3 m d phi^m phi'' - 2 d a3 m^2 phi^{m-1} phi'^2
            //  + a2 phi' - 2 a3 m lambda phi^{m+1} - 2 a3 phi
            let c = rint(2) * &rc.a3 * &m;
            phi_pow(&m, 0)
                .mul(&phi_d(4))
                .scale(&c)
                .add(
                    &phi_pow(&(&m - &Rat::one()), 0)
                        .mul(&phi_d(1))
                        .mul(&phi_d(3))
                        .scale(&(&c * &m)),
                )
                .sub(&phi_pow(&m, 0).mul(&phi_d(2)).scale(&(&c * d)))
                .sub(
                    &phi_pow(&(&m - &Rat::one()), 0)
                        .mul(&phi_d(1).pow(&rint(2))?)
                        .scale(&(&c * d * &m)),
                )
                .add(&phi_d(1).scale(&rc.a2))
                .sub(&phi_pow(&(&m + &Rat::one()), 0).scale(&(&c * lambda)))
                .sub(&phi_d(0).scale(&(rint(2) * &rc.a3)))
        }
        ReductionTag::SelfSimilar => {
            // 2(g-2m) phi^g phi'''' + 2(g-2m) g phi^{g-1} phi' phi'''
            //  - 2(g-2m) d phi^m phi'' - 2d(g-2m) m phi^{m-1} phi'^2
            //  + (m-g) omega phi' - 2(g-2m) lambda phi^{1-g+2m} + 2 phi
            let c = rint(2) * (&g - &(rint(2) * &m));
            phi_pow(&g, 0)
                .mul(&phi_d(4))
                .scale(&c)
                .add(
                    &phi_pow(&(&g - &Rat::one()), 0)
                        .mul(&phi_d(1))
                        .mul(&phi_d(3))
                        .scale(&(&c * &g)),
                )
                .sub(&phi_pow(&m, 0).mul(&phi_d(2)).scale(&(&c * d)))
                .sub(
                    &phi_pow(&(&m - &Rat::one()), 0)
                        .mul(&phi_d(1).pow(&rint(2))?)
                        .scale(&(&c * d * &m)),
                )
                .add(&om.mul(&phi_d(1)).scale(&(&m - &g)))
                .sub(&phi_pow(&(Rat::one() - &g + rint(2) * &m), 0).scale(&(&c * lambda)))
                .add(&phi_d(0).scale(&rint(2)))
        }
    })
}

/// Reduces the case-3 system under the ansatz and matches the printed ODE.
pub fn reduced_ode(rc: &ReductionCase, d: &Rat, lambda: &Rat) -> Result<ReducedODE, ReduceError> {
    let maps = build_ansatz(rc)?;
    let sys = build_system(&case3_triplet(&rc.gamma, &rc.mu, d, lambda), SystemForm::Pair)?;
    let (fiber1, r1) = reduce_equation(&maps, &sys.equations[0])?;
    let (_fiber2, r2) = reduce_equation(&maps, &sys.equations[1])?;
    // psi from the reduced second equation
    let psi_atom = OpaqueAtom::new("psi", vec![omega_var()], vec![0]);
    let psi_rhs = solve_linear_atom(&r2, &psi_atom).ok_or(ReduceError::PsiNotSolvable)?;
    let ode = eliminate_psi(&r1, &psi_rhs);
    let printed = printed_ode(rc, d, lambda)?;
    // match up to a single-monomial nonzero factor
    let factor = monomial_ratio(&ode, &printed).ok_or_else(|| {
        ReduceError::PrintedMismatch(format!("emitted: {ode}; printed: {printed}"))
    })?;
    let diff_expr = ode.sub(&printed.mul(&factor));
    if !diff_expr.is_zero() {
        return Err(ReduceError::PrintedMismatch(diff_expr.to_string()));
    }
    let first_order_dim = match rc.tag {
        ReductionTag::PowerSeparable => 1,
        _ => 4,
    };
    Ok(ReducedODE {
        ode,
        psi_relation: psi_rhs,
        printed,
        factor,
        first_order_dim,
        stripped_fiber: fiber1,
    })
}

/// Ratio of the leading monomials, as a single-monomial expression.
fn monomial_ratio(a: &Expr, b: &Expr) -> Option<Expr> {
    let ma = a.terms.first()?;
    let mb = b.terms.first()?;
    let num = Expr {
        terms: vec![ma.clone()],
    };
    let den = Expr {
        terms: vec![mb.clone()],
    };
    num.div(&den).ok()
}

/// Verdict of the reduction audit.
#[derive(Clone, Debug)]
pub struct ReductionVerdict {
    pub pass: bool,
    pub residual: Expr,
    pub factor: Expr,
    pub notes: Vec<String>,
}

/// Substitutes the ansatz into the system, reduces modulo the emitted ODE and
/// the psi-relation, and checks the residual canonicalizes to zero.
pub fn verify_reduction(
    rc: &ReductionCase,
    d: &Rat,
    lambda: &Rat,
) -> Result<ReductionVerdict, ReduceError> {
    let maps = build_ansatz(rc)?;
    let red = reduced_ode(rc, d, lambda)?;
    // the reduction residual is ode - factor*printed, already checked inside
    // reduced_ode; recompute it for the verdict
    let residual = red.ode.sub(&red.printed.mul(&red.factor));
    Ok(ReductionVerdict {
        pass: residual.is_zero(),
        residual,
        factor: red.factor,
        notes: maps.notes,
    })
}

/// The generator applied to the ansatz relations u - u_map, v - v_map must
/// vanish on the ansatz manifold (with phi, psi opaque): the ansatz is
/// invariant under X = a1 P_t + a2 P_x + a3 D3.
pub fn ansatz_invariance(rc: &ReductionCase) -> Result<bool, ReduceError> {
    let maps = build_ansatz(rc)?;
    let (eff_a1, eff_a2, _) = effective_operator(rc);
    let two_a3 = rint(2) * &rc.a3;
    let xi0 = Expr::num(eff_a1).add(
        &Expr::t().scale(&(&two_a3 * &(&rc.gamma - &(rint(2) * &rc.mu)))),
    );
    let xi1 = Expr::num(eff_a2).add(&Expr::x().scale(&(&rc.a3 * &(&rc.gamma - &rc.mu))));
    let eta1 = Expr::u().scale(&two_a3);
    let eta2 = Expr::v().scale(&(&two_a3 * &(Rat::one() - &rc.gamma + rc.mu.clone())));
    // X(u - U(t,x)) on u = U: eta1|_{u=U} - xi0 U_t - xi1 U_x
    let check = |map: &Expr, eta: &Expr, dep: Dep| -> Result<bool, ReduceError> {
        let eta_on = subst_symbols(eta, &|s| match s {
            Slot::Jet(j) if j.dep == dep && j.dt == 0 && j.dx == 0 => Some(map.clone()),
            _ => None,
        })?;
        let lhs = eta_on
            .sub(&xi0.mul(&diff(map, &Slot::t())))
            .sub(&xi1.mul(&diff(map, &Slot::x())));
        Ok(lhs.is_zero())
    };
    Ok(check(&maps.u_map, &eta1, Dep::U)? && check(&maps.v_map, &eta2, Dep::V)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rq;

    #[test]
    fn selection_rules() {
        let rc = select_reduction(rint(1), rint(5), rint(0), rint(3), rint(1)).unwrap();
        assert_eq!(rc.tag, ReductionTag::TravelingWave);
        let rc = select_reduction(rint(0), rint(0), rint(1), rint(2), rint(1)).unwrap();
        assert_eq!(rc.tag, ReductionTag::PowerSeparable);
        let rc = select_reduction(rint(1), rint(0), rint(1), rint(2), rint(1)).unwrap();
        assert_eq!(rc.tag, ReductionTag::ScalingExponential);
        let rc = select_reduction(rint(1), rint(1), rint(2), rint(1), rint(1)).unwrap();
        assert_eq!(rc.tag, ReductionTag::LogTimeWave);
        let rc = select_reduction(rint(1), rint(0), rint(1), rint(3), rint(1)).unwrap();
        assert_eq!(rc.tag, ReductionTag::SelfSimilar);
        assert!(matches!(
            select_reduction(rint(0), rint(0), rint(0), rint(3), rint(1)),
            Err(ReduceError::ZeroOperator)
        ));
    }

    #[test]
    fn ansatz_forms() {
        // traveling wave
        let rc = select_reduction(rint(1), rint(5), rint(0), rint(3), rint(1)).unwrap();
        let m = build_ansatz(&rc).unwrap();
        assert_eq!(m.omega, crate::symexpr::parse("x - 5*t").unwrap());
        // power-separable with mu = 2 is degenerate (u linear in x: v = 0 profile)
        let rc = select_reduction(rint(0), rint(0), rint(1), rint(4), rint(2)).unwrap();
        let m = build_ansatz(&rc).unwrap();
        assert!(!m.notes.is_empty());
        // self-similar with gamma=1, mu=0: omega = x t^{-1/2}, u = phi t, v = psi
        let rc = select_reduction(rint(0), rint(0), rint(1), rint(1), rint(0)).unwrap();
        let m = build_ansatz(&rc).unwrap();
        let expected = Expr::x().mul(&Expr::t().pow(&rq(-1, 2)).unwrap());
        assert_eq!(m.omega, expected);
        assert_eq!(m.u_map, phi_of(expected.clone()).mul(&Expr::t()));
        assert_eq!(m.v_map, psi_of(expected));
    }

    #[test]
    fn ansatz_invariance_all_cases() {
        for (a1, a2, a3, g, m) in [
            (1, 5, 0, 3, 1),
            (0, 0, 1, 2, 1),
            (2, 0, 1, 2, 1),
            (1, 3, 2, 1, 1),
            (1, 0, 1, 3, 1),
        ] {
            let rc =
                select_reduction(rint(a1), rint(a2), rint(a3), rint(g), rint(m)).unwrap();
            assert!(
                ansatz_invariance(&rc).unwrap(),
                "ansatz not invariant for {:?}",
                rc.tag
            );
        }
    }

    #[test]
    fn traveling_wave_matches_printed() {
        let rc = select_reduction(rint(2), rint(5), rint(0), rint(3), rint(1)).unwrap();
        let red = reduced_ode(&rc, &rint(1), &rq(1, 2)).unwrap();
        assert!(!red.factor.is_zero());
        // psi = a1^2 phi''
        assert_eq!(red.psi_relation, phi_d(2).scale(&rint(4)));
    }

    #[test]
    fn power_separable_matches_printed_first_order() {
        let rc = select_reduction(rint(0), rint(0), rint(1), rint(8), rint(4)).unwrap();
        let red = reduced_ode(&rc, &rint(1), &rint(0)).unwrap();
        assert_eq!(red.first_order_dim, 1);
        // (3-9) for mu=4, lambda=0: phi' = -(9/16) phi^9 + (3/4) phi^5
        let expected = phi_d(1)
            .add(&phi_pow(&rint(9), 0).scale(&rq(9, 16)))
            .sub(&phi_pow(&rint(5), 0).scale(&rq(3, 4)));
        let ratio = monomial_ratio(&red.ode, &expected).unwrap();
        assert!(red.ode.sub(&expected.mul(&ratio)).is_zero());
    }

    #[test]
    fn all_five_reductions_verify() {
        for (a1, a2, a3, g, m, d, l) in [
            (1i64, 5i64, 0i64, 3i64, 1i64, 1i64, 2i64),
            (0, 0, 1, 8, 4, 1, 3),
            (2, 0, 1, 2, 1, 1, 1),
            (1, 3, 2, 1, 1, 2, 1),
            (1, 0, 1, 3, 1, 1, 1),
        ] {
            let rc = select_reduction(rint(a1), rint(a2), rint(a3), rint(g), rint(m)).unwrap();
            let v = verify_reduction(&rc, &rint(d), &rint(l)).unwrap();
            assert!(v.pass, "{:?}: residual {}", rc.tag, v.residual);
        }
    }

    #[test]
    fn mixed_fiber_is_detected() {
        // deliberately wrong ansatz: traveling wave maps applied to a system
        // whose reaction exponent does not close
        let rc = ReductionCase {
            tag: ReductionTag::PowerSeparable,
            a1: rint(0),
            a2: rint(0),
            a3: rint(1),
            gamma: rint(3), // gamma != 2 mu: the power-separable ansatz cannot close
            mu: rint(1),
        };
        assert!(matches!(
            reduced_ode(&rc, &rint(1), &rint(1)),
            Err(ReduceError::MixedFiber(_)) | Err(ReduceError::PrintedMismatch(_))
        ));
    }
}

/// Turns the emitted reduced equation into an integrable problem: solves for
/// the highest phi-derivative (linear occurrence; the leading coefficient is
/// a phi-power and vanishes only at phi = 0, where integration terminates)
/// and renames phi-atoms to the state parameters phi0..phi{order-1}.
pub fn to_ode_problem(
    ode: &Expr,
    order: u8,
    y0: Vec<f64>,
    span: (f64, f64),
    rtol: f64,
    atol: f64,
) -> Result<crate::numerics::ode::OdeProblem, ReduceError> {
    use crate::symexpr::Monomial;
    // split off the terms carrying phi^(order) linearly
    let mut lead = Expr::zero();
    let mut rest = Expr::zero();
    for m in &ode.terms {
        let mut hit = false;
        let mut others: Vec<(Factor, crate::rat::Rat)> = Vec::new();
        for (f, ex) in &m.factors {
            match f {
                Factor::Opaque(a) if a.name == "phi" && a.d[0] == order => {
                    if !ex.is_one() || hit {
                        return Err(ReduceError::PsiNotSolvable);
                    }
                    hit = true;
                }
                _ => others.push((f.clone(), ex.clone())),
            }
        }
        let piece = Expr {
            terms: vec![Monomial {
                coeff: m.coeff.clone(),
                factors: if hit { others } else { m.factors.clone() },
            }],
        };
        if hit {
            lead = lead.add(&piece);
        } else {
            rest = rest.add(&piece);
        }
    }
    if lead.is_zero() {
        return Err(ReduceError::PsiNotSolvable);
    }
    let solved = rest.neg().div(&lead)?;
    // rename atoms phi^(k) -> parameter phi{k}
    let renamed = subst_opaque(&solved, &|a: &OpaqueAtom| {
        if a.name == "phi" {
            Ok(Some(Expr::param(format!("phi{}", a.d[0]))))
        } else {
            Ok(None)
        }
    })?;
    Ok(crate::numerics::ode::OdeProblem {
        order: order as usize,
        highest_rhs: renamed,
        y0,
        span,
        rtol,
        atol,
    })
}
