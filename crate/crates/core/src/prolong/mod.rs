//! Second prolongation of vector fields, invariance residuals on the system
//! manifold, and generator verification.

mod determine;

pub use determine::{derive_determining_system, project_to_pair, DetEquation, DeterminingSystem};

use crate::model::{build_system, instantiate, ParamSample, PDESystem, SystemForm, Triplet};
use crate::rat::Rat;
use crate::symexpr::{
    diff, eval_with_scale, subst_symbols, total_derivative, Bindings, Dep, Expr, ExprError, Indep,
    Jet, Slot,
};
use rand::Rng;
use std::collections::BTreeMap;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ProlongError {
    #[error("system equation not solvable for its leading derivative")]
    NotSolvable,
    #[error("manifold substitution did not converge")]
    SubstNonconvergence,
    #[error("probe sampling exhausted the retry budget: {0}")]
    ProbeBudget(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Infinitesimal generator: xi0 ∂_t + xi1 ∂_x + sum_k eta_k ∂_{dep_k}.
/// Coefficients are expressions in (t, x, dependent variables); no jet
/// coordinates of order >= 1 may appear.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub xi0: Expr,
    pub xi1: Expr,
    pub etas: BTreeMap<Dep, Expr>,
}

impl VectorField {
    pub fn new(xi0: Expr, xi1: Expr, etas: &[(Dep, Expr)]) -> Self {
        let vf = VectorField {
            xi0,
            xi1,
            etas: etas.iter().cloned().collect(),
        };
        debug_assert!(vf.coefficients_first_order());
        vf
    }

    /// Pair-form field on (t, x, u, v).
    pub fn pair(xi0: Expr, xi1: Expr, eta_u: Expr, eta_v: Expr) -> Self {
        Self::new(xi0, xi1, &[(Dep::U, eta_u), (Dep::V, eta_v)])
    }

    pub fn eta(&self, dep: Dep) -> Expr {
        self.etas.get(&dep).cloned().unwrap_or_else(Expr::zero)
    }

    fn coefficients_first_order(&self) -> bool {
        let ok = |e: &Expr| {
            crate::symexpr::split_by_jets(e, &|j: &Jet| j.order() >= 1)
                .map(|m| m.keys().all(|k| k.is_empty()))
                .unwrap_or(false)
        };
        ok(&self.xi0) && ok(&self.xi1) && self.etas.values().all(ok)
    }

    /// First-order action on a function of (t, x, dependent variables).
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = self.xi0.mul(&diff(f, &Slot::t()));
        acc = acc.add(&self.xi1.mul(&diff(f, &Slot::x())));
        for (dep, eta) in &self.etas {
            acc = acc.add(&eta.mul(&diff(f, &Slot::Jet(Jet::new(*dep, 0, 0)))));
        }
        acc
    }

    /// Lie bracket [self, other]: coefficients X(Y^i) - Y(X^i).
    pub fn commutator(&self, other: &VectorField) -> VectorField {
        let deps: Vec<Dep> = self.etas.keys().chain(other.etas.keys()).copied().collect();
        let mut etas = BTreeMap::new();
        for dep in deps {
            etas.insert(
                dep,
                self.apply(&other.eta(dep)).sub(&other.apply(&self.eta(dep))),
            );
        }
        VectorField {
            xi0: self.apply(&other.xi0).sub(&other.apply(&self.xi0)),
            xi1: self.apply(&other.xi1).sub(&other.apply(&self.xi1)),
            etas,
        }
    }

    pub fn scale(&self, c: &Rat) -> VectorField {
        VectorField {
            xi0: self.xi0.scale(c),
            xi1: self.xi1.scale(c),
            etas: self.etas.iter().map(|(d, e)| (*d, e.scale(c))).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let deps: Vec<Dep> = self.etas.keys().chain(other.etas.keys()).copied().collect();
        VectorField {
            xi0: self.xi0.add(&other.xi0),
            xi1: self.xi1.add(&other.xi1),
            etas: deps
                .into_iter()
                .map(|d| (d, self.eta(d).add(&other.eta(d))))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.xi0.is_zero() && self.xi1.is_zero() && self.etas.values().all(Expr::is_zero)
    }
}

/// Second prolongation: the base field plus tau coefficients for every first
/// and second derivative of each dependent variable.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    pub base: VectorField,
    pub taus: BTreeMap<(Dep, (u8, u8)), Expr>,
}

/// Computes all tau coefficients by the recursion
/// tau_{J+e_i} = D_i(tau_J) - D_i(xi0)·jet(J+e_t) - D_i(xi1)·jet(J+e_x).
pub fn prolong2(x: &VectorField) -> Result<ProlongedField, ProlongError> {
    let mut taus = BTreeMap::new();
    for (&dep, eta) in &x.etas {
        let step = |tau: &Expr, j: (u8, u8), dir: Indep| -> Result<Expr, ProlongError> {
            let d_tau = total_derivative(tau, dir)?;
            let d_xi0 = total_derivative(&x.xi0, dir)?;
            let d_xi1 = total_derivative(&x.xi1, dir)?;
            let jt = Expr::jet(dep, j.0 + 1, j.1);
            let jx = Expr::jet(dep, j.0, j.1 + 1);
            Ok(d_tau.sub(&d_xi0.mul(&jt)).sub(&d_xi1.mul(&jx)))
        };
        let t10 = step(eta, (0, 0), Indep::T)?;
        let t01 = step(eta, (0, 0), Indep::X)?;
        let t20 = step(&t10, (1, 0), Indep::T)?;
        let t11 = step(&t01, (0, 1), Indep::T)?;
        let t02 = step(&t01, (0, 1), Indep::X)?;
        taus.insert((dep, (1, 0)), t10);
        taus.insert((dep, (0, 1)), t01);
        taus.insert((dep, (2, 0)), t20);
        taus.insert((dep, (1, 1)), t11);
        taus.insert((dep, (0, 2)), t02);
    }
    Ok(ProlongedField {
        base: x.clone(),
        taus,
    })
}

impl ProlongedField {
    /// Applies the prolonged operator to a jet-space expression.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = self.base.apply(f);
        for ((dep, (dt, dx)), tau) in &self.taus {
            let df = diff(f, &Slot::Jet(Jet::new(*dep, *dt, *dx)));
            if !df.is_zero() {
                acc = acc.add(&tau.mul(&df));
            }
        }
        acc
    }
}

/// The manifold substitution for a system form: ordered jet rewrite rules
/// applied to a fixed point.
pub struct Manifold {
    rules: Vec<(Jet, Expr)>,
    /// triple form: u- and w-jets lower onto w- and v-jets definitionally
    definitional: bool,
}

impl Manifold {
    pub fn of(sys: &PDESystem) -> Result<Self, ProlongError> {
        let mut rules = Vec::new();
        let definitional = sys.form == SystemForm::Triple;
        // Solve each equation for its leading jet (linear occurrence with
        // rational coefficient by construction).
        for (eq, lead) in sys.equations.iter().zip(&sys.leading) {
            if definitional && *lead != Jet::new(Dep::U, 1, 0) {
                continue; // u_x -> w and w_x -> v handled as index-lowering rules
            }
            let solved = solve_for_jet(eq, lead).ok_or(ProlongError::NotSolvable)?;
            rules.push((*lead, solved));
        }
        Ok(Manifold {
            rules,
            definitional,
        })
    }

    pub fn restrict(&self, e: &Expr) -> Result<Expr, ProlongError> {
        let mut cur = e.clone();
        for _ in 0..12 {
            let next = subst_symbols(&cur, &|s| {
                let Slot::Jet(j) = s else { return None };
                if self.definitional {
                    if j.dep == Dep::U && j.dx >= 1 {
                        return Some(Expr::jet(Dep::W, j.dt, j.dx - 1));
                    }
                    if j.dep == Dep::W && j.dx >= 1 {
                        return Some(Expr::jet(Dep::V, j.dt, j.dx - 1));
                    }
                }
                self.rules
                    .iter()
                    .find(|(lead, _)| lead == j)
                    .map(|(_, r)| r.clone())
            })?;
            if next == cur {
                return Ok(next);
            }
            cur = next;
        }
        Err(ProlongError::SubstNonconvergence)
    }
}

/// Solves eq = 0 for a jet that occurs exactly once, linearly, with a bare
/// rational coefficient.
fn solve_for_jet(eq: &Expr, jet: &Jet) -> Option<Expr> {
    use crate::symexpr::Factor;
    use num_traits::{One, Zero};
    let mut coeff: Option<Rat> = None;
    let mut rest = Expr::zero();
    for m in &eq.terms {
        let hits: Vec<_> = m
            .factors
            .iter()
            .filter(|(f, _)| matches!(f, Factor::Jet(j) if j == jet))
            .collect();
        if hits.is_empty() {
            rest = rest.add(&Expr {
                terms: vec![m.clone()],
            });
        } else if m.factors.len() == 1 && hits.len() == 1 && hits[0].1.is_one() {
            coeff = Some(match coeff {
                Some(c) => c + m.coeff.clone(),
                None => m.coeff.clone(),
            });
        } else {
            return None;
        }
    }
    let c = coeff?;
    if c.is_zero() {
        return None;
    }
    Some(rest.neg().scale(&(Rat::one() / c)))
}

/// Applies the second prolongation to each system equation and restricts the
/// result to the manifold (leading derivatives substituted to a fixed point).
pub fn invariance_residual(
    p: &ProlongedField,
    sys: &PDESystem,
) -> Result<Vec<Expr>, ProlongError> {
    let manifold = Manifold::of(sys)?;
    let mut out = Vec::with_capacity(sys.equations.len());
    for eq in &sys.equations {
        let applied = p.apply(eq);
        out.push(manifold.restrict(&applied)?);
    }
    Ok(out)
}

/// Outcome of a single generator check.
#[derive(Clone, Debug, PartialEq)]
pub enum VerifyMethod {
    Symbolic,
    Numeric { probes: usize },
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub method: VerifyMethod,
    /// max |residual| over probe points, relative to the cancellation scale;
    /// exactly 0.0 for a symbolic zero.
    pub max_residual: f64,
}

/// Checks whether X generates a symmetry of the system built from `tr`
/// instantiated by `s`: exact zero if the residual canonicalizes away,
/// otherwise the max relative residual over random jet-space probe points.
pub fn verify_generator(
    tr: &Triplet,
    s: &ParamSample,
    x: &VectorField,
    form: SystemForm,
    rng: &mut impl Rng,
) -> Result<VerifyReport, ProlongError> {
    let inst = instantiate(tr, s)?;
    let sys = build_system(&inst.triplet, form)?;
    let p = prolong2(x)?;
    let residuals = invariance_residual(&p, &sys)?;
    if residuals.iter().all(Expr::is_zero) {
        return Ok(VerifyReport {
            method: VerifyMethod::Symbolic,
            max_residual: 0.0,
        });
    }
    if residuals.iter().all(Expr::is_atom_free) {
        // exact canonical form is nonzero: a true symbolic failure; still
        // report the numeric magnitude for the caller
        let max = probe_max(&residuals, 20, rng)?;
        return Ok(VerifyReport {
            method: VerifyMethod::Symbolic,
            max_residual: max.max(f64::MIN_POSITIVE),
        });
    }
    let max = probe_max(&residuals, 20, rng)?;
    Ok(VerifyReport {
        method: VerifyMethod::Numeric { probes: 20 },
        max_residual: max,
    })
}

/// Collects every bindable symbol of the expressions.
fn free_slots(es: &[Expr]) -> Vec<Slot> {
    use crate::symexpr::Factor;
    let mut slots = std::collections::BTreeSet::new();
    fn walk(e: &Expr, slots: &mut std::collections::BTreeSet<Slot>) {
        for m in &e.terms {
            for (f, _) in &m.factors {
                match f {
                    Factor::Indep(v) => {
                        slots.insert(Slot::Indep(*v));
                    }
                    Factor::Jet(j) => {
                        slots.insert(Slot::Jet(*j));
                    }
                    Factor::Param(p) => {
                        slots.insert(Slot::Param(p.clone()));
                    }
                    Factor::Elem(_, a) => walk(a, slots),
                    Factor::Pow(b) => walk(b, slots),
                    Factor::Opaque(at) => {
                        for a in &at.args {
                            walk(a, slots);
                        }
                    }
                    Factor::Num(_) => {}
                }
            }
        }
    }
    for e in es {
        walk(e, &mut slots);
    }
    slots.into_iter().collect()
}

/// Max relative residual over `n` random probe points. Points hitting domain
/// errors (fractional powers of negatives, ln of non-positives) are resampled
/// within a retry budget.
pub fn probe_max(
    residuals: &[Expr],
    n: usize,
    rng: &mut impl Rng,
) -> Result<f64, ProlongError> {
    let slots = free_slots(residuals);
    let mut max = 0.0f64;
    let mut done = 0;
    let mut budget = 200 * n;
    while done < n {
        if budget == 0 {
            return Err(ProlongError::ProbeBudget(
                "domain errors at every sampled probe point".into(),
            ));
        }
        budget -= 1;
        let mut b = Bindings::new();
        for s in &slots {
            let v = match s {
                // dependent variables sampled positive: power-law coefficients
                Slot::Jet(j) if j.order() == 0 => rng.gen_range(0.25..2.25),
                _ => loop {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    if v.abs() > 0.05 {
                        break v;
                    }
                },
            };
            b.insert(s.clone(), v);
        }
        let mut ok = true;
        for r in residuals {
            match eval_with_scale(r, &b) {
                Ok((val, scale)) => {
                    let rel = val.abs() / scale.max(1.0);
                    max = max.max(rel);
                }
                Err(ExprError::Domain(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if ok {
            done += 1;
        }
    }
    Ok(max)
}

#[cfg(test)]
mod tests;
