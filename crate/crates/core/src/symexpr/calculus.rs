//! Differentiation and substitution over canonical expressions.

use super::eval::Slot;
use super::{normalize_monomial, Elem, Expr, ExprError, Factor, Indep, OpaqueAtom, MAX_DT, MAX_DX};
use crate::rat::{rint, Rat};
use num_traits::One;

/// Derivative of a single base symbol under the active rule. Returns None for
/// factors the rule does not treat as base symbols (composites handled here).
type BaseRule<'a> = &'a dyn Fn(&Factor) -> Result<Option<Expr>, ExprError>;

fn derive_factor(f: &Factor, rule: BaseRule) -> Result<Expr, ExprError> {
    if let Some(d) = rule(f)? {
        return Ok(d);
    }
    Ok(match f {
        Factor::Num(_) => Expr::zero(),
        Factor::Indep(_) | Factor::Jet(_) | Factor::Param(_) => Expr::zero(),
        Factor::Elem(Elem::Exp, a) => Expr::exp(a.clone()).mul(&derive(a, rule)?),
        Factor::Elem(Elem::Ln, a) => derive(a, rule)?.mul(&a.pow(&rint(-1))?),
        Factor::Elem(Elem::Sin, a) => Expr::cos(a.clone()).mul(&derive(a, rule)?),
        Factor::Elem(Elem::Cos, a) => Expr::sin(a.clone()).neg().mul(&derive(a, rule)?),
        Factor::Opaque(atom) => {
            let mut acc = Expr::zero();
            for (i, arg) in atom.args.iter().enumerate() {
                let da = derive(arg, rule)?;
                if !da.is_zero() {
                    acc = acc.add(&Expr::opaque(atom.bump(i)).mul(&da));
                }
            }
            acc
        }
        Factor::Pow(b) => derive(b, rule)?,
    })
}

fn derive(e: &Expr, rule: BaseRule) -> Result<Expr, ExprError> {
    let mut acc = Expr::zero();
    for m in &e.terms {
        for i in 0..m.factors.len() {
            let (f, ex) = &m.factors[i];
            let df = derive_factor(f, rule)?;
            if df.is_zero() {
                continue;
            }
            let mut rest: Vec<(Factor, Rat)> = Vec::with_capacity(m.factors.len());
            for (j, fe) in m.factors.iter().enumerate() {
                if j == i {
                    rest.push((fe.0.clone(), &fe.1 - &Rat::one()));
                } else {
                    rest.push(fe.clone());
                }
            }
            let part = normalize_monomial(&m.coeff * ex, rest);
            acc = acc.add(&part.mul(&df));
        }
    }
    Ok(acc)
}

/// Partial derivative with respect to one symbol, treating every other symbol
/// (including jet coordinates) as independent. Total on all expressions.
pub fn diff(e: &Expr, s: &Slot) -> Expr {
    let rule = |f: &Factor| -> Result<Option<Expr>, ExprError> {
        let hit = match (f, s) {
            (Factor::Indep(a), Slot::Indep(b)) => a == b,
            (Factor::Jet(a), Slot::Jet(b)) => a == b,
            (Factor::Param(a), Slot::Param(b)) => a == b,
            _ => false,
        };
        Ok(match f {
            Factor::Indep(_) | Factor::Jet(_) | Factor::Param(_) => {
                Some(if hit { Expr::one() } else { Expr::zero() })
            }
            _ => None,
        })
    };
    derive(e, &rule).expect("partial derivative is total")
}

/// Total derivative D_t or D_x on jet space: the base variable moves and every
/// jet coordinate shifts by one in that direction.
pub fn total_derivative(e: &Expr, v: Indep) -> Result<Expr, ExprError> {
    let rule = |f: &Factor| -> Result<Option<Expr>, ExprError> {
        Ok(match f {
            Factor::Indep(a) => Some(if *a == v { Expr::one() } else { Expr::zero() }),
            Factor::Jet(j) => {
                let (dt, dx) = match v {
                    Indep::T => (j.dt + 1, j.dx),
                    Indep::X => (j.dt, j.dx + 1),
                };
                if dt > MAX_DT || dx > MAX_DX {
                    return Err(ExprError::OrderOverflow(format!(
                        "{}_{}{} exceeds supported jet order",
                        j.dep.name(),
                        "t".repeat(dt as usize),
                        "x".repeat(dx as usize)
                    )));
                }
                Some(Expr::jet(j.dep, dt, dx))
            }
            Factor::Param(_) => Some(Expr::zero()),
            _ => None,
        })
    };
    derive(e, &rule)
}

/// Structural substitution of base symbols by expressions; descends into the
/// arguments of elementary, opaque and deferred-power factors.
pub fn subst_symbols(
    e: &Expr,
    map: &dyn Fn(&Slot) -> Option<Expr>,
) -> Result<Expr, ExprError> {
    transform(e, &|f| {
        let slot = match f {
            Factor::Indep(v) => Slot::Indep(*v),
            Factor::Jet(j) => Slot::Jet(*j),
            Factor::Param(p) => Slot::Param(p.clone()),
            _ => return Ok(None),
        };
        Ok(map(&slot))
    })
}

/// Replaces opaque atoms by name. The callback sees the atom after its
/// arguments were substituted; `None` keeps the atom.
pub fn subst_opaque(
    e: &Expr,
    f: &dyn Fn(&OpaqueAtom) -> Result<Option<Expr>, ExprError>,
) -> Result<Expr, ExprError> {
    transform(e, &|fac| match fac {
        Factor::Opaque(atom) => f(atom),
        _ => Ok(None),
    })
}

/// Rebuilds the expression applying `tf` to each factor after recursing into
/// factor arguments. `Some(r)` replaces the factor by `r` (raised to the
/// factor's exponent); `None` keeps it.
fn transform(
    e: &Expr,
    tf: &dyn Fn(&Factor) -> Result<Option<Expr>, ExprError>,
) -> Result<Expr, ExprError> {
    let mut out = Expr::zero();
    for m in &e.terms {
        let mut kept: Vec<(Factor, Rat)> = Vec::new();
        let mut mults: Vec<Expr> = Vec::new();
        for (f, ex) in &m.factors {
            let inner = match f {
                Factor::Elem(el, a) => Factor::Elem(*el, transform(a, tf)?),
                Factor::Opaque(atom) => {
                    let mut args = Vec::with_capacity(atom.args.len());
                    for a in &atom.args {
                        args.push(transform(a, tf)?);
                    }
                    Factor::Opaque(OpaqueAtom {
                        name: atom.name.clone(),
                        args,
                        d: atom.d.clone(),
                    })
                }
                Factor::Pow(b) => Factor::Pow(transform(b, tf)?),
                other => other.clone(),
            };
            match tf(&inner)? {
                Some(r) => mults.push(r.pow(ex)?),
                None => kept.push((inner, ex.clone())),
            }
        }
        let mut term = normalize_monomial(m.coeff.clone(), kept);
        for mu in mults {
            term = term.mul(&mu);
        }
        out = out.add(&term);
    }
    Ok(out)
}
