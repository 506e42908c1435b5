//! Splitting expressions by jet monomials and solving for atoms — the
//! machinery behind residual splitting into determining equations.

use super::{Expr, ExprError, Factor, Jet, Monomial, OpaqueAtom};
use crate::rat::{as_integer, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// A product of jet coordinates with positive integer exponents; the split key.
pub type JetMonomial = Vec<(Jet, u32)>;

pub fn render_jet_monomial(m: &JetMonomial) -> String {
    if m.is_empty() {
        return "1".to_string();
    }
    m.iter()
        .map(|(j, p)| {
            let name = format!(
                "{}{}{}{}",
                j.dep.name(),
                if j.dt + j.dx > 0 { "_" } else { "" },
                "t".repeat(j.dt as usize),
                "x".repeat(j.dx as usize)
            );
            if *p == 1 {
                name
            } else {
                format!("{name}^{p}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

fn expr_mentions_jet(e: &Expr, pred: &dyn Fn(&Jet) -> bool) -> bool {
    e.terms.iter().any(|m| {
        m.factors.iter().any(|(f, _)| match f {
            Factor::Jet(j) => pred(j),
            Factor::Elem(_, a) => expr_mentions_jet(a, pred),
            Factor::Pow(b) => expr_mentions_jet(b, pred),
            Factor::Opaque(atom) => atom.args.iter().any(|a| expr_mentions_jet(a, pred)),
            _ => false,
        })
    })
}

/// Collects the coefficient of every monomial in the jets selected by `pred`.
///
/// Fails when a selected jet occurs with a non-integer or negative exponent or
/// hides inside a composite factor — the residual would not be polynomial in
/// the split coordinates and coefficient extraction would be unsound.
pub fn split_by_jets(
    e: &Expr,
    pred: &dyn Fn(&Jet) -> bool,
) -> Result<BTreeMap<JetMonomial, Expr>, ExprError> {
    let mut out: BTreeMap<JetMonomial, Expr> = BTreeMap::new();
    for m in &e.terms {
        let mut key: JetMonomial = Vec::new();
        let mut rest: Vec<(Factor, Rat)> = Vec::new();
        for (f, ex) in &m.factors {
            match f {
                Factor::Jet(j) if pred(j) => {
                    let n = as_integer(ex)
                        .filter(|n| n.is_positive())
                        .and_then(|n| n.to_u32())
                        .ok_or_else(|| {
                            ExprError::Unsupported(format!(
                                "non-polynomial occurrence of split jet (exponent {ex})"
                            ))
                        })?;
                    key.push((*j, n));
                }
                other => {
                    let buried = match other {
                        Factor::Elem(_, a) => expr_mentions_jet(a, pred),
                        Factor::Pow(b) => expr_mentions_jet(b, pred),
                        Factor::Opaque(atom) => {
                            atom.args.iter().any(|a| expr_mentions_jet(a, pred))
                        }
                        _ => false,
                    };
                    if buried {
                        return Err(ExprError::Unsupported(
                            "split jet occurs inside a composite factor".into(),
                        ));
                    }
                    rest.push((other.clone(), ex.clone()));
                }
            }
        }
        key.sort();
        let coeff = Expr {
            terms: vec![Monomial {
                coeff: m.coeff.clone(),
                factors: rest,
            }],
        };
        out.entry(key)
            .and_modify(|acc| *acc = acc.add(&coeff))
            .or_insert(coeff);
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Splits by powers of a single order-zero jet (used for the v-split once the
/// unknowns are known to be v-free).
pub fn split_by_v_powers(e: &Expr, dep: super::Dep) -> Result<BTreeMap<u32, Expr>, ExprError> {
    let pred = move |j: &Jet| j.dep == dep && j.dt == 0 && j.dx == 0;
    let split = split_by_jets(e, &pred)?;
    let mut out = BTreeMap::new();
    for (key, coeff) in split {
        let p = key.first().map(|(_, p)| *p).unwrap_or(0);
        out.insert(p, coeff);
    }
    Ok(out)
}

fn expr_has_atom(e: &Expr, atom: &OpaqueAtom) -> bool {
    e.terms.iter().any(|m| {
        m.factors.iter().any(|(f, _)| match f {
            Factor::Opaque(a) => a == atom || a.args.iter().any(|x| expr_has_atom(x, atom)),
            Factor::Elem(_, a) => expr_has_atom(a, atom),
            Factor::Pow(b) => expr_has_atom(b, atom),
            _ => false,
        })
    })
}

/// Solves `eq = 0` for an opaque atom that occurs only linearly as a bare
/// monomial `c * atom`. Returns the solved expression, or None when the atom
/// occurs in any other shape.
pub fn solve_linear_atom(eq: &Expr, atom: &OpaqueAtom) -> Option<Expr> {
    let mut coeff: Option<Rat> = None;
    let mut rest = Expr::zero();
    for m in &eq.terms {
        let is_bare = m.factors.len() == 1
            && matches!(&m.factors[0].0, Factor::Opaque(a) if a == atom)
            && m.factors[0].1.is_one();
        if is_bare {
            coeff = Some(match coeff {
                Some(c) => c + m.coeff.clone(),
                None => m.coeff.clone(),
            });
        } else {
            let piece = Expr {
                terms: vec![m.clone()],
            };
            if expr_has_atom(&piece, atom) {
                return None;
            }
            rest = rest.add(&piece);
        }
    }
    let c = coeff?;
    if c.is_zero() {
        return None;
    }
    Some(rest.neg().scale(&(Rat::one() / c)))
}

/// Exact Gaussian elimination over the rationals. Returns one solution of
/// `a x = b` when the system is consistent (free variables pinned to zero).
pub fn solve_rational_system(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let rows = a.len();
    if rows == 0 {
        return Some(vec![]);
    }
    let cols = a[0].len();
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rat::one() / m[r][c].clone();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in 0..=cols {
                    let sub = &m[r][k] * &f;
                    m[i][k] -= sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    // consistency: no row of the form 0 = nonzero
    for row in &m {
        if row[..cols].iter().all(|v| v.is_zero()) && !row[cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rat::from_integer(BigInt::from(0)); cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        x[c] = m[i][cols].clone();
    }
    Some(x)
}
