//! IEEE-double evaluation of canonical expressions.

use super::{Elem, Expr, ExprError, Factor, Indep, Jet};
use crate::rat::{as_integer, to_f64, Rat};
use num_traits::ToPrimitive;
use std::collections::BTreeMap;

/// A bindable base symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Slot {
    Indep(Indep),
    Jet(Jet),
    Param(String),
}

impl Slot {
    pub fn t() -> Self {
        Slot::Indep(Indep::T)
    }
    pub fn x() -> Self {
        Slot::Indep(Indep::X)
    }
    pub fn param(name: &str) -> Self {
        Slot::Param(name.to_string())
    }
}

pub type Bindings = BTreeMap<Slot, f64>;

fn pow_checked(base: f64, e: &Rat) -> Result<f64, ExprError> {
    if let Some(n) = as_integer(e) {
        let n = n
            .to_i32()
            .ok_or_else(|| ExprError::Unsupported("exponent too large".into()))?;
        if base == 0.0 && n < 0 {
            return Err(ExprError::Domain("zero base with negative exponent".into()));
        }
        return Ok(base.powi(n));
    }
    if base < 0.0 {
        return Err(ExprError::Domain(format!(
            "fractional power of negative base {base}"
        )));
    }
    if base == 0.0 && e < &Rat::from_integer(0.into()) {
        return Err(ExprError::Domain("zero base with negative exponent".into()));
    }
    Ok(base.powf(to_f64(e)))
}

fn eval_factor(f: &Factor, b: &Bindings) -> Result<f64, ExprError> {
    match f {
        Factor::Num(n) => Ok(n.to_f64().unwrap_or(f64::NAN)),
        Factor::Indep(v) => b
            .get(&Slot::Indep(*v))
            .copied()
            .ok_or_else(|| ExprError::Unbound(if *v == Indep::T { "t" } else { "x" }.into())),
        Factor::Jet(j) => b.get(&Slot::Jet(*j)).copied().ok_or_else(|| {
            ExprError::Unbound(format!(
                "{}_{}{}",
                j.dep.name(),
                "t".repeat(j.dt as usize),
                "x".repeat(j.dx as usize)
            ))
        }),
        Factor::Param(p) => b
            .get(&Slot::Param(p.clone()))
            .copied()
            .ok_or_else(|| ExprError::Unbound(p.clone())),
        Factor::Elem(el, a) => {
            let v = eval_numeric(a, b)?;
            Ok(match el {
                Elem::Exp => v.exp(),
                Elem::Ln => {
                    if v <= 0.0 {
                        return Err(ExprError::Domain(format!("ln of non-positive {v}")));
                    }
                    v.ln()
                }
                Elem::Sin => v.sin(),
                Elem::Cos => v.cos(),
            })
        }
        Factor::Opaque(atom) => Err(ExprError::Unbound(atom.name.clone())),
        Factor::Pow(base) => eval_numeric(base, b),
    }
}

/// Evaluates with every free symbol bound. Deterministic given the bindings.
pub fn eval_numeric(e: &Expr, b: &Bindings) -> Result<f64, ExprError> {
    Ok(eval_with_scale(e, b)?.0)
}

/// Evaluates and also reports the cancellation scale (sum of |term| values),
/// the right denominator for relative zero tests.
pub fn eval_with_scale(e: &Expr, b: &Bindings) -> Result<(f64, f64), ExprError> {
    let mut sum = 0.0;
    let mut scale = 0.0;
    for m in &e.terms {
        let mut term = to_f64(&m.coeff);
        for (f, ex) in &m.factors {
            let base = eval_factor(f, b)?;
            term *= pow_checked(base, ex)?;
        }
        sum += term;
        scale += term.abs();
    }
    Ok((sum, scale))
}
