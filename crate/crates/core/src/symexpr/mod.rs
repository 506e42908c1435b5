//! Exact-arithmetic symbolic expression kernel.
//!
//! Expressions are kept in canonical form at all times: a sum of monomials,
//! each monomial a rational coefficient times a product of distinct factors
//! with rational exponents, factors sorted by a fixed total order. Equality,
//! ordering and zero recognition are therefore structural.
//!
//! Zero recognition is exact for rational-exponent expressions free of
//! elementary atoms; sums involving `exp`/`ln`/`sin`/`cos` only cancel when
//! the atoms match syntactically (`sin^2 + cos^2` stays unreduced — numeric
//! probing covers those cases).

mod calculus;
mod collect;
mod eval;
mod parse;
mod render;

pub use calculus::{diff, subst_opaque, subst_symbols, total_derivative};
pub use collect::{
    render_jet_monomial, solve_linear_atom, solve_rational_system, split_by_jets,
    split_by_v_powers, JetMonomial,
};
pub use eval::{eval_numeric, eval_with_scale, Bindings, Slot};
pub use parse::{parse, parse_with_params, ParseCtx};

use crate::rat::{as_integer, rat_powi, rint, split_pow, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Independent variables of the PDE family.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Indep {
    T,
    X,
}

/// Dependent variables: u, the auxiliary v = u_xx, and w = u_x of the triple form.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Dep {
    U,
    V,
    W,
}

impl Dep {
    pub fn name(self) -> &'static str {
        match self {
            Dep::U => "u",
            Dep::V => "v",
            Dep::W => "w",
        }
    }
}

/// A jet coordinate: derivative of a dependent variable, treated as an
/// independent symbol on jet space. `(0,0)` is the dependent variable itself.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Jet {
    pub dep: Dep,
    pub dt: u8,
    pub dx: u8,
}

impl Jet {
    pub const fn new(dep: Dep, dt: u8, dx: u8) -> Self {
        Jet { dep, dt, dx }
    }
    pub fn order(&self) -> u8 {
        self.dt + self.dx
    }
}

/// Supported jet orders: the fourth-order scalar form and second prolongation
/// never need more than this.
pub const MAX_DT: u8 = 2;
pub const MAX_DX: u8 = 4;

/// Elementary function atoms. `sqrt` is normalised to a rational power.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Elem {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Elem {
    pub fn name(self) -> &'static str {
        match self {
            Elem::Exp => "exp",
            Elem::Ln => "ln",
            Elem::Sin => "sin",
            Elem::Cos => "cos",
        }
    }
}

/// An opaque function atom: a named function of explicit arguments carrying a
/// derivative multi-index over those arguments. `K(u)` with `d=[2]` is `K''(u)`;
/// `xi0(t,x,u,v)` with `d=[0,1,0,0]` is the partial in the second argument.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct OpaqueAtom {
    pub name: String,
    pub args: Vec<Expr>,
    pub d: Vec<u8>,
}

impl OpaqueAtom {
    pub fn new(name: impl Into<String>, args: Vec<Expr>, d: Vec<u8>) -> Self {
        let name = name.into();
        assert_eq!(args.len(), d.len(), "derivative index must match arity");
        OpaqueAtom { name, args, d }
    }

    /// The atom with the derivative index bumped in argument slot `i`.
    pub fn bump(&self, i: usize) -> Self {
        let mut d = self.d.clone();
        d[i] += 1;
        OpaqueAtom {
            name: self.name.clone(),
            args: self.args.clone(),
            d,
        }
    }
}

/// A multiplicative factor. The kernel combines equal factors by adding
/// exponents, so structural equality here decides "like terms".
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Factor {
    /// Surd base: integer > 1 carrying a non-integer rational exponent (e.g. 2^(1/2)).
    Num(BigInt),
    Indep(Indep),
    Jet(Jet),
    Param(String),
    Elem(Elem, Expr),
    Opaque(OpaqueAtom),
    /// Deferred power of a non-monomial base (primitive sum), or of a negative
    /// monomial raised to a fractional exponent.
    Pow(Expr),
}

/// coefficient × product of factor^exponent, exponents nonzero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Monomial {
    pub coeff: Rat,
    pub factors: Vec<(Factor, Rat)>,
}

impl Monomial {
    pub fn constant(c: Rat) -> Self {
        Monomial {
            coeff: c,
            factors: vec![],
        }
    }

    fn key(&self) -> &[(Factor, Rat)] {
        &self.factors
    }
}

/// A canonical expression: sorted sum of monomials with distinct factor keys.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Expr {
    pub terms: Vec<Monomial>,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("jet order overflow: {0}")]
    OrderOverflow(String),
    #[error("unbound symbol '{0}' in numeric evaluation")]
    Unbound(String),
    #[error("numeric domain error: {0}")]
    Domain(String),
    #[error("division by zero expression")]
    DivisionByZero,
    #[error("exponent must be an exact rational constant")]
    NonRationalExponent,
    #[error("{0}")]
    Unsupported(String),
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: vec![] }
    }

    pub fn one() -> Self {
        Expr::num(Rat::one())
    }

    pub fn num(c: Rat) -> Self {
        if c.is_zero() {
            Expr::zero()
        } else {
            Expr {
                terms: vec![Monomial::constant(c)],
            }
        }
    }

    pub fn int(n: i64) -> Self {
        Expr::num(rint(n))
    }

    pub fn param(name: impl Into<String>) -> Self {
        Expr::from_factor(Factor::Param(name.into()))
    }

    pub fn indep(v: Indep) -> Self {
        Expr::from_factor(Factor::Indep(v))
    }

    pub fn t() -> Self {
        Expr::indep(Indep::T)
    }

    pub fn x() -> Self {
        Expr::indep(Indep::X)
    }

    pub fn jet(dep: Dep, dt: u8, dx: u8) -> Self {
        Expr::from_factor(Factor::Jet(Jet::new(dep, dt, dx)))
    }

    pub fn u() -> Self {
        Expr::jet(Dep::U, 0, 0)
    }

    pub fn v() -> Self {
        Expr::jet(Dep::V, 0, 0)
    }

    pub fn w() -> Self {
        Expr::jet(Dep::W, 0, 0)
    }

    pub fn opaque(atom: OpaqueAtom) -> Self {
        Expr::from_factor(Factor::Opaque(atom))
    }

    /// K(u)-style single-argument opaque atom with derivative order `d`.
    pub fn opaque1(name: &str, arg: Expr, d: u8) -> Self {
        Expr::opaque(OpaqueAtom::new(name, vec![arg], vec![d]))
    }

    pub fn elem(f: Elem, arg: Expr) -> Self {
        match f {
            Elem::Exp => {
                if arg.is_zero() {
                    return Expr::one();
                }
            }
            Elem::Ln => {
                if arg == Expr::one() {
                    return Expr::zero();
                }
            }
            Elem::Sin => {
                if arg.is_zero() {
                    return Expr::zero();
                }
            }
            Elem::Cos => {
                if arg.is_zero() {
                    return Expr::one();
                }
            }
        }
        Expr::from_factor(Factor::Elem(f, arg))
    }

    pub fn exp(arg: Expr) -> Self {
        Expr::elem(Elem::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Self {
        Expr::elem(Elem::Ln, arg)
    }

    pub fn sin(arg: Expr) -> Self {
        Expr::elem(Elem::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Self {
        Expr::elem(Elem::Cos, arg)
    }

    pub fn sqrt(arg: Expr) -> Result<Self, ExprError> {
        arg.pow(&crate::rat::rq(1, 2))
    }

    fn from_factor(f: Factor) -> Self {
        Expr {
            terms: vec![Monomial {
                coeff: Rat::one(),
                factors: vec![(f, Rat::one())],
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value when the expression is a bare rational.
    pub fn as_rational(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 if self.terms[0].factors.is_empty() => Some(self.terms[0].coeff.clone()),
            _ => None,
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let a = &self.terms[i];
            let b = &other.terms[j];
            match a.key().cmp(b.key()) {
                std::cmp::Ordering::Less => {
                    terms.push(a.clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    terms.push(b.clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &a.coeff + &b.coeff;
                    if !c.is_zero() {
                        terms.push(Monomial {
                            coeff: c,
                            factors: a.factors.clone(),
                        });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend_from_slice(&other.terms[j..]);
        Expr { terms }
    }

    pub fn neg(&self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: -m.coeff.clone(),
                    factors: m.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: &m.coeff * c,
                    factors: m.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                factors.extend(b.factors.iter().cloned());
                acc = acc.add(&normalize_monomial(&a.coeff * &b.coeff, factors));
            }
        }
        acc
    }

    /// Raise to an exact rational power.
    pub fn pow(&self, e: &Rat) -> Result<Expr, ExprError> {
        if e.is_zero() {
            if self.is_zero() {
                return Err(ExprError::Domain("0^0".into()));
            }
            return Ok(Expr::one());
        }
        if self.is_zero() {
            return if e.is_positive() {
                Ok(Expr::zero())
            } else {
                Err(ExprError::DivisionByZero)
            };
        }
        if *e == rint(1) {
            return Ok(self.clone());
        }
        if self.terms.len() == 1 {
            let m = &self.terms[0];
            let mut factors: Vec<(Factor, Rat)> = m
                .factors
                .iter()
                .map(|(f, fe)| (f.clone(), fe * e))
                .collect();
            return match split_pow(&m.coeff, e) {
                Some((c, surds)) => {
                    for (b, fe) in surds {
                        factors.push((Factor::Num(b), fe));
                    }
                    Ok(normalize_monomial(c, factors))
                }
                None => {
                    // negative rational to a fractional power: defer
                    Ok(defer_pow(self.clone(), e.clone()))
                }
            };
        }
        if let Some(n) = as_integer(e) {
            let npos = n.abs().to_u64().ok_or_else(|| {
                ExprError::Unsupported("integer exponent too large".into())
            })?;
            if npos > 64 {
                return Err(ExprError::Unsupported("integer exponent too large".into()));
            }
            let mut acc = Expr::one();
            let mut base = self.clone();
            let mut k = npos;
            while k > 0 {
                if k & 1 == 1 {
                    acc = acc.mul(&base);
                }
                base = base.mul(&base.clone());
                k >>= 1;
            }
            if n.is_negative() {
                // invert: extract content so equal bases meet structurally
                let (content, prim) = acc.content_primitive();
                let inv_c = rat_powi(&(Rat::one() / content), &BigInt::one());
                return Ok(defer_pow(prim, rint(-1)).scale(&inv_c));
            }
            return Ok(acc);
        }
        // fractional power of a sum
        let (content, prim) = self.content_primitive();
        match split_pow(&content, e) {
            Some((c, surds)) => {
                let mut res = defer_pow(prim, e.clone());
                let mut factors = res.terms[0].factors.clone();
                for (b, fe) in surds {
                    factors.push((Factor::Num(b), fe));
                }
                res = normalize_monomial(c, factors);
                Ok(res)
            }
            None => Ok(defer_pow(self.clone(), e.clone())),
        }
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self.mul(&other.pow(&rint(-1))?))
    }

    /// Splits into (rational content, primitive part): content × primitive == self,
    /// primitive has coprime integer coefficients and positive leading coefficient.
    pub fn content_primitive(&self) -> (Rat, Expr) {
        if self.terms.is_empty() {
            return (Rat::one(), Expr::zero());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for m in &self.terms {
            num_gcd = num_integer::Integer::gcd(&num_gcd, &m.coeff.numer().abs());
            den_lcm = num_integer::Integer::lcm(&den_lcm, &m.coeff.denom().abs());
        }
        if num_gcd.is_zero() {
            num_gcd = BigInt::one();
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if self.terms[0].coeff.is_negative() {
            content = -content;
        }
        let inv = Rat::one() / content.clone();
        (content, self.scale(&inv))
    }

    /// True when no factor anywhere is an elementary atom (exp/ln/sin/cos), a
    /// surd, or a deferred sum power. Zero recognition is exact on this class;
    /// everything else falls back to numeric probing.
    pub fn is_atom_free(&self) -> bool {
        self.terms.iter().all(|m| {
            m.factors.iter().all(|(f, _)| match f {
                Factor::Elem(..) | Factor::Num(..) | Factor::Pow(..) => false,
                Factor::Opaque(a) => a.args.iter().all(Expr::is_atom_free),
                _ => true,
            })
        })
    }

    /// True when any factor (recursively) is an opaque atom.
    pub fn has_opaque(&self) -> bool {
        self.terms.iter().any(|m| {
            m.factors.iter().any(|(f, _)| match f {
                Factor::Opaque(_) => true,
                Factor::Elem(_, a) => a.has_opaque(),
                Factor::Pow(b) => b.has_opaque(),
                _ => false,
            })
        })
    }

    /// Re-normalisation entry point. Expressions are canonical by construction,
    /// so this rebuilds from the monomials and is a fixed point.
    pub fn canonicalize(&self) -> Expr {
        let mut acc = Expr::zero();
        for m in &self.terms {
            acc = acc.add(&normalize_monomial(m.coeff.clone(), m.factors.clone()));
        }
        acc
    }
}

fn defer_pow(base: Expr, e: Rat) -> Expr {
    Expr {
        terms: vec![Monomial {
            coeff: Rat::one(),
            factors: vec![(Factor::Pow(base), e)],
        }],
    }
}

/// Normalises a raw factor bag into a canonical expression. Handles like-factor
/// merging, exp-product combination, surd folding and integer expansion of
/// deferred sum-powers, which can fan a single monomial out into a sum.
pub(crate) fn normalize_monomial(coeff: Rat, mut raw: Vec<(Factor, Rat)>) -> Expr {
    if coeff.is_zero() {
        return Expr::zero();
    }
    raw.retain(|(_, e)| !e.is_zero());
    raw.sort();
    // merge adjacent equal factors
    let mut merged: Vec<(Factor, Rat)> = Vec::with_capacity(raw.len());
    for (f, e) in raw {
        match merged.last_mut() {
            Some((lf, le)) if *lf == f => *le += e,
            _ => merged.push((f, e)),
        }
    }
    merged.retain(|(_, e)| !e.is_zero());

    let mut coeff = coeff;
    let mut simple: Vec<(Factor, Rat)> = Vec::new();
    let mut expansions: Vec<Expr> = Vec::new();
    let mut exp_arg = Expr::zero();

    for (f, e) in merged {
        match f {
            Factor::Num(b) => {
                // refold: exponent may have become an integer after merging
                match split_pow(&Rat::from_integer(b.clone()), &e) {
                    Some((c, surds)) => {
                        coeff *= c;
                        for (sb, se) in surds {
                            simple.push((Factor::Num(sb), se));
                        }
                    }
                    None => simple.push((Factor::Num(b), e)),
                }
            }
            Factor::Elem(Elem::Exp, arg) => {
                exp_arg = exp_arg.add(&arg.scale(&e));
            }
            Factor::Pow(base) => {
                if let Some(n) = as_integer(&e) {
                    let small = n.to_i64();
                    match small {
                        Some(k) if k > 0 && k <= 16 && base.terms.len() <= 8 => {
                            let mut p = Expr::one();
                            for _ in 0..k {
                                p = p.mul(&base);
                            }
                            expansions.push(p);
                            continue;
                        }
                        _ => {}
                    }
                }
                if base.terms.len() == 1 && !base.terms[0].coeff.is_negative() {
                    // distribute over a plain monomial base
                    let m = &base.terms[0];
                    if let Some((c, surds)) = split_pow(&m.coeff, &e) {
                        coeff *= c;
                        for (sb, se) in surds {
                            simple.push((Factor::Num(sb), se));
                        }
                        for (bf, be) in &m.factors {
                            simple.push((bf.clone(), be * &e));
                        }
                        continue;
                    }
                }
                simple.push((Factor::Pow(base), e));
            }
            other => simple.push((other, e)),
        }
    }

    if !exp_arg.is_zero() {
        simple.push((Factor::Elem(Elem::Exp, exp_arg), Rat::one()));
    }

    simple.sort();
    // a second merge pass: folding may have produced equal factors
    let mut final_factors: Vec<(Factor, Rat)> = Vec::with_capacity(simple.len());
    for (f, e) in simple {
        match final_factors.last_mut() {
            Some((lf, le)) if *lf == f => *le += e,
            _ => final_factors.push((f, e)),
        }
    }
    final_factors.retain(|(_, e)| !e.is_zero());

    let head = Expr {
        terms: vec![Monomial {
            coeff,
            factors: final_factors,
        }],
    };
    expansions.into_iter().fold(head, |acc, e| acc.mul(&e))
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(&self, &rhs)
    }
}

impl std::ops::Add<&Expr> for Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(&self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(&self, &rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(&self, &rhs)
    }
}

impl std::ops::Mul<&Expr> for Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(&self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render::render(self))
    }
}
