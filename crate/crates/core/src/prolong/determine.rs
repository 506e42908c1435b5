//! Mechanical derivation of the determining system for the general vector
//! field on the pair or triple form with opaque coefficients K, D, F.
//!
//! The raw invariance residuals are split by monomials in the free jet
//! coordinates; the resulting overdetermined linear system is then reduced to
//! its explicit form by four sound moves, iterated to a fixed point:
//!
//! 1. unary facts — a single-term equation whose only possibly-zero factor is
//!    one unknown atom forces that atom (and all its higher derivatives) to
//!    vanish;
//! 2. closure elimination — the bare occurrence of eta2 (and eta3) is solved
//!    for and substituted everywhere;
//! 3. v-split — once every unknown in an equation is known independent of v,
//!    the equation splits by powers of v;
//! 4. branch completion — facts that hold both when K' != 0 (K', K divisible)
//!    and when K' = 0 (with D' != 0 or D' = 0) hold unconditionally; each
//!    branch closes under x-differentiation of the classification equations
//!    and exact linear elimination.

use super::{invariance_residual, prolong2, ProlongError, VectorField};
use crate::model::{build_system, CoefFn, SystemForm, Triplet};
use crate::rat::Rat;
use crate::symexpr::{
    diff, render_jet_monomial, solve_linear_atom, solve_rational_system, split_by_jets,
    subst_opaque, Dep, Expr, Factor, Jet, Monomial, OpaqueAtom, Slot,
};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

const UNKNOWNS: [&str; 5] = ["xi0", "xi1", "eta1", "eta2", "eta3"];

/// One emitted determining equation with its provenance tag
/// (residual index : jet monomial [| v-power]).
#[derive(Clone, Debug)]
pub struct DetEquation {
    pub expr: Expr,
    pub tag: String,
}

impl DetEquation {
    pub fn rendered(&self) -> String {
        format!("{} = 0", self.expr)
    }
}

#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub form: SystemForm,
    /// Structural facts (single vanishing derivatives), paper-style order.
    pub facts: Vec<DetEquation>,
    /// Closure equations for eta2 (and eta3), stored as lhs - rhs.
    pub closures: Vec<DetEquation>,
    /// Classification equations carrying K, D, F.
    pub classification: Vec<DetEquation>,
    /// Anything that survived and is not a consequence of the above
    /// (empty when the reduction reaches the explicit form).
    pub residue: Vec<DetEquation>,
}

impl DeterminingSystem {
    pub fn all_equations(&self) -> Vec<&DetEquation> {
        self.facts
            .iter()
            .chain(&self.closures)
            .chain(&self.classification)
            .chain(&self.residue)
            .collect()
    }
}

/// Derivative-vanishing fact: atom `name` with any index >= `d` is zero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Fact {
    name: String,
    d: Vec<u8>,
}

fn covers(facts: &BTreeSet<Fact>, name: &str, d: &[u8]) -> bool {
    facts
        .iter()
        .any(|f| f.name == name && f.d.len() == d.len() && f.d.iter().zip(d).all(|(a, b)| a <= b))
}

#[derive(Clone, Debug)]
struct Eq {
    expr: Expr,
    tag: String,
}

fn arity(form: SystemForm) -> usize {
    match form {
        SystemForm::Triple => 5,
        _ => 4,
    }
}

fn base_args(form: SystemForm) -> Vec<Expr> {
    let mut args = vec![Expr::t(), Expr::x(), Expr::u(), Expr::v()];
    if form == SystemForm::Triple {
        args.push(Expr::w());
    }
    args
}

fn arg_slot(i: usize) -> Slot {
    match i {
        0 => Slot::t(),
        1 => Slot::x(),
        2 => Slot::Jet(Jet::new(Dep::U, 0, 0)),
        3 => Slot::Jet(Jet::new(Dep::V, 0, 0)),
        4 => Slot::Jet(Jet::new(Dep::W, 0, 0)),
        _ => unreachable!(),
    }
}

fn unknown_atom(form: SystemForm, name: &str, d: &[u8]) -> OpaqueAtom {
    let mut dd = d.to_vec();
    dd.resize(arity(form), 0);
    OpaqueAtom::new(name, base_args(form), dd)
}

fn is_unknown(name: &str) -> bool {
    UNKNOWNS.contains(&name)
}

/// Factors that never vanish identically: rationals are handled separately;
/// powers of independent variables and of the dependent variables vanish only
/// on thin sets, and K itself is not identically zero by standing assumption.
fn always_strippable(f: &Factor) -> bool {
    match f {
        Factor::Indep(_) | Factor::Jet(_) | Factor::Num(_) => true,
        Factor::Opaque(a) => a.name == "K" && a.d.iter().all(|&x| x == 0),
        _ => false,
    }
}

/// Divides out nonvanishing factors common to all terms and the rational
/// content; fixes the leading sign.
fn strip(e: &Expr, extra: &dyn Fn(&Factor) -> bool) -> Expr {
    if e.terms.is_empty() {
        return Expr::zero();
    }
    let strippable = |f: &Factor| always_strippable(f) || extra(f);
    // common factors with positive minimum exponent
    let mut common: Vec<(Factor, Rat)> = e.terms[0]
        .factors
        .iter()
        .filter(|(f, ex)| strippable(f) && ex.is_positive())
        .cloned()
        .collect();
    for m in &e.terms[1..] {
        common.retain(|(cf, _)| m.factors.iter().any(|(f, _)| f == cf));
        for c in common.iter_mut() {
            if let Some((_, ex)) = m.factors.iter().find(|(f, _)| *f == c.0) {
                if *ex < c.1 {
                    c.1 = ex.clone();
                }
            }
        }
        common.retain(|(_, ex)| ex.is_positive());
        if common.is_empty() {
            break;
        }
    }
    let mut out = e.clone();
    if !common.is_empty() {
        let mut terms = Vec::with_capacity(out.terms.len());
        for m in &out.terms {
            let mut factors = m.factors.clone();
            for (cf, ce) in &common {
                for item in factors.iter_mut() {
                    if item.0 == *cf {
                        item.1 = &item.1 - ce;
                    }
                }
            }
            factors.retain(|(_, ex)| !ex.is_zero());
            terms.push(Monomial {
                coeff: m.coeff.clone(),
                factors,
            });
        }
        out = Expr { terms: vec![] };
        for m in terms {
            out = out.add(&Expr { terms: vec![m] });
        }
    }
    out.content_primitive().1
}

/// Zeroes every atom implied by the fact set.
fn apply_facts(e: &Expr, facts: &BTreeSet<Fact>) -> Expr {
    if facts.is_empty() {
        return e.clone();
    }
    subst_opaque(e, &|a: &OpaqueAtom| {
        if is_unknown(&a.name) && covers(facts, &a.name, &a.d) {
            Ok(Some(Expr::zero()))
        } else {
            Ok(None)
        }
    })
    .expect("fact substitution is total")
}

/// A single-term equation whose only possibly-zero factor is one unknown atom.
fn unary_fact(e: &Expr, extra_strip: &dyn Fn(&Factor) -> bool) -> Option<Fact> {
    if e.terms.len() != 1 {
        return None;
    }
    let m = &e.terms[0];
    let mut found: Option<Fact> = None;
    for (f, ex) in &m.factors {
        if always_strippable(f) || extra_strip(f) {
            continue;
        }
        match f {
            Factor::Opaque(a) if is_unknown(&a.name) && ex.is_positive() => {
                if found.is_some() {
                    return None; // product of two unknowns proves nothing
                }
                found = Some(Fact {
                    name: a.name.clone(),
                    d: a.d.clone(),
                });
            }
            _ => return None,
        }
    }
    found
}

fn atom_names(e: &Expr) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    fn walk(e: &Expr, names: &mut BTreeSet<String>) {
        for m in &e.terms {
            for (f, _) in &m.factors {
                match f {
                    Factor::Opaque(a) => {
                        names.insert(a.name.clone());
                        for arg in &a.args {
                            walk(arg, names);
                        }
                    }
                    Factor::Elem(_, a) => walk(a, names),
                    Factor::Pow(b) => walk(b, names),
                    _ => {}
                }
            }
        }
    }
    walk(e, &mut names);
    names
}

/// Splits an equation by powers of an order-zero dependent variable once every
/// unknown present is known independent of it. `slot_idx` is the argument slot
/// of that variable in the unknown atoms.
fn try_var_split(
    eq: &Eq,
    dep: Dep,
    slot_idx: usize,
    form: SystemForm,
    facts: &BTreeSet<Fact>,
) -> Option<Vec<Eq>> {
    let names = atom_names(&eq.expr);
    for n in names {
        if is_unknown(&n) {
            let mut d = vec![0u8; arity(form)];
            d[slot_idx] = 1;
            if !covers(facts, &n, &d) {
                return None;
            }
        }
    }
    // split on explicit powers; occurrences inside atom arguments are vacuous
    let mut by_power: BTreeMap<u32, Expr> = BTreeMap::new();
    for m in &eq.expr.terms {
        let mut p = 0u32;
        let mut rest: Vec<(Factor, Rat)> = Vec::new();
        for (f, ex) in &m.factors {
            match f {
                Factor::Jet(j) if j.dep == dep && j.dt == 0 && j.dx == 0 => {
                    use num_traits::ToPrimitive;
                    let n = crate::rat::as_integer(ex)
                        .filter(|n| n.is_positive())
                        .and_then(|n| n.to_u32())?;
                    p = n;
                }
                other => rest.push((other.clone(), ex.clone())),
            }
        }
        let piece = Expr {
            terms: vec![Monomial {
                coeff: m.coeff.clone(),
                factors: rest,
            }],
        };
        by_power
            .entry(p)
            .and_modify(|acc| *acc = acc.add(&piece))
            .or_insert(piece);
    }
    by_power.retain(|_, v| !v.is_zero());
    if by_power.len() <= 1 && by_power.keys().next() == Some(&0) {
        return None; // nothing to split
    }
    Some(
        by_power
            .into_iter()
            .map(|(p, expr)| Eq {
                expr,
                tag: if p == 0 {
                    eq.tag.clone()
                } else {
                    format!("{}|{}^{}", eq.tag, dep.name(), p)
                },
            })
            .collect(),
    )
}

/// Result of one exact elimination round: atoms pinned to zero, plus reduced
/// rows whose entries all share one cofactor (re-emitted with it stripped).
struct Elimination {
    facts: Vec<(Fact, String)>,
    harvested: Vec<Eq>,
}

/// Linear equations over extended variables (unknown atom × cofactor
/// monomial) are solved exactly. A reduced row with a single entry pins its
/// atom to zero, and a row whose entries share one cofactor re-emits the pure
/// relation — both only when the cofactor is declared nonvanishing.
fn linear_elimination(eqs: &[Eq], extra_strip: &dyn Fn(&Factor) -> bool) -> Elimination {
    type Key = (OpaqueAtom, Vec<(Factor, Rat)>);
    let strippable =
        |cof: &[(Factor, Rat)]| cof.iter().all(|(f, _)| always_strippable(f) || extra_strip(f));
    let mut atoms: BTreeMap<Key, usize> = BTreeMap::new();
    let mut rows: Vec<(Vec<(usize, Rat)>, String)> = Vec::new();
    'outer: for eq in eqs {
        if eq.expr.terms.is_empty() || eq.expr.terms.len() > 8 {
            continue;
        }
        let mut row = Vec::new();
        for m in &eq.expr.terms {
            let mut unknown: Option<&OpaqueAtom> = None;
            let mut cofactor: Vec<(Factor, Rat)> = Vec::new();
            for (f, ex) in &m.factors {
                match f {
                    Factor::Opaque(a) if is_unknown(&a.name) => {
                        if unknown.is_some() || !ex.is_one() {
                            continue 'outer;
                        }
                        unknown = Some(a);
                    }
                    other => cofactor.push((other.clone(), ex.clone())),
                }
            }
            let Some(a) = unknown else { continue 'outer };
            let key = (a.clone(), cofactor);
            let next = atoms.len();
            let idx = *atoms.entry(key).or_insert(next);
            row.push((idx, m.coeff.clone()));
        }
        rows.push((row, eq.tag.clone()));
    }
    if atoms.is_empty() || rows.is_empty() {
        return Elimination {
            facts: vec![],
            harvested: vec![],
        };
    }
    let n = atoms.len();
    let dense: Vec<Vec<Rat>> = rows
        .iter()
        .map(|(r, _)| {
            let mut d = vec![Rat::zero(); n];
            for (i, c) in r {
                d[*i] = c.clone();
            }
            d
        })
        .collect();
    let tag = if rows.len() <= 3 {
        rows.iter()
            .map(|(_, t)| t.clone())
            .collect::<Vec<_>>()
            .join("+")
    } else {
        format!("elim[{} eqs]", rows.len())
    };
    let rev: BTreeMap<usize, &Key> = atoms.iter().map(|(k, i)| (*i, k)).collect();

    // For each nonvanishing cofactor class, eliminate every other column
    // first; surviving rows supported inside the class give pure relations
    // among the atoms (facts when a single atom remains).
    let classes: BTreeSet<&Vec<(Factor, Rat)>> = atoms
        .keys()
        .map(|(_, cof)| cof)
        .filter(|cof| strippable(cof))
        .collect();
    let mut facts = Vec::new();
    let mut harvested = Vec::new();
    for class in classes {
        let outside: Vec<usize> = (0..n).filter(|j| &rev[j].1 != class).collect();
        let inside: Vec<usize> = (0..n).filter(|j| &rev[j].1 == class).collect();
        let mut m = dense.clone();
        let rows_n = m.len();
        let mut r = 0;
        for &c in outside.iter().chain(inside.iter()) {
            let Some(p) = (r..rows_n).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let inv = Rat::one() / m[r][c].clone();
            for v in m[r].iter_mut() {
                *v *= &inv;
            }
            for i in 0..rows_n {
                if i != r && !m[i][c].is_zero() {
                    let f = m[i][c].clone();
                    for k in 0..n {
                        let sub = &m[r][k] * &f;
                        m[i][k] -= sub;
                    }
                }
            }
            r += 1;
            if r == rows_n {
                break;
            }
        }
        for row in &m {
            if outside.iter().any(|&j| !row[j].is_zero()) {
                continue;
            }
            let nz: Vec<usize> = inside
                .iter()
                .copied()
                .filter(|&j| !row[j].is_zero())
                .collect();
            if nz.len() == 1 {
                let (a, _) = rev[&nz[0]];
                facts.push((
                    Fact {
                        name: a.name.clone(),
                        d: a.d.clone(),
                    },
                    tag.clone(),
                ));
            } else if nz.len() > 1 {
                let mut eq = Expr::zero();
                for &j in &nz {
                    eq = eq.add(&Expr::opaque(rev[&j].0.clone()).scale(&row[j]));
                }
                harvested.push(Eq {
                    expr: eq,
                    tag: format!("lin({tag})"),
                });
            }
        }
    }
    Elimination { facts, harvested }
}

struct Engine {
    form: SystemForm,
    eqs: Vec<Eq>,
    facts: BTreeSet<Fact>,
    fact_tags: BTreeMap<Fact, String>,
}

impl Engine {
    fn normalize(&mut self, extra_strip: &dyn Fn(&Factor) -> bool) {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for eq in &self.eqs {
            let e = strip(&apply_facts(&eq.expr, &self.facts), extra_strip);
            if e.is_zero() || !seen.insert(e.clone()) {
                continue;
            }
            out.push(Eq {
                expr: e,
                tag: eq.tag.clone(),
            });
        }
        self.eqs = out;
    }

    fn add_fact(&mut self, f: Fact, tag: String) -> bool {
        if covers(&self.facts, &f.name, &f.d) {
            return false;
        }
        self.facts.retain(|g| {
            !(g.name == f.name && g.d.iter().zip(&f.d).all(|(a, b)| a >= b))
        });
        self.fact_tags.insert(f.clone(), tag);
        self.facts.insert(f);
        true
    }

    /// Unary facts + exact linear elimination + normalization, to a fixed point.
    fn fact_loop(&mut self, extra_strip: &dyn Fn(&Factor) -> bool) {
        for _ in 0..40 {
            self.normalize(extra_strip);
            let mut changed = false;
            let mut found: Vec<(Fact, String)> = self
                .eqs
                .iter()
                .filter_map(|eq| unary_fact(&eq.expr, extra_strip).map(|f| (f, eq.tag.clone())))
                .collect();
            let elim = linear_elimination(&self.eqs, extra_strip);
            found.extend(elim.facts);
            let known: BTreeSet<Expr> = self.eqs.iter().map(|e| e.expr.clone()).collect();
            for h in elim.harvested {
                let e = strip(&apply_facts(&h.expr, &self.facts), extra_strip);
                if !e.is_zero() && !known.contains(&e) {
                    self.eqs.push(Eq { expr: e, tag: h.tag });
                    changed = true;
                }
            }
            for (f, tag) in found {
                changed |= self.add_fact(f, tag);
            }
            if !changed {
                return;
            }
        }
    }

    /// Solves the bare closure equation for `name` and substitutes all its
    /// derivative atoms everywhere. Returns the closure right-hand side.
    fn eliminate_closure(&mut self, name: &str) -> Option<(Expr, String)> {
        let atom0 = unknown_atom(self.form, name, &[]);
        let mut hit: Option<(usize, Expr)> = None;
        for (i, eq) in self.eqs.iter().enumerate() {
            if let Some(rhs) = solve_linear_atom(&eq.expr, &atom0) {
                hit = Some((i, rhs));
                break;
            }
        }
        let (idx, rhs) = hit?;
        let tag = self.eqs[idx].tag.clone();
        self.eqs.remove(idx);
        // substitute every derivative of the closed atom
        let closure = rhs.clone();
        let subst = |e: &Expr| -> Expr {
            subst_opaque(e, &|a: &OpaqueAtom| {
                if a.name != name {
                    return Ok(None);
                }
                let mut cur = closure.clone();
                for (slot, &times) in a.d.iter().enumerate() {
                    for _ in 0..times {
                        cur = diff(&cur, &arg_slot(slot));
                    }
                }
                Ok(Some(cur))
            })
            .expect("closure substitution is total")
        };
        for eq in self.eqs.iter_mut() {
            eq.expr = subst(&eq.expr);
        }
        Some((rhs, tag))
    }

    /// Branch view: extra nonzero (strippable) atoms and vanishing rewrites.
    /// When K' is rewritten to zero, K is a nonzero constant and is set to 1
    /// (sound: atom-vanishing facts are invariant under the time rescaling
    /// that normalises the constant).
    fn branch_facts(
        &self,
        strip_names: &[(&str, u8)],
        zero_rewrites: &[(&str, u8)],
    ) -> Vec<(Fact, String)> {
        let extra = {
            let strip_names: Vec<(String, u8)> = strip_names
                .iter()
                .map(|(n, d)| (n.to_string(), *d))
                .collect();
            move |f: &Factor| -> bool {
                if let Factor::Opaque(a) = f {
                    let total: u8 = a.d.iter().sum();
                    return strip_names
                        .iter()
                        .any(|(n, d)| *n == a.name && total == *d);
                }
                false
            }
        };
        let k_const = zero_rewrites.iter().any(|(n, d)| *n == "K" && *d == 1);
        let kill = move |e: &Expr| -> Expr {
            subst_opaque(e, &|a: &OpaqueAtom| {
                let total: u8 = a.d.iter().sum();
                if zero_rewrites
                    .iter()
                    .any(|(n, d)| *n == a.name && total >= *d)
                {
                    return Ok(Some(Expr::zero()));
                }
                if k_const && a.name == "K" && total == 0 {
                    return Ok(Some(Expr::one()));
                }
                Ok(None)
            })
            .expect("total")
        };
        let mut sub = Engine {
            form: self.form,
            eqs: self
                .eqs
                .iter()
                .map(|eq| Eq {
                    expr: kill(&eq.expr),
                    tag: eq.tag.clone(),
                })
                .collect(),
            facts: self.facts.clone(),
            fact_tags: BTreeMap::new(),
        };
        for _ in 0..8 {
            sub.fact_loop(&extra);
            // close under x-differentiation
            let consequences: Vec<Eq> = sub
                .eqs
                .iter()
                .filter(|eq| eq.tag.matches("dx(").count() < 3)
                .map(|eq| Eq {
                    expr: kill(&diff(&eq.expr, &Slot::x())),
                    tag: format!("dx({})", eq.tag),
                })
                .collect();
            let before: BTreeSet<Expr> = sub.eqs.iter().map(|e| e.expr.clone()).collect();
            let mut changed = false;
            for c in consequences {
                let e = strip(&apply_facts(&c.expr, &sub.facts), &extra);
                if !e.is_zero() && !before.contains(&e) && sub.eqs.len() < 600 {
                    sub.eqs.push(Eq {
                        expr: e,
                        tag: c.tag,
                    });
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        sub.fact_loop(&extra);
        if std::env::var("GTFE_DET_DEBUG").is_ok() {
            eprintln!(
                "branch strip={strip_names:?} zero={zero_rewrites:?}: new facts {:?}, {} eqs left",
                sub.facts.difference(&self.facts).collect::<Vec<_>>(),
                sub.eqs.len()
            );
            for eq in &sub.eqs {
                eprintln!("    [{}] {}", eq.tag, eq.expr);
            }
        }
        sub.facts
            .difference(&self.facts)
            .map(|f| {
                let tag = sub.fact_tags.get(f).cloned().unwrap_or_default();
                (f.clone(), tag)
            })
            .collect()
    }
}

/// Derives the determining system for the given form, reduced to its explicit
/// form: structural facts, the closure(s), and the classification equations.
pub fn derive_determining_system(form: SystemForm) -> Result<DeterminingSystem, ProlongError> {
    assert!(form != SystemForm::Scalar, "pair or triple form expected");
    // the system with opaque coefficients
    let tr = Triplet::new(
        CoefFn::Custom {
            expr: Expr::opaque1("K", Expr::u(), 0),
        },
        CoefFn::Custom {
            expr: Expr::opaque1("D", Expr::u(), 0),
        },
        CoefFn::Custom {
            expr: Expr::opaque1("F", Expr::u(), 0),
        },
    )?;
    let sys = build_system(&tr, form)?;
    // the general vector field with opaque coefficients
    let mut etas = vec![
        (Dep::U, Expr::opaque(unknown_atom(form, "eta1", &[]))),
        (Dep::V, Expr::opaque(unknown_atom(form, "eta2", &[]))),
    ];
    if form == SystemForm::Triple {
        etas.push((Dep::W, Expr::opaque(unknown_atom(form, "eta3", &[]))));
    }
    let x = VectorField::new(
        Expr::opaque(unknown_atom(form, "xi0", &[])),
        Expr::opaque(unknown_atom(form, "xi1", &[])),
        &etas,
    );
    let residuals = invariance_residual(&prolong2(&x)?, &sys)?;

    // raw split by free jet monomials
    let mut eqs = Vec::new();
    for (i, r) in residuals.iter().enumerate() {
        let parts = split_by_jets(r, &|j: &Jet| j.order() >= 1)?;
        for (key, coeff) in parts {
            eqs.push(Eq {
                expr: coeff,
                tag: format!("S{}:{}", i + 1, render_jet_monomial(&key)),
            });
        }
    }
    let mut engine = Engine {
        form,
        eqs,
        facts: BTreeSet::new(),
        fact_tags: BTreeMap::new(),
    };
    let no_extra = |_: &Factor| false;
    engine.fact_loop(&no_extra);

    // closure elimination: eta3 first (its closure appears in S3's residual),
    // then eta2
    let mut closures: Vec<DetEquation> = Vec::new();
    let closure_order: &[&str] = match form {
        SystemForm::Triple => &["eta3", "eta2"],
        _ => &["eta2"],
    };
    for name in closure_order {
        if let Some((rhs, tag)) = engine.eliminate_closure(name) {
            let atom = Expr::opaque(unknown_atom(form, name, &[]));
            closures.push(DetEquation {
                expr: atom.sub(&rhs),
                tag,
            });
        }
        engine.fact_loop(&no_extra);
    }
    closures.reverse(); // present eta2 before eta3

    // v-split (and w-split in the triple form), then more facts
    for _ in 0..4 {
        let mut split_any = false;
        let mut next = Vec::new();
        for eq in &engine.eqs {
            let mut handled = false;
            for (dep, slot) in [(Dep::V, 3usize), (Dep::W, 4usize)] {
                if form != SystemForm::Triple && dep == Dep::W {
                    continue;
                }
                if let Some(parts) = try_var_split(eq, dep, slot, form, &engine.facts) {
                    next.extend(parts);
                    handled = true;
                    split_any = true;
                    break;
                }
            }
            if !handled {
                next.push(eq.clone());
            }
        }
        engine.eqs = next;
        engine.fact_loop(&no_extra);
        if !split_any {
            break;
        }
    }

    // branch completion: facts valid in all three coefficient branches
    // (K' != 0 | K' = 0, D' != 0 | K' = D' = 0) hold unconditionally
    for _ in 0..4 {
        let a = engine.branch_facts(&[("K", 0), ("K", 1)], &[]);
        let b = engine.branch_facts(&[("K", 0), ("D", 1)], &[("K", 1)]);
        let c = engine.branch_facts(&[("K", 0)], &[("K", 1), ("D", 1)]);
        let covered = |set: &[(Fact, String)], f: &Fact| {
            set.iter()
                .any(|(g, _)| g.name == f.name && g.d.iter().zip(&f.d).all(|(x, y)| x <= y))
        };
        let mut candidates: Vec<(Fact, String)> = a.clone();
        candidates.extend(b.iter().cloned());
        candidates.extend(c.iter().cloned());
        let mut changed = false;
        for (f, tag) in candidates {
            if covered(&a, &f) && covered(&b, &f) && covered(&c, &f) {
                changed |= engine.add_fact(f, format!("branches({tag})"));
            }
        }
        engine.fact_loop(&no_extra);
        if !changed {
            break;
        }
    }

    assemble(engine, closures, form)
}

fn assemble(
    engine: Engine,
    mut closures: Vec<DetEquation>,
    form: SystemForm,
) -> Result<DeterminingSystem, ProlongError> {
    // facts, minimalized and ordered by function then derivative index;
    // facts about the closure-eliminated functions are subsumed by the
    // closure equations and are not presented
    let eliminated: BTreeSet<&str> = match form {
        SystemForm::Triple => ["eta2", "eta3"].into_iter().collect(),
        _ => ["eta2"].into_iter().collect(),
    };
    let mut facts: Vec<(Fact, String)> = engine
        .facts
        .iter()
        .filter(|f| !eliminated.contains(f.name.as_str()))
        .map(|f| {
            (
                f.clone(),
                engine.fact_tags.get(f).cloned().unwrap_or_default(),
            )
        })
        .collect();
    facts.sort_by_key(|(f, _)| {
        let fn_rank = UNKNOWNS.iter().position(|n| *n == f.name).unwrap_or(99);
        let total: u32 = f.d.iter().map(|&x| x as u32).sum();
        (fn_rank, total, f.d.clone())
    });
    let fact_eqs: Vec<DetEquation> = facts
        .iter()
        .map(|(f, tag)| DetEquation {
            expr: Expr::opaque(unknown_atom(form, &f.name, &f.d)),
            tag: tag.clone(),
        })
        .collect();

    // reduce closures by the final facts
    for c in closures.iter_mut() {
        c.expr = apply_facts(&c.expr, &engine.facts);
    }

    // remaining equations: classification (K/D/F-carrying) vs residue
    let mut classification = Vec::new();
    let mut residue = Vec::new();
    for eq in &engine.eqs {
        let names = atom_names(&eq.expr);
        let has_k = names.contains("K");
        let has_d = names.contains("D");
        let has_f = names.contains("F");
        let det = DetEquation {
            expr: eq.expr.clone(),
            tag: eq.tag.clone(),
        };
        if has_f {
            classification.push((2, det));
        } else if has_d && !has_k {
            classification.push((1, det));
        } else if has_k && !has_d {
            classification.push((0, det));
        } else if has_k || has_d {
            classification.push((3, det));
        } else {
            residue.push(det);
        }
    }
    classification.sort_by_key(|(rank, eq)| (*rank, eq.expr.clone()));

    // discard classification duplicates that are derivatives/combinations of
    // the primary three
    let mut primary: Vec<DetEquation> = Vec::new();
    let mut rest: Vec<DetEquation> = Vec::new();
    let mut seen_rank = BTreeSet::new();
    for (rank, eq) in classification {
        if rank <= 2 && seen_rank.insert(rank) {
            primary.push(eq);
        } else {
            rest.push(eq);
        }
    }
    // span: the primary equations and their x- and u-derivatives (x up to
    // third order: the u_x coefficient pairs 2 dx(17) with dxxx(16))
    let mut span: Vec<Expr> = Vec::new();
    for p in &primary {
        let mut frontier = vec![p.expr.clone()];
        span.push(p.expr.clone());
        for _ in 0..3 {
            let mut next = Vec::new();
            for e in &frontier {
                for s in [Slot::x(), Slot::Jet(Jet::new(Dep::U, 0, 0))] {
                    let d = apply_facts(&diff(e, &s), &engine.facts);
                    if !d.is_zero() {
                        span.push(d.clone());
                        next.push(d);
                    }
                }
            }
            frontier = next;
        }
    }
    for eq in rest {
        if !in_rational_span(&eq.expr, &span) {
            residue.push(eq);
        }
    }
    for eq in residue.iter_mut() {
        eq.expr = strip(&eq.expr, &|_| false);
    }

    Ok(DeterminingSystem {
        form,
        facts: fact_eqs,
        closures,
        classification: primary,
        residue,
    })
}

/// Projects a triple-form determining equation onto pair-form atoms by
/// dropping the (vacuous) w argument slot. Returns None when the equation
/// genuinely involves w: a jet of w, a w-derivative of an unknown, or the
/// eliminated eta3.
pub fn project_to_pair(e: &Expr) -> Option<Expr> {
    let mentions_w = |e: &Expr| {
        crate::symexpr::split_by_jets(e, &|j: &Jet| j.dep == Dep::W)
            .map(|m| m.keys().any(|k| !k.is_empty()))
            .unwrap_or(true)
    };
    let blocked = std::cell::Cell::new(false);
    let projected = subst_opaque(e, &|a: &OpaqueAtom| {
        if is_unknown(&a.name) && a.d.len() == 5 {
            if a.name == "eta3" || a.d[4] > 0 {
                blocked.set(true);
                return Ok(Some(Expr::zero()));
            }
            let args = a.args[..4].to_vec();
            let d = a.d[..4].to_vec();
            return Ok(Some(Expr::opaque(OpaqueAtom::new(a.name.clone(), args, d))));
        }
        Ok(None)
    })
    .ok()?;
    if blocked.get() || mentions_w(&projected) {
        return None;
    }
    Some(projected)
}

/// Is `target` a rational-linear combination of `basis`?
fn in_rational_span(target: &Expr, basis: &[Expr]) -> bool {
    let mut monomials: BTreeMap<Vec<(Factor, Rat)>, usize> = BTreeMap::new();
    let index = |m: &Monomial, monomials: &mut BTreeMap<Vec<(Factor, Rat)>, usize>| {
        let next = monomials.len();
        *monomials.entry(m.factors.clone()).or_insert(next)
    };
    let mut cols: Vec<Vec<(usize, Rat)>> = Vec::new();
    for b in basis {
        let mut col = Vec::new();
        for m in &b.terms {
            col.push((index(m, &mut monomials), m.coeff.clone()));
        }
        cols.push(col);
    }
    let mut rhs_sparse = Vec::new();
    for m in &target.terms {
        rhs_sparse.push((index(m, &mut monomials), m.coeff.clone()));
    }
    let rows = monomials.len();
    let mut a = vec![vec![Rat::zero(); basis.len()]; rows];
    for (j, col) in cols.iter().enumerate() {
        for (i, c) in col {
            a[*i][j] = c.clone();
        }
    }
    let mut rhs = vec![Rat::zero(); rows];
    for (i, c) in rhs_sparse {
        rhs[i] = c;
    }
    solve_rational_system(&a, &rhs).is_some()
}
