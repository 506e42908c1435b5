//! Plain-text rendering. Output for grammar-covered expressions round-trips
//! through `parse` to an equal expression.

use super::{Expr, Factor, Indep, Jet, OpaqueAtom};
use crate::rat::{as_integer, render_rat, Rat};
use num_traits::{One, Signed};

fn jet_name(j: &Jet) -> String {
    if j.dt == 0 && j.dx == 0 {
        j.dep.name().to_string()
    } else {
        format!(
            "{}_{}{}",
            j.dep.name(),
            "t".repeat(j.dt as usize),
            "x".repeat(j.dx as usize)
        )
    }
}

fn render_opaque(atom: &OpaqueAtom) -> String {
    let plain: Option<Vec<String>> = atom
        .args
        .iter()
        .map(|a| {
            if a.terms.len() == 1
                && a.terms[0].coeff.is_one()
                && a.terms[0].factors.len() == 1
                && a.terms[0].factors[0].1.is_one()
            {
                match &a.terms[0].factors[0].0 {
                    Factor::Indep(Indep::T) => Some("t".to_string()),
                    Factor::Indep(Indep::X) => Some("x".to_string()),
                    Factor::Jet(j) => Some(jet_name(j)),
                    Factor::Param(p) => Some(p.clone()),
                    _ => None,
                }
            } else {
                None
            }
        })
        .collect();
    let total_d: u32 = atom.d.iter().map(|&x| x as u32).sum();
    if atom.args.len() == 1 {
        let primes = "'".repeat(atom.d[0] as usize);
        return format!("{}{}({})", atom.name, primes, render(&atom.args[0]));
    }
    if let Some(args) = plain {
        if total_d == 0 {
            return format!("{}({})", atom.name, args.join(","));
        }
        // paper-style subscript: xi0_x, eta1_xxu
        let mut suffix = String::new();
        for (i, &di) in atom.d.iter().enumerate() {
            for _ in 0..di {
                suffix.push_str(&args[i]);
            }
        }
        return format!("{}_{}", atom.name, suffix);
    }
    // general fallback: explicit derivative marker
    format!(
        "D[{};{}]({})",
        atom.name,
        atom.d
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(","),
        atom.args
            .iter()
            .map(render)
            .collect::<Vec<_>>()
            .join(",")
    )
}

fn render_factor(f: &Factor) -> (String, bool) {
    // (text, needs_parens_when_powered)
    match f {
        Factor::Num(n) => (n.to_string(), false),
        Factor::Indep(Indep::T) => ("t".into(), false),
        Factor::Indep(Indep::X) => ("x".into(), false),
        Factor::Jet(j) => (jet_name(j), false),
        Factor::Param(p) => (p.clone(), false),
        Factor::Elem(el, a) => (format!("{}({})", el.name(), render(a)), false),
        Factor::Opaque(atom) => (render_opaque(atom), false),
        Factor::Pow(b) => (format!("({})", render(b)), false),
    }
}

fn render_power(f: &Factor, e: &Rat) -> String {
    let (base, _) = render_factor(f);
    if e.is_one() {
        return base;
    }
    match as_integer(e) {
        Some(n) if !n.is_negative() => format!("{base}^{n}"),
        _ => format!("{base}^({})", render_rat(e)),
    }
}

fn render_monomial(coeff: &Rat, factors: &[(Factor, Rat)]) -> String {
    let mut parts: Vec<String> = Vec::new();
    if factors.is_empty() {
        return render_rat(coeff);
    }
    if !coeff.is_one() {
        parts.push(render_rat(coeff));
    }
    for (f, e) in factors {
        parts.push(render_power(f, e));
    }
    parts.join("*")
}

pub fn render(e: &Expr) -> String {
    if e.terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, m) in e.terms.iter().enumerate() {
        let neg = m.coeff.is_negative();
        let mag = if neg { -m.coeff.clone() } else { m.coeff.clone() };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&render_monomial(&mag, &m.factors));
    }
    out
}
