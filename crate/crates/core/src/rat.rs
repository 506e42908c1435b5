//! Exact rational scalars and small helpers shared across the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Integer as a rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational p/q. Panics on q = 0.
pub fn rq(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}

pub fn is_one(r: &Rat) -> bool {
    r.is_one()
}

/// Returns the integer value when the rational is an integer.
pub fn as_integer(r: &Rat) -> Option<BigInt> {
    if r.is_integer() {
        Some(r.to_integer())
    } else {
        None
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    // Ratio::to_f64 handles big numerators by scaling.
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses "p/q" or "p" with optional sign; rejects anything else (floats in particular).
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt, String> {
        if t.is_empty() {
            return Err(format!("empty integer in rational '{s}'"));
        }
        t.parse::<BigInt>()
            .map_err(|_| format!("'{t}' is not an exact integer (floats are rejected)"))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let num = parse_int(p.trim())?;
            let den = parse_int(q.trim())?;
            if den.is_zero() {
                return Err(format!("zero denominator in '{s}'"));
            }
            Ok(Rat::new(num, den))
        }
        None => Ok(Rat::from_integer(parse_int(s)?)),
    }
}

pub fn render_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact c^e split into a rational part and leftover surd factors (base, fractional exponent).
///
/// Bases in the output are > 1, pairwise coprime, with exponents in (0, 1).
/// Returns None when c < 0 with non-integer e (caller keeps the power unevaluated)
/// or c = 0 with e <= 0.
pub fn split_pow(c: &Rat, e: &Rat) -> Option<(Rat, Vec<(BigInt, Rat)>)> {
    if c.is_zero() {
        return if e.is_positive() {
            Some((Rat::zero(), vec![]))
        } else {
            None
        };
    }
    if let Some(n) = as_integer(e) {
        return Some((rat_powi(c, &n), vec![]));
    }
    if c.is_negative() {
        return None;
    }
    let mut rational = Rat::one();
    let mut surds: Vec<(BigInt, Rat)> = Vec::new();
    let mut push = |base: BigInt, mult: i64| {
        // total exponent of this base is mult * e
        let total = e * Rat::from_integer(BigInt::from(mult));
        let int_part = total.floor();
        let frac = &total - &int_part;
        rational *= rat_powi(&Rat::from_integer(base.clone()), &int_part.to_integer());
        if !frac.is_zero() {
            surds.push((base, frac));
        }
    };
    for (base, mult, inverted) in factor_parts(c) {
        push(base, if inverted { -mult } else { mult });
    }
    // Merge equal bases (numerator and denominator are coprime so bases are distinct already,
    // but the unfactored remainders could coincide).
    surds.sort();
    let mut merged: Vec<(BigInt, Rat)> = Vec::new();
    for (b, f) in surds {
        match merged.last_mut() {
            Some((lb, lf)) if *lb == b => *lf += f,
            _ => merged.push((b, f)),
        }
    }
    merged.retain(|(_, f)| !f.is_zero());
    // Exponents may have left (0,1) after merging; refold integer parts.
    let mut out = Vec::new();
    for (b, f) in merged {
        let int_part = f.floor();
        let frac = &f - &int_part;
        rational *= rat_powi(&Rat::from_integer(b.clone()), &int_part.to_integer());
        if !frac.is_zero() {
            out.push((b, frac));
        }
    }
    Some((rational, out))
}

/// Prime factorisation of |numer| and |denom| by trial division; large残 remainders stay whole.
fn factor_parts(c: &Rat) -> Vec<(BigInt, i64, bool)> {
    let mut out = Vec::new();
    for (n, inverted) in [(c.numer().abs(), false), (c.denom().abs(), true)] {
        let mut n = n;
        let one = BigInt::one();
        if n == one {
            continue;
        }
        let mut p = BigInt::from(2);
        let limit = BigInt::from(100_000);
        while &p * &p <= n && p <= limit {
            let mut mult = 0i64;
            while (&n % &p).is_zero() {
                n /= &p;
                mult += 1;
            }
            if mult > 0 {
                out.push((p.clone(), mult, inverted));
            }
            p += 1;
        }
        if n > one {
            out.push((n, 1, inverted));
        }
    }
    out
}

pub fn rat_powi(c: &Rat, n: &BigInt) -> Rat {
    let mut exp = n.abs().to_u64().expect("exponent too large");
    let mut base = c.clone();
    let mut acc = Rat::one();
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= &base;
        }
        let sq = &base * &base;
        base = sq;
        exp >>= 1;
    }
    if n.is_negative() {
        Rat::one() / acc
    } else {
        acc
    }
}
