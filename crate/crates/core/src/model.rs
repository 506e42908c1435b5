//! Domain types for the PDE family u_t = -[K(u)u_xxx]_x + [D(u)u_x]_x + F(u):
//! structured coefficient triplets, the three equivalent system forms, and
//! parameter instantiation.

use crate::rat::{parse_rat, render_rat, rint, Rat};
use crate::symexpr::{subst_symbols, total_derivative, Dep, Expr, ExprError, Indep, Jet, Slot};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("K must not be identically zero")]
    ZeroK,
    #[error("missing parameter '{0}'")]
    MissingParam(String),
    #[error("triplet still carries symbolic parameters; instantiate first")]
    SymbolicTriplet,
    #[error("problem file: {0}")]
    Schema(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A rational value or a named parameter to be sampled later.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RatOrParam {
    Rat(Rat),
    Param(String),
}

impl RatOrParam {
    pub fn rat(&self) -> Option<&Rat> {
        match self {
            RatOrParam::Rat(r) => Some(r),
            RatOrParam::Param(_) => None,
        }
    }

    fn resolve(&self, s: &ParamSample) -> Result<Rat, ModelError> {
        match self {
            RatOrParam::Rat(r) => Ok(r.clone()),
            RatOrParam::Param(p) => s
                .0
                .get(p)
                .cloned()
                .ok_or_else(|| ModelError::MissingParam(p.clone())),
        }
    }
}

impl fmt::Display for RatOrParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatOrParam::Rat(r) => write!(f, "{}", render_rat(r)),
            RatOrParam::Param(p) => write!(f, "{p}"),
        }
    }
}

/// One coefficient function of the triplet, restricted to the parametric
/// families the classification ranges over.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefFn {
    Zero,
    /// c
    Constant { c: Rat },
    /// c·(u+shift)^exponent
    PowerShifted {
        c: Rat,
        shift: Rat,
        exponent: RatOrParam,
    },
    /// c·e^(rate·u)
    ExpLaw { c: Rat, rate: RatOrParam },
    /// l1·u + l0
    Linear { l1: Rat, l0: Rat },
    /// l·(u+g)·ln(u+g) + l1·u + l0  (reaction term only)
    LogForm { l: Rat, g: Rat, l1: Rat, l0: Rat },
    /// c·(u+shift)^exponent + l1·(u+shift)  (reaction term of the power branch)
    PowerPlusLinear {
        c: Rat,
        shift: Rat,
        exponent: RatOrParam,
        l1: Rat,
    },
    /// Arbitrary smooth coefficient, given as an expression in u.
    Custom { expr: Expr },
}

impl CoefFn {
    pub fn constant(c: Rat) -> Self {
        if c.is_zero() {
            CoefFn::Zero
        } else {
            CoefFn::Constant { c }
        }
    }

    /// u^e with unit coefficient and no shift.
    pub fn power(e: Rat) -> Self {
        CoefFn::PowerShifted {
            c: Rat::one(),
            shift: Rat::zero(),
            exponent: RatOrParam::Rat(e),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CoefFn::Zero)
    }

    /// No symbolic parameters left.
    pub fn is_concrete(&self) -> bool {
        match self {
            CoefFn::PowerShifted { exponent, .. } | CoefFn::PowerPlusLinear { exponent, .. } => {
                exponent.rat().is_some()
            }
            CoefFn::ExpLaw { rate, .. } => rate.rat().is_some(),
            _ => true,
        }
    }

    /// The coefficient as a kernel expression in u. Requires concreteness.
    pub fn to_expr(&self) -> Result<Expr, ModelError> {
        let u = Expr::u();
        Ok(match self {
            CoefFn::Zero => Expr::zero(),
            CoefFn::Constant { c } => Expr::num(c.clone()),
            CoefFn::PowerShifted { c, shift, exponent } => {
                let e = exponent.rat().ok_or(ModelError::SymbolicTriplet)?;
                u.add(&Expr::num(shift.clone())).pow(e)?.scale(c)
            }
            CoefFn::ExpLaw { c, rate } => {
                let r = rate.rat().ok_or(ModelError::SymbolicTriplet)?;
                Expr::exp(u.scale(r)).scale(c)
            }
            CoefFn::Linear { l1, l0 } => u.scale(l1).add(&Expr::num(l0.clone())),
            CoefFn::LogForm { l, g, l1, l0 } => {
                let ug = u.add(&Expr::num(g.clone()));
                ug.mul(&Expr::ln(ug.clone())).scale(l).add(&u.scale(l1)).add(&Expr::num(l0.clone()))
            }
            CoefFn::PowerPlusLinear {
                c,
                shift,
                exponent,
                l1,
            } => {
                let e = exponent.rat().ok_or(ModelError::SymbolicTriplet)?;
                let us = u.add(&Expr::num(shift.clone()));
                us.pow(e)?.scale(c).add(&us.scale(l1))
            }
            CoefFn::Custom { expr } => expr.clone(),
        })
    }

    fn instantiate(
        &self,
        s: &ParamSample,
        notes: &mut Vec<String>,
        slot: &str,
    ) -> Result<CoefFn, ModelError> {
        Ok(match self {
            CoefFn::PowerShifted { c, shift, exponent } => {
                let e = exponent.resolve(s)?;
                if e.is_zero() {
                    notes.push(format!("{slot}: power exponent degenerated to 0 (constant)"));
                    CoefFn::constant(c.clone())
                } else {
                    CoefFn::PowerShifted {
                        c: c.clone(),
                        shift: shift.clone(),
                        exponent: RatOrParam::Rat(e),
                    }
                }
            }
            CoefFn::ExpLaw { c, rate } => {
                let r = rate.resolve(s)?;
                if r.is_zero() {
                    notes.push(format!(
                        "{slot}: exponential rate degenerated to 0 (constant)"
                    ));
                    CoefFn::constant(c.clone())
                } else {
                    CoefFn::ExpLaw {
                        c: c.clone(),
                        rate: RatOrParam::Rat(r),
                    }
                }
            }
            CoefFn::PowerPlusLinear {
                c,
                shift,
                exponent,
                l1,
            } => {
                let e = exponent.resolve(s)?;
                CoefFn::PowerPlusLinear {
                    c: c.clone(),
                    shift: shift.clone(),
                    exponent: RatOrParam::Rat(e),
                    l1: l1.clone(),
                }
            }
            other => other.clone(),
        })
    }
}

/// The coefficient triplet (K, D, F). K is never identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Triplet {
    pub k: CoefFn,
    pub d: CoefFn,
    pub f: CoefFn,
}

impl Triplet {
    pub fn new(k: CoefFn, d: CoefFn, f: CoefFn) -> Result<Self, ModelError> {
        if k.is_zero() {
            return Err(ModelError::ZeroK);
        }
        Ok(Triplet { k, d, f })
    }

    pub fn is_concrete(&self) -> bool {
        self.k.is_concrete() && self.d.is_concrete() && self.f.is_concrete()
    }
}

/// Parameter sample: name -> exact rational.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSample(pub BTreeMap<String, Rat>);

impl ParamSample {
    pub fn of(pairs: &[(&str, Rat)]) -> Self {
        ParamSample(
            pairs
                .iter()
                .map(|(n, r)| (n.to_string(), r.clone()))
                .collect(),
        )
    }

    pub fn get(&self, name: &str) -> Option<&Rat> {
        self.0.get(name)
    }
}

/// Instantiation result: concrete triplet plus degeneration notes.
#[derive(Clone, Debug)]
pub struct Instantiated {
    pub triplet: Triplet,
    pub degenerations: Vec<String>,
}

/// Substitutes sampled parameter values into the triplet. Structure is
/// preserved; degenerations (zero exponent/rate) are flagged, not hidden.
pub fn instantiate(tr: &Triplet, s: &ParamSample) -> Result<Instantiated, ModelError> {
    let mut notes = Vec::new();
    let k = tr.k.instantiate(s, &mut notes, "K")?;
    let d = tr.d.instantiate(s, &mut notes, "D")?;
    let f = tr.f.instantiate(s, &mut notes, "F")?;
    Ok(Instantiated {
        triplet: Triplet::new(k, d, f)?,
        degenerations: notes,
    })
}

/// Which equivalent form the PDE family is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemForm {
    /// The single fourth-order scalar equation.
    Scalar,
    /// S1 in (u, v) plus u_xx - v = 0.
    Pair,
    /// S1 plus the bookkeeping equations u_x - w = 0 and w_x - v = 0.
    Triple,
}

impl fmt::Display for SystemForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemForm::Scalar => "scalar",
            SystemForm::Pair => "pair",
            SystemForm::Triple => "triple",
        })
    }
}

/// The PDE family as manifold equations, flux terms differentiated out.
#[derive(Clone, Debug)]
pub struct PDESystem {
    pub form: SystemForm,
    pub triplet: Triplet,
    /// S_i, each required to vanish on solutions.
    pub equations: Vec<Expr>,
    /// Jet each equation is solved for before residual splitting.
    pub leading: Vec<Jet>,
}

/// Builds the expanded system for a concrete triplet:
/// -[K v_x]_x = -K'u_x v_x - K v_xx and [D u_x]_x = D'u_x^2 + D u_xx.
pub fn build_system(tr: &Triplet, form: SystemForm) -> Result<PDESystem, ModelError> {
    let k = tr.k.to_expr()?;
    let d = tr.d.to_expr()?;
    let f = tr.f.to_expr()?;
    let dx = |e: &Expr| total_derivative(e, Indep::X);

    let third = match form {
        SystemForm::Scalar => Expr::jet(Dep::U, 0, 3),
        _ => Expr::jet(Dep::V, 0, 1),
    };
    let flux4 = dx(&k.mul(&third))?;
    let flux2 = dx(&d.mul(&Expr::jet(Dep::U, 0, 1)))?;
    let s1 = Expr::jet(Dep::U, 1, 0).neg().sub(&flux4).add(&flux2).add(&f);

    let (equations, leading) = match form {
        SystemForm::Scalar => (vec![s1], vec![Jet::new(Dep::U, 1, 0)]),
        SystemForm::Pair => (
            vec![s1, Expr::jet(Dep::U, 0, 2).sub(&Expr::v())],
            vec![Jet::new(Dep::U, 1, 0), Jet::new(Dep::U, 0, 2)],
        ),
        SystemForm::Triple => (
            vec![
                s1,
                Expr::jet(Dep::U, 0, 1).sub(&Expr::w()),
                Expr::jet(Dep::W, 0, 1).sub(&Expr::v()),
            ],
            vec![
                Jet::new(Dep::U, 1, 0),
                Jet::new(Dep::U, 0, 1),
                Jet::new(Dep::W, 0, 1),
            ],
        ),
    };
    Ok(PDESystem {
        form,
        triplet: tr.clone(),
        equations,
        leading,
    })
}

/// Rewrites a pair- or triple-form equation back onto u-jets (v = u_xx, w = u_x).
pub fn eliminate_auxiliaries(e: &Expr) -> Result<Expr, ModelError> {
    Ok(subst_symbols(e, &|s| match s {
        Slot::Jet(j) if j.dep == Dep::V => Some(Expr::jet(Dep::U, j.dt, j.dx + 2)),
        Slot::Jet(j) if j.dep == Dep::W => Some(Expr::jet(Dep::U, j.dt, j.dx + 1)),
        _ => None,
    })?)
}

// ---------------------------------------------------------------------------
// Problem-file schema: one JSON document per problem. Rationals must be exact
// (integers or "p/q" strings); floats are rejected.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Problem {
    pub triplet: Triplet,
    pub params: ParamSample,
    pub form: SystemForm,
}

fn value_rat(v: &serde_json::Value, key: &str) -> Result<Rat, ModelError> {
    match v {
        serde_json::Value::String(s) => {
            parse_rat(s).map_err(|e| ModelError::Schema(format!("{key}: {e}")))
        }
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(rint(i))
            } else {
                Err(ModelError::Schema(format!(
                    "{key}: floats are rejected; write exact rationals as \"p/q\""
                )))
            }
        }
        other => Err(ModelError::Schema(format!(
            "{key}: expected rational, found {other}"
        ))),
    }
}

fn value_rat_or_param(v: &serde_json::Value, key: &str) -> Result<RatOrParam, ModelError> {
    match v {
        serde_json::Value::String(s) => match parse_rat(s) {
            Ok(r) => Ok(RatOrParam::Rat(r)),
            Err(_) => {
                if !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_') {
                    Ok(RatOrParam::Param(s.clone()))
                } else {
                    Err(ModelError::Schema(format!(
                        "{key}: '{s}' is neither a rational nor a parameter name"
                    )))
                }
            }
        },
        serde_json::Value::Number(_) => Ok(RatOrParam::Rat(value_rat(v, key)?)),
        other => Err(ModelError::Schema(format!(
            "{key}: expected rational or parameter name, found {other}"
        ))),
    }
}

fn coef_from_value(v: &serde_json::Value, slot: &str) -> Result<CoefFn, ModelError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ModelError::Schema(format!("{slot}: expected an object")))?;
    let family = obj
        .get("family")
        .and_then(|f| f.as_str())
        .ok_or_else(|| ModelError::Schema(format!("{slot}: missing 'family'")))?;
    let get = |k: &str| obj.get(k);
    let rat_field = |k: &str, default: Option<Rat>| -> Result<Rat, ModelError> {
        match get(k) {
            Some(v) => value_rat(v, &format!("{slot}.{k}")),
            None => default.ok_or_else(|| ModelError::Schema(format!("{slot}: missing '{k}'"))),
        }
    };
    let need = |k: &str| -> Result<&serde_json::Value, ModelError> {
        get(k).ok_or_else(|| ModelError::Schema(format!("{slot}: missing '{k}'")))
    };
    Ok(match family {
        "zero" => CoefFn::Zero,
        "constant" => CoefFn::constant(rat_field("coefficient", None)?),
        "power" => CoefFn::PowerShifted {
            c: rat_field("coefficient", Some(Rat::one()))?,
            shift: rat_field("shift", Some(Rat::zero()))?,
            exponent: value_rat_or_param(need("exponent")?, &format!("{slot}.exponent"))?,
        },
        "exp" => CoefFn::ExpLaw {
            c: rat_field("coefficient", Some(Rat::one()))?,
            rate: value_rat_or_param(need("rate")?, &format!("{slot}.rate"))?,
        },
        "linear" => CoefFn::Linear {
            l1: rat_field("l1", Some(Rat::zero()))?,
            l0: rat_field("l0", Some(Rat::zero()))?,
        },
        "log" => CoefFn::LogForm {
            l: rat_field("l", None)?,
            g: rat_field("gamma", Some(Rat::zero()))?,
            l1: rat_field("l1", Some(Rat::zero()))?,
            l0: rat_field("l0", Some(Rat::zero()))?,
        },
        "power_linear" => CoefFn::PowerPlusLinear {
            c: rat_field("coefficient", Some(Rat::one()))?,
            shift: rat_field("shift", Some(Rat::zero()))?,
            exponent: value_rat_or_param(need("exponent")?, &format!("{slot}.exponent"))?,
            l1: rat_field("l1", None)?,
        },
        "custom" => {
            let src = get("expr").and_then(|e| e.as_str()).ok_or_else(|| {
                ModelError::Schema(format!("{slot}: custom family needs an 'expr' string"))
            })?;
            CoefFn::Custom {
                expr: crate::symexpr::parse(src)?,
            }
        }
        other => {
            return Err(ModelError::Schema(format!(
                "{slot}: unknown family '{other}'"
            )))
        }
    })
}

pub fn problem_from_json(text: &str) -> Result<Problem, ModelError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| ModelError::Schema("top level must be an object".into()))?;
    let k = coef_from_value(
        obj.get("K")
            .ok_or_else(|| ModelError::Schema("missing 'K'".into()))?,
        "K",
    )?;
    let d = match obj.get("D") {
        Some(v) => coef_from_value(v, "D")?,
        None => CoefFn::Zero,
    };
    let f = match obj.get("F") {
        Some(v) => coef_from_value(v, "F")?,
        None => CoefFn::Zero,
    };
    let mut params = ParamSample::default();
    if let Some(p) = obj.get("params") {
        let pobj = p
            .as_object()
            .ok_or_else(|| ModelError::Schema("'params' must be an object".into()))?;
        for (name, val) in pobj {
            params
                .0
                .insert(name.clone(), value_rat(val, &format!("params.{name}"))?);
        }
    }
    let form = match obj.get("form").and_then(|f| f.as_str()).unwrap_or("pair") {
        "scalar" => SystemForm::Scalar,
        "pair" => SystemForm::Pair,
        "triple" => SystemForm::Triple,
        other => {
            return Err(ModelError::Schema(format!(
                "form must be scalar|pair|triple, found '{other}'"
            )))
        }
    };
    Ok(Problem {
        triplet: Triplet::new(k, d, f)?,
        params,
        form,
    })
}

/// Convenience constructor for the power-law triplet of Table 1 case 3:
/// (u^gamma, d·u^mu, lambda·u^(2mu-gamma+1)).
pub fn case3_triplet(gamma: &Rat, mu: &Rat, d: &Rat, lambda: &Rat) -> Triplet {
    let f_exp = Rat::from_integer(2.into()) * mu - gamma + Rat::one();
    Triplet {
        k: CoefFn::power(gamma.clone()),
        d: if d.is_zero() {
            CoefFn::Zero
        } else {
            CoefFn::PowerShifted {
                c: d.clone(),
                shift: Rat::zero(),
                exponent: RatOrParam::Rat(mu.clone()),
            }
        },
        f: if lambda.is_zero() {
            CoefFn::Zero
        } else {
            CoefFn::PowerShifted {
                c: lambda.clone(),
                shift: Rat::zero(),
                exponent: RatOrParam::Rat(f_exp),
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rq;
    use crate::symexpr::parse;

    #[test]
    fn pair_system_matches_expanded_form() {
        // (u^3, u, lambda u^0) with mu=1, gamma=3, d=1, lambda=1: exponent 2*1-3+1 = 0
        let tr = case3_triplet(&rint(3), &rint(1), &rint(1), &rint(1));
        let sys = build_system(&tr, SystemForm::Pair).unwrap();
        let s1 = parse("-u_t - 3*u^2*u_x*v_x - u^3*v_xx + u_x^2 + u*u_xx + 1").unwrap();
        assert_eq!(sys.equations[0], s1);
        assert_eq!(sys.equations[1], parse("u_xx - v").unwrap());
    }

    #[test]
    fn simple_pair_system_table1_case8() {
        let tr = Triplet::new(CoefFn::constant(rint(1)), CoefFn::Zero, CoefFn::Zero).unwrap();
        let sys = build_system(&tr, SystemForm::Pair).unwrap();
        assert_eq!(sys.equations[0], parse("-u_t - v_xx").unwrap());
    }

    #[test]
    fn zero_k_rejected() {
        assert!(matches!(
            Triplet::new(CoefFn::Zero, CoefFn::Zero, CoefFn::Zero),
            Err(ModelError::ZeroK)
        ));
    }

    #[test]
    fn elimination_reproduces_scalar_form() {
        let shifted = Triplet::new(
            CoefFn::PowerShifted {
                c: rint(2),
                shift: rint(1),
                exponent: RatOrParam::Rat(rq(3, 2)),
            },
            CoefFn::constant(rq(1, 2)),
            CoefFn::Linear {
                l1: rint(2),
                l0: rint(-1),
            },
        )
        .unwrap();
        for tr in [
            case3_triplet(&rint(3), &rint(1), &rint(1), &rint(1)),
            case3_triplet(&rint(2), &rint(2), &rint(-1), &rint(3)),
            shifted,
        ] {
            let scalar = build_system(&tr, SystemForm::Scalar).unwrap();
            for form in [SystemForm::Pair, SystemForm::Triple] {
                let sys = build_system(&tr, form).unwrap();
                let back = eliminate_auxiliaries(&sys.equations[0]).unwrap();
                assert_eq!(back, scalar.equations[0], "form {form}");
                for eq in &sys.equations[1..] {
                    assert!(eliminate_auxiliaries(eq).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn instantiate_resolves_and_flags() {
        let tr = Triplet::new(
            CoefFn::PowerShifted {
                c: rint(1),
                shift: rint(0),
                exponent: RatOrParam::Param("gamma".into()),
            },
            CoefFn::ExpLaw {
                c: rint(1),
                rate: RatOrParam::Param("mu".into()),
            },
            CoefFn::Zero,
        )
        .unwrap();
        let s = ParamSample::of(&[("gamma", rint(3)), ("mu", rint(0))]);
        let out = instantiate(&tr, &s).unwrap();
        assert_eq!(out.triplet.k, CoefFn::power(rint(3)));
        assert_eq!(out.triplet.d, CoefFn::Constant { c: rint(1) });
        assert_eq!(out.degenerations.len(), 1);
        let bad = ParamSample::of(&[("gamma", rint(3))]);
        assert!(matches!(
            instantiate(&tr, &bad),
            Err(ModelError::MissingParam(p)) if p == "mu"
        ));
    }

    #[test]
    fn problem_file_parsing_and_float_rejection() {
        let text = r#"{
            "K": {"family": "power", "exponent": "gamma"},
            "D": {"family": "power", "coefficient": "5", "exponent": "mu"},
            "F": {"family": "power", "coefficient": "-2/3", "exponent": "2"},
            "params": {"gamma": "3", "mu": 2},
            "form": "pair"
        }"#;
        let pb = problem_from_json(text).unwrap();
        assert_eq!(pb.params.get("gamma"), Some(&rint(3)));
        assert_eq!(pb.form, SystemForm::Pair);
        let bad = r#"{"K": {"family": "power", "exponent": 1.5}}"#;
        assert!(matches!(problem_from_json(bad), Err(ModelError::Schema(_))));
    }
}
