//! Rendering of command results in text, JSON and CSV. Reports are
//! deterministic for equal inputs and seed (wall time goes to stderr only).

use gtfe_core::classify::{ClassificationResult, TransformConstants};
use gtfe_core::exact::RootReport;
use gtfe_core::model::ParamSample;
use gtfe_core::numerics::pde::{SimResult, Termination};
use gtfe_core::numerics::SimConfig;
use gtfe_core::prolong::{DeterminingSystem, VerifyReport};
use gtfe_core::rat::render_rat;
use gtfe_core::reduce::{AnsatzMaps, ReducedODE, ReductionCase, ReductionVerdict};
use gtfe_core::verify::SweepReport;
use serde_json::{json, Value};

#[derive(Clone, Copy, PartialEq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

pub fn params_json(p: &ParamSample) -> String {
    let map: serde_json::Map<String, Value> = p
        .0
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(render_rat(v))))
        .collect();
    Value::Object(map).to_string()
}

fn constants_json(c: &TransformConstants) -> Value {
    json!({
        "C0": render_rat(&c.c0),
        "C1": render_rat(&c.c1),
        "C2": render_rat(&c.c2),
        "C3": render_rat(&c.c3),
        "C4": render_rat(&c.c4),
        "C5": render_rat(&c.c5),
        "C6": c.c6.to_string(),
        "C7": render_rat(&c.c7),
        "B": render_rat(&c.b),
        "C8": render_rat(&c.c8),
        "C9": c.c9.to_string(),
        "C10": render_rat(&c.c10),
    })
}

pub fn classification(r: &ClassificationResult, f: Format) {
    let c = r.transform.constants();
    match f {
        Format::Json | Format::Csv => {
            let gens: Vec<Value> = r
                .generators
                .iter()
                .map(|g| {
                    json!({
                        "name": g.name,
                        "xi0": g.field.xi0.to_string(),
                        "xi1": g.field.xi1.to_string(),
                        "eta1": g.field.eta(gtfe_core::Dep::U).to_string(),
                        "eta2": g.field.eta(gtfe_core::Dep::V).to_string(),
                    })
                })
                .collect();
            let restrictions: Vec<Value> = r
                .restrictions
                .iter()
                .map(|x| json!({"restriction": x.what, "satisfied": x.satisfied}))
                .collect();
            println!(
                "{}",
                json!({
                    "case": r.case.to_string(),
                    "params": serde_json::from_str::<Value>(&params_json(&r.params)).unwrap(),
                    "transform": constants_json(&c),
                    "transform_is_identity": r.transform.is_identity(),
                    "generators": gens,
                    "restrictions": restrictions,
                    "diagnostics": r.diagnostics,
                })
            );
        }
        Format::Text => {
            println!("classification: {}", r.case);
            if !r.params.0.is_empty() {
                let ps: Vec<String> = r
                    .params
                    .0
                    .iter()
                    .map(|(k, v)| format!("{k} = {}", render_rat(v)))
                    .collect();
                println!("parameters: {}", ps.join(", "));
            }
            if r.transform.is_identity() {
                println!("transform: identity");
            } else {
                println!("transform (t -> C0 t + C1 e^(C2 t), x -> C3 x, u -> C4 + C5 t + C6 e^(C7 t)(u + B), v -> C8 + C9 e^(C10 t) v):");
                println!(
                    "  C0={} C1={} C2={} C3={} C4={} C5={} C6={} C7={} B={} C8={} C9={} C10={}",
                    render_rat(&c.c0),
                    render_rat(&c.c1),
                    render_rat(&c.c2),
                    render_rat(&c.c3),
                    render_rat(&c.c4),
                    render_rat(&c.c5),
                    c.c6,
                    render_rat(&c.c7),
                    render_rat(&c.b),
                    render_rat(&c.c8),
                    c.c9,
                    render_rat(&c.c10),
                );
            }
            println!("generators:");
            for g in &r.generators {
                println!(
                    "  {}: xi0 = {}, xi1 = {}, eta1 = {}, eta2 = {}",
                    g.name,
                    g.field.xi0,
                    g.field.xi1,
                    g.field.eta(gtfe_core::Dep::U),
                    g.field.eta(gtfe_core::Dep::V)
                );
            }
            for x in &r.restrictions {
                println!(
                    "restriction: {} [{}]",
                    x.what,
                    if x.satisfied { "ok" } else { "VIOLATED" }
                );
            }
            for d in &r.diagnostics {
                println!("note: {d}");
            }
        }
    }
}

pub fn determining_system(ds: &DeterminingSystem, f: Format) {
    match f {
        Format::Json => {
            let eqs: Vec<Value> = ds
                .all_equations()
                .iter()
                .map(|e| json!({"tag": e.tag, "equation": e.rendered()}))
                .collect();
            println!("{}", json!({"form": ds.form.to_string(), "equations": eqs}));
        }
        Format::Csv => {
            println!("tag,equation");
            for e in ds.all_equations() {
                println!("{},\"{}\"", e.tag, e.rendered());
            }
        }
        Format::Text => {
            println!("determining system ({} form):", ds.form);
            println!("structural:");
            for e in &ds.facts {
                println!("  [{}]  {}", e.tag, e.rendered());
            }
            println!("closure:");
            for e in &ds.closures {
                println!("  [{}]  {}", e.tag, e.rendered());
            }
            println!("classification:");
            for e in &ds.classification {
                println!("  [{}]  {}", e.tag, e.rendered());
            }
            if !ds.residue.is_empty() {
                println!("residue (not reduced to the explicit form):");
                for e in &ds.residue {
                    println!("  [{}]  {}", e.tag, e.rendered());
                }
            }
        }
    }
}

pub fn sweep(rep: &SweepReport, f: Format) {
    match f {
        Format::Json => {
            let rows: Vec<Value> = rep
                .rows
                .iter()
                .map(|r| {
                    let checks: Vec<Value> = r
                        .checks
                        .iter()
                        .map(|c| {
                            json!({
                                "sample": c.sample,
                                "generator": c.generator,
                                "method": c.method,
                                "residual": c.residual,
                                "pass": c.pass,
                            })
                        })
                        .collect();
                    json!({
                        "row": r.row,
                        "samples": r.samples,
                        "classified_as_row": r.classified_as_row,
                        "commutators_closed": r.commutators_closed,
                        "checks": checks,
                    })
                })
                .collect();
            println!("{}", json!({"table1": rows, "all_pass": rep.all_pass()}));
        }
        _ => {
            for r in &rep.rows {
                let pass = r.checks.iter().filter(|c| c.pass).count();
                let sym = r
                    .checks
                    .iter()
                    .filter(|c| c.method == "symbolic")
                    .count();
                println!(
                    "row {}: {}/{} generator checks pass ({} symbolic), commutators closed: {}, classification: {}",
                    r.row,
                    pass,
                    r.checks.len(),
                    sym,
                    r.commutators_closed,
                    if r.classified_as_row { "ok" } else { "WRONG" }
                );
                for c in r.checks.iter().filter(|c| !c.pass) {
                    println!(
                        "  FAIL sample {} generator {}: residual {:.3e}",
                        c.sample, c.generator, c.residual
                    );
                }
            }
            println!("table 1 verdict: {}", if rep.all_pass() { "PASS" } else { "FAIL" });
        }
    }
}

pub fn problem_verification(
    r: &ClassificationResult,
    checks: &[(String, VerifyReport, bool)],
    f: Format,
) {
    match f {
        Format::Json => {
            let list: Vec<Value> = checks
                .iter()
                .map(|(name, rep, ok)| {
                    json!({"generator": name, "residual": rep.max_residual, "pass": ok})
                })
                .collect();
            println!(
                "{}",
                json!({"case": r.case.to_string(), "checks": list})
            );
        }
        _ => {
            println!("case: {}", r.case);
            for (name, rep, ok) in checks {
                println!(
                    "  {}: residual {:.3e} [{}]",
                    name,
                    rep.max_residual,
                    if *ok { "pass" } else { "FAIL" }
                );
            }
        }
    }
}

pub fn reduction(
    rc: &ReductionCase,
    maps: &AnsatzMaps,
    red: &ReducedODE,
    verdict: &ReductionVerdict,
    f: Format,
) {
    match f {
        Format::Json => {
            println!(
                "{}",
                json!({
                    "case": rc.tag.to_string(),
                    "omega": maps.omega.to_string(),
                    "u_map": maps.u_map.to_string(),
                    "v_map": maps.v_map.to_string(),
                    "psi_relation": red.psi_relation.to_string(),
                    "reduced_ode": red.ode.to_string(),
                    "printed_form": red.printed.to_string(),
                    "factor": red.factor.to_string(),
                    "first_order_dim": red.first_order_dim,
                    "verified": verdict.pass,
                    "notes": maps.notes,
                })
            );
        }
        _ => {
            println!("reduction case: {}", rc.tag);
            println!("invariant: omega = {}", maps.omega);
            println!("ansatz: u = {}", maps.u_map);
            println!("        v = {}", maps.v_map);
            println!("psi = {}", red.psi_relation);
            println!("reduced ODE: {} = 0", red.ode);
            println!("printed form matched with factor {}", red.factor);
            println!(
                "verification: {}",
                if verdict.pass { "PASS (symbolic)" } else { "FAIL" }
            );
            for n in &maps.notes {
                println!("note: {n}");
            }
        }
    }
}

pub fn catalog_list(rows: &[(&str, &str, usize)], f: Format) {
    match f {
        Format::Json => {
            let list: Vec<Value> = rows
                .iter()
                .map(|(id, title, n)| json!({"id": id, "title": title, "samples": n}))
                .collect();
            println!("{}", json!({"catalog": list}));
        }
        Format::Csv => {
            println!("id,title,samples");
            for (id, title, n) in rows {
                println!("{id},\"{title}\",{n}");
            }
        }
        Format::Text => {
            for (id, title, n) in rows {
                println!("{id:5} ({n} samples)  {title}");
            }
        }
    }
}

pub fn eval_point(entry: &str, p: &ParamSample, t: f64, x: f64, u: f64, v: f64, f: Format) {
    match f {
        Format::Json => {
            println!(
                "{}",
                json!({
                    "entry": entry,
                    "params": serde_json::from_str::<Value>(&params_json(p)).unwrap(),
                    "t": t, "x": x, "u": u, "v": v,
                })
            );
        }
        _ => println!("{entry} at (t, x) = ({t}, {x}): u = {u}, v = {v}"),
    }
}

type CheckRow = (String, usize, String, String, f64, bool);

pub fn check_report(rows: &[CheckRow], f: Format) {
    match f {
        Format::Json => {
            let list: Vec<Value> = rows
                .iter()
                .map(|(id, k, params, method, res, ok)| {
                    json!({
                        "entry_id": id,
                        "sample": k,
                        "param_json": serde_json::from_str::<Value>(params).unwrap(),
                        "method": method,
                        "max_residual": res,
                        "verdict": if *ok { "pass" } else { "FAIL" },
                    })
                })
                .collect();
            println!("{}", json!({"checks": list}));
        }
        _ => {
            println!("entry_id,param_json,method,max_residual,verdict");
            for (id, _k, params, method, res, ok) in rows {
                println!(
                    "{id},\"{}\",{method},{res:.3e},{}",
                    params.replace('"', "\"\""),
                    if *ok { "pass" } else { "FAIL" }
                );
            }
        }
    }
}

pub fn roots(entry: &str, p: &ParamSample, rep: &RootReport, f: Format) {
    match f {
        Format::Json => {
            println!(
                "{}",
                json!({
                    "entry": entry,
                    "params": serde_json::from_str::<Value>(&params_json(p)).unwrap(),
                    "variable": rep.variable,
                    "polynomial_low_to_high": rep.poly,
                    "admissible": rep.admissible,
                    "residuals": rep.residuals,
                    "complex_roots": rep.complex_roots,
                })
            );
        }
        _ => {
            println!("{entry} constraint in {}: coefficients (low to high) {:?}", rep.variable, rep.poly);
            for (a, r) in rep.admissible.iter().zip(&rep.residuals) {
                println!("  admissible: {a} (back-substitution residual {r:.2e})");
            }
        }
    }
}

pub fn simulation(
    entry: &str,
    cfg: &SimConfig,
    sim: &SimResult,
    tstar: Option<f64>,
    artifacts: &[String],
    f: Format,
) {
    let term = match &sim.termination {
        Termination::Completed => "completed".to_string(),
        Termination::BlowUp { t } => format!("blow-up detected at t = {t}"),
        Termination::StepUnderflow { t } => format!("step underflow at t = {t}"),
        Termination::DomainViolation { t, what } => format!("domain violation at t = {t}: {what}"),
    };
    match f {
        Format::Json => {
            println!(
                "{}",
                json!({
                    "entry": entry,
                    "grid": cfg.n,
                    "span": [cfg.t0, cfg.t1],
                    "interval": [cfg.a, cfg.b],
                    "steps": sim.steps,
                    "termination": term,
                    "max_sup_error": sim.max_sup_error,
                    "blowup_t": tstar,
                    "artifacts": artifacts,
                })
            );
        }
        _ => {
            println!(
                "simulate {entry}: N = {}, x in [{}, {}], t in [{}, {}]",
                cfg.n, cfg.a, cfg.b, cfg.t0, cfg.t1
            );
            println!("steps: {}, termination: {}", sim.steps, term);
            if let Some(e) = sim.max_sup_error {
                println!("max sup error vs exact: {e:.3e}");
            }
            if let Some(t) = tstar {
                println!("blow-up bracketed at t* = {t:.6}");
            }
            for a in artifacts {
                println!("wrote {a}");
            }
        }
    }
}

pub fn convergence(entry: &str, errors: &[(usize, f64)], orders: &[(usize, Option<f64>)], f: Format) {
    match f {
        Format::Json => {
            let errs: Vec<Value> = errors
                .iter()
                .map(|(n, e)| json!({"n": n, "sup_error": e}))
                .collect();
            let ords: Vec<Value> = orders
                .iter()
                .map(|(n, p)| json!({"n": n, "order": p}))
                .collect();
            println!("{}", json!({"entry": entry, "errors": errs, "orders": ords}));
        }
        _ => {
            println!("convergence study for {entry}:");
            for (n, e) in errors {
                println!("  N = {n}: sup error {e:.4e}");
            }
            for (n, p) in orders {
                match p {
                    Some(p) => println!("  order N={n} -> 2N: {p:.3}"),
                    None => println!("  order N={n} -> 2N: below round-off floor"),
                }
            }
        }
    }
}
