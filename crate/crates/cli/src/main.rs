//! `gtfe` — symmetry classification, reduction and verification for the
//! generalized thin film equation family.
//!
//! Exit codes: 0 all checks pass; 1 a verification failed; 2 usage or input
//! error.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gtfe_core::classify::classify;
use gtfe_core::exact::{
    admissible_samples, build_entry, evaluate_solution, residual_check, solve_parameters,
    CheckMethod, CATALOG_IDS,
};
use gtfe_core::model::{instantiate, problem_from_json, ParamSample, SystemForm};
use gtfe_core::numerics::{detect_blowup, simulate, BoundaryMode, SimConfig};
use gtfe_core::prolong::derive_determining_system;
use gtfe_core::rat::{parse_rat, Rat};
use gtfe_core::reduce::{reduced_ode, select_reduction, verify_reduction};
use gtfe_core::verify::table1_sweep;
use output::Format;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gtfe", version, about = "Lie symmetries and exact solutions of the generalized thin film equation", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output format
    #[arg(long, global = true, default_value = "text")]
    format: FormatArg,
    /// Seed for all random probe points (equal seeds give byte-identical reports)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numeric verification tolerance
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory for written artifacts
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    #[value(alias = "json-like")]
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a problem file to its Table-1 case
    Classify {
        /// Problem file (JSON; exact rationals only)
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Derive and print the determining system for the general vector field
    Determine {
        /// System form
        #[arg(long, default_value = "pair")]
        form: FormArg,
        #[command(flatten)]
        common: Common,
    },
    /// Verify generators: the full Table-1 sweep or a single problem file
    Verify {
        /// Run the full 8-row Table-1 certification
        #[arg(long)]
        table1: bool,
        /// Verify the classified generators of one problem file
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Parameter samples per row
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Reduce the power-law system under a symmetry operator to an ODE
    Reduce {
        #[arg(long, value_parser = parse_rat_arg)]
        alpha1: Rat,
        #[arg(long, value_parser = parse_rat_arg)]
        alpha2: Rat,
        #[arg(long, value_parser = parse_rat_arg)]
        alpha3: Rat,
        #[arg(long, value_parser = parse_rat_arg)]
        gamma: Rat,
        #[arg(long, value_parser = parse_rat_arg)]
        mu: Rat,
        #[arg(long, value_parser = parse_rat_arg, default_value = "1")]
        d: Rat,
        #[arg(long, value_parser = parse_rat_arg, default_value = "0")]
        lambda: Rat,
        #[command(flatten)]
        common: Common,
    },
    /// Exact-solution catalog operations
    Exact {
        #[command(subcommand)]
        cmd: ExactCmd,
    },
    /// Simulate the PDE against an exact reference
    Simulate {
        #[arg(long)]
        entry: String,
        /// Canned admissible sample index
        #[arg(long, default_value_t = 0)]
        sample: usize,
        /// Parameter overrides name=p/q
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, Rat)>,
        #[arg(long, default_value_t = 201)]
        n: usize,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long, default_value = "dirichlet")]
        boundary: BoundaryArg,
        #[arg(long, default_value_t = 2.5)]
        cfl: f64,
        /// Sup-norm growth factor that counts as blow-up
        #[arg(long, default_value_t = 1e6)]
        blowup_factor: f64,
        /// Write profile snapshots as CSV
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Spatial convergence study against an exact reference
    Convergence {
        #[arg(long)]
        entry: String,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        /// Grids, e.g. 51,101,201 (each refining by 2x)
        #[arg(long, default_value = "51,101,201", value_delimiter = ',')]
        grids: Vec<usize>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ExactCmd {
    /// List the catalog entries
    List {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate an entry at a point
    Eval {
        #[arg(long)]
        entry: String,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, Rat)>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Certify entries by residual checks (CSV: entry_id, param_json, method, max_residual, verdict)
    Check {
        /// Entry to check (all when omitted)
        #[arg(long)]
        entry: Option<String>,
        /// Check a single canned sample instead of all
        #[arg(long)]
        sample: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve an entry's parameter constraint (quartic/quadratic roots)
    Roots {
        #[arg(long)]
        entry: String,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, Rat)>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Pair,
    Triple,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Dirichlet,
    Periodic,
}

fn parse_rat_arg(s: &str) -> Result<Rat, String> {
    parse_rat(s)
}

fn parse_kv(s: &str) -> Result<(String, Rat), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| "expected name=p/q".to_string())?;
    Ok((k.trim().to_string(), parse_rat(v)?))
}

fn merged_params(
    entry: &str,
    sample: usize,
    overrides: &[(String, Rat)],
) -> Result<ParamSample, String> {
    let samples = admissible_samples(entry).map_err(|e| e.to_string())?;
    let mut p = samples
        .get(sample)
        .cloned()
        .ok_or_else(|| format!("{entry} has {} canned samples", samples.len()))?;
    for (k, v) in overrides {
        p.0.insert(k.clone(), v.clone());
    }
    Ok(p)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    let result = run(cli);
    eprintln!("wall time: {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Classify { problem, common } => {
            let text = std::fs::read_to_string(&problem)
                .map_err(|e| format!("{}: {e}", problem.display()))?;
            let pb = problem_from_json(&text).map_err(|e| e.to_string())?;
            let inst = if pb.triplet.is_concrete() {
                pb.triplet.clone()
            } else if !pb.params.0.is_empty() {
                instantiate(&pb.triplet, &pb.params)
                    .map_err(|e| e.to_string())?
                    .triplet
            } else {
                pb.triplet.clone()
            };
            let r = classify(&inst).map_err(|e| e.to_string())?;
            output::classification(&r, common.format.into());
            Ok(true)
        }
        Command::Determine { form, common } => {
            let form = match form {
                FormArg::Pair => SystemForm::Pair,
                FormArg::Triple => SystemForm::Triple,
            };
            let ds = derive_determining_system(form).map_err(|e| e.to_string())?;
            output::determining_system(&ds, common.format.into());
            Ok(true)
        }
        Command::Verify {
            table1,
            problem,
            samples,
            common,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let mut pass = true;
            if table1 {
                let rep = table1_sweep(samples, common.tol, &mut rng).map_err(|e| e.to_string())?;
                output::sweep(&rep, common.format.into());
                pass &= rep.all_pass();
            }
            if let Some(path) = problem {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                let pb = problem_from_json(&text).map_err(|e| e.to_string())?;
                let tr = if pb.triplet.is_concrete() {
                    pb.triplet.clone()
                } else {
                    instantiate(&pb.triplet, &pb.params)
                        .map_err(|e| e.to_string())?
                        .triplet
                };
                let r = classify(&tr).map_err(|e| e.to_string())?;
                let normalized = r.normalized.clone();
                let mut checks = Vec::new();
                for g in &r.generators {
                    let rep = gtfe_core::prolong::verify_generator(
                        &normalized,
                        &ParamSample::default(),
                        &g.field,
                        SystemForm::Pair,
                        &mut rng,
                    )
                    .map_err(|e| e.to_string())?;
                    let ok = rep.max_residual <= common.tol;
                    pass &= ok;
                    checks.push((g.name.clone(), rep, ok));
                }
                output::problem_verification(&r, &checks, common.format.into());
            } else if !table1 {
                return Err("nothing to verify: pass --table1 and/or --problem".into());
            }
            Ok(pass)
        }
        Command::Reduce {
            alpha1,
            alpha2,
            alpha3,
            gamma,
            mu,
            d,
            lambda,
            common,
        } => {
            let rc = select_reduction(alpha1, alpha2, alpha3, gamma, mu)
                .map_err(|e| e.to_string())?;
            let maps = gtfe_core::reduce::build_ansatz(&rc).map_err(|e| e.to_string())?;
            let red = reduced_ode(&rc, &d, &lambda).map_err(|e| e.to_string())?;
            let verdict = verify_reduction(&rc, &d, &lambda).map_err(|e| e.to_string())?;
            output::reduction(&rc, &maps, &red, &verdict, common.format.into());
            Ok(verdict.pass)
        }
        Command::Exact { cmd } => run_exact(cmd),
        Command::Simulate {
            entry,
            sample,
            params,
            n,
            t0,
            t1,
            a,
            b,
            boundary,
            cfl,
            blowup_factor,
            csv,
            common,
        } => {
            let p = merged_params(&entry, sample, &params)?;
            let e = build_entry(&entry, &p).map_err(|err| err.to_string())?;
            let (rt0, rt1, ra, rb) = e.region;
            let cfg = SimConfig {
                a: a.unwrap_or(ra),
                b: b.unwrap_or(rb),
                n,
                boundary: match boundary {
                    BoundaryArg::Dirichlet => BoundaryMode::DirichletExact,
                    BoundaryArg::Periodic => BoundaryMode::Periodic,
                },
                t0: t0.unwrap_or(rt0),
                t1: t1.unwrap_or(rt1),
                cfl,
                harmonic_mean: false,
                blowup_factor,
                snapshots: 64,
            };
            let reference = gtfe_core::exact::reference_fn(&e);
            let sim = simulate(&e.triplet, &cfg, None, Some(&reference))
                .map_err(|err| err.to_string())?;
            let tstar = detect_blowup(&sim, blowup_factor);
            let mut artifacts = Vec::new();
            if csv {
                std::fs::create_dir_all(&common.out).map_err(|e| e.to_string())?;
                let path = common.out.join(format!("simulate_{entry}_{n}.csv"));
                let mut w = String::from("t,x,u,v,u_exact,error\n");
                for snap in &sim.snapshots {
                    for (i, &x) in sim.xs.iter().enumerate() {
                        let exact = reference(snap.t, x);
                        let (ue, err) = match exact {
                            Some((ue, _)) => (ue, (snap.u[i] - ue).abs()),
                            None => (f64::NAN, f64::NAN),
                        };
                        w.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            snap.t, x, snap.u[i], snap.v[i], ue, err
                        ));
                    }
                }
                std::fs::write(&path, w).map_err(|e| e.to_string())?;
                artifacts.push(path.display().to_string());
            }
            output::simulation(&entry, &cfg, &sim, tstar, &artifacts, common.format.into());
            Ok(true)
        }
        Command::Convergence {
            entry,
            sample,
            grids,
            t0,
            t1,
            common,
        } => {
            let p = merged_params(&entry, sample, &[])?;
            let e = build_entry(&entry, &p).map_err(|err| err.to_string())?;
            let (rt0, rt1, ra, rb) = e.region;
            let reference = gtfe_core::exact::reference_fn(&e);
            let mut errors = Vec::new();
            for &n in &grids {
                let cfg = SimConfig {
                    a: ra,
                    b: rb,
                    n,
                    boundary: BoundaryMode::DirichletExact,
                    t0: t0.unwrap_or(rt0),
                    t1: t1.unwrap_or(rt1),
                    cfl: 2.5,
                    harmonic_mean: false,
                    blowup_factor: 1e6,
                    snapshots: 8,
                };
                let sim = simulate(&e.triplet, &cfg, None, Some(&reference))
                    .map_err(|err| err.to_string())?;
                errors.push((n, sim.max_sup_error.unwrap_or(f64::NAN)));
            }
            let orders = gtfe_core::numerics::convergence_study(&errors);
            output::convergence(&entry, &errors, &orders, common.format.into());
            let _ = sample;
            Ok(true)
        }
    }
}

fn run_exact(cmd: ExactCmd) -> Result<bool, String> {
    match cmd {
        ExactCmd::List { common } => {
            let mut rows = Vec::new();
            for id in CATALOG_IDS {
                let samples = admissible_samples(id).map_err(|e| e.to_string())?;
                let e = build_entry(id, &samples[0]).map_err(|e| e.to_string())?;
                rows.push((id, e.title, samples.len()));
            }
            output::catalog_list(&rows, common.format.into());
            Ok(true)
        }
        ExactCmd::Eval {
            entry,
            sample,
            params,
            t,
            x,
            common,
        } => {
            let p = merged_params(&entry, sample, &params)?;
            let e = build_entry(&entry, &p).map_err(|e| e.to_string())?;
            let (u, v) = evaluate_solution(&e, t, x, None).map_err(|e| e.to_string())?;
            output::eval_point(&entry, &p, t, x, u, v, common.format.into());
            Ok(true)
        }
        ExactCmd::Check {
            entry,
            sample,
            common,
        } => {
            let ids: Vec<&str> = match &entry {
                Some(e) => vec![CATALOG_IDS
                    .iter()
                    .find(|id| **id == e.as_str())
                    .copied()
                    .ok_or_else(|| format!("unknown entry {e}"))?],
                None => CATALOG_IDS.to_vec(),
            };
            let mut all = true;
            let mut rows = Vec::new();
            for id in ids {
                let samples = admissible_samples(id).map_err(|e| e.to_string())?;
                let picked: Vec<(usize, &ParamSample)> = match sample {
                    Some(k) => vec![(
                        k,
                        samples
                            .get(k)
                            .ok_or_else(|| format!("{id} has {} samples", samples.len()))?,
                    )],
                    None => samples.iter().enumerate().collect(),
                };
                for (k, p) in picked {
                    let e = build_entry(id, p).map_err(|e| e.to_string())?;
                    let tol = if common.tol == 1e-10 { 1e-9 } else { common.tol };
                    let rep = residual_check(&e, tol).map_err(|e| e.to_string())?;
                    all &= rep.verdict;
                    let param_json = output::params_json(p);
                    let method = match rep.method {
                        CheckMethod::Symbolic => "symbolic".to_string(),
                        CheckMethod::NumericGrid { n } => format!("numeric[{n}x{n}]"),
                    };
                    rows.push((
                        id.to_string(),
                        k,
                        param_json,
                        method,
                        rep.max_s1.max(rep.max_s2),
                        rep.verdict,
                    ));
                }
            }
            output::check_report(&rows, common.format.into());
            Ok(all)
        }
        ExactCmd::Roots {
            entry,
            sample,
            params,
            common,
        } => {
            let p = merged_params(&entry, sample, &params)?;
            let rep = solve_parameters(&entry, &p).map_err(|e| e.to_string())?;
            output::roots(&entry, &p, &rep, common.format.into());
            Ok(true)
        }
    }
}
