//! `phl` — parse, run, analyze and certify `.phl` programs.
//!
//! Exit codes: 0 success / all requested checks pass; 1 a check failed;
//! 2 usage or parse error; 3 resource limit exceeded.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use phl::analysis::{
    adequacy_check, check_certificate, eval_bound, solve_expected_cost, AdequacyError, BoundError,
    CertError, NodeCost, PostPotential, PotentialCertificate, SolveError,
};
use phl::exec::{explore_graph, ExecError, Scheduler};
use phl::mc::{estimate, sample_run_trace, McError};
use phl::rat::{format_rat, parse_rat, rat_to_f64, Rat};
use phl::syntax::{parse_program, pretty, pretty_val, Binder, Expr, SyntaxError, Val};

/// Slack applied in the bound's favor when comparing an exact expectation
/// against a float-valued symbolic bound.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "phl", version, about = "Interpreter and expected-cost analyzer for .phl programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Program file (.phl)
    input: PathBuf,
    /// Substitute a top-level `let NAME := LITERAL in ...` binding
    #[arg(long = "define", value_name = "NAME=LITERAL")]
    defines: Vec<String>,
    /// Emit JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and print it back
    Parse {
        #[command(flatten)]
        common: Common,
    },
    /// Execute one seeded run with a trace
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[arg(long, default_value = "leftmost")]
        scheduler: Scheduler,
    },
    /// Dump the reachable-configuration graph as JSON
    Graph {
        #[command(flatten)]
        common: Common,
        /// Explore one scheduler's choices instead of all of them
        #[arg(long)]
        scheduler: Option<Scheduler>,
        #[arg(long, default_value_t = 100_000)]
        max_nodes: usize,
    },
    /// Exact expected total cost via graph exploration and solving
    Expect {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "leftmost")]
        scheduler: Scheduler,
        #[arg(long, default_value_t = 100_000)]
        max_nodes: usize,
        /// Symbolic bound to compare against, e.g. "2*n*(1 + log(4/3, n))"
        #[arg(long)]
        bound: Option<String>,
        /// Variable binding for --bound, e.g. n=4
        #[arg(long = "var", value_name = "NAME=VALUE")]
        vars: Vec<String>,
    },
    /// Check a potential certificate, or the truncated adequacy clauses
    Check {
        #[command(flatten)]
        common: Common,
        /// Potential certificate file (JSON keyed by graph node ids)
        #[arg(long, conflicts_with = "adequacy")]
        cert: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        max_nodes: usize,
        /// Check the adequacy clauses of the n-step truncation instead
        #[arg(long, requires = "steps", requires = "bound")]
        adequacy: bool,
        #[arg(long)]
        steps: Option<usize>,
        /// Expected-cost bound (exact rational, e.g. "2" or "16/1")
        #[arg(long)]
        bound: Option<String>,
        /// Value predicate applied to terminated main values,
        /// e.g. "rec _ v := v = ()"
        #[arg(long)]
        phi: Option<String>,
        /// Constant postcondition potential
        #[arg(long, default_value = "0")]
        post_default: String,
        #[arg(long, default_value = "leftmost")]
        scheduler: Scheduler,
        #[arg(long, default_value_t = 1_000_000)]
        max_support: usize,
    },
    /// Monte Carlo estimate of expected cost
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[arg(long, default_value = "leftmost")]
        scheduler: Scheduler,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("cannot read {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Resource(ExecError),
    #[error("{0}")]
    Cert(CertError),
    #[error("{0}")]
    Bound(#[from] BoundError),
    #[error("{0}")]
    Solve(SolveError),
    #[error("{0}")]
    Mc(#[from] McError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Resource(_) => 3,
            _ => 2,
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::NodeLimitExceeded(_) | ExecError::SupportLimitExceeded(_) => {
                CliError::Resource(e)
            }
            ExecError::NotScheduled => CliError::Usage(e.to_string()),
        }
    }
}

impl From<AdequacyError> for CliError {
    fn from(e: AdequacyError) -> Self {
        match e {
            AdequacyError::Exec(x) => x.into(),
            AdequacyError::BadPredicate(m) => CliError::Usage(m),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        CliError::Cert(e)
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Solve(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn load_program(common: &Common) -> Result<Expr, CliError> {
    let text = std::fs::read_to_string(&common.input)
        .map_err(|err| CliError::Io { path: common.input.clone(), err })?;
    let mut e = parse_program(&text)?;
    for def in &common.defines {
        let (name, lit_text) = def
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad --define `{def}`, want NAME=LITERAL")))?;
        let lit = parse_program(lit_text)?;
        let Expr::Val(lit) = lit else {
            return Err(CliError::Usage(format!("--define value `{lit_text}` is not a literal")));
        };
        e = apply_define(e, name, &lit)
            .ok_or_else(|| CliError::Usage(format!("no top-level `let {name} := <literal>`")))?;
    }
    Ok(e)
}

/// Rewrites the bound literal of the first matching binding in the
/// top-level chain of `let`s.
fn apply_define(e: Expr, name: &str, lit: &Val) -> Option<Expr> {
    let Expr::App(f, bound) = e else { return None };
    let Expr::Rec { fname: Binder::Anon, arg, body } = *f else { return None };
    if arg.binds(name) {
        if !bound.is_val() {
            return None;
        }
        let rebuilt = Expr::Rec { fname: Binder::Anon, arg, body };
        return Some(Expr::app(rebuilt, Expr::Val(lit.clone())));
    }
    let new_body = apply_define(*body, name, lit)?;
    Some(Expr::app(
        Expr::Rec { fname: Binder::Anon, arg, body: Box::new(new_body) },
        *bound,
    ))
}

fn parse_kv_f64(pairs: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut env = BTreeMap::new();
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad --var `{p}`, want NAME=VALUE")))?;
        let v = match parse_rat(v) {
            Ok(r) => rat_to_f64(&r),
            Err(_) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("bad numeric value in `{p}`")))?,
        };
        env.insert(k.to_string(), v);
    }
    Ok(env)
}

fn dispatch(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Parse { common } => cmd_parse(common),
        Cmd::Run { common, seed, max_steps, scheduler } => cmd_run(common, seed, max_steps, scheduler),
        Cmd::Graph { common, scheduler, max_nodes } => cmd_graph(common, scheduler, max_nodes),
        Cmd::Expect { common, scheduler, max_nodes, bound, vars } => {
            cmd_expect(common, scheduler, max_nodes, bound, vars)
        }
        Cmd::Check {
            common,
            cert,
            max_nodes,
            adequacy,
            steps,
            bound,
            phi,
            post_default,
            scheduler,
            max_support,
        } => {
            if adequacy {
                cmd_check_adequacy(
                    common,
                    steps.expect("clap enforces --steps"),
                    bound.expect("clap enforces --bound"),
                    phi,
                    post_default,
                    scheduler,
                    max_support,
                )
            } else if let Some(cert) = cert {
                cmd_check_cert(common, cert, max_nodes)
            } else {
                Err(CliError::Usage("check needs either --cert FILE or --adequacy".into()))
            }
        }
        Cmd::Sample { common, trials, seed, max_steps, scheduler } => {
            cmd_sample(common, trials, seed, max_steps, scheduler)
        }
    }
}

fn cmd_parse(common: Common) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let printed = pretty(&e);
    let reparsed = parse_program(&printed)?;
    assert_eq!(reparsed, e, "printer/parser round trip failed");
    if common.json {
        println!("{}", serde_json::to_string_pretty(&json!({ "pretty": printed })).unwrap());
    } else {
        println!("{printed}");
    }
    Ok(0)
}

fn cmd_run(common: Common, seed: u64, max_steps: usize, scheduler: Scheduler) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let (result, trace) = sample_run_trace(&e, seed, max_steps, &scheduler);
    let status = if result.terminated {
        "terminated"
    } else if result.stuck {
        "stuck"
    } else {
        "truncated"
    };
    if common.json {
        let out = json!({
            "seed": seed,
            "status": status,
            "steps": result.steps,
            "cost": format_rat(&result.config.cost),
            "main": result.config.main_value().map(pretty_val),
            "threads": result.config.threads.iter().map(pretty).collect::<Vec<_>>(),
            "trace": trace,
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        for t in &trace {
            println!("step {:>4} thread {} cost {:>3}  {}", t.step, t.thread, t.cost, t.redex);
        }
        println!(
            "{status} after {} steps, cost {}, main = {}",
            result.steps,
            format_rat(&result.config.cost),
            result.config.main_value().map(pretty_val).unwrap_or_else(|| "<running>".into()),
        );
    }
    Ok(if result.stuck { 1 } else { 0 })
}

fn cmd_graph(common: Common, scheduler: Option<Scheduler>, max_nodes: usize) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let g = explore_graph(&e, scheduler.as_ref(), phl::exec::ExploreLimits { max_nodes })?;
    println!("{}", serde_json::to_string_pretty(&g.to_json()).unwrap());
    Ok(0)
}

fn cmd_expect(
    common: Common,
    scheduler: Scheduler,
    max_nodes: usize,
    bound: Option<String>,
    vars: Vec<String>,
) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let g = explore_graph(&e, Some(&scheduler), phl::exec::ExploreLimits { max_nodes })?;
    let costs = solve_expected_cost(&g)?;
    let initial = &costs[0];

    let mut code = 0u8;
    let mut bound_report = serde_json::Value::Null;
    let outcome = match initial {
        NodeCost::Expected(r) => {
            if let Some(expr) = &bound {
                let env = parse_kv_f64(&vars)?;
                let limit = eval_bound(expr, &env)?;
                let ok = rat_to_f64(r) <= limit + BOUND_SLACK;
                if !ok {
                    code = 1;
                }
                bound_report = json!({ "expr": expr, "value": limit, "ok": ok });
            }
            json!({
                "expected_cost": format_rat(r),
                "expected_cost_decimal": rat_to_f64(r),
            })
        }
        NodeCost::Nonterminating => {
            code = 1;
            json!({ "nonterminating": true })
        }
        NodeCost::StuckReachable => {
            code = 1;
            json!({ "stuck_reachable": true })
        }
    };
    if common.json {
        let out = json!({
            "nodes": g.len(),
            "terminal_nodes": g.nodes.iter().filter(|n| n.terminal).count(),
            "result": outcome,
            "bound": bound_report,
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        match initial {
            NodeCost::Expected(r) => {
                println!("expected cost: {} (= {:?})", format_rat(r), rat_to_f64(r));
                if let Some(b) = bound_report.get("value") {
                    let ok = bound_report["ok"].as_bool().unwrap();
                    println!(
                        "bound {} = {:?}: {}",
                        bound.as_deref().unwrap_or(""),
                        b.as_f64().unwrap(),
                        if ok { "satisfied" } else { "VIOLATED" }
                    );
                }
            }
            NodeCost::Nonterminating => println!("nonterminating (termination probability < 1)"),
            NodeCost::StuckReachable => println!("stuck-reachable (progress violation possible)"),
        }
        println!("graph: {} nodes", g.len());
    }
    Ok(code)
}

fn cmd_check_cert(common: Common, cert_path: PathBuf, max_nodes: usize) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let cert_text = std::fs::read_to_string(&cert_path)
        .map_err(|err| CliError::Io { path: cert_path, err })?;
    let cert = PotentialCertificate::from_json(&cert_text)?;
    let g = explore_graph(&e, None, phl::exec::ExploreLimits { max_nodes })?;
    let report = check_certificate(&g, &cert)?;
    if common.json {
        println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
    } else if report.accepted {
        println!(
            "certificate accepted: bound {} covers all {} nodes",
            format_rat(&cert.claimed_bound),
            g.len()
        );
    } else {
        println!("certificate rejected:");
        for v in &report.violations {
            match &v.thread {
                Some(t) => println!(
                    "  node {} (thread {}): {} > {} [{}]",
                    v.node, t, v.lhs, v.rhs, v.kind
                ),
                None => println!("  node {}: {} > {} [{}]", v.node, v.lhs, v.rhs, v.kind),
            }
        }
    }
    Ok(if report.accepted { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_adequacy(
    common: Common,
    steps: usize,
    bound: String,
    phi: Option<String>,
    post_default: String,
    scheduler: Scheduler,
    max_support: usize,
) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let bound: Rat = parse_rat(&bound).map_err(|e| CliError::Usage(e.to_string()))?;
    let post = PostPotential::constant(
        parse_rat(&post_default).map_err(|e| CliError::Usage(e.to_string()))?,
    )
    .map_err(CliError::Usage)?;
    let phi = phi.map(|p| parse_program(&p)).transpose()?;
    let report = adequacy_check(&e, &bound, &post, phi.as_ref(), steps, &scheduler, max_support)?;
    if common.json {
        println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
    } else {
        println!(
            "postcondition: {}",
            if report.postcondition_ok {
                "ok".to_string()
            } else {
                format!("FAILED on {}", report.counterexample.as_deref().unwrap_or("?"))
            }
        );
        println!(
            "progress:      {}",
            if report.progress_ok {
                "ok".to_string()
            } else {
                format!("FAILED: {}", report.stuck.as_deref().unwrap_or("?"))
            }
        );
        println!(
            "expected cost: {} <= {}: {}",
            format_rat(&report.expected_cost),
            format_rat(&report.bound),
            if report.bound_ok { "ok" } else { "FAILED" }
        );
    }
    Ok(if report.all_ok() { 0 } else { 1 })
}

fn cmd_sample(
    common: Common,
    trials: usize,
    seed: u64,
    max_steps: usize,
    scheduler: Scheduler,
) -> Result<u8, CliError> {
    let e = load_program(&common)?;
    let report = estimate(&e, trials, seed, max_steps, &scheduler)?;
    if common.json {
        println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
    } else {
        println!(
            "mean cost {:.6} over {} trials (stddev {:.6}, 95% CI [{:.6}, {:.6}], truncated {:.2}%)",
            report.mean_cost,
            report.trials,
            report.sample_stddev,
            report.ci95.0,
            report.ci95.1,
            report.truncated_fraction * 100.0
        );
    }
    Ok(0)
}
