//! Command-line front end. [`main_with_args`] returns the exit code and the
//! text to print, so the binary is a thin wrapper.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cas::{parse_closed_form, parse_rational, render_rational, ClosedForm, ExpVec, IndetId, Poly, Rational, Resolver};
use crate::equivalence::{
    loop_free_semantics, verify_compositional, CheckOptions, CheckReport, EquivError, Verdict, Witness, DEFAULT_DEGREE_BOUND,
};
use crate::queries::{parse_query, run_query, Answer, QueryResult};
use crate::sampler::{self, ConcreteState, SampleConfig, ALGORITHM, DEFAULT_SAMPLES, DEFAULT_STEP_CAP};
use crate::semantics::{dist_pgf, indet, transform};
use crate::syntax::{desugar, parse, parse_dist, parse_guard, parse_spec, DesugarOptions, Program};

#[derive(Parser, Debug)]
#[command(name = "redip", version, about = "Exact inference and equivalence checking for discrete probabilistic loops")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a program and print it back, optionally with its core form.
    Parse {
        program: PathBuf,
        /// Also print the desugared core statement.
        #[arg(long)]
        core: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check every loop against its invariant and the program against its specification.
    Check {
        program: PathBuf,
        /// Loop-free specification file, replacing the program's own `#invariant` section.
        #[arg(long)]
        invariant: Option<PathBuf>,
        /// Report equality as full equivalence, assuming universal almost-sure termination.
        #[arg(long)]
        assume_uast: bool,
        /// Largest total input size searched for a counterexample.
        #[arg(long, default_value_t = DEFAULT_DEGREE_BOUND)]
        degree_bound: u32,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run the program on an input distribution and answer queries about the output.
    Query {
        program: PathBuf,
        /// Input closed form (`N^5`), or `x ~ dist, y = 3` items.
        #[arg(long, default_value = "1")]
        input: String,
        /// Query: mass, E[expr], Var[x], P[guard], marginal[x, ...] or coeff[x=n, ...].
        #[arg(long = "q", required = true)]
        queries: Vec<String>,
        /// Bind a parameter, e.g. `--param a=1/3`.
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Print the output generating function truncated at a total degree.
    Expand {
        program: PathBuf,
        #[arg(long, default_value = "1")]
        input: String,
        #[arg(long, default_value_t = 5)]
        degree: u32,
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Estimate event probabilities by running the program many times.
    Sample {
        program: PathBuf,
        /// Initial state, e.g. `n=5, c=0`; unlisted variables are 0.
        #[arg(long, default_value = "")]
        input: String,
        /// Event to estimate; may be repeated.
        #[arg(long = "event", default_value = "true")]
        events: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u64,
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// What the process should print and return.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Outcome {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn error(msg: impl std::fmt::Display) -> Outcome {
        Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome::ok(0, text)
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let r = match cli.command {
        Command::Parse { program, core, format } => cmd_parse(&program, core, format),
        Command::Check { program, invariant, assume_uast, degree_bound, format } => {
            cmd_check(&program, invariant.as_ref(), assume_uast, degree_bound, format)
        }
        Command::Query { program, input, queries, params, format } => cmd_query(&program, &input, &queries, &params, format),
        Command::Expand { program, input, degree, params, format } => cmd_expand(&program, &input, degree, &params, format),
        Command::Sample { program, input, events, seed, samples, step_cap, params, format } => {
            let cfg = SampleConfig { seed, samples, step_cap, params: BTreeMap::new() };
            cmd_sample(&program, &input, &events, cfg, &params, format)
        }
    };
    r.unwrap_or_else(Outcome::error)
}

type CmdResult = Result<Outcome, String>;

fn load(path: &PathBuf) -> Result<Program, String> {
    let src = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(format: Format, text: String, value: Value) -> String {
    match format {
        Format::Text => text,
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&value).expect("serialisable")),
    }
}

fn parse_bindings(items: &[String], p: &Program) -> Result<BTreeMap<String, Rational>, String> {
    let mut out = BTreeMap::new();
    for item in items {
        let (name, value) = item.split_once('=').ok_or_else(|| format!("--param {item}: expected name=value"))?;
        let name = name.trim();
        if !p.params.iter().any(|q| q == name) {
            return Err(format!("--param {item}: {name} is not a declared parameter"));
        }
        let v = parse_rational(value.trim()).ok_or_else(|| format!("--param {item}: {value} is not a rational"))?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

fn bindings_json(b: &BTreeMap<String, Rational>) -> Value {
    Value::Object(b.iter().map(|(k, v)| (k.clone(), Value::String(render_rational(v)))).collect())
}

fn bind(g: &ClosedForm, b: &BTreeMap<String, Rational>) -> Result<ClosedForm, String> {
    let mut g = g.clone();
    for (name, v) in b {
        g = g.subst(&IndetId::param(name), &ClosedForm::constant(v.clone())).map_err(|e| e.to_string())?;
    }
    Ok(g)
}

/// A closed form over the program's variables, or `x ~ dist` / `x = n` items.
pub fn parse_input(s: &str, p: &Program) -> Result<ClosedForm, String> {
    if !s.contains('~') {
        return parse_closed_form(s, &Resolver::new(&p.vars, &p.params)).map_err(|e| format!("--input: {e}"));
    }
    let mut g = ClosedForm::one();
    for item in s.split(',') {
        let item = item.trim();
        let (x, d, dist) = if let Some((x, d)) = item.split_once('~') {
            (x.trim(), d.trim(), true)
        } else if let Some((x, n)) = item.split_once('=') {
            (x.trim(), n.trim(), false)
        } else {
            return Err(format!("--input: cannot read {item:?}"));
        };
        if !p.vars.iter().any(|v| v == x) {
            return Err(format!("--input: unknown variable {x}"));
        }
        let factor = if dist {
            let d = parse_dist(d, &p.params).map_err(|e| format!("--input: {e}"))?;
            dist_pgf(&d).map_err(|e| format!("--input: {e}"))?.rename(&IndetId::placeholder(), &indet(x))
        } else {
            let n: u32 = d.parse().map_err(|_| format!("--input: {d} is not a natural number"))?;
            ClosedForm::monomial(ExpVec::var(&indet(x), n))
        };
        g = g.mul(&factor);
    }
    Ok(g)
}

fn output(p: &Program, input: &str) -> Result<ClosedForm, String> {
    let g = parse_input(input, p)?;
    let core = loop_free_semantics(p, CheckOptions::default()).map_err(|e| e.to_string())?;
    transform(&core, &g).map_err(|e| e.to_string())
}

fn cmd_parse(path: &PathBuf, core: bool, format: Format) -> CmdResult {
    let p = load(path)?;
    let mut text = format!("{p}\n");
    let mut value = json!({ "program": p.to_string(), "vars": p.vars, "params": p.params });
    if core {
        let (body, spec) = desugar(&p, DesugarOptions::default()).map_err(|e| e.to_string())?;
        let _ = writeln!(text, "\n# core\n{body}");
        value["core"] = json!(body.to_string());
        if let Some(s) = spec {
            let _ = writeln!(text, "\n# core specification\n{s}");
            value["core_spec"] = json!(s.to_string());
        }
    }
    Ok(Outcome::ok(0, emit(format, text, value)))
}

fn witness_json(w: &Witness) -> (Value, Value) {
    match w {
        Witness::Found(c) => {
            let state: serde_json::Map<String, Value> =
                c.input_state.iter().map(|(x, e)| (x.name().to_string(), json!(e))).collect();
            (Value::Object(state), json!(c.discrepancy.to_string()))
        }
        Witness::BoundExhausted { .. } => (Value::Null, Value::Null),
    }
}

fn report_json(r: &CheckReport) -> Value {
    let (state, disc) = match &r.verdict {
        Verdict::NotEqual(w) => witness_json(w),
        _ => (Value::Null, Value::Null),
    };
    let mut v = json!({
        "label": r.label,
        "verdict": r.verdict.name(),
        "witness_state": state,
        "discrepancy": disc,
        "timings_ms": r.millis,
    });
    if let Verdict::Error(e) = &r.verdict {
        v["error"] = json!(e);
    }
    v
}

fn cmd_check(path: &PathBuf, invariant: Option<&PathBuf>, uast: bool, degree_bound: u32, format: Format) -> CmdResult {
    let mut p = load(path)?;
    if let Some(inv) = invariant {
        let src = std::fs::read_to_string(inv).map_err(|e| format!("{}: {e}", inv.display()))?;
        p = parse_spec(&src, &p).map_err(|e| format!("{}: {e}", inv.display()))?;
    }
    let opts = CheckOptions { uast_assumed: uast, degree_bound, ..CheckOptions::default() };
    let start = Instant::now();
    let (reports, missing) = match verify_compositional(&p, opts) {
        Ok(r) => (r, None),
        Err(EquivError::MissingAnnotation { label, checked }) => (checked, Some(format!("{label} has no invariant annotation"))),
        Err(e) => return Err(e.to_string()),
    };
    let total = start.elapsed().as_millis();
    let overall = if reports.iter().any(|r| matches!(r.verdict, Verdict::NotEqual(_))) {
        "NotEqual"
    } else if missing.is_some() || reports.is_empty() || reports.iter().any(|r| !r.verdict.is_equal()) {
        "Error"
    } else {
        "Equal"
    };
    let code = match overall {
        "Equal" => 0,
        "NotEqual" => 1,
        _ => 2,
    };
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "{}: {} [{} ms]", r.label, r.verdict, r.millis);
    }
    if reports.is_empty() && missing.is_none() {
        let _ = writeln!(text, "nothing to check: the program has no loops and no specification");
    }
    if let Some(m) = &missing {
        let _ = writeln!(text, "error: {m}");
    }
    let _ = writeln!(text, "{overall}");
    let first_bad = reports.iter().find_map(|r| match &r.verdict {
        Verdict::NotEqual(w) => Some(witness_json(w)),
        _ => None,
    });
    let (state, disc) = first_bad.unwrap_or((Value::Null, Value::Null));
    let value = json!({
        "verdict": overall,
        "witness_state": state,
        "discrepancy": disc,
        "closed_form": Value::Null,
        "timings_ms": total,
        "parameters": p.params,
        "checks": reports.iter().map(report_json).collect::<Vec<_>>(),
        "error": missing,
    });
    Ok(Outcome::ok(code, emit(format, text, value)))
}

fn cmd_query(path: &PathBuf, input: &str, queries: &[String], params: &[String], format: Format) -> CmdResult {
    let p = load(path)?;
    let b = parse_bindings(params, &p)?;
    let start = Instant::now();
    let g = bind(&output(&p, input)?, &b)?;
    let free: Vec<String> = p.params.iter().filter(|q| !b.contains_key(*q)).cloned().collect();
    let mut text = String::new();
    let mut answers = Vec::new();
    for q in queries {
        let query = parse_query(q, &p.vars, &free).map_err(|e| e.to_string())?;
        let a = run_query(&g, &query).map_err(|e| format!("{q}: {e}"))?;
        let _ = writeln!(text, "{}", if queries.len() == 1 { a.to_string() } else { format!("{q} = {a}") });
        let kind = match &a {
            Answer::Value(QueryResult::Infinity) => "infinity",
            Answer::Value(_) => "value",
            Answer::Distribution(_) => "distribution",
        };
        answers.push(json!({ "query": q, "kind": kind, "result": a.to_string() }));
    }
    let value = json!({
        "closed_form": g.to_string(),
        "answers": answers,
        "parameters": bindings_json(&b),
        "timings_ms": start.elapsed().as_millis(),
    });
    Ok(Outcome::ok(0, emit(format, text, value)))
}

/// The terms of `g`'s expansion of total degree at most `d` in the program
/// variables.
pub fn expand(g: &ClosedForm, vars: &[String], d: u32) -> Result<Poly, String> {
    let upto: Vec<_> = vars.iter().map(|v| (indet(v), d)).collect();
    let full = g.taylor(&upto).map_err(|e| e.to_string())?;
    let within = |m: &ExpVec| vars.iter().map(|v| m.exp(&indet(v))).sum::<u32>() <= d;
    Ok(Poly::from_terms(full.terms().filter(|(m, _)| within(m)).map(|(m, c)| (m.clone(), c.clone()))))
}

fn cmd_expand(path: &PathBuf, input: &str, degree: u32, params: &[String], format: Format) -> CmdResult {
    let p = load(path)?;
    let b = parse_bindings(params, &p)?;
    let g = bind(&output(&p, input)?, &b)?;
    let series = expand(&g, &p.vars, degree)?;
    let value = json!({
        "closed_form": g.to_string(),
        "series": series.to_string(),
        "degree": degree,
        "parameters": bindings_json(&b),
    });
    Ok(Outcome::ok(0, emit(format, format!("{series}\n"), value)))
}

fn parse_state(s: &str, p: &Program) -> Result<ConcreteState, String> {
    let mut st = ConcreteState::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (x, n) = item.split_once('=').ok_or_else(|| format!("--input: expected var=value, got {item:?}"))?;
        let x = x.trim();
        if !p.vars.iter().any(|v| v == x) {
            return Err(format!("--input: unknown variable {x}"));
        }
        let n: u64 = n.trim().parse().map_err(|_| format!("--input: {n} is not a natural number"))?;
        st.insert(x.to_string(), n);
    }
    Ok(st)
}

fn cmd_sample(path: &PathBuf, input: &str, events: &[String], mut cfg: SampleConfig, params: &[String], format: Format) -> CmdResult {
    let p = load(path)?;
    cfg.params = parse_bindings(params, &p)?;
    let init = parse_state(input, &p)?;
    let guards = events.iter().map(|e| parse_guard(e, &p.vars).map_err(|err| format!("{e}: {err}"))).collect::<Result<Vec<_>, _>>()?;
    let start = Instant::now();
    let tally = sampler::sample(&p, &init, &cfg).map_err(|e| e.to_string())?;
    let mut text = format!("{} runs, {} timeouts, seed {}, {ALGORITHM}\n", tally.runs, tally.timeouts, cfg.seed);
    let mut rows = Vec::new();
    for (e, g) in events.iter().zip(&guards) {
        let est = tally.frequency(g);
        let _ = writeln!(text, "P[{e}] = {} ± {:.6}", render_rational(&est.frequency), est.stderr);
        rows.push(json!({ "event": e, "frequency": render_rational(&est.frequency), "stderr": est.stderr }));
    }
    let value = json!({
        "estimates": rows,
        "runs": tally.runs,
        "timeouts": tally.timeouts,
        "seed": cfg.seed,
        "algorithm": ALGORITHM,
        "parameters": bindings_json(&cfg.params),
        "timings_ms": start.elapsed().as_millis(),
    });
    Ok(Outcome::ok(0, emit(format, text, value)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(src: &str) -> Program {
        parse(src).unwrap()
    }

    #[test]
    fn inputs() {
        let p = prog("vars n, c; skip");
        assert!(parse_input("N^5", &p).unwrap().cf_equal(&"N^5".parse().unwrap()));
        let g = parse_input("n ~ geometric(1/2), c = 2", &p).unwrap();
        assert!(g.cf_equal(&"C^2*(1/2)/(1 - 1/2*N)".parse().unwrap()));
        assert!(parse_input("z = 1, n ~ dirac(1)", &p).is_err());
    }

    #[test]
    fn bindings() {
        let p = prog("params a; vars x; {x := 1}[a]{x := 2}");
        let b = parse_bindings(&["a=1/3".to_string()], &p).unwrap();
        assert_eq!(b["a"], crate::cas::rat(1, 3));
        assert!(parse_bindings(&["b=1/3".to_string()], &p).is_err());
        assert!(parse_bindings(&["a".to_string()], &p).is_err());
    }

    #[test]
    fn expansion_by_total_degree() {
        let g: ClosedForm = "(1/2)/(1 - 1/2*C)".parse().unwrap();
        assert_eq!(expand(&g, &["c".into()], 3).unwrap().to_string(), "1/2 + 1/4*C + 1/8*C^2 + 1/16*C^3");
        let g: ClosedForm = "(1/2*M + 1/2*N)^2".parse().unwrap();
        assert_eq!(expand(&g, &["m".into(), "n".into()], 2).unwrap().to_string(), "1/4*M^2 + 1/2*M*N + 1/4*N^2");
    }

    #[test]
    fn states() {
        let p = prog("vars n, c; skip");
        assert_eq!(parse_state("n=5, c=0", &p).unwrap()["n"], 5);
        assert!(parse_state("n=-1", &p).is_err());
        assert!(parse_state("", &p).unwrap().is_empty());
    }
}
