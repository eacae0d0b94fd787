use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use datacheck_core::ddsa::{ConcreteRun, Ddsa};
use datacheck_core::formula::{Domain, Sorts, Q};
use datacheck_core::ltlf::{self, fmt_symbol, Ltl};
use datacheck_core::product::{self, Verdict, VerifyOptions};
use datacheck_core::summary::{self, DetectOptions, Engine};
use datacheck_core::{dot, oracle, syntax};

#[derive(Parser)]
#[command(name = "datacheck", version, about = "Check LTLf properties with arithmetic constraints on data-aware systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a witness run of a property.
    Verify(VerifyArgs),
    /// Detect a finite-summary strategy and build the constraint graph.
    Summary(SummaryArgs),
    /// Brute-force search over a value grid.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// Model file.
    model: PathBuf,
    /// Override the domain of every variable.
    #[arg(long, value_parser = parse_domain)]
    domain: Option<Domain>,
    /// Node budget for graph constructions.
    #[arg(long, default_value_t = summary::DEFAULT_MAX_NODES, value_parser = clap::value_parser!(usize))]
    max_nodes: usize,
    /// Transition repetition bound for the lookback check (default 2|V|+1).
    #[arg(long)]
    unroll: Option<usize>,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Property, inline or as a file path.
    #[arg(long)]
    prop: String,
    /// Write the constraint graph as Graphviz DOT.
    #[arg(long, value_name = "FILE")]
    dot_cg: Option<PathBuf>,
    /// Write the property automaton as Graphviz DOT.
    #[arg(long, value_name = "FILE")]
    dot_nfa: Option<PathBuf>,
    /// Write the product automaton as Graphviz DOT.
    #[arg(long, value_name = "FILE")]
    dot_product: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    #[command(flatten)]
    common: Common,
    /// Property whose constraints take part in detection.
    #[arg(long)]
    prop: Option<String>,
    /// Write the constraint graph as Graphviz DOT.
    #[arg(long, value_name = "FILE")]
    dot_cg: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    model: PathBuf,
    #[arg(long)]
    prop: String,
    #[arg(long, default_value_t = 5)]
    max_len: usize,
    /// Integer grid `lo..=hi` instead of the default grid.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    grid: Option<Vec<i64>>,
    #[arg(long)]
    json: bool,
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    match s {
        "int" => Ok(Domain::Int),
        "rat" => Ok(Domain::Rat),
        _ => Err(format!("expected `int` or `rat`, got `{}`", s)),
    }
}

/// Writes to stdout; a closed pipe ends the process quietly.
fn emit(args: std::fmt::Arguments<'_>, newline: bool) {
    use std::io::Write;
    let mut o = std::io::stdout().lock();
    let r = o.write_fmt(args).and_then(|_| if newline { o.write_all(b"\n") } else { Ok(()) });
    if let Err(e) = r {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*), false) };
}

macro_rules! outln {
    () => { emit(format_args!(""), true) };
    ($($t:tt)*) => { emit(format_args!($($t)*), true) };
}

const EXIT_WITNESS: u8 = 0;
const EXIT_NO_WITNESS: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let r = match cli.cmd {
        Cmd::Verify(a) => verify(a),
        Cmd::Summary(a) => summary_cmd(a),
        Cmd::Oracle(a) => oracle_cmd(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load_model(path: &Path, domain: Option<Domain>) -> anyhow::Result<Ddsa> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut d = syntax::parse_model(&src).with_context(|| format!("in {}", path.display()))?;
    if let Some(dom) = domain {
        d.sorts = Sorts::uniform(dom);
    }
    for w in d.warnings() {
        eprintln!("warning: {}", w);
    }
    Ok(d)
}

fn load_property(arg: &str, d: &Ddsa) -> anyhow::Result<Ltl> {
    let src = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {}", arg))?
    } else {
        arg.to_string()
    };
    syntax::parse_linked_property(src.trim(), d).context("in property")
}

fn write_file(path: &Option<PathBuf>, text: impl FnOnce() -> String) -> anyhow::Result<()> {
    if let Some(p) = path {
        std::fs::write(p, text()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn rat(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn run_json(d: &Ddsa, r: &ConcreteRun) -> Value {
    let configs: Vec<Value> = r
        .configs
        .iter()
        .map(|c| {
            let assign: serde_json::Map<String, Value> =
                d.vars.iter().map(|v| (v.to_string(), json!(rat(&c.vals[v])))).collect();
            json!({"state": c.state, "assign": assign})
        })
        .collect();
    json!(configs)
}

fn run_table(d: &Ddsa, r: &ConcreteRun) -> String {
    let mut rows = vec![{
        let mut h = vec!["step".to_string(), "action".to_string(), "state".to_string()];
        h.extend(d.vars.iter().map(|v| v.to_string()));
        h
    }];
    for (i, c) in r.configs.iter().enumerate() {
        let mut row = vec![i.to_string(), if i == 0 { "-".into() } else { r.actions[i - 1].clone() }, c.state.clone()];
        row.extend(d.vars.iter().map(|v| c.vals[v].to_string()));
        rows.push(row);
    }
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{:<w$}", c, w = w)).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn paint(text: &str, code: &str) -> String {
    if std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal() {
        format!("\x1b[{}m{}\x1b[0m", code, text)
    } else {
        text.to_string()
    }
}

fn detect_options(c: &Common) -> anyhow::Result<DetectOptions> {
    if c.max_nodes == 0 {
        bail!("--max-nodes must be at least 1");
    }
    if c.unroll == Some(0) {
        bail!("--unroll must be at least 1");
    }
    Ok(DetectOptions { unroll: c.unroll, ..DetectOptions::default() })
}

fn verify(a: VerifyArgs) -> anyhow::Result<u8> {
    let d = load_model(&a.common.model, a.common.domain)?;
    let psi = load_property(&a.prop, &d)?;
    let opts = VerifyOptions { max_nodes: a.common.max_nodes, detect: detect_options(&a.common)? };
    let report = product::verify(&d, &psi, &opts);
    write_file(&a.dot_nfa, || dot::nfa(&report.nfa))?;
    if let Some(p) = &report.product {
        write_file(&a.dot_product, || dot::product(p))?;
    }
    if a.dot_cg.is_some() {
        if let Some(s) = &report.strategy {
            match summary::constraint_graph(&Engine::new(&d, s), opts.max_nodes) {
                Ok(g) => write_file(&a.dot_cg, || dot::constraint_graph(&g))?,
                Err(e) => eprintln!("warning: constraint graph not written: {}", e),
            }
        }
    }
    let code = match &report.verdict {
        Verdict::Witness(_) => EXIT_WITNESS,
        Verdict::NoWitness(_) => EXIT_NO_WITNESS,
        Verdict::Inconclusive(_) => EXIT_INCONCLUSIVE,
    };
    let strategy = report.strategy.as_ref().map(|s| s.to_string());
    let unroll = report.strategy.as_ref().and_then(|s| s.unroll());
    if a.common.json {
        let mut out = json!({
            "verdict": report.verdict.name(),
            "strategy": strategy,
            "unroll": unroll,
            "property": ltlf::preprocess(&psi).to_string(),
            "nfa_states": report.nfa.states.len(),
        });
        if let Some(p) = &report.product {
            out["product_nodes"] = json!(p.nodes.len());
            out["product_edges"] = json!(p.edges.len());
        }
        match &report.verdict {
            Verdict::Witness(w) => {
                let word: Vec<Vec<String>> = w.word.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect();
                out["word"] = json!(word);
                out["actions"] = json!(w.run.actions);
                out["run"] = run_json(&d, &w.run);
            }
            Verdict::Inconclusive(r) => out["reason"] = json!(r),
            Verdict::NoWitness(_) => {}
        }
        outln!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(code);
    }
    outln!("property: {}", ltlf::preprocess(&psi));
    match (&strategy, unroll) {
        (Some(s), Some(u)) => outln!("strategy: {} (verified up to unroll {})", s, u),
        (Some(s), None) => outln!("strategy: {}", s),
        (None, _) => outln!("strategy: none"),
    }
    outln!("nfa: {} states, {} edges", report.nfa.states.len(), report.nfa.edges.len());
    if let Some(p) = &report.product {
        outln!("product: {} nodes, {} edges, {} final", p.nodes.len(), p.edges.len(), p.finals.len());
    }
    match &report.verdict {
        Verdict::Witness(w) => {
            outln!("verdict: {} (run of length {})", paint("witness", "32"), w.run.len());
            let word: Vec<String> = w.word.iter().map(fmt_symbol).collect();
            outln!("word: {}", word.join(" "));
            out!("{}", run_table(&d, &w.run));
        }
        Verdict::NoWitness(_) => outln!("verdict: {}", paint("no witness", "31")),
        Verdict::Inconclusive(r) => outln!("verdict: {} ({})", paint("inconclusive", "33"), r),
    }
    Ok(code)
}

fn summary_cmd(a: SummaryArgs) -> anyhow::Result<u8> {
    let d = load_model(&a.common.model, a.common.domain)?;
    let cs = match &a.prop {
        Some(p) => ltlf::preprocess(&load_property(p, &d)?).constraints(),
        None => vec![],
    };
    let opts = detect_options(&a.common)?;
    let s = match summary::detect_with(&d, &cs, &opts) {
        Ok(s) => s,
        Err(e) => {
            if a.common.json {
                outln!("{}", json!({"strategy": null, "reason": e.to_string()}));
            } else {
                outln!("strategy: none ({})", e);
            }
            return Ok(EXIT_INCONCLUSIVE);
        }
    };
    let g = summary::constraint_graph(&Engine::new(&d, &s), a.common.max_nodes);
    if let Ok(g) = &g {
        write_file(&a.dot_cg, || dot::constraint_graph(g))?;
    }
    if a.common.json {
        let mut out = json!({"strategy": s.to_string(), "kind": s.kind(), "unroll": s.unroll()});
        match &g {
            Ok(g) => {
                out["nodes"] = json!(g.nodes.len());
                out["edges"] = json!(g.edges.len());
            }
            Err(e) => out["reason"] = json!(e.to_string()),
        }
        outln!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        match s.unroll() {
            Some(u) => outln!("strategy: {} (verified up to unroll {})", s, u),
            None => outln!("strategy: {}", s),
        }
        match &g {
            Ok(g) => outln!("constraint graph: {} nodes, {} edges", g.nodes.len(), g.edges.len()),
            Err(e) => outln!("constraint graph: {}", e),
        }
    }
    Ok(if g.is_ok() { 0 } else { EXIT_INCONCLUSIVE })
}

fn oracle_cmd(a: OracleArgs) -> anyhow::Result<u8> {
    let d = load_model(&a.model, None)?;
    let psi = ltlf::preprocess(&load_property(&a.prop, &d)?);
    let grid = match &a.grid {
        Some(g) => oracle::int_grid(g[0], g[1]),
        None => oracle::grid(&d, &psi.constraints()),
    };
    let found = oracle::brute_force_witness(&d, &psi, a.max_len, &grid)?;
    if a.json {
        let out = match &found {
            Some(r) => json!({"verdict": "witness", "actions": r.actions, "run": run_json(&d, r)}),
            None => json!({"verdict": "none", "max_len": a.max_len, "grid_size": grid.len()}),
        };
        outln!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        match &found {
            Some(r) => {
                outln!("witness of length {}", r.len());
                out!("{}", run_table(&d, r));
            }
            None => outln!("no witness up to length {} on a grid of {} values", a.max_len, grid.len()),
        }
    }
    Ok(if found.is_some() { EXIT_WITNESS } else { EXIT_NO_WITNESS })
}
