//! `pax` — command-line front end for the process-algebra workbench.
//!
//! Subcommands: `parse`, `lts`, `bisim`, `prove`, `simplify`, `sim`, and
//! `selftest`. Results go to standard out (deterministic for fixed inputs and
//! flags); diagnostics go to standard error. Every subcommand accepts
//! `--format json`; `lts` additionally accepts `dot` and `sim` accepts `csv`.
//!
//! Exit codes: 0 success/equivalent, 1 inequivalent (or failed selftest),
//! 2 usage or parse error, 3 the prover could not settle the equation,
//! 4 a state or rewrite budget was exceeded.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pax_core::{
    branching_equivalent, estimate, eval_root_map, exact_terminal_distribution, explore,
    interference_free, rooted_equivalent, run_indexed, run_many, wilson_interval, DataValue,
    Engine, EngineError, Estimate, EvalMap, Event, ExploreConfig, Outcome, ProcTerm, PtsError,
    Rational, RewriteError, Rewriter, SchedulerPolicy, SpecFile, Trace, Verdict,
    DEFAULT_MAX_STEPS,
};

mod codes {
    pub const OK: i32 = 0;
    pub const INEQUIVALENT: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const UNKNOWN: i32 = 3;
    pub const BUDGET: i32 = 4;
}

#[derive(Parser)]
#[command(
    name = "pax",
    version,
    about = "A workbench for a probabilistic imperative process algebra",
    max_term_width = 100
)]
struct Cli {
    /// Output format; every subcommand accepts `json`, `lts` also accepts
    /// `dot`, and `sim` also accepts `csv` (its default `text` is CSV too
    /// unless --event asks for an estimate).
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker-thread cap for parallelizable stages (simulation batches).
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a specification, then list its declarations.
    Parse {
        /// Path to a `.pax` file.
        spec: PathBuf,
    },

    /// Explore the reachable probabilistic transition system of a process.
    Lts {
        spec: PathBuf,
        /// Process name or inline term (default: the first declared process).
        process: Option<String>,
        /// Wrap the process in an evaluation operator with this named map.
        #[arg(long)]
        eval: Option<String>,
        /// Abort (exit 4) when the state space grows past this many states.
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
    },

    /// Decide branching equivalence of two processes (exit 0 equivalent,
    /// 1 inequivalent).
    Bisim {
        spec: PathBuf,
        /// Left process name or inline term.
        left: String,
        /// Right process name or inline term.
        right: String,
        /// Use the rooted relation (a congruence) instead of the plain one.
        #[arg(long)]
        rooted: bool,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
    },

    /// Try to derive the equality of two processes from the axioms
    /// (exit 0 derived, 3 unknown).
    Prove {
        spec: PathBuf,
        left: String,
        right: String,
        /// Override the rewrite-step budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Print every rewrite step with its rule name and position.
        #[arg(long)]
        trace: bool,
    },

    /// Rewrite a process to its axiom-normal form.
    Simplify {
        spec: PathBuf,
        /// Process name or inline term (default: the first declared process).
        process: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
        /// Print every rewrite step with its rule name and position.
        #[arg(long)]
        trace: bool,
    },

    /// Run seeded probabilistic executions under a scheduler policy.
    Sim {
        spec: PathBuf,
        /// Process name or inline term (default: the first declared process).
        process: Option<String>,
        /// Number of runs (independent RNG streams of the base seed).
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Base seed; defaults to the PAX_SEED environment variable, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Scheduler: uniform-random, first-by-canonical-order, or
        /// priority:a,b,c (earlier labels win; termination ranks last).
        #[arg(long, default_value = "uniform-random")]
        policy: String,
        /// Estimate the frequency of an event: `performed <action>`,
        /// `final <var> = <value>`, `terminated`, or `deadlocked`.
        #[arg(long)]
        event: Option<String>,
        /// Wrap the process in an evaluation operator with this named map.
        #[arg(long)]
        eval: Option<String>,
        /// Per-run step budget; exceeding it ends the run with status
        /// `step-limit`.
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },

    /// Check the bundled examples end to end and report pass/fail per case.
    Selftest,
}

fn main() {
    // Die quietly on a closed pipe (`pax lts … | head`), like any other
    // line-oriented tool.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pax: {e:#}");
            codes::USAGE
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    let format = cli.format;
    let jobs = cli.jobs as usize;
    match cli.cmd {
        Cmd::Parse { spec } => cmd_parse(&load(&spec)?, format),
        Cmd::Lts { spec, process, eval, max_states } => {
            cmd_lts(&load(&spec)?, process.as_deref(), eval.as_deref(), max_states, format)
        }
        Cmd::Bisim { spec, left, right, rooted, max_states } => {
            cmd_bisim(&load(&spec)?, &left, &right, rooted, max_states, format)
        }
        Cmd::Prove { spec, left, right, budget, trace } => {
            cmd_prove(&load(&spec)?, &left, &right, budget, trace, format)
        }
        Cmd::Simplify { spec, process, budget, trace } => {
            cmd_simplify(&load(&spec)?, process.as_deref(), budget, trace, format)
        }
        Cmd::Sim { spec, process, runs, seed, policy, event, eval, max_steps } => cmd_sim(
            &load(&spec)?,
            process.as_deref(),
            runs,
            seed,
            &policy,
            event.as_deref(),
            eval.as_deref(),
            max_steps,
            jobs,
            format,
        ),
        Cmd::Selftest => cmd_selftest(format),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

fn load(path: &PathBuf) -> Result<SpecFile> {
    let src = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read `{}`", path.display()))?;
    SpecFile::parse(&path.display().to_string(), &src).map_err(|e| anyhow!("{e}"))
}

/// Resolves a process argument: a declared name wins, anything else is parsed
/// as an inline term in the file's declaration context.
fn resolve(spec: &SpecFile, arg: Option<&str>) -> Result<(String, ProcTerm)> {
    match arg {
        None => {
            let (n, t) =
                spec.default_proc().ok_or_else(|| anyhow!("the file declares no processes"))?;
            Ok((n.to_string(), t.clone()))
        }
        Some(a) if spec.procs.contains_key(a) => Ok((a.to_string(), spec.procs[a].clone())),
        Some(a) => {
            let t = spec.parse_term(a).map_err(|e| anyhow!("{e}"))?;
            Ok((a.to_string(), t))
        }
    }
}

/// Resolves the process and optionally wraps it in an evaluation operator.
fn build_root(
    spec: &SpecFile,
    process: Option<&str>,
    eval: Option<&str>,
) -> Result<(String, ProcTerm)> {
    let (name, t) = resolve(spec, process)?;
    match eval {
        None => Ok((name, t)),
        Some(e) => {
            let map = spec.resolve_eval(Some(e)).map_err(|m| anyhow!("{m}"))?;
            Ok((name, ProcTerm::eval_wrap(map, t)))
        }
    }
}

/// Prints a budget/usage diagnostic for an exploration error and picks the
/// exit code: exceeding a state or unfolding budget exits 4, everything else
/// is a usage-level error (exit 2).
fn fail_pts(e: &PtsError) -> i32 {
    eprintln!("pax: {e}");
    match e {
        PtsError::BudgetExceeded { .. } => codes::BUDGET,
        PtsError::Engine(EngineError::UnfoldLimit) => codes::BUDGET,
        _ => codes::USAGE,
    }
}

fn reject_format(format: Format, allowed: &[Format], what: &str) -> Result<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(anyhow!("this output format is not available for `{what}`"))
    }
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

fn cmd_parse(spec: &SpecFile, format: Format) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json], "parse")?;
    match format {
        Format::Json => {
            let actions: serde_json::Map<String, serde_json::Value> = spec
                .actions
                .iter()
                .map(|(n, a)| (n.clone(), serde_json::json!(a)))
                .collect();
            let evals: serde_json::Map<String, serde_json::Value> = spec
                .evals
                .iter()
                .map(|(n, m)| (n.clone(), serde_json::json!(m.to_string())))
                .collect();
            let recs: serde_json::Map<String, serde_json::Value> = spec
                .recs
                .iter()
                .map(|(n, r)| {
                    (n.clone(), serde_json::json!(r.equations.keys().collect::<Vec<_>>()))
                })
                .collect();
            let procs: serde_json::Map<String, serde_json::Value> = spec
                .procs
                .iter()
                .map(|(n, t)| (n.clone(), serde_json::json!(t.to_string())))
                .collect();
            let doc = serde_json::json!({
                "bound": spec.ctx.bound(),
                "vars": spec.ctx.vars().collect::<Vec<_>>(),
                "actions": actions,
                "evals": evals,
                "recs": recs,
                "procs": procs,
                "order": spec.proc_order,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        _ => {
            println!("bound: {}", spec.ctx.bound());
            let vars: Vec<_> = spec.ctx.vars().collect();
            println!("vars: {}", if vars.is_empty() { "(none)".into() } else { vars.join(", ") });
            let acts: Vec<String> = spec
                .actions
                .iter()
                .map(|(n, a)| if *a == 0 { n.clone() } else { format!("{n}/{a}") })
                .collect();
            println!(
                "actions: {}",
                if acts.is_empty() { "(none)".into() } else { acts.join(", ") }
            );
            for (n, m) in &spec.evals {
                println!("eval {n} = {m}");
            }
            for (n, r) in &spec.recs {
                let vars: Vec<_> = r.equations.keys().cloned().collect();
                println!("rec {n} ({})", vars.join(", "));
            }
            for n in &spec.proc_order {
                println!("proc {n} = {}", spec.procs[n]);
            }
        }
    }
    Ok(codes::OK)
}

// ---------------------------------------------------------------------------
// lts
// ---------------------------------------------------------------------------

fn cmd_lts(
    spec: &SpecFile,
    process: Option<&str>,
    eval: Option<&str>,
    max_states: usize,
    format: Format,
) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json, Format::Dot], "lts")?;
    let (name, root) = build_root(spec, process, eval)?;
    let mut eng = Engine::for_spec(spec);
    let cfg = if eval_root_map(&root).is_some() {
        ExploreConfig { max_states, ..ExploreConfig::canonical() }
    } else {
        ExploreConfig { max_states, ..ExploreConfig::default() }
    };
    let ex = match explore(&mut eng, &root, &cfg) {
        Ok(ex) => ex,
        Err(e) => return Ok(fail_pts(&e)),
    };
    let pts = &ex.pts;
    match format {
        Format::Json => println!("{}", pts.to_json()),
        Format::Dot => print!("{}", pts.to_dot()),
        _ => {
            println!(
                "process {name}: {} states, {} maps, root #{}",
                pts.n_states(),
                pts.n_sigmas(),
                pts.root
            );
            let uniform = |rows: &[Vec<(usize, Rational)>]| rows.windows(2).all(|w| w[0] == w[1]);
            let uniform_steps =
                |rows: &[Vec<(String, usize)>]| rows.windows(2).all(|w| w[0] == w[1]);
            for i in 0..pts.n_states() {
                let term_marks: Vec<usize> = (0..pts.n_sigmas())
                    .filter(|&s| pts.term[i][s])
                    .collect();
                let mark = if term_marks.len() == pts.n_sigmas() {
                    "  [terminates]".to_string()
                } else if term_marks.is_empty() {
                    String::new()
                } else {
                    let maps: Vec<String> = term_marks
                        .iter()
                        .map(|&s| pts.sigma_universe[s].to_string())
                        .collect();
                    format!("  [terminates under {}]", maps.join(", "))
                };
                println!("#{i} {}{mark}", pts.states[i]);
                if uniform(&pts.dists[i]) {
                    for (to, p) in &pts.dists[i][0] {
                        if !(pts.dists[i][0].len() == 1 && *to == i) {
                            println!("  ~{p}~> #{to}");
                        }
                    }
                } else {
                    for (s, row) in pts.dists[i].iter().enumerate() {
                        for (to, p) in row {
                            if !(row.len() == 1 && *to == i) {
                                println!("  {} ~{p}~> #{to}", pts.sigma_universe[s]);
                            }
                        }
                    }
                }
                if uniform_steps(&pts.steps[i]) {
                    for (label, to) in &pts.steps[i][0] {
                        println!("  --{label}--> #{to}");
                    }
                } else {
                    for (s, row) in pts.steps[i].iter().enumerate() {
                        for (label, to) in row {
                            println!("  {} --{label}--> #{to}", pts.sigma_universe[s]);
                        }
                    }
                }
            }
        }
    }
    Ok(codes::OK)
}

// ---------------------------------------------------------------------------
// bisim
// ---------------------------------------------------------------------------

fn cmd_bisim(
    spec: &SpecFile,
    left: &str,
    right: &str,
    rooted: bool,
    max_states: usize,
    format: Format,
) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json], "bisim")?;
    let (lname, lt) = resolve(spec, Some(left))?;
    let (rname, rt) = resolve(spec, Some(right))?;
    let mut eng = Engine::for_spec(spec);
    let cfg = ExploreConfig { max_states, ..ExploreConfig::default() };
    let relation = if rooted { "rooted-branching" } else { "branching" };
    let (equivalent, evidence) = if rooted {
        match rooted_equivalent(&mut eng, &lt, &rt, &cfg) {
            Ok(Outcome::Equivalent) => (true, None),
            Ok(Outcome::Inequivalent(ev)) => (false, Some(ev.to_string())),
            Err(e) => return Ok(fail_pts(&e)),
        }
    } else {
        match branching_equivalent(&mut eng, &lt, &rt, &cfg) {
            Ok(b) => (b, None),
            Err(e) => return Ok(fail_pts(&e)),
        }
    };
    match format {
        Format::Json => {
            let doc = serde_json::json!({
                "relation": relation,
                "left": lname,
                "right": rname,
                "equivalent": equivalent,
                "evidence": evidence,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        _ => {
            println!("{} ({relation})", if equivalent { "equivalent" } else { "inequivalent" });
            if let Some(ev) = &evidence {
                println!("evidence: {ev}");
            }
        }
    }
    Ok(if equivalent { codes::OK } else { codes::INEQUIVALENT })
}

// ---------------------------------------------------------------------------
// prove / simplify
// ---------------------------------------------------------------------------

fn trace_lines(n: &pax_core::Normalized) -> Vec<String> {
    n.trace.iter().map(|t| t.to_string()).collect()
}

fn cmd_prove(
    spec: &SpecFile,
    left: &str,
    right: &str,
    budget: Option<usize>,
    trace: bool,
    format: Format,
) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json], "prove")?;
    let (lname, lt) = resolve(spec, Some(left))?;
    let (rname, rt) = resolve(spec, Some(right))?;
    let mut eng = Engine::for_spec(spec);
    let mut rw = Rewriter::new(&mut eng)?;
    if let Some(b) = budget {
        rw = rw.with_budget(b);
    }
    let verdict = rw.prove_equal(&lt, &rt)?;
    let (code, word, reason, ln, rn) = match &verdict {
        Verdict::Derived { left, right } => {
            (codes::OK, "derived", None, Some(left.clone()), Some(right.clone()))
        }
        Verdict::Unknown { reason, left, right } => {
            let code = if reason.contains("rewrite budget") { codes::BUDGET } else { codes::UNKNOWN };
            (code, "unknown", Some(reason.clone()), left.clone(), right.clone())
        }
    };
    match format {
        Format::Json => {
            let side = |n: &Option<pax_core::Normalized>| match n {
                None => serde_json::Value::Null,
                Some(n) => serde_json::json!({
                    "normal_form": n.term.to_string(),
                    "steps": n.trace.len(),
                    "trace": if trace { Some(trace_lines(n)) } else { None },
                }),
            };
            let doc = serde_json::json!({
                "verdict": word,
                "reason": reason,
                "left_name": lname,
                "right_name": rname,
                "left": side(&ln),
                "right": side(&rn),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        _ => {
            println!("{word}");
            if let Some(r) = &reason {
                println!("reason: {r}");
            }
            for (tag, n) in [("left", &ln), ("right", &rn)] {
                if let Some(n) = n {
                    if trace {
                        for line in trace_lines(n) {
                            println!("{tag}: {line}");
                        }
                    }
                    println!("{tag}:  {}", n.term);
                }
            }
        }
    }
    Ok(code)
}

fn cmd_simplify(
    spec: &SpecFile,
    process: Option<&str>,
    budget: Option<usize>,
    trace: bool,
    format: Format,
) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json], "simplify")?;
    let (name, t) = resolve(spec, process)?;
    let mut eng = Engine::for_spec(spec);
    let mut rw = Rewriter::new(&mut eng)?;
    if let Some(b) = budget {
        rw = rw.with_budget(b);
    }
    let n = match rw.normalize(&t) {
        Ok(n) => n,
        Err(e @ RewriteError::Budget { .. }) => {
            eprintln!("pax: {e}");
            return Ok(codes::BUDGET);
        }
        Err(e) => return Err(e.into()),
    };
    match format {
        Format::Json => {
            let doc = serde_json::json!({
                "process": name,
                "input": t.to_string(),
                "normal_form": n.term.to_string(),
                "steps": n.trace.len(),
                "trace": if trace { Some(trace_lines(&n)) } else { None },
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        _ => {
            if trace {
                for line in trace_lines(&n) {
                    println!("{line}");
                }
            }
            println!("{}", n.term);
        }
    }
    Ok(codes::OK)
}

// ---------------------------------------------------------------------------
// sim
// ---------------------------------------------------------------------------

fn parse_policy(s: &str) -> Result<SchedulerPolicy> {
    match s {
        "uniform-random" | "uniform" => Ok(SchedulerPolicy::UniformRandom),
        "first-by-canonical-order" | "first" => Ok(SchedulerPolicy::FirstByCanonicalOrder),
        _ => s
            .strip_prefix("priority:")
            .map(|list| {
                SchedulerPolicy::Priority(
                    list.split(',')
                        .map(|x| x.trim().to_string())
                        .filter(|x| !x.is_empty())
                        .collect(),
                )
            })
            .ok_or_else(|| {
                anyhow!(
                    "unknown policy `{s}` (use uniform-random, first-by-canonical-order, \
                     or priority:a,b,c)"
                )
            }),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("PAX_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| anyhow!("PAX_SEED must be an unsigned 64-bit integer, got `{v}`")),
        Err(_) => Ok(0),
    }
}

/// Runs an indexed batch, splitting the run indices over at most `jobs`
/// worker threads. Each worker drives its own engine, and run `i` always
/// uses RNG stream `i` of the base seed, so the traces are identical to the
/// single-threaded batch.
fn run_batch(
    spec: &SpecFile,
    root: &ProcTerm,
    sigma0: &EvalMap,
    runs: usize,
    seed: u64,
    policy: &SchedulerPolicy,
    max_steps: usize,
    jobs: usize,
) -> Result<Vec<Trace>> {
    if jobs <= 1 || runs <= 1 {
        let mut eng = Engine::for_spec(spec);
        return Ok(run_many(&mut eng, root, sigma0, runs, seed, policy, max_steps)?);
    }
    let jobs = jobs.min(runs);
    let chunk = runs.div_ceil(jobs);
    let mut out: Vec<Option<Trace>> = vec![None; runs];
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (w, slots) in out.chunks_mut(chunk).enumerate() {
            let lo = w * chunk;
            handles.push(scope.spawn(move || -> Result<()> {
                let mut eng = Engine::for_spec(spec);
                for (k, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(run_indexed(
                        &mut eng,
                        root,
                        sigma0,
                        seed,
                        (lo + k) as u64,
                        policy,
                        max_steps,
                    )?);
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("simulation worker panicked")?;
        }
        Ok(())
    })?;
    Ok(out.into_iter().map(|t| t.expect("every run index was filled")).collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sim(
    spec: &SpecFile,
    process: Option<&str>,
    runs: usize,
    seed: Option<u64>,
    policy: &str,
    event: Option<&str>,
    eval: Option<&str>,
    max_steps: usize,
    jobs: usize,
    format: Format,
) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json, Format::Csv], "sim")?;
    if runs == 0 {
        return Err(anyhow!("--runs must be at least 1"));
    }
    let (name, root) = build_root(spec, process, eval)?;
    let seed = resolve_seed(seed)?;
    let policy = parse_policy(policy)?;
    let event = event.map(Event::parse).transpose().map_err(|e| anyhow!("{e}"))?;
    let sigma0 = spec.ctx.canonical_map();

    let traces = run_batch(spec, &root, &sigma0, runs, seed, &policy, max_steps, jobs)?;
    let est = event.as_ref().map(|ev| {
        let successes = traces.iter().filter(|t| ev.holds(t)).count();
        let (lo, hi) = wilson_interval(successes, runs);
        Estimate {
            successes,
            n_runs: runs,
            frequency: Rational::new(successes as i64, runs as i64),
            lo,
            hi,
        }
    });

    match format {
        Format::Json => {
            let doc = serde_json::json!({
                "process": name,
                "seed": seed,
                "policy": policy.label(),
                "max_steps": max_steps,
                "event": event.as_ref().map(|e| e.to_string()),
                "estimate": est,
                "runs": traces,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => print_csv(&traces, seed),
        _ => match (&event, &est) {
            (Some(ev), Some(est)) => {
                println!("event: {ev}");
                println!(
                    "frequency: {}/{} = {}",
                    est.successes, est.n_runs, est.frequency
                );
                println!("wilson 95%: [{:.6}, {:.6}]", est.lo, est.hi);
            }
            _ => print_csv(&traces, seed),
        },
    }
    Ok(codes::OK)
}

fn print_csv(traces: &[Trace], seed: u64) {
    let mut out = String::new();
    let _ = writeln!(out, "{}", pax_core::simulator::csv_header());
    for (i, t) in traces.iter().enumerate() {
        let _ = writeln!(out, "{}", t.csv_row(i, seed));
    }
    print!("{out}");
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

struct Case {
    name: &'static str,
    run: fn() -> Result<(), String>,
}

fn spec_of(name: &str, src: &str) -> Result<SpecFile, String> {
    SpecFile::parse(name, src).map_err(|e| e.to_string())
}

const DIE_PAX: &str = include_str!("../../../examples/die.pax");
const TAU_PAX: &str = include_str!("../../../examples/tau.pax");
const GEOMETRIC_PAX: &str = include_str!("../../../examples/geometric.pax");
const MAJORITY_PAX: &str = include_str!("../../../examples/majority.pax");
const INTERFERENCE_PAX: &str = include_str!("../../../examples/interference.pax");
const WITNESS_PAX: &str = include_str!("../../../examples/witness.pax");
const HANDSHAKE_PAX: &str = include_str!("../../../examples/handshake.pax");

fn selftest_cases() -> Vec<Case> {
    vec![
        Case { name: "die: each face has probability exactly 1/6", run: die_exact },
        Case { name: "die: simulated throw6 frequency brackets 1/6", run: die_simulated },
        Case { name: "geometric: final value n has probability 1/2^(n+1)", run: geometric_exact },
        Case { name: "geometric: simulated tail agrees with the law", run: geometric_simulated },
        Case { name: "majority: strict majorities win with probability >= 1/2", run: majority_wins },
        Case { name: "tau laws: the four pinned verdicts", run: tau_laws },
        Case { name: "interference: shared store vs private copies", run: interference_cases },
        Case { name: "incompleteness: equivalent yet not derivable", run: incompleteness_gap },
        Case { name: "handshake: only the synchronized step survives", run: handshake_forced },
    ]
}

fn cmd_selftest(format: Format) -> Result<i32> {
    reject_format(format, &[Format::Text, Format::Json], "selftest")?;
    let mut results = Vec::new();
    for case in selftest_cases() {
        let outcome = (case.run)();
        if format == Format::Text {
            match &outcome {
                Ok(()) => println!("ok   {}", case.name),
                Err(e) => println!("FAIL {}: {e}", case.name),
            }
        }
        results.push((case.name, outcome));
    }
    let passed = results.iter().filter(|(_, r)| r.is_ok()).count();
    let total = results.len();
    match format {
        Format::Json => {
            let cases: Vec<_> = results
                .iter()
                .map(|(name, r)| {
                    serde_json::json!({
                        "name": name,
                        "ok": r.is_ok(),
                        "detail": r.as_ref().err(),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "cases": cases,
                "passed": passed,
                "total": total,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        _ => println!("{passed}/{total} cases passed"),
    }
    Ok(if passed == total { codes::OK } else { codes::INEQUIVALENT })
}

fn die_exact() -> Result<(), String> {
    let spec = spec_of("die.pax", DIE_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let sigma = spec.ctx.canonical_map();
    let die = spec.procs["Die"].clone();
    let dist = eng.distribution(&sigma, &die).map_err(|e| e.to_string())?;
    if dist.len() != 6 {
        return Err(format!("expected 6 outcomes, got {}", dist.len()));
    }
    let sixth = Rational::new(1, 6);
    let mut labels = Vec::new();
    for (target, mass) in dist.iter() {
        if *mass != sixth {
            return Err(format!("outcome `{target}` has mass {mass}, not 1/6"));
        }
        let steps = eng.action_steps(&sigma, target).map_err(|e| e.to_string())?;
        if steps.steps.len() != 1 {
            return Err(format!("outcome `{target}` is not a single throw"));
        }
        let (a, next) = steps.steps.first().unwrap();
        if !eng.terminates(&sigma, next).map_err(|e| e.to_string())? {
            return Err(format!("`{target}` does not terminate after its throw"));
        }
        labels.push(a.to_string());
    }
    let want: Vec<String> = (1..=6).map(|i| format!("throw{i}")).collect();
    if labels != want {
        return Err(format!("throw labels are {labels:?}"));
    }
    Ok(())
}

fn die_simulated() -> Result<(), String> {
    let spec = spec_of("die.pax", DIE_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let sigma = spec.ctx.canonical_map();
    let die = spec.procs["Die"].clone();
    let ev = Event::parse("performed throw6").map_err(|e| e.to_string())?;
    let est = estimate(&mut eng, &die, &sigma, &ev, 10_000, 1, &SchedulerPolicy::UniformRandom)
        .map_err(|e| e.to_string())?;
    if !est.contains(1.0 / 6.0) {
        return Err(format!(
            "1/6 outside the Wilson interval [{:.4}, {:.4}] (frequency {})",
            est.lo, est.hi, est.frequency
        ));
    }
    Ok(())
}

fn geometric_explored() -> Result<(pax_core::Explored, Vec<(DataValue, Rational)>), String> {
    let spec = spec_of("geometric.pax", GEOMETRIC_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let root = spec.procs["Main"].clone();
    let ex = explore(&mut eng, &root, &ExploreConfig::canonical()).map_err(|e| e.to_string())?;
    let absorbed = exact_terminal_distribution(&ex.pts, 0, ex.pts.root).map_err(|e| e.to_string())?;
    let mut by_value = Vec::new();
    for (state, mass) in &absorbed {
        let map = eval_root_map(&ex.terms[*state])
            .ok_or_else(|| format!("terminal state `{}` has no store", ex.pts.states[*state]))?;
        let v = map.get("v").map_err(|e| e.to_string())?;
        by_value.push((v, mass.clone()));
    }
    Ok((ex, by_value))
}

fn geometric_exact() -> Result<(), String> {
    let (_, by_value) = geometric_explored()?;
    for n in 0u64..=4 {
        let want = Rational::new(1, 1 << (n + 1));
        let got: Rational = by_value
            .iter()
            .filter(|(v, _)| *v == n)
            .map(|(_, p)| p.clone())
            .fold(Rational::zero(), |a, b| a + b);
        if got != want {
            return Err(format!("P(final v = {n}) = {got}, want {want}"));
        }
    }
    Ok(())
}

fn geometric_simulated() -> Result<(), String> {
    let spec = spec_of("geometric.pax", GEOMETRIC_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let root = spec.procs["Main"].clone();
    let sigma = spec.ctx.canonical_map();
    let ev = Event::parse("final v = 1").map_err(|e| e.to_string())?;
    let est = estimate(&mut eng, &root, &sigma, &ev, 10_000, 1, &SchedulerPolicy::UniformRandom)
        .map_err(|e| e.to_string())?;
    if !est.contains(0.25) {
        return Err(format!(
            "1/4 outside the Wilson interval [{:.4}, {:.4}] (frequency {})",
            est.lo, est.hi, est.frequency
        ));
    }
    Ok(())
}

fn majority_wins() -> Result<(), String> {
    let spec = spec_of("majority.pax", MAJORITY_PAX)?;
    let vote = spec.procs["Vote"].clone();
    let half = Rational::new(1, 2);
    let mut majorities = 0usize;
    for v1 in 0u64..=3 {
        for v2 in 0u64..=3 {
            for v3 in 0u64..=3 {
                let has_majority =
                    v1 == v2 || v1 == v3 || v2 == v3;
                if !has_majority {
                    continue;
                }
                majorities += 1;
                let sigma = EvalMap::new(
                    &spec.ctx,
                    [
                        ("v1".to_string(), v1),
                        ("v2".to_string(), v2),
                        ("v3".to_string(), v3),
                        ("v".to_string(), 0),
                        ("vp".to_string(), 0),
                        ("w".to_string(), 0),
                    ],
                )
                .map_err(|e| e.to_string())?;
                let root = ProcTerm::eval_wrap(sigma, vote.clone());
                let mut eng = Engine::for_spec(&spec);
                let ex = explore(&mut eng, &root, &ExploreConfig::canonical())
                    .map_err(|e| e.to_string())?;
                let absorbed = exact_terminal_distribution(&ex.pts, 0, ex.pts.root)
                    .map_err(|e| e.to_string())?;
                let mut p_win = Rational::zero();
                for (state, mass) in &absorbed {
                    let map = eval_root_map(&ex.terms[*state])
                        .ok_or_else(|| "terminal state without a store".to_string())?;
                    if map.get("w").map_err(|e| e.to_string())? == 1 {
                        p_win = p_win + mass.clone();
                    }
                }
                if p_win.as_big() < half.as_big() {
                    return Err(format!(
                        "ballots ({v1},{v2},{v3}): P(final w = 1) = {p_win} < 1/2"
                    ));
                }
            }
        }
    }
    if majorities != 40 {
        return Err(format!("expected 40 strict-majority ballots, saw {majorities}"));
    }
    Ok(())
}

fn tau_laws() -> Result<(), String> {
    let spec = spec_of("tau.pax", TAU_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let cfg = ExploreConfig::default();
    let get = |n: &str| spec.procs[n].clone();
    let rooted = |eng: &mut Engine, a: &ProcTerm, b: &ProcTerm| {
        rooted_equivalent(eng, a, b, &cfg).map(|o| o.is_equivalent()).map_err(|e| e.to_string())
    };
    let branching = |eng: &mut Engine, a: &ProcTerm, b: &ProcTerm| {
        branching_equivalent(eng, a, b, &cfg).map_err(|e| e.to_string())
    };
    if rooted(&mut eng, &get("TA"), &get("A"))? {
        return Err("tau . a vs a: rooted relation failed to separate them".into());
    }
    if !branching(&mut eng, &get("TA"), &get("A"))? {
        return Err("tau . a vs a: plain branching relation failed to merge them".into());
    }
    if rooted(&mut eng, &get("ATP"), &get("AP"))? {
        return Err("the tau before a probabilistic draw was erased (rooted)".into());
    }
    if branching(&mut eng, &get("TEP"), &get("EP"))? {
        return Err("(tau . eps) . p vs eps . p: branching relation merged them".into());
    }
    Ok(())
}

fn interference_cases() -> Result<(), String> {
    let spec = spec_of("interference.pax", INTERFERENCE_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let ones = spec.resolve_eval(Some("ones")).map_err(|e| e.to_string())?;
    let two = spec.procs["Two"].clone();
    let quot = spec.procs["Quot"].clone();
    let sum = spec.procs["Sum"].clone();
    let free = interference_free(&mut eng, &ones, &two, &quot).map_err(|e| e.to_string())?;
    if !free.is_equivalent() {
        return Err("Two / Quot should be interference-free".into());
    }
    let interferes = interference_free(&mut eng, &ones, &two, &sum).map_err(|e| e.to_string())?;
    if interferes.is_equivalent() {
        return Err("Two / Sum should interfere".into());
    }
    Ok(())
}

fn incompleteness_gap() -> Result<(), String> {
    let spec = spec_of("witness.pax", WITNESS_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let wit = spec.procs["Wit"].clone();
    let ta = spec.procs["Ta"].clone();
    match rooted_equivalent(&mut eng, &wit, &ta, &ExploreConfig::default()) {
        Ok(Outcome::Equivalent) => {}
        Ok(Outcome::Inequivalent(ev)) => return Err(format!("expected equivalent, got: {ev}")),
        Err(e) => return Err(e.to_string()),
    }
    let mut rw = Rewriter::new(&mut eng).map_err(|e| e.to_string())?;
    match rw.prove_equal(&wit, &ta).map_err(|e| e.to_string())? {
        Verdict::Unknown { .. } => Ok(()),
        Verdict::Derived { .. } => {
            Err("the prover claimed to derive an equation it cannot".into())
        }
    }
}

fn handshake_forced() -> Result<(), String> {
    let spec = spec_of("handshake.pax", HANDSHAKE_PAX)?;
    let mut eng = Engine::for_spec(&spec);
    let sigma = spec.ctx.canonical_map();
    let sys = spec.procs["Sys"].clone();
    let steps = eng.action_steps(&sigma, &sys).map_err(|e| e.to_string())?;
    let labels: Vec<String> = steps.steps.iter().map(|(a, _)| a.to_string()).collect();
    if labels != ["c(1)"] {
        return Err(format!("expected exactly [c(1)], got {labels:?}"));
    }
    Ok(())
}
