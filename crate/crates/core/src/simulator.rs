//! Seeded sampling of executions.
//!
//! The operational relations only say what a state *may* do; this module
//! turns them into runs. Each macro step follows the principle that
//! probabilistic choices are resolved before any other choice: the state's
//! distribution is sampled first, with an exact rational inverse-CDF
//! against a 64-bit uniform integer, and only then does a [`SchedulerPolicy`]
//! pick among the resolved state's action steps and (when enabled) its
//! termination option. Schedulers are an artifact construct — the algebra
//! itself assigns no execution order to nondeterminism — and every output
//! that involves one says which policy produced it.
//!
//! Runs are deterministic in (root, ambient map, seed, policy, step limit):
//! run `i` of a batch uses the ChaCha12 stream `i` of the base seed, each
//! macro step consumes exactly one 64-bit draw for the probabilistic
//! resolution, and the uniform-random scheduler consumes one further bounded
//! sample; the other schedulers consume nothing.
//!
//! The ambient evaluation map is fixed for the whole run. Stores evolve only
//! inside evaluation-wrapped subterms, exactly as in the transition rules,
//! and the final map of an evaluation-rooted system is read off the final
//! state's outermost wrapper. Bound-clamped arithmetic — a finite-universe
//! artifact — is recorded per run by re-evaluating, with logging, the
//! guard conditions and evaluated-label expressions the engine consults at
//! each visited state (the short-circuit skips of condition evaluation are
//! mirrored, so the count reflects evaluations actually performed; branches
//! pruned by false guards may still be scanned).

use num::bigint::BigInt;
use num::rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data_model::{
    eval_cond_logged, eval_data_logged, ClampLog, DataCtx, DataError, DataValue, EvalMap,
};
use crate::meadow::Rational;
use crate::process_terms::{unfold, Action, ProcTerm, TermKind};
use crate::pts_builder::eval_root_map;
use crate::sos_engine::{Engine, EngineError};

/// Default per-run step limit.
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Two-sided 97.5% standard-normal quantile, pinned for reproducibility of
/// the 95% Wilson score interval.
pub const WILSON_Z: f64 = 1.959963984540054;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(
        "unrecognized event `{0}`; expected `performed <name>`, `final <var> = <value>`, \
         `terminated`, or `deadlocked`"
    )]
    BadEvent(String),
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalStatus {
    /// The scheduler chose an enabled termination option.
    Terminated,
    /// The resolved state offered neither a step nor termination.
    Deadlocked,
    /// The step limit was reached first.
    StepLimit,
}

impl std::fmt::Display for FinalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FinalStatus::Terminated => "terminated",
            FinalStatus::Deadlocked => "deadlocked",
            FinalStatus::StepLimit => "step-limit",
        })
    }
}

/// One probabilistic resolution: which target the inverse-CDF draw picked,
/// with how much mass, out of how large a support.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DrawRecord {
    pub target: String,
    pub mass: Rational,
    pub support: usize,
}

/// One complete run.
///
/// # Invariants
///
/// Draws and actions alternate (a run ends either on a draw — deadlock or
/// a zero-step limit — or after an action), so `draws.len()` is
/// `actions.len()` or `actions.len() + 1`; every recorded draw has positive
/// mass in its state's distribution, and every recorded action was in the
/// resolved state's step set.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Trace {
    pub draws: Vec<DrawRecord>,
    pub actions: Vec<String>,
    pub status: FinalStatus,
    /// The final variable store, for evaluation-rooted systems.
    pub final_map: Option<EvalMap>,
    /// Bound-clamp events observed along the run (finite-universe artifacts).
    pub clamps: ClampLog,
}

/// How nondeterminism left after probabilistic resolution is settled.
///
/// The option list of a resolved state is its action steps in canonical
/// (label, target) order, with the termination option last when enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// Uniformly random over the whole option list.
    UniformRandom,
    /// Always the first option: the least action step, or termination only
    /// when no step is enabled.
    FirstByCanonicalOrder,
    /// Best-ranked option by a name list: an action is keyed by its name
    /// (`tau` for the silent action, the variable name for an assignment);
    /// unlisted keys rank after listed ones and termination ranks last,
    /// ties resolved in canonical order.
    Priority(Vec<String>),
}

impl SchedulerPolicy {
    /// The policy's name as printed in reports.
    pub fn label(&self) -> String {
        match self {
            SchedulerPolicy::UniformRandom => "uniform-random".to_string(),
            SchedulerPolicy::FirstByCanonicalOrder => "first-by-canonical-order".to_string(),
            SchedulerPolicy::Priority(names) => format!("priority:{}", names.join(",")),
        }
    }
}

/// A checkable predicate over finished [`Trace`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// Some performed action has this name (parameterized actions match on
    /// the bare name).
    Performed(String),
    /// The run is evaluation-rooted and its final store maps the variable to
    /// the value.
    FinalVar(String, DataValue),
    Terminated,
    Deadlocked,
}

impl Event {
    /// Parses `performed <name>`, `final <var> = <value>`, `terminated`, or
    /// `deadlocked`.
    pub fn parse(text: &str) -> Result<Event, SimError> {
        let s = text.trim();
        if s == "terminated" {
            return Ok(Event::Terminated);
        }
        if s == "deadlocked" {
            return Ok(Event::Deadlocked);
        }
        if let Some(name) = s.strip_prefix("performed ") {
            let name = name.trim();
            if !name.is_empty() && !name.contains(char::is_whitespace) {
                return Ok(Event::Performed(name.to_string()));
            }
        }
        if let Some(rest) = s.strip_prefix("final ") {
            if let Some((var, val)) = rest.split_once('=') {
                let var = var.trim();
                if let (false, Ok(val)) = (var.is_empty(), val.trim().parse::<DataValue>()) {
                    return Ok(Event::FinalVar(var.to_string(), val));
                }
            }
        }
        Err(SimError::BadEvent(text.to_string()))
    }

    pub fn holds(&self, trace: &Trace) -> bool {
        match self {
            Event::Performed(name) => trace
                .actions
                .iter()
                .any(|a| a == name || a.starts_with(&format!("{name}("))),
            Event::FinalVar(var, val) => trace
                .final_map
                .as_ref()
                .is_some_and(|m| m.get(var).ok() == Some(*val)),
            Event::Terminated => trace.status == FinalStatus::Terminated,
            Event::Deadlocked => trace.status == FinalStatus::Deadlocked,
        }
    }
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Event::Performed(n) => write!(f, "performed {n}"),
            Event::FinalVar(v, d) => write!(f, "final {v} = {d}"),
            Event::Terminated => write!(f, "terminated"),
            Event::Deadlocked => write!(f, "deadlocked"),
        }
    }
}

/// An empirical frequency with its 95% Wilson score interval.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Estimate {
    pub successes: usize,
    pub n_runs: usize,
    /// Exact `successes / n_runs`.
    pub frequency: Rational,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// The 95% Wilson score interval for `successes` out of `n` (clipped to
/// [0, 1]), with [`WILSON_Z`].
///
/// # Panics
///
/// Panics if `n == 0`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    assert!(n > 0, "an interval needs at least one run");
    assert!(successes <= n);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = (WILSON_Z / denom) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One run with the RNG seeded directly from `seed` (stream 0).
///
/// Deterministic in all arguments. Deadlock and the step limit are
/// statuses, not errors.
pub fn run_once(
    engine: &mut Engine,
    root: &ProcTerm,
    sigma0: &EvalMap,
    seed: u64,
    policy: &SchedulerPolicy,
    max_steps: usize,
) -> Result<Trace, SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    run_with_rng(engine, root, sigma0, &mut rng, policy, max_steps)
}

/// Run `run_index` of the batch with base seed `seed`: the RNG is seeded
/// from `seed` and moved to stream `run_index`, so distinct runs are
/// independent and any run can be reproduced without replaying the batch.
pub fn run_indexed(
    engine: &mut Engine,
    root: &ProcTerm,
    sigma0: &EvalMap,
    seed: u64,
    run_index: u64,
    policy: &SchedulerPolicy,
    max_steps: usize,
) -> Result<Trace, SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    run_with_rng(engine, root, sigma0, &mut rng, policy, max_steps)
}

/// Runs `0..n_runs` via [`run_indexed`] and collects the traces.
pub fn run_many(
    engine: &mut Engine,
    root: &ProcTerm,
    sigma0: &EvalMap,
    n_runs: usize,
    seed: u64,
    policy: &SchedulerPolicy,
    max_steps: usize,
) -> Result<Vec<Trace>, SimError> {
    (0..n_runs)
        .map(|i| run_indexed(engine, root, sigma0, seed, i as u64, policy, max_steps))
        .collect()
}

/// The empirical frequency of `event` over `n_runs` indexed runs (step limit
/// [`DEFAULT_MAX_STEPS`]), with its Wilson interval.
///
/// # Panics
///
/// Panics if `n_runs == 0`.
pub fn estimate(
    engine: &mut Engine,
    root: &ProcTerm,
    sigma0: &EvalMap,
    event: &Event,
    n_runs: usize,
    seed: u64,
    policy: &SchedulerPolicy,
) -> Result<Estimate, SimError> {
    assert!(n_runs >= 1, "an estimate needs at least one run");
    let mut successes = 0usize;
    for i in 0..n_runs {
        let trace =
            run_indexed(engine, root, sigma0, seed, i as u64, policy, DEFAULT_MAX_STEPS)?;
        if event.holds(&trace) {
            successes += 1;
        }
    }
    let (lo, hi) = wilson_interval(successes, n_runs);
    Ok(Estimate {
        successes,
        n_runs,
        frequency: Rational::new(successes as i64, n_runs as i64),
        lo,
        hi,
    })
}

fn run_with_rng(
    engine: &mut Engine,
    root: &ProcTerm,
    sigma0: &EvalMap,
    rng: &mut ChaCha12Rng,
    policy: &SchedulerPolicy,
    max_steps: usize,
) -> Result<Trace, SimError> {
    let ctx = engine.ctx().clone();
    let mut state = root.clone();
    let mut draws = Vec::new();
    let mut actions = Vec::new();
    let mut clamps = ClampLog::default();
    let status = loop {
        if actions.len() >= max_steps {
            break FinalStatus::StepLimit;
        }
        // Resolve the probabilistic choice first.
        let dist = engine.distribution(sigma0, &state)?;
        let resolved = draw(&dist, rng, &mut draws);
        state = resolved;
        scan_clamps(engine, &ctx, sigma0, None, &state, &mut clamps)?;
        // Then let the scheduler pick among steps and termination.
        let steps = engine.action_steps(sigma0, &state)?;
        let mut options: Vec<Option<(Action, ProcTerm)>> =
            steps.steps.iter().cloned().map(Some).collect();
        if steps.terminating {
            options.push(None);
        }
        if options.is_empty() {
            break FinalStatus::Deadlocked;
        }
        match pick(policy, &options, rng) {
            None => break FinalStatus::Terminated,
            Some((label, target)) => {
                actions.push(label.to_string());
                state = target;
            }
        }
    };
    let final_map = eval_root_map(&state).cloned();
    Ok(Trace { draws, actions, status, final_map, clamps })
}

/// Exact inverse-CDF draw: the first target, in canonical term order, whose
/// cumulative mass exceeds `u / 2^64`.
fn draw(
    dist: &crate::sos_engine::Distribution,
    rng: &mut ChaCha12Rng,
    draws: &mut Vec<DrawRecord>,
) -> ProcTerm {
    let u = rng.gen::<u64>();
    let threshold = Rational::from_big(BigRational::new(
        BigInt::from(u),
        BigInt::from(1u128 << 64),
    ));
    let support = dist.len();
    let mut cum = Rational::zero();
    let mut picked: Option<(&ProcTerm, &Rational)> = None;
    for (t, p) in dist.iter() {
        cum = cum + p.clone();
        if threshold < cum {
            picked = Some((t, p));
            break;
        }
    }
    // Total mass is exactly 1 and the threshold is below 1, so the walk
    // always lands; the picked mass is positive since zero-mass entries
    // cannot move the cumulative past the threshold.
    let (t, p) = picked.expect("distribution sums to one");
    draws.push(DrawRecord { target: t.to_string(), mass: p.clone(), support });
    t.clone()
}

/// Applies the policy to a nonempty option list (`None` = terminate, always
/// last). Returns the chosen option.
fn pick(
    policy: &SchedulerPolicy,
    options: &[Option<(Action, ProcTerm)>],
    rng: &mut ChaCha12Rng,
) -> Option<(Action, ProcTerm)> {
    let i = match policy {
        SchedulerPolicy::UniformRandom => rng.gen_range(0..options.len()),
        SchedulerPolicy::FirstByCanonicalOrder => 0,
        SchedulerPolicy::Priority(names) => {
            let rank = |opt: &Option<(Action, ProcTerm)>| -> usize {
                match opt {
                    None => names.len() + 1,
                    Some((a, _)) => {
                        let key = match a {
                            Action::Basic(n) | Action::Param(n, _) => n.as_str(),
                            Action::Assign(v, _) => v.as_str(),
                            Action::Tau => "tau",
                            Action::Delta => "delta",
                        };
                        names.iter().position(|n| n == key).unwrap_or(names.len())
                    }
                }
            };
            let mut best = 0usize;
            for (i, opt) in options.iter().enumerate().skip(1) {
                if rank(opt) < rank(&options[best]) {
                    best = i;
                }
            }
            best
        }
    };
    options[i].clone()
}

/// Re-evaluates, with clamp logging, the data the engine consults to compute
/// this state's offered behavior: guard conditions (under the governing
/// wrapper map, or the ambient map outside any wrapper) and action-label
/// expressions in evaluated positions (under a wrapper map only — raw labels
/// are not evaluated by the transition rules).
fn scan_clamps(
    engine: &mut Engine,
    ctx: &DataCtx,
    ambient: &EvalMap,
    governing: Option<&EvalMap>,
    t: &ProcTerm,
    log: &mut ClampLog,
) -> Result<(), SimError> {
    match t.kind() {
        TermKind::Act(a) => {
            if let Some(sigma) = governing {
                match a {
                    Action::Param(_, es) => {
                        for e in es {
                            eval_data_logged(ctx, sigma, e, log)?;
                        }
                    }
                    Action::Assign(_, e) => {
                        eval_data_logged(ctx, sigma, e, log)?;
                    }
                    _ => {}
                }
            }
            Ok(())
        }
        TermKind::Eps | TermKind::RecVar(_) => Ok(()),
        TermKind::Alt(x, y)
        | TermKind::Par(x, y)
        | TermKind::LMerge(x, y)
        | TermKind::CMerge(x, y)
        | TermKind::PChoice(_, x, y) => {
            scan_clamps(engine, ctx, ambient, governing, x, log)?;
            scan_clamps(engine, ctx, ambient, governing, y, log)
        }
        TermKind::Seq(x, y) => {
            scan_clamps(engine, ctx, ambient, governing, x, log)?;
            // The sequencing rules evaluate the tail's labels exactly when the
            // head can terminate (its steps then become steps of the whole).
            if engine.terminates(governing.unwrap_or(ambient), x)? {
                scan_clamps(engine, ctx, ambient, governing, y, log)?;
            }
            Ok(())
        }
        TermKind::TermTest(x) | TermKind::Encap(_, x) | TermKind::Hide(_, x) => {
            scan_clamps(engine, ctx, ambient, governing, x, log)
        }
        TermKind::Guard(phi, x) => {
            // A failed guard prunes its body: the rules never evaluate the
            // labels behind it, so neither does the scan.
            if eval_cond_logged(ctx, governing.unwrap_or(ambient), phi, log)? {
                scan_clamps(engine, ctx, ambient, governing, x, log)?;
            }
            Ok(())
        }
        TermKind::Eval(sigma, x) => scan_clamps(engine, ctx, ambient, Some(sigma), x, log),
        TermKind::RecConst(v, spec) => {
            if let Ok(u) = unfold(spec, v) {
                scan_clamps(engine, ctx, ambient, governing, &u, log)?;
            }
            Ok(())
        }
    }
}

/// The CSV header matching [`Trace::csv_row`].
pub fn csv_header() -> &'static str {
    "run,seed,status,final_map,actions"
}

impl Trace {
    /// One CSV data row: the run index, the base seed, the final status, the
    /// final store (`-` when the system is not evaluation-rooted), and the
    /// performed actions joined by `;`.
    pub fn csv_row(&self, run: usize, seed: u64) -> String {
        let map = match &self.final_map {
            Some(m) => csv_field(&m.to_string()),
            None => "-".to_string(),
        };
        let actions = csv_field(&self.actions.join(";"));
        format!("{run},{seed},{status},{map},{actions}", status = self.status)
    }
}

fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{Cond, DataTerm};
    use crate::meadow::Prob;
    use crate::process_terms::{validate_rec_spec, CommFunction, RecSpec};
    use std::sync::Arc;

    fn pure_engine() -> Engine {
        Engine::pure(1)
    }

    fn no_map(engine: &Engine) -> EvalMap {
        engine.ctx().canonical_map()
    }

    /// The six-sided die: a right-nested chain whose leaves each carry
    /// exactly 1/6.
    fn die() -> ProcTerm {
        let throw = |i: usize| ProcTerm::basic(&format!("throw{i}"));
        let mut t = throw(6);
        for (i, num) in [(5usize, 2i64), (4, 3), (3, 4), (2, 5), (1, 6)] {
            t = ProcTerm::pchoice(Prob::frac(1, num), throw(i), t);
        }
        t
    }

    /// The counting loop at bound `B`: set `v` to 0, then repeatedly flip a
    /// fair coin between incrementing `v` (and continuing) and stopping.
    fn counting_loop(ctx: &DataCtx) -> ProcTerm {
        let assign0 = ProcTerm::act(Action::assign("v", DataTerm::lit(0)));
        let inc = ProcTerm::act(Action::assign(
            "v",
            DataTerm::Add(Box::new(DataTerm::var("v")), Box::new(DataTerm::lit(1))),
        ));
        let spec = Arc::new(RecSpec::new(
            "Loop",
            [
                (
                    "X".to_string(),
                    ProcTerm::guard(Cond::True, ProcTerm::seq(assign0, ProcTerm::rec_var("Y"))),
                ),
                (
                    "Y".to_string(),
                    ProcTerm::pchoice(
                        Prob::half(),
                        ProcTerm::guard(Cond::True, ProcTerm::seq(inc, ProcTerm::rec_var("Y"))),
                        ProcTerm::guard(Cond::True, ProcTerm::eps()),
                    ),
                ),
            ],
        ));
        validate_rec_spec(&spec).unwrap();
        ProcTerm::eval_wrap(ctx.canonical_map(), ProcTerm::rec_const("X", spec))
    }

    #[test]
    fn a_deadlocked_root_ends_with_no_actions() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let t = run_once(
            &mut eng,
            &ProcTerm::delta(),
            &sigma,
            0,
            &SchedulerPolicy::FirstByCanonicalOrder,
            10,
        )
        .unwrap();
        assert_eq!(t.status, FinalStatus::Deadlocked);
        assert!(t.actions.is_empty());
        assert_eq!(t.draws.len(), 1, "the point resolution is still recorded");
    }

    #[test]
    fn the_die_performs_one_throw_and_terminates() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        for seed in 0..30u64 {
            let t = run_once(
                &mut eng,
                &die(),
                &sigma,
                seed,
                &SchedulerPolicy::FirstByCanonicalOrder,
                100,
            )
            .unwrap();
            assert_eq!(t.status, FinalStatus::Terminated);
            assert_eq!(t.actions.len(), 1);
            assert!(t.actions[0].starts_with("throw"), "got {:?}", t.actions);
            let first = &t.draws[0];
            assert_eq!(first.support, 6);
            assert_eq!(first.mass, Rational::new(1, 6));
        }
    }

    #[test]
    fn runs_are_reproducible_and_streams_are_independent() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let policy = SchedulerPolicy::UniformRandom;
        let a = run_once(&mut eng, &die(), &sigma, 42, &policy, 100).unwrap();
        let b = run_once(&mut eng, &die(), &sigma, 42, &policy, 100).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));

        let outcomes: std::collections::BTreeSet<String> = (0..64)
            .map(|i| {
                run_indexed(&mut eng, &die(), &sigma, 42, i, &policy, 100)
                    .unwrap()
                    .actions[0]
                    .clone()
            })
            .collect();
        assert!(outcomes.len() >= 4, "64 streams hit at least 4 faces: {outcomes:?}");
    }

    #[test]
    fn every_recorded_draw_has_positive_mass() {
        let ctx = DataCtx::new(4, ["v".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), CommFunction::default());
        let sigma = ctx.canonical_map();
        let root = counting_loop(&ctx);
        for seed in 0..20u64 {
            let t = run_once(
                &mut eng,
                &root,
                &sigma,
                seed,
                &SchedulerPolicy::FirstByCanonicalOrder,
                200,
            )
            .unwrap();
            assert!(t.draws.iter().all(|d| d.mass > Rational::zero()));
            assert!(
                t.draws.len() == t.actions.len() || t.draws.len() == t.actions.len() + 1,
                "draws and actions alternate"
            );
            assert_eq!(t.status, FinalStatus::Terminated);
        }
    }

    #[test]
    fn schedulers_resolve_a_choice_as_documented() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let two = ProcTerm::alt(ProcTerm::basic("a"), ProcTerm::basic("b"));

        let first = run_once(&mut eng, &two, &sigma, 0, &SchedulerPolicy::FirstByCanonicalOrder, 10)
            .unwrap();
        assert_eq!(first.actions, vec!["a"]);

        let prio = SchedulerPolicy::Priority(vec!["b".to_string()]);
        let prioritized = run_once(&mut eng, &two, &sigma, 0, &prio, 10).unwrap();
        assert_eq!(prioritized.actions, vec!["b"]);

        let seen: std::collections::BTreeSet<String> = (0..40)
            .map(|i| {
                run_indexed(&mut eng, &two, &sigma, 5, i, &SchedulerPolicy::UniformRandom, 10)
                    .unwrap()
                    .actions[0]
                    .clone()
            })
            .collect();
        assert_eq!(seen.len(), 2, "uniform scheduling reaches both branches");
    }

    #[test]
    fn termination_is_an_option_ranked_last() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let t = ProcTerm::alt(ProcTerm::eps(), ProcTerm::basic("a"));

        let canonical =
            run_once(&mut eng, &t, &sigma, 0, &SchedulerPolicy::FirstByCanonicalOrder, 10)
                .unwrap();
        assert_eq!(canonical.actions, vec!["a"], "a step outranks termination");

        let terminated_immediately = (0..40).any(|i| {
            let tr =
                run_indexed(&mut eng, &t, &sigma, 9, i, &SchedulerPolicy::UniformRandom, 10)
                    .unwrap();
            tr.status == FinalStatus::Terminated && tr.actions.is_empty()
        });
        assert!(terminated_immediately, "uniform scheduling can pick termination directly");
    }

    #[test]
    fn a_certain_event_estimates_to_exactly_one() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let est = estimate(
            &mut eng,
            &ProcTerm::basic("a"),
            &sigma,
            &Event::Performed("a".to_string()),
            10,
            0,
            &SchedulerPolicy::FirstByCanonicalOrder,
        )
        .unwrap();
        assert_eq!(est.frequency, Rational::one());
        assert_eq!(est.successes, 10);
        assert!(est.hi >= 1.0 - 1e-12 && est.lo > 0.5);
    }

    #[test]
    fn the_die_estimate_brackets_one_sixth() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let p = 1.0 / 6.0;
        for seed in [1u64, 2, 3] {
            let est = estimate(
                &mut eng,
                &die(),
                &sigma,
                &Event::Performed("throw6".to_string()),
                6_000,
                seed,
                &SchedulerPolicy::FirstByCanonicalOrder,
            )
            .unwrap();
            assert!(
                est.contains(p),
                "seed {seed}: interval [{}, {}] misses 1/6 at frequency {}",
                est.lo,
                est.hi,
                est.frequency
            );
        }
    }

    #[test]
    fn the_counting_loop_matches_its_exact_law_and_reports_clamps() {
        let ctx = DataCtx::new(4, ["v".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), CommFunction::default());
        let sigma = ctx.canonical_map();
        let root = counting_loop(&ctx);
        // P(final v = 0) = 1/2 exactly; the estimate's interval brackets it.
        let est = estimate(
            &mut eng,
            &root,
            &sigma,
            &Event::FinalVar("v".to_string(), 0),
            8_000,
            11,
            &SchedulerPolicy::FirstByCanonicalOrder,
        )
        .unwrap();
        assert!(est.contains(0.5), "interval [{}, {}]", est.lo, est.hi);

        // A run that keeps incrementing past the bound records the clamp.
        let clamped = (0..200u64)
            .map(|i| {
                run_indexed(
                    &mut eng,
                    &root,
                    &sigma,
                    3,
                    i,
                    &SchedulerPolicy::FirstByCanonicalOrder,
                    200,
                )
                .unwrap()
            })
            .find(|t| !t.clamps.is_empty());
        let clamped = clamped.expect("some run of 200 pushes v past the bound");
        assert_eq!(clamped.final_map.as_ref().unwrap().get("v").unwrap(), 4);
        assert!(clamped.clamps.samples.iter().any(|(op, raw, bound)| {
            *op == "+" && *raw == 5 && *bound == 4
        }));
    }

    #[test]
    fn events_parse_and_print_round_trip() {
        for text in ["performed throw6", "final v = 3", "terminated", "deadlocked"] {
            let ev = Event::parse(text).unwrap();
            assert_eq!(ev.to_string(), text);
        }
        for bad in ["", "performed", "final v", "final = 3", "performed two words"] {
            assert!(Event::parse(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn csv_rows_quote_the_store_and_join_actions() {
        let ctx = DataCtx::new(4, ["v".to_string(), "w".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), CommFunction::default());
        let sigma = ctx.canonical_map();
        let root = counting_loop(&ctx);
        let t = run_once(
            &mut eng,
            &root,
            &sigma,
            7,
            &SchedulerPolicy::FirstByCanonicalOrder,
            200,
        )
        .unwrap();
        let row = t.csv_row(0, 7);
        assert!(row.starts_with("0,7,terminated,"), "row: {row}");
        let fields: Vec<&str> = row.splitn(4, ',').collect();
        assert_eq!(fields.len(), 4);
        assert!(row.contains("v := 0"), "actions field carries the labels: {row}");
    }

    #[test]
    fn a_zero_step_budget_reports_the_limit() {
        let mut eng = pure_engine();
        let sigma = no_map(&eng);
        let t = run_once(
            &mut eng,
            &ProcTerm::basic("a"),
            &sigma,
            0,
            &SchedulerPolicy::FirstByCanonicalOrder,
            0,
        )
        .unwrap();
        assert_eq!(t.status, FinalStatus::StepLimit);
        assert!(t.draws.is_empty() && t.actions.is_empty());
    }
}
