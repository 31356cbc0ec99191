//! Finite reachable probabilistic transition systems.
//!
//! [`explore`] materializes the reachable fragment of the semantics rooted at
//! a closed term: states are terms numbered in breadth-first discovery order,
//! and each state carries — for every evaluation map in scope — its
//! probability distribution, its action edges, and its termination flag.
//! The result feeds the equivalence checker, the JSON/dot exporters
//! ([`Pts::to_json`], [`Pts::to_dot`]), and the exact terminal-distribution
//! solver ([`exact_terminal_distribution`]) used for closed-form answers on
//! scheduler-free systems.
//!
//! # Determinism
//!
//! Two explorations of the same input produce byte-identical exports: state
//! numbers follow first discovery (breadth-first over states, then maps in
//! enumeration order, then distribution supports, then action steps, both in
//! their canonical orders), and every row is sorted before storage.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde_json::{json, Value};
use thiserror::Error;

use crate::data_model::{data_equiv, DataCtx, DataError, DataValue, EvalMap};
use crate::meadow::Rational;
use crate::process_terms::{Action, ProcTerm, TermKind};
use crate::sos_engine::{Engine, EngineError};

/// Which evaluation maps to run the exploration under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// Every map over the declared variables (finitely many).
    All,
    /// Only the canonical all-zero map. Valid only for roots whose behaviour
    /// cannot depend on the ambient map (checked): evaluation-rooted terms,
    /// or terms built without guards, recursion, or open data arguments.
    Canonical,
}

/// Exploration limits and mode.
#[derive(Debug, Clone)]
pub struct ExploreConfig {
    /// Hard cap on the number of states; exceeding it is an error.
    pub max_states: usize,
    pub sigma_mode: SigmaMode,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig { max_states: 100_000, sigma_mode: SigmaMode::All }
    }
}

impl ExploreConfig {
    /// The default limits with the canonical single-map mode.
    pub fn canonical() -> Self {
        ExploreConfig { sigma_mode: SigmaMode::Canonical, ..ExploreConfig::default() }
    }
}

#[derive(Debug, Error)]
pub enum PtsError {
    #[error(
        "state budget of {max_states} exceeded while interning `{frontier}`"
    )]
    BudgetExceeded { max_states: usize, frontier: String },
    #[error(
        "canonical map mode needs an evaluation-rooted (or map-insensitive) root, got `{term}`"
    )]
    NonEvalRoot { term: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("malformed transition-system JSON: {0}")]
    BadJson(String),
    #[error("state `{state}` offers more than one scheduler option; the exact solver needs a scheduler-free system")]
    NotDeterministic { state: String },
    #[error("the system does not reach a terminal state with probability 1")]
    NotAbsorbing,
}

/// A finite probabilistic transition system over pretty-printed states.
///
/// All rows are index-aligned with `states` and sorted; `sigma_universe`
/// fixes the meaning of every `sigma` index. Label strings are canonical
/// class representatives: two edges carry the same string exactly when their
/// underlying action labels are data-equivalent.
///
/// # Invariants
///
/// * every per-state, per-map distribution sums to exactly 1;
/// * every target index is a valid state index;
/// * state strings are pairwise distinct (the printer is injective on the
///   explored terms; violations panic during exploration).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pts {
    /// Canonical printed form of each state, in discovery order.
    pub states: Vec<String>,
    pub root: usize,
    pub sigma_universe: Vec<EvalMap>,
    /// `dists[state][sigma]` = sorted `(target, mass)` pairs, masses > 0.
    pub dists: Vec<Vec<Vec<(usize, Rational)>>>,
    /// `steps[state][sigma]` = sorted, deduplicated `(label, target)` pairs.
    pub steps: Vec<Vec<Vec<(String, usize)>>>,
    /// `term[state][sigma]` = whether the state can terminate there.
    pub term: Vec<Vec<bool>>,
}

/// An exploration result: the serializable system plus the actual terms
/// behind its states (index-aligned) and the indices of the requested roots.
#[derive(Debug, Clone)]
pub struct Explored {
    pub pts: Pts,
    pub terms: Vec<ProcTerm>,
    pub roots: Vec<usize>,
}

/// Explores the reachable system of a single root.
pub fn explore(
    engine: &mut Engine,
    root: &ProcTerm,
    cfg: &ExploreConfig,
) -> Result<Explored, PtsError> {
    explore_multi(engine, std::slice::from_ref(root), cfg)
}

/// Explores the union of the systems reachable from several roots in one
/// shared state space (used for pairwise equivalence checks). The first root
/// becomes the system's `root` index.
pub fn explore_multi(
    engine: &mut Engine,
    roots: &[ProcTerm],
    cfg: &ExploreConfig,
) -> Result<Explored, PtsError> {
    assert!(!roots.is_empty(), "need at least one root");
    let ctx = engine.ctx().clone();
    let sigmas = match cfg.sigma_mode {
        SigmaMode::All => ctx.enumerate_maps()?,
        SigmaMode::Canonical => {
            for r in roots {
                if !map_insensitive(r) {
                    return Err(PtsError::NonEvalRoot { term: r.to_string() });
                }
            }
            vec![ctx.canonical_map()]
        }
    };

    let mut terms: Vec<ProcTerm> = Vec::new();
    let mut index: HashMap<ProcTerm, usize> = HashMap::new();
    let mut by_pretty: HashMap<String, usize> = HashMap::new();
    let intern = |t: &ProcTerm,
                      terms: &mut Vec<ProcTerm>,
                      index: &mut HashMap<ProcTerm, usize>,
                      by_pretty: &mut HashMap<String, usize>|
     -> Result<usize, PtsError> {
        if let Some(&i) = index.get(t) {
            return Ok(i);
        }
        if terms.len() >= cfg.max_states {
            return Err(PtsError::BudgetExceeded {
                max_states: cfg.max_states,
                frontier: t.to_string(),
            });
        }
        let i = terms.len();
        let printed = t.to_string();
        // State identity is structural; the printed form doubles as the
        // export identity, so it must separate distinct states.
        assert!(
            by_pretty.insert(printed, i).is_none(),
            "printer collision: state {i} prints like an earlier state: {t}"
        );
        index.insert(t.clone(), i);
        terms.push(t.clone());
        Ok(i)
    };

    let mut root_indices = Vec::with_capacity(roots.len());
    for r in roots {
        root_indices.push(intern(r, &mut terms, &mut index, &mut by_pretty)?);
    }

    let mut dists = Vec::new();
    let mut steps = Vec::new();
    let mut term = Vec::new();
    let mut reps: Vec<Action> = Vec::new();

    let mut i = 0;
    while i < terms.len() {
        let t = terms[i].clone();
        let mut drow = Vec::with_capacity(sigmas.len());
        let mut srow = Vec::with_capacity(sigmas.len());
        let mut trow = Vec::with_capacity(sigmas.len());
        for sigma in &sigmas {
            let d = engine.distribution(sigma, &t)?.clone();
            let mut dv: Vec<(usize, Rational)> = Vec::new();
            for (u, p) in d.iter() {
                dv.push((intern(u, &mut terms, &mut index, &mut by_pretty)?, p.clone()));
            }
            dv.sort_by(|a, b| a.0.cmp(&b.0));

            let ss = engine.action_steps(sigma, &t)?.clone();
            let mut sv: Vec<(String, usize)> = Vec::new();
            for (label, u) in &ss.steps {
                let rep = class_rep(&ctx, &mut reps, label)?;
                sv.push((rep, intern(u, &mut terms, &mut index, &mut by_pretty)?));
            }
            sv.sort();
            sv.dedup();

            drow.push(dv);
            srow.push(sv);
            trow.push(ss.terminating);
        }
        dists.push(drow);
        steps.push(srow);
        term.push(trow);
        i += 1;
    }

    let states = terms.iter().map(|t| t.to_string()).collect();
    Ok(Explored {
        pts: Pts { states, root: root_indices[0], sigma_universe: sigmas, dists, steps, term },
        terms,
        roots: root_indices,
    })
}

/// The canonical representative of a label's data-equivalence class:
/// the first class member ever seen by this exploration.
fn class_rep(
    ctx: &DataCtx,
    reps: &mut Vec<Action>,
    label: &Action,
) -> Result<String, PtsError> {
    for rep in reps.iter() {
        if data_equiv(ctx, rep, label)? {
            return Ok(rep.to_string());
        }
    }
    reps.push(label.clone());
    Ok(label.to_string())
}

/// Conservative check that a term's observable behaviour is the same under
/// every ambient evaluation map: evaluation wrappers carry their own map,
/// and outside them, guards, recursion, and open data arguments are the only
/// map-sensitive constructs.
fn map_insensitive(t: &ProcTerm) -> bool {
    match t.kind() {
        TermKind::Eval(..) | TermKind::Eps => true,
        TermKind::Act(a) => match a {
            Action::Basic(_) | Action::Tau | Action::Delta => true,
            // Open parameter lists would make communication (and label
            // evaluation) map-dependent; assignments fire identically under
            // every ambient map because nothing outside an evaluation
            // wrapper reads the written value.
            Action::Param(_, args) => args.iter().all(|e| e.is_flex_closed()),
            Action::Assign(..) => true,
        },
        TermKind::Alt(l, r)
        | TermKind::Seq(l, r)
        | TermKind::Par(l, r)
        | TermKind::LMerge(l, r)
        | TermKind::CMerge(l, r)
        | TermKind::PChoice(_, l, r) => map_insensitive(l) && map_insensitive(r),
        TermKind::TermTest(x) | TermKind::Encap(_, x) | TermKind::Hide(_, x) => {
            map_insensitive(x)
        }
        TermKind::Guard(..) | TermKind::RecVar(_) | TermKind::RecConst(..) => false,
    }
}

/// The carried map of an evaluation-rooted term, if any; on systems explored
/// from an evaluation-rooted term this reads a state's final variable values.
pub fn eval_root_map(t: &ProcTerm) -> Option<&EvalMap> {
    match t.kind() {
        TermKind::Eval(m, _) => Some(m),
        _ => None,
    }
}

fn num_den(r: &Rational) -> String {
    let b = r.as_big();
    format!("{}/{}", b.numer(), b.denom())
}

impl Pts {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_sigmas(&self) -> usize {
        self.sigma_universe.len()
    }

    /// Whether a state's distribution is the same under every map.
    fn dist_uniform(&self, state: usize) -> bool {
        self.dists[state].windows(2).all(|w| w[0] == w[1])
    }

    /// JSON export. Probabilities are explicit `num/den` strings. Probability
    /// edges omit the `sigma` field when the state's distribution does not
    /// depend on the map; action edges and termination entries always carry
    /// their map index.
    pub fn to_json(&self) -> String {
        let mut prob_edges = Vec::new();
        for (from, rows) in self.dists.iter().enumerate() {
            if self.dist_uniform(from) {
                for (to, p) in &rows[0] {
                    prob_edges.push(json!({"from": from, "to": to, "p": num_den(p)}));
                }
            } else {
                for (si, row) in rows.iter().enumerate() {
                    for (to, p) in row {
                        prob_edges.push(
                            json!({"from": from, "sigma": si, "to": to, "p": num_den(p)}),
                        );
                    }
                }
            }
        }
        let mut act_edges = Vec::new();
        for (from, rows) in self.steps.iter().enumerate() {
            for (si, row) in rows.iter().enumerate() {
                for (label, to) in row {
                    act_edges.push(
                        json!({"from": from, "sigma": si, "label": label, "to": to}),
                    );
                }
            }
        }
        let mut term = Vec::new();
        for (state, rows) in self.term.iter().enumerate() {
            for (si, flag) in rows.iter().enumerate() {
                if *flag {
                    term.push(json!({"state": state, "sigma": si}));
                }
            }
        }
        let universe: Vec<Value> = self
            .sigma_universe
            .iter()
            .map(|m| {
                let obj: serde_json::Map<String, Value> =
                    m.iter().map(|(v, d)| (v.to_string(), json!(d))).collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "states": self.states,
            "root": self.root,
            "sigma_universe": universe,
            "prob_edges": prob_edges,
            "act_edges": act_edges,
            "term": term,
        });
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    /// Rebuilds a system from [`Pts::to_json`] output; `from_json ∘ to_json`
    /// is the identity.
    pub fn from_json(text: &str) -> Result<Pts, PtsError> {
        let bad = |m: &str| PtsError::BadJson(m.to_string());
        let doc: Value =
            serde_json::from_str(text).map_err(|e| PtsError::BadJson(e.to_string()))?;
        let states: Vec<String> = as_array(&doc, "states")?
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad("non-string state")))
            .collect::<Result<_, _>>()?;
        if states.is_empty() {
            return Err(bad("empty state list"));
        }
        let n = states.len();
        let root = get_index(&doc, "root", n)?;
        let universe_vals = as_array(&doc, "sigma_universe")?;
        let mut sigma_universe = Vec::new();
        for m in universe_vals {
            let obj = m.as_object().ok_or_else(|| bad("map entries must be objects"))?;
            let mut pairs: Vec<(String, DataValue)> = Vec::new();
            for (k, v) in obj {
                let d = v.as_u64().ok_or_else(|| bad("map values must be naturals"))?;
                pairs.push((k.clone(), d));
            }
            sigma_universe.push(EvalMap::from_raw(pairs));
        }
        if sigma_universe.is_empty() {
            return Err(bad("empty map universe"));
        }
        let ns = sigma_universe.len();

        let mut dists = vec![vec![Vec::new(); ns]; n];
        for e in as_array(&doc, "prob_edges")? {
            let from = get_index(e, "from", n)?;
            let to = get_index(e, "to", n)?;
            let p: Rational = e
                .get("p")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("probability must be a num/den string"))?
                .parse()
                .map_err(|_| bad("unparsable probability"))?;
            match e.get("sigma") {
                None => {
                    for row in dists[from].iter_mut() {
                        row.push((to, p.clone()));
                    }
                }
                Some(_) => {
                    let si = get_index(e, "sigma", ns)?;
                    dists[from][si].push((to, p.clone()));
                }
            }
        }
        let mut steps = vec![vec![Vec::new(); ns]; n];
        for e in as_array(&doc, "act_edges")? {
            let from = get_index(e, "from", n)?;
            let si = get_index(e, "sigma", ns)?;
            let to = get_index(e, "to", n)?;
            let label = e
                .get("label")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("edge without label"))?
                .to_string();
            steps[from][si].push((label, to));
        }
        let mut term = vec![vec![false; ns]; n];
        for e in as_array(&doc, "term")? {
            let state = get_index(e, "state", n)?;
            let si = get_index(e, "sigma", ns)?;
            term[state][si] = true;
        }

        for rows in dists.iter_mut() {
            for row in rows.iter_mut() {
                row.sort_by(|a, b| a.0.cmp(&b.0));
            }
        }
        for rows in steps.iter_mut() {
            for row in rows.iter_mut() {
                row.sort();
                row.dedup();
            }
        }
        let pts = Pts { states, root, sigma_universe, dists, steps, term };
        for (i, rows) in pts.dists.iter().enumerate() {
            for row in rows {
                let total: Rational =
                    row.iter().fold(Rational::zero(), |acc, (_, p)| acc + p.clone());
                if total != Rational::one() {
                    return Err(PtsError::BadJson(format!(
                        "state {i}: distribution sums to {total}, not 1"
                    )));
                }
            }
        }
        Ok(pts)
    }

    /// Graphviz export: probability edges dashed and labelled with their
    /// mass, action edges solid, terminating states double-bordered, the
    /// root bold. Map indices prefix edge labels when several maps are in
    /// scope.
    pub fn to_dot(&self) -> String {
        let esc = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph pts {\n  rankdir=LR;\n  node [shape=box];\n");
        for (i, s) in self.states.iter().enumerate() {
            let mut attrs = format!("label=\"{}\"", esc(s));
            if self.term[i].iter().any(|&f| f) {
                attrs.push_str(", peripheries=2");
            }
            if i == self.root {
                attrs.push_str(", penwidth=2");
            }
            let _ = writeln!(out, "  s{i} [{attrs}];");
        }
        let many = self.n_sigmas() > 1;
        for (from, rows) in self.dists.iter().enumerate() {
            if self.dist_uniform(from) {
                for (to, p) in &rows[0] {
                    let _ = writeln!(
                        out,
                        "  s{from} -> s{to} [style=dashed, label=\"{}\"];",
                        esc(&p.to_string())
                    );
                }
            } else {
                for (si, row) in rows.iter().enumerate() {
                    for (to, p) in row {
                        let _ = writeln!(
                            out,
                            "  s{from} -> s{to} [style=dashed, label=\"{}: {}\"];",
                            format_args!("\u{03c3}{si}"),
                            esc(&p.to_string())
                        );
                    }
                }
            }
        }
        for (from, rows) in self.steps.iter().enumerate() {
            for (si, row) in rows.iter().enumerate() {
                for (label, to) in row {
                    let shown = if many {
                        format!("\u{03c3}{si}: {label}")
                    } else {
                        label.clone()
                    };
                    let _ = writeln!(out, "  s{from} -> s{to} [label=\"{}\"];", esc(&shown));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn as_array<'v>(doc: &'v Value, key: &str) -> Result<&'v Vec<Value>, PtsError> {
    doc.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| PtsError::BadJson(format!("missing array field `{key}`")))
}

fn get_index(v: &Value, key: &str, bound: usize) -> Result<usize, PtsError> {
    let i = v
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| PtsError::BadJson(format!("missing index field `{key}`")))?
        as usize;
    if i >= bound {
        return Err(PtsError::BadJson(format!("index `{key}` = {i} out of range")));
    }
    Ok(i)
}

/// The exact absorption distribution of a scheduler-free system.
///
/// Starting from state `from` under map index `sigma_index`, the run
/// alternates drawing from the current state's distribution and taking the
/// single enabled step of the drawn state; it is absorbed when the drawn
/// state terminates or has no step. Returns the absorbing states' exact
/// probabilities (zero entries omitted).
///
/// # Errors
///
/// [`PtsError::NotDeterministic`] when a drawn state offers several
/// scheduler options; [`PtsError::NotAbsorbing`] when absorption is not
/// almost sure (the linear system is singular).
pub fn exact_terminal_distribution(
    pts: &Pts,
    sigma_index: usize,
    from: usize,
) -> Result<std::collections::BTreeMap<usize, Rational>, PtsError> {
    assert!(sigma_index < pts.n_sigmas() && from < pts.n_states());
    let n = pts.n_states();
    let si = sigma_index;

    // A(i) = Σ_j D_i(j) · B(j) with B(j) resolving the drawn state j:
    // absorb there, or continue from its single step target. As a linear
    // system: (I − M) A = b over the rationals.
    let mut absorbing: Vec<usize> = Vec::new();
    let mut col_of: HashMap<usize, usize> = HashMap::new();
    let mut matrix: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; n];
    let mut rhs: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];

    for i in 0..n {
        matrix[i][i] = Rational::one();
        for (j, p) in &pts.dists[i][si] {
            let steps = &pts.steps[*j][si];
            let terminates = pts.term[*j][si];
            if terminates && !steps.is_empty() || steps.len() > 1 {
                return Err(PtsError::NotDeterministic { state: pts.states[*j].clone() });
            }
            if terminates || steps.is_empty() {
                let col = *col_of.entry(*j).or_insert_with(|| {
                    absorbing.push(*j);
                    absorbing.len() - 1
                });
                rhs[i].push((col, p.clone()));
            } else {
                let k = steps[0].1;
                matrix[i][k] = matrix[i][k].clone() - p.clone();
            }
        }
    }

    let k = absorbing.len();
    let mut aug: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row = matrix[i].clone();
            row.extend(std::iter::repeat(Rational::zero()).take(k));
            for (col, p) in &rhs[i] {
                row[n + col] = row[n + col].clone() + p.clone();
            }
            row
        })
        .collect();

    // Gauss–Jordan over exact rationals.
    for col in 0..n {
        let pivot = (col..n).find(|&r| aug[r][col] != Rational::zero());
        let pivot = pivot.ok_or(PtsError::NotAbsorbing)?;
        aug.swap(col, pivot);
        let inv = aug[col][col].clone().inv();
        for x in aug[col].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for r in 0..n {
            if r != col && aug[r][col] != Rational::zero() {
                let f = aug[r][col].clone();
                for c in col..n + k {
                    let delta = f.clone() * aug[col][c].clone();
                    aug[r][c] = aug[r][c].clone() - delta;
                }
            }
        }
    }

    let mut out = std::collections::BTreeMap::new();
    for (col, &state) in absorbing.iter().enumerate() {
        let p = aug[from][n + col].clone();
        if p != Rational::zero() {
            let prev = out.insert(state, p);
            assert!(prev.is_none());
        }
    }
    Ok(out)
}
