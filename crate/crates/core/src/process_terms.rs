//! Process terms: the abstract syntax of the algebra, plus the canonical
//! printer, the communication function, and the linear-recursion checks.
//!
//! Terms are immutable trees behind [`Arc`] nodes with a cached structural
//! hash and size, so cloning is cheap, equality is fast, and terms can serve
//! as map keys throughout the engine.
//!
//! The operator inventory:
//!
//! | syntax                  | meaning                                    |
//! |-------------------------|--------------------------------------------|
//! | `a`, `a(e)`, `v := e`   | action constants (assignments mutate data) |
//! | `tau`, `delta`, `eps`   | silent step, deadlock, empty process       |
//! | `t + u`                 | alternative composition                    |
//! | `t . u`                 | sequential composition                     |
//! | `t \|\| u`, `t \|L u`, `t \| u` | merge, left merge, communication merge |
//! | `pc{p1: t1, …}`         | probabilistic choice                       |
//! | `[phi] -> t`            | guarded command                            |
//! | `encap{H}(t)`           | blocks the actions matching `H`            |
//! | `hide{I}(t)`            | renames the actions matching `I` to `tau`  |
//! | `termtest(t)`           | termination-only projection                |
//! | `V{v=0}(t)`             | evaluation under a fixed data map          |
//! | `<X \| Spec>`           | recursion constant                         |

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::data_model::{Cond, DataTerm, EvalMap};
use crate::meadow::{Prob, Rational};

/// An action constant: the atomic steps a process can take.
///
/// Assignments are actions too — they fire like any other action and update
/// the ambient evaluation map as their effect. `Tau` is the silent action;
/// `Delta` is the deadlocked constant (no steps, no termination).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// A plain named action, e.g. `a`.
    Basic(String),
    /// A parameterized action carrying data arguments, e.g. `send(v+1)`.
    Param(String, Vec<DataTerm>),
    /// An assignment `v := e` to a flexible variable.
    Assign(String, DataTerm),
    /// The silent action.
    Tau,
    /// Deadlock: the action constant with no behaviour at all.
    Delta,
}

impl Action {
    pub fn basic(name: &str) -> Self {
        Action::Basic(name.to_string())
    }

    pub fn assign(var: &str, e: DataTerm) -> Self {
        Action::Assign(var.to_string(), e)
    }

    /// The action's name, when it has one (assignments, `tau`, and `delta`
    /// do not).
    pub fn name(&self) -> Option<&str> {
        match self {
            Action::Basic(n) | Action::Param(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }

    pub fn is_assign(&self) -> bool {
        matches!(self, Action::Assign(_, _))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Basic(n) => write!(f, "{n}"),
            Action::Param(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Action::Assign(v, e) => write!(f, "{v} := {e}"),
            Action::Tau => write!(f, "tau"),
            Action::Delta => write!(f, "delta"),
        }
    }
}

/// A pattern set over action constants, used by `encap{…}` and `hide{…}`.
///
/// An entry `a` matches every basic or parameterized action named `a`
/// (any arity); an entry `v :=` matches every assignment to `v`. `tau` and
/// `delta` are never matched: hiding cannot rename the silent action and
/// encapsulation cannot block it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ActionSet {
    names: BTreeSet<String>,
    assign_vars: BTreeSet<String>,
}

impl ActionSet {
    pub fn new(
        names: impl IntoIterator<Item = String>,
        assign_vars: impl IntoIterator<Item = String>,
    ) -> Self {
        ActionSet {
            names: names.into_iter().collect(),
            assign_vars: assign_vars.into_iter().collect(),
        }
    }

    pub fn from_names(names: impl IntoIterator<Item = String>) -> Self {
        ActionSet::new(names, [])
    }

    pub fn matches(&self, a: &Action) -> bool {
        match a {
            Action::Basic(n) | Action::Param(n, _) => self.names.contains(n),
            Action::Assign(v, _) => self.assign_vars.contains(v),
            Action::Tau | Action::Delta => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty() && self.assign_vars.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub fn assign_vars(&self) -> impl Iterator<Item = &str> {
        self.assign_vars.iter().map(|s| s.as_str())
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for n in &self.names {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{n}")?;
            first = false;
        }
        for v in &self.assign_vars {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{v} :=")?;
            first = false;
        }
        Ok(())
    }
}

/// A recursive specification: named equations `X = t` whose right-hand sides
/// may reference the specification's variables.
///
/// Specifications admitted by [`validate_rec_spec`] are *linear* (each
/// equation is built from `delta`, guarded `eps`, guarded action prefixes
/// into variables, `+`, and non-degenerate probabilistic choice) and
/// *guarded* (no cycle of `tau`-prefixed references), which makes their
/// unfolding semantics well defined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecSpec {
    pub name: String,
    pub equations: BTreeMap<String, ProcTerm>,
}

impl RecSpec {
    pub fn new(name: &str, equations: impl IntoIterator<Item = (String, ProcTerm)>) -> Self {
        RecSpec { name: name.to_string(), equations: equations.into_iter().collect() }
    }
}

/// The abstract syntax of a process term. See the module docs for syntax.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    /// An action constant (including `tau` and `delta`).
    Act(Action),
    /// The empty process: terminates immediately, does nothing else.
    Eps,
    Alt(ProcTerm, ProcTerm),
    Seq(ProcTerm, ProcTerm),
    Par(ProcTerm, ProcTerm),
    /// Left merge: the left operand must take the first step.
    LMerge(ProcTerm, ProcTerm),
    /// Communication merge: the first step must be a communication.
    CMerge(ProcTerm, ProcTerm),
    /// Termination-only projection: never takes an action step; terminates
    /// exactly when its operand can.
    TermTest(ProcTerm),
    Encap(ActionSet, ProcTerm),
    Hide(ActionSet, ProcTerm),
    PChoice(Prob, ProcTerm, ProcTerm),
    Guard(Cond, ProcTerm),
    /// Evaluation operator: runs the operand under the *fixed* map, ignoring
    /// the ambient one, updating the map on assignments.
    Eval(EvalMap, ProcTerm),
    /// A reference to a specification variable; only meaningful inside the
    /// right-hand side of a recursive specification.
    RecVar(String),
    /// The recursion constant `<X | E>`.
    RecConst(String, Arc<RecSpec>),
}

/// A process term: an immutable tree with cached hash and size.
#[derive(Debug, Clone)]
pub struct ProcTerm(Arc<Node>);

#[derive(Debug)]
struct Node {
    kind: TermKind,
    hash: u64,
    size: u32,
}

impl ProcTerm {
    pub fn new(kind: TermKind) -> Self {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        kind.hash(&mut hasher);
        let hash = hasher.finish();
        let size = 1 + match &kind {
            TermKind::Act(_) | TermKind::Eps | TermKind::RecVar(_) | TermKind::RecConst(_, _) => 0,
            TermKind::Alt(l, r)
            | TermKind::Seq(l, r)
            | TermKind::Par(l, r)
            | TermKind::LMerge(l, r)
            | TermKind::CMerge(l, r)
            | TermKind::PChoice(_, l, r) => l.size() + r.size(),
            TermKind::TermTest(t)
            | TermKind::Encap(_, t)
            | TermKind::Hide(_, t)
            | TermKind::Guard(_, t)
            | TermKind::Eval(_, t) => t.size(),
        };
        ProcTerm(Arc::new(Node { kind, hash, size }))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    /// Number of nodes in the tree (recursion constants count as one node).
    pub fn size(&self) -> u32 {
        self.0.size
    }

    pub fn act(a: Action) -> Self {
        ProcTerm::new(TermKind::Act(a))
    }

    pub fn basic(name: &str) -> Self {
        ProcTerm::act(Action::basic(name))
    }

    pub fn tau() -> Self {
        ProcTerm::act(Action::Tau)
    }

    pub fn delta() -> Self {
        ProcTerm::act(Action::Delta)
    }

    pub fn eps() -> Self {
        ProcTerm::new(TermKind::Eps)
    }

    pub fn alt(l: ProcTerm, r: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Alt(l, r))
    }

    pub fn seq(l: ProcTerm, r: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Seq(l, r))
    }

    pub fn par(l: ProcTerm, r: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Par(l, r))
    }

    pub fn lmerge(l: ProcTerm, r: ProcTerm) -> Self {
        ProcTerm::new(TermKind::LMerge(l, r))
    }

    pub fn cmerge(l: ProcTerm, r: ProcTerm) -> Self {
        ProcTerm::new(TermKind::CMerge(l, r))
    }

    pub fn termtest(t: ProcTerm) -> Self {
        ProcTerm::new(TermKind::TermTest(t))
    }

    pub fn encap(set: ActionSet, t: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Encap(set, t))
    }

    pub fn hide(set: ActionSet, t: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Hide(set, t))
    }

    pub fn pchoice(p: Prob, l: ProcTerm, r: ProcTerm) -> Self {
        ProcTerm::new(TermKind::PChoice(p, l, r))
    }

    pub fn guard(phi: Cond, t: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Guard(phi, t))
    }

    pub fn eval_wrap(sigma: EvalMap, t: ProcTerm) -> Self {
        ProcTerm::new(TermKind::Eval(sigma, t))
    }

    pub fn rec_var(name: &str) -> Self {
        ProcTerm::new(TermKind::RecVar(name.to_string()))
    }

    pub fn rec_const(var: &str, spec: Arc<RecSpec>) -> Self {
        ProcTerm::new(TermKind::RecConst(var.to_string(), spec))
    }

    /// True for the constants that cannot be decomposed further.
    pub fn is_atomic_constant(&self) -> bool {
        matches!(self.kind(), TermKind::Act(_) | TermKind::Eps)
    }
}

impl PartialEq for ProcTerm {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for ProcTerm {}

impl Hash for ProcTerm {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for ProcTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ProcTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return std::cmp::Ordering::Equal;
        }
        self.0.kind.cmp(&other.0.kind)
    }
}

/// Substitutes recursion constants `<Y | E>` for every specification-variable
/// reference `Y` in the right-hand side of `X`, yielding the one-step
/// unfolding of `<X | E>`.
pub fn unfold(spec: &Arc<RecSpec>, var: &str) -> Result<ProcTerm, RecSpecError> {
    let rhs = spec
        .equations
        .get(var)
        .ok_or_else(|| RecSpecError::UnknownVariable {
            spec: spec.name.clone(),
            var: var.to_string(),
        })?;
    Ok(close_rec_vars(rhs, spec))
}

fn close_rec_vars(t: &ProcTerm, spec: &Arc<RecSpec>) -> ProcTerm {
    match t.kind() {
        TermKind::RecVar(y) => {
            if spec.equations.contains_key(y) {
                ProcTerm::rec_const(y, Arc::clone(spec))
            } else {
                t.clone()
            }
        }
        TermKind::Act(_) | TermKind::Eps | TermKind::RecConst(_, _) => t.clone(),
        TermKind::Alt(l, r) => ProcTerm::alt(close_rec_vars(l, spec), close_rec_vars(r, spec)),
        TermKind::Seq(l, r) => ProcTerm::seq(close_rec_vars(l, spec), close_rec_vars(r, spec)),
        TermKind::Par(l, r) => ProcTerm::par(close_rec_vars(l, spec), close_rec_vars(r, spec)),
        TermKind::LMerge(l, r) => {
            ProcTerm::lmerge(close_rec_vars(l, spec), close_rec_vars(r, spec))
        }
        TermKind::CMerge(l, r) => {
            ProcTerm::cmerge(close_rec_vars(l, spec), close_rec_vars(r, spec))
        }
        TermKind::TermTest(x) => ProcTerm::termtest(close_rec_vars(x, spec)),
        TermKind::Encap(s, x) => ProcTerm::encap(s.clone(), close_rec_vars(x, spec)),
        TermKind::Hide(s, x) => ProcTerm::hide(s.clone(), close_rec_vars(x, spec)),
        TermKind::PChoice(p, l, r) => {
            ProcTerm::pchoice(p.clone(), close_rec_vars(l, spec), close_rec_vars(r, spec))
        }
        TermKind::Guard(phi, x) => ProcTerm::guard(phi.clone(), close_rec_vars(x, spec)),
        TermKind::Eval(sigma, x) => ProcTerm::eval_wrap(sigma.clone(), close_rec_vars(x, spec)),
    }
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum RecSpecError {
    #[error("specification `{spec}` has no equation for variable `{var}`")]
    UnknownVariable { spec: String, var: String },
    #[error("equation for `{var}` is not linear: {reason}")]
    NotLinear { var: String, reason: String },
    #[error(
        "specification `{spec}` is unguarded: cycle of tau-prefixed references through `{cycle}`"
    )]
    Unguarded { spec: String, cycle: String },
    #[error("equation for `{var}` references undeclared variable `{reference}`")]
    DanglingReference { var: String, reference: String },
}

/// Checks that one equation right-hand side is *linear*: built from `delta`,
/// `[phi] -> eps`, `[phi] -> alpha . X` (with `alpha` an action or `tau`,
/// never `delta`), alternative composition, and probabilistic choice with
/// weight strictly between 0 and 1.
pub fn check_linear(var: &str, rhs: &ProcTerm) -> Result<(), RecSpecError> {
    let fail = |reason: &str| {
        Err(RecSpecError::NotLinear { var: var.to_string(), reason: reason.to_string() })
    };
    match rhs.kind() {
        TermKind::Act(Action::Delta) => Ok(()),
        TermKind::Guard(_, body) => match body.kind() {
            TermKind::Eps => Ok(()),
            TermKind::Seq(head, tail) => {
                match head.kind() {
                    TermKind::Act(Action::Delta) => {
                        return fail("a guarded prefix must not be `delta`");
                    }
                    TermKind::Act(_) => {}
                    _ => return fail("a guarded sequence must start with a single action"),
                }
                match tail.kind() {
                    TermKind::RecVar(_) => Ok(()),
                    _ => fail("an action prefix must continue into a specification variable"),
                }
            }
            _ => fail("a guard body must be `eps` or `action . Variable`"),
        },
        TermKind::Alt(l, r) => {
            // `delta` is a complete linear term but not a summand: a deadlock
            // alternative would be behaviourally inert yet syntactically
            // distinct, so the grammar excludes it.
            for side in [l, r] {
                if matches!(side.kind(), TermKind::Act(Action::Delta)) {
                    return fail("`delta` cannot be a summand of an alternative");
                }
            }
            check_linear(var, l)?;
            check_linear(var, r)
        }
        TermKind::PChoice(p, l, r) => {
            if p.is_zero() || p.is_one() {
                return fail("probabilistic choice in an equation must have weight strictly between 0 and 1");
            }
            check_linear(var, l)?;
            check_linear(var, r)
        }
        _ => fail(
            "only `delta`, guarded `eps`, guarded action prefixes, `+`, and `pc{…}` may appear",
        ),
    }
}

/// Validates a whole specification: every equation linear, every referenced
/// variable declared, and no cycle of `tau`-prefixed references (guardedness).
pub fn validate_rec_spec(spec: &RecSpec) -> Result<(), RecSpecError> {
    for (var, rhs) in &spec.equations {
        check_linear(var, rhs)?;
        let mut refs = Vec::new();
        collect_rec_vars(rhs, &mut refs);
        for r in refs {
            if !spec.equations.contains_key(&r) {
                return Err(RecSpecError::DanglingReference { var: var.clone(), reference: r });
            }
        }
    }
    // Guardedness: in a linear equation every variable reference sits behind
    // exactly one action prefix, so the only way recursion can be unguarded
    // is a cycle of `tau . X` prefixes.
    let mut tau_edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (var, rhs) in &spec.equations {
        let mut targets = Vec::new();
        collect_tau_targets(rhs, &mut targets);
        tau_edges.insert(var, targets);
    }
    // Depth-first cycle search over the tau-reference graph.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks: BTreeMap<&str, Mark> = spec.equations.keys().map(|v| (v.as_str(), Mark::White)).collect();
    fn visit<'a>(
        v: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(v, Mark::Grey);
        path.push(v);
        for &w in edges.get(v).into_iter().flatten() {
            match marks.get(w).copied().unwrap_or(Mark::Black) {
                Mark::Grey => {
                    let start = path.iter().position(|x| *x == w).unwrap_or(0);
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(w.to_string());
                    return Some(cycle);
                }
                Mark::White => {
                    if let Some(c) = visit(w, edges, marks, path) {
                        return Some(c);
                    }
                }
                Mark::Black => {}
            }
        }
        path.pop();
        marks.insert(v, Mark::Black);
        None
    }
    let vars: Vec<&str> = spec.equations.keys().map(|v| v.as_str()).collect();
    for v in vars {
        if marks.get(v).copied() == Some(Mark::White) {
            let mut path = Vec::new();
            if let Some(cycle) = visit(v, &tau_edges, &mut marks, &mut path) {
                return Err(RecSpecError::Unguarded {
                    spec: spec.name.clone(),
                    cycle: cycle.join(" -> "),
                });
            }
        }
    }
    Ok(())
}

fn collect_rec_vars(t: &ProcTerm, out: &mut Vec<String>) {
    match t.kind() {
        TermKind::RecVar(v) => out.push(v.clone()),
        TermKind::Act(_) | TermKind::Eps | TermKind::RecConst(_, _) => {}
        TermKind::Alt(l, r)
        | TermKind::Seq(l, r)
        | TermKind::Par(l, r)
        | TermKind::LMerge(l, r)
        | TermKind::CMerge(l, r)
        | TermKind::PChoice(_, l, r) => {
            collect_rec_vars(l, out);
            collect_rec_vars(r, out);
        }
        TermKind::TermTest(x)
        | TermKind::Encap(_, x)
        | TermKind::Hide(_, x)
        | TermKind::Guard(_, x)
        | TermKind::Eval(_, x) => collect_rec_vars(x, out),
    }
}

/// Collects variables referenced behind a `tau` prefix in a linear RHS.
fn collect_tau_targets<'a>(t: &'a ProcTerm, out: &mut Vec<&'a str>) {
    match t.kind() {
        TermKind::Guard(_, body) => {
            if let TermKind::Seq(head, tail) = body.kind() {
                if let (TermKind::Act(Action::Tau), TermKind::RecVar(x)) = (head.kind(), tail.kind())
                {
                    out.push(x);
                }
            }
        }
        TermKind::Alt(l, r) | TermKind::PChoice(_, l, r) => {
            collect_tau_targets(l, out);
            collect_tau_targets(r, out);
        }
        _ => {}
    }
}

/// The communication function γ: a partial, commutative, associative map
/// from pairs of action names to action names.
///
/// Undefined pairs do not communicate. `tau`, `delta`, and assignments never
/// take part in communication.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommFunction {
    /// Stored under the sorted name pair, which bakes in commutativity.
    pairs: BTreeMap<(String, String), String>,
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum CommError {
    #[error(
        "communication is not associative on ({a}, {b}, {c}): \
         gamma(gamma({a}, {b}), {c}) = {left} but gamma({a}, gamma({b}, {c})) = {right}"
    )]
    NotAssociative { a: String, b: String, c: String, left: String, right: String },
    #[error("conflicting results declared for the pair ({a}, {b}): {first} vs {second}")]
    ConflictingPair { a: String, b: String, first: String, second: String },
}

impl CommFunction {
    pub fn new() -> Self {
        CommFunction::default()
    }

    /// Declares γ(a, b) = c (and, by commutativity, γ(b, a) = c).
    pub fn declare(&mut self, a: &str, b: &str, c: &str) -> Result<(), CommError> {
        let key = sorted_pair(a, b);
        if let Some(prev) = self.pairs.get(&key) {
            if prev != c {
                return Err(CommError::ConflictingPair {
                    a: a.to_string(),
                    b: b.to_string(),
                    first: prev.clone(),
                    second: c.to_string(),
                });
            }
        }
        self.pairs.insert(key, c.to_string());
        Ok(())
    }

    /// γ(a, b), or `None` when the pair does not communicate.
    pub fn result(&self, a: &str, b: &str) -> Option<&str> {
        self.pairs.get(&sorted_pair(a, b)).map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.pairs.iter().map(|((a, b), c)| (a.as_str(), b.as_str(), c.as_str()))
    }

    /// Checks associativity of the δ-completed table over the given action
    /// names: for all declared `a`, `b`, `c`,
    /// `gamma(gamma(a,b), c) = gamma(a, gamma(b,c))`, where an undefined
    /// result behaves as `delta` and `delta` absorbs.
    pub fn validate(&self, names: &BTreeSet<String>) -> Result<(), CommError> {
        let total = |x: Option<&str>, y: &str| -> Option<String> {
            x.and_then(|x| self.result(x, y).map(|s| s.to_string()))
        };
        for a in names {
            for b in names {
                for c in names {
                    let left = total(self.result(a, b), c);
                    let right = total(self.result(b, c), a);
                    if left != right {
                        return Err(CommError::NotAssociative {
                            a: a.clone(),
                            b: b.clone(),
                            c: c.clone(),
                            left: left.unwrap_or_else(|| "delta".to_string()),
                            right: right.unwrap_or_else(|| "delta".to_string()),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn sorted_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum BuildError {
    #[error("probabilistic choice needs at least one branch")]
    EmptyChoice,
    #[error("probabilistic choice weights sum to {0}, expected exactly 1")]
    WeightsDoNotSumToOne(String),
    #[error("probabilistic choice weight {0} is outside [0, 1]")]
    WeightOutOfRange(String),
}

/// Builds a right-nested probabilistic choice from absolute weights that must
/// sum to exactly 1.
///
/// The relative weight at each node is the entry's absolute weight divided by
/// the mass remaining at that point; once the remaining mass reaches zero the
/// leftover entries are attached with relative weight 0.
pub fn build_prc(entries: Vec<(Rational, ProcTerm)>) -> Result<ProcTerm, BuildError> {
    if entries.is_empty() {
        return Err(BuildError::EmptyChoice);
    }
    let mut total = Rational::zero();
    for (q, _) in &entries {
        if !q.is_probability() {
            return Err(BuildError::WeightOutOfRange(q.to_string()));
        }
        total = total + q.clone();
    }
    if !total.is_one() {
        return Err(BuildError::WeightsDoNotSumToOne(total.to_string()));
    }
    // Relative weight at each node = absolute weight / remaining mass; once
    // the mass is exhausted the leftover entries attach with weight 0.
    let mut remaining = Rational::one();
    let mut rels: Vec<Prob> = Vec::with_capacity(entries.len() - 1);
    for (q, _) in entries.iter().take(entries.len() - 1) {
        let rel = if remaining.is_zero() {
            Prob::zero()
        } else {
            Prob::new(q.clone().div_total(&remaining)).expect("relative weight in [0,1]")
        };
        remaining = remaining - q.clone();
        rels.push(rel);
    }
    let mut entries = entries;
    let (_, mut acc) = entries.pop().expect("nonempty");
    while let Some((_, t)) = entries.pop() {
        let rel = rels.pop().expect("one relative weight per non-final entry");
        acc = ProcTerm::pchoice(rel, t, acc);
    }
    Ok(acc)
}

/// Folds a list of terms with `+`, left-associatively. Errors on empty input.
pub fn build_altn(mut terms: Vec<ProcTerm>) -> Result<ProcTerm, BuildError> {
    if terms.is_empty() {
        return Err(BuildError::EmptyChoice);
    }
    let mut acc = terms.remove(0);
    for t in terms {
        acc = ProcTerm::alt(acc, t);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Canonical printing
// ---------------------------------------------------------------------------

/// Binding strength, weakest first. Each binary operator prints its left
/// child at its own level (so left-nested chains stay flat) and its right
/// child one level tighter (so right-nesting is parenthesized), which makes
/// the printer injective on term trees and exactly inverse to the parser.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Alt,
    Mid,
    Guard,
    Seq,
    Atom,
}

impl fmt::Display for ProcTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, f, Level::Alt)
    }
}

fn fmt_term(t: &ProcTerm, f: &mut fmt::Formatter<'_>, min: Level) -> fmt::Result {
    match t.kind() {
        TermKind::Alt(l, r) => {
            let wrap = min > Level::Alt;
            if wrap {
                write!(f, "(")?;
            }
            fmt_term(l, f, Level::Alt)?;
            write!(f, " + ")?;
            fmt_term(r, f, Level::Mid)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        TermKind::Par(l, r) => fmt_mid(t, l, r, "||", f, min),
        TermKind::LMerge(l, r) => fmt_mid(t, l, r, "|L", f, min),
        TermKind::CMerge(l, r) => fmt_mid(t, l, r, "|", f, min),
        TermKind::Guard(phi, body) => {
            let wrap = min > Level::Guard;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "[{phi}] -> ")?;
            fmt_term(body, f, Level::Guard)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        TermKind::Seq(l, r) => {
            let wrap = min > Level::Seq;
            if wrap {
                write!(f, "(")?;
            }
            fmt_term(l, f, Level::Seq)?;
            write!(f, " . ")?;
            fmt_term(r, f, Level::Atom)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        // An assignment's right-hand side is a greedy data expression, so a
        // bare `v := 1 + b` would swallow a following `+ b`; the printer
        // always parenthesizes assignments to keep printing injective.
        TermKind::Act(a) if a.is_assign() => write!(f, "({a})"),
        TermKind::Act(a) => write!(f, "{a}"),
        TermKind::Eps => write!(f, "eps"),
        TermKind::TermTest(x) => {
            write!(f, "termtest(")?;
            fmt_term(x, f, Level::Alt)?;
            write!(f, ")")
        }
        TermKind::Encap(set, x) => {
            write!(f, "encap{{{set}}}(")?;
            fmt_term(x, f, Level::Alt)?;
            write!(f, ")")
        }
        TermKind::Hide(set, x) => {
            write!(f, "hide{{{set}}}(")?;
            fmt_term(x, f, Level::Alt)?;
            write!(f, ")")
        }
        TermKind::Eval(sigma, x) => {
            write!(f, "V{sigma}(")?;
            fmt_term(x, f, Level::Alt)?;
            write!(f, ")")
        }
        TermKind::PChoice(_, _, _) => fmt_pchoice(t, f),
        TermKind::RecVar(v) => write!(f, "{v}"),
        TermKind::RecConst(x, spec) => write!(f, "<{x} | {}>", spec.name),
    }
}

fn fmt_mid(
    whole: &ProcTerm,
    l: &ProcTerm,
    r: &ProcTerm,
    op: &str,
    f: &mut fmt::Formatter<'_>,
    min: Level,
) -> fmt::Result {
    let wrap = min > Level::Mid;
    if wrap {
        write!(f, "(")?;
    }
    // A left child with the *same* middle operator chains without parens;
    // any other middle operator (or `+`) must be parenthesized because the
    // middle tier does not mix without explicit grouping.
    let same_op = std::mem::discriminant(whole.kind()) == std::mem::discriminant(l.kind());
    if same_op {
        fmt_term(l, f, Level::Mid)?;
    } else {
        fmt_term(l, f, Level::Guard)?;
    }
    write!(f, " {op} ")?;
    fmt_term(r, f, Level::Guard)?;
    if wrap {
        write!(f, ")")?;
    }
    Ok(())
}

/// Prints a probabilistic choice as `pc{q1: t1, …, qn: tn}` with *absolute*
/// weights, flattening the right spine. When the remaining mass reaches zero
/// before the spine ends, the rest is attached as one final weight-0 entry.
fn fmt_pchoice(t: &ProcTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "pc{{")?;
    let mut remaining = Rational::one();
    let mut node = t.clone();
    let mut first = true;
    loop {
        let mut comma = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            Ok(())
        };
        match node.kind() {
            TermKind::PChoice(p, l, r) if !remaining.is_zero() => {
                let abs = remaining.clone() * p.value().clone();
                comma(f)?;
                write!(f, "{abs}: ")?;
                fmt_term(l, f, Level::Alt)?;
                remaining = remaining - abs;
                node = r.clone();
            }
            _ => {
                comma(f)?;
                write!(f, "{remaining}: ")?;
                fmt_term(&node, f, Level::Alt)?;
                break;
            }
        }
    }
    write!(f, "}}")
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_cond(self, f, CondLevel::Or)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CondLevel {
    Or,
    And,
    Not,
}

fn fmt_cond(c: &Cond, f: &mut fmt::Formatter<'_>, min: CondLevel) -> fmt::Result {
    match c {
        Cond::Or(l, r) => {
            let wrap = min > CondLevel::Or;
            if wrap {
                write!(f, "(")?;
            }
            fmt_cond(l, f, CondLevel::Or)?;
            write!(f, " or ")?;
            fmt_cond(r, f, CondLevel::And)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        Cond::And(l, r) => {
            let wrap = min > CondLevel::And;
            if wrap {
                write!(f, "(")?;
            }
            fmt_cond(l, f, CondLevel::And)?;
            write!(f, " and ")?;
            fmt_cond(r, f, CondLevel::Not)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        Cond::Not(x) => {
            let wrap = min > CondLevel::Not;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "not ")?;
            fmt_cond(x, f, CondLevel::Not)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        // Quantifier bodies are greedy to the end of the condition, so a
        // quantifier anywhere but the top of its (sub)condition needs parens.
        Cond::Exists(x, body) => {
            let wrap = min > CondLevel::Or;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "exists {x} . ")?;
            fmt_cond(body, f, CondLevel::Or)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        Cond::Forall(x, body) => {
            let wrap = min > CondLevel::Or;
            if wrap {
                write!(f, "(")?;
            }
            write!(f, "forall {x} . ")?;
            fmt_cond(body, f, CondLevel::Or)?;
            if wrap {
                write!(f, ")")?;
            }
            Ok(())
        }
        Cond::True => write!(f, "true"),
        Cond::False => write!(f, "false"),
        Cond::Eq(a, b) => write!(f, "{a} = {b}"),
        Cond::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
    }
}

impl fmt::Display for DataTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_data(self, f, DataLevel::Add)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum DataLevel {
    Add,
    Mul,
    Atom,
}

fn fmt_data(e: &DataTerm, f: &mut fmt::Formatter<'_>, min: DataLevel) -> fmt::Result {
    let binary = |f: &mut fmt::Formatter<'_>,
                  l: &DataTerm,
                  op: &str,
                  r: &DataTerm,
                  lv: DataLevel,
                  next: DataLevel,
                  min: DataLevel|
     -> fmt::Result {
        let wrap = min > lv;
        if wrap {
            write!(f, "(")?;
        }
        fmt_data(l, f, lv)?;
        write!(f, " {op} ")?;
        fmt_data(r, f, next)?;
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    };
    match e {
        DataTerm::Add(l, r) => binary(f, l, "+", r, DataLevel::Add, DataLevel::Mul, min),
        DataTerm::Monus(l, r) => binary(f, l, "-", r, DataLevel::Add, DataLevel::Mul, min),
        DataTerm::Mul(l, r) => binary(f, l, "*", r, DataLevel::Mul, DataLevel::Atom, min),
        DataTerm::Div(l, r) => binary(f, l, "/", r, DataLevel::Mul, DataLevel::Atom, min),
        DataTerm::Succ(x) => {
            write!(f, "succ(")?;
            fmt_data(x, f, DataLevel::Add)?;
            write!(f, ")")
        }
        DataTerm::Lit(v) => write!(f, "{v}"),
        DataTerm::Var(v) | DataTerm::BVar(v) => write!(f, "{v}"),
    }
}
