//! Directed rewriting with the equational laws, and the one-sided equality
//! prover built on it.
//!
//! [`Rewriter::normalize`] applies the laws left-to-right until no rule
//! matches, producing a normal form and a [`RewriteTrace`] per step.
//! [`Rewriter::prove_equal`] normalizes both sides and reports `Derived`
//! when the normal forms agree up to the decidable data equalities —
//! conditions with the same truth table and data expressions with the same
//! value table are identified, which is exactly what the IMP1/IMP2 laws
//! license. Anything else is `Unknown`: the prover is deliberately
//! one-sided, and `Unknown` carries no claim of inequality.
//!
//! # Soundness guards
//!
//! Seven law schemas are only valid when the operand they copy or shift
//! cannot be a probabilistic choice in disguise: A4, CM3, CM4, CM8, CM9,
//! GC7, and the guard/choice exchange pGC. The rewriter applies the first
//! five only after checking, with the operational engine, that the copied
//! operand has a point (probability-1) behaviour under every evaluation
//! map; GC7 and pGC are never applied (their decided-condition cases are
//! subsumed by GC1/GC2). The silent-step absorption pBE carries its own
//! side conditions — duplicate-free operands and no immediate termination —
//! which are checked the same way. The catalog in [`catalog`] retains all
//! schemas, including the unguarded originals, for validity testing.
//!
//! # Derived constant forms
//!
//! The prefix-shaped laws (CM3, CM7, the CM7D family, V1–V4) are stated for
//! `α · x`. Bare constants are handled through `α = α · ε` (A8) without
//! emitting the bridging step; a rule tagged, say, `V3` may therefore fire
//! on a bare parameterized action. Likewise `V6` is used for evaluating a
//! bare `delta` (through `delta = False :-> delta`), and sum/choice
//! restructuring steps are tagged with the commutativity law (`A1`, `pA1`)
//! even when associativity is silently involved.

use std::collections::BTreeMap;

use crate::data_model::{
    cond_truth_vector, cond_unsatisfiable, cond_valid, data_value_vector, eval_cond, eval_data,
    Cond, DataCtx, DataError, DataTerm, EvalMap,
};
use crate::meadow::{Prob, Rational};
use crate::process_terms::{Action, ProcTerm, TermKind};
use crate::sos_engine::{Engine, EngineError};

/// One applied rewrite step: which law, where, and what it did.
///
/// `path` is the list of child indices from the root to the rewritten
/// subterm; `before` and `after` print that subterm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteTrace {
    pub rule: &'static str,
    pub path: Vec<usize>,
    pub before: String,
    pub after: String,
}

impl std::fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pos = if self.path.is_empty() {
            "root".to_string()
        } else {
            self.path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
        };
        write!(f, "{:6} @ {}: {}  =>  {}", self.rule, pos, self.before, self.after)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RewriteError {
    #[error("the term contains recursion, which rewriting does not unfold")]
    RecursionPresent,
    #[error("rewrite budget exhausted after {spent} steps")]
    Budget { spent: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// The result of a completed normalization.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub term: ProcTerm,
    pub trace: Vec<RewriteTrace>,
}

/// The outcome of [`Rewriter::prove_equal`].
#[derive(Debug, Clone)]
pub enum Verdict {
    /// Both sides rewrite to the same normal form (up to decidable data
    /// equalities); the equation is derivable.
    Derived { left: Normalized, right: Normalized },
    /// The prover cannot settle the equation. This is *not* a claim of
    /// inequality.
    Unknown { reason: String, left: Option<Normalized>, right: Option<Normalized> },
}

impl Verdict {
    pub fn is_derived(&self) -> bool {
        matches!(self, Verdict::Derived { .. })
    }
}

/// A law-application engine over a fixed data context and communication
/// function (both taken from the operational [`Engine`], which is also used
/// to discharge the semantic side conditions).
pub struct Rewriter<'e> {
    engine: &'e mut Engine,
    ctx: DataCtx,
    sigmas: Vec<EvalMap>,
    budget_override: Option<usize>,
    point_cache: BTreeMap<ProcTerm, bool>,
    noterm_cache: BTreeMap<ProcTerm, bool>,
    key_cache: BTreeMap<ProcTerm, String>,
}

impl<'e> Rewriter<'e> {
    pub fn new(engine: &'e mut Engine) -> Result<Self, RewriteError> {
        let ctx = engine.ctx().clone();
        let sigmas = ctx.enumerate_maps()?;
        Ok(Rewriter {
            engine,
            ctx,
            sigmas,
            budget_override: None,
            point_cache: BTreeMap::new(),
            noterm_cache: BTreeMap::new(),
            key_cache: BTreeMap::new(),
        })
    }

    /// Replaces the size-derived step budget with a fixed one (for tests).
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget_override = Some(budget);
        self
    }

    fn budget_for(&self, t: &ProcTerm) -> usize {
        let n = t.size() as usize;
        self.budget_override.unwrap_or_else(|| (10 * n * n).max(10_000))
    }

    /// Applies the laws left-to-right, innermost first, until none matches.
    ///
    /// # Errors
    ///
    /// `RecursionPresent` if the term mentions a specification variable or
    /// constant; `Budget` if the step budget (10·size², at least 10 000)
    /// runs out.
    pub fn normalize(&mut self, t: &ProcTerm) -> Result<Normalized, RewriteError> {
        if contains_rec(t) {
            return Err(RewriteError::RecursionPresent);
        }
        let budget = self.budget_for(t);
        let mut spent = 0usize;
        let mut trace = Vec::new();
        let mut cur = t.clone();
        loop {
            match self.rewrite_once(&cur, &mut Vec::new())? {
                Some((next, entry)) => {
                    spent += 1;
                    if spent > budget {
                        return Err(RewriteError::Budget { spent });
                    }
                    trace.push(entry);
                    cur = next;
                }
                None => return Ok(Normalized { term: cur, trace }),
            }
        }
    }

    /// Tries to derive `t1 = t2` by normalizing both sides.
    pub fn prove_equal(&mut self, t1: &ProcTerm, t2: &ProcTerm) -> Result<Verdict, RewriteError> {
        if contains_rec(t1) || contains_rec(t2) {
            return Ok(Verdict::Unknown {
                reason: "recursion present; the prover does not reason about fixed points"
                    .to_string(),
                left: None,
                right: None,
            });
        }
        let left = match self.normalize(t1) {
            Ok(n) => n,
            Err(RewriteError::Budget { spent }) => {
                return Ok(Verdict::Unknown {
                    reason: format!("left side exhausted the rewrite budget ({spent} steps)"),
                    left: None,
                    right: None,
                })
            }
            Err(e) => return Err(e),
        };
        let right = match self.normalize(t2) {
            Ok(n) => n,
            Err(RewriteError::Budget { spent }) => {
                return Ok(Verdict::Unknown {
                    reason: format!("right side exhausted the rewrite budget ({spent} steps)"),
                    left: Some(left),
                    right: None,
                })
            }
            Err(e) => return Err(e),
        };
        if self.semantic_key(&left.term)? == self.semantic_key(&right.term)? {
            Ok(Verdict::Derived { left, right })
        } else {
            Ok(Verdict::Unknown {
                reason: "the normal forms differ".to_string(),
                left: Some(left),
                right: Some(right),
            })
        }
    }

    /// A rendering of `t` that identifies exactly the terms the laws IMP1
    /// and IMP2 let one rewrite into each other: conditions are fingerprinted
    /// by their truth table over the context and data expressions by their
    /// value table. Used for comparing and ordering normal forms.
    pub fn semantic_key(&mut self, t: &ProcTerm) -> Result<String, RewriteError> {
        if let Some(k) = self.key_cache.get(t) {
            return Ok(k.clone());
        }
        let k = match t.kind() {
            TermKind::Act(a) => self.action_key(a)?,
            TermKind::Eps => "eps".to_string(),
            TermKind::Alt(x, y) => {
                format!("+({},{})", self.semantic_key(x)?, self.semantic_key(y)?)
            }
            TermKind::Seq(x, y) => {
                format!(".({},{})", self.semantic_key(x)?, self.semantic_key(y)?)
            }
            TermKind::Par(x, y) => {
                format!("par({},{})", self.semantic_key(x)?, self.semantic_key(y)?)
            }
            TermKind::LMerge(x, y) => {
                format!("lm({},{})", self.semantic_key(x)?, self.semantic_key(y)?)
            }
            TermKind::CMerge(x, y) => {
                format!("cm({},{})", self.semantic_key(x)?, self.semantic_key(y)?)
            }
            TermKind::TermTest(x) => format!("tt({})", self.semantic_key(x)?),
            TermKind::Encap(h, x) => {
                format!("enc[{}]({})", action_set_key(h), self.semantic_key(x)?)
            }
            TermKind::Hide(i, x) => {
                format!("hid[{}]({})", action_set_key(i), self.semantic_key(x)?)
            }
            TermKind::PChoice(p, x, y) => format!(
                "pc[{}]({},{})",
                p.value(),
                self.semantic_key(x)?,
                self.semantic_key(y)?
            ),
            TermKind::Guard(phi, x) => {
                format!("gc[{}]({})", self.cond_key(phi)?, self.semantic_key(x)?)
            }
            TermKind::Eval(sigma, x) => format!("ev[{}]({})", sigma, self.semantic_key(x)?),
            TermKind::RecVar(x) => format!("rv:{x}"),
            TermKind::RecConst(x, spec) => format!("rc:{x}@{}", spec.name),
        };
        self.key_cache.insert(t.clone(), k.clone());
        Ok(k)
    }

    fn cond_key(&self, phi: &Cond) -> Result<String, RewriteError> {
        let bits = cond_truth_vector(&self.ctx, phi)?;
        Ok(bits.iter().map(|b| if *b { 'T' } else { 'F' }).collect())
    }

    fn data_key(&self, e: &DataTerm) -> Result<String, RewriteError> {
        let vals = data_value_vector(&self.ctx, e)?;
        Ok(vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
    }

    fn action_key(&self, a: &Action) -> Result<String, RewriteError> {
        Ok(match a {
            Action::Basic(n) => format!("a:{n}"),
            Action::Param(n, es) => {
                let args = es
                    .iter()
                    .map(|e| self.data_key(e))
                    .collect::<Result<Vec<_>, _>>()?
                    .join(";");
                format!("ap:{n}({args})")
            }
            Action::Assign(v, e) => format!("as:{v}:={}", self.data_key(e)?),
            Action::Tau => "tau".to_string(),
            Action::Delta => "delta".to_string(),
        })
    }

    /// Whether `t`'s one-step behaviour is a point mass under every
    /// evaluation map — the engine-checked form of the duplicability
    /// antecedent `x = x + x`.
    fn point_supported(&mut self, t: &ProcTerm) -> Result<bool, RewriteError> {
        if let Some(&b) = self.point_cache.get(t) {
            return Ok(b);
        }
        let mut all = true;
        for sigma in &self.sigmas {
            if !self.engine.distribution(sigma, t)?.is_point() {
                all = false;
                break;
            }
        }
        self.point_cache.insert(t.clone(), all);
        Ok(all)
    }

    /// Whether `t` resolves to a point target that cannot terminate under
    /// any map — the engine-checked form of the antecedent `∂ε(t) = delta`.
    fn never_terminates_resolved(&mut self, t: &ProcTerm) -> Result<bool, RewriteError> {
        if let Some(&b) = self.noterm_cache.get(t) {
            return Ok(b);
        }
        let mut ok = true;
        'outer: for sigma in &self.sigmas {
            let d = self.engine.distribution(sigma, t)?;
            let Some(target) = d.point_target().cloned() else {
                ok = false;
                break;
            };
            for sigma2 in &self.sigmas {
                if self.engine.terminates(sigma2, &target)? {
                    ok = false;
                    break 'outer;
                }
            }
        }
        self.noterm_cache.insert(t.clone(), ok);
        Ok(ok)
    }

    fn sorted_by_key(&mut self, parts: &[ProcTerm]) -> Result<bool, RewriteError> {
        for w in parts.windows(2) {
            if self.semantic_key(&w[0])? > self.semantic_key(&w[1])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn sort_by_key(&mut self, parts: &mut [ProcTerm]) -> Result<(), RewriteError> {
        let mut keyed = Vec::with_capacity(parts.len());
        for p in parts.iter() {
            keyed.push((self.semantic_key(p)?, p.clone()));
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        for (slot, (_, p)) in parts.iter_mut().zip(keyed) {
            *slot = p;
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // The traversal.
    // ------------------------------------------------------------------

    fn rewrite_once(
        &mut self,
        t: &ProcTerm,
        path: &mut Vec<usize>,
    ) -> Result<Option<(ProcTerm, RewriteTrace)>, RewriteError> {
        // Children first, left to right, so rules see normalized operands.
        let rebuilt = match t.kind() {
            TermKind::Act(_)
            | TermKind::Eps
            | TermKind::RecVar(_)
            | TermKind::RecConst(_, _) => None,
            TermKind::Alt(x, y) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::alt(nx, y.clone()), tr))
                .or(self
                    .rewrite_child(y, 1, path)?
                    .map(|(ny, tr)| (ProcTerm::alt(x.clone(), ny), tr))),
            TermKind::Seq(x, y) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::seq(nx, y.clone()), tr))
                .or(self
                    .rewrite_child(y, 1, path)?
                    .map(|(ny, tr)| (ProcTerm::seq(x.clone(), ny), tr))),
            TermKind::Par(x, y) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::par(nx, y.clone()), tr))
                .or(self
                    .rewrite_child(y, 1, path)?
                    .map(|(ny, tr)| (ProcTerm::par(x.clone(), ny), tr))),
            TermKind::LMerge(x, y) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::lmerge(nx, y.clone()), tr))
                .or(self
                    .rewrite_child(y, 1, path)?
                    .map(|(ny, tr)| (ProcTerm::lmerge(x.clone(), ny), tr))),
            TermKind::CMerge(x, y) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::cmerge(nx, y.clone()), tr))
                .or(self
                    .rewrite_child(y, 1, path)?
                    .map(|(ny, tr)| (ProcTerm::cmerge(x.clone(), ny), tr))),
            TermKind::TermTest(x) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::termtest(nx), tr)),
            TermKind::Encap(h, x) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::encap(h.clone(), nx), tr)),
            TermKind::Hide(i, x) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::hide(i.clone(), nx), tr)),
            TermKind::PChoice(p, x, y) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::pchoice(p.clone(), nx, y.clone()), tr))
                .or(self
                    .rewrite_child(y, 1, path)?
                    .map(|(ny, tr)| (ProcTerm::pchoice(p.clone(), x.clone(), ny), tr))),
            TermKind::Guard(phi, x) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::guard(phi.clone(), nx), tr)),
            TermKind::Eval(sigma, x) => self
                .rewrite_child(x, 0, path)?
                .map(|(nx, tr)| (ProcTerm::eval_wrap(sigma.clone(), nx), tr)),
        };
        if let Some(hit) = rebuilt {
            return Ok(Some(hit));
        }
        if let Some((rule, next)) = self.rule_at(t)? {
            let entry = RewriteTrace {
                rule,
                path: path.clone(),
                before: t.to_string(),
                after: next.to_string(),
            };
            return Ok(Some((next, entry)));
        }
        Ok(None)
    }

    fn rewrite_child(
        &mut self,
        child: &ProcTerm,
        slot: usize,
        path: &mut Vec<usize>,
    ) -> Result<Option<(ProcTerm, RewriteTrace)>, RewriteError> {
        path.push(slot);
        let out = self.rewrite_once(child, path)?;
        path.pop();
        Ok(out)
    }

    // ------------------------------------------------------------------
    // The rules, dispatched by head operator.
    // ------------------------------------------------------------------

    fn rule_at(&mut self, t: &ProcTerm) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        match t.kind() {
            TermKind::Alt(_, _) => self.alt_rule(t),
            TermKind::Seq(x, y) => self.seq_rule(x, y),
            TermKind::Par(x, y) => self.par_rule(x, y),
            TermKind::LMerge(x, y) => self.lmerge_rule(x, y),
            TermKind::CMerge(x, y) => self.cmerge_rule(x, y),
            TermKind::TermTest(x) => self.termtest_rule(x),
            TermKind::Encap(h, x) => Ok(Self::set_rule(h, x, false)),
            TermKind::Hide(i, x) => Ok(Self::set_rule(i, x, true)),
            TermKind::PChoice(p, x, y) => self.pchoice_rule(p, x, y),
            TermKind::Guard(phi, x) => self.guard_rule(phi, x),
            TermKind::Eval(sigma, x) => self.eval_rule(sigma, x),
            TermKind::Act(_) | TermKind::Eps | TermKind::RecVar(_) | TermKind::RecConst(_, _) => {
                Ok(None)
            }
        }
    }

    /// A6 (drop `delta` summands), A3'/A3'' (idempotent constants), pA5
    /// (pull a probabilistic summand out of the sum), and A1/A2 (flatten and
    /// order the summands).
    fn alt_rule(&mut self, t: &ProcTerm) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        let parts = summands(t);
        // A2: re-associate so the chain nests to the right.
        if matches!(alt_children(t), Some((x, _)) if matches!(x.kind(), TermKind::Alt(_, _))) {
            return Ok(Some(("A2", rebuild_sum(parts))));
        }
        // A6: x + delta = x.
        if parts.iter().any(is_delta) {
            let kept: Vec<ProcTerm> = parts.iter().filter(|p| !is_delta(p)).cloned().collect();
            return Ok(Some(("A6", rebuild_sum(kept))));
        }
        // pA5: (x ⊕π y) + z = (x + z) ⊕π (y + z).
        if let Some(i) = parts
            .iter()
            .position(|p| matches!(p.kind(), TermKind::PChoice(_, _, _)))
        {
            let TermKind::PChoice(p, x, y) = parts[i].kind() else { unreachable!() };
            let rest: Vec<ProcTerm> =
                parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            let z = rebuild_sum(rest);
            return Ok(Some((
                "pA5",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::alt(x.clone(), z.clone()),
                    ProcTerm::alt(y.clone(), z),
                ),
            )));
        }
        // A3' / A3'': idempotence of constants and of the empty process.
        for i in 0..parts.len() {
            for j in (i + 1)..parts.len() {
                if parts[i] == parts[j] {
                    let rule = match parts[i].kind() {
                        TermKind::Act(_) => Some("A3'"),
                        TermKind::Eps => Some("A3''"),
                        _ => None,
                    };
                    if let Some(rule) = rule {
                        let kept: Vec<ProcTerm> = parts
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, p)| p.clone())
                            .collect();
                        return Ok(Some((rule, rebuild_sum(kept))));
                    }
                }
            }
        }
        // A1: order the summands canonically.
        if !self.sorted_by_key(&parts)? {
            let mut sorted = parts;
            self.sort_by_key(&mut sorted)?;
            return Ok(Some(("A1", rebuild_sum(sorted))));
        }
        Ok(None)
    }

    /// A7/A8/A9 (unit and zero laws), A5 (right-associate), pA4 and guarded
    /// A4 (distribute a head over the tail), GC5 through `x = eps` heads,
    /// and the silent-absorption law pBE.
    fn seq_rule(
        &mut self,
        x: &ProcTerm,
        y: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        if is_delta(x) {
            return Ok(Some(("A7", ProcTerm::delta())));
        }
        if matches!(x.kind(), TermKind::Eps) {
            return Ok(Some(("A9", y.clone())));
        }
        if matches!(y.kind(), TermKind::Eps) {
            return Ok(Some(("A8", x.clone())));
        }
        if let TermKind::Seq(x1, x2) = x.kind() {
            return Ok(Some((
                "A5",
                ProcTerm::seq(x1.clone(), ProcTerm::seq(x2.clone(), y.clone())),
            )));
        }
        if let TermKind::PChoice(p, l, r) = x.kind() {
            return Ok(Some((
                "pA4",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::seq(l.clone(), y.clone()),
                    ProcTerm::seq(r.clone(), y.clone()),
                ),
            )));
        }
        if matches!(x.kind(), TermKind::Alt(_, _)) && self.point_supported(y)? {
            let distributed: Vec<ProcTerm> =
                summands(x).into_iter().map(|s| ProcTerm::seq(s, y.clone())).collect();
            return Ok(Some(("A4", rebuild_sum(distributed))));
        }
        // (phi :-> eps) . y = phi :-> y   (GC5 read right-to-left, plus A9).
        if let TermKind::Guard(phi, g) = x.kind() {
            if matches!(g.kind(), TermKind::Eps) {
                return Ok(Some(("GC5", ProcTerm::guard(phi.clone(), y.clone()))));
            }
        }
        if matches!(x.kind(), TermKind::Act(_)) {
            if let Some(y2) = self.pbe_in_chain(y)? {
                return Ok(Some(("pBE", ProcTerm::seq(x.clone(), y2))));
            }
        }
        Ok(None)
    }

    /// Walks the right-nested probabilistic-choice spine of an action
    /// prefix's tail, trying the silent-absorption rewrite on each branch.
    fn pbe_in_chain(&mut self, t: &ProcTerm) -> Result<Option<ProcTerm>, RewriteError> {
        if let TermKind::PChoice(p, l, r) = t.kind() {
            if let Some(l2) = self.pbe_branch(l)? {
                return Ok(Some(ProcTerm::pchoice(p.clone(), l2, r.clone())));
            }
            if let Some(r2) = self.pbe_in_chain(r)? {
                return Ok(Some(ProcTerm::pchoice(p.clone(), l.clone(), r2)));
            }
            return Ok(None);
        }
        self.pbe_branch(t)
    }

    /// The body of pBE on one branch: `tau . s` collapses to `s`, and
    /// `tau . s + x` collapses to `s` when the extra summands `x` already
    /// occur in `s` — each under the side conditions that the duplicated
    /// parts are point-supported and `s` resolves to something that can
    /// never terminate.
    fn pbe_branch(&mut self, b: &ProcTerm) -> Result<Option<ProcTerm>, RewriteError> {
        if let TermKind::Seq(h, s) = b.kind() {
            if matches!(h.kind(), TermKind::Act(Action::Tau))
                && self.point_supported(s)?
                && self.never_terminates_resolved(s)?
            {
                return Ok(Some(s.clone()));
            }
            return Ok(None);
        }
        if matches!(b.kind(), TermKind::Alt(_, _)) {
            let parts = summands(b);
            for (i, cand) in parts.iter().enumerate() {
                let TermKind::Seq(h, s) = cand.kind() else { continue };
                if !matches!(h.kind(), TermKind::Act(Action::Tau)) {
                    continue;
                }
                let rest: Vec<ProcTerm> = parts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, p)| p.clone())
                    .collect();
                if !multiset_contains(&summands(s), &rest) {
                    continue;
                }
                let x_part = rebuild_sum(rest.clone());
                let y_part = rebuild_sum(multiset_difference(&summands(s), &rest));
                if self.point_supported(&x_part)?
                    && self.point_supported(&y_part)?
                    && self.never_terminates_resolved(s)?
                {
                    return Ok(Some(s.clone()));
                }
            }
        }
        Ok(None)
    }

    /// pCM1/pCM2 (probabilistic choice commutes with interleaving) and the
    /// guarded expansion CM1E'.
    fn par_rule(
        &mut self,
        x: &ProcTerm,
        y: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        if let TermKind::PChoice(p, l, r) = x.kind() {
            return Ok(Some((
                "pCM1",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::par(l.clone(), y.clone()),
                    ProcTerm::par(r.clone(), y.clone()),
                ),
            )));
        }
        if let TermKind::PChoice(p, l, r) = y.kind() {
            return Ok(Some((
                "pCM2",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::par(x.clone(), l.clone()),
                    ProcTerm::par(x.clone(), r.clone()),
                ),
            )));
        }
        if self.point_supported(x)? && self.point_supported(y)? {
            let expansion = ProcTerm::alt(
                ProcTerm::alt(
                    ProcTerm::alt(
                        ProcTerm::lmerge(x.clone(), y.clone()),
                        ProcTerm::lmerge(y.clone(), x.clone()),
                    ),
                    ProcTerm::cmerge(x.clone(), y.clone()),
                ),
                ProcTerm::seq(ProcTerm::termtest(x.clone()), ProcTerm::termtest(y.clone())),
            );
            return Ok(Some(("CM1E'", expansion)));
        }
        Ok(None)
    }

    /// pCM3/pCM4, GC8, CM2E, and the guarded CM3/CM4.
    fn lmerge_rule(
        &mut self,
        x: &ProcTerm,
        y: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        if let TermKind::PChoice(p, l, r) = x.kind() {
            return Ok(Some((
                "pCM3",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::lmerge(l.clone(), y.clone()),
                    ProcTerm::lmerge(r.clone(), y.clone()),
                ),
            )));
        }
        if let TermKind::PChoice(p, l, r) = y.kind() {
            return Ok(Some((
                "pCM4",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::lmerge(x.clone(), l.clone()),
                    ProcTerm::lmerge(x.clone(), r.clone()),
                ),
            )));
        }
        if let TermKind::Guard(phi, u) = x.kind() {
            return Ok(Some((
                "GC8",
                ProcTerm::guard(phi.clone(), ProcTerm::lmerge(u.clone(), y.clone())),
            )));
        }
        if matches!(x.kind(), TermKind::Eps) {
            return Ok(Some(("CM2E", ProcTerm::delta())));
        }
        if let Some((alpha, tail)) = head_tail(x) {
            if self.point_supported(y)? {
                return Ok(Some((
                    "CM3",
                    ProcTerm::seq(ProcTerm::act(alpha), ProcTerm::par(tail, y.clone())),
                )));
            }
            return Ok(None);
        }
        if matches!(x.kind(), TermKind::Alt(_, _)) && self.point_supported(y)? {
            let distributed: Vec<ProcTerm> = summands(x)
                .into_iter()
                .map(|s| ProcTerm::lmerge(s, y.clone()))
                .collect();
            return Ok(Some(("CM4", rebuild_sum(distributed))));
        }
        Ok(None)
    }

    /// pCM5/pCM6, GC9/GC10, the unit/zero laws CM5E/CM6E/CM10/CM11, the
    /// communication table (CM7, CM12, and the parameterized CM7Da–CM7Df),
    /// and the guarded CM8/CM9.
    fn cmerge_rule(
        &mut self,
        x: &ProcTerm,
        y: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        if let TermKind::PChoice(p, l, r) = x.kind() {
            return Ok(Some((
                "pCM5",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::cmerge(l.clone(), y.clone()),
                    ProcTerm::cmerge(r.clone(), y.clone()),
                ),
            )));
        }
        if let TermKind::PChoice(p, l, r) = y.kind() {
            return Ok(Some((
                "pCM6",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::cmerge(x.clone(), l.clone()),
                    ProcTerm::cmerge(x.clone(), r.clone()),
                ),
            )));
        }
        if let TermKind::Guard(phi, u) = x.kind() {
            return Ok(Some((
                "GC9",
                ProcTerm::guard(phi.clone(), ProcTerm::cmerge(u.clone(), y.clone())),
            )));
        }
        if let TermKind::Guard(phi, u) = y.kind() {
            return Ok(Some((
                "GC10",
                ProcTerm::guard(phi.clone(), ProcTerm::cmerge(x.clone(), u.clone())),
            )));
        }
        if matches!(x.kind(), TermKind::Eps) {
            return Ok(Some(("CM5E", ProcTerm::delta())));
        }
        if matches!(y.kind(), TermKind::Eps) {
            return Ok(Some(("CM6E", ProcTerm::delta())));
        }
        if is_delta(x) {
            return Ok(Some(("CM10", ProcTerm::delta())));
        }
        if is_delta(y) {
            return Ok(Some(("CM11", ProcTerm::delta())));
        }
        if let (Some((al, tl)), Some((ar, tr))) = (head_tail(x), head_tail(y)) {
            let bare = matches!(x.kind(), TermKind::Act(_)) && matches!(y.kind(), TermKind::Act(_));
            let (rule, out) = self.communicate(&al, tl, &ar, tr, bare);
            return Ok(Some((rule, out)));
        }
        if matches!(x.kind(), TermKind::Alt(_, _)) && self.point_supported(y)? {
            let distributed: Vec<ProcTerm> = summands(x)
                .into_iter()
                .map(|s| ProcTerm::cmerge(s, y.clone()))
                .collect();
            return Ok(Some(("CM8", rebuild_sum(distributed))));
        }
        if matches!(y.kind(), TermKind::Alt(_, _)) && self.point_supported(x)? {
            let distributed: Vec<ProcTerm> = summands(y)
                .into_iter()
                .map(|s| ProcTerm::cmerge(x.clone(), s))
                .collect();
            return Ok(Some(("CM9", rebuild_sum(distributed))));
        }
        Ok(None)
    }

    /// The communication table for a pair of action prefixes. The label of a
    /// successful parameterized communication keeps the left operand's
    /// argument expressions, guarded by the pairwise equality of both sides'
    /// arguments.
    fn communicate(
        &mut self,
        left: &Action,
        ltail: ProcTerm,
        right: &Action,
        rtail: ProcTerm,
        bare: bool,
    ) -> (&'static str, ProcTerm) {
        let merged = ProcTerm::par(ltail, rtail);
        match (left, right) {
            (Action::Assign(_, _), _) => ("CM7De", ProcTerm::delta()),
            (_, Action::Assign(_, _)) => ("CM7Df", ProcTerm::delta()),
            (Action::Param(a, es), Action::Param(b, fs)) => {
                match self.engine.comm().result(a, b) {
                    Some(c) if es.len() == fs.len() => {
                        let c = c.to_string();
                        let guard = Cond::all(
                            es.iter()
                                .zip(fs.iter())
                                .map(|(e, f)| Cond::Eq(e.clone(), f.clone())),
                        );
                        let act = Action::Param(c, es.clone());
                        (
                            "CM7Da",
                            ProcTerm::guard(guard, ProcTerm::seq(ProcTerm::act(act), merged)),
                        )
                    }
                    _ => ("CM7Db", ProcTerm::delta()),
                }
            }
            (Action::Param(_, _), _) => ("CM7Dc", ProcTerm::delta()),
            (_, Action::Param(_, _)) => ("CM7Dd", ProcTerm::delta()),
            (Action::Basic(a), Action::Basic(b)) => {
                let rule = if bare { "CM12" } else { "CM7" };
                match self.engine.comm().result(a, b) {
                    Some(c) => {
                        let act = Action::Basic(c.to_string());
                        (rule, ProcTerm::seq(ProcTerm::act(act), merged))
                    }
                    None => (rule, ProcTerm::delta()),
                }
            }
            // tau and delta communicate with nothing.
            _ => (if bare { "CM12" } else { "CM7" }, ProcTerm::delta()),
        }
    }

    /// pTE, TE1–TE4, and GC11: the termination test keeps only termination.
    fn termtest_rule(
        &mut self,
        x: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        Ok(match x.kind() {
            TermKind::PChoice(p, l, r) => Some((
                "pTE",
                ProcTerm::pchoice(
                    p.clone(),
                    ProcTerm::termtest(l.clone()),
                    ProcTerm::termtest(r.clone()),
                ),
            )),
            TermKind::Eps => Some(("TE1", ProcTerm::eps())),
            TermKind::Act(_) => Some(("TE2", ProcTerm::delta())),
            TermKind::Alt(_, _) => {
                let parts: Vec<ProcTerm> =
                    summands(x).into_iter().map(ProcTerm::termtest).collect();
                Some(("TE3", rebuild_sum(parts)))
            }
            TermKind::Seq(a, b) => Some((
                "TE4",
                ProcTerm::seq(ProcTerm::termtest(a.clone()), ProcTerm::termtest(b.clone())),
            )),
            TermKind::Guard(phi, u) => Some((
                "GC11",
                ProcTerm::guard(phi.clone(), ProcTerm::termtest(u.clone())),
            )),
            _ => None,
        })
    }

    /// The shared shape of encapsulation (D0–D4, pD, GC12) and abstraction
    /// (T0–T4, pT, GC13): push through sums, sequences, choices, and guards;
    /// on a constant, drop, keep, or rename by set membership.
    fn set_rule(
        set: &crate::process_terms::ActionSet,
        x: &ProcTerm,
        hide: bool,
    ) -> Option<(&'static str, ProcTerm)> {
        let wrap = |t: ProcTerm| {
            if hide {
                ProcTerm::hide(set.clone(), t)
            } else {
                ProcTerm::encap(set.clone(), t)
            }
        };
        match x.kind() {
            TermKind::PChoice(p, l, r) => Some((
                if hide { "pT" } else { "pD" },
                ProcTerm::pchoice(p.clone(), wrap(l.clone()), wrap(r.clone())),
            )),
            TermKind::Eps => Some((if hide { "T0" } else { "D0" }, ProcTerm::eps())),
            TermKind::Act(a) => {
                if set.matches(a) {
                    if hide {
                        Some(("T2", ProcTerm::tau()))
                    } else {
                        Some(("D2", ProcTerm::delta()))
                    }
                } else {
                    Some((if hide { "T1" } else { "D1" }, x.clone()))
                }
            }
            TermKind::Alt(_, _) => {
                let parts: Vec<ProcTerm> = summands(x).into_iter().map(wrap).collect();
                Some((if hide { "T3" } else { "D3" }, rebuild_sum(parts)))
            }
            TermKind::Seq(a, b) => Some((
                if hide { "T4" } else { "D4" },
                ProcTerm::seq(wrap(a.clone()), wrap(b.clone())),
            )),
            TermKind::Guard(phi, u) => Some((
                if hide { "GC13" } else { "GC12" },
                ProcTerm::guard(phi.clone(), wrap(u.clone())),
            )),
            _ => None,
        }
    }

    /// The probabilistic-choice chain laws: pA6 eliminates degenerate
    /// weights, pA2 re-associates to the right, pA3 merges equal adjacent
    /// branches, and pA1 orders branches (weights recomputed exactly, with
    /// the inverse-of-zero-is-zero convention absorbing the boundary case).
    fn pchoice_rule(
        &mut self,
        p: &Prob,
        x: &ProcTerm,
        y: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        if p.is_one() {
            return Ok(Some(("pA6", x.clone())));
        }
        if p.is_zero() {
            return Ok(Some(("pA6", y.clone())));
        }
        if let TermKind::PChoice(p2, a, b) = x.kind() {
            let first = p2.value().clone() * p.value().clone();
            let rest_num = (Rational::one() - p2.value().clone()) * p.value().clone();
            let rest_den = Rational::one() - first.clone();
            let inner = rest_num * rest_den.inv();
            let first = Prob::new(first).expect("product of probabilities");
            let inner = Prob::new(inner).expect("conditional probability");
            return Ok(Some((
                "pA2",
                ProcTerm::pchoice(
                    first,
                    a.clone(),
                    ProcTerm::pchoice(inner, b.clone(), y.clone()),
                ),
            )));
        }
        let kx = self.semantic_key(x)?;
        if let TermKind::PChoice(q, y1, y2) = y.kind() {
            if kx == self.semantic_key(y1)? {
                // x ⊕π (x ⊕ρ w) = x ⊕(π + (1−π)ρ) w.
                let total = p.value().clone()
                    + (Rational::one() - p.value().clone()) * q.value().clone();
                let total = Prob::new(total).expect("combined probability");
                return Ok(Some(("pA3", ProcTerm::pchoice(total, x.clone(), y2.clone()))));
            }
            if kx > self.semantic_key(y1)? {
                // Bubble the smaller branch forward.
                let w = (Rational::one() - p.value().clone()) * q.value().clone();
                let nested = p.value().clone() * (Rational::one() - w.clone()).inv();
                let w = Prob::new(w).expect("branch probability");
                let nested = Prob::new(nested).expect("conditional probability");
                return Ok(Some((
                    "pA1",
                    ProcTerm::pchoice(
                        w,
                        y1.clone(),
                        ProcTerm::pchoice(nested, x.clone(), y2.clone()),
                    ),
                )));
            }
            return Ok(None);
        }
        let ky = self.semantic_key(y)?;
        if kx == ky {
            return Ok(Some(("pA3", x.clone())));
        }
        if kx > ky {
            return Ok(Some(("pA1", ProcTerm::pchoice(p.complement(), y.clone(), x.clone()))));
        }
        Ok(None)
    }

    /// GC1/GC2 with IMP2 (conditions decided by the data model collapse to
    /// `True`/`False` first), GC3, GC4, GC5, and GC6. The guard/choice
    /// exchange pGC is deliberately not applied: for decided conditions it
    /// is subsumed by GC1/GC2, and for contingent ones it is not valid.
    fn guard_rule(
        &mut self,
        phi: &Cond,
        x: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        if matches!(phi, Cond::True) {
            return Ok(Some(("GC1", x.clone())));
        }
        if matches!(phi, Cond::False) {
            return Ok(Some(("GC2", ProcTerm::delta())));
        }
        if cond_valid(&self.ctx, phi)? {
            return Ok(Some(("IMP2", ProcTerm::guard(Cond::True, x.clone()))));
        }
        if cond_unsatisfiable(&self.ctx, phi)? {
            return Ok(Some(("IMP2", ProcTerm::guard(Cond::False, x.clone()))));
        }
        Ok(match x.kind() {
            TermKind::Act(Action::Delta) => Some(("GC3", ProcTerm::delta())),
            TermKind::Alt(_, _) => {
                let parts: Vec<ProcTerm> = summands(x)
                    .into_iter()
                    .map(|s| ProcTerm::guard(phi.clone(), s))
                    .collect();
                Some(("GC4", rebuild_sum(parts)))
            }
            TermKind::Seq(h, u) => Some((
                "GC5",
                ProcTerm::seq(ProcTerm::guard(phi.clone(), h.clone()), u.clone()),
            )),
            TermKind::Guard(psi, u) => Some((
                "GC6",
                ProcTerm::guard(Cond::and(phi.clone(), psi.clone()), u.clone()),
            )),
            _ => None,
        })
    }

    /// The evaluation laws V0–V6 and pV: push the fixed map through the
    /// term, evaluating action data and threading assignment updates.
    fn eval_rule(
        &mut self,
        sigma: &EvalMap,
        x: &ProcTerm,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        let wrap = |s: &EvalMap, t: ProcTerm| ProcTerm::eval_wrap(s.clone(), t);
        match x.kind() {
            TermKind::PChoice(p, l, r) => Ok(Some((
                "pV",
                ProcTerm::pchoice(p.clone(), wrap(sigma, l.clone()), wrap(sigma, r.clone())),
            ))),
            TermKind::Eps => Ok(Some(("V0", ProcTerm::eps()))),
            TermKind::Act(Action::Delta) => Ok(Some(("V6", ProcTerm::delta()))),
            TermKind::Alt(_, _) => {
                let parts: Vec<ProcTerm> =
                    summands(x).into_iter().map(|s| wrap(sigma, s)).collect();
                Ok(Some(("V5", rebuild_sum(parts))))
            }
            TermKind::Guard(phi, u) => {
                let truth =
                    if eval_cond(&self.ctx, sigma, phi)? { Cond::True } else { Cond::False };
                Ok(Some(("V6", ProcTerm::guard(truth, wrap(sigma, u.clone())))))
            }
            TermKind::Seq(h, u) => {
                if let TermKind::Guard(phi, hh) = h.kind() {
                    // sigma((phi :-> h) . u) via GC5 read backwards.
                    let truth =
                        if eval_cond(&self.ctx, sigma, phi)? { Cond::True } else { Cond::False };
                    let inner = wrap(sigma, ProcTerm::seq(hh.clone(), u.clone()));
                    return Ok(Some(("V6", ProcTerm::guard(truth, inner))));
                }
                let TermKind::Act(a) = h.kind() else { return Ok(None) };
                self.eval_prefix(sigma, a, Some(u))
            }
            TermKind::Act(a) => self.eval_prefix(sigma, a, None),
            _ => Ok(None),
        }
    }

    /// V1–V4 on `alpha . tail` (or a bare constant, through A8).
    fn eval_prefix(
        &mut self,
        sigma: &EvalMap,
        a: &Action,
        tail: Option<&ProcTerm>,
    ) -> Result<Option<(&'static str, ProcTerm)>, RewriteError> {
        let finish = |rule: &'static str, act: Action, next_map: &EvalMap| {
            let head = ProcTerm::act(act);
            let out = match tail {
                Some(u) => ProcTerm::seq(head, ProcTerm::eval_wrap(next_map.clone(), u.clone())),
                None => head,
            };
            Ok(Some((rule, out)))
        };
        match a {
            Action::Tau => finish("V1", Action::Tau, sigma),
            Action::Basic(n) => finish("V2", Action::Basic(n.clone()), sigma),
            Action::Param(n, es) => {
                let lits = es
                    .iter()
                    .map(|e| Ok(DataTerm::lit(eval_data(&self.ctx, sigma, e)?)))
                    .collect::<Result<Vec<_>, RewriteError>>()?;
                finish("V3", Action::Param(n.clone(), lits), sigma)
            }
            Action::Assign(v, e) => {
                let d = eval_data(&self.ctx, sigma, e)?;
                let updated = sigma.update(v, d)?;
                finish("V4", Action::Assign(v.clone(), DataTerm::lit(d)), &updated)
            }
            Action::Delta => Ok(None), // handled by the caller's V6 case
        }
    }
}

// ----------------------------------------------------------------------
// Shape helpers.
// ----------------------------------------------------------------------

/// Whether the term mentions recursion anywhere.
pub fn contains_rec(t: &ProcTerm) -> bool {
    match t.kind() {
        TermKind::RecVar(_) | TermKind::RecConst(_, _) => true,
        TermKind::Act(_) | TermKind::Eps => false,
        TermKind::Alt(x, y)
        | TermKind::Seq(x, y)
        | TermKind::Par(x, y)
        | TermKind::LMerge(x, y)
        | TermKind::CMerge(x, y)
        | TermKind::PChoice(_, x, y) => contains_rec(x) || contains_rec(y),
        TermKind::TermTest(x)
        | TermKind::Encap(_, x)
        | TermKind::Hide(_, x)
        | TermKind::Guard(_, x)
        | TermKind::Eval(_, x) => contains_rec(x),
    }
}

fn is_delta(t: &ProcTerm) -> bool {
    matches!(t.kind(), TermKind::Act(Action::Delta))
}

fn alt_children(t: &ProcTerm) -> Option<(&ProcTerm, &ProcTerm)> {
    match t.kind() {
        TermKind::Alt(x, y) => Some((x, y)),
        _ => None,
    }
}

/// The summands of a (possibly nested) sum, in syntactic order.
pub fn summands(t: &ProcTerm) -> Vec<ProcTerm> {
    fn walk(t: &ProcTerm, out: &mut Vec<ProcTerm>) {
        match t.kind() {
            TermKind::Alt(x, y) => {
                walk(x, out);
                walk(y, out);
            }
            _ => out.push(t.clone()),
        }
    }
    let mut out = Vec::new();
    walk(t, &mut out);
    out
}

/// Rebuilds a right-nested sum; the empty sum is `delta`.
pub fn rebuild_sum(parts: Vec<ProcTerm>) -> ProcTerm {
    let mut it = parts.into_iter().rev();
    match it.next() {
        None => ProcTerm::delta(),
        Some(last) => it.fold(last, |acc, p| ProcTerm::alt(p, acc)),
    }
}

/// Reads an action prefix: a bare constant is `alpha . eps` (A8).
fn head_tail(t: &ProcTerm) -> Option<(Action, ProcTerm)> {
    match t.kind() {
        TermKind::Act(a) => Some((a.clone(), ProcTerm::eps())),
        TermKind::Seq(h, u) => match h.kind() {
            TermKind::Act(a) => Some((a.clone(), u.clone())),
            _ => None,
        },
        _ => None,
    }
}

fn counts(parts: &[ProcTerm]) -> BTreeMap<&ProcTerm, usize> {
    let mut m = BTreeMap::new();
    for p in parts {
        *m.entry(p).or_insert(0) += 1;
    }
    m
}

fn multiset_contains(haystack: &[ProcTerm], needles: &[ProcTerm]) -> bool {
    let have = counts(haystack);
    counts(needles)
        .into_iter()
        .all(|(t, n)| have.get(t).copied().unwrap_or(0) >= n)
}

fn multiset_difference(haystack: &[ProcTerm], remove: &[ProcTerm]) -> Vec<ProcTerm> {
    let mut take = counts(remove);
    let mut out = Vec::new();
    for p in haystack {
        match take.get_mut(p) {
            Some(n) if *n > 0 => *n -= 1,
            _ => out.push(p.clone()),
        }
    }
    out
}

fn action_set_key(set: &crate::process_terms::ActionSet) -> String {
    let names: Vec<&str> = set.names().collect();
    let vars: Vec<&str> = set.assign_vars().collect();
    format!("{}|{}", names.join(","), vars.join(","))
}

pub mod catalog {
    //! Every law of the equational system as a generator of random closed
    //! instances, for validity testing against the operational semantics.
    //!
    //! `sound` records the expected verdict: `false` marks the seven schemas
    //! whose unconditional form copies or shifts an operand across a
    //! context that can distinguish probabilistic from resolved behaviour
    //! (A4, CM3, CM4, CM8, CM9, GC7, pGC). Conditional laws (CM1E', pBE,
    //! pBED, RSP) generate instances that satisfy their antecedents by
    //! construction.

    use super::*;
    use crate::process_terms::{unfold, ActionSet, RecSpec};
    use crate::testkit::{
        random_cond, random_data_term, random_eval_map, random_linear_spec, random_term,
        LinearSpecConfig, TermGenConfig,
    };
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    type Gen = fn(&mut ChaCha12Rng, &DataCtx) -> (ProcTerm, ProcTerm);

    /// One law schema: a name, the expected validity, and an instance
    /// generator producing a closed left/right pair.
    pub struct AxiomSchema {
        pub name: &'static str,
        pub sound: bool,
        pub instantiate: Gen,
    }

    fn cfg() -> TermGenConfig {
        TermGenConfig {
            max_depth: 3,
            with_par: true,
            with_wrappers: true,
            with_eval: true,
            with_rec: false,
            ..TermGenConfig::default()
        }
    }

    fn filler(rng: &mut ChaCha12Rng, ctx: &DataCtx) -> ProcTerm {
        random_term(rng, ctx, &cfg())
    }

    fn small(rng: &mut ChaCha12Rng, ctx: &DataCtx) -> ProcTerm {
        random_term(rng, ctx, &TermGenConfig { max_depth: 2, ..cfg() })
    }

    fn prob(rng: &mut ChaCha12Rng) -> Prob {
        let pool = [
            Prob::zero(),
            Prob::frac(1, 3),
            Prob::half(),
            Prob::frac(2, 3),
            Prob::one(),
        ];
        pool.choose(rng).unwrap().clone()
    }

    /// Filler biased toward the communicating action names of [`comm_table`]:
    /// sums of bare prefixes, optionally split by a fair probabilistic
    /// choice. The communication-merge distribution schemas need arguments
    /// whose steps can actually pair up under the communication function —
    /// generic filler over non-communicating names never exercises them.
    fn comm_filler(rng: &mut ChaCha12Rng, _ctx: &DataCtx) -> ProcTerm {
        fn head(rng: &mut ChaCha12Rng) -> ProcTerm {
            let names = ["s", "rr", "cc", "a"];
            ProcTerm::act(Action::basic(names.choose(rng).unwrap()))
        }
        fn sum(rng: &mut ChaCha12Rng) -> ProcTerm {
            if rng.gen_bool(0.4) {
                ProcTerm::alt(head(rng), head(rng))
            } else {
                head(rng)
            }
        }
        let x = sum(rng);
        if rng.gen_bool(0.5) {
            ProcTerm::pchoice(Prob::half(), x, sum(rng))
        } else {
            x
        }
    }

    fn constant(rng: &mut ChaCha12Rng, ctx: &DataCtx) -> Action {
        let mut options = vec![
            Action::Basic("a".into()),
            Action::Basic("b".into()),
            Action::Basic("c".into()),
            Action::Tau,
            Action::Delta,
        ];
        let vars: Vec<String> = ctx.vars().map(|v| v.to_string()).collect();
        if !vars.is_empty() {
            let e = random_data_term(rng, ctx, 1);
            options.push(Action::Param("a".into(), vec![e.clone()]));
            options.push(Action::Assign(vars[0].clone(), e));
        }
        options.choose(rng).unwrap().clone()
    }

    /// A term whose one-step behaviour is a point mass under every map: a
    /// sum of (possibly guarded) action prefixes, optionally with
    /// terminating summands.
    fn stable_filler(rng: &mut ChaCha12Rng, ctx: &DataCtx, allow_term: bool) -> ProcTerm {
        let n = rng.gen_range(1..=2);
        let parts: Vec<ProcTerm> = (0..n)
            .map(|_| {
                let mut s = if allow_term && rng.gen_bool(0.25) {
                    ProcTerm::eps()
                } else {
                    let mut alpha = constant(rng, ctx);
                    if matches!(alpha, Action::Delta) {
                        alpha = Action::Tau;
                    }
                    ProcTerm::seq(ProcTerm::act(alpha), small(rng, ctx))
                };
                if rng.gen_bool(0.3) {
                    s = ProcTerm::guard(random_cond(rng, ctx, 1), s);
                }
                s
            })
            .collect();
        rebuild_sum(parts)
    }

    fn action_set(rng: &mut ChaCha12Rng, containing: Option<&Action>) -> ActionSet {
        let mut names = Vec::new();
        let mut vars = Vec::new();
        for n in ["a", "b", "c"] {
            if rng.gen_bool(0.4) {
                names.push(n.to_string());
            }
        }
        match containing {
            Some(Action::Basic(n)) | Some(Action::Param(n, _)) => names.push(n.clone()),
            Some(Action::Assign(v, _)) => vars.push(v.clone()),
            _ => {}
        }
        ActionSet::new(names, vars)
    }

    /// A constant that an action set can name (not `tau`, not `delta`).
    fn nameable(rng: &mut ChaCha12Rng, ctx: &DataCtx) -> Action {
        loop {
            let a = constant(rng, ctx);
            if !matches!(a, Action::Tau | Action::Delta) {
                return a;
            }
        }
    }

    fn value_preserving_variants(rng: &mut ChaCha12Rng, e: &DataTerm) -> DataTerm {
        let zero = DataTerm::lit(0);
        let one = DataTerm::lit(1);
        match rng.gen_range(0..4) {
            0 => DataTerm::Add(Box::new(e.clone()), Box::new(zero)),
            1 => DataTerm::Add(Box::new(zero), Box::new(e.clone())),
            2 => DataTerm::Mul(Box::new(e.clone()), Box::new(one)),
            _ => DataTerm::Mul(Box::new(one), Box::new(e.clone())),
        }
    }

    fn truth_preserving_variants(rng: &mut ChaCha12Rng, phi: &Cond) -> Cond {
        match rng.gen_range(0..4) {
            0 => Cond::and(phi.clone(), Cond::True),
            1 => Cond::or(phi.clone(), Cond::False),
            2 => Cond::not(Cond::not(phi.clone())),
            _ => Cond::and(phi.clone(), phi.clone()),
        }
    }

    fn rename_spec_vars(spec: &RecSpec) -> Arc<RecSpec> {
        fn rename(t: &ProcTerm) -> ProcTerm {
            match t.kind() {
                TermKind::RecVar(x) => ProcTerm::rec_var(&format!("R{x}")),
                TermKind::Act(_) | TermKind::Eps | TermKind::RecConst(_, _) => t.clone(),
                TermKind::Alt(a, b) => ProcTerm::alt(rename(a), rename(b)),
                TermKind::Seq(a, b) => ProcTerm::seq(rename(a), rename(b)),
                TermKind::Par(a, b) => ProcTerm::par(rename(a), rename(b)),
                TermKind::LMerge(a, b) => ProcTerm::lmerge(rename(a), rename(b)),
                TermKind::CMerge(a, b) => ProcTerm::cmerge(rename(a), rename(b)),
                TermKind::TermTest(a) => ProcTerm::termtest(rename(a)),
                TermKind::Encap(h, a) => ProcTerm::encap(h.clone(), rename(a)),
                TermKind::Hide(i, a) => ProcTerm::hide(i.clone(), rename(a)),
                TermKind::PChoice(p, a, b) => ProcTerm::pchoice(p.clone(), rename(a), rename(b)),
                TermKind::Guard(c, a) => ProcTerm::guard(c.clone(), rename(a)),
                TermKind::Eval(s, a) => ProcTerm::eval_wrap(s.clone(), rename(a)),
            }
        }
        Arc::new(RecSpec::new(
            &format!("{}R", spec.name),
            spec.equations
                .iter()
                .map(|(x, rhs)| (format!("R{x}"), rename(rhs))),
        ))
    }

    /// All law schemas, in presentation order.
    pub fn all() -> Vec<AxiomSchema> {
        fn s(name: &'static str, sound: bool, instantiate: Gen) -> AxiomSchema {
            AxiomSchema { name, sound, instantiate }
        }
        vec![
            s("A1", true, |r, c| {
                let (x, y) = (filler(r, c), filler(r, c));
                (ProcTerm::alt(x.clone(), y.clone()), ProcTerm::alt(y, x))
            }),
            s("A2", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                (
                    ProcTerm::alt(ProcTerm::alt(x.clone(), y.clone()), z.clone()),
                    ProcTerm::alt(x, ProcTerm::alt(y, z)),
                )
            }),
            s("A3'", true, |r, c| {
                let a = ProcTerm::act(constant(r, c));
                (ProcTerm::alt(a.clone(), a.clone()), a)
            }),
            s("A3''", true, |_, _| {
                (ProcTerm::alt(ProcTerm::eps(), ProcTerm::eps()), ProcTerm::eps())
            }),
            s("A4", false, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                (
                    ProcTerm::seq(ProcTerm::alt(x.clone(), y.clone()), z.clone()),
                    ProcTerm::alt(ProcTerm::seq(x, z.clone()), ProcTerm::seq(y, z)),
                )
            }),
            s("A5", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                (
                    ProcTerm::seq(ProcTerm::seq(x.clone(), y.clone()), z.clone()),
                    ProcTerm::seq(x, ProcTerm::seq(y, z)),
                )
            }),
            s("A6", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::alt(x.clone(), ProcTerm::delta()), x)
            }),
            s("A7", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::seq(ProcTerm::delta(), x), ProcTerm::delta())
            }),
            s("A8", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::seq(x.clone(), ProcTerm::eps()), x)
            }),
            s("A9", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::seq(ProcTerm::eps(), x.clone()), x)
            }),
            s("CM1E'", true, |r, c| {
                let x = stable_filler(r, c, true);
                let y = stable_filler(r, c, true);
                (
                    ProcTerm::par(x.clone(), y.clone()),
                    ProcTerm::alt(
                        ProcTerm::alt(
                            ProcTerm::alt(
                                ProcTerm::lmerge(x.clone(), y.clone()),
                                ProcTerm::lmerge(y.clone(), x.clone()),
                            ),
                            ProcTerm::cmerge(x.clone(), y.clone()),
                        ),
                        ProcTerm::seq(ProcTerm::termtest(x), ProcTerm::termtest(y)),
                    ),
                )
            }),
            s("CM2E", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::lmerge(ProcTerm::eps(), x), ProcTerm::delta())
            }),
            s("CM3", false, |r, c| {
                let alpha = ProcTerm::act(constant(r, c));
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::lmerge(ProcTerm::seq(alpha.clone(), x.clone()), y.clone()),
                    ProcTerm::seq(alpha, ProcTerm::par(x, y)),
                )
            }),
            s("CM4", false, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                (
                    ProcTerm::lmerge(ProcTerm::alt(x.clone(), y.clone()), z.clone()),
                    ProcTerm::alt(ProcTerm::lmerge(x, z.clone()), ProcTerm::lmerge(y, z)),
                )
            }),
            s("CM5E", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::cmerge(ProcTerm::eps(), x), ProcTerm::delta())
            }),
            s("CM6E", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::cmerge(x, ProcTerm::eps()), ProcTerm::delta())
            }),
            s("CM7", true, |r, c| {
                let names = ["a", "b", "s", "rr", "cc"];
                let a = Action::Basic(names.choose(r).unwrap().to_string());
                let b = Action::Basic(names.choose(r).unwrap().to_string());
                let (x, y) = (filler(r, c), filler(r, c));
                let lhs = ProcTerm::cmerge(
                    ProcTerm::seq(ProcTerm::act(a.clone()), x.clone()),
                    ProcTerm::seq(ProcTerm::act(b.clone()), y.clone()),
                );
                let gamma = comm_table().result_action(&a, &b);
                let rhs = match gamma {
                    Some(g) => ProcTerm::seq(ProcTerm::act(g), ProcTerm::par(x, y)),
                    None => ProcTerm::delta(),
                };
                (lhs, rhs)
            }),
            s("CM8", false, |r, c| {
                let (x, y, z) = (comm_filler(r, c), comm_filler(r, c), comm_filler(r, c));
                (
                    ProcTerm::cmerge(ProcTerm::alt(x.clone(), y.clone()), z.clone()),
                    ProcTerm::alt(ProcTerm::cmerge(x, z.clone()), ProcTerm::cmerge(y, z)),
                )
            }),
            s("CM9", false, |r, c| {
                let (x, y, z) = (comm_filler(r, c), comm_filler(r, c), comm_filler(r, c));
                (
                    ProcTerm::cmerge(x.clone(), ProcTerm::alt(y.clone(), z.clone())),
                    ProcTerm::alt(ProcTerm::cmerge(x.clone(), y), ProcTerm::cmerge(x, z)),
                )
            }),
            s("CM10", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::cmerge(ProcTerm::delta(), x), ProcTerm::delta())
            }),
            s("CM11", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::cmerge(x, ProcTerm::delta()), ProcTerm::delta())
            }),
            s("CM12", true, |r, _| {
                let names = ["a", "b", "s", "rr", "cc"];
                let a = Action::Basic(names.choose(r).unwrap().to_string());
                let b = Action::Basic(names.choose(r).unwrap().to_string());
                let lhs = ProcTerm::cmerge(ProcTerm::act(a.clone()), ProcTerm::act(b.clone()));
                let rhs = match comm_table().result_action(&a, &b) {
                    Some(g) => ProcTerm::act(g),
                    None => ProcTerm::delta(),
                };
                (lhs, rhs)
            }),
            s("TE1", true, |_, _| (ProcTerm::termtest(ProcTerm::eps()), ProcTerm::eps())),
            s("TE2", true, |r, c| {
                (ProcTerm::termtest(ProcTerm::act(constant(r, c))), ProcTerm::delta())
            }),
            s("TE3", true, |r, c| {
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::termtest(ProcTerm::alt(x.clone(), y.clone())),
                    ProcTerm::alt(ProcTerm::termtest(x), ProcTerm::termtest(y)),
                )
            }),
            s("TE4", true, |r, c| {
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::termtest(ProcTerm::seq(x.clone(), y.clone())),
                    ProcTerm::seq(ProcTerm::termtest(x), ProcTerm::termtest(y)),
                )
            }),
            s("D0", true, |r, _| {
                (ProcTerm::encap(action_set(r, None), ProcTerm::eps()), ProcTerm::eps())
            }),
            s("D1", true, |r, c| {
                let alpha = constant(r, c);
                let mut h = action_set(r, None);
                while h.matches(&alpha) {
                    h = action_set(r, None);
                }
                (ProcTerm::encap(h, ProcTerm::act(alpha.clone())), ProcTerm::act(alpha))
            }),
            s("D2", true, |r, c| {
                let alpha = nameable(r, c);
                let h = action_set(r, Some(&alpha));
                (ProcTerm::encap(h, ProcTerm::act(alpha)), ProcTerm::delta())
            }),
            s("D3", true, |r, c| {
                let h = action_set(r, None);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::encap(h.clone(), ProcTerm::alt(x.clone(), y.clone())),
                    ProcTerm::alt(ProcTerm::encap(h.clone(), x), ProcTerm::encap(h, y)),
                )
            }),
            s("D4", true, |r, c| {
                let h = action_set(r, None);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::encap(h.clone(), ProcTerm::seq(x.clone(), y.clone())),
                    ProcTerm::seq(ProcTerm::encap(h.clone(), x), ProcTerm::encap(h, y)),
                )
            }),
            s("T0", true, |r, _| {
                (ProcTerm::hide(action_set(r, None), ProcTerm::eps()), ProcTerm::eps())
            }),
            s("T1", true, |r, c| {
                let alpha = constant(r, c);
                let mut i = action_set(r, None);
                while i.matches(&alpha) {
                    i = action_set(r, None);
                }
                (ProcTerm::hide(i, ProcTerm::act(alpha.clone())), ProcTerm::act(alpha))
            }),
            s("T2", true, |r, c| {
                let alpha = nameable(r, c);
                let i = action_set(r, Some(&alpha));
                (ProcTerm::hide(i, ProcTerm::act(alpha)), ProcTerm::tau())
            }),
            s("T3", true, |r, c| {
                let i = action_set(r, None);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::hide(i.clone(), ProcTerm::alt(x.clone(), y.clone())),
                    ProcTerm::alt(ProcTerm::hide(i.clone(), x), ProcTerm::hide(i, y)),
                )
            }),
            s("T4", true, |r, c| {
                let i = action_set(r, None);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::hide(i.clone(), ProcTerm::seq(x.clone(), y.clone())),
                    ProcTerm::seq(ProcTerm::hide(i.clone(), x), ProcTerm::hide(i, y)),
                )
            }),
            s("pA1", true, |r, c| {
                let (x, y) = (filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::pchoice(p.clone(), x.clone(), y.clone()),
                    ProcTerm::pchoice(p.complement(), y, x),
                )
            }),
            s("pA2", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let (p, q) = (prob(r), prob(r));
                let first = p.value().clone() * q.value().clone();
                let rest = ((Rational::one() - p.value().clone()) * q.value().clone())
                    * (Rational::one() - first.clone()).inv();
                (
                    ProcTerm::pchoice(
                        q,
                        ProcTerm::pchoice(p, x.clone(), y.clone()),
                        z.clone(),
                    ),
                    ProcTerm::pchoice(
                        Prob::new(first).unwrap(),
                        x,
                        ProcTerm::pchoice(Prob::new(rest).unwrap(), y, z),
                    ),
                )
            }),
            s("pA3", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::pchoice(prob(r), x.clone(), x.clone()), x)
            }),
            s("pA4", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::seq(ProcTerm::pchoice(p.clone(), x.clone(), y.clone()), z.clone()),
                    ProcTerm::pchoice(p, ProcTerm::seq(x, z.clone()), ProcTerm::seq(y, z)),
                )
            }),
            s("pA5", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::alt(ProcTerm::pchoice(p.clone(), x.clone(), y.clone()), z.clone()),
                    ProcTerm::pchoice(
                        p,
                        ProcTerm::alt(x, z.clone()),
                        ProcTerm::alt(y, z),
                    ),
                )
            }),
            s("pA6", true, |r, c| {
                let (x, y) = (filler(r, c), filler(r, c));
                (ProcTerm::pchoice(Prob::one(), x.clone(), y), x)
            }),
            s("pCM1", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::par(ProcTerm::pchoice(p.clone(), x.clone(), y.clone()), z.clone()),
                    ProcTerm::pchoice(p, ProcTerm::par(x, z.clone()), ProcTerm::par(y, z)),
                )
            }),
            s("pCM2", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::par(x.clone(), ProcTerm::pchoice(p.clone(), y.clone(), z.clone())),
                    ProcTerm::pchoice(p, ProcTerm::par(x.clone(), y), ProcTerm::par(x, z)),
                )
            }),
            s("pCM3", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::lmerge(ProcTerm::pchoice(p.clone(), x.clone(), y.clone()), z.clone()),
                    ProcTerm::pchoice(p, ProcTerm::lmerge(x, z.clone()), ProcTerm::lmerge(y, z)),
                )
            }),
            s("pCM4", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::lmerge(x.clone(), ProcTerm::pchoice(p.clone(), y.clone(), z.clone())),
                    ProcTerm::pchoice(p, ProcTerm::lmerge(x.clone(), y), ProcTerm::lmerge(x, z)),
                )
            }),
            s("pCM5", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::cmerge(ProcTerm::pchoice(p.clone(), x.clone(), y.clone()), z.clone()),
                    ProcTerm::pchoice(p, ProcTerm::cmerge(x, z.clone()), ProcTerm::cmerge(y, z)),
                )
            }),
            s("pCM6", true, |r, c| {
                let (x, y, z) = (filler(r, c), filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::cmerge(x.clone(), ProcTerm::pchoice(p.clone(), y.clone(), z.clone())),
                    ProcTerm::pchoice(p, ProcTerm::cmerge(x.clone(), y), ProcTerm::cmerge(x, z)),
                )
            }),
            s("pTE", true, |r, c| {
                let (x, y) = (filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::termtest(ProcTerm::pchoice(p.clone(), x.clone(), y.clone())),
                    ProcTerm::pchoice(p, ProcTerm::termtest(x), ProcTerm::termtest(y)),
                )
            }),
            s("pD", true, |r, c| {
                let h = action_set(r, None);
                let (x, y) = (filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::encap(h.clone(), ProcTerm::pchoice(p.clone(), x.clone(), y.clone())),
                    ProcTerm::pchoice(p, ProcTerm::encap(h.clone(), x), ProcTerm::encap(h, y)),
                )
            }),
            s("pT", true, |r, c| {
                let i = action_set(r, None);
                let (x, y) = (filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::hide(i.clone(), ProcTerm::pchoice(p.clone(), x.clone(), y.clone())),
                    ProcTerm::pchoice(p, ProcTerm::hide(i.clone(), x), ProcTerm::hide(i, y)),
                )
            }),
            s("pBE", true, |r, c| {
                let alpha = ProcTerm::act(constant(r, c));
                let x = stable_filler(r, c, false);
                let y = stable_filler(r, c, false);
                let z = filler(r, c);
                let p = prob(r);
                let s_sum = ProcTerm::alt(x.clone(), y);
                (
                    ProcTerm::seq(
                        alpha.clone(),
                        ProcTerm::pchoice(
                            p.clone(),
                            ProcTerm::alt(ProcTerm::seq(ProcTerm::tau(), s_sum.clone()), x),
                            z.clone(),
                        ),
                    ),
                    ProcTerm::seq(alpha, ProcTerm::pchoice(p, s_sum, z)),
                )
            }),
            s("IMP1", true, |r, c| {
                let e = random_data_term(r, c, 2);
                let e2 = value_preserving_variants(r, &e);
                let x = small(r, c);
                let ctx_choice = r.gen_range(0..2);
                let build = |d: DataTerm| match ctx_choice {
                    0 => ProcTerm::seq(
                        ProcTerm::act(Action::Param("a".into(), vec![d])),
                        x.clone(),
                    ),
                    _ => match c.vars().next() {
                        Some(v) => ProcTerm::seq(
                            ProcTerm::act(Action::Assign(v.to_string(), d)),
                            x.clone(),
                        ),
                        None => ProcTerm::seq(
                            ProcTerm::act(Action::Param("a".into(), vec![d])),
                            x.clone(),
                        ),
                    },
                };
                (build(e), build(e2))
            }),
            s("IMP2", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let psi = truth_preserving_variants(r, &phi);
                let x = filler(r, c);
                (ProcTerm::guard(phi, x.clone()), ProcTerm::guard(psi, x))
            }),
            s("GC1", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::guard(Cond::True, x.clone()), x)
            }),
            s("GC2", true, |r, c| {
                let x = filler(r, c);
                (ProcTerm::guard(Cond::False, x), ProcTerm::delta())
            }),
            s("GC3", true, |r, c| {
                let phi = random_cond(r, c, 2);
                (ProcTerm::guard(phi, ProcTerm::delta()), ProcTerm::delta())
            }),
            s("GC4", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::guard(phi.clone(), ProcTerm::alt(x.clone(), y.clone())),
                    ProcTerm::alt(ProcTerm::guard(phi.clone(), x), ProcTerm::guard(phi, y)),
                )
            }),
            s("GC5", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::guard(phi.clone(), ProcTerm::seq(x.clone(), y.clone())),
                    ProcTerm::seq(ProcTerm::guard(phi, x), y),
                )
            }),
            s("GC6", true, |r, c| {
                let (phi, psi) = (random_cond(r, c, 2), random_cond(r, c, 2));
                let x = filler(r, c);
                (
                    ProcTerm::guard(phi.clone(), ProcTerm::guard(psi.clone(), x.clone())),
                    ProcTerm::guard(Cond::and(phi, psi), x),
                )
            }),
            s("GC7", false, |r, c| {
                let (phi, psi) = (random_cond(r, c, 2), random_cond(r, c, 2));
                let x = filler(r, c);
                (
                    ProcTerm::guard(Cond::or(phi.clone(), psi.clone()), x.clone()),
                    ProcTerm::alt(ProcTerm::guard(phi, x.clone()), ProcTerm::guard(psi, x)),
                )
            }),
            s("GC8", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::lmerge(ProcTerm::guard(phi.clone(), x.clone()), y.clone()),
                    ProcTerm::guard(phi, ProcTerm::lmerge(x, y)),
                )
            }),
            s("GC9", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::cmerge(ProcTerm::guard(phi.clone(), x.clone()), y.clone()),
                    ProcTerm::guard(phi, ProcTerm::cmerge(x, y)),
                )
            }),
            s("GC10", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::cmerge(x.clone(), ProcTerm::guard(phi.clone(), y.clone())),
                    ProcTerm::guard(phi, ProcTerm::cmerge(x, y)),
                )
            }),
            s("GC11", true, |r, c| {
                let phi = random_cond(r, c, 2);
                let x = filler(r, c);
                (
                    ProcTerm::termtest(ProcTerm::guard(phi.clone(), x.clone())),
                    ProcTerm::guard(phi, ProcTerm::termtest(x)),
                )
            }),
            s("GC12", true, |r, c| {
                let h = action_set(r, None);
                let phi = random_cond(r, c, 2);
                let x = filler(r, c);
                (
                    ProcTerm::encap(h.clone(), ProcTerm::guard(phi.clone(), x.clone())),
                    ProcTerm::guard(phi, ProcTerm::encap(h, x)),
                )
            }),
            s("GC13", true, |r, c| {
                let i = action_set(r, None);
                let phi = random_cond(r, c, 2);
                let x = filler(r, c);
                (
                    ProcTerm::hide(i.clone(), ProcTerm::guard(phi.clone(), x.clone())),
                    ProcTerm::guard(phi, ProcTerm::hide(i, x)),
                )
            }),
            s("V0", true, |r, c| {
                let sigma = random_eval_map(r, c);
                (ProcTerm::eval_wrap(sigma, ProcTerm::eps()), ProcTerm::eps())
            }),
            s("V1", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let x = filler(r, c);
                (
                    ProcTerm::eval_wrap(sigma.clone(), ProcTerm::seq(ProcTerm::tau(), x.clone())),
                    ProcTerm::seq(ProcTerm::tau(), ProcTerm::eval_wrap(sigma, x)),
                )
            }),
            s("V2", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let a = ProcTerm::basic("a");
                let x = filler(r, c);
                (
                    ProcTerm::eval_wrap(sigma.clone(), ProcTerm::seq(a.clone(), x.clone())),
                    ProcTerm::seq(a, ProcTerm::eval_wrap(sigma, x)),
                )
            }),
            s("V3", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let e = random_data_term(r, c, 2);
                let x = filler(r, c);
                let evaluated = DataTerm::lit(eval_data(c, &sigma, &e).expect("closed data term"));
                (
                    ProcTerm::eval_wrap(
                        sigma.clone(),
                        ProcTerm::seq(
                            ProcTerm::act(Action::Param("a".into(), vec![e])),
                            x.clone(),
                        ),
                    ),
                    ProcTerm::seq(
                        ProcTerm::act(Action::Param("a".into(), vec![evaluated])),
                        ProcTerm::eval_wrap(sigma, x),
                    ),
                )
            }),
            s("V4", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let x = filler(r, c);
                match c.vars().next() {
                    Some(v) => {
                        let e = random_data_term(r, c, 2);
                        let d = eval_data(c, &sigma, &e).expect("closed data term");
                        let updated = sigma.update(v, d).expect("declared variable");
                        (
                            ProcTerm::eval_wrap(
                                sigma.clone(),
                                ProcTerm::seq(
                                    ProcTerm::act(Action::Assign(v.to_string(), e)),
                                    x.clone(),
                                ),
                            ),
                            ProcTerm::seq(
                                ProcTerm::act(Action::Assign(v.to_string(), DataTerm::lit(d))),
                                ProcTerm::eval_wrap(updated, x),
                            ),
                        )
                    }
                    None => (ProcTerm::eval_wrap(sigma, ProcTerm::eps()), ProcTerm::eps()),
                }
            }),
            s("V5", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let (x, y) = (filler(r, c), filler(r, c));
                (
                    ProcTerm::eval_wrap(sigma.clone(), ProcTerm::alt(x.clone(), y.clone())),
                    ProcTerm::alt(
                        ProcTerm::eval_wrap(sigma.clone(), x),
                        ProcTerm::eval_wrap(sigma, y),
                    ),
                )
            }),
            s("V6", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let phi = random_cond(r, c, 2);
                let x = filler(r, c);
                let truth = if eval_cond(c, &sigma, &phi).expect("closed condition") {
                    Cond::True
                } else {
                    Cond::False
                };
                (
                    ProcTerm::eval_wrap(sigma.clone(), ProcTerm::guard(phi, x.clone())),
                    ProcTerm::guard(truth, ProcTerm::eval_wrap(sigma, x)),
                )
            }),
            s("CM7Da", true, |r, c| {
                let (e1, f1) = (random_data_term(r, c, 1), random_data_term(r, c, 1));
                let (x, y) = (small(r, c), small(r, c));
                let lhs = ProcTerm::cmerge(
                    ProcTerm::seq(
                        ProcTerm::act(Action::Param("s".into(), vec![e1.clone()])),
                        x.clone(),
                    ),
                    ProcTerm::seq(
                        ProcTerm::act(Action::Param("rr".into(), vec![f1.clone()])),
                        y.clone(),
                    ),
                );
                let rhs = ProcTerm::guard(
                    Cond::Eq(e1.clone(), f1),
                    ProcTerm::seq(
                        ProcTerm::act(Action::Param("cc".into(), vec![e1])),
                        ProcTerm::par(x, y),
                    ),
                );
                (lhs, rhs)
            }),
            s("CM7Db", true, |r, c| {
                let (e1, e2, f1) = (
                    random_data_term(r, c, 1),
                    random_data_term(r, c, 1),
                    random_data_term(r, c, 1),
                );
                let (x, y) = (small(r, c), small(r, c));
                // Either an arity mismatch or a pair the table does not map.
                let lhs = if r.gen_bool(0.5) {
                    ProcTerm::cmerge(
                        ProcTerm::seq(
                            ProcTerm::act(Action::Param("s".into(), vec![e1, e2])),
                            x,
                        ),
                        ProcTerm::seq(ProcTerm::act(Action::Param("rr".into(), vec![f1])), y),
                    )
                } else {
                    ProcTerm::cmerge(
                        ProcTerm::seq(ProcTerm::act(Action::Param("a".into(), vec![e1])), x),
                        ProcTerm::seq(ProcTerm::act(Action::Param("b".into(), vec![f1])), y),
                    )
                };
                (lhs, ProcTerm::delta())
            }),
            s("CM7Dc", true, |r, c| {
                let e = random_data_term(r, c, 1);
                let (x, y) = (small(r, c), small(r, c));
                let mut alpha = constant(r, c);
                while matches!(alpha, Action::Param(_, _) | Action::Assign(_, _)) {
                    alpha = constant(r, c);
                }
                (
                    ProcTerm::cmerge(
                        ProcTerm::seq(ProcTerm::act(Action::Param("s".into(), vec![e])), x),
                        ProcTerm::seq(ProcTerm::act(alpha), y),
                    ),
                    ProcTerm::delta(),
                )
            }),
            s("CM7Dd", true, |r, c| {
                let e = random_data_term(r, c, 1);
                let (x, y) = (small(r, c), small(r, c));
                let mut alpha = constant(r, c);
                while matches!(alpha, Action::Param(_, _) | Action::Assign(_, _)) {
                    alpha = constant(r, c);
                }
                (
                    ProcTerm::cmerge(
                        ProcTerm::seq(ProcTerm::act(alpha), x),
                        ProcTerm::seq(ProcTerm::act(Action::Param("rr".into(), vec![e])), y),
                    ),
                    ProcTerm::delta(),
                )
            }),
            s("CM7De", true, |r, c| {
                let (x, y) = (small(r, c), small(r, c));
                let v = c.vars().next().map(|v| v.to_string()).unwrap_or_else(|| "v".into());
                (
                    ProcTerm::cmerge(
                        ProcTerm::seq(
                            ProcTerm::act(Action::Assign(v, random_data_term(r, c, 1))),
                            x,
                        ),
                        ProcTerm::seq(ProcTerm::act(constant(r, c)), y),
                    ),
                    ProcTerm::delta(),
                )
            }),
            s("CM7Df", true, |r, c| {
                let (x, y) = (small(r, c), small(r, c));
                let v = c.vars().next().map(|v| v.to_string()).unwrap_or_else(|| "v".into());
                let mut alpha = constant(r, c);
                while matches!(alpha, Action::Assign(_, _)) {
                    alpha = constant(r, c);
                }
                (
                    ProcTerm::cmerge(
                        ProcTerm::seq(ProcTerm::act(alpha), x),
                        ProcTerm::seq(
                            ProcTerm::act(Action::Assign(v, random_data_term(r, c, 1))),
                            y,
                        ),
                    ),
                    ProcTerm::delta(),
                )
            }),
            s("pGC", false, |r, c| {
                let phi = random_cond(r, c, 2);
                let (x, y) = (filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::guard(phi.clone(), ProcTerm::pchoice(p.clone(), x.clone(), y.clone())),
                    ProcTerm::pchoice(p, ProcTerm::guard(phi.clone(), x), ProcTerm::guard(phi, y)),
                )
            }),
            s("pV", true, |r, c| {
                let sigma = random_eval_map(r, c);
                let (x, y) = (filler(r, c), filler(r, c));
                let p = prob(r);
                (
                    ProcTerm::eval_wrap(
                        sigma.clone(),
                        ProcTerm::pchoice(p.clone(), x.clone(), y.clone()),
                    ),
                    ProcTerm::pchoice(
                        p,
                        ProcTerm::eval_wrap(sigma.clone(), x),
                        ProcTerm::eval_wrap(sigma, y),
                    ),
                )
            }),
            s("pBED", true, |r, c| {
                let alpha = ProcTerm::act(constant(r, c));
                let phi = random_cond(r, c, 2);
                let x = stable_filler(r, c, false);
                let y = stable_filler(r, c, false);
                let z = filler(r, c);
                let p = prob(r);
                let s_sum = ProcTerm::alt(x.clone(), y);
                (
                    ProcTerm::seq(
                        alpha.clone(),
                        ProcTerm::pchoice(
                            p.clone(),
                            ProcTerm::alt(
                                ProcTerm::guard(
                                    phi.clone(),
                                    ProcTerm::seq(ProcTerm::tau(), s_sum.clone()),
                                ),
                                ProcTerm::guard(phi.clone(), x),
                            ),
                            z.clone(),
                        ),
                    ),
                    ProcTerm::seq(
                        alpha,
                        ProcTerm::pchoice(p, ProcTerm::guard(phi, s_sum), z),
                    ),
                )
            }),
            s("RDP", true, |r, c| {
                let spec = random_linear_spec(r, c, &LinearSpecConfig::default(), "E");
                let var = spec.equations.keys().next().unwrap().clone();
                (
                    ProcTerm::rec_const(&var, Arc::clone(&spec)),
                    unfold(&spec, &var).expect("declared variable"),
                )
            }),
            s("RSP", true, |r, c| {
                let spec = random_linear_spec(r, c, &LinearSpecConfig::default(), "E");
                let renamed = rename_spec_vars(&spec);
                let var = spec.equations.keys().next().unwrap().clone();
                (
                    ProcTerm::rec_const(&var, spec),
                    ProcTerm::rec_const(&format!("R{var}"), renamed),
                )
            }),
        ]
    }

    /// The communication table used by the catalog's instances and the
    /// validity campaign: `s` and `rr` communicate to `cc` (in either
    /// order); everything else is undefined.
    pub fn comm_table() -> crate::process_terms::CommFunction {
        let mut comm = crate::process_terms::CommFunction::default();
        comm.declare("s", "rr", "cc").expect("fresh declaration");
        comm.declare("rr", "s", "cc").expect("fresh declaration");
        comm
    }

    trait ResultAction {
        fn result_action(&self, a: &Action, b: &Action) -> Option<Action>;
    }

    impl ResultAction for crate::process_terms::CommFunction {
        fn result_action(&self, a: &Action, b: &Action) -> Option<Action> {
            match (a, b) {
                (Action::Basic(x), Action::Basic(y)) => {
                    self.result(x, y).map(|c| Action::Basic(c.to_string()))
                }
                _ => None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{rooted_equivalent, Outcome};
    use crate::process_terms::CommFunction;
    use crate::pts_builder::ExploreConfig;
    use crate::testkit::{random_term, rng_from_seed, TermGenConfig};

    fn pure_engine() -> Engine {
        Engine::pure(2)
    }

    fn data_engine() -> Engine {
        let ctx = DataCtx::new(2, ["v".to_string()]).unwrap();
        Engine::new(ctx, catalog::comm_table())
    }

    fn nf(engine: &mut Engine, t: &ProcTerm) -> ProcTerm {
        Rewriter::new(engine).unwrap().normalize(t).unwrap().term
    }

    #[test]
    fn unit_and_zero_laws_collapse_in_one_pass() {
        let mut eng = pure_engine();
        let a = ProcTerm::basic("a");
        let t = ProcTerm::seq(
            ProcTerm::eps(),
            ProcTerm::alt(
                ProcTerm::seq(a.clone(), ProcTerm::eps()),
                ProcTerm::delta(),
            ),
        );
        assert_eq!(nf(&mut eng, &t), a);
    }

    #[test]
    fn traces_name_the_rule_and_the_position() {
        let mut eng = pure_engine();
        let t = ProcTerm::guard(
            Cond::True,
            ProcTerm::seq(ProcTerm::basic("a"), ProcTerm::eps()),
        );
        let out = Rewriter::new(&mut eng).unwrap().normalize(&t).unwrap();
        let rules: Vec<&str> = out.trace.iter().map(|e| e.rule).collect();
        assert_eq!(rules, vec!["A8", "GC1"]);
        assert_eq!(out.trace[0].path, vec![0]);
        assert!(out.trace[1].path.is_empty());
    }

    #[test]
    fn sums_reach_a_sorted_duplicate_free_form() {
        let mut eng = pure_engine();
        let (a, b) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        let t = ProcTerm::alt(
            ProcTerm::alt(b.clone(), a.clone()),
            ProcTerm::alt(a.clone(), ProcTerm::delta()),
        );
        assert_eq!(nf(&mut eng, &t), ProcTerm::alt(a, b));
    }

    #[test]
    fn probabilistic_chains_reach_a_canonical_form() {
        let mut eng = pure_engine();
        let (a, b) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        let left = ProcTerm::pchoice(Prob::frac(1, 3), a.clone(), b.clone());
        let right = ProcTerm::pchoice(Prob::frac(2, 3), b, a);
        let mut rw = Rewriter::new(&mut eng).unwrap();
        let verdict = rw.prove_equal(&left, &right).unwrap();
        assert!(verdict.is_derived(), "the two writings are the same choice");
    }

    #[test]
    fn degenerate_weights_disappear() {
        let mut eng = pure_engine();
        let (a, b) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        let t = ProcTerm::pchoice(Prob::one(), a.clone(), b);
        assert_eq!(nf(&mut eng, &t), a);
    }

    #[test]
    fn equal_branches_merge_across_a_chain() {
        let mut eng = pure_engine();
        let (a, b) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        // a ⊕1/2 (b ⊕1/2 a)  =  a ⊕3/4 b.
        let t = ProcTerm::pchoice(
            Prob::half(),
            a.clone(),
            ProcTerm::pchoice(Prob::half(), b.clone(), a.clone()),
        );
        let expected = ProcTerm::pchoice(Prob::frac(3, 4), a, b);
        assert_eq!(nf(&mut eng, &t), expected);
    }

    #[test]
    fn silent_prefixes_are_absorbed_under_an_action_prefix() {
        let mut eng = pure_engine();
        let (a, b) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        let lhs = ProcTerm::seq(a.clone(), ProcTerm::seq(ProcTerm::tau(), b.clone()));
        let rhs = ProcTerm::seq(a.clone(), b.clone());
        let mut rw = Rewriter::new(&mut eng).unwrap();
        assert!(rw.prove_equal(&lhs, &rhs).unwrap().is_derived());

        // The summand form: a . (tau . (b + c) + b) = a . (b + c).
        let c = ProcTerm::basic("c");
        let s = ProcTerm::alt(b.clone(), c);
        let lhs = ProcTerm::seq(
            a.clone(),
            ProcTerm::alt(ProcTerm::seq(ProcTerm::tau(), s.clone()), b),
        );
        let rhs = ProcTerm::seq(a, s);
        assert!(rw.prove_equal(&lhs, &rhs).unwrap().is_derived());
    }

    #[test]
    fn silent_absorption_refuses_probabilistic_continuations() {
        let mut eng = pure_engine();
        let (a, b, c) = (ProcTerm::basic("a"), ProcTerm::basic("b"), ProcTerm::basic("c"));
        let coin = ProcTerm::pchoice(Prob::half(), b, c);
        let lhs = ProcTerm::seq(a.clone(), ProcTerm::seq(ProcTerm::tau(), coin.clone()));
        let rhs = ProcTerm::seq(a, coin);
        let mut rw = Rewriter::new(&mut eng).unwrap();
        let verdict = rw.prove_equal(&lhs, &rhs).unwrap();
        assert!(!verdict.is_derived(), "these sides are genuinely inequivalent");
    }

    #[test]
    fn the_expansion_law_fires_only_on_point_supported_operands() {
        let mut eng = pure_engine();
        let (a, b) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        let expanded = nf(&mut eng, &ProcTerm::par(a.clone(), b.clone()));
        assert!(
            !format!("{expanded}").contains("||"),
            "a || b expands fully, got {expanded}"
        );
        let coin = ProcTerm::pchoice(Prob::half(), a.clone(), b.clone());
        let seq_coin = ProcTerm::seq(ProcTerm::alt(ProcTerm::eps(), a), coin);
        let stuck = nf(&mut eng, &ProcTerm::par(seq_coin.clone(), b));
        assert!(
            format!("{stuck}").contains("||"),
            "an unresolved operand must block the expansion, got {stuck}"
        );
    }

    #[test]
    fn guarded_distribution_requires_a_point_tail() {
        let mut eng = pure_engine();
        let (a, b, c) = (ProcTerm::basic("a"), ProcTerm::basic("b"), ProcTerm::basic("c"));
        let coin = ProcTerm::pchoice(Prob::half(), b.clone(), c);
        let blocked = ProcTerm::seq(ProcTerm::alt(ProcTerm::eps(), a.clone()), coin);
        let kept = nf(&mut eng, &blocked);
        assert!(
            matches!(kept.kind(), TermKind::Seq(h, _) if matches!(h.kind(), TermKind::Alt(_, _))),
            "the sum must stay un-distributed over a probabilistic tail, got {kept}"
        );
        let fine = ProcTerm::seq(ProcTerm::alt(ProcTerm::eps(), a), b.clone());
        let spread = nf(&mut eng, &fine);
        assert_eq!(spread, ProcTerm::alt(ProcTerm::seq(ProcTerm::basic("a"), b.clone()), b));
    }

    #[test]
    fn evaluation_threads_assignment_updates() {
        let mut eng = data_engine();
        let ctx = eng.ctx().clone();
        let sigma = EvalMap::new(&ctx, [("v".to_string(), 1)]).unwrap();
        let incr = Action::Assign(
            "v".into(),
            DataTerm::Add(Box::new(DataTerm::var("v")), Box::new(DataTerm::lit(1))),
        );
        let report = Action::Param("a".into(), vec![DataTerm::var("v")]);
        let t = ProcTerm::eval_wrap(
            sigma,
            ProcTerm::seq(ProcTerm::act(incr), ProcTerm::act(report)),
        );
        let expected = ProcTerm::seq(
            ProcTerm::act(Action::Assign("v".into(), DataTerm::lit(2))),
            ProcTerm::act(Action::Param("a".into(), vec![DataTerm::lit(2)])),
        );
        assert_eq!(nf(&mut eng, &t), expected);
    }

    #[test]
    fn communication_follows_the_table_and_data_arguments() {
        let mut eng = data_engine();
        let (x, y) = (ProcTerm::basic("a"), ProcTerm::basic("b"));
        let send = ProcTerm::seq(
            ProcTerm::act(Action::Param("s".into(), vec![DataTerm::var("v")])),
            x,
        );
        let recv = ProcTerm::seq(
            ProcTerm::act(Action::Param("rr".into(), vec![DataTerm::lit(1)])),
            y,
        );
        let out = nf(&mut eng, &ProcTerm::cmerge(send, recv));
        let printed = format!("{out}");
        assert!(printed.contains("cc(v)"), "the left arguments survive, got {printed}");
        assert!(printed.contains("v = 1"), "the equality guard survives, got {printed}");

        let assign_left = ProcTerm::cmerge(
            ProcTerm::seq(
                ProcTerm::act(Action::Assign("v".into(), DataTerm::lit(1))),
                ProcTerm::basic("a"),
            ),
            ProcTerm::seq(ProcTerm::basic("b"), ProcTerm::basic("c")),
        );
        assert_eq!(nf(&mut eng, &assign_left), ProcTerm::delta());
    }

    #[test]
    fn decided_conditions_collapse_through_the_data_model() {
        let mut eng = data_engine();
        let valid = Cond::Eq(
            DataTerm::Add(Box::new(DataTerm::var("v")), Box::new(DataTerm::lit(0))),
            DataTerm::var("v"),
        );
        let t = ProcTerm::guard(valid, ProcTerm::basic("a"));
        assert_eq!(nf(&mut eng, &t), ProcTerm::basic("a"));

        let unsat = Cond::and(
            Cond::Eq(DataTerm::var("v"), DataTerm::lit(0)),
            Cond::Eq(DataTerm::var("v"), DataTerm::lit(1)),
        );
        let t = ProcTerm::guard(unsat, ProcTerm::basic("a"));
        assert_eq!(nf(&mut eng, &t), ProcTerm::delta());
    }

    #[test]
    fn proving_handles_recursion_and_budget_by_answering_unknown() {
        let mut eng = pure_engine();
        let spec = std::sync::Arc::new(crate::process_terms::RecSpec::new(
            "E",
            [(
                "X".to_string(),
                ProcTerm::guard(Cond::True, ProcTerm::eps()),
            )],
        ));
        let rec = ProcTerm::rec_const("X", spec);
        let mut rw = Rewriter::new(&mut eng).unwrap();
        let verdict = rw.prove_equal(&rec, &ProcTerm::eps()).unwrap();
        assert!(!verdict.is_derived());

        let t = ProcTerm::guard(Cond::True, ProcTerm::seq(ProcTerm::eps(), ProcTerm::basic("a")));
        let mut tiny = Rewriter::new(&mut eng).unwrap().with_budget(1);
        match tiny.normalize(&t) {
            Err(RewriteError::Budget { .. }) => {}
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn unsound_schema_shapes_stay_underivable() {
        let mut eng = pure_engine();
        let (a, b, c) = (ProcTerm::basic("a"), ProcTerm::basic("b"), ProcTerm::basic("c"));
        let coin = ProcTerm::pchoice(Prob::half(), b.clone(), c.clone());
        let mut rw = Rewriter::new(&mut eng).unwrap();

        let lhs = ProcTerm::seq(ProcTerm::alt(ProcTerm::eps(), a.clone()), coin.clone());
        let rhs = ProcTerm::alt(
            ProcTerm::seq(ProcTerm::eps(), coin.clone()),
            ProcTerm::seq(a.clone(), coin.clone()),
        );
        assert!(!rw.prove_equal(&lhs, &rhs).unwrap().is_derived(), "copied probabilistic tail");

        let lhs = ProcTerm::lmerge(ProcTerm::seq(a.clone(), b.clone()), coin.clone());
        let rhs = ProcTerm::seq(a.clone(), ProcTerm::par(b.clone(), coin.clone()));
        assert!(!rw.prove_equal(&lhs, &rhs).unwrap().is_derived(), "probabilistic merge partner");
    }

    #[test]
    fn normal_forms_are_reached_and_stable() {
        let ctx = DataCtx::new(2, ["v".to_string()]).unwrap();
        let cfg = TermGenConfig {
            max_depth: 3,
            with_par: true,
            with_wrappers: true,
            with_eval: true,
            with_rec: false,
            ..TermGenConfig::default()
        };
        for seed in 0..60u64 {
            let mut rng = rng_from_seed(seed);
            let t = random_term(&mut rng, &ctx, &cfg);
            let mut eng = Engine::new(ctx.clone(), catalog::comm_table());
            let mut rw = Rewriter::new(&mut eng).unwrap();
            let first = match rw.normalize(&t) {
                Ok(n) => n,
                Err(RewriteError::Budget { .. }) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            let again = rw.normalize(&first.term).unwrap();
            assert_eq!(again.term, first.term, "seed {seed}: normal form moved");
            assert!(again.trace.is_empty(), "seed {seed}: normal form not normal");
        }
    }

    #[test]
    fn normalization_preserves_the_operational_meaning() {
        let ctx = DataCtx::new(2, ["v".to_string()]).unwrap();
        let cfg = TermGenConfig {
            max_depth: 3,
            with_par: true,
            with_wrappers: true,
            with_eval: true,
            with_rec: false,
            ..TermGenConfig::default()
        };
        let mut checked = 0usize;
        for seed in 0..40u64 {
            let mut rng = rng_from_seed(seed);
            let t = random_term(&mut rng, &ctx, &cfg);
            let mut eng = Engine::new(ctx.clone(), catalog::comm_table());
            let normalized = match Rewriter::new(&mut eng).unwrap().normalize(&t) {
                Ok(n) => n,
                Err(RewriteError::Budget { .. }) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            let out = rooted_equivalent(&mut eng, &t, &normalized.term, &ExploreConfig::default())
                .unwrap();
            assert!(
                matches!(out, Outcome::Equivalent),
                "seed {seed}: normalization changed the meaning of {t} => {}\ntrace:\n{}",
                normalized.term,
                normalized
                    .trace
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join("\n"),
            );
            checked += 1;
        }
        assert!(checked >= 30, "too few seeds survived the budget: {checked}");
    }

    #[test]
    fn derived_verdicts_are_semantically_sound_on_law_instances() {
        let ctx = DataCtx::new(2, ["v".to_string()]).unwrap();
        let mut derived = 0usize;
        for schema in catalog::all() {
            if !schema.sound {
                continue;
            }
            for seed in 0..4u64 {
                let mut rng = rng_from_seed(0x5EED_0000 + seed);
                let (lhs, rhs) = (schema.instantiate)(&mut rng, &ctx);
                let mut eng = Engine::new(ctx.clone(), catalog::comm_table());
                let verdict = match Rewriter::new(&mut eng).unwrap().prove_equal(&lhs, &rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{}: {e}", schema.name),
                };
                if verdict.is_derived() {
                    derived += 1;
                    let out =
                        rooted_equivalent(&mut eng, &lhs, &rhs, &ExploreConfig::default())
                            .unwrap();
                    assert!(
                        matches!(out, Outcome::Equivalent),
                        "{}: derived but operationally distinct: {lhs}  vs  {rhs}",
                        schema.name
                    );
                }
            }
        }
        assert!(derived >= 100, "the prover should settle most law instances, got {derived}");
    }

    #[test]
    fn catalog_instances_of_conditional_laws_satisfy_their_antecedents() {
        let ctx = DataCtx::new(2, ["v".to_string()]).unwrap();
        for schema in catalog::all() {
            if !["CM1E'", "pBE", "pBED"].contains(&schema.name) {
                continue;
            }
            for seed in 0..10u64 {
                let mut rng = rng_from_seed(seed);
                let (lhs, rhs) = (schema.instantiate)(&mut rng, &ctx);
                let mut eng = Engine::new(ctx.clone(), CommFunction::default());
                let out = rooted_equivalent(&mut eng, &lhs, &rhs, &ExploreConfig::default())
                    .unwrap();
                assert!(
                    matches!(out, Outcome::Equivalent),
                    "{} seed {seed}: instance not valid: {lhs}  vs  {rhs}",
                    schema.name
                );
            }
        }
    }
}
