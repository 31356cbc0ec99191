//! The operational engine: probability distributions, action steps, and
//! termination for closed process terms, all parameterized by an evaluation
//! map.
//!
//! Three relations drive everything downstream (state-space construction,
//! equivalence checking, simulation):
//!
//! | relation          | realized as                                  |
//! |-------------------|----------------------------------------------|
//! | probability       | [`Distribution`]: finite map, target → mass  |
//! | action transition | [`StepSet::steps`]: (action, target) pairs   |
//! | termination       | [`StepSet::terminating`]                     |
//!
//! Zero-probability pairs are never materialized: a target absent from a
//! distribution's support has mass 0, which is exactly the totalized reading
//! of the probability relation. Probabilistic choice is resolved before
//! alternative and parallel composition get to move: the rules for `+`, `||`,
//! and `|L` demand that the sibling's distribution is a point mass before an
//! action step fires. A sequential composition, by contrast, steps through
//! its head regardless of how unresolved its tail still is.
//!
//! # Invariants
//!
//! For every closed term `t` and map `σ` (checked by the property suite):
//!
//! - masses of `distribution(σ, t)` are positive and sum to exactly 1;
//! - every target in the support is *stable*: its own distribution is the
//!   point mass at itself;
//! - a term that can terminate under `σ` has a point-mass distribution;
//! - a probabilistic-choice term has no action steps and never terminates.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::data_model::{eval_cond, eval_data, DataCtx, DataError, DataTerm, EvalMap};
use crate::meadow::Rational;
use crate::process_terms::{unfold, Action, CommFunction, ProcTerm, RecSpecError, TermKind};
use crate::spec_parser::SpecFile;
use std::collections::BTreeMap;

/// How deep recursion constants may unfold within a single query. Linear
/// right-hand sides only ever need one unfolding per query, so hitting this
/// limit means a malformed (non-guarded, hand-built) specification.
const UNFOLD_LIMIT: u32 = 10_000;

/// An exact finitely-supported probability distribution over process terms.
///
/// # Invariants
///
/// Every stored mass is strictly positive; the masses of a distribution
/// produced by [`Engine::distribution`] sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    support: BTreeMap<ProcTerm, Rational>,
}

impl Distribution {
    /// The point mass at `t`.
    pub fn point(t: ProcTerm) -> Self {
        let mut support = BTreeMap::new();
        support.insert(t, Rational::one());
        Distribution { support }
    }

    fn empty() -> Self {
        Distribution {
            support: BTreeMap::new(),
        }
    }

    /// Adds `p` to the mass of `t`, dropping zero contributions.
    fn add_mass(&mut self, t: ProcTerm, p: Rational) {
        if p.is_zero() {
            return;
        }
        let entry = self
            .support
            .entry(t)
            .or_insert_with(Rational::zero);
        *entry = entry.clone() + p;
    }

    /// Iterates over (target, mass) pairs in canonical term order.
    pub fn iter(&self) -> impl Iterator<Item = (&ProcTerm, &Rational)> {
        self.support.iter()
    }

    /// Number of distinct targets.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// True iff the whole mass sits on a single target.
    pub fn is_point(&self) -> bool {
        self.support.len() == 1
    }

    /// The unique target when this is a point mass.
    pub fn point_target(&self) -> Option<&ProcTerm> {
        if self.is_point() {
            self.support.keys().next()
        } else {
            None
        }
    }

    /// The mass assigned to `t` (0 when absent).
    pub fn mass_of(&self, t: &ProcTerm) -> Rational {
        self.support.get(t).cloned().unwrap_or_else(Rational::zero)
    }

    /// Sum of all masses; 1 for every engine-produced distribution.
    pub fn total(&self) -> Rational {
        self.support
            .values()
            .fold(Rational::zero(), |acc, p| acc + p.clone())
    }

    /// The pushforward along `f`: masses of coinciding images merge.
    pub fn map_targets(&self, mut f: impl FnMut(&ProcTerm) -> ProcTerm) -> Distribution {
        let mut out = Distribution::empty();
        for (t, p) in &self.support {
            out.add_mass(f(t), p.clone());
        }
        out
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        write!(f, "{{")?;
        for (t, p) in &self.support {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{p} : {t}")?;
        }
        write!(f, "}}")
    }
}

/// The action transitions and the termination capability of a term under one
/// evaluation map.
///
/// # Invariants
///
/// Step labels are never `delta`; `eps` is not an action at all.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepSet {
    /// Enabled transitions as (action, target) pairs.
    pub steps: BTreeSet<(Action, ProcTerm)>,
    /// Whether the term can terminate successfully.
    pub terminating: bool,
}

impl StepSet {
    fn new() -> Self {
        StepSet::default()
    }

    /// True iff there is neither a step nor a termination option.
    pub fn is_stuck(&self) -> bool {
        self.steps.is_empty() && !self.terminating
    }
}

/// Engine failures. The relations themselves are total on closed, well-formed
/// terms; errors signal malformed input.
#[derive(Debug, Error)]
pub enum EngineError {
    /// A specification variable occurred outside any enclosing recursive
    /// specification.
    #[error("open term: unresolved specification variable `{0}`")]
    OpenTerm(String),
    /// A data subterm referenced an undeclared variable or an out-of-range
    /// literal.
    #[error("data evaluation failed: {0}")]
    Data(#[from] DataError),
    /// Unfolding a recursion constant failed (dangling reference).
    #[error("recursion unfolding failed: {0}")]
    Rec(#[from] RecSpecError),
    /// Recursion constants unfolded implausibly deep: the specification is
    /// not guarded.
    #[error("recursion unfolded more than {UNFOLD_LIMIT} times in one query")]
    UnfoldLimit,
}

/// Computes the three operational relations, memoizing per (map, term).
///
/// All queries are pure functions of the term, the queried map, the data
/// context, and the communication function; the memo only caches.
pub struct Engine {
    ctx: DataCtx,
    comm: CommFunction,
    dists: HashMap<(EvalMap, ProcTerm), Distribution>,
    steps: HashMap<(EvalMap, ProcTerm), StepSet>,
    unfold_depth: u32,
}

impl Engine {
    pub fn new(ctx: DataCtx, comm: CommFunction) -> Self {
        Engine {
            ctx,
            comm,
            dists: HashMap::new(),
            steps: HashMap::new(),
            unfold_depth: 0,
        }
    }

    /// An engine over a parsed specification's context and communication
    /// function.
    pub fn for_spec(spec: &SpecFile) -> Self {
        Engine::new(spec.ctx.clone(), spec.comm.clone())
    }

    /// An engine with no flexible variables and no communication, for purely
    /// algebraic terms.
    pub fn pure(bound: u64) -> Self {
        Engine::new(DataCtx::pure(bound), CommFunction::new())
    }

    pub fn ctx(&self) -> &DataCtx {
        &self.ctx
    }

    pub fn comm(&self) -> &CommFunction {
        &self.comm
    }

    /// The probability distribution of `t` under `sigma`.
    pub fn distribution(
        &mut self,
        sigma: &EvalMap,
        t: &ProcTerm,
    ) -> Result<Distribution, EngineError> {
        let key = (sigma.clone(), t.clone());
        if let Some(d) = self.dists.get(&key) {
            return Ok(d.clone());
        }
        let d = self.compute_distribution(sigma, t)?;
        self.dists.insert(key, d.clone());
        Ok(d)
    }

    /// The action steps and termination capability of `t` under `sigma`.
    pub fn action_steps(&mut self, sigma: &EvalMap, t: &ProcTerm) -> Result<StepSet, EngineError> {
        let key = (sigma.clone(), t.clone());
        if let Some(s) = self.steps.get(&key) {
            return Ok(s.clone());
        }
        let s = self.compute_steps(sigma, t)?;
        self.steps.insert(key, s.clone());
        Ok(s)
    }

    /// Whether `t` can terminate successfully under `sigma`.
    pub fn terminates(&mut self, sigma: &EvalMap, t: &ProcTerm) -> Result<bool, EngineError> {
        Ok(self.action_steps(sigma, t)?.terminating)
    }

    /// The single term `t` behaves as with probability 1 under `sigma`, when
    /// its distribution is a point mass. `Some(t)` itself for stable terms;
    /// `None` for genuinely probabilistic ones.
    pub fn resolved(
        &mut self,
        sigma: &EvalMap,
        t: &ProcTerm,
    ) -> Result<Option<ProcTerm>, EngineError> {
        Ok(self.distribution(sigma, t)?.point_target().cloned())
    }

    /// True iff the distribution of `t` under `sigma` is a point mass — the
    /// side condition under which `+`, `||`, and `|L` let the sibling move.
    fn is_resolved(&mut self, sigma: &EvalMap, t: &ProcTerm) -> Result<bool, EngineError> {
        Ok(self.distribution(sigma, t)?.is_point())
    }

    fn compute_distribution(
        &mut self,
        sigma: &EvalMap,
        t: &ProcTerm,
    ) -> Result<Distribution, EngineError> {
        let d = match t.kind() {
            // Constants — actions of every flavour, deadlock, and the empty
            // process — stand for themselves with probability 1.
            TermKind::Act(_) | TermKind::Eps => Distribution::point(t.clone()),
            TermKind::Alt(x, y) => self.product(sigma, x, y, ProcTerm::alt)?,
            TermKind::Seq(x, y) => {
                // The head resolves first. A resolved head that can terminate
                // hands over to the tail's distribution (under the combined
                // target); one that cannot keeps the tail unresolved.
                let dx = self.distribution(sigma, x)?;
                let mut out = Distribution::empty();
                for (xt, px) in dx.iter() {
                    if self.terminates(sigma, xt)? {
                        let dy = self.distribution(sigma, y)?;
                        for (yt, py) in dy.iter() {
                            out.add_mass(
                                ProcTerm::seq(xt.clone(), yt.clone()),
                                px.clone() * py.clone(),
                            );
                        }
                    } else {
                        out.add_mass(ProcTerm::seq(xt.clone(), y.clone()), px.clone());
                    }
                }
                out
            }
            TermKind::Par(x, y) => self.product(sigma, x, y, ProcTerm::par)?,
            TermKind::LMerge(x, y) => self.product(sigma, x, y, ProcTerm::lmerge)?,
            TermKind::CMerge(x, y) => self.product(sigma, x, y, ProcTerm::cmerge)?,
            TermKind::TermTest(x) => self
                .distribution(sigma, x)?
                .map_targets(|u| ProcTerm::termtest(u.clone())),
            TermKind::Encap(set, x) => self
                .distribution(sigma, x)?
                .map_targets(|u| ProcTerm::encap(set.clone(), u.clone())),
            TermKind::Hide(set, x) => self
                .distribution(sigma, x)?
                .map_targets(|u| ProcTerm::hide(set.clone(), u.clone())),
            TermKind::PChoice(p, x, y) => {
                let dx = self.distribution(sigma, x)?;
                let dy = self.distribution(sigma, y)?;
                let mut out = Distribution::empty();
                for (xt, px) in dx.iter() {
                    out.add_mass(xt.clone(), p.value().clone() * px.clone());
                }
                let q = p.complement();
                for (yt, py) in dy.iter() {
                    out.add_mass(yt.clone(), q.value().clone() * py.clone());
                }
                out
            }
            TermKind::Guard(phi, x) => {
                if eval_cond(&self.ctx, sigma, phi)? {
                    // The guard stays on probabilistic targets: it is
                    // re-checked only when an action finally fires.
                    self.distribution(sigma, x)?
                        .map_targets(|u| ProcTerm::guard(phi.clone(), u.clone()))
                } else {
                    Distribution::point(t.clone())
                }
            }
            TermKind::Eval(rho, x) => {
                // The wrapper fixes its own map: the ambient one is ignored.
                self.distribution(&rho.clone(), x)?
                    .map_targets(|u| ProcTerm::eval_wrap(rho.clone(), u.clone()))
            }
            TermKind::RecVar(name) => return Err(EngineError::OpenTerm(name.clone())),
            TermKind::RecConst(var, spec) => {
                let body = unfold(spec, var)?;
                self.enter_unfold()?;
                let d = self.distribution(sigma, &body);
                self.unfold_depth -= 1;
                d?
            }
        };
        Ok(d)
    }

    /// Componentwise product: both operands resolve independently and the
    /// operator is kept on the combined targets.
    fn product(
        &mut self,
        sigma: &EvalMap,
        x: &ProcTerm,
        y: &ProcTerm,
        combine: fn(ProcTerm, ProcTerm) -> ProcTerm,
    ) -> Result<Distribution, EngineError> {
        let dx = self.distribution(sigma, x)?;
        let dy = self.distribution(sigma, y)?;
        let mut out = Distribution::empty();
        for (xt, px) in dx.iter() {
            for (yt, py) in dy.iter() {
                out.add_mass(combine(xt.clone(), yt.clone()), px.clone() * py.clone());
            }
        }
        Ok(out)
    }

    fn enter_unfold(&mut self) -> Result<(), EngineError> {
        self.unfold_depth += 1;
        if self.unfold_depth > UNFOLD_LIMIT {
            return Err(EngineError::UnfoldLimit);
        }
        Ok(())
    }

    fn compute_steps(&mut self, sigma: &EvalMap, t: &ProcTerm) -> Result<StepSet, EngineError> {
        let mut out = StepSet::new();
        match t.kind() {
            TermKind::Act(Action::Delta) => {}
            TermKind::Act(a) => {
                out.steps.insert((a.clone(), ProcTerm::eps()));
            }
            TermKind::Eps => {
                out.terminating = true;
            }
            TermKind::Alt(x, y) => {
                // A side moves (or terminates) only once the sibling's
                // probabilistic choices are resolved; the losing sibling is
                // discarded from the target.
                let sx = self.action_steps(sigma, x)?;
                let sy = self.action_steps(sigma, y)?;
                let rx = self.is_resolved(sigma, x)?;
                let ry = self.is_resolved(sigma, y)?;
                if ry {
                    out.steps.extend(sx.steps.iter().cloned());
                    out.terminating |= sx.terminating;
                }
                if rx {
                    out.steps.extend(sy.steps.iter().cloned());
                    out.terminating |= sy.terminating;
                }
            }
            TermKind::Seq(x, y) => {
                let sx = self.action_steps(sigma, x)?;
                for (a, xt) in &sx.steps {
                    out.steps
                        .insert((a.clone(), ProcTerm::seq(xt.clone(), y.clone())));
                }
                if sx.terminating {
                    let sy = self.action_steps(sigma, y)?;
                    out.steps.extend(sy.steps.iter().cloned());
                    out.terminating = sy.terminating;
                }
            }
            TermKind::Par(x, y) => {
                let sx = self.action_steps(sigma, x)?;
                let sy = self.action_steps(sigma, y)?;
                if self.is_resolved(sigma, y)? {
                    for (a, xt) in &sx.steps {
                        out.steps
                            .insert((a.clone(), ProcTerm::par(xt.clone(), y.clone())));
                    }
                }
                if self.is_resolved(sigma, x)? {
                    for (a, yt) in &sy.steps {
                        out.steps
                            .insert((a.clone(), ProcTerm::par(x.clone(), yt.clone())));
                    }
                }
                for (ax, xt) in &sx.steps {
                    for (ay, yt) in &sy.steps {
                        if let Some(c) = self.comm_label(sigma, ax, ay)? {
                            out.steps.insert((c, ProcTerm::par(xt.clone(), yt.clone())));
                        }
                    }
                }
                out.terminating = sx.terminating && sy.terminating;
            }
            TermKind::LMerge(x, y) => {
                // The left operand must take the first step; the right one
                // must already be resolved, and is carried along untouched.
                if self.is_resolved(sigma, y)? {
                    let sx = self.action_steps(sigma, x)?;
                    for (a, xt) in &sx.steps {
                        out.steps
                            .insert((a.clone(), ProcTerm::par(xt.clone(), y.clone())));
                    }
                }
            }
            TermKind::CMerge(x, y) => {
                let sx = self.action_steps(sigma, x)?;
                let sy = self.action_steps(sigma, y)?;
                for (ax, xt) in &sx.steps {
                    for (ay, yt) in &sy.steps {
                        if let Some(c) = self.comm_label(sigma, ax, ay)? {
                            out.steps.insert((c, ProcTerm::par(xt.clone(), yt.clone())));
                        }
                    }
                }
            }
            TermKind::TermTest(x) => {
                out.terminating = self.terminates(sigma, x)?;
            }
            TermKind::Encap(set, x) => {
                let sx = self.action_steps(sigma, x)?;
                for (a, xt) in &sx.steps {
                    if !set.matches(a) {
                        out.steps
                            .insert((a.clone(), ProcTerm::encap(set.clone(), xt.clone())));
                    }
                }
                out.terminating = sx.terminating;
            }
            TermKind::Hide(set, x) => {
                let sx = self.action_steps(sigma, x)?;
                for (a, xt) in &sx.steps {
                    let label = if set.matches(a) { Action::Tau } else { a.clone() };
                    out.steps
                        .insert((label, ProcTerm::hide(set.clone(), xt.clone())));
                }
                out.terminating = sx.terminating;
            }
            TermKind::PChoice(_, _, _) => {}
            TermKind::Guard(phi, x) => {
                if eval_cond(&self.ctx, sigma, phi)? {
                    let sx = self.action_steps(sigma, x)?;
                    // A firing action discharges the guard: targets are bare.
                    out.steps.extend(sx.steps.iter().cloned());
                    out.terminating = sx.terminating;
                }
            }
            TermKind::Eval(rho, x) => {
                let rho = rho.clone();
                let sx = self.action_steps(&rho, x)?;
                for (a, xt) in &sx.steps {
                    let (label, next_map) = self.evaluate_label(&rho, a)?;
                    out.steps
                        .insert((label, ProcTerm::eval_wrap(next_map, xt.clone())));
                }
                out.terminating = sx.terminating;
            }
            TermKind::RecVar(name) => return Err(EngineError::OpenTerm(name.clone())),
            TermKind::RecConst(var, spec) => {
                let body = unfold(spec, var)?;
                self.enter_unfold()?;
                let s = self.action_steps(sigma, &body);
                self.unfold_depth -= 1;
                out = s?;
            }
        }
        Ok(out)
    }

    /// The observable form of an action fired under an evaluation wrapper:
    /// data arguments become literals, assignments update the carried map.
    fn evaluate_label(
        &self,
        rho: &EvalMap,
        a: &Action,
    ) -> Result<(Action, EvalMap), EngineError> {
        Ok(match a {
            Action::Basic(_) | Action::Tau => (a.clone(), rho.clone()),
            Action::Param(name, args) => {
                let vals = args
                    .iter()
                    .map(|e| eval_data(&self.ctx, rho, e).map(DataTerm::lit))
                    .collect::<Result<Vec<_>, _>>()?;
                (Action::Param(name.clone(), vals), rho.clone())
            }
            Action::Assign(v, e) => {
                let d = eval_data(&self.ctx, rho, e)?;
                (
                    Action::Assign(v.clone(), DataTerm::lit(d)),
                    rho.update(v, d)?,
                )
            }
            Action::Delta => unreachable!("deadlock never appears as a step label"),
        })
    }

    /// The label of a successful synchronization, if any: the communication
    /// function must be defined on the names, and parameterized partners must
    /// carry equal arities and argument lists of equal value under `sigma`.
    /// The synchronized label keeps the left partner's argument terms.
    fn comm_label(
        &self,
        sigma: &EvalMap,
        a: &Action,
        b: &Action,
    ) -> Result<Option<Action>, EngineError> {
        match (a, b) {
            (Action::Basic(x), Action::Basic(y)) => {
                Ok(self.comm.result(x, y).map(Action::basic))
            }
            (Action::Param(x, es), Action::Param(y, fs)) => {
                let Some(c) = self.comm.result(x, y) else {
                    return Ok(None);
                };
                if es.len() != fs.len() {
                    return Ok(None);
                }
                for (e, f) in es.iter().zip(fs.iter()) {
                    if eval_data(&self.ctx, sigma, e)? != eval_data(&self.ctx, sigma, f)? {
                        return Ok(None);
                    }
                }
                Ok(Some(Action::Param(c.to_string(), es.clone())))
            }
            // Silent steps, assignments, and mixed plain/parameterized pairs
            // never synchronize.
            _ => Ok(None),
        }
    }

    /// A text dump of both relations for one term: distribution lines
    /// (`mass : target`), step lines (`--action--> target`), and the
    /// termination flag, each group sorted by the printed target.
    pub fn dump(&mut self, sigma: &EvalMap, t: &ProcTerm) -> Result<String, EngineError> {
        let d = self.distribution(sigma, t)?;
        let s = self.action_steps(sigma, t)?;
        let mut lines = Vec::new();
        let mut dist_lines: Vec<(String, String)> = d
            .iter()
            .map(|(u, p)| (u.to_string(), p.to_string()))
            .collect();
        dist_lines.sort();
        for (target, mass) in dist_lines {
            lines.push(format!("{mass} : {target}"));
        }
        let mut step_lines: Vec<(String, String)> = s
            .steps
            .iter()
            .map(|(a, u)| (u.to_string(), a.to_string()))
            .collect();
        step_lines.sort();
        for (target, label) in step_lines {
            lines.push(format!("--{label}--> {target}"));
        }
        lines.push(format!(
            "terminates: {}",
            if s.terminating { "yes" } else { "no" }
        ));
        Ok(lines.join("\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::Cond;
    use crate::meadow::Prob;
    use crate::process_terms::{build_prc, RecSpec};
    use std::sync::Arc;

    fn sigma0(engine: &Engine) -> EvalMap {
        engine.ctx().canonical_map()
    }

    fn a() -> ProcTerm {
        ProcTerm::basic("a")
    }

    fn b() -> ProcTerm {
        ProcTerm::basic("b")
    }

    fn c() -> ProcTerm {
        ProcTerm::basic("c")
    }

    #[test]
    fn constants_are_their_own_point_mass() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        for t in [
            a(),
            ProcTerm::tau(),
            ProcTerm::delta(),
            ProcTerm::eps(),
            ProcTerm::act(Action::assign("v", DataTerm::lit(1))),
        ] {
            let d = eng.distribution(&s, &t).unwrap();
            assert_eq!(d.point_target(), Some(&t), "constant {t}");
            assert!(d.total().is_one());
        }
    }

    #[test]
    fn plain_actions_step_to_the_empty_process() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let steps = eng.action_steps(&s, &a()).unwrap();
        assert_eq!(steps.steps.len(), 1);
        assert!(steps
            .steps
            .contains(&(Action::basic("a"), ProcTerm::eps())));
        assert!(!steps.terminating);

        let none = eng.action_steps(&s, &ProcTerm::delta()).unwrap();
        assert!(none.is_stuck());

        let eps = eng.action_steps(&s, &ProcTerm::eps()).unwrap();
        assert!(eps.steps.is_empty());
        assert!(eps.terminating);
    }

    #[test]
    fn probabilistic_choice_mixes_and_merges() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);

        let third = eng
            .distribution(&s, &ProcTerm::pchoice(Prob::frac(1, 3), a(), b()))
            .unwrap();
        assert_eq!(third.mass_of(&a()), Rational::new(1, 3));
        assert_eq!(third.mass_of(&b()), Rational::new(2, 3));

        let idem = eng
            .distribution(&s, &ProcTerm::pchoice(Prob::half(), a(), a()))
            .unwrap();
        assert_eq!(idem.point_target(), Some(&a()));

        let degenerate = eng
            .distribution(&s, &ProcTerm::pchoice(Prob::one(), a(), b()))
            .unwrap();
        assert_eq!(degenerate.point_target(), Some(&a()));
    }

    #[test]
    fn the_die_is_uniform() {
        let mut eng = Engine::pure(8);
        let s = sigma0(&eng);
        let throws: Vec<(Rational, ProcTerm)> = (1..=6)
            .map(|i| (Rational::new(1, 6), ProcTerm::basic(&format!("throw{i}"))))
            .collect();
        let die = build_prc(throws).unwrap();
        let d = eng.distribution(&s, &die).unwrap();
        assert_eq!(d.len(), 6);
        for i in 1..=6 {
            assert_eq!(
                d.mass_of(&ProcTerm::basic(&format!("throw{i}"))),
                Rational::new(1, 6)
            );
        }
    }

    #[test]
    fn alternative_composition_resolves_componentwise() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let t = ProcTerm::alt(ProcTerm::pchoice(Prob::half(), a(), b()), c());
        let d = eng.distribution(&s, &t).unwrap();
        assert_eq!(d.mass_of(&ProcTerm::alt(a(), c())), Rational::new(1, 2));
        assert_eq!(d.mass_of(&ProcTerm::alt(b(), c())), Rational::new(1, 2));
    }

    #[test]
    fn sequencing_splits_on_head_termination() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let head = ProcTerm::pchoice(Prob::half(), ProcTerm::eps(), a());
        let tail = ProcTerm::pchoice(Prob::frac(1, 3), b(), c());
        let d = eng
            .distribution(&s, &ProcTerm::seq(head, tail.clone()))
            .unwrap();
        // The terminating half hands over to the tail; the action half keeps
        // it pending.
        assert_eq!(
            d.mass_of(&ProcTerm::seq(ProcTerm::eps(), b())),
            Rational::new(1, 6)
        );
        assert_eq!(
            d.mass_of(&ProcTerm::seq(ProcTerm::eps(), c())),
            Rational::new(1, 3)
        );
        assert_eq!(d.mass_of(&ProcTerm::seq(a(), tail)), Rational::new(1, 2));
        assert!(d.total().is_one());
    }

    #[test]
    fn choice_waits_for_the_sibling_to_resolve() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);

        let blocked = ProcTerm::alt(a(), ProcTerm::pchoice(Prob::half(), b(), c()));
        assert!(eng.action_steps(&s, &blocked).unwrap().is_stuck());

        // A degenerate weight resolves the sibling, so the other side may
        // move; the choice term itself resolves to `a + b`, where both sides
        // are open.
        let open = ProcTerm::alt(a(), ProcTerm::pchoice(Prob::one(), b(), c()));
        let steps = eng.action_steps(&s, &open).unwrap();
        let labels: Vec<_> = steps.steps.iter().map(|(l, _)| l.clone()).collect();
        assert_eq!(labels, vec![Action::basic("a")]);

        let resolved = eng.resolved(&s, &open).unwrap().unwrap();
        assert_eq!(resolved, ProcTerm::alt(a(), b()));
        let steps = eng.action_steps(&s, &resolved).unwrap();
        let labels: Vec<_> = steps.steps.iter().map(|(l, _)| l.clone()).collect();
        assert_eq!(labels, vec![Action::basic("a"), Action::basic("b")]);
    }

    #[test]
    fn sequencing_steps_do_not_wait_for_the_tail() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let t = ProcTerm::seq(
            ProcTerm::alt(ProcTerm::eps(), a()),
            ProcTerm::pchoice(Prob::half(), b(), c()),
        );
        let d = eng.distribution(&s, &t).unwrap();
        assert_eq!(d.len(), 2, "the tail stays probabilistic");
        let steps = eng.action_steps(&s, &t).unwrap();
        assert!(steps
            .steps
            .iter()
            .any(|(l, _)| *l == Action::basic("a")));
        assert!(!steps.terminating, "the unresolved tail cannot terminate");
    }

    #[test]
    fn termination_rules() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let cases: Vec<(ProcTerm, bool)> = vec![
            (ProcTerm::eps(), true),
            (a(), false),
            (ProcTerm::alt(ProcTerm::eps(), a()), true),
            (ProcTerm::seq(ProcTerm::eps(), ProcTerm::eps()), true),
            (ProcTerm::seq(ProcTerm::eps(), a()), false),
            (ProcTerm::par(ProcTerm::eps(), ProcTerm::eps()), true),
            (ProcTerm::lmerge(ProcTerm::eps(), ProcTerm::eps()), false),
            (ProcTerm::cmerge(ProcTerm::eps(), ProcTerm::eps()), false),
            (ProcTerm::termtest(ProcTerm::alt(ProcTerm::eps(), a())), true),
            (ProcTerm::termtest(a()), false),
            (ProcTerm::guard(Cond::True, ProcTerm::eps()), true),
            (ProcTerm::guard(Cond::False, ProcTerm::eps()), false),
            (
                ProcTerm::pchoice(Prob::half(), ProcTerm::eps(), ProcTerm::eps()),
                false,
            ),
            (
                ProcTerm::alt(ProcTerm::eps(), ProcTerm::pchoice(Prob::half(), a(), b())),
                false,
            ),
            (
                ProcTerm::alt(ProcTerm::eps(), ProcTerm::pchoice(Prob::one(), a(), b())),
                true,
            ),
        ];
        for (t, expected) in cases {
            assert_eq!(eng.terminates(&s, &t).unwrap(), expected, "term {t}");
        }
    }

    #[test]
    fn interleaving_keeps_the_sibling_and_communication_pairs_targets() {
        let mut comm = CommFunction::new();
        comm.declare("a", "b", "c").unwrap();
        let mut eng = Engine::new(DataCtx::pure(4), comm);
        let s = sigma0(&eng);

        let left = ProcTerm::seq(a(), ProcTerm::eps());
        let right = ProcTerm::seq(b(), ProcTerm::eps());
        let t = ProcTerm::par(left.clone(), right.clone());
        let steps = eng.action_steps(&s, &t).unwrap();

        let eps_eps = ProcTerm::seq(ProcTerm::eps(), ProcTerm::eps());
        assert!(steps.steps.contains(&(
            Action::basic("a"),
            ProcTerm::par(eps_eps.clone(), right.clone())
        )));
        assert!(steps.steps.contains(&(
            Action::basic("b"),
            ProcTerm::par(left.clone(), eps_eps.clone())
        )));
        assert!(steps.steps.contains(&(
            Action::basic("c"),
            ProcTerm::par(eps_eps.clone(), eps_eps.clone())
        )));
        assert_eq!(steps.steps.len(), 3);

        // The communication merge admits only the synchronization.
        let only_comm = eng
            .action_steps(&s, &ProcTerm::cmerge(left.clone(), right.clone()))
            .unwrap();
        assert_eq!(only_comm.steps.len(), 1);
        assert!(only_comm
            .steps
            .iter()
            .all(|(l, _)| *l == Action::basic("c")));

        // The left merge forces the left operand to move first.
        let lm = eng.action_steps(&s, &ProcTerm::lmerge(left, right.clone())).unwrap();
        assert_eq!(lm.steps.len(), 1);
        let (label, target) = lm.steps.iter().next().unwrap();
        assert_eq!(*label, Action::basic("a"));
        assert_eq!(*target, ProcTerm::par(eps_eps, right));
    }

    #[test]
    fn parameterized_communication_compares_values_under_sigma() {
        let mut comm = CommFunction::new();
        comm.declare("s", "r", "cs").unwrap();
        let ctx = DataCtx::new(8, ["v".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), comm);

        let send = ProcTerm::seq(
            ProcTerm::act(Action::Param(
                "s".into(),
                vec![DataTerm::Add(
                    Box::new(DataTerm::var("v")),
                    Box::new(DataTerm::lit(1)),
                )],
            )),
            ProcTerm::eps(),
        );
        let recv = ProcTerm::seq(
            ProcTerm::act(Action::Param("r".into(), vec![DataTerm::lit(2)])),
            ProcTerm::eps(),
        );
        let t = ProcTerm::cmerge(send, recv);

        let match_map = EvalMap::new(&ctx, [("v".to_string(), 1)]).unwrap();
        let steps = eng.action_steps(&match_map, &t).unwrap();
        assert_eq!(steps.steps.len(), 1);
        let (label, _) = steps.steps.iter().next().unwrap();
        // The label keeps the left partner's (unevaluated) argument.
        assert_eq!(label.to_string(), "cs(v + 1)");

        let miss_map = EvalMap::new(&ctx, [("v".to_string(), 0)]).unwrap();
        assert!(eng.action_steps(&miss_map, &t).unwrap().is_stuck());
    }

    #[test]
    fn guards_keep_conditions_on_probability_targets_and_drop_them_on_steps() {
        let ctx = DataCtx::new(4, ["v".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), CommFunction::new());
        let phi = Cond::Eq(DataTerm::var("v"), DataTerm::lit(0));
        let t = ProcTerm::guard(phi.clone(), ProcTerm::pchoice(Prob::half(), a(), b()));

        let yes = EvalMap::new(&ctx, [("v".to_string(), 0)]).unwrap();
        let d = eng.distribution(&yes, &t).unwrap();
        assert_eq!(
            d.mass_of(&ProcTerm::guard(phi.clone(), a())),
            Rational::new(1, 2)
        );
        let guarded_a = ProcTerm::guard(phi.clone(), a());
        let steps = eng.action_steps(&yes, &guarded_a).unwrap();
        assert!(steps
            .steps
            .contains(&(Action::basic("a"), ProcTerm::eps())));

        let no = EvalMap::new(&ctx, [("v".to_string(), 1)]).unwrap();
        let d = eng.distribution(&no, &t).unwrap();
        assert_eq!(d.point_target(), Some(&t), "a refuted guard is inert");
        assert!(eng.action_steps(&no, &t).unwrap().is_stuck());
    }

    #[test]
    fn encapsulation_blocks_and_hiding_silences() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let t = ProcTerm::alt(ProcTerm::seq(a(), ProcTerm::eps()), ProcTerm::seq(b(), ProcTerm::eps()));
        let set = crate::process_terms::ActionSet::from_names(["b".to_string()]);

        let enc = eng
            .action_steps(&s, &ProcTerm::encap(set.clone(), t.clone()))
            .unwrap();
        assert_eq!(enc.steps.len(), 1);
        assert!(enc.steps.iter().all(|(l, _)| *l == Action::basic("a")));

        let hid = eng
            .action_steps(&s, &ProcTerm::hide(set, t))
            .unwrap();
        let labels: BTreeSet<_> = hid.steps.iter().map(|(l, _)| l.clone()).collect();
        assert!(labels.contains(&Action::basic("a")));
        assert!(labels.contains(&Action::Tau));
    }

    #[test]
    fn evaluation_wrappers_fix_their_map_and_update_on_assignment() {
        let ctx = DataCtx::new(8, ["v".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), CommFunction::new());
        let rho = EvalMap::new(&ctx, [("v".to_string(), 0)]).unwrap();

        let body = ProcTerm::seq(
            ProcTerm::act(Action::assign(
                "v",
                DataTerm::Add(Box::new(DataTerm::var("v")), Box::new(DataTerm::lit(1))),
            )),
            ProcTerm::act(Action::Param("out".into(), vec![DataTerm::var("v")])),
        );
        let t = ProcTerm::eval_wrap(rho.clone(), body);

        // The ambient map is irrelevant: query under a different one.
        let ambient = EvalMap::new(&ctx, [("v".to_string(), 7)]).unwrap();
        let steps = eng.action_steps(&ambient, &t).unwrap();
        assert_eq!(steps.steps.len(), 1);
        let (label, target) = steps.steps.iter().next().unwrap();
        assert_eq!(label.to_string(), "v := 1");

        let next = eng.action_steps(&ambient, target).unwrap();
        assert_eq!(next.steps.len(), 1);
        let (label2, _) = next.steps.iter().next().unwrap();
        assert_eq!(label2.to_string(), "out(1)", "the updated map evaluates v");
    }

    #[test]
    fn recursion_constants_behave_as_their_unfolding() {
        let ctx = DataCtx::new(8, ["v".to_string()]).unwrap();
        let mut eng = Engine::new(ctx.clone(), CommFunction::new());
        let s = ctx.canonical_map();

        let bump = ProcTerm::seq(
            ProcTerm::act(Action::assign(
                "v",
                DataTerm::Add(Box::new(DataTerm::var("v")), Box::new(DataTerm::lit(1))),
            )),
            ProcTerm::rec_var("Y"),
        );
        let rhs = ProcTerm::pchoice(
            Prob::half(),
            ProcTerm::guard(Cond::True, bump),
            ProcTerm::guard(Cond::True, ProcTerm::eps()),
        );
        let spec = Arc::new(RecSpec::new("Geo", [("Y".to_string(), rhs)]));
        let t = ProcTerm::rec_const("Y", spec);

        let d = eng.distribution(&s, &t).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.total().is_one());
        assert!(d.iter().all(|(_, p)| *p == Rational::new(1, 2)));
    }

    #[test]
    fn open_terms_are_rejected() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let open = ProcTerm::alt(a(), ProcTerm::rec_var("X"));
        assert!(matches!(
            eng.distribution(&s, &open),
            Err(EngineError::OpenTerm(_))
        ));
        assert!(matches!(
            eng.action_steps(&s, &open),
            Err(EngineError::OpenTerm(_))
        ));
    }

    #[test]
    fn dump_is_sorted_and_complete() {
        let mut eng = Engine::pure(4);
        let s = sigma0(&eng);
        let t = ProcTerm::pchoice(Prob::half(), b(), a());
        let text = eng.dump(&s, &t).unwrap();
        assert_eq!(text, "1/2 : a\n1/2 : b\nterminates: no");

        let u = ProcTerm::alt(a(), ProcTerm::eps());
        let text = eng.dump(&s, &u).unwrap();
        assert_eq!(text, "1 : a + eps\n--a--> eps\nterminates: yes");
    }

    mod invariants {
        //! Randomized invariants of the semantics, over the full operator mix.

        use super::*;
        use crate::testkit::{random_term, rng_from_seed, TermGenConfig};
        use proptest::prelude::*;

        fn test_ctx() -> DataCtx {
            DataCtx::new(3, ["v".to_string(), "w".to_string()]).unwrap()
        }

        fn checked_engine_run(
            seed: u64,
            check: impl Fn(&mut Engine, &EvalMap, &ProcTerm),
        ) {
            let ctx = test_ctx();
            let cfg = TermGenConfig::full();
            let t = random_term(&mut rng_from_seed(seed), &ctx, &cfg);
            let mut engine = Engine::new(ctx.clone(), CommFunction::default());
            for sigma in ctx.enumerate_maps().unwrap() {
                check(&mut engine, &sigma, &t);
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

            /// Probability mass out of any closed term sums to exactly 1
            /// under every evaluation map.
            #[test]
            fn distribution_mass_sums_to_one(seed in any::<u64>()) {
                checked_engine_run(seed, |engine, sigma, t| {
                    let d = engine.distribution(sigma, t).unwrap();
                    assert_eq!(d.total(), Rational::one(), "{t} under {sigma}");
                });
            }

            /// Every target in a distribution's support is stable: its own
            /// distribution is the point mass on itself.
            #[test]
            fn distribution_targets_are_stable(seed in any::<u64>()) {
                checked_engine_run(seed, |engine, sigma, t| {
                    let d = engine.distribution(sigma, t).unwrap().clone();
                    for (u, _) in d.iter() {
                        let du = engine.distribution(sigma, u).unwrap();
                        assert!(
                            du.is_point() && du.point_target() == Some(u),
                            "unstable target {u} of {t} under {sigma}"
                        );
                    }
                });
            }

            /// A term that can terminate has a point-mass distribution (the
            /// converse direction fails: sequencing gives stepping terms
            /// with non-point distributions).
            #[test]
            fn terminating_terms_have_point_distributions(seed in any::<u64>()) {
                checked_engine_run(seed, |engine, sigma, t| {
                    if engine.terminates(sigma, t).unwrap() {
                        assert!(
                            engine.distribution(sigma, t).unwrap().is_point(),
                            "{t} terminates under {sigma} without a point mass"
                        );
                    }
                });
            }

            /// Step targets stay inside the semantics: each one has a
            /// well-defined distribution that sums to 1.
            #[test]
            fn step_targets_stay_executable(seed in any::<u64>()) {
                checked_engine_run(seed, |engine, sigma, t| {
                    let steps = engine.action_steps(sigma, t).unwrap().clone();
                    for (_, u) in &steps.steps {
                        let d = engine.distribution(sigma, u).unwrap();
                        assert_eq!(d.total(), Rational::one(), "target {u} of {t}");
                    }
                });
            }

            /// A probabilistic choice itself never takes an action step and
            /// never terminates; it only resolves.
            #[test]
            fn probabilistic_choices_are_inert(seed in any::<u64>()) {
                let ctx = test_ctx();
                let cfg = TermGenConfig::full();
                let mut rng = rng_from_seed(seed);
                let l = random_term(&mut rng, &ctx, &cfg);
                let r = random_term(&mut rng, &ctx, &cfg);
                for p in [Prob::zero(), Prob::half(), Prob::one()] {
                    let t = ProcTerm::pchoice(p, l.clone(), r.clone());
                    let mut engine = Engine::new(ctx.clone(), CommFunction::default());
                    for sigma in ctx.enumerate_maps().unwrap() {
                        let steps = engine.action_steps(&sigma, &t).unwrap();
                        assert!(steps.steps.is_empty(), "{t} stepped under {sigma}");
                        assert!(!steps.terminating, "{t} terminated under {sigma}");
                    }
                }
            }
        }
    }
}
