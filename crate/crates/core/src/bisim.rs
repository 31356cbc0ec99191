//! Branching and rooted branching equivalence on finite transition systems.
//!
//! [`branching_partition`] computes the coarsest partition of a system's
//! states that satisfies the three branching transfer conditions (silent
//! steps may be absorbed into their class; termination and per-class
//! probability mass must agree). [`brute_force_partition`] is the
//! independent oracle: it enumerates *every* equivalence relation on the
//! states, keeps the ones that satisfy the conditions verbatim, and returns
//! their join. [`rooted_equivalent`] decides the rooted relation for a pair
//! of closed terms by exploring their joint system, and
//! [`interference_free`] applies it to the two evaluation orders of a
//! parallel composition.
//!
//! # Silent convergence `⇝`
//!
//! Inside a class, a state may defer to another along *silent reachability*
//! edges: a `tau`-labelled action edge or a positive-probability edge.
//! Stored distributions only carry positive masses, so both edge kinds are
//! read straight off the system.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::meadow::Rational;
use crate::process_terms::ProcTerm;
use crate::pts_builder::{explore_multi, ExploreConfig, Explored, Pts, PtsError};
use crate::sos_engine::Engine;
use crate::EvalMap;

/// The label string of the silent action, as printed by every exploration.
const TAU: &str = "tau";

/// A partition of a system's states into disjoint blocks covering all of
/// them. Blocks are sorted internally and ordered by their smallest member,
/// so equal partitions compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// The one-block partition of `n` states.
    fn universal(n: usize) -> Partition {
        Partition { blocks: vec![(0..n).collect()] }
    }

    fn normalized(mut blocks: Vec<Vec<usize>>) -> Partition {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort_by_key(|b| b[0]);
        Partition { blocks }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// For each state, the index of its block.
    pub fn block_of(&self, n_states: usize) -> Vec<usize> {
        let mut of = vec![usize::MAX; n_states];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &s in b {
                of[s] = bi;
            }
        }
        assert!(of.iter().all(|&b| b != usize::MAX), "partition does not cover the states");
        of
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.blocks.iter().any(|b| b.contains(&i) && b.contains(&j))
    }
}

/// Per-state probability mass into each block of a partition.
fn class_masses(pts: &Pts, block_of: &[usize], state: usize, si: usize) -> BTreeMap<usize, Rational> {
    let mut out: BTreeMap<usize, Rational> = BTreeMap::new();
    for (j, p) in &pts.dists[state][si] {
        let entry = out.entry(block_of[*j]).or_insert_with(Rational::zero);
        *entry = entry.clone() + p.clone();
    }
    out
}

/// Whether state `j` can answer a demanded step `(label, target block)`
/// under map `si`, given the current partition: either by a direct step with
/// that label class into that block from somewhere in `j`'s class reachable
/// silently without leaving the class, or — for a silent demand aimed at
/// `j`'s own class — by standing still, which requires `j` not to terminate.
fn granted(
    pts: &Pts,
    block_of: &[usize],
    j: usize,
    si: usize,
    label: &str,
    target_block: usize,
) -> bool {
    if label == TAU && target_block == block_of[j] && !pts.term[j][si] {
        return true;
    }
    let home = block_of[j];
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(j);
    queue.push_back(j);
    while let Some(u) = queue.pop_front() {
        for (l, w) in &pts.steps[u][si] {
            if l == label && block_of[*w] == target_block {
                return true;
            }
            if l == TAU && block_of[*w] == home && seen.insert(*w) {
                queue.push_back(*w);
            }
        }
        for (w, _) in &pts.dists[u][si] {
            if block_of[*w] == home && seen.insert(*w) {
                queue.push_back(*w);
            }
        }
    }
    false
}

/// Verbatim check of the three branching transfer conditions for an
/// equivalence presented as a partition: related states terminate together,
/// put equal probability mass into every block, and can answer each other's
/// action steps (directly after silent convergence within the class, or by
/// standing still on silent steps aimed at the class itself).
pub fn is_branching_bisimulation(pts: &Pts, partition: &Partition) -> bool {
    let n = pts.n_states();
    let block_of = partition.block_of(n);
    for block in &partition.blocks {
        for &i in block {
            for &j in block {
                if i == j {
                    continue;
                }
                for si in 0..pts.n_sigmas() {
                    if pts.term[i][si] != pts.term[j][si] {
                        return false;
                    }
                    if class_masses(pts, &block_of, i, si)
                        != class_masses(pts, &block_of, j, si)
                    {
                        return false;
                    }
                    for (label, target) in &pts.steps[i][si] {
                        if !granted(pts, &block_of, j, si, label, block_of[*target]) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// The coarsest partition satisfying the branching transfer conditions,
/// computed by signature refinement to a fixpoint: split on termination
/// vectors, then on per-block probability masses, then on which demanded
/// steps each state can answer, and repeat until stable.
pub fn branching_partition(pts: &Pts) -> Partition {
    let n = pts.n_states();
    let ns = pts.n_sigmas();
    let mut partition = Partition::universal(n);
    loop {
        let block_of = partition.block_of(n);
        let mut next: Vec<Vec<usize>> = Vec::new();
        let mut changed = false;
        for block in &partition.blocks {
            // Signature: termination vector, then class-mass vector.
            let mut groups: BTreeMap<Vec<(bool, Vec<(usize, Rational)>)>, Vec<usize>> =
                BTreeMap::new();
            for &s in block {
                let sig: Vec<(bool, Vec<(usize, Rational)>)> = (0..ns)
                    .map(|si| {
                        (
                            pts.term[s][si],
                            class_masses(pts, &block_of, s, si).into_iter().collect(),
                        )
                    })
                    .collect();
                groups.entry(sig).or_default().push(s);
            }
            if groups.len() > 1 {
                changed = true;
                next.extend(groups.into_values());
                continue;
            }
            // Signature: answer profile over the block's demanded steps.
            let mut demands: BTreeSet<(usize, String, usize)> = BTreeSet::new();
            for &s in block {
                for si in 0..ns {
                    for (label, target) in &pts.steps[s][si] {
                        demands.insert((si, label.clone(), block_of[*target]));
                    }
                }
            }
            let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
            for &s in block {
                let profile: Vec<bool> = demands
                    .iter()
                    .map(|(si, label, tb)| granted(pts, &block_of, s, *si, label, *tb))
                    .collect();
                groups.entry(profile).or_default().push(s);
            }
            if groups.len() > 1 {
                changed = true;
            }
            next.extend(groups.into_values());
        }
        partition = Partition::normalized(next);
        if !changed {
            debug_assert!(is_branching_bisimulation(pts, &partition));
            return partition;
        }
    }
}

/// Enumerates every partition of `{0, …, n−1}` (restricted-growth strings)
/// and hands each to the visitor.
fn for_each_partition(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(assign: &mut Vec<usize>, used: usize, n: usize, visit: &mut impl FnMut(&[usize])) {
        if assign.len() == n {
            visit(assign);
            return;
        }
        for b in 0..=used {
            assign.push(b);
            rec(assign, used.max(b + 1), n, visit);
            assign.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), 0, n, visit);
}

/// Independent oracle for [`branching_partition`], usable up to ~10 states:
/// checks the transfer conditions verbatim on *every* equivalence relation
/// over the states and returns the join (union-closure) of the satisfying
/// ones. The identity relation always satisfies the conditions, so the
/// result is well defined.
///
/// # Panics
///
/// On systems with more than 10 states (the enumeration is exponential).
pub fn brute_force_partition(pts: &Pts) -> Partition {
    let n = pts.n_states();
    assert!(n <= 10, "brute force is for systems of at most 10 states, got {n}");
    // Union-find over the states; satisfying relations merge their blocks.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for_each_partition(n, &mut |assign| {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (s, &b) in assign.iter().enumerate() {
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(s);
        }
        let candidate = Partition::normalized(blocks);
        if is_branching_bisimulation(pts, &candidate) {
            for block in &candidate.blocks {
                for &s in &block[1..] {
                    let a = find(&mut parent, block[0]);
                    let b = find(&mut parent, s);
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    });
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..n {
        let r = find(&mut parent, s);
        by_root.entry(r).or_default().push(s);
    }
    Partition::normalized(by_root.into_values().collect())
}

/// Why a rooted-equivalence check failed: the first violated root condition,
/// with everything printed so it can be reported directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    /// One root (side 1 or 2) has a first step the other cannot match with
    /// the same label class into the same branching class.
    RootStepUnmatched { sigma: String, side: u8, label: String, target: String },
    /// Exactly one of the roots can terminate under this map.
    RootTermMismatch { sigma: String },
    /// The roots put different probability mass into some branching class,
    /// named here by one of its member states.
    RootMassMismatch { sigma: String, class_member: String, p1: Rational, p2: Rational },
}

impl std::fmt::Display for Evidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Evidence::RootStepUnmatched { sigma, side, label, target } => write!(
                f,
                "under {sigma}, side {side} steps `--{label}--> {target}` with no matching first step on the other side"
            ),
            Evidence::RootTermMismatch { sigma } => {
                write!(f, "under {sigma}, exactly one side can terminate")
            }
            Evidence::RootMassMismatch { sigma, class_member, p1, p2 } => write!(
                f,
                "under {sigma}, the class of `{class_member}` gets mass {p1} from side 1 but {p2} from side 2"
            ),
        }
    }
}

/// Outcome of a rooted (or plain branching) equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Equivalent,
    Inequivalent(Evidence),
}

impl Outcome {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Outcome::Equivalent)
    }
}

/// Decides rooted branching equivalence of two closed terms by exploring
/// their joint system and checking the root conditions on top of the
/// branching partition.
///
/// Root conditions, per evaluation map: the roots' first resolved states
/// must match action steps *strongly* (equal label class, targets in the
/// same branching class — no silent absorption at the root), terminate
/// together, and the roots must put equal probability mass into every
/// branching class. "First resolved state" means the target of the root's
/// distribution when that distribution is a point mass, and the root itself
/// otherwise — a root standing for an unresolved probabilistic choice is
/// compared through its resolutions via the mass condition instead.
pub fn rooted_equivalent(
    engine: &mut Engine,
    t1: &ProcTerm,
    t2: &ProcTerm,
    cfg: &ExploreConfig,
) -> Result<Outcome, PtsError> {
    let ex = explore_multi(engine, &[t1.clone(), t2.clone()], cfg)?;
    let partition = branching_partition(&ex.pts);
    Ok(rooted_outcome(&ex, &partition))
}

/// The root conditions of [`rooted_equivalent`], split out for callers that
/// already explored a joint system.
pub fn rooted_outcome(ex: &Explored, partition: &Partition) -> Outcome {
    let pts = &ex.pts;
    let (r1, r2) = (ex.roots[0], *ex.roots.last().unwrap());
    let block_of = partition.block_of(pts.n_states());
    let resolve = |r: usize, si: usize| -> usize {
        match pts.dists[r][si].as_slice() {
            [(u, p)] if *p == Rational::one() => *u,
            _ => r,
        }
    };
    for si in 0..pts.n_sigmas() {
        let sigma = pts.sigma_universe[si].to_string();
        let (u1, u2) = (resolve(r1, si), resolve(r2, si));
        if pts.term[u1][si] != pts.term[u2][si] {
            return Outcome::Inequivalent(Evidence::RootTermMismatch { sigma });
        }
        for (side, from, other) in [(1u8, u1, u2), (2u8, u2, u1)] {
            for (label, target) in &pts.steps[from][si] {
                let matched = pts.steps[other][si]
                    .iter()
                    .any(|(l, w)| l == label && block_of[*w] == block_of[*target]);
                if !matched {
                    return Outcome::Inequivalent(Evidence::RootStepUnmatched {
                        sigma,
                        side,
                        label: label.clone(),
                        target: pts.states[*target].clone(),
                    });
                }
            }
        }
        let m1 = class_masses(pts, &block_of, r1, si);
        let m2 = class_masses(pts, &block_of, r2, si);
        if m1 != m2 {
            let blocks: BTreeSet<usize> = m1.keys().chain(m2.keys()).copied().collect();
            for b in blocks {
                let p1 = m1.get(&b).cloned().unwrap_or_else(Rational::zero);
                let p2 = m2.get(&b).cloned().unwrap_or_else(Rational::zero);
                if p1 != p2 {
                    return Outcome::Inequivalent(Evidence::RootMassMismatch {
                        sigma,
                        class_member: pts.states[partition.blocks[b][0]].clone(),
                        p1,
                        p2,
                    });
                }
            }
            unreachable!("unequal mass maps with equal entries");
        }
    }
    Outcome::Equivalent
}

/// Decides plain (unrooted) branching equivalence of two closed terms:
/// whether their states land in the same block of the joint branching
/// partition.
pub fn branching_equivalent(
    engine: &mut Engine,
    t1: &ProcTerm,
    t2: &ProcTerm,
    cfg: &ExploreConfig,
) -> Result<bool, PtsError> {
    let ex = explore_multi(engine, &[t1.clone(), t2.clone()], cfg)?;
    let partition = branching_partition(&ex.pts);
    Ok(partition.same_block(ex.roots[0], *ex.roots.last().unwrap()))
}

/// Whether running `t1` and `t2` in parallel over a shared store is
/// indistinguishable from running them over private copies of the store:
/// compares `σ(t1 ∥ t2)` against `σ(t1) ∥ σ(t2)` for rooted equivalence.
pub fn interference_free(
    engine: &mut Engine,
    sigma: &EvalMap,
    t1: &ProcTerm,
    t2: &ProcTerm,
) -> Result<Outcome, PtsError> {
    let shared = ProcTerm::eval_wrap(sigma.clone(), ProcTerm::par(t1.clone(), t2.clone()));
    let private = ProcTerm::par(
        ProcTerm::eval_wrap(sigma.clone(), t1.clone()),
        ProcTerm::eval_wrap(sigma.clone(), t2.clone()),
    );
    rooted_equivalent(engine, &shared, &private, &ExploreConfig::canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{Cond, DataCtx, DataTerm};
    use crate::process_terms::{ActionSet, CommFunction, RecSpec};
    use crate::testkit::{random_pts, rng_from_seed, PtsGenConfig};
    use crate::{Action, Prob};
    use std::sync::Arc;

    fn a() -> ProcTerm {
        ProcTerm::basic("a")
    }

    fn b() -> ProcTerm {
        ProcTerm::basic("b")
    }

    fn coin(l: ProcTerm, r: ProcTerm) -> ProcTerm {
        ProcTerm::pchoice(Prob::half(), l, r)
    }

    fn tau_dot(t: ProcTerm) -> ProcTerm {
        ProcTerm::seq(ProcTerm::tau(), t)
    }

    fn joint(t1: &ProcTerm, t2: &ProcTerm) -> (Explored, Partition) {
        let mut eng = Engine::pure(4);
        let ex =
            explore_multi(&mut eng, &[t1.clone(), t2.clone()], &ExploreConfig::default())
                .unwrap();
        let p = branching_partition(&ex.pts);
        (ex, p)
    }

    #[test]
    fn a_silent_prefix_is_absorbed_without_a_root() {
        let (ex, p) = joint(&tau_dot(a()), &a());
        assert!(p.same_block(ex.roots[0], ex.roots[1]));
    }

    #[test]
    fn a_silent_prefix_before_a_probabilistic_choice_is_observable() {
        let c = coin(a(), b());
        let (ex, p) = joint(&tau_dot(c.clone()), &c);
        assert!(!p.same_block(ex.roots[0], ex.roots[1]));
    }

    #[test]
    fn silence_before_termination_is_observable() {
        let (ex, p) = joint(&tau_dot(ProcTerm::eps()), &ProcTerm::eps());
        assert!(!p.same_block(ex.roots[0], ex.roots[1]));
    }

    #[test]
    fn the_root_sees_a_silent_prefix() {
        let mut eng = Engine::pure(4);
        let out =
            rooted_equivalent(&mut eng, &tau_dot(a()), &a(), &ExploreConfig::default())
                .unwrap();
        match out {
            Outcome::Inequivalent(Evidence::RootStepUnmatched { label, .. }) => {
                assert_eq!(label, "tau");
            }
            other => panic!("expected an unmatched root step, got {other:?}"),
        }
    }

    #[test]
    fn a_silent_prefix_survives_under_an_action_prefix_when_probabilistic() {
        let c = coin(b(), ProcTerm::basic("c"));
        let lhs = ProcTerm::seq(a(), tau_dot(c.clone()));
        let rhs = ProcTerm::seq(a(), c);
        let mut eng = Engine::pure(4);
        let out = rooted_equivalent(&mut eng, &lhs, &rhs, &ExploreConfig::default()).unwrap();
        assert!(!out.is_equivalent(), "the probabilistic choice changes class masses");
    }

    #[test]
    fn a_silent_prefix_under_an_action_prefix_disappears_when_deterministic() {
        let lhs = ProcTerm::seq(a(), tau_dot(b()));
        let rhs = ProcTerm::seq(a(), b());
        let mut eng = Engine::pure(4);
        let out = rooted_equivalent(&mut eng, &lhs, &rhs, &ExploreConfig::default()).unwrap();
        assert!(out.is_equivalent());
    }

    #[test]
    fn degenerate_choices_resolve_before_the_root_conditions() {
        let mut eng = Engine::pure(4);
        let out = rooted_equivalent(
            &mut eng,
            &coin(a(), a()),
            &a(),
            &ExploreConfig::default(),
        )
        .unwrap();
        assert!(out.is_equivalent(), "a half-half choice between equal sides is that side");

        let lhs = ProcTerm::alt(ProcTerm::pchoice(Prob::one(), a(), b()), ProcTerm::basic("c"));
        let rhs = ProcTerm::alt(a(), ProcTerm::basic("c"));
        let out = rooted_equivalent(&mut eng, &lhs, &rhs, &ExploreConfig::default()).unwrap();
        assert!(out.is_equivalent(), "weight-1 choices disappear before the root check");
    }

    #[test]
    fn the_refinement_agrees_with_the_oracle_on_random_systems() {
        let cfg = PtsGenConfig::default();
        for seed in 0..80u64 {
            let pts = random_pts(&mut rng_from_seed(seed), &cfg);
            let fast = branching_partition(&pts);
            let slow = brute_force_partition(&pts);
            assert_eq!(fast, slow, "seed {seed}: partitions disagree on {pts:?}");
        }
    }

    #[test]
    fn the_refinement_agrees_with_the_oracle_on_two_map_systems() {
        let cfg = PtsGenConfig { n_sigmas: 2, max_states: 5, ..PtsGenConfig::default() };
        for seed in 0..40u64 {
            let pts = random_pts(&mut rng_from_seed(seed), &cfg);
            let fast = branching_partition(&pts);
            let slow = brute_force_partition(&pts);
            assert_eq!(fast, slow, "seed {seed}: partitions disagree on {pts:?}");
        }
    }

    #[test]
    fn the_refinement_agrees_with_the_oracle_on_explored_silence_examples() {
        let cases: Vec<(ProcTerm, ProcTerm)> = vec![
            (tau_dot(a()), a()),
            (coin(a(), b()), tau_dot(coin(a(), b()))),
            (tau_dot(ProcTerm::eps()), ProcTerm::eps()),
            (ProcTerm::alt(tau_dot(a()), b()), ProcTerm::alt(a(), b())),
            (ProcTerm::seq(a(), tau_dot(b())), ProcTerm::seq(a(), b())),
        ];
        for (i, (t1, t2)) in cases.iter().enumerate() {
            let (ex, fast) = joint(t1, t2);
            let slow = brute_force_partition(&ex.pts);
            assert_eq!(fast, slow, "case {i}: partitions disagree");
        }
    }

    /// The recursive specification behind the underivable-but-valid pair:
    /// with probability 1/2 the process emits `a` and stops, otherwise it
    /// may also take a hidden `b`-loop back into itself. Hiding `b` makes
    /// the loop silent, and the whole thing equivalent to `tau · a`.
    fn hidden_loop() -> ProcTerm {
        let a_then_done = ProcTerm::guard(
            Cond::True,
            ProcTerm::seq(ProcTerm::basic("a"), ProcTerm::rec_var("Z")),
        );
        let b_back = ProcTerm::guard(
            Cond::True,
            ProcTerm::seq(ProcTerm::basic("b"), ProcTerm::rec_var("X")),
        );
        let spec = Arc::new(RecSpec::new(
            "Hidden",
            [
                (
                    "X".to_string(),
                    ProcTerm::pchoice(
                        Prob::half(),
                        a_then_done.clone(),
                        ProcTerm::alt(a_then_done, b_back),
                    ),
                ),
                ("Z".to_string(), ProcTerm::guard(Cond::True, ProcTerm::eps())),
            ],
        ));
        crate::process_terms::validate_rec_spec(&spec).unwrap();
        ProcTerm::hide(
            ActionSet::from_names(["b".to_string()]),
            ProcTerm::rec_const("X", spec),
        )
    }

    #[test]
    fn the_hidden_probabilistic_loop_collapses_to_a_silent_prefix() {
        let mut eng = Engine::pure(4);
        let lhs = tau_dot(hidden_loop());
        let rhs = tau_dot(a());
        let out = rooted_equivalent(&mut eng, &lhs, &rhs, &ExploreConfig::default()).unwrap();
        assert!(out.is_equivalent(), "hiding the loop makes the sides equal");
    }

    #[test]
    fn shared_store_interference_is_detected_exactly() {
        let ctx = DataCtx::new(4, ["v".to_string(), "w".to_string()]).unwrap();
        let sigma = EvalMap::new(
            &ctx,
            [("v".to_string(), 1), ("w".to_string(), 1)],
        )
        .unwrap();
        let t1 = ProcTerm::seq(
            ProcTerm::act(Action::assign(
                "v",
                DataTerm::Mul(Box::new(DataTerm::var("v")), Box::new(DataTerm::var("w"))),
            )),
            ProcTerm::guard(
                Cond::Eq(DataTerm::var("v"), DataTerm::lit(1)),
                ProcTerm::act(Action::assign("w", DataTerm::var("v"))),
            ),
        );
        let quotient = ProcTerm::act(Action::assign(
            "v",
            DataTerm::Div(Box::new(DataTerm::var("v")), Box::new(DataTerm::var("w"))),
        ));
        let sum = ProcTerm::act(Action::assign(
            "v",
            DataTerm::Add(Box::new(DataTerm::var("v")), Box::new(DataTerm::var("w"))),
        ));

        let mut eng = Engine::new(ctx.clone(), CommFunction::default());
        let ok = interference_free(&mut eng, &sigma, &t1, &quotient).unwrap();
        assert!(ok.is_equivalent(), "dividing back does not disturb the guard");
        let bad = interference_free(&mut eng, &sigma, &t1, &sum).unwrap();
        assert!(!bad.is_equivalent(), "the sum changes `v` under the other side's guard");
    }

    #[test]
    fn evidence_is_well_formed_on_mass_mismatches() {
        let mut eng = Engine::pure(4);
        let out = rooted_equivalent(
            &mut eng,
            &coin(a(), b()),
            &ProcTerm::pchoice(Prob::frac(1, 3), a(), b()),
            &ExploreConfig::default(),
        )
        .unwrap();
        match out {
            Outcome::Inequivalent(Evidence::RootMassMismatch { p1, p2, .. }) => {
                assert_ne!(p1, p2);
            }
            other => panic!("expected a mass mismatch, got {other:?}"),
        }
    }
}
