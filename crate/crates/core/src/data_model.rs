//! The data side of the algebra: a finite universe of naturals, data terms
//! over flexible variables, conditions with bounded quantifiers, and
//! evaluation maps.
//!
//! The universe is `{0, …, B}` for a declared bound `B ≥ 1`. Keeping it finite
//! is what makes everything downstream decidable: evaluation maps can be
//! enumerated exhaustively, quantifiers range over finitely many values, and
//! the transition relations indexed by evaluation maps stay finite.
//!
//! Arithmetic is total on the universe: addition, multiplication, and
//! successor clamp at `B` (each clamp is a *bound artifact* and can be
//! counted via [`ClampLog`]); subtraction is natural monus (floors at 0,
//! exact by definition, not logged); division is truncated natural division
//! with `x / 0 = 0`, mirroring the zero-totalized inverse of the rational
//! layer (exact by definition, not logged).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::process_terms::Action;

/// A value of the data universe.
pub type DataValue = u64;

/// Largest admissible universe bound; keeps all intermediate raw results
/// (at most B²) comfortably inside `u64`.
pub const MAX_BOUND: DataValue = 1_000_000;

/// Limit on the number of enumerated evaluation maps, `(B+1)^|vars|`.
/// Beyond this the tool reports the blow-up instead of silently sampling.
pub const MAX_SIGMA_UNIVERSE: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum DataError {
    #[error("variable `{0}` is not a declared flexible variable")]
    UndeclaredVar(String),
    #[error("data variable `{0}` escapes its quantifier")]
    UnboundVar(String),
    #[error("value {value} exceeds the universe bound {bound}")]
    ValueOutOfRange { value: DataValue, bound: DataValue },
    #[error("universe bound {0} exceeds the supported maximum {MAX_BOUND}")]
    BoundTooLarge(DataValue),
    #[error("universe bound must be at least 1")]
    BoundTooSmall,
    #[error(
        "evaluation-map universe has {size} maps for {vars} variables at bound {bound}; \
         the supported maximum is {MAX_SIGMA_UNIVERSE}"
    )]
    SigmaUniverseTooLarge { size: u128, vars: usize, bound: DataValue },
    #[error("evaluation map must assign exactly the declared variables; {0}")]
    BadDomain(String),
}

/// Declared data context: the universe bound and the flexible variables.
///
/// All data evaluation, quantification, and evaluation-map enumeration happen
/// relative to one of these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataCtx {
    bound: DataValue,
    vars: BTreeSet<String>,
}

impl DataCtx {
    pub fn new(bound: DataValue, vars: impl IntoIterator<Item = String>) -> Result<Self, DataError> {
        if bound < 1 {
            return Err(DataError::BoundTooSmall);
        }
        if bound > MAX_BOUND {
            return Err(DataError::BoundTooLarge(bound));
        }
        Ok(DataCtx { bound, vars: vars.into_iter().collect() })
    }

    /// A context with no flexible variables (single empty evaluation map).
    pub fn pure(bound: DataValue) -> Self {
        DataCtx::new(bound, []).expect("bound >= 1")
    }

    pub fn bound(&self) -> DataValue {
        self.bound
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|s| s.as_str())
    }

    pub fn is_declared(&self, v: &str) -> bool {
        self.vars.contains(v)
    }

    /// All universe values `0..=B`.
    pub fn values(&self) -> impl Iterator<Item = DataValue> {
        0..=self.bound
    }

    /// Number of evaluation maps, `(B+1)^|vars|`.
    pub fn sigma_universe_size(&self) -> u128 {
        let base = (self.bound as u128) + 1;
        base.pow(self.vars.len() as u32)
    }

    /// Every evaluation map over the declared variables, in lexicographic
    /// order of the (sorted) variable values. Errors if the universe exceeds
    /// [`MAX_SIGMA_UNIVERSE`].
    pub fn enumerate_maps(&self) -> Result<Vec<EvalMap>, DataError> {
        let size = self.sigma_universe_size();
        if size > MAX_SIGMA_UNIVERSE {
            return Err(DataError::SigmaUniverseTooLarge {
                size,
                vars: self.vars.len(),
                bound: self.bound,
            });
        }
        let vars: Vec<&String> = self.vars.iter().collect();
        let mut out = Vec::with_capacity(size as usize);
        let mut current = vec![0 as DataValue; vars.len()];
        loop {
            let vals = vars
                .iter()
                .zip(current.iter())
                .map(|(v, d)| ((*v).clone(), *d))
                .collect();
            out.push(EvalMap { vals });
            // Increment the value vector like an odometer, most significant first.
            let mut i = vars.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if current[i] < self.bound {
                    current[i] += 1;
                    break;
                }
                current[i] = 0;
            }
        }
    }

    /// The all-zero evaluation map (the canonical ambient map).
    pub fn canonical_map(&self) -> EvalMap {
        EvalMap { vals: self.vars.iter().map(|v| (v.clone(), 0)).collect() }
    }

    fn clamp(&self, raw: u64, op: &'static str, log: Option<&mut ClampLog>) -> DataValue {
        if raw > self.bound {
            if let Some(log) = log {
                log.record(op, raw, self.bound);
            }
            self.bound
        } else {
            raw
        }
    }
}

/// Record of arithmetic results clamped to the universe bound.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct ClampLog {
    /// Number of clamped operations.
    pub count: u64,
    /// First few clamp events, as (operator, raw result, bound).
    pub samples: Vec<(&'static str, u64, DataValue)>,
}

impl ClampLog {
    const MAX_SAMPLES: usize = 8;

    fn record(&mut self, op: &'static str, raw: u64, bound: DataValue) {
        self.count += 1;
        if self.samples.len() < Self::MAX_SAMPLES {
            self.samples.push((op, raw, bound));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// A data expression over literals, flexible variables, quantifier-bound
/// variables, and the built-in operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataTerm {
    Lit(DataValue),
    /// Flexible (program) variable, read from the evaluation map.
    Var(String),
    /// Data variable bound by a surrounding quantifier.
    BVar(String),
    Add(Box<DataTerm>, Box<DataTerm>),
    /// Natural monus: `a − b`, floored at 0.
    Monus(Box<DataTerm>, Box<DataTerm>),
    Mul(Box<DataTerm>, Box<DataTerm>),
    /// Truncated natural division with `x / 0 = 0`.
    Div(Box<DataTerm>, Box<DataTerm>),
    Succ(Box<DataTerm>),
}

impl DataTerm {
    pub fn lit(v: DataValue) -> Self {
        DataTerm::Lit(v)
    }

    pub fn var(name: &str) -> Self {
        DataTerm::Var(name.to_string())
    }

    /// True when the term reads the given flexible variable.
    pub fn mentions_var(&self, v: &str) -> bool {
        match self {
            DataTerm::Lit(_) | DataTerm::BVar(_) => false,
            DataTerm::Var(w) => w == v,
            DataTerm::Add(a, b) | DataTerm::Monus(a, b) | DataTerm::Mul(a, b) | DataTerm::Div(a, b) => {
                a.mentions_var(v) || b.mentions_var(v)
            }
            DataTerm::Succ(a) => a.mentions_var(v),
        }
    }

    /// True when the term contains no flexible variables (bound variables may
    /// still occur; they are resolved by the surrounding quantifier).
    pub fn is_flex_closed(&self) -> bool {
        match self {
            DataTerm::Lit(_) | DataTerm::BVar(_) => true,
            DataTerm::Var(_) => false,
            DataTerm::Add(a, b) | DataTerm::Monus(a, b) | DataTerm::Mul(a, b) | DataTerm::Div(a, b) => {
                a.is_flex_closed() && b.is_flex_closed()
            }
            DataTerm::Succ(a) => a.is_flex_closed(),
        }
    }
}

/// Comparison predicates over data values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, a: DataValue, b: DataValue) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// A condition (guard formula) over the data universe.
///
/// `True`, `And`, `Forall`, and the comparisons are kept as first-class nodes
/// for readable syntax; the abbreviation laws (`φ ∧ ψ  ≡  ¬(¬φ ∨ ¬ψ)`,
/// `∀ ≡ ¬∃¬`) are property-tested rather than structurally forced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cond {
    True,
    False,
    Eq(DataTerm, DataTerm),
    Cmp(CmpOp, DataTerm, DataTerm),
    Not(Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    /// Bounded existential: holds iff the body holds for some universe value.
    Exists(String, Box<Cond>),
    /// Bounded universal: holds iff the body holds for every universe value.
    Forall(String, Box<Cond>),
}

impl Cond {
    pub fn not(c: Cond) -> Self {
        Cond::Not(Box::new(c))
    }

    pub fn or(a: Cond, b: Cond) -> Self {
        Cond::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Cond, b: Cond) -> Self {
        Cond::And(Box::new(a), Box::new(b))
    }

    /// Conjunction of a list; `True` when empty.
    pub fn all(conds: impl IntoIterator<Item = Cond>) -> Self {
        let mut it = conds.into_iter();
        match it.next() {
            None => Cond::True,
            Some(first) => it.fold(first, Cond::and),
        }
    }

    /// True when the condition contains no flexible variables.
    pub fn is_flex_closed(&self) -> bool {
        match self {
            Cond::True | Cond::False => true,
            Cond::Eq(a, b) | Cond::Cmp(_, a, b) => a.is_flex_closed() && b.is_flex_closed(),
            Cond::Not(c) => c.is_flex_closed(),
            Cond::Or(a, b) | Cond::And(a, b) => a.is_flex_closed() && b.is_flex_closed(),
            Cond::Exists(_, c) | Cond::Forall(_, c) => c.is_flex_closed(),
        }
    }
}

/// A total assignment of universe values to the declared flexible variables.
///
/// Displays (and serializes) as `{v=1, w=0}` with variables in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EvalMap {
    vals: BTreeMap<String, DataValue>,
}

impl EvalMap {
    /// Builds a map, checking that the domain is exactly the declared
    /// variable set and every value is in the universe.
    pub fn new(
        ctx: &DataCtx,
        pairs: impl IntoIterator<Item = (String, DataValue)>,
    ) -> Result<Self, DataError> {
        let vals: BTreeMap<String, DataValue> = pairs.into_iter().collect();
        for (v, d) in &vals {
            if !ctx.is_declared(v) {
                return Err(DataError::BadDomain(format!("`{v}` is not declared")));
            }
            if *d > ctx.bound() {
                return Err(DataError::ValueOutOfRange { value: *d, bound: ctx.bound() });
            }
        }
        for v in ctx.vars() {
            if !vals.contains_key(v) {
                return Err(DataError::BadDomain(format!("`{v}` is missing an assignment")));
            }
        }
        Ok(EvalMap { vals })
    }

    pub fn get(&self, v: &str) -> Result<DataValue, DataError> {
        self.vals.get(v).copied().ok_or_else(|| DataError::UndeclaredVar(v.to_string()))
    }

    /// Functional update `σ[d/v]`: agrees with `σ` except at `v`.
    pub fn update(&self, v: &str, d: DataValue) -> Result<EvalMap, DataError> {
        if !self.vals.contains_key(v) {
            return Err(DataError::UndeclaredVar(v.to_string()));
        }
        let mut vals = self.vals.clone();
        vals.insert(v.to_string(), d);
        Ok(EvalMap { vals })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, DataValue)> {
        self.vals.iter().map(|(v, d)| (v.as_str(), *d))
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Rebuilds a map from raw pairs without a context check; for importers
    /// whose input already carries the complete domain.
    pub(crate) fn from_raw(pairs: impl IntoIterator<Item = (String, DataValue)>) -> Self {
        EvalMap { vals: pairs.into_iter().collect() }
    }
}

impl fmt::Display for EvalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, d)) in self.vals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={d}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for EvalMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Evaluates a data term under `σ`, ignoring clamp events.
pub fn eval_data(ctx: &DataCtx, sigma: &EvalMap, e: &DataTerm) -> Result<DataValue, DataError> {
    eval_data_inner(ctx, sigma, &BTreeMap::new(), e, &mut None)
}

/// Evaluates a data term under `σ`, recording clamp events in `log`.
pub fn eval_data_logged(
    ctx: &DataCtx,
    sigma: &EvalMap,
    e: &DataTerm,
    log: &mut ClampLog,
) -> Result<DataValue, DataError> {
    let mut slot = Some(log);
    eval_data_inner(ctx, sigma, &BTreeMap::new(), e, &mut slot)
}

fn eval_data_inner(
    ctx: &DataCtx,
    sigma: &EvalMap,
    bound_env: &BTreeMap<String, DataValue>,
    e: &DataTerm,
    log: &mut Option<&mut ClampLog>,
) -> Result<DataValue, DataError> {
    Ok(match e {
        DataTerm::Lit(v) => {
            if *v > ctx.bound() {
                return Err(DataError::ValueOutOfRange { value: *v, bound: ctx.bound() });
            }
            *v
        }
        DataTerm::Var(v) => sigma.get(v)?,
        DataTerm::BVar(x) => {
            *bound_env.get(x).ok_or_else(|| DataError::UnboundVar(x.clone()))?
        }
        DataTerm::Add(a, b) => {
            let (a, b) = eval_pair(ctx, sigma, bound_env, a, b, log)?;
            ctx.clamp(a + b, "+", log.as_deref_mut())
        }
        DataTerm::Monus(a, b) => {
            let (a, b) = eval_pair(ctx, sigma, bound_env, a, b, log)?;
            a.saturating_sub(b)
        }
        DataTerm::Mul(a, b) => {
            let (a, b) = eval_pair(ctx, sigma, bound_env, a, b, log)?;
            ctx.clamp(a * b, "*", log.as_deref_mut())
        }
        DataTerm::Div(a, b) => {
            let (a, b) = eval_pair(ctx, sigma, bound_env, a, b, log)?;
            if b == 0 {
                0
            } else {
                a / b
            }
        }
        DataTerm::Succ(a) => {
            let a = eval_data_inner(ctx, sigma, bound_env, a, log)?;
            ctx.clamp(a + 1, "succ", log.as_deref_mut())
        }
    })
}

fn eval_pair(
    ctx: &DataCtx,
    sigma: &EvalMap,
    bound_env: &BTreeMap<String, DataValue>,
    a: &DataTerm,
    b: &DataTerm,
    log: &mut Option<&mut ClampLog>,
) -> Result<(DataValue, DataValue), DataError> {
    let av = eval_data_inner(ctx, sigma, bound_env, a, log)?;
    let bv = eval_data_inner(ctx, sigma, bound_env, b, log)?;
    Ok((av, bv))
}

/// Classical satisfaction of a condition under `σ`; quantifiers range over
/// the finite universe.
pub fn eval_cond(ctx: &DataCtx, sigma: &EvalMap, phi: &Cond) -> Result<bool, DataError> {
    eval_cond_inner(ctx, sigma, &BTreeMap::new(), phi, &mut None)
}

/// Like [`eval_cond`], recording clamp events from the embedded data terms
/// in `log`.
pub fn eval_cond_logged(
    ctx: &DataCtx,
    sigma: &EvalMap,
    phi: &Cond,
    log: &mut ClampLog,
) -> Result<bool, DataError> {
    let mut slot = Some(log);
    eval_cond_inner(ctx, sigma, &BTreeMap::new(), phi, &mut slot)
}

fn eval_cond_inner(
    ctx: &DataCtx,
    sigma: &EvalMap,
    bound_env: &BTreeMap<String, DataValue>,
    phi: &Cond,
    log: &mut Option<&mut ClampLog>,
) -> Result<bool, DataError> {
    Ok(match phi {
        Cond::True => true,
        Cond::False => false,
        Cond::Eq(a, b) => {
            let av = eval_data_inner(ctx, sigma, bound_env, a, log)?;
            let bv = eval_data_inner(ctx, sigma, bound_env, b, log)?;
            av == bv
        }
        Cond::Cmp(op, a, b) => {
            let av = eval_data_inner(ctx, sigma, bound_env, a, log)?;
            let bv = eval_data_inner(ctx, sigma, bound_env, b, log)?;
            op.eval(av, bv)
        }
        Cond::Not(c) => !eval_cond_inner(ctx, sigma, bound_env, c, log)?,
        Cond::Or(a, b) => {
            eval_cond_inner(ctx, sigma, bound_env, a, log)?
                || eval_cond_inner(ctx, sigma, bound_env, b, log)?
        }
        Cond::And(a, b) => {
            eval_cond_inner(ctx, sigma, bound_env, a, log)?
                && eval_cond_inner(ctx, sigma, bound_env, b, log)?
        }
        Cond::Exists(x, c) => {
            let mut env = bound_env.clone();
            for d in ctx.values() {
                env.insert(x.clone(), d);
                if eval_cond_inner(ctx, sigma, &env, c, log)? {
                    return Ok(true);
                }
            }
            false
        }
        Cond::Forall(x, c) => {
            let mut env = bound_env.clone();
            for d in ctx.values() {
                env.insert(x.clone(), d);
                if !eval_cond_inner(ctx, sigma, &env, c, log)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

/// Substitutes `σ`'s values for every flexible variable in a data term,
/// producing a term with literals in their place.
pub fn substitute_data(sigma: &EvalMap, e: &DataTerm) -> Result<DataTerm, DataError> {
    Ok(match e {
        DataTerm::Lit(_) | DataTerm::BVar(_) => e.clone(),
        DataTerm::Var(v) => DataTerm::Lit(sigma.get(v)?),
        DataTerm::Add(a, b) => DataTerm::Add(
            Box::new(substitute_data(sigma, a)?),
            Box::new(substitute_data(sigma, b)?),
        ),
        DataTerm::Monus(a, b) => DataTerm::Monus(
            Box::new(substitute_data(sigma, a)?),
            Box::new(substitute_data(sigma, b)?),
        ),
        DataTerm::Mul(a, b) => DataTerm::Mul(
            Box::new(substitute_data(sigma, a)?),
            Box::new(substitute_data(sigma, b)?),
        ),
        DataTerm::Div(a, b) => DataTerm::Div(
            Box::new(substitute_data(sigma, a)?),
            Box::new(substitute_data(sigma, b)?),
        ),
        DataTerm::Succ(a) => DataTerm::Succ(Box::new(substitute_data(sigma, a)?)),
    })
}

/// Substitutes `σ`'s values for every flexible variable in a condition.
pub fn substitute_cond(sigma: &EvalMap, phi: &Cond) -> Result<Cond, DataError> {
    Ok(match phi {
        Cond::True => Cond::True,
        Cond::False => Cond::False,
        Cond::Eq(a, b) => Cond::Eq(substitute_data(sigma, a)?, substitute_data(sigma, b)?),
        Cond::Cmp(op, a, b) => Cond::Cmp(*op, substitute_data(sigma, a)?, substitute_data(sigma, b)?),
        Cond::Not(c) => Cond::not(substitute_cond(sigma, c)?),
        Cond::Or(a, b) => Cond::or(substitute_cond(sigma, a)?, substitute_cond(sigma, b)?),
        Cond::And(a, b) => Cond::and(substitute_cond(sigma, a)?, substitute_cond(sigma, b)?),
        Cond::Exists(x, c) => Cond::Exists(x.clone(), Box::new(substitute_cond(sigma, c)?)),
        Cond::Forall(x, c) => Cond::Forall(x.clone(), Box::new(substitute_cond(sigma, c)?)),
    })
}

/// Truth vector of a condition over the enumerated evaluation maps; two
/// conditions are equivalent in the data model iff their vectors coincide.
pub fn cond_truth_vector(ctx: &DataCtx, phi: &Cond) -> Result<Vec<bool>, DataError> {
    ctx.enumerate_maps()?
        .iter()
        .map(|sigma| eval_cond(ctx, sigma, phi))
        .collect()
}

/// True when the condition holds under every evaluation map (validity in the
/// data model).
pub fn cond_valid(ctx: &DataCtx, phi: &Cond) -> Result<bool, DataError> {
    Ok(cond_truth_vector(ctx, phi)?.into_iter().all(|b| b))
}

/// True when the condition holds under no evaluation map.
pub fn cond_unsatisfiable(ctx: &DataCtx, phi: &Cond) -> Result<bool, DataError> {
    Ok(cond_truth_vector(ctx, phi)?.into_iter().all(|b| !b))
}

/// Value vector of a data term over the enumerated evaluation maps.
pub fn data_value_vector(ctx: &DataCtx, e: &DataTerm) -> Result<Vec<DataValue>, DataError> {
    ctx.enumerate_maps()?
        .iter()
        .map(|sigma| eval_data(ctx, sigma, e))
        .collect()
}

/// True when two data terms take equal values under every evaluation map.
pub fn data_terms_equal(ctx: &DataCtx, a: &DataTerm, b: &DataTerm) -> Result<bool, DataError> {
    Ok(data_value_vector(ctx, a)? == data_value_vector(ctx, b)?)
}

/// Data equivalence of action labels: same kind and name, with all data
/// arguments equal under every evaluation map (equality valid in the data
/// model, not merely under one `σ`).
///
/// This is the label identification used when matching transitions: `a(1+1)`
/// and `a(2)` are the same label, while `v:=2` and `w:=2` are not.
pub fn data_equiv(ctx: &DataCtx, a: &Action, b: &Action) -> Result<bool, DataError> {
    Ok(match (a, b) {
        (Action::Tau, Action::Tau) | (Action::Delta, Action::Delta) => true,
        (Action::Basic(x), Action::Basic(y)) => x == y,
        (Action::Param(x, es), Action::Param(y, fs)) => {
            if x != y || es.len() != fs.len() {
                false
            } else {
                for (e, f) in es.iter().zip(fs.iter()) {
                    if !data_terms_equal(ctx, e, f)? {
                        return Ok(false);
                    }
                }
                true
            }
        }
        (Action::Assign(v, e), Action::Assign(w, f)) => v == w && data_terms_equal(ctx, e, f)?,
        _ => false,
    })
}
