//! Core library of the `pax` workbench: a process algebra with probabilistic
//! choice, imperative data (flexible variables, guarded commands, evaluation
//! operators), and guarded linear recursion.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! .pax text ──parse──▶ SpecFile ──▶ ProcTerm ──SOS──▶ PTS ──▶ bisimulation
//!                                      │                        verdicts
//!                                      ├──▶ axiom rewriting ────┘
//!                                      └──▶ seeded simulation
//! ```
//!
//! * [`meadow`] — exact rational arithmetic: zero-totalized inverse, signum,
//!   sign-defined ordering, and the probability subrange.
//! * [`data_model`] — finite data universe, data terms, conditions with
//!   bounded quantifiers, evaluation maps.
//! * [`process_terms`] — the process AST, linearity/guardedness analysis,
//!   recursive specifications, communication tables.
//! * [`spec_parser`] — the `.pax` concrete syntax (parse and pretty-print).
//! * [`sos_engine`] — operational semantics: per-state exact probability
//!   distributions, action steps, termination.
//! * [`pts_builder`] — reachable probabilistic transition systems, JSON/DOT
//!   export, exact terminal-class probabilities.
//! * [`bisim`] — branching / rooted branching bisimulation equivalence,
//!   a brute-force oracle, and the interference-freedom check.
//! * [`axiom_rewriter`] — directed equational rewriting and derivability
//!   verdicts, sound by construction and cross-checked against [`bisim`].
//! * [`simulator`] — seeded probabilistic execution with pluggable
//!   schedulers and Wilson-interval estimation.

pub mod axiom_rewriter;
pub mod bisim;
pub mod data_model;
pub mod meadow;
pub mod process_terms;
pub mod simulator;
pub mod sos_engine;
pub mod spec_parser;
pub mod pts_builder;
pub mod testkit;

pub use axiom_rewriter::{Normalized, RewriteError, RewriteTrace, Rewriter, Verdict};
pub use bisim::{
    branching_equivalent, branching_partition, interference_free, rooted_equivalent, Outcome,
    Partition,
};
pub use data_model::{Cond, DataCtx, DataTerm, DataValue, EvalMap};
pub use meadow::{Prob, Rational};
pub use process_terms::{Action, ProcTerm, RecSpec};
pub use pts_builder::{
    eval_root_map, exact_terminal_distribution, explore, explore_multi, ExploreConfig, Explored,
    Pts, PtsError,
};
pub use simulator::{
    estimate, run_indexed, run_many, run_once, wilson_interval, Estimate, Event, FinalStatus,
    SchedulerPolicy, SimError, Trace, DEFAULT_MAX_STEPS,
};
pub use sos_engine::{Distribution, Engine, EngineError, StepSet};
pub use spec_parser::SpecFile;
