//! Parser for `.pax` specification files and the term language.
//!
//! A `.pax` file consists of declarations followed by definitions, processed
//! top to bottom (later sections may only reference earlier declarations):
//!
//! ```text
//! # comments run to end of line
//! actions a, b, s/1, r/1;        # names, optionally with arity
//! comm s | r = c;                # communication function entries
//! vars v, w;                     # flexible data variables
//! bound 16;                      # data universe is {0..16}; default 16
//! eval init = { v = 0, w = 0 }; # a named evaluation map
//! rec Walk {                     # a linear recursive specification
//!   X = [true] -> (v := 0) . Y;
//!   Y = pc{1/2: [true] -> (v := v + 1) . Y, 1/2: [true] -> eps};
//! }
//! proc Main = <X | Walk>;        # a named process
//! ```
//!
//! The term grammar, weakest-binding first:
//!
//! 1. `t + u` — alternative composition (left associative)
//! 2. `t || u`, `t |L u`, `t | u` — the merge tier; chains of one operator
//!    associate left, mixing two different merge operators requires parens
//! 3. `[phi] -> t` — guard prefix; the body extends through tier 4
//! 4. `t . u` — sequential composition (left associative)
//! 5. atoms — actions, `a(e, …)`, `(v := e)`, `tau`, `delta`, `eps`,
//!    `pc{p1: t1, …}`, `encap{H}(t)`, `hide{I}(t)`, `termtest(t)`,
//!    `V{v=0, …}(t)`, `<X | Spec>`, and parenthesized terms
//!
//! The canonical printer ([`std::fmt::Display`] on
//! [`ProcTerm`](crate::process_terms::ProcTerm)) emits exactly this grammar
//! with minimal parentheses, and parsing a printed term reproduces the term
//! tree node for node — a property test pins this inverse relationship.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::data_model::{
    Cond, CmpOp, DataCtx, DataError, DataTerm, DataValue, EvalMap,
};
use crate::meadow::Rational;
use crate::process_terms::{
    build_prc, validate_rec_spec, Action, ActionSet, CommFunction, ProcTerm, RecSpec,
};

/// Default data universe bound when a file does not declare one.
pub const DEFAULT_BOUND: DataValue = 16;

/// Identifiers with fixed meaning in the grammar; they cannot be declared.
const RESERVED: &[&str] = &[
    "actions", "comm", "vars", "bound", "eval", "rec", "proc", "pc", "encap", "hide", "termtest",
    "tau", "delta", "eps", "true", "false", "not", "and", "or", "exists", "forall", "succ", "V",
];

/// A parse or validation error with its source position.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{file}:{line}:{col}: {msg}")]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

/// A fully parsed and validated `.pax` file.
#[derive(Debug, Clone)]
pub struct SpecFile {
    /// Declared action names with their arity.
    pub actions: BTreeMap<String, usize>,
    /// The communication function (validated commutative and associative).
    pub comm: CommFunction,
    /// The data context: universe bound plus flexible variables.
    pub ctx: DataCtx,
    /// Named evaluation maps from `eval` declarations.
    pub evals: BTreeMap<String, EvalMap>,
    /// Recursive specifications, all linear and guarded.
    pub recs: BTreeMap<String, Arc<RecSpec>>,
    /// Named processes.
    pub procs: BTreeMap<String, ProcTerm>,
    /// Process names in declaration order; the first is the default.
    pub proc_order: Vec<String>,
}

impl SpecFile {
    /// Parses and validates a whole `.pax` source. `file` names the source in
    /// error messages.
    pub fn parse(file: &str, source: &str) -> Result<SpecFile, ParseError> {
        let tokens = lex(file, source)?;
        Parser::new(file, tokens).parse_file()
    }

    /// Parses a single term in this file's declaration context (used for
    /// terms given on a command line). Specification variables are not in
    /// scope; recursion enters only through `<X | Spec>`.
    pub fn parse_term(&self, source: &str) -> Result<ProcTerm, ParseError> {
        let file = "<term>";
        let tokens = lex(file, source)?;
        let mut p = Parser::new(file, tokens);
        p.actions = self.actions.clone();
        p.vars = self.ctx.vars().map(str::to_string).collect();
        p.bound = self.ctx.bound();
        p.recs = self.recs.clone();
        let t = p.parse_alt(&None)?;
        p.expect_end()?;
        Ok(t)
    }

    /// The default process: the first one declared.
    pub fn default_proc(&self) -> Option<(&str, &ProcTerm)> {
        self.proc_order
            .first()
            .and_then(|n| self.procs.get(n).map(|t| (n.as_str(), t)))
    }

    /// Looks up a process by name, falling back to the default when `name`
    /// is `None`.
    pub fn resolve_proc(&self, name: Option<&str>) -> Result<(String, &ProcTerm), String> {
        match name {
            Some(n) => self
                .procs
                .get(n)
                .map(|t| (n.to_string(), t))
                .ok_or_else(|| format!("no process named `{n}`")),
            None => self
                .default_proc()
                .map(|(n, t)| (n.to_string(), t))
                .ok_or_else(|| "the file declares no processes".to_string()),
        }
    }

    /// Looks up a named evaluation map, falling back to the all-zero map.
    pub fn resolve_eval(&self, name: Option<&str>) -> Result<EvalMap, String> {
        match name {
            Some(n) => self
                .evals
                .get(n)
                .cloned()
                .ok_or_else(|| format!("no evaluation map named `{n}`")),
            None => Ok(self.ctx.canonical_map()),
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(&'static str),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Span {
    line: u32,
    col: u32,
}

fn lex(file: &str, source: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    let err = |line: u32, col: u32, msg: String| ParseError {
        file: file.to_string(),
        line,
        col,
        msg,
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let advance = |i: &mut usize, col: &mut u32, n: usize| {
            *i += n;
            *col += n as u32;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => advance(&mut i, &mut col, 1),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                let n: u64 = text
                    .parse()
                    .map_err(|_| err(span.line, span.col, format!("integer `{text}` is too large")))?;
                out.push((Tok::Int(n), span));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                out.push((Tok::Ident(text), span));
            }
            '|' => {
                if chars.get(i + 1) == Some(&'|') {
                    advance(&mut i, &mut col, 2);
                    out.push((Tok::Sym("||"), span));
                } else if chars.get(i + 1) == Some(&'L')
                    && !chars
                        .get(i + 2)
                        .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    advance(&mut i, &mut col, 2);
                    out.push((Tok::Sym("|L"), span));
                } else {
                    advance(&mut i, &mut col, 1);
                    out.push((Tok::Sym("|"), span));
                }
            }
            ':' => {
                if chars.get(i + 1) == Some(&'=') {
                    advance(&mut i, &mut col, 2);
                    out.push((Tok::Sym(":="), span));
                } else {
                    advance(&mut i, &mut col, 1);
                    out.push((Tok::Sym(":"), span));
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    advance(&mut i, &mut col, 2);
                    out.push((Tok::Sym("->"), span));
                } else {
                    advance(&mut i, &mut col, 1);
                    out.push((Tok::Sym("-"), span));
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'=') {
                    advance(&mut i, &mut col, 2);
                    out.push((Tok::Sym("<="), span));
                } else {
                    advance(&mut i, &mut col, 1);
                    out.push((Tok::Sym("<"), span));
                }
            }
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    advance(&mut i, &mut col, 2);
                    out.push((Tok::Sym(">="), span));
                } else {
                    advance(&mut i, &mut col, 1);
                    out.push((Tok::Sym(">"), span));
                }
            }
            ';' | ',' | '{' | '}' | '(' | ')' | '[' | ']' | '+' | '.' | '*' | '/' | '=' => {
                let sym: &'static str = match c {
                    ';' => ";",
                    ',' => ",",
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '[' => "[",
                    ']' => "]",
                    '+' => "+",
                    '.' => ".",
                    '*' => "*",
                    '/' => "/",
                    '=' => "=",
                    _ => unreachable!(),
                };
                advance(&mut i, &mut col, 1);
                out.push((Tok::Sym(sym), span));
            }
            other => {
                return Err(err(span.line, span.col, format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    file: String,
    toks: Vec<(Tok, Span)>,
    pos: usize,
    // Declaration state, filled as the file is processed top to bottom.
    actions: BTreeMap<String, usize>,
    comm: CommFunction,
    vars: BTreeSet<String>,
    bound: DataValue,
    bound_declared: bool,
    bound_frozen: bool,
    evals: BTreeMap<String, EvalMap>,
    recs: BTreeMap<String, Arc<RecSpec>>,
    procs: BTreeMap<String, ProcTerm>,
    proc_order: Vec<String>,
    /// Which kind of thing each declared identifier is, for collision errors.
    declared: BTreeMap<String, &'static str>,
    /// Quantifier binders currently in scope, innermost last.
    binders: Vec<String>,
}

/// Specification variables in scope while parsing a `rec` body.
type RecScope = Option<BTreeSet<String>>;

impl Parser {
    fn new(file: &str, toks: Vec<(Tok, Span)>) -> Parser {
        Parser {
            file: file.to_string(),
            toks,
            pos: 0,
            actions: BTreeMap::new(),
            comm: CommFunction::new(),
            vars: BTreeSet::new(),
            bound: DEFAULT_BOUND,
            bound_declared: false,
            bound_frozen: false,
            evals: BTreeMap::new(),
            recs: BTreeMap::new(),
            procs: BTreeMap::new(),
            proc_order: Vec::new(),
            declared: BTreeMap::new(),
            binders: Vec::new(),
        }
    }

    fn error_at(&self, span: Span, msg: impl Into<String>) -> ParseError {
        ParseError { file: self.file.clone(), line: span.line, col: span.col, msg: msg.into() }
    }

    fn here(&self) -> Span {
        self.toks
            .get(self.pos)
            .map(|(_, s)| *s)
            .or_else(|| self.toks.last().map(|(_, s)| *s))
            .unwrap_or(Span { line: 1, col: 1 })
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        self.error_at(self.here(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next_tok(&mut self) -> Result<(Tok, Span), ParseError> {
        let item = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.error_here("unexpected end of input"))?;
        self.pos += 1;
        Ok(item)
    }

    fn eat_sym(&mut self, sym: &'static str) -> Result<Span, ParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Sym(s), span)) if *s == sym => {
                let span = *span;
                self.pos += 1;
                Ok(span)
            }
            Some((tok, span)) => Err(self.error_at(*span, format!("expected `{sym}`, found {tok}"))),
            None => Err(self.error_here(format!("expected `{sym}`, found end of input"))),
        }
    }

    fn try_sym(&mut self, sym: &'static str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match self.next_tok()? {
            (Tok::Ident(s), span) => Ok((s, span)),
            (tok, span) => Err(self.error_at(span, format!("expected {what}, found {tok}"))),
        }
    }

    fn eat_int(&mut self, what: &str) -> Result<(u64, Span), ParseError> {
        match self.next_tok()? {
            (Tok::Int(n), span) => Ok((n, span)),
            (tok, span) => Err(self.error_at(span, format!("expected {what}, found {tok}"))),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if let Some((tok, span)) = self.toks.get(self.pos) {
            return Err(self.error_at(*span, format!("unexpected {tok} after the term")));
        }
        Ok(())
    }

    fn declare(&mut self, name: &str, kind: &'static str, span: Span) -> Result<(), ParseError> {
        if RESERVED.contains(&name) {
            return Err(self.error_at(span, format!("`{name}` is a reserved word")));
        }
        if let Some(prev) = self.declared.get(name) {
            return Err(self.error_at(span, format!("`{name}` is already declared as {prev}")));
        }
        self.declared.insert(name.to_string(), kind);
        Ok(())
    }

    // -- file structure ----------------------------------------------------

    fn parse_file(mut self) -> Result<SpecFile, ParseError> {
        while let Some(tok) = self.peek() {
            let keyword = match tok {
                Tok::Ident(s) => s.clone(),
                other => {
                    let other = other.clone();
                    return Err(self.error_here(format!(
                        "expected a declaration keyword, found {other}"
                    )));
                }
            };
            match keyword.as_str() {
                "actions" => self.parse_actions_decl()?,
                "comm" => self.parse_comm_decl()?,
                "vars" => self.parse_vars_decl()?,
                "bound" => self.parse_bound_decl()?,
                "eval" => self.parse_eval_decl()?,
                "rec" => self.parse_rec_decl()?,
                "proc" => self.parse_proc_decl()?,
                other => {
                    return Err(self.error_here(format!(
                        "expected a declaration keyword \
                         (actions, comm, vars, bound, eval, rec, proc), found `{other}`"
                    )));
                }
            }
        }
        let names: BTreeSet<String> = self.actions.keys().cloned().collect();
        if let Err(e) = self.comm.validate(&names) {
            return Err(ParseError {
                file: self.file.clone(),
                line: 1,
                col: 1,
                msg: e.to_string(),
            });
        }
        let ctx = DataCtx::new(self.bound, self.vars.iter().cloned()).map_err(|e| ParseError {
            file: self.file.clone(),
            line: 1,
            col: 1,
            msg: e.to_string(),
        })?;
        Ok(SpecFile {
            actions: self.actions,
            comm: self.comm,
            ctx,
            evals: self.evals,
            recs: self.recs,
            procs: self.procs,
            proc_order: self.proc_order,
        })
    }

    fn parse_actions_decl(&mut self) -> Result<(), ParseError> {
        self.next_tok()?; // `actions`
        loop {
            let (name, span) = self.eat_ident("an action name")?;
            self.declare(&name, "an action", span)?;
            let arity = if self.try_sym("/") {
                let (n, aspan) = self.eat_int("an arity")?;
                if n == 0 {
                    return Err(self.error_at(aspan, "arity 0 is written without `/0`"));
                }
                n as usize
            } else {
                0
            };
            self.actions.insert(name, arity);
            if self.try_sym(",") {
                continue;
            }
            self.eat_sym(";")?;
            return Ok(());
        }
    }

    fn parse_comm_decl(&mut self) -> Result<(), ParseError> {
        self.next_tok()?; // `comm`
        let (a, aspan) = self.eat_ident("an action name")?;
        self.eat_sym("|")?;
        let (b, bspan) = self.eat_ident("an action name")?;
        self.eat_sym("=")?;
        let (c, cspan) = self.eat_ident("an action name")?;
        self.eat_sym(";")?;
        for (n, span) in [(&a, aspan), (&b, bspan), (&c, cspan)] {
            if !self.actions.contains_key(n) {
                return Err(self.error_at(span, format!("`{n}` is not a declared action")));
            }
        }
        let (ar_a, ar_b, ar_c) = (self.actions[&a], self.actions[&b], self.actions[&c]);
        if ar_a != ar_b || ar_b != ar_c {
            return Err(self.error_at(
                aspan,
                format!(
                    "communicating actions must share one arity, got {a}/{ar_a}, {b}/{ar_b}, {c}/{ar_c}"
                ),
            ));
        }
        self.comm
            .declare(&a, &b, &c)
            .map_err(|e| self.error_at(aspan, e.to_string()))
    }

    fn parse_vars_decl(&mut self) -> Result<(), ParseError> {
        self.next_tok()?; // `vars`
        loop {
            let (name, span) = self.eat_ident("a variable name")?;
            self.declare(&name, "a variable", span)?;
            self.vars.insert(name);
            if self.try_sym(",") {
                continue;
            }
            self.eat_sym(";")?;
            return Ok(());
        }
    }

    fn parse_bound_decl(&mut self) -> Result<(), ParseError> {
        let (_, span) = self.next_tok()?; // `bound`
        if self.bound_frozen {
            return Err(self.error_at(
                span,
                "`bound` must be declared before any rec or proc definition",
            ));
        }
        if self.bound_declared {
            return Err(self.error_at(span, "`bound` is declared twice"));
        }
        let (b, bspan) = self.eat_int("the universe bound")?;
        self.eat_sym(";")?;
        if b < 1 {
            return Err(self.error_at(bspan, "the universe bound must be at least 1"));
        }
        self.bound = b;
        self.bound_declared = true;
        Ok(())
    }

    fn parse_eval_decl(&mut self) -> Result<(), ParseError> {
        self.next_tok()?; // `eval`
        let (name, span) = self.eat_ident("an evaluation-map name")?;
        self.declare(&name, "an evaluation map", span)?;
        self.eat_sym("=")?;
        let map = self.parse_eval_map_literal()?;
        self.eat_sym(";")?;
        self.evals.insert(name, map);
        Ok(())
    }

    fn parse_eval_map_literal(&mut self) -> Result<EvalMap, ParseError> {
        let open = self.eat_sym("{")?;
        let mut pairs: Vec<(String, DataValue)> = Vec::new();
        if !self.try_sym("}") {
            loop {
                let (v, vspan) = self.eat_ident("a variable name")?;
                if !self.vars.contains(&v) {
                    return Err(self.error_at(vspan, format!("`{v}` is not a declared variable")));
                }
                self.eat_sym("=")?;
                let (d, _) = self.eat_int("a value")?;
                pairs.push((v, d));
                if self.try_sym(",") {
                    continue;
                }
                self.eat_sym("}")?;
                break;
            }
        }
        let ctx = DataCtx::new(self.bound, self.vars.iter().cloned())
            .map_err(|e| self.error_at(open, e.to_string()))?;
        EvalMap::new(&ctx, pairs).map_err(|e: DataError| self.error_at(open, e.to_string()))
    }

    fn parse_rec_decl(&mut self) -> Result<(), ParseError> {
        self.next_tok()?; // `rec`
        self.bound_frozen = true;
        let (name, span) = self.eat_ident("a specification name")?;
        self.declare(&name, "a recursive specification", span)?;
        self.eat_sym("{")?;
        // Pre-scan the block for equation names so earlier equations can
        // reference later ones. Equations are separated by `;` and braces
        // nest only through `pc{…}`, `encap{…}`, `hide{…}`, and `V{…}`.
        let mut names: BTreeSet<String> = BTreeSet::new();
        {
            let mut depth = 0usize;
            let mut at_eq_start = true;
            let mut i = self.pos;
            while let Some((tok, _)) = self.toks.get(i) {
                match tok {
                    Tok::Sym("{") => depth += 1,
                    Tok::Sym("}") => {
                        if depth == 0 {
                            break;
                        }
                        depth -= 1;
                    }
                    Tok::Sym(";") if depth == 0 => at_eq_start = true,
                    Tok::Ident(x) if at_eq_start && depth == 0 => {
                        if self.toks.get(i + 1).map(|(t, _)| t) == Some(&Tok::Sym("=")) {
                            names.insert(x.clone());
                        }
                        at_eq_start = false;
                    }
                    _ => at_eq_start = false,
                }
                i += 1;
            }
        }
        let scope: RecScope = Some(names.clone());
        let mut equations: Vec<(String, ProcTerm)> = Vec::new();
        loop {
            if self.try_sym("}") {
                break;
            }
            let (var, vspan) = self.eat_ident("a specification variable")?;
            if let Some(kind) = self.declared.get(&var) {
                return Err(self.error_at(
                    vspan,
                    format!("specification variable `{var}` collides with {kind}"),
                ));
            }
            if RESERVED.contains(&var.as_str()) {
                return Err(self.error_at(vspan, format!("`{var}` is a reserved word")));
            }
            if equations.iter().any(|(v, _)| *v == var) {
                return Err(self.error_at(vspan, format!("duplicate equation for `{var}`")));
            }
            self.eat_sym("=")?;
            let rhs = self.parse_alt(&scope)?;
            self.eat_sym(";")?;
            equations.push((var, rhs));
        }
        if equations.is_empty() {
            return Err(self.error_at(span, "a specification needs at least one equation"));
        }
        let spec = RecSpec::new(&name, equations);
        validate_rec_spec(&spec).map_err(|e| self.error_at(span, e.to_string()))?;
        self.recs.insert(name, Arc::new(spec));
        Ok(())
    }

    fn parse_proc_decl(&mut self) -> Result<(), ParseError> {
        self.next_tok()?; // `proc`
        self.bound_frozen = true;
        let (name, span) = self.eat_ident("a process name")?;
        self.declare(&name, "a process", span)?;
        self.eat_sym("=")?;
        let body = self.parse_alt(&None)?;
        self.eat_sym(";")?;
        self.procs.insert(name.clone(), body);
        self.proc_order.push(name);
        Ok(())
    }

    // -- terms -------------------------------------------------------------

    fn parse_alt(&mut self, scope: &RecScope) -> Result<ProcTerm, ParseError> {
        let mut acc = self.parse_mid(scope)?;
        while self.try_sym("+") {
            let rhs = self.parse_mid(scope)?;
            acc = ProcTerm::alt(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_mid(&mut self, scope: &RecScope) -> Result<ProcTerm, ParseError> {
        let mut acc = self.parse_guarded(scope)?;
        let mut seen: Option<&'static str> = None;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym(s @ ("||" | "|L" | "|"))) => *s,
                _ => return Ok(acc),
            };
            let span = self.here();
            if let Some(prev) = seen {
                if prev != op {
                    return Err(self.error_at(
                        span,
                        format!(
                            "`{prev}` and `{op}` do not mix without parentheses; \
                             group one side explicitly"
                        ),
                    ));
                }
            }
            seen = Some(op);
            self.pos += 1;
            let rhs = self.parse_guarded(scope)?;
            acc = match op {
                "||" => ProcTerm::par(acc, rhs),
                "|L" => ProcTerm::lmerge(acc, rhs),
                "|" => ProcTerm::cmerge(acc, rhs),
                _ => unreachable!(),
            };
        }
    }

    fn parse_guarded(&mut self, scope: &RecScope) -> Result<ProcTerm, ParseError> {
        if self.try_sym("[") {
            let phi = self.parse_cond()?;
            self.eat_sym("]")?;
            self.eat_sym("->")?;
            let body = self.parse_guarded(scope)?;
            return Ok(ProcTerm::guard(phi, body));
        }
        self.parse_seq(scope)
    }

    fn parse_seq(&mut self, scope: &RecScope) -> Result<ProcTerm, ParseError> {
        let mut acc = self.parse_atom(scope)?;
        while self.try_sym(".") {
            let rhs = self.parse_atom(scope)?;
            acc = ProcTerm::seq(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_atom(&mut self, scope: &RecScope) -> Result<ProcTerm, ParseError> {
        let span = self.here();
        match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let t = self.parse_alt(scope)?;
                self.eat_sym(")")?;
                Ok(t)
            }
            Some(Tok::Sym("<")) => {
                self.pos += 1;
                let (var, _) = self.eat_ident("a specification variable")?;
                self.eat_sym("|")?;
                let (spec_name, sspan) = self.eat_ident("a specification name")?;
                self.eat_sym(">")?;
                let spec = self.recs.get(&spec_name).ok_or_else(|| {
                    self.error_at(sspan, format!("`{spec_name}` is not a declared specification"))
                })?;
                if !spec.equations.contains_key(&var) {
                    return Err(self.error_at(
                        sspan,
                        format!("specification `{spec_name}` has no variable `{var}`"),
                    ));
                }
                Ok(ProcTerm::rec_const(&var, Arc::clone(spec)))
            }
            Some(Tok::Ident(word)) => match word.as_str() {
                "tau" => {
                    self.pos += 1;
                    Ok(ProcTerm::tau())
                }
                "delta" => {
                    self.pos += 1;
                    Ok(ProcTerm::delta())
                }
                "eps" => {
                    self.pos += 1;
                    Ok(ProcTerm::eps())
                }
                "pc" => self.parse_pchoice(scope),
                "encap" => self.parse_set_operator(scope, true),
                "hide" => self.parse_set_operator(scope, false),
                "termtest" => {
                    self.pos += 1;
                    self.eat_sym("(")?;
                    let t = self.parse_alt(scope)?;
                    self.eat_sym(")")?;
                    Ok(ProcTerm::termtest(t))
                }
                "V" => {
                    self.pos += 1;
                    let map = self.parse_eval_map_literal()?;
                    self.eat_sym("(")?;
                    let t = self.parse_alt(scope)?;
                    self.eat_sym(")")?;
                    Ok(ProcTerm::eval_wrap(map, t))
                }
                name if RESERVED.contains(&name) => {
                    Err(self.error_at(span, format!("`{name}` cannot start a term here")))
                }
                _ => self.parse_name_atom(scope, span),
            },
            Some(other) => Err(self.error_at(span, format!("expected a term, found {other}"))),
            None => Err(self.error_here("expected a term, found end of input")),
        }
    }

    /// An atom starting with a plain identifier: a parameterized action call,
    /// an assignment, a basic action, or a specification variable.
    fn parse_name_atom(&mut self, scope: &RecScope, span: Span) -> Result<ProcTerm, ParseError> {
        let (name, _) = self.eat_ident("a name")?;
        if self.peek() == Some(&Tok::Sym("(")) {
            let arity = *self.actions.get(&name).ok_or_else(|| {
                self.error_at(span, format!("`{name}` is not a declared action"))
            })?;
            self.pos += 1; // `(`
            let mut args = Vec::new();
            if !self.try_sym(")") {
                loop {
                    args.push(self.parse_data_add()?);
                    if self.try_sym(",") {
                        continue;
                    }
                    self.eat_sym(")")?;
                    break;
                }
            }
            if args.len() != arity {
                return Err(self.error_at(
                    span,
                    format!("action `{name}` takes {arity} argument(s), found {}", args.len()),
                ));
            }
            return Ok(ProcTerm::act(Action::Param(name, args)));
        }
        if self.peek() == Some(&Tok::Sym(":=")) {
            if !self.vars.contains(&name) {
                return Err(self.error_at(span, format!("`{name}` is not a declared variable")));
            }
            self.pos += 1; // `:=`
            let e = self.parse_data_add()?;
            return Ok(ProcTerm::act(Action::Assign(name, e)));
        }
        if let Some(vars) = scope {
            if vars.contains(&name) {
                return Ok(ProcTerm::rec_var(&name));
            }
        }
        match self.actions.get(&name) {
            Some(0) => Ok(ProcTerm::act(Action::Basic(name))),
            Some(n) => Err(self.error_at(
                span,
                format!("action `{name}` takes {n} argument(s); write `{name}(…)`"),
            )),
            None => Err(self.error_at(
                span,
                format!("`{name}` is not a declared action{}", if scope.is_some() {
                    " or specification variable"
                } else {
                    ""
                }),
            )),
        }
    }

    fn parse_pchoice(&mut self, scope: &RecScope) -> Result<ProcTerm, ParseError> {
        let span = self.here();
        self.pos += 1; // `pc`
        self.eat_sym("{")?;
        let mut entries: Vec<(Rational, ProcTerm)> = Vec::new();
        loop {
            let w = self.parse_weight()?;
            self.eat_sym(":")?;
            let t = self.parse_alt(scope)?;
            entries.push((w, t));
            if self.try_sym(",") {
                continue;
            }
            self.eat_sym("}")?;
            break;
        }
        if entries.len() == 1 {
            // A single entry must carry the whole mass; it denotes the bare term.
            let (w, t) = entries.pop().expect("one entry");
            if !w.is_one() {
                return Err(self.error_at(span, format!("choice weights sum to {w}, expected 1")));
            }
            return Ok(t);
        }
        build_prc(entries).map_err(|e| self.error_at(span, e.to_string()))
    }

    fn parse_weight(&mut self) -> Result<Rational, ParseError> {
        let (n, span) = self.eat_int("a weight")?;
        let text = if self.try_sym("/") {
            let (d, _) = self.eat_int("a denominator")?;
            if d == 0 {
                return Err(self.error_at(span, "weight denominator must not be zero"));
            }
            format!("{n}/{d}")
        } else {
            format!("{n}")
        };
        text.parse::<Rational>().map_err(|e| self.error_at(span, e.to_string()))
    }

    fn parse_set_operator(&mut self, scope: &RecScope, is_encap: bool) -> Result<ProcTerm, ParseError> {
        self.pos += 1; // `encap` | `hide`
        self.eat_sym("{")?;
        let mut names: Vec<String> = Vec::new();
        let mut assigns: Vec<String> = Vec::new();
        if !self.try_sym("}") {
            loop {
                let (n, nspan) = self.eat_ident("an action name or `v :=`")?;
                if self.try_sym(":=") {
                    if !self.vars.contains(&n) {
                        return Err(
                            self.error_at(nspan, format!("`{n}` is not a declared variable"))
                        );
                    }
                    assigns.push(n);
                } else {
                    if !self.actions.contains_key(&n) {
                        return Err(self.error_at(nspan, format!("`{n}` is not a declared action")));
                    }
                    names.push(n);
                }
                if self.try_sym(",") {
                    continue;
                }
                self.eat_sym("}")?;
                break;
            }
        }
        self.eat_sym("(")?;
        let t = self.parse_alt(scope)?;
        self.eat_sym(")")?;
        let set = ActionSet::new(names, assigns);
        Ok(if is_encap { ProcTerm::encap(set, t) } else { ProcTerm::hide(set, t) })
    }

    // -- conditions --------------------------------------------------------

    fn parse_cond(&mut self) -> Result<Cond, ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == "exists" || w == "forall" => {
                let is_exists = w == "exists";
                self.pos += 1;
                let (x, span) = self.eat_ident("a quantifier variable")?;
                if RESERVED.contains(&x.as_str()) {
                    return Err(self.error_at(span, format!("`{x}` is a reserved word")));
                }
                self.eat_sym(".")?;
                self.binders.push(x.clone());
                let body = self.parse_cond();
                self.binders.pop();
                let body = body?;
                Ok(if is_exists {
                    Cond::Exists(x, Box::new(body))
                } else {
                    Cond::Forall(x, Box::new(body))
                })
            }
            _ => self.parse_cond_or(),
        }
    }

    fn parse_cond_or(&mut self) -> Result<Cond, ParseError> {
        let mut acc = self.parse_cond_and()?;
        while matches!(self.peek(), Some(Tok::Ident(w)) if w == "or") {
            self.pos += 1;
            let rhs = self.parse_cond_and()?;
            acc = Cond::or(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_cond_and(&mut self) -> Result<Cond, ParseError> {
        let mut acc = self.parse_cond_not()?;
        while matches!(self.peek(), Some(Tok::Ident(w)) if w == "and") {
            self.pos += 1;
            let rhs = self.parse_cond_not()?;
            acc = Cond::and(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_cond_not(&mut self) -> Result<Cond, ParseError> {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == "not") {
            self.pos += 1;
            let inner = self.parse_cond_not()?;
            return Ok(Cond::not(inner));
        }
        self.parse_cond_atom()
    }

    fn parse_cond_atom(&mut self) -> Result<Cond, ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                Ok(Cond::True)
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                Ok(Cond::False)
            }
            Some(Tok::Sym("(")) if self.cond_paren_ahead() => {
                self.pos += 1;
                let c = self.parse_cond()?;
                self.eat_sym(")")?;
                Ok(c)
            }
            _ => {
                let lhs = self.parse_data_add()?;
                let (tok, span) = self.next_tok()?;
                let op = match tok {
                    Tok::Sym("=") => return Ok(Cond::Eq(lhs, self.parse_data_add()?)),
                    Tok::Sym("<") => CmpOp::Lt,
                    Tok::Sym("<=") => CmpOp::Le,
                    Tok::Sym(">") => CmpOp::Gt,
                    Tok::Sym(">=") => CmpOp::Ge,
                    other => {
                        return Err(self.error_at(
                            span,
                            format!("expected a comparison (=, <, <=, >, >=), found {other}"),
                        ))
                    }
                };
                let rhs = self.parse_data_add()?;
                Ok(Cond::Cmp(op, lhs, rhs))
            }
        }
    }

    /// Distinguishes a parenthesized *condition* from a parenthesized data
    /// term on the left of a comparison (e.g. `(v + 1) = w`): scan to the
    /// matching `)` and look at what follows.
    fn cond_paren_ahead(&self) -> bool {
        let mut depth = 0usize;
        let mut i = self.pos;
        while let Some((tok, _)) = self.toks.get(i) {
            match tok {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return !matches!(
                            self.toks.get(i + 1).map(|(t, _)| t),
                            Some(Tok::Sym("=" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*" | "/"))
                        );
                    }
                }
                _ => {}
            }
            i += 1;
        }
        true
    }

    // -- data terms --------------------------------------------------------

    fn parse_data_add(&mut self) -> Result<DataTerm, ParseError> {
        let mut acc = self.parse_data_mul()?;
        loop {
            if self.try_sym("+") {
                let rhs = self.parse_data_mul()?;
                acc = DataTerm::Add(Box::new(acc), Box::new(rhs));
            } else if self.try_sym("-") {
                let rhs = self.parse_data_mul()?;
                acc = DataTerm::Monus(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_data_mul(&mut self) -> Result<DataTerm, ParseError> {
        let mut acc = self.parse_data_atom()?;
        loop {
            if self.try_sym("*") {
                let rhs = self.parse_data_atom()?;
                acc = DataTerm::Mul(Box::new(acc), Box::new(rhs));
            } else if self.try_sym("/") {
                let rhs = self.parse_data_atom()?;
                acc = DataTerm::Div(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_data_atom(&mut self) -> Result<DataTerm, ParseError> {
        let span = self.here();
        match self.next_tok()? {
            (Tok::Int(n), ispan) => {
                if n > self.bound {
                    return Err(self.error_at(
                        ispan,
                        format!("literal {n} exceeds the universe bound {}", self.bound),
                    ));
                }
                Ok(DataTerm::Lit(n))
            }
            (Tok::Sym("("), _) => {
                let e = self.parse_data_add()?;
                self.eat_sym(")")?;
                Ok(e)
            }
            (Tok::Ident(w), _) if w == "succ" => {
                self.eat_sym("(")?;
                let e = self.parse_data_add()?;
                self.eat_sym(")")?;
                Ok(DataTerm::Succ(Box::new(e)))
            }
            (Tok::Ident(name), nspan) => {
                if self.binders.iter().rev().any(|b| *b == name) {
                    Ok(DataTerm::BVar(name))
                } else if self.vars.contains(&name) {
                    Ok(DataTerm::Var(name))
                } else if RESERVED.contains(&name.as_str()) {
                    Err(self.error_at(nspan, format!("`{name}` cannot appear in a data term")))
                } else {
                    Err(self.error_at(nspan, format!("`{name}` is not a declared variable")))
                }
            }
            (other, _) => Err(self.error_at(span, format!("expected a data term, found {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::eval_cond;
    use crate::meadow::Prob;
    use crate::process_terms::TermKind;
    use proptest::prelude::*;

    const BASE: &str = "\
actions a, b, c, s/1, r/1, cs/1;
comm s | r = cs;
vars v, w;
bound 8;
eval init = { v = 0, w = 1 };
";

    fn file_with(extra: &str) -> SpecFile {
        SpecFile::parse("test.pax", &format!("{BASE}{extra}")).unwrap()
    }

    fn base_file() -> SpecFile {
        file_with("")
    }

    #[test]
    fn declarations_parse() {
        let f = file_with("proc Main = a . b;\n");
        assert_eq!(f.actions["s"], 1);
        assert_eq!(f.ctx.bound(), 8);
        assert_eq!(f.comm.result("r", "s"), Some("cs"));
        assert_eq!(f.evals["init"].to_string(), "{v=0, w=1}");
        assert_eq!(f.default_proc().unwrap().0, "Main");
        assert_eq!(f.procs["Main"].to_string(), "a . b");
    }

    #[test]
    fn rec_block_parses_and_validates() {
        let f = file_with(
            "rec Walk {\n  X = [true] -> (v := 0) . Y;\n  Y = pc{1/2: [true] -> (v := v + 1) . Y, 1/2: [true] -> eps};\n}\nproc Main = <X | Walk>;\n",
        );
        let spec = &f.recs["Walk"];
        assert_eq!(spec.equations.len(), 2);
        match f.procs["Main"].kind() {
            TermKind::RecConst(x, s) => {
                assert_eq!(x, "X");
                assert_eq!(s.name, "Walk");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn forward_references_inside_rec_work() {
        // X references Y, declared after it.
        let f = file_with(
            "rec Two {\n  X = [true] -> a . Y;\n  Y = [true] -> eps;\n}\nproc Main = <X | Two>;\n",
        );
        assert!(f.recs.contains_key("Two"));
    }

    #[test]
    fn unguarded_rec_is_rejected() {
        let err = SpecFile::parse(
            "t.pax",
            &format!("{BASE}rec Bad {{ X = [true] -> tau . X; }}\n"),
        )
        .unwrap_err();
        assert!(err.msg.contains("unguarded"), "{}", err.msg);
    }

    #[test]
    fn operator_precedence_matches_the_grammar() {
        let f = base_file();
        let t = f.parse_term("a + b . c").unwrap();
        assert_eq!(t, ProcTerm::alt(ProcTerm::basic("a"), ProcTerm::seq(ProcTerm::basic("b"), ProcTerm::basic("c"))));
        let t = f.parse_term("a || b + c").unwrap();
        assert_eq!(
            t,
            ProcTerm::alt(ProcTerm::par(ProcTerm::basic("a"), ProcTerm::basic("b")), ProcTerm::basic("c"))
        );
        let t = f.parse_term("[v = 0] -> a . b + c").unwrap();
        match t.kind() {
            TermKind::Alt(l, _) => assert!(matches!(l.kind(), TermKind::Guard(_, _))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_tier_does_not_mix() {
        let f = base_file();
        assert!(f.parse_term("a || b | c").is_err());
        assert!(f.parse_term("a || (b | c)").is_ok());
        assert!(f.parse_term("a || b || c").is_ok());
    }

    #[test]
    fn probabilistic_choice_weights_must_sum_to_one() {
        let f = base_file();
        assert!(f.parse_term("pc{1/2: a, 1/2: b}").is_ok());
        assert!(f.parse_term("pc{1/2: a, 1/3: b}").is_err());
        assert!(f.parse_term("pc{2/3: a, 2/3: b}").is_err());
        let t = f.parse_term("pc{1/3: a, 1/3: b, 1/3: c}").unwrap();
        assert_eq!(t.to_string(), "pc{1/3: a, 1/3: b, 1/3: c}");
    }

    #[test]
    fn arity_and_declarations_are_enforced() {
        let f = base_file();
        assert!(f.parse_term("s(v)").is_ok());
        assert!(f.parse_term("s").is_err());
        assert!(f.parse_term("a(1)").is_err());
        assert!(f.parse_term("zz").is_err());
        assert!(f.parse_term("(q := 1)").is_err());
        assert!(f.parse_term("X").is_err(), "spec variables are not in scope outside rec");
    }

    #[test]
    fn literals_respect_the_bound() {
        let f = base_file();
        assert!(f.parse_term("s(8)").is_ok());
        assert!(f.parse_term("s(9)").is_err());
    }

    #[test]
    fn conditions_parse_with_quantifiers() {
        let f = base_file();
        let t = f.parse_term("[exists X . X = v and X < 3] -> a").unwrap();
        match t.kind() {
            TermKind::Guard(phi, _) => {
                // Quantifier body is greedy: exists X . (X = v and X < 3).
                let sigma = EvalMap::new(&f.ctx, [("v".into(), 2), ("w".into(), 0)]).unwrap();
                assert!(eval_cond(&f.ctx, &sigma, phi).unwrap());
                let sigma = EvalMap::new(&f.ctx, [("v".into(), 5), ("w".into(), 0)]).unwrap();
                assert!(!eval_cond(&f.ctx, &sigma, phi).unwrap());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parenthesized_condition_vs_data_term() {
        let f = base_file();
        // `(v + 1) = w` — parens belong to the data term.
        assert!(f.parse_term("[(v + 1) = w] -> a").is_ok());
        // `(v = 0) or ...` — parens belong to the condition.
        assert!(f.parse_term("[(v = 0) or (w = 0)] -> a").is_ok());
        assert!(f.parse_term("[not v = 0] -> a").is_ok());
    }

    #[test]
    fn rec_consts_round_trip_via_display() {
        let f = file_with(
            "rec Walk {\n  X = [true] -> a . X + [true] -> eps;\n}\nproc Main = <X | Walk> . b;\n",
        );
        let t = &f.procs["Main"];
        assert_eq!(t.to_string(), "<X | Walk> . b");
        let back = f.parse_term(&t.to_string()).unwrap();
        assert_eq!(&back, t);
    }

    #[test]
    fn error_positions_are_reported() {
        let err = SpecFile::parse("demo.pax", "actions a\nvars v;\n").unwrap_err();
        assert_eq!(err.file, "demo.pax");
        assert_eq!(err.line, 2);
        let shown = err.to_string();
        assert!(shown.starts_with("demo.pax:2:"), "{shown}");
    }

    #[test]
    fn reserved_words_cannot_be_declared() {
        assert!(SpecFile::parse("t.pax", "actions pc;").is_err());
        assert!(SpecFile::parse("t.pax", "vars eval;").is_err());
    }

    #[test]
    fn namespace_collisions_are_rejected() {
        assert!(SpecFile::parse("t.pax", "actions a;\nvars a;").is_err());
        assert!(SpecFile::parse("t.pax", "actions a, a;").is_err());
    }

    #[test]
    fn bound_must_precede_definitions() {
        let src = "actions a;\nproc Main = a;\nbound 4;\n";
        let err = SpecFile::parse("t.pax", src).unwrap_err();
        assert!(err.msg.contains("before any rec or proc"), "{}", err.msg);
    }

    // -- the printer/parser inverse property --------------------------------

    fn arb_data_term_src() -> impl Strategy<Value = DataTerm> {
        let leaf = prop_oneof![
            (0u64..=8).prop_map(DataTerm::Lit),
            Just(DataTerm::var("v")),
            Just(DataTerm::var("w")),
        ];
        leaf.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| DataTerm::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| DataTerm::Monus(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| DataTerm::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| DataTerm::Div(Box::new(a), Box::new(b))),
                inner.prop_map(|a| DataTerm::Succ(Box::new(a))),
            ]
        })
    }

    fn arb_cond_src() -> impl Strategy<Value = Cond> {
        let atom = prop_oneof![
            Just(Cond::True),
            Just(Cond::False),
            (arb_data_term_src(), arb_data_term_src()).prop_map(|(a, b)| Cond::Eq(a, b)),
            (arb_data_term_src(), arb_data_term_src())
                .prop_map(|(a, b)| Cond::Cmp(CmpOp::Le, a, b)),
            (arb_data_term_src(), arb_data_term_src())
                .prop_map(|(a, b)| Cond::Cmp(CmpOp::Gt, a, b)),
        ];
        let simple = atom.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Cond::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Cond::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Cond::and(a, b)),
            ]
        });
        // Quantifiers close over the binder Q comparing it to a data term.
        (simple, arb_data_term_src(), any::<bool>(), any::<bool>()).prop_map(
            |(body, e, quantify, exists)| {
                if quantify {
                    let cmp = Cond::Eq(DataTerm::BVar("Q".to_string()), e);
                    let full = Cond::or(cmp, body);
                    if exists {
                        Cond::Exists("Q".to_string(), Box::new(full))
                    } else {
                        Cond::Forall("Q".to_string(), Box::new(full))
                    }
                } else {
                    body
                }
            },
        )
    }

    fn arb_action() -> impl Strategy<Value = Action> {
        prop_oneof![
            Just(Action::basic("a")),
            Just(Action::basic("b")),
            Just(Action::basic("c")),
            arb_data_term_src().prop_map(|e| Action::Param("s".to_string(), vec![e])),
            arb_data_term_src().prop_map(|e| Action::Param("r".to_string(), vec![e])),
            arb_data_term_src().prop_map(|e| Action::assign("v", e)),
            arb_data_term_src().prop_map(|e| Action::assign("w", e)),
            Just(Action::Tau),
            Just(Action::Delta),
        ]
    }

    fn arb_prob() -> impl Strategy<Value = Prob> {
        prop_oneof![
            Just(Prob::frac(1, 2)),
            Just(Prob::frac(1, 3)),
            Just(Prob::frac(2, 3)),
            Just(Prob::frac(1, 4)),
            Just(Prob::zero()),
            Just(Prob::one()),
        ]
    }

    fn arb_action_set() -> impl Strategy<Value = ActionSet> {
        (
            proptest::sample::subsequence(vec!["a", "b", "c", "s"], 0..=2),
            proptest::sample::subsequence(vec!["v", "w"], 0..=1),
        )
            .prop_map(|(names, assigns)| {
                ActionSet::new(
                    names.into_iter().map(str::to_string),
                    assigns.into_iter().map(str::to_string),
                )
            })
    }

    fn arb_eval_map() -> impl Strategy<Value = EvalMap> {
        (0u64..=8, 0u64..=8).prop_map(|(v, w)| {
            let ctx = DataCtx::new(8, ["v".to_string(), "w".to_string()]).unwrap();
            EvalMap::new(&ctx, [("v".to_string(), v), ("w".to_string(), w)]).unwrap()
        })
    }

    fn arb_proc_term() -> impl Strategy<Value = ProcTerm> {
        let leaf = prop_oneof![arb_action().prop_map(ProcTerm::act), Just(ProcTerm::eps())];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ProcTerm::alt(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ProcTerm::seq(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ProcTerm::par(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ProcTerm::lmerge(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| ProcTerm::cmerge(a, b)),
                (arb_prob(), inner.clone(), inner.clone())
                    .prop_map(|(p, a, b)| ProcTerm::pchoice(p, a, b)),
                (arb_cond_src(), inner.clone()).prop_map(|(c, t)| ProcTerm::guard(c, t)),
                inner.clone().prop_map(ProcTerm::termtest),
                (arb_action_set(), inner.clone()).prop_map(|(s, t)| ProcTerm::encap(s, t)),
                (arb_action_set(), inner.clone()).prop_map(|(s, t)| ProcTerm::hide(s, t)),
                (arb_eval_map(), inner.clone()).prop_map(|(m, t)| ProcTerm::eval_wrap(m, t)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

        /// Parsing a canonically printed term reproduces the term tree
        /// exactly: the printer and the parser are mutually inverse.
        #[test]
        fn printed_terms_reparse_to_the_same_tree(t in arb_proc_term()) {
            let f = base_file();
            let printed = t.to_string();
            let reparsed = f
                .parse_term(&printed)
                .unwrap_or_else(|e| panic!("failed to reparse `{printed}`: {e}"));
            prop_assert_eq!(&reparsed, &t, "printed as `{}`", printed);
        }
    }
}
