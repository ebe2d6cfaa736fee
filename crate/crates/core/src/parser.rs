//! Concrete syntax.
//!
//! ```text
//! script   := { macroDef } formula [ "." ]
//! macroDef := ident [ "(" vars ")" ] (":=" | ":-") formula "."
//! formula  := conj { "or" conj }
//! conj     := unit { "&" unit }
//! unit     := "(" formula ")" | atom
//! atom     := "true" | "false" | pred "(" terms ")" | term op term | ident [ "(" terms ")" ]
//! op       := "=" | "neq" | "in" | "nin" | "=<" | "<" | ">" | ">=" | "is"
//! term     := sum ; sum := prod { ("+" | "-") prod } ; prod := unary { "*" unary }
//! unary    := "-" unary | int | Var | ident [ "(" terms ")" ] | set | list | "(" sum ")"
//! set      := "{}" | "{" terms [ "/" term ] "}"
//! list     := "[" [ terms ] "]"
//! ```
//!
//! `%` starts a comment. Identifiers starting with an uppercase letter or `_`
//! are variables; `_` alone is an anonymous variable. A call to a name that
//! is not a built-in predicate is a macro call.

use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{ModelError, ParseError};
use crate::term::{int_product, sort_of, Constraint, Formula, Sort, Term, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 19] = [
    ":=", ":-", "=<", ">=", "(", ")", "{", "}", "[", "]", ",", "/", ".", "&", "+", "-", "*", "=", "<",
];

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Int(s.parse().unwrap()), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            let s: String = chars[start..i].iter().collect();
            let tok = if c.is_uppercase() || c == '_' { Tok::Var(s) } else { Tok::Ident(s) };
            out.push((tok, pos));
            continue;
        }
        if c == '>' {
            let sym = if chars.get(i + 1) == Some(&'=') { ">=" } else { ">" };
            for _ in 0..sym.len() {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            out.push((Tok::Sym(sym), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                for _ in 0..s.len() {
                    { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
                }
                out.push((Tok::Sym(s), pos));
            }
            None => {
                return Err(ParseError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

/// A parsed formula before macro expansion and sort inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawFormula {
    True,
    False,
    Atom(Constraint, Pos),
    Call(String, Vec<Term>, Pos),
    And(Vec<RawFormula>),
    Or(Vec<RawFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: RawFormula,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceScript {
    pub macros: Vec<MacroDef>,
    pub goal: RawFormula,
}

const PREDICATES: [&str; 8] = ["un", "disj", "size", "inters", "subset", "diff", "nun", "ndisj"];
const KEYWORDS: [&str; 6] = ["or", "neq", "in", "nin", "is", "true"];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    anon: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let p = self.pos();
        Err(ParseError::Syntax { line: p.line, column: p.column, message: message.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn script(&mut self) -> PResult<SourceScript> {
        let mut macros = Vec::new();
        while let Some(m) = self.try_macro()? {
            if macros.iter().any(|d: &MacroDef| d.name == m.name) {
                return Err(ParseError::Syntax {
                    line: m.pos.line,
                    column: m.pos.column,
                    message: format!("macro `{}` defined twice", m.name),
                });
            }
            macros.push(m);
        }
        let goal = self.formula()?;
        if self.is_sym(".") {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {}", describe(self.peek())));
        }
        Ok(SourceScript { macros, goal })
    }

    /// `name(P1,...,Pn) :- body.` if one starts here.
    fn try_macro(&mut self) -> PResult<Option<MacroDef>> {
        let start = self.i;
        let pos = self.pos();
        let Tok::Ident(name) = self.peek().clone() else { return Ok(None) };
        self.bump();
        let mut params = Vec::new();
        if self.is_sym("(") {
            self.bump();
            loop {
                match self.bump() {
                    Tok::Var(v) => params.push(v),
                    _ => {
                        self.i = start;
                        return Ok(None);
                    }
                }
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            if !self.is_sym(")") {
                self.i = start;
                return Ok(None);
            }
            self.bump();
        }
        if !(self.is_sym(":=") || self.is_sym(":-")) {
            self.i = start;
            return Ok(None);
        }
        self.bump();
        let body = self.formula()?;
        self.expect(".")?;
        Ok(Some(MacroDef { name, params, body, pos }))
    }

    fn formula(&mut self) -> PResult<RawFormula> {
        let mut parts = vec![self.conj()?];
        while self.is_ident("or") {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { RawFormula::Or(parts) })
    }

    fn conj(&mut self) -> PResult<RawFormula> {
        let mut parts = vec![self.unit()?];
        while self.is_sym("&") {
            self.bump();
            parts.push(self.unit()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { RawFormula::And(parts) })
    }

    fn unit(&mut self) -> PResult<RawFormula> {
        if self.is_sym("(") {
            // An atom may itself start with a parenthesized term.
            let start = self.i;
            match self.atom() {
                Ok(a) => return Ok(a),
                Err(first) => {
                    self.i = start;
                    self.bump();
                    return match self.formula() {
                        Ok(f) => {
                            self.expect(")")?;
                            Ok(f)
                        }
                        Err(second) => Err(later(first, second)),
                    };
                }
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<RawFormula> {
        let pos = self.pos();
        if self.is_ident("true") {
            self.bump();
            return Ok(RawFormula::True);
        }
        if self.is_ident("false") {
            self.bump();
            return Ok(RawFormula::False);
        }
        if let Tok::Ident(name) = self.peek().clone() {
            let next_paren = matches!(self.toks.get(self.i + 1), Some((Tok::Sym("("), _)));
            if PREDICATES.contains(&name.as_str()) && next_paren {
                self.bump();
                let args = self.args()?;
                return Ok(RawFormula::Atom(self.predicate(&name, args, pos)?, pos));
            }
        }
        let start = self.i;
        let lhs_res = self.term();
        if let Ok(lhs) = lhs_res {
            if let Some(op) = self.relop() {
                let rhs = self.term()?;
                return Ok(RawFormula::Atom(infix(op, lhs, rhs), pos));
            }
        }
        // Macro call.
        self.i = start;
        if let Tok::Ident(name) = self.peek().clone() {
            if !KEYWORDS.contains(&name.as_str()) {
                self.bump();
                let args = if self.is_sym("(") { self.args()? } else { Vec::new() };
                return Ok(RawFormula::Call(name, args, pos));
            }
        }
        self.i = start;
        let _ = self.term()?;
        self.err(format!("expected a relation, found {}", describe(self.peek())))
    }

    fn relop(&mut self) -> Option<&'static str> {
        let op = match self.peek() {
            Tok::Sym(s @ ("=" | "=<" | "<" | ">" | ">=")) => *s,
            Tok::Ident(s) => match s.as_str() {
                "neq" => "neq",
                "in" => "in",
                "nin" => "nin",
                "is" => "is",
                _ => return None,
            },
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn predicate(&self, name: &str, args: Vec<Term>, pos: Pos) -> PResult<Constraint> {
        let want = match name {
            "un" | "inters" | "diff" | "nun" => 3,
            _ => 2,
        };
        if args.len() != want {
            return Err(ParseError::Syntax {
                line: pos.line,
                column: pos.column,
                message: format!("`{name}` takes {want} arguments, got {}", args.len()),
            });
        }
        let mut a = args.into_iter();
        let mut next = || a.next().unwrap();
        Ok(match name {
            "un" => Constraint::Un(next(), next(), next()),
            "inters" => Constraint::Inters(next(), next(), next()),
            "diff" => Constraint::Diff(next(), next(), next()),
            "nun" => Constraint::Nun(next(), next(), next()),
            "disj" => Constraint::Disj(next(), next()),
            "size" => Constraint::Size(next(), next()),
            "subset" => Constraint::Subset(next(), next()),
            _ => Constraint::Ndisj(next(), next()),
        })
    }

    fn args(&mut self) -> PResult<Vec<Term>> {
        self.expect("(")?;
        let mut out = vec![self.term()?];
        while self.is_sym(",") {
            self.bump();
            out.push(self.term()?);
        }
        self.expect(")")?;
        Ok(out)
    }

    fn term(&mut self) -> PResult<Term> {
        let mut acc = self.product()?;
        loop {
            if self.is_sym("+") {
                self.bump();
                acc = Term::add(acc, self.product()?);
            } else if self.is_sym("-") {
                self.bump();
                acc = Term::sub(acc, self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut acc = self.unary()?;
        while self.is_sym("*") {
            let pos = self.pos();
            self.bump();
            let rhs = self.unary()?;
            acc = int_product(acc, rhs).map_err(|e| ParseError::Syntax {
                line: pos.line,
                column: pos.column,
                message: e.to_string(),
            })?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult<Term> {
        if self.is_sym("-") {
            self.bump();
            if let Tok::Int(n) = self.peek().clone() {
                self.bump();
                return Ok(Term::Int(-n));
            }
            return Ok(Term::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            Tok::Var(v) => {
                self.bump();
                let name = if v == "_" {
                    self.anon += 1;
                    format!("_Anon{}", self.anon)
                } else {
                    v
                };
                Ok(Term::var(name, Sort::Any))
            }
            Tok::Ident(f) if !KEYWORDS.contains(&f.as_str()) || f == "true" => {
                self.bump();
                let args = if self.is_sym("(") { self.args()? } else { Vec::new() };
                Ok(Term::Ur(f, args))
            }
            Tok::Sym("{") => {
                self.bump();
                if self.is_sym("}") {
                    self.bump();
                    return Ok(Term::Empty);
                }
                let mut elems = vec![self.term()?];
                while self.is_sym(",") {
                    self.bump();
                    elems.push(self.term()?);
                }
                let tail = if self.is_sym("/") {
                    self.bump();
                    self.term()?
                } else {
                    Term::Empty
                };
                self.expect("}")?;
                Ok(Term::set_with_tail(elems, tail))
            }
            Tok::Sym("[") => {
                self.bump();
                let mut elems = Vec::new();
                if !self.is_sym("]") {
                    elems.push(self.term()?);
                    while self.is_sym(",") {
                        self.bump();
                        elems.push(self.term()?);
                    }
                }
                self.expect("]")?;
                Ok(Term::Ur("list".into(), elems))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                self.expect(")")?;
                Ok(t)
            }
            other => self.err(format!("expected a term, found {}", describe(&other))),
        }
    }
}

fn infix(op: &str, l: Term, r: Term) -> Constraint {
    match op {
        "=" | "is" => Constraint::Eq(l, r),
        "neq" => Constraint::Neq(l, r),
        "in" => Constraint::In(l, r),
        "nin" => Constraint::Nin(l, r),
        "=<" => Constraint::Leq(l, r),
        "<" => Constraint::Lt(l, r),
        ">" => Constraint::Gt(l, r),
        _ => Constraint::Geq(l, r),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Of two syntax errors, the one further into the input.
fn later(a: ParseError, b: ParseError) -> ParseError {
    let key = |e: &ParseError| match e {
        ParseError::Syntax { line, column, .. } => (*line, *column),
        _ => (0, 0),
    };
    if key(&b) >= key(&a) { b } else { a }
}

/// Parses a script and checks every atom against the sort table.
pub fn parse(text: &str) -> Result<SourceScript, ParseError> {
    let mut p = Parser { toks: lex(text)?, i: 0, anon: 0 };
    let script = p.script()?;
    for m in &script.macros {
        check_literals(&m.body)?;
    }
    check_literals(&script.goal)?;
    check_macro_order(&script)?;
    Ok(script)
}

fn sort_error(pos: Pos, e: ModelError) -> ParseError {
    ParseError::Sort { line: pos.line, column: pos.column, message: e.to_string() }
}

fn check_literals(f: &RawFormula) -> Result<(), ParseError> {
    match f {
        RawFormula::Atom(c, pos) => c.check_sorts().map_err(|e| sort_error(*pos, e)),
        RawFormula::Call(_, args, pos) => {
            for a in args {
                sort_of(a).map_err(|e| sort_error(*pos, e))?;
            }
            Ok(())
        }
        RawFormula::And(fs) | RawFormula::Or(fs) => fs.iter().try_for_each(check_literals),
        RawFormula::True | RawFormula::False => Ok(()),
    }
}

fn calls(f: &RawFormula, out: &mut Vec<String>) {
    match f {
        RawFormula::Call(n, _, _) => out.push(n.clone()),
        RawFormula::And(fs) | RawFormula::Or(fs) => fs.iter().for_each(|g| calls(g, out)),
        _ => {}
    }
}

/// Macro bodies may only call macros defined before them.
fn check_macro_order(s: &SourceScript) -> Result<(), ParseError> {
    for (i, m) in s.macros.iter().enumerate() {
        let mut cs = Vec::new();
        calls(&m.body, &mut cs);
        for c in cs {
            if s.macros[i..].iter().any(|d| d.name == c) {
                return Err(ParseError::RecursiveMacro(c));
            }
        }
    }
    Ok(())
}

struct Expander<'a> {
    macros: &'a [MacroDef],
    used: BTreeSet<String>,
    counter: usize,
}

impl Expander<'_> {
    fn fresh_local(&mut self, base: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("_{}{}", base.trim_start_matches('_'), self.counter);
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn expand_one(&mut self, f: &RawFormula) -> Result<RawFormula, ParseError> {
        Ok(match f {
            RawFormula::Call(name, args, pos) => {
                let def = self
                    .macros
                    .iter()
                    .find(|d| &d.name == name)
                    .ok_or_else(|| ParseError::UnknownMacro(name.clone()))?;
                if def.params.len() != args.len() {
                    return Err(ParseError::ArityMismatch {
                        name: name.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                    });
                }
                let mut map: BTreeMap<String, Term> =
                    def.params.iter().cloned().zip(args.iter().cloned()).collect();
                let mut locals = Vec::new();
                raw_vars(&def.body, &mut locals);
                for v in locals {
                    if !map.contains_key(&v) {
                        let n = self.fresh_local(&v);
                        map.insert(v, Term::var(n, Sort::Any));
                    }
                }
                let body = substitute_raw(&def.body, &map, *pos);
                self.expand_one(&body)?
            }
            RawFormula::And(fs) => RawFormula::And(fs.iter().map(|g| self.expand_one(g)).collect::<Result<_, _>>()?),
            RawFormula::Or(fs) => RawFormula::Or(fs.iter().map(|g| self.expand_one(g)).collect::<Result<_, _>>()?),
            other => other.clone(),
        })
    }
}

fn raw_vars(f: &RawFormula, out: &mut Vec<String>) {
    let mut vs = Vec::new();
    match f {
        RawFormula::Atom(c, _) => c.collect_vars(&mut vs),
        RawFormula::Call(_, args, _) => args.iter().for_each(|a| a.collect_vars(&mut vs)),
        RawFormula::And(fs) | RawFormula::Or(fs) => fs.iter().for_each(|g| raw_vars(g, out)),
        _ => {}
    }
    for v in vs {
        if !out.contains(&v.name) {
            out.push(v.name);
        }
    }
}

/// Instantiates a macro body; atoms take the call site's position.
fn substitute_raw(f: &RawFormula, map: &BTreeMap<String, Term>, pos: Pos) -> RawFormula {
    let sub = |t: &Term| {
        t.map_vars(&mut |v| map.get(&v.name).cloned().unwrap_or_else(|| Term::Var(v.clone())))
    };
    match f {
        RawFormula::Atom(c, _) => RawFormula::Atom(c.map_terms(sub), pos),
        RawFormula::Call(n, args, _) => RawFormula::Call(n.clone(), args.iter().map(sub).collect(), pos),
        RawFormula::And(fs) => RawFormula::And(fs.iter().map(|g| substitute_raw(g, map, pos)).collect()),
        RawFormula::Or(fs) => RawFormula::Or(fs.iter().map(|g| substitute_raw(g, map, pos)).collect()),
        other => other.clone(),
    }
}

/// Inlines every macro call (locals renamed apart per call site) and infers
/// variable sorts.
pub fn expand_macros(s: &SourceScript) -> Result<Formula, ParseError> {
    let mut used = BTreeSet::new();
    let mut names = Vec::new();
    raw_vars(&s.goal, &mut names);
    for m in &s.macros {
        raw_vars(&m.body, &mut names);
    }
    used.extend(names);
    let mut ex = Expander { macros: &s.macros, used, counter: 0 };
    let goal = ex.expand_one(&s.goal)?;
    infer_sorts(&goal)
}

/// Parses and expands in one go.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    expand_macros(&parse(text)?)
}

/// Union-find over variable names, each class carrying at most one sort.
#[derive(Default)]
struct Sorts {
    parent: BTreeMap<String, String>,
    sort: BTreeMap<String, Sort>,
}

impl Sorts {
    fn find(&mut self, x: &str) -> String {
        let p = self.parent.get(x).cloned().unwrap_or_else(|| x.to_string());
        if p == x {
            return p;
        }
        let r = self.find(&p);
        self.parent.insert(x.to_string(), r.clone());
        r
    }

    fn require(&mut self, x: &str, s: Sort) -> Result<(), String> {
        if s == Sort::Any {
            return Ok(());
        }
        let r = self.find(x);
        match self.sort.get(&r) {
            Some(&old) if old != s => Err(format!("variable {x} used both as {old} and as {s}")),
            _ => {
                self.sort.insert(r, s);
                Ok(())
            }
        }
    }

    fn union(&mut self, x: &str, y: &str) -> Result<(), String> {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return Ok(());
        }
        let sx = self.sort.remove(&rx);
        self.parent.insert(rx, ry.clone());
        if let Some(s) = sx {
            self.require(&ry, s).map_err(|_| format!("variables {x} and {y} have different sorts"))?;
        }
        Ok(())
    }

    fn get(&mut self, x: &str) -> Sort {
        let r = self.find(x);
        self.sort.get(&r).copied().unwrap_or(Sort::Any)
    }

    /// Requirements imposed by a term's own structure, and `t : s` at the top.
    fn term(&mut self, t: &Term, s: Sort) -> Result<(), String> {
        match t {
            Term::Var(v) => self.require(&v.name, s),
            Term::Empty | Term::Int(_) => Ok(()),
            Term::Cons(e, rest) => {
                self.term(e, Sort::Any)?;
                self.term(rest, Sort::Set)
            }
            Term::Neg(a) | Term::Scale(_, a) => self.term(a, Sort::Int),
            Term::Add(a, b) | Term::Sub(a, b) => {
                self.term(a, Sort::Int)?;
                self.term(b, Sort::Int)
            }
            Term::Ur(_, args) => args.iter().try_for_each(|a| self.term(a, Sort::Any)),
        }
    }

    /// Shape sort of a non-variable term.
    fn shape(t: &Term) -> Sort {
        match t {
            Term::Var(_) => Sort::Any,
            other => sort_of(other).unwrap_or(Sort::Any),
        }
    }

    fn constraint(&mut self, c: &Constraint) -> Result<(), String> {
        use Constraint::*;
        match c {
            Eq(a, b) => {
                match (a, b) {
                    (Term::Var(x), Term::Var(y)) => self.union(&x.name, &y.name)?,
                    _ => {
                        self.term(a, Self::shape(b))?;
                        self.term(b, Self::shape(a))?;
                    }
                }
                Ok(())
            }
            Neq(a, b) => {
                self.term(a, Sort::Any)?;
                self.term(b, Sort::Any)
            }
            In(x, s) | Nin(x, s) => {
                self.term(x, Sort::Any)?;
                self.term(s, Sort::Set)
            }
            Un(a, b, c) | Inters(a, b, c) | Diff(a, b, c) | Nun(a, b, c) => {
                self.term(a, Sort::Set)?;
                self.term(b, Sort::Set)?;
                self.term(c, Sort::Set)
            }
            Disj(a, b) | Subset(a, b) | Ndisj(a, b) => {
                self.term(a, Sort::Set)?;
                self.term(b, Sort::Set)
            }
            Size(a, n) => {
                self.term(a, Sort::Set)?;
                self.term(n, Sort::Int)
            }
            Leq(a, b) | Lt(a, b) | Gt(a, b) | Geq(a, b) => {
                self.term(a, Sort::Int)?;
                self.term(b, Sort::Int)
            }
        }
    }
}

fn raw_atoms<'a>(f: &'a RawFormula, out: &mut Vec<(&'a Constraint, Pos)>) {
    match f {
        RawFormula::Atom(c, p) => out.push((c, *p)),
        RawFormula::And(fs) | RawFormula::Or(fs) => fs.iter().for_each(|g| raw_atoms(g, out)),
        _ => {}
    }
}

fn infer_sorts(f: &RawFormula) -> Result<Formula, ParseError> {
    let mut atoms = Vec::new();
    raw_atoms(f, &mut atoms);
    let mut sorts = Sorts::default();
    // Equalities between variables can carry a sort learned later, so
    // iterate until nothing changes.
    loop {
        let before = sorts.sort.clone();
        for (c, pos) in &atoms {
            sorts.constraint(c).map_err(|m| ParseError::Sort {
                line: pos.line,
                column: pos.column,
                message: m,
            })?;
        }
        if before == sorts.sort {
            break;
        }
    }
    let out = lower(f, &mut sorts);
    for (c, pos) in raw_atoms_of(&out, f) {
        c.check_sorts().map_err(|e| sort_error(pos, e))?;
    }
    Ok(out)
}

fn raw_atoms_of<'a>(out: &'a Formula, raw: &RawFormula) -> Vec<(&'a Constraint, Pos)> {
    let mut ra = Vec::new();
    raw_atoms(raw, &mut ra);
    out.atoms().into_iter().zip(ra.into_iter().map(|(_, p)| p)).collect()
}

fn lower(f: &RawFormula, sorts: &mut Sorts) -> Formula {
    match f {
        RawFormula::True => Formula::True,
        RawFormula::False => Formula::False,
        RawFormula::Atom(c, _) => Formula::Atom(c.map_terms(|t| {
            t.map_vars(&mut |v| Term::Var(Var::new(v.name.clone(), sorts.get(&v.name))))
        })),
        RawFormula::Call(..) => unreachable!("macros are expanded before lowering"),
        RawFormula::And(fs) => Formula::and(fs.iter().map(|g| lower(g, sorts)).collect::<Vec<_>>()),
        RawFormula::Or(fs) => Formula::or(fs.iter().map(|g| lower(g, sorts)).collect::<Vec<_>>()),
    }
}
