//! Concrete syntax for annotated programs (`.rl` files).
//!
//! A file is a list of items:
//!
//! ```text
//! proc sum requires true ensures old(x1) >= old(x2) ==> old(x3) = x3 {
//!     if (x1 < x2) { x3 := x3 + x1; x1 := x1 + 1; call sum } else { skip }
//! }
//! relational [sum, sum] requires x1<1> = x1<2> ensures x3<1> = x3<2>
//! property R1 { x1 := 1; call sum } ~ { x1 := 1; call sum }
//!     requires x2<1> = x2<2> ensures x3<1> = x3<2>
//! ```
//!
//! Single-command properties are ordinary Hoare triples and use unary
//! assertion syntax (`x1`, `old(x1)`); relational items use tagged syntax
//! (`x1<k>`, `old(x1<k>)`). The full grammar is documented in the README.

mod lexer;
mod pretty;
mod program;

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::assertions::{ArithOp, Assertion, AssertionSite, CmpOp, LTerm, Quantifier, StateRef};
use crate::ast::{Aexp, Bexp, Com, Loc, LogicOp, ProcName};

use lexer::{lex, Tok, TokKind};
pub use pretty::{pretty, pretty_aexp, pretty_assertion, pretty_bexp, pretty_com, pretty_term};
pub use program::GoalSetError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("arity error: {0}")]
    Arity(String),
    #[error("call to undefined procedure `{0}`")]
    UnresolvedCall(String),
    #[error("duplicate {0}")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(line: usize, col: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, col, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcDecl {
    pub name: ProcName,
    /// `None` when the clause is absent (defaults to `true`).
    pub pre: Option<Assertion>,
    pub post: Option<Assertion>,
    pub body: Com,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelDecl {
    pub procs: Vec<ProcName>,
    pub pre: Assertion,
    pub post: Assertion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub label: String,
    pub commands: Vec<Com>,
    pub pre: Assertion,
    pub post: Assertion,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramFile {
    pub procs: Vec<ProcDecl>,
    pub rel_contracts: Vec<RelDecl>,
    pub properties: Vec<Property>,
}

/// Parses and validates a whole file.
pub fn parse(src: &str) -> Result<ProgramFile, ParseError> {
    let mut p = Parser::new(src)?;
    let file = p.file()?;
    p.resolve_calls(&file)?;
    Ok(file)
}

/// Parses a command on its own. Calls are not resolved.
pub fn parse_com(src: &str) -> Result<Com, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.seq()?;
    p.expect_eof()?;
    Ok(c)
}

/// Parses an assertion and checks it against `site`.
pub fn parse_assertion(src: &str, site: AssertionSite) -> Result<Assertion, ParseError> {
    let mut p = Parser::new(src)?;
    let a = p.checked_assertion(site)?;
    p.expect_eof()?;
    Ok(a)
}

pub fn parse_bexp(src: &str) -> Result<Bexp, ParseError> {
    let mut p = Parser::new(src)?;
    let b = p.bexp()?;
    p.expect_eof()?;
    Ok(b)
}

const KEYWORDS: [&str; 17] = [
    "proc", "requires", "ensures", "relational", "property", "assert", "invariant", "call", "skip", "if",
    "else", "while", "true", "false", "forall", "exists", "old",
];

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || word == "mem"
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    calls: Vec<(String, usize, usize)>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            calls: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(ParseError::new(t.line, t.col, ParseErrorKind::Syntax(msg.into())))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.err_here(format!("expected {wanted}, found {}", self.peek().kind))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek().kind {
            TokKind::Eof => Ok(()),
            _ => self.unexpected("end of input"),
        }
    }

    fn name(&mut self, what: &str) -> PResult<String> {
        match &self.peek().kind {
            TokKind::Ident(s) if !is_reserved(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn loc(&mut self) -> PResult<Loc> {
        match self.peek().kind {
            TokKind::Loc(a) => {
                self.bump();
                Ok(Loc(a))
            }
            _ => self.unexpected("a location"),
        }
    }

    fn num(&mut self) -> PResult<BigUint> {
        match &self.peek().kind {
            TokKind::Num(n) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a number"),
        }
    }

    // ---- items

    fn file(&mut self) -> PResult<ProgramFile> {
        let mut file = ProgramFile::default();
        let mut procs = HashSet::new();
        let mut seqs = HashSet::new();
        let mut labels = HashSet::new();
        loop {
            let start = self.peek().clone();
            let dup = |what: String| Err(ParseError::new(start.line, start.col, ParseErrorKind::Duplicate(what)));
            if self.eat_kw("proc") {
                let d = self.proc_decl()?;
                if !procs.insert(d.name.clone()) {
                    return dup(format!("procedure `{}`", d.name));
                }
                file.procs.push(d);
            } else if self.eat_kw("relational") {
                let d = self.rel_decl()?;
                if !seqs.insert(d.procs.clone()) {
                    return dup(format!("relational contract for [{}]", d.procs.join(", ")));
                }
                file.rel_contracts.push(d);
            } else if self.eat_kw("property") {
                let d = self.property()?;
                if !labels.insert(d.label.clone()) {
                    return dup(format!("property `{}`", d.label));
                }
                file.properties.push(d);
            } else if let TokKind::Eof = self.peek().kind {
                return Ok(file);
            } else {
                return self.unexpected("`proc`, `relational` or `property`");
            }
        }
    }

    fn proc_decl(&mut self) -> PResult<ProcDecl> {
        let name = self.name("a procedure name")?;
        let pre = if self.eat_kw("requires") {
            Some(self.checked_assertion(AssertionSite::Unary)?)
        } else {
            None
        };
        let post = if self.eat_kw("ensures") {
            Some(self.checked_assertion(AssertionSite::UnaryPost)?)
        } else {
            None
        };
        let body = self.block()?;
        Ok(ProcDecl { name, pre, post, body })
    }

    fn rel_decl(&mut self) -> PResult<RelDecl> {
        self.expect_sym("[")?;
        let mut procs = Vec::new();
        loop {
            let t = self.peek().clone();
            let y = self.name("a procedure name")?;
            self.calls.push((y.clone(), t.line, t.col));
            procs.push(y);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("]")?;
        let runs = procs.len();
        let (pre, post) = self.clauses(AssertionSite::RelPre { runs }, AssertionSite::RelPost { runs })?;
        Ok(RelDecl { procs, pre, post })
    }

    fn property(&mut self) -> PResult<Property> {
        let label = self.name("a property label")?;
        let mut commands = vec![self.block()?];
        while self.eat_sym("~") {
            commands.push(self.block()?);
        }
        let n = commands.len();
        let sites = if n == 1 {
            (AssertionSite::Unary, AssertionSite::UnaryPost)
        } else {
            (AssertionSite::RelPre { runs: n }, AssertionSite::RelPost { runs: n })
        };
        let (pre, post) = self.clauses(sites.0, sites.1)?;
        Ok(Property {
            label,
            commands,
            pre,
            post,
        })
    }

    fn clauses(&mut self, pre_site: AssertionSite, post_site: AssertionSite) -> PResult<(Assertion, Assertion)> {
        let pre = if self.eat_kw("requires") {
            self.checked_assertion(pre_site)?
        } else {
            Assertion::tt()
        };
        let post = if self.eat_kw("ensures") {
            self.checked_assertion(post_site)?
        } else {
            Assertion::tt()
        };
        Ok((pre, post))
    }

    fn resolve_calls(&self, file: &ProgramFile) -> PResult<()> {
        let defined: HashSet<&str> = file.procs.iter().map(|p| p.name.as_str()).collect();
        match self.calls.iter().find(|(y, ..)| !defined.contains(y.as_str())) {
            Some((y, line, col)) => Err(ParseError::new(*line, *col, ParseErrorKind::UnresolvedCall(y.clone()))),
            None => Ok(()),
        }
    }

    // ---- commands

    fn block(&mut self) -> PResult<Com> {
        self.expect_sym("{")?;
        let c = self.seq()?;
        self.expect_sym("}")?;
        Ok(c)
    }

    fn seq(&mut self) -> PResult<Com> {
        let mut cs = Vec::new();
        if self.is_sym("}") || matches!(self.peek().kind, TokKind::Eof) {
            return Ok(Com::Skip);
        }
        cs.push(self.com()?);
        while self.eat_sym(";") {
            if self.is_sym("}") || matches!(self.peek().kind, TokKind::Eof) {
                break;
            }
            cs.push(self.com()?);
        }
        Ok(Com::block(cs))
    }

    fn com(&mut self) -> PResult<Com> {
        if self.eat_kw("skip") {
            return Ok(Com::Skip);
        }
        if self.eat_kw("assert") {
            return Ok(Com::Assert(self.checked_assertion(AssertionSite::Unary)?));
        }
        if self.is_kw("call") {
            self.bump();
            let t = self.peek().clone();
            let y = self.name("a procedure name")?;
            self.calls.push((y.clone(), t.line, t.col));
            return Ok(Com::Call(y));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            let t = self.block()?;
            let e = if self.eat_kw("else") { self.block()? } else { Com::Skip };
            return Ok(Com::if_(b, t, e));
        }
        if self.eat_kw("while") {
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            if !self.eat_kw("invariant") {
                return self.err_here("a while loop requires an `invariant` annotation");
            }
            let inv = self.checked_assertion(AssertionSite::Unary)?;
            let body = self.block()?;
            return Ok(Com::while_(b, inv, body));
        }
        if self.is_sym("{") {
            return self.block();
        }
        if self.eat_sym("*") {
            let x = self.loc()?;
            self.expect_sym(":=")?;
            return Ok(Com::AssignIndirect(x, self.aexp()?));
        }
        if let TokKind::Loc(_) = self.peek().kind {
            let x = self.loc()?;
            self.expect_sym(":=")?;
            return Ok(Com::Assign(x, self.aexp()?));
        }
        self.unexpected("a command")
    }

    // ---- arithmetic and boolean expressions

    fn aexp(&mut self) -> PResult<Aexp> {
        let mut a = self.aexp_mul()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Monus
            } else {
                return Ok(a);
            };
            a = Aexp::bin(op, a, self.aexp_mul()?);
        }
    }

    fn aexp_mul(&mut self) -> PResult<Aexp> {
        let mut a = self.aexp_atom()?;
        while self.eat_sym("*") {
            a = Aexp::bin(ArithOp::Mul, a, self.aexp_atom()?);
        }
        Ok(a)
    }

    fn aexp_atom(&mut self) -> PResult<Aexp> {
        match &self.peek().kind {
            TokKind::Num(_) => Ok(Aexp::Nat(self.num()?)),
            TokKind::Loc(_) => Ok(Aexp::Var(self.loc()?)),
            TokKind::Sym("*") => {
                self.bump();
                Ok(Aexp::Deref(self.loc()?))
            }
            TokKind::Sym("&") => {
                self.bump();
                Ok(Aexp::AddrOf(self.loc()?))
            }
            TokKind::Sym("(") => {
                self.bump();
                let a = self.aexp()?;
                self.expect_sym(")")?;
                Ok(a)
            }
            _ => self.unexpected("an arithmetic expression"),
        }
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match &self.peek().kind {
            TokKind::Sym("=") => CmpOp::Eq,
            TokKind::Sym("!=") => CmpOp::Ne,
            TokKind::Sym("<=") => CmpOp::Le,
            TokKind::Sym("<") => CmpOp::Lt,
            TokKind::Sym(">=") => CmpOp::Ge,
            TokKind::Sym(">") => CmpOp::Gt,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn bexp(&mut self) -> PResult<Bexp> {
        let mut b = self.bexp_and()?;
        while self.eat_sym("||") {
            b = Bexp::Logic(LogicOp::Or, Box::new(b), Box::new(self.bexp_and()?));
        }
        Ok(b)
    }

    fn bexp_and(&mut self) -> PResult<Bexp> {
        let mut b = self.bexp_not()?;
        while self.eat_sym("&&") {
            b = Bexp::Logic(LogicOp::And, Box::new(b), Box::new(self.bexp_not()?));
        }
        Ok(b)
    }

    fn bexp_not(&mut self) -> PResult<Bexp> {
        if self.eat_sym("!") {
            return Ok(Bexp::Not(Box::new(self.bexp_not()?)));
        }
        if self.eat_kw("true") {
            return Ok(Bexp::True);
        }
        if self.eat_kw("false") {
            return Ok(Bexp::False);
        }
        if self.is_sym("(") {
            let save = self.pos;
            if let Ok(b) = self.bexp_cmp() {
                return Ok(b);
            }
            self.pos = save;
            self.bump();
            let b = self.bexp()?;
            self.expect_sym(")")?;
            return Ok(b);
        }
        self.bexp_cmp()
    }

    fn bexp_cmp(&mut self) -> PResult<Bexp> {
        let a = self.aexp()?;
        let Some(op) = self.cmp_op() else {
            return self.unexpected("a comparison operator");
        };
        Ok(Bexp::cmp(op, a, self.aexp()?))
    }

    // ---- assertions

    fn checked_assertion(&mut self, site: AssertionSite) -> PResult<Assertion> {
        let start = self.peek().clone();
        let a = self.assertion()?;
        a.check(site).map_err(|e| {
            let kind = match e {
                crate::assertions::AssertionError::UnboundVar(v) => {
                    ParseErrorKind::Syntax(format!("unbound logical variable `{v}`"))
                }
                other => ParseErrorKind::Arity(format!("{other} ({})", site_name(site))),
            };
            ParseError::new(start.line, start.col, kind)
        })?;
        Ok(a)
    }

    fn assertion(&mut self) -> PResult<Assertion> {
        let a = self.assn_or()?;
        if self.eat_sym("==>") {
            return Ok(Assertion::implies(a, self.assertion()?));
        }
        Ok(a)
    }

    fn assn_or(&mut self) -> PResult<Assertion> {
        let mut a = self.assn_and()?;
        while self.eat_sym("||") {
            a = Assertion::or(a, self.assn_and()?);
        }
        Ok(a)
    }

    fn assn_and(&mut self) -> PResult<Assertion> {
        let mut a = self.assn_not()?;
        while self.eat_sym("&&") {
            a = Assertion::and(a, self.assn_not()?);
        }
        Ok(a)
    }

    fn assn_not(&mut self) -> PResult<Assertion> {
        if self.eat_sym("!") {
            return Ok(Assertion::Not(Box::new(self.assn_not()?)));
        }
        for (kw, kind) in [("forall", Quantifier::Forall), ("exists", Quantifier::Exists)] {
            if self.eat_kw(kw) {
                let var = self.name("a variable name")?;
                let bound = if self.eat_sym("<") { Some(self.num()?) } else { None };
                self.expect_sym(".")?;
                let body = self.assertion()?;
                return Ok(Assertion::Quant {
                    kind,
                    var,
                    bound,
                    body: Box::new(body),
                });
            }
        }
        if self.eat_kw("true") {
            return Ok(Assertion::Bool(true));
        }
        if self.eat_kw("false") {
            return Ok(Assertion::Bool(false));
        }
        if self.is_sym("(") {
            let save = self.pos;
            if let Ok(a) = self.assn_cmp() {
                return Ok(a);
            }
            self.pos = save;
            self.bump();
            let a = self.assertion()?;
            self.expect_sym(")")?;
            return Ok(a);
        }
        self.assn_cmp()
    }

    fn assn_cmp(&mut self) -> PResult<Assertion> {
        let a = self.term()?;
        let Some(op) = self.cmp_op() else {
            return self.unexpected("a comparison operator");
        };
        Ok(Assertion::cmp(op, a, self.term()?))
    }

    fn term(&mut self) -> PResult<LTerm> {
        let mut t = self.term_mul()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Monus
            } else {
                return Ok(t);
            };
            t = LTerm::arith(op, t, self.term_mul()?);
        }
    }

    fn term_mul(&mut self) -> PResult<LTerm> {
        let mut t = self.term_atom(false)?;
        while self.eat_sym("*") {
            t = LTerm::arith(ArithOp::Mul, t, self.term_atom(false)?);
        }
        Ok(t)
    }

    /// `<k>` immediately after the previous token.
    fn tag(&mut self) -> PResult<Option<usize>> {
        let prev_end = self.toks[self.pos.saturating_sub(1)].end;
        let adjacent = |t: &Tok, end: usize| t.start == end;
        let (lt, n, gt) = (self.peek().clone(), self.peek_at(1).clone(), self.peek_at(2).clone());
        let is_tag = matches!(lt.kind, TokKind::Sym("<"))
            && matches!(n.kind, TokKind::Num(_))
            && matches!(gt.kind, TokKind::Sym(">"))
            && adjacent(&lt, prev_end)
            && adjacent(&n, lt.end)
            && adjacent(&gt, n.end);
        if !is_tag {
            return Ok(None);
        }
        self.bump();
        let k = self.num()?;
        self.bump();
        match k.to_usize() {
            Some(k) if k >= 1 => Ok(Some(k)),
            _ => Err(ParseError::new(n.line, n.col, ParseErrorKind::Arity(format!("run tag <{k}> must be at least 1")))),
        }
    }

    fn state_ref(tag: Option<usize>, old: bool) -> StateRef {
        match (tag, old) {
            (None, false) => StateRef::Cur,
            (None, true) => StateRef::Old,
            (Some(k), false) => StateRef::Tag(k),
            (Some(k), true) => StateRef::OldTag(k),
        }
    }

    fn term_atom(&mut self, old: bool) -> PResult<LTerm> {
        match self.peek().kind.clone() {
            TokKind::Num(_) if !old => Ok(LTerm::Const(self.num()?)),
            TokKind::Loc(a) => {
                self.bump();
                let s = Self::state_ref(self.tag()?, old);
                Ok(LTerm::Read(s, Box::new(LTerm::Const(a.into()))))
            }
            TokKind::Sym("*") => {
                self.bump();
                let Loc(a) = self.loc()?;
                let s = Self::state_ref(self.tag()?, old);
                Ok(LTerm::deref(s, a))
            }
            TokKind::Ident(w) if w == "mem" => {
                self.bump();
                let s = Self::state_ref(self.tag()?, old);
                self.expect_sym("[")?;
                let idx = self.term()?;
                self.expect_sym("]")?;
                Ok(LTerm::Read(s, Box::new(idx)))
            }
            TokKind::Ident(w) if w == "old" && !old => {
                self.bump();
                self.expect_sym("(")?;
                let t = self.term_atom(true)?;
                self.expect_sym(")")?;
                Ok(t)
            }
            TokKind::Ident(w) if !is_reserved(&w) && !old => {
                self.bump();
                Ok(LTerm::Var(w))
            }
            TokKind::Sym("(") if !old => {
                self.bump();
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ if old => self.unexpected("a location, `*x`, or `mem[...]` inside `old(...)`"),
            _ => self.unexpected("a term"),
        }
    }
}

fn site_name(site: AssertionSite) -> String {
    match site {
        AssertionSite::Unary => "only the current state is available here".into(),
        AssertionSite::UnaryPost => "only the current state and old(...) are available here".into(),
        AssertionSite::RelPre { runs } => format!("expected tags <1>..<{runs}> on current states"),
        AssertionSite::RelPost { runs } => format!("expected tags <1>..<{runs}>, optionally under old(...)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSUM: &str = "proc sum requires true ensures old(x1) >= old(x2) ==> old(x3) = x3 {
        if (x1 < x2) { x3 := x3 + x1; x1 := x1 + 1; call sum } else { skip }
    }";

    fn csum() -> Com {
        Com::if_(
            Bexp::cmp(CmpOp::Lt, Aexp::var(1), Aexp::var(2)),
            Com::block([
                Com::Assign(Loc(3), Aexp::bin(ArithOp::Add, Aexp::var(3), Aexp::var(1))),
                Com::Assign(Loc(1), Aexp::bin(ArithOp::Add, Aexp::var(1), Aexp::nat(1))),
                Com::Call("sum".into()),
            ]),
            Com::Skip,
        )
    }

    #[test]
    fn csum_body() {
        let f = parse(CSUM).unwrap();
        assert_eq!(f.procs.len(), 1);
        assert_eq!(f.procs[0].body, csum());
        let post = f.procs[0].post.clone().unwrap();
        assert_eq!(
            post,
            Assertion::implies(
                Assertion::cmp(CmpOp::Ge, LTerm::loc(StateRef::Old, 1), LTerm::loc(StateRef::Old, 2)),
                Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Old, 3), LTerm::loc(StateRef::Cur, 3)),
            )
        );
    }

    #[test]
    fn while_needs_invariant() {
        let e = parse_com("while (x1 < 3) { skip }").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(ref m) if m.contains("invariant")), "{e}");
        assert!(parse_com("while (x1 < 3) invariant true { skip }").is_ok());
    }

    #[test]
    fn tags_need_adjacency() {
        let a = parse_assertion("x1<2> = x1 <2", AssertionSite::RelPre { runs: 2 });
        // `x1 <2` is a comparison, so the right operand is untagged
        assert!(matches!(a.unwrap_err().kind, ParseErrorKind::Syntax(_) | ParseErrorKind::Arity(_)));
        let a = parse_assertion("x1<2> = x1<1>", AssertionSite::RelPre { runs: 2 }).unwrap();
        assert_eq!(
            a,
            Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Tag(2), 1), LTerm::loc(StateRef::Tag(1), 1))
        );
        let b = parse_assertion("x1 < 2", AssertionSite::Unary).unwrap();
        assert_eq!(b, Assertion::cmp(CmpOp::Lt, LTerm::loc(StateRef::Cur, 1), LTerm::constant(2)));
    }

    #[test]
    fn arity_errors() {
        let e = parse("property P { skip } ~ { skip } requires x1 = 0").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity(_)), "{e}");
        let e = parse("proc f requires old(x1) = 0 { skip }").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity(_)), "{e}");
        let e = parse("relational [f] requires x1<2> = 0 proc f { skip }").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity(_)), "{e}");
        assert_eq!((e.line, e.col), (1, 25));
    }

    #[test]
    fn resolution_and_duplicates() {
        let e = parse("proc f { call g }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnresolvedCall("g".into()));
        assert_eq!((e.line, e.col), (1, 15));
        let e = parse("proc f { skip } proc f { skip }").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Duplicate(_)));
        let e = parse("proc f { skip } relational [f] relational [f]").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Duplicate(_)));
        let e = parse("property A { skip } property A { skip }").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Duplicate(_)));
    }

    #[test]
    fn old_forms() {
        let a = parse_assertion("old(*x1) = old(mem[x2]) + old(x3<1>)", AssertionSite::RelPost { runs: 1 });
        assert!(matches!(a.unwrap_err().kind, ParseErrorKind::Arity(_)));
        let a = parse_assertion("old(*x1) = old(mem[x2])", AssertionSite::UnaryPost).unwrap();
        assert_eq!(
            a,
            Assertion::cmp(
                CmpOp::Eq,
                LTerm::deref(StateRef::Old, 1),
                LTerm::Read(StateRef::Old, Box::new(LTerm::loc(StateRef::Cur, 2))),
            )
        );
    }

    #[test]
    fn parenthesised_terms_and_assertions() {
        let a = parse_assertion("(x1 + 1) * 2 = 4 && (x2 = 0 || true)", AssertionSite::Unary).unwrap();
        let Assertion::And(l, r) = a else { panic!() };
        assert!(matches!(*l, Assertion::Cmp(CmpOp::Eq, LTerm::Arith(ArithOp::Mul, ..), _)));
        assert!(matches!(*r, Assertion::Or(..)));
        let b = parse_bexp("!((x1 + 1) < 2) && (x2 = 0)").unwrap();
        assert!(matches!(b, Bexp::Logic(LogicOp::And, ..)));
    }

    #[test]
    fn quantifiers() {
        let a = parse_assertion("forall v < 3. mem[v] = 0 ==> true", AssertionSite::Unary).unwrap();
        let Assertion::Quant { bound, body, .. } = a else { panic!() };
        assert_eq!(bound, Some(3u8.into()));
        assert!(matches!(*body, Assertion::Implies(..)));
        let e = parse_assertion("v = 0", AssertionSite::Unary).unwrap_err();
        assert!(e.to_string().contains("unbound"));
    }

    #[test]
    fn sequences_and_blocks() {
        assert_eq!(parse_com("").unwrap(), Com::Skip);
        assert_eq!(parse_com("skip;").unwrap(), Com::Skip);
        let c = parse_com("{ x1 := 1; x2 := 2 }; x3 := 3").unwrap();
        assert!(matches!(c, Com::Seq(ref a, _) if matches!(**a, Com::Seq(..))));
        let c = parse_com("*x1 := &x2 - 1").unwrap();
        assert_eq!(
            c,
            Com::AssignIndirect(Loc(1), Aexp::bin(ArithOp::Monus, Aexp::AddrOf(Loc(2)), Aexp::nat(1)))
        );
        let c = parse_com("if (true) { skip }").unwrap();
        assert_eq!(c, Com::if_(Bexp::True, Com::Skip, Com::Skip));
    }
}
