//! Abstract syntax and semantic domains of the language: locations, memory
//! states, expressions, commands and the procedure/contract environments.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::assertions::{ArithOp, Assertion, CmpOp};

/// Location `x_i`; its address is `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc(pub u64);

impl Loc {
    pub fn addr(self) -> BigUint {
        BigUint::from(self.0)
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` is not a location (expected x<digits>)")]
pub struct BadLocation(pub String);

/// Parses a location token `x<digits>` into its address.
pub fn addr_of(token: &str) -> Result<u64, BadLocation> {
    let digits = token
        .strip_prefix('x')
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| BadLocation(token.to_string()))?;
    digits.parse().map_err(|_| BadLocation(token.to_string()))
}

static ZERO: BigUint = BigUint::ZERO;

/// Total map from natural addresses to natural values, zero by default.
///
/// Only non-zero bindings are stored, so the derived equality is
/// extensional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemState {
    cells: BTreeMap<BigUint, BigUint>,
}

impl MemState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, addr: &BigUint) -> &BigUint {
        self.cells.get(addr).unwrap_or(&ZERO)
    }

    pub fn get_u64(&self, addr: u64) -> &BigUint {
        self.get(&BigUint::from(addr))
    }

    /// `σ[i/n]`; the receiver is left untouched.
    pub fn set(&self, addr: BigUint, value: BigUint) -> MemState {
        let mut next = self.clone();
        next.store(addr, value);
        next
    }

    /// In-place update used by the interpreter.
    pub fn store(&mut self, addr: BigUint, value: BigUint) {
        if value.is_zero() {
            self.cells.remove(&addr);
        } else {
            self.cells.insert(addr, value);
        }
    }

    /// Non-zero bindings in address order.
    pub fn bindings(&self) -> impl Iterator<Item = (&BigUint, &BigUint)> {
        self.cells.iter()
    }

    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> MemState {
        let mut m = MemState::new();
        for (a, v) in pairs {
            m.store(BigUint::from(a), BigUint::from(v));
        }
        m
    }
}

impl fmt::Display for MemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cells.is_empty() {
            return write!(f, "(all zero)");
        }
        let mut first = true;
        for (a, v) in &self.cells {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "x{a}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Aexp {
    Nat(BigUint),
    Var(Loc),
    Deref(Loc),
    AddrOf(Loc),
    Bin(ArithOp, Box<Aexp>, Box<Aexp>),
}

impl Aexp {
    pub fn nat(n: u64) -> Aexp {
        Aexp::Nat(BigUint::from(n))
    }

    pub fn var(i: u64) -> Aexp {
        Aexp::Var(Loc(i))
    }

    pub fn bin(op: ArithOp, a: Aexp, b: Aexp) -> Aexp {
        Aexp::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn size(&self) -> usize {
        match self {
            Aexp::Bin(_, a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Bexp {
    True,
    False,
    Cmp(CmpOp, Aexp, Aexp),
    Logic(LogicOp, Box<Bexp>, Box<Bexp>),
    Not(Box<Bexp>),
}

impl Bexp {
    pub fn cmp(op: CmpOp, a: Aexp, b: Aexp) -> Bexp {
        Bexp::Cmp(op, a, b)
    }

    pub fn size(&self) -> usize {
        match self {
            Bexp::True | Bexp::False => 1,
            Bexp::Cmp(_, a, b) => 1 + a.size() + b.size(),
            Bexp::Logic(_, a, b) => 1 + a.size() + b.size(),
            Bexp::Not(b) => 1 + b.size(),
        }
    }
}

pub type ProcName = String;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Com {
    Skip,
    Assign(Loc, Aexp),
    /// `*x_i := a`
    AssignIndirect(Loc, Aexp),
    Seq(Box<Com>, Box<Com>),
    Assert(Assertion),
    If(Bexp, Box<Com>, Box<Com>),
    While {
        cond: Bexp,
        invariant: Assertion,
        body: Box<Com>,
    },
    Call(ProcName),
}

impl Com {
    pub fn seq(a: Com, b: Com) -> Com {
        Com::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of the given commands; `skip` when empty.
    pub fn block<I: IntoIterator<Item = Com>>(cs: I) -> Com {
        let mut cs: Vec<Com> = cs.into_iter().collect();
        let Some(mut acc) = cs.pop() else {
            return Com::Skip;
        };
        while let Some(c) = cs.pop() {
            acc = Com::seq(c, acc);
        }
        acc
    }

    pub fn if_(b: Bexp, t: Com, e: Com) -> Com {
        Com::If(b, Box::new(t), Box::new(e))
    }

    pub fn while_(cond: Bexp, invariant: Assertion, body: Com) -> Com {
        Com::While {
            cond,
            invariant,
            body: Box::new(body),
        }
    }

    /// Number of AST nodes, counting expressions.
    pub fn size(&self) -> usize {
        match self {
            Com::Skip | Com::Call(_) | Com::Assert(_) => 1,
            Com::Assign(_, a) | Com::AssignIndirect(_, a) => 1 + a.size(),
            Com::Seq(a, b) => 1 + a.size() + b.size(),
            Com::If(b, t, e) => 1 + b.size() + t.size() + e.size(),
            Com::While { cond, body, .. } => 1 + cond.size() + body.size(),
        }
    }

    /// Names of all procedures called (transitively through the syntax only).
    pub fn calls(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Com::Call(y) => out.push(y),
            Com::Seq(a, b) | Com::If(_, a, b) => {
                a.collect_calls(out);
                b.collect_calls(out);
            }
            Com::While { body, .. } => body.collect_calls(out),
            _ => {}
        }
    }

    /// Same command with every annotation replaced by `true`.
    pub fn erase_annotations(&self) -> Com {
        match self {
            Com::Assert(_) => Com::Assert(Assertion::tt()),
            Com::Seq(a, b) => Com::seq(a.erase_annotations(), b.erase_annotations()),
            Com::If(b, t, e) => Com::if_(b.clone(), t.erase_annotations(), e.erase_annotations()),
            Com::While { cond, body, .. } => {
                Com::while_(cond.clone(), Assertion::tt(), body.erase_annotations())
            }
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown procedure `{0}`")]
pub struct UnboundProc(pub String);

/// Procedure environment: procedure names to bodies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcEnv {
    bodies: BTreeMap<ProcName, Com>,
}

impl ProcEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<ProcName>, body: Com) {
        self.bodies.insert(name.into(), body);
    }

    pub fn body(&self, name: &str) -> Result<&Com, UnboundProc> {
        self.bodies.get(name).ok_or_else(|| UnboundProc(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bodies.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProcName, &Com)> {
        self.bodies.iter()
    }

    /// First call target (reachable from any body) that has no body.
    pub fn unresolved_call(&self) -> Option<&str> {
        self.bodies
            .values()
            .flat_map(|b| b.calls())
            .find(|y| !self.contains(y))
    }
}

impl FromIterator<(ProcName, Com)> for ProcEnv {
    fn from_iter<T: IntoIterator<Item = (ProcName, Com)>>(iter: T) -> Self {
        ProcEnv {
            bodies: iter.into_iter().collect(),
        }
    }
}

/// Pre/postcondition pair of one procedure. The precondition mentions only
/// the current state; the postcondition the old and current states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub pre: Assertion,
    pub post: Assertion,
}

impl Default for Contract {
    fn default() -> Self {
        Contract {
            pre: Assertion::tt(),
            post: Assertion::tt(),
        }
    }
}

/// Contract environment; undeclared procedures get `(true, true)`.
///
/// When `track_calls` is set, every use of a postcondition also records the
/// call through an uninterpreted call atom (the contract lifting used for
/// relational verification).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContractEnv {
    contracts: BTreeMap<ProcName, Contract>,
    pub track_calls: bool,
}

impl ContractEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<ProcName>, contract: Contract) {
        self.contracts.insert(name.into(), contract);
    }

    pub fn get(&self, name: &str) -> std::borrow::Cow<'_, Contract> {
        match self.contracts.get(name) {
            Some(c) => std::borrow::Cow::Borrowed(c),
            None => std::borrow::Cow::Owned(Contract::default()),
        }
    }

    pub fn declared(&self) -> impl Iterator<Item = (&ProcName, &Contract)> {
        self.contracts.iter()
    }
}
