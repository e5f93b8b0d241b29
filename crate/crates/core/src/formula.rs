//! Logical formulas over symbolic memory states.
//!
//! This is the output language of the condition generators. Memory states
//! are symbols (lowered to SMT arrays); the only state-valued construction
//! is a single `store` inside [`Formula::StoreEq`], which keeps generated
//! conditions linear in the size of the program.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;

use crate::assertions::{ArithOp, CmpOp, Quantifier};

/// A symbolic memory state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymState(Arc<str>);

impl SymState {
    pub fn new(name: impl AsRef<str>) -> Self {
        SymState(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Name without its prime suffix: `s1''` and `s1'7` have stem `s1`.
    pub fn stem(&self) -> &str {
        let digits = self.0.trim_end_matches(|c: char| c.is_ascii_digit());
        let base = if digits.len() < self.0.len() && digits.ends_with('\'') {
            digits
        } else {
            &self.0
        };
        base.trim_end_matches('\'')
    }
}

impl fmt::Display for SymState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Fresh-name session. Names are a stem followed by primes, so intermediate
/// states of run 1 read `s1`, `s1'`, `s1''`, ... From the sixth prime on the
/// count is written as a number (`s1'6`) to keep names short.
#[derive(Debug, Default)]
pub struct Fresh {
    next_primes: HashMap<String, usize>,
}

impl Fresh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, stem: &str) -> SymState {
        let n = self.next_primes.entry(stem.to_string()).or_insert(0);
        let name = match *n {
            0..=5 => format!("{stem}{}", "'".repeat(*n)),
            k => format!("{stem}'{k}"),
        };
        *n += 1;
        SymState::new(name)
    }

    /// A new state in the same family as `s`.
    pub fn after(&mut self, s: &SymState) -> SymState {
        let stem = s.stem().to_string();
        self.state(&stem)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Nat(BigUint),
    /// Natural logical variable bound by a [`Formula::Quant`].
    Var(String),
    Read(SymState, Box<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn nat(n: u64) -> Term {
        Term::Nat(BigUint::from(n))
    }

    pub fn read(s: SymState, addr: Term) -> Term {
        Term::Read(s, Box::new(addr))
    }

    pub fn arith(op: ArithOp, a: Term, b: Term) -> Term {
        Term::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Term::Nat(_) | Term::Var(_) => 1,
            Term::Read(_, t) => 1 + t.node_count(),
            Term::Arith(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    fn visit_states<'a>(&'a self, f: &mut impl FnMut(&'a SymState)) {
        match self {
            Term::Nat(_) | Term::Var(_) => {}
            Term::Read(s, t) => {
                f(s);
                t.visit_states(f);
            }
            Term::Arith(_, a, b) => {
                a.visit_states(f);
                b.visit_states(f);
            }
        }
    }

    pub fn map_states(&self, f: &impl Fn(&SymState) -> SymState) -> Term {
        match self {
            Term::Nat(_) | Term::Var(_) => self.clone(),
            Term::Read(s, t) => Term::Read(f(s), Box::new(t.map_states(f))),
            Term::Arith(op, a, b) => Term::arith(*op, a.map_states(f), b.map_states(f)),
        }
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Term {
        match self {
            Term::Var(v) if v == from => Term::Var(to.to_string()),
            Term::Nat(_) | Term::Var(_) => self.clone(),
            Term::Read(s, t) => Term::Read(s.clone(), Box::new(t.rename_var(from, to))),
            Term::Arith(op, a, b) => Term::arith(*op, a.rename_var(from, to), b.rename_var(from, to)),
        }
    }

    pub fn mentions_var(&self) -> bool {
        match self {
            Term::Nat(_) => false,
            Term::Var(_) => true,
            Term::Read(_, t) => t.mentions_var(),
            Term::Arith(_, a, b) => a.mentions_var() || b.mentions_var(),
        }
    }

    /// True when the term multiplies two non-constant subterms.
    pub fn is_nonlinear(&self) -> bool {
        match self {
            Term::Nat(_) | Term::Var(_) => false,
            Term::Read(_, t) => t.is_nonlinear(),
            Term::Arith(op, a, b) => {
                (*op == ArithOp::Mul
                    && !matches!(**a, Term::Nat(_))
                    && !matches!(**b, Term::Nat(_)))
                    || a.is_nonlinear()
                    || b.is_nonlinear()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    /// Extensional equality of two states.
    StateEq(SymState, SymState),
    /// `target = set(base, addr, value)`.
    StoreEq {
        target: SymState,
        base: SymState,
        addr: Term,
        value: Term,
    },
    Cmp(CmpOp, Term, Term),
    /// Uninterpreted call-tracking atom `call_y(pre, post)`.
    Call {
        proc: String,
        pre: SymState,
        post: SymState,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Universal quantification over memory states. `triggers` are call atoms
    /// used as an instantiation pattern when the quantifier is kept.
    ForallState {
        states: Vec<SymState>,
        triggers: Vec<Formula>,
        body: Box<Formula>,
    },
    /// Quantifier over a natural logical variable, optionally bounded above.
    Quant {
        kind: Quantifier,
        var: String,
        bound: Option<BigUint>,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn forall(states: Vec<SymState>, body: Formula) -> Formula {
        Formula::ForallState {
            states,
            triggers: Vec::new(),
            body: Box::new(body),
        }
    }

    /// Left-nested conjunction; `True` for an empty list.
    pub fn conj<I: IntoIterator<Item = Formula>>(fs: I) -> Formula {
        fs.into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::StateEq(..) | Formula::Call { .. } => 1,
            Formula::StoreEq { addr, value, .. } => 1 + addr.node_count() + value.node_count(),
            Formula::Cmp(_, a, b) => 1 + a.node_count() + b.node_count(),
            Formula::Not(a) => 1 + a.node_count(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Formula::ForallState { triggers, body, .. } => {
                1 + triggers.iter().map(Formula::node_count).sum::<usize>() + body.node_count()
            }
            Formula::Quant { body, .. } => 1 + body.node_count(),
        }
    }

    /// Visits every state symbol occurrence, bound or free, in order.
    pub fn visit_states<'a>(&'a self, f: &mut impl FnMut(&'a SymState)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::StateEq(a, b) => {
                f(a);
                f(b);
            }
            Formula::StoreEq {
                target,
                base,
                addr,
                value,
            } => {
                f(target);
                f(base);
                addr.visit_states(f);
                value.visit_states(f);
            }
            Formula::Cmp(_, a, b) => {
                a.visit_states(f);
                b.visit_states(f);
            }
            Formula::Call { pre, post, .. } => {
                f(pre);
                f(post);
            }
            Formula::Not(a) => a.visit_states(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_states(f);
                b.visit_states(f);
            }
            Formula::ForallState {
                states,
                triggers,
                body,
            } => {
                for s in states {
                    f(s);
                }
                for t in triggers {
                    t.visit_states(f);
                }
                body.visit_states(f);
            }
            Formula::Quant { body, .. } => body.visit_states(f),
        }
    }

    /// State symbols occurring free.
    pub fn free_states(&self) -> BTreeSet<SymState> {
        let mut out = BTreeSet::new();
        self.collect_free_states(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_states<'a>(&'a self, bound: &mut Vec<&'a SymState>, out: &mut BTreeSet<SymState>) {
        if let Formula::ForallState {
            states,
            triggers,
            body,
        } = self
        {
            let depth = bound.len();
            bound.extend(states.iter());
            for t in triggers {
                t.collect_free_states(bound, out);
            }
            body.collect_free_states(bound, out);
            bound.truncate(depth);
            return;
        }
        let mut direct = Vec::new();
        self.visit_local(&mut |s| direct.push(s));
        for s in direct {
            if !bound.contains(&s) {
                out.insert(s.clone());
            }
        }
        self.for_each_child(&mut |c| c.collect_free_states(bound, out));
    }

    /// Visits states mentioned directly by this node (not by subformulas).
    fn visit_local<'a>(&'a self, f: &mut impl FnMut(&'a SymState)) {
        match self {
            Formula::StateEq(..) | Formula::StoreEq { .. } | Formula::Cmp(..) | Formula::Call { .. } => {
                self.visit_states(f)
            }
            _ => {}
        }
    }

    fn for_each_child<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        match self {
            Formula::Not(a) => f(a),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                f(a);
                f(b);
            }
            Formula::ForallState { triggers, body, .. } => {
                for t in triggers {
                    f(t);
                }
                f(body);
            }
            Formula::Quant { body, .. } => f(body),
            _ => {}
        }
    }

    /// Applies `f` to every state symbol, bound or free.
    pub fn map_states(&self, f: &impl Fn(&SymState) -> SymState) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::StateEq(a, b) => Formula::StateEq(f(a), f(b)),
            Formula::StoreEq {
                target,
                base,
                addr,
                value,
            } => Formula::StoreEq {
                target: f(target),
                base: f(base),
                addr: addr.map_states(f),
                value: value.map_states(f),
            },
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.map_states(f), b.map_states(f)),
            Formula::Call { proc, pre, post } => Formula::Call {
                proc: proc.clone(),
                pre: f(pre),
                post: f(post),
            },
            Formula::Not(a) => Formula::not(a.map_states(f)),
            Formula::And(a, b) => Formula::and(a.map_states(f), b.map_states(f)),
            Formula::Or(a, b) => Formula::or(a.map_states(f), b.map_states(f)),
            Formula::Implies(a, b) => Formula::implies(a.map_states(f), b.map_states(f)),
            Formula::ForallState {
                states,
                triggers,
                body,
            } => Formula::ForallState {
                states: states.iter().map(f).collect(),
                triggers: triggers.iter().map(|t| t.map_states(f)).collect(),
                body: Box::new(body.map_states(f)),
            },
            Formula::Quant {
                kind,
                var,
                bound,
                body,
            } => Formula::Quant {
                kind: *kind,
                var: var.clone(),
                bound: bound.clone(),
                body: Box::new(body.map_states(f)),
            },
        }
    }

    /// Renames free occurrences of one state symbol.
    pub fn subst_state(&self, from: &SymState, to: &SymState) -> Formula {
        match self {
            Formula::ForallState { states, .. } if states.contains(from) => self.clone(),
            Formula::ForallState {
                states,
                triggers,
                body,
            } => Formula::ForallState {
                states: states.clone(),
                triggers: triggers.iter().map(|t| t.subst_state(from, to)).collect(),
                body: Box::new(body.subst_state(from, to)),
            },
            Formula::Not(a) => Formula::not(a.subst_state(from, to)),
            Formula::And(a, b) => Formula::and(a.subst_state(from, to), b.subst_state(from, to)),
            Formula::Or(a, b) => Formula::or(a.subst_state(from, to), b.subst_state(from, to)),
            Formula::Implies(a, b) => {
                Formula::implies(a.subst_state(from, to), b.subst_state(from, to))
            }
            Formula::Quant {
                kind,
                var,
                bound,
                body,
            } => Formula::Quant {
                kind: *kind,
                var: var.clone(),
                bound: bound.clone(),
                body: Box::new(body.subst_state(from, to)),
            },
            atom => atom.map_states(&|s| if s == from { to.clone() } else { s.clone() }),
        }
    }

    /// Renames free occurrences of a logical variable.
    pub fn subst_var(&self, from: &str, to: &str) -> Formula {
        let t = |x: &Term| x.rename_var(from, to);
        match self {
            Formula::True | Formula::False | Formula::StateEq(..) | Formula::Call { .. } => {
                self.clone()
            }
            Formula::StoreEq {
                target,
                base,
                addr,
                value,
            } => Formula::StoreEq {
                target: target.clone(),
                base: base.clone(),
                addr: t(addr),
                value: t(value),
            },
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, t(a), t(b)),
            Formula::Not(a) => Formula::not(a.subst_var(from, to)),
            Formula::And(a, b) => Formula::and(a.subst_var(from, to), b.subst_var(from, to)),
            Formula::Or(a, b) => Formula::or(a.subst_var(from, to), b.subst_var(from, to)),
            Formula::Implies(a, b) => {
                Formula::implies(a.subst_var(from, to), b.subst_var(from, to))
            }
            Formula::ForallState {
                states,
                triggers,
                body,
            } => Formula::ForallState {
                states: states.clone(),
                triggers: triggers.clone(),
                body: Box::new(body.subst_var(from, to)),
            },
            Formula::Quant { var, .. } if var == from => self.clone(),
            Formula::Quant {
                kind,
                var,
                bound,
                body,
            } => Formula::Quant {
                kind: *kind,
                var: var.clone(),
                bound: bound.clone(),
                body: Box::new(body.subst_var(from, to)),
            },
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Formula::ForallState { .. } | Formula::Quant { .. } => true,
            Formula::Not(a) => a.has_quantifier(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.has_quantifier() || b.has_quantifier()
            }
            _ => false,
        }
    }

    /// All call atoms, in traversal order.
    pub fn call_atoms(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        if let Formula::Call { .. } = self {
            out.push(self);
        }
        self.for_each_child(&mut |c| c.collect_calls(out));
    }

    /// All `StoreEq` atoms, in traversal order.
    pub fn store_atoms(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_stores(&mut out);
        out
    }

    fn collect_stores<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        if let Formula::StoreEq { .. } = self {
            out.push(self);
        }
        self.for_each_child(&mut |c| c.collect_stores(out));
    }

    /// Renames every state symbol to `σ0, σ1, ...` by first occurrence, so
    /// that formulas equal up to consistent renaming compare equal.
    pub fn alpha_normalized(&self) -> Formula {
        let mut order: Vec<SymState> = Vec::new();
        self.visit_states(&mut |s| {
            if !order.contains(s) {
                order.push(s.clone());
            }
        });
        self.map_states(&|s| {
            let i = order.iter().position(|o| o == s).unwrap_or(usize::MAX);
            SymState::new(format!("σ{i}"))
        })
    }

    pub fn mentions_nonlinear(&self) -> bool {
        match self {
            Formula::StoreEq { addr, value, .. } => addr.is_nonlinear() || value.is_nonlinear(),
            Formula::Cmp(_, a, b) => a.is_nonlinear() || b.is_nonlinear(),
            Formula::Not(a) => a.mentions_nonlinear(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.mentions_nonlinear() || b.mentions_nonlinear()
            }
            Formula::ForallState { body, .. } | Formula::Quant { body, .. } => {
                body.mentions_nonlinear()
            }
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Nat(n) => write!(f, "{n}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Read(s, t) => write!(f, "{s}({t})"),
            Term::Arith(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::StateEq(a, b) => write!(f, "{a} = {b}"),
            Formula::StoreEq {
                target,
                base,
                addr,
                value,
            } => write!(f, "{target} = set({base}, {addr}, {value})"),
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Call { proc, pre, post } => write!(f, "call_{proc}({pre}, {post})"),
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
            Formula::Implies(a, b) => write!(f, "({a} ==> {b})"),
            Formula::ForallState { states, body, .. } => {
                write!(f, "(forall ")?;
                for (i, s) in states.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ". {body})")
            }
            Formula::Quant {
                kind,
                var,
                bound,
                body,
            } => {
                let q = match kind {
                    Quantifier::Forall => "forall",
                    Quantifier::Exists => "exists",
                };
                match bound {
                    Some(n) => write!(f, "({q} {var} < {n}. {body})"),
                    None => write!(f, "({q} {var}. {body})"),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_names_follow_prime_convention() {
        let mut fresh = Fresh::new();
        let s1 = fresh.state("s1");
        let s1p = fresh.state("s1");
        let mid = fresh.after(&s1p);
        assert_eq!(s1.name(), "s1");
        assert_eq!(s1p.name(), "s1'");
        assert_eq!(mid.name(), "s1''");
        assert_eq!(fresh.state("s2").name(), "s2");
        let late = (0..6).map(|_| fresh.after(&s1)).last().unwrap();
        assert_eq!(late.name(), "s1'8");
        assert_eq!(late.stem(), "s1");
        assert_eq!(fresh.after(&late).name(), "s1'9");
    }

    #[test]
    fn free_states_skip_binders() {
        let s = SymState::new("s");
        let t = SymState::new("t");
        let f = Formula::and(
            Formula::StateEq(s.clone(), t.clone()),
            Formula::forall(vec![t.clone()], Formula::StateEq(t.clone(), s.clone())),
        );
        let free: Vec<_> = f.free_states().into_iter().collect();
        assert_eq!(free, vec![s.clone(), t.clone()]);
        let g = Formula::forall(vec![t.clone()], Formula::StateEq(t, s.clone()));
        assert_eq!(g.free_states().into_iter().collect::<Vec<_>>(), vec![s]);
    }

    #[test]
    fn substitution_respects_shadowing() {
        let s = SymState::new("s");
        let u = SymState::new("u");
        let f = Formula::and(
            Formula::StateEq(s.clone(), s.clone()),
            Formula::forall(vec![s.clone()], Formula::StateEq(s.clone(), s.clone())),
        );
        let g = f.subst_state(&s, &u);
        assert_eq!(
            g,
            Formula::and(
                Formula::StateEq(u.clone(), u.clone()),
                Formula::forall(vec![s.clone()], Formula::StateEq(s.clone(), s))
            )
        );
    }

    #[test]
    fn conj_is_left_nested() {
        assert_eq!(Formula::conj([]), Formula::True);
        assert_eq!(
            Formula::conj([Formula::True, Formula::False, Formula::True]),
            Formula::and(Formula::and(Formula::True, Formula::False), Formula::True)
        );
    }
}
