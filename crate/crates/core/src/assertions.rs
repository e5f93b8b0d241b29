//! First-order assertion language over natural-valued memory states.
//!
//! Assertions name the memory states they talk about through [`StateRef`]s:
//! `Cur`/`Old` in unary contracts, `Tag(k)`/`OldTag(k)` in relational ones.
//! The same assertion can be evaluated against concrete states (for the
//! bounded oracle) or translated into a [`Formula`] over symbolic states
//! (for verification condition generation).

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::ast::MemState;
use crate::formula::{Formula, SymState, Term};

/// Which memory state a read refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateRef {
    Cur,
    Old,
    /// Run `k` (1-based). Pre-state inside a relational precondition,
    /// post-state inside a relational postcondition.
    Tag(usize),
    /// Pre-state of run `k` inside a relational postcondition.
    OldTag(usize),
}

impl fmt::Display for StateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateRef::Cur => write!(f, "current state"),
            StateRef::Old => write!(f, "old state"),
            StateRef::Tag(k) => write!(f, "state <{k}>"),
            StateRef::OldTag(k) => write!(f, "old state <{k}>"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Mul,
    /// Truncated subtraction on naturals.
    Monus,
}

impl ArithOp {
    pub fn apply(self, a: &BigUint, b: &BigUint) -> BigUint {
        match self {
            ArithOp::Add => a + b,
            ArithOp::Mul => a * b,
            ArithOp::Monus => {
                if a >= b {
                    a - b
                } else {
                    BigUint::zero()
                }
            }
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Mul => "*",
            ArithOp::Monus => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Le,
        CmpOp::Lt,
        CmpOp::Ge,
        CmpOp::Gt,
    ];
}

/// Natural-valued logical term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LTerm {
    Const(BigUint),
    /// `σ(t)` for the state designated by the `StateRef`.
    Read(StateRef, Box<LTerm>),
    Arith(ArithOp, Box<LTerm>, Box<LTerm>),
    Var(String),
}

impl LTerm {
    pub fn constant(n: u64) -> LTerm {
        LTerm::Const(BigUint::from(n))
    }

    /// Read of location `x_i` in `state`.
    pub fn loc(state: StateRef, i: u64) -> LTerm {
        LTerm::Read(state, Box::new(LTerm::constant(i)))
    }

    /// `*x_i` in `state`, i.e. `σ(σ(i))`.
    pub fn deref(state: StateRef, i: u64) -> LTerm {
        LTerm::Read(state, Box::new(LTerm::loc(state, i)))
    }

    pub fn arith(op: ArithOp, a: LTerm, b: LTerm) -> LTerm {
        LTerm::Arith(op, Box::new(a), Box::new(b))
    }

    fn collect_states(&self, out: &mut BTreeSet<StateRef>) {
        match self {
            LTerm::Const(_) | LTerm::Var(_) => {}
            LTerm::Read(s, t) => {
                out.insert(*s);
                t.collect_states(out);
            }
            LTerm::Arith(_, a, b) => {
                a.collect_states(out);
                b.collect_states(out);
            }
        }
    }

    fn map_states(&self, f: &impl Fn(StateRef) -> StateRef) -> LTerm {
        match self {
            LTerm::Const(_) | LTerm::Var(_) => self.clone(),
            LTerm::Read(s, t) => LTerm::Read(f(*s), Box::new(t.map_states(f))),
            LTerm::Arith(op, a, b) => {
                LTerm::Arith(*op, Box::new(a.map_states(f)), Box::new(b.map_states(f)))
            }
        }
    }

    fn free_vars<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            LTerm::Const(_) => {}
            LTerm::Var(v) => {
                if !bound.contains(&v.as_str()) {
                    out.insert(v.clone());
                }
            }
            LTerm::Read(_, t) => t.free_vars(bound, out),
            LTerm::Arith(_, a, b) => {
                a.free_vars(bound, out);
                b.free_vars(bound, out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Assertion {
    Bool(bool),
    Cmp(CmpOp, LTerm, LTerm),
    And(Box<Assertion>, Box<Assertion>),
    Or(Box<Assertion>, Box<Assertion>),
    Not(Box<Assertion>),
    Implies(Box<Assertion>, Box<Assertion>),
    /// Quantifier over a natural logical variable, optionally bounded
    /// (`v < bound`). Only bounded quantifiers are executable by the oracle.
    Quant {
        kind: Quantifier,
        var: String,
        bound: Option<BigUint>,
        body: Box<Assertion>,
    },
}

/// Where an assertion is used, which fixes the state references it may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertionSite {
    /// Preconditions, `assert` and loop invariants.
    Unary,
    /// Postconditions of procedure contracts and single-run properties.
    UnaryPost,
    RelPre { runs: usize },
    RelPost { runs: usize },
}

impl AssertionSite {
    pub fn allows(self, s: StateRef) -> bool {
        match (self, s) {
            (AssertionSite::Unary, StateRef::Cur) => true,
            (AssertionSite::UnaryPost, StateRef::Cur | StateRef::Old) => true,
            (AssertionSite::RelPre { runs }, StateRef::Tag(k)) => k >= 1 && k <= runs,
            (AssertionSite::RelPost { runs }, StateRef::Tag(k) | StateRef::OldTag(k)) => {
                k >= 1 && k <= runs
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssertionError {
    #[error("arity error: {state} is not available here")]
    Arity { state: StateRef },
    #[error("unbound logical variable `{0}`")]
    UnboundVar(String),
    #[error("quantifier over `{0}` has no bound; the oracle only evaluates bounded quantifiers")]
    UnboundedQuantifier(String),
}

impl Assertion {
    pub fn tt() -> Assertion {
        Assertion::Bool(true)
    }

    pub fn cmp(op: CmpOp, a: LTerm, b: LTerm) -> Assertion {
        Assertion::Cmp(op, a, b)
    }

    pub fn and(a: Assertion, b: Assertion) -> Assertion {
        Assertion::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Assertion, b: Assertion) -> Assertion {
        Assertion::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Assertion, b: Assertion) -> Assertion {
        Assertion::Implies(Box::new(a), Box::new(b))
    }

    pub fn negate(a: Assertion) -> Assertion {
        Assertion::Not(Box::new(a))
    }

    /// The set of state references this assertion mentions.
    pub fn states(&self) -> BTreeSet<StateRef> {
        let mut out = BTreeSet::new();
        self.collect_states(&mut out);
        out
    }

    fn collect_states(&self, out: &mut BTreeSet<StateRef>) {
        match self {
            Assertion::Bool(_) => {}
            Assertion::Cmp(_, a, b) => {
                a.collect_states(out);
                b.collect_states(out);
            }
            Assertion::And(a, b) | Assertion::Or(a, b) | Assertion::Implies(a, b) => {
                a.collect_states(out);
                b.collect_states(out);
            }
            Assertion::Not(a) => a.collect_states(out),
            Assertion::Quant { body, .. } => body.collect_states(out),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Assertion::Bool(_) => {}
            Assertion::Cmp(_, a, b) => {
                a.free_vars(bound, out);
                b.free_vars(bound, out);
            }
            Assertion::And(a, b) | Assertion::Or(a, b) | Assertion::Implies(a, b) => {
                a.collect_free_vars(bound, out);
                b.collect_free_vars(bound, out);
            }
            Assertion::Not(a) => a.collect_free_vars(bound, out),
            Assertion::Quant { var, body, .. } => {
                bound.push(var);
                body.collect_free_vars(bound, out);
                bound.pop();
            }
        }
    }

    /// Checks that every state reference is legal at `site` and that the
    /// assertion is closed.
    pub fn check(&self, site: AssertionSite) -> Result<(), AssertionError> {
        if let Some(bad) = self.states().into_iter().find(|s| !site.allows(*s)) {
            return Err(AssertionError::Arity { state: bad });
        }
        if let Some(v) = self.free_vars().into_iter().next() {
            return Err(AssertionError::UnboundVar(v));
        }
        Ok(())
    }

    /// Renames state references, e.g. to view a single-run relational
    /// assertion as a unary one.
    pub fn map_states(&self, f: &impl Fn(StateRef) -> StateRef) -> Assertion {
        match self {
            Assertion::Bool(b) => Assertion::Bool(*b),
            Assertion::Cmp(op, a, b) => Assertion::Cmp(*op, a.map_states(f), b.map_states(f)),
            Assertion::And(a, b) => Assertion::and(a.map_states(f), b.map_states(f)),
            Assertion::Or(a, b) => Assertion::or(a.map_states(f), b.map_states(f)),
            Assertion::Implies(a, b) => Assertion::implies(a.map_states(f), b.map_states(f)),
            Assertion::Not(a) => Assertion::negate(a.map_states(f)),
            Assertion::Quant {
                kind,
                var,
                bound,
                body,
            } => Assertion::Quant {
                kind: *kind,
                var: var.clone(),
                bound: bound.clone(),
                body: Box::new(body.map_states(f)),
            },
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Assertion::Bool(_) | Assertion::Cmp(..) => true,
            Assertion::And(a, b) | Assertion::Or(a, b) | Assertion::Implies(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Assertion::Not(a) => a.is_quantifier_free(),
            Assertion::Quant { .. } => false,
        }
    }
}

/// Assignment of concrete memory states to the state references of an assertion.
pub trait ConcreteBinding {
    fn state(&self, s: StateRef) -> Option<&MemState>;
}

/// Concrete binding given as a slice of pairs.
pub struct Bindings<'a>(pub &'a [(StateRef, &'a MemState)]);

impl ConcreteBinding for Bindings<'_> {
    fn state(&self, s: StateRef) -> Option<&MemState> {
        self.0.iter().find(|(r, _)| *r == s).map(|(_, m)| *m)
    }
}

/// Evaluates a closed assertion under the natural-number interpretation.
pub fn eval_assertion(a: &Assertion, binding: &impl ConcreteBinding) -> Result<bool, AssertionError> {
    let mut env = Vec::new();
    eval_in(a, binding, &mut env)
}

fn eval_in(
    a: &Assertion,
    b: &impl ConcreteBinding,
    env: &mut Vec<(String, BigUint)>,
) -> Result<bool, AssertionError> {
    Ok(match a {
        Assertion::Bool(v) => *v,
        Assertion::Cmp(op, x, y) => {
            let x = eval_term(x, b, env)?;
            let y = eval_term(y, b, env)?;
            op.holds(&x, &y)
        }
        Assertion::And(x, y) => eval_in(x, b, env)? && eval_in(y, b, env)?,
        Assertion::Or(x, y) => eval_in(x, b, env)? || eval_in(y, b, env)?,
        Assertion::Implies(x, y) => !eval_in(x, b, env)? || eval_in(y, b, env)?,
        Assertion::Not(x) => !eval_in(x, b, env)?,
        Assertion::Quant {
            kind,
            var,
            bound,
            body,
        } => {
            let bound = bound
                .as_ref()
                .ok_or_else(|| AssertionError::UnboundedQuantifier(var.clone()))?;
            let n = bound
                .to_u64()
                .ok_or_else(|| AssertionError::UnboundedQuantifier(var.clone()))?;
            let want = matches!(kind, Quantifier::Exists);
            let mut result = !want;
            for v in 0..n {
                env.push((var.clone(), BigUint::from(v)));
                let r = eval_in(body, b, env);
                env.pop();
                if r? == want {
                    result = want;
                    break;
                }
            }
            result
        }
    })
}

fn eval_term(
    t: &LTerm,
    b: &impl ConcreteBinding,
    env: &[(String, BigUint)],
) -> Result<BigUint, AssertionError> {
    Ok(match t {
        LTerm::Const(n) => n.clone(),
        LTerm::Var(v) => env
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, val)| val.clone())
            .ok_or_else(|| AssertionError::UnboundVar(v.clone()))?,
        LTerm::Read(s, addr) => {
            let addr = eval_term(addr, b, env)?;
            let mem = b.state(*s).ok_or(AssertionError::Arity { state: *s })?;
            mem.get(&addr).clone()
        }
        LTerm::Arith(op, x, y) => op.apply(&eval_term(x, b, env)?, &eval_term(y, b, env)?),
    })
}

/// Translates an assertion into a formula over symbolic states.
pub fn translate(
    a: &Assertion,
    binding: &impl Fn(StateRef) -> Option<SymState>,
) -> Result<Formula, AssertionError> {
    Ok(match a {
        Assertion::Bool(true) => Formula::True,
        Assertion::Bool(false) => Formula::False,
        Assertion::Cmp(op, x, y) => {
            Formula::Cmp(*op, translate_term(x, binding)?, translate_term(y, binding)?)
        }
        Assertion::And(x, y) => Formula::and(translate(x, binding)?, translate(y, binding)?),
        Assertion::Or(x, y) => Formula::or(translate(x, binding)?, translate(y, binding)?),
        Assertion::Implies(x, y) => {
            Formula::implies(translate(x, binding)?, translate(y, binding)?)
        }
        Assertion::Not(x) => Formula::not(translate(x, binding)?),
        Assertion::Quant {
            kind,
            var,
            bound,
            body,
        } => Formula::Quant {
            kind: *kind,
            var: var.clone(),
            bound: bound.clone(),
            body: Box::new(translate(body, binding)?),
        },
    })
}

pub fn translate_term(
    t: &LTerm,
    binding: &impl Fn(StateRef) -> Option<SymState>,
) -> Result<Term, AssertionError> {
    Ok(match t {
        LTerm::Const(n) => Term::Nat(n.clone()),
        LTerm::Var(v) => Term::Var(v.clone()),
        LTerm::Read(s, addr) => {
            let sym = binding(*s).ok_or(AssertionError::Arity { state: *s })?;
            Term::read(sym, translate_term(addr, binding)?)
        }
        LTerm::Arith(op, x, y) => {
            Term::Arith(*op, Box::new(translate_term(x, binding)?), Box::new(translate_term(y, binding)?))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(pairs: &[(u64, u64)]) -> MemState {
        let mut m = MemState::new();
        for (a, v) in pairs {
            m = m.set(BigUint::from(*a), BigUint::from(*v));
        }
        m
    }

    #[test]
    fn equal_reads_across_runs() {
        let a = Assertion::cmp(
            CmpOp::Eq,
            LTerm::loc(StateRef::Tag(1), 3),
            LTerm::loc(StateRef::Tag(2), 3),
        );
        let s1 = state(&[(3, 5)]);
        let s2 = state(&[(3, 5), (1, 9)]);
        let b = Bindings(&[(StateRef::Tag(1), &s1), (StateRef::Tag(2), &s2)]);
        assert!(eval_assertion(&a, &b).unwrap());
    }

    #[test]
    fn increment_relative_to_old() {
        // x1 = old(x1) + 1
        let a = Assertion::cmp(
            CmpOp::Eq,
            LTerm::loc(StateRef::Cur, 1),
            LTerm::arith(ArithOp::Add, LTerm::loc(StateRef::Old, 1), LTerm::constant(1)),
        );
        let post = state(&[(1, 5)]);
        let pre = state(&[(1, 4)]);
        let b = Bindings(&[(StateRef::Cur, &post), (StateRef::Old, &pre)]);
        assert!(eval_assertion(&a, &b).unwrap());
    }

    #[test]
    fn false_antecedent() {
        // old(x1) >= old(x2) ==> old(x3) = x3
        let a = Assertion::implies(
            Assertion::cmp(CmpOp::Ge, LTerm::loc(StateRef::Old, 1), LTerm::loc(StateRef::Old, 2)),
            Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Old, 3), LTerm::loc(StateRef::Cur, 3)),
        );
        let pre = state(&[(1, 2), (2, 5), (3, 1)]);
        let post = state(&[(3, 77)]);
        let b = Bindings(&[(StateRef::Cur, &post), (StateRef::Old, &pre)]);
        assert!(eval_assertion(&a, &b).unwrap());
    }

    #[test]
    fn missing_state_is_arity_error() {
        let a = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Old, 1), LTerm::constant(0));
        let post = MemState::new();
        let b = Bindings(&[(StateRef::Cur, &post)]);
        assert_eq!(
            eval_assertion(&a, &b),
            Err(AssertionError::Arity { state: StateRef::Old })
        );
    }

    #[test]
    fn unbounded_quantifier_rejected_by_evaluator() {
        let a = Assertion::Quant {
            kind: Quantifier::Forall,
            var: "v".into(),
            bound: None,
            body: Box::new(Assertion::tt()),
        };
        let s = MemState::new();
        let b = Bindings(&[(StateRef::Cur, &s)]);
        assert!(matches!(
            eval_assertion(&a, &b),
            Err(AssertionError::UnboundedQuantifier(_))
        ));
    }

    #[test]
    fn bounded_quantifiers() {
        // forall v < 3. mem[v] <= 2  and  exists v < 3. mem[v] = 2
        let s = state(&[(0, 1), (1, 2)]);
        let b = Bindings(&[(StateRef::Cur, &s)]);
        let read_v = LTerm::Read(StateRef::Cur, Box::new(LTerm::Var("v".into())));
        let all = Assertion::Quant {
            kind: Quantifier::Forall,
            var: "v".into(),
            bound: Some(BigUint::from(3u8)),
            body: Box::new(Assertion::cmp(CmpOp::Le, read_v.clone(), LTerm::constant(2))),
        };
        let some = Assertion::Quant {
            kind: Quantifier::Exists,
            var: "v".into(),
            bound: Some(BigUint::from(3u8)),
            body: Box::new(Assertion::cmp(CmpOp::Eq, read_v, LTerm::constant(2))),
        };
        assert!(eval_assertion(&all, &b).unwrap());
        assert!(eval_assertion(&some, &b).unwrap());
    }

    #[test]
    fn site_arity_rules() {
        let tagged = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Tag(3), 1), LTerm::constant(0));
        assert!(tagged.check(AssertionSite::RelPre { runs: 2 }).is_err());
        assert!(tagged.check(AssertionSite::RelPre { runs: 3 }).is_ok());
        let old_tag = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::OldTag(1), 1), LTerm::constant(0));
        assert!(old_tag.check(AssertionSite::RelPre { runs: 1 }).is_err());
        assert!(old_tag.check(AssertionSite::RelPost { runs: 1 }).is_ok());
        let old = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Old, 1), LTerm::constant(0));
        assert!(old.check(AssertionSite::Unary).is_err());
        assert!(old.check(AssertionSite::UnaryPost).is_ok());
        let open = Assertion::cmp(CmpOp::Eq, LTerm::Var("k".into()), LTerm::constant(0));
        assert_eq!(
            open.check(AssertionSite::Unary),
            Err(AssertionError::UnboundVar("k".into()))
        );
    }

    #[test]
    fn translate_maps_reads_to_symbolic_states() {
        let a = Assertion::cmp(
            CmpOp::Eq,
            LTerm::loc(StateRef::Tag(1), 3),
            LTerm::loc(StateRef::Tag(2), 3),
        );
        let s1 = SymState::new("s1'");
        let s2 = SymState::new("s2'");
        let f = translate(&a, &|r| match r {
            StateRef::Tag(1) => Some(s1.clone()),
            StateRef::Tag(2) => Some(s2.clone()),
            _ => None,
        })
        .unwrap();
        assert_eq!(
            f,
            Formula::Cmp(
                CmpOp::Eq,
                Term::read(s1.clone(), Term::nat(3)),
                Term::read(s2.clone(), Term::nat(3))
            )
        );
        assert_eq!(translate(&Assertion::tt(), &|_| None).unwrap(), Formula::True);
        assert!(translate(&a, &|_| None).is_err());
    }
}
