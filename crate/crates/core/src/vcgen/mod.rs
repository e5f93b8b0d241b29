//! Verification condition generation for Hoare triples.
//!
//! [`tc`] builds the main condition in continuation-passing style: it is
//! handed a context `f` and applies it exactly once, to the formula relating
//! the pre-state and post-state of the command. Conditionals combine both
//! branches under that single application, so the result stays linear in
//! the size of the program. [`ta`] collects the auxiliary obligations
//! (assertions, invariants, callee preconditions) and [`tf`] the obligations
//! of every procedure body against its contract.

pub mod naive;

use thiserror::Error;

use crate::assertions::{translate, Assertion, AssertionError, AssertionSite, StateRef};
use crate::ast::{Aexp, Bexp, Com, ContractEnv, LogicOp, ProcEnv};
use crate::formula::{Formula, Fresh, SymState, Term};

/// Continuation handed to [`tc`]. `FnOnce` because it is applied exactly once.
pub type Cont<'a> = Box<dyn FnOnce(Formula, &mut Fresh) -> Formula + 'a>;

/// A proof obligation: the conjunction of the hypotheses implies the
/// conclusion, for all values of the free state symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub label: String,
    pub hypotheses: Vec<Formula>,
    pub conclusion: Formula,
}

impl Goal {
    pub fn as_formula(&self) -> Formula {
        let hyps = Formula::conj(self.hypotheses.iter().cloned());
        Formula::implies(hyps, self.conclusion.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcError {
    #[error("{0}")]
    Assertion(#[from] AssertionError),
    #[error("unknown procedure `{0}`")]
    UnboundProc(String),
    #[error("expected {expected} commands and states, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub fn aexp_term(a: &Aexp, s: &SymState) -> Term {
    match a {
        Aexp::Nat(n) => Term::Nat(n.clone()),
        Aexp::Var(x) => Term::read(s.clone(), Term::Nat(x.addr())),
        Aexp::Deref(x) => Term::read(s.clone(), Term::read(s.clone(), Term::Nat(x.addr()))),
        Aexp::AddrOf(x) => Term::Nat(x.addr()),
        Aexp::Bin(op, l, r) => Term::arith(*op, aexp_term(l, s), aexp_term(r, s)),
    }
}

/// `b` evaluated in `s`, as a formula (the `b ≡ true` guard).
pub fn bexp_formula(b: &Bexp, s: &SymState) -> Formula {
    match b {
        Bexp::True => Formula::True,
        Bexp::False => Formula::False,
        Bexp::Cmp(op, l, r) => Formula::Cmp(*op, aexp_term(l, s), aexp_term(r, s)),
        Bexp::Logic(LogicOp::And, l, r) => Formula::and(bexp_formula(l, s), bexp_formula(r, s)),
        Bexp::Logic(LogicOp::Or, l, r) => Formula::or(bexp_formula(l, s), bexp_formula(r, s)),
        Bexp::Not(b) => Formula::not(bexp_formula(b, s)),
    }
}

/// A one-state assertion (precondition, `assert`, invariant) at `s`.
pub fn at_state(p: &Assertion, s: &SymState) -> Result<Formula, AssertionError> {
    translate(p, &|r| (r == StateRef::Cur).then(|| s.clone()))
}

/// A two-state postcondition at `(pre, post)`.
pub fn at_states(q: &Assertion, pre: &SymState, post: &SymState) -> Result<Formula, AssertionError> {
    translate(q, &|r| match r {
        StateRef::Old => Some(pre.clone()),
        StateRef::Cur => Some(post.clone()),
        _ => None,
    })
}

pub(crate) fn callee_pre(env: &ContractEnv, y: &str, s: &SymState) -> Result<Formula, AssertionError> {
    at_state(&env.get(y).pre, s)
}

pub(crate) fn callee_post(
    env: &ContractEnv,
    y: &str,
    s: &SymState,
    s2: &SymState,
) -> Result<Formula, AssertionError> {
    let post = at_states(&env.get(y).post, s, s2)?;
    Ok(if env.track_calls {
        Formula::and(
            post,
            Formula::Call {
                proc: y.to_string(),
                pre: s.clone(),
                post: s2.clone(),
            },
        )
    } else {
        post
    })
}

/// Main verification condition for `c` between `s` and `s2`.
pub fn tc(
    c: &Com,
    s: &SymState,
    s2: &SymState,
    env: &ContractEnv,
    fresh: &mut Fresh,
    f: Cont<'_>,
) -> Result<Formula, VcError> {
    Ok(match c {
        Com::Skip => f(Formula::StateEq(s.clone(), s2.clone()), fresh),
        Com::Assign(x, a) => f(
            Formula::StoreEq {
                target: s2.clone(),
                base: s.clone(),
                addr: Term::Nat(x.addr()),
                value: aexp_term(a, s),
            },
            fresh,
        ),
        Com::AssignIndirect(x, a) => f(
            Formula::StoreEq {
                target: s2.clone(),
                base: s.clone(),
                addr: Term::read(s.clone(), Term::Nat(x.addr())),
                value: aexp_term(a, s),
            },
            fresh,
        ),
        Com::Assert(p) => f(
            Formula::and(at_state(p, s)?, Formula::StateEq(s.clone(), s2.clone())),
            fresh,
        ),
        Com::Seq(c0, c1) => {
            let mid = fresh.after(s);
            let body = nested(c0, s, &mid, c1, &mid, s2, env, fresh, Box::new(|p1, p2, fresh| {
                f(Formula::and(p1, p2), fresh)
            }))?;
            Formula::forall(vec![mid], body)
        }
        Com::If(b, c0, c1) => {
            let guard = bexp_formula(b, s);
            nested(c0, s, s2, c1, s, s2, env, fresh, Box::new(move |p1, p2, fresh| {
                f(
                    Formula::and(
                        Formula::implies(guard.clone(), p1),
                        Formula::implies(Formula::not(guard), p2),
                    ),
                    fresh,
                )
            }))?
        }
        Com::Call(y) => f(
            Formula::and(callee_pre(env, y, s)?, callee_post(env, y, s, s2)?),
            fresh,
        ),
        Com::While {
            cond, invariant, ..
        } => f(
            Formula::and(
                Formula::and(at_state(invariant, s)?, at_state(invariant, s2)?),
                Formula::not(bexp_formula(cond, s2)),
            ),
            fresh,
        ),
    })
}

type Cont2<'a> = Box<dyn FnOnce(Formula, Formula, &mut Fresh) -> Formula + 'a>;

/// `tc(c0, a, a2, λp1. tc(c1, b, b2, λp2. join(p1, p2)))`.
#[allow(clippy::too_many_arguments)]
fn nested(
    c0: &Com,
    a: &SymState,
    a2: &SymState,
    c1: &Com,
    b: &SymState,
    b2: &SymState,
    env: &ContractEnv,
    fresh: &mut Fresh,
    join: Cont2<'_>,
) -> Result<Formula, VcError> {
    // Errors raised inside the continuation surface through this slot.
    let mut err = None;
    let out = tc(
        c0,
        a,
        a2,
        env,
        fresh,
        Box::new(|p1, fresh| {
            match tc(c1, b, b2, env, fresh, Box::new(move |p2, fresh| join(p1, p2, fresh))) {
                Ok(x) => x,
                Err(e) => {
                    err = Some(e);
                    Formula::False
                }
            }
        }),
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Auxiliary verification condition for `c` started in `s`.
pub fn ta(c: &Com, s: &SymState, env: &ContractEnv, fresh: &mut Fresh) -> Result<Formula, VcError> {
    Ok(match c {
        Com::Skip | Com::Assign(..) | Com::AssignIndirect(..) => Formula::True,
        Com::Assert(p) => at_state(p, s)?,
        Com::Seq(c0, c1) => {
            let first = ta(c0, s, env, fresh)?;
            let mid = fresh.after(s);
            let rest = tc_then(c0, s, &mid, env, fresh, |mid, fresh| ta(c1, mid, env, fresh))?;
            Formula::and(first, Formula::forall(vec![mid], rest))
        }
        Com::If(b, c0, c1) => {
            let guard = bexp_formula(b, s);
            Formula::and(
                Formula::implies(guard.clone(), ta(c0, s, env, fresh)?),
                Formula::implies(Formula::not(guard), ta(c1, s, env, fresh)?),
            )
        }
        Com::Call(y) => callee_pre(env, y, s)?,
        Com::While {
            cond,
            invariant,
            body,
        } => {
            let entry = at_state(invariant, s)?;
            let s1 = fresh.after(s);
            let inner = Formula::implies(
                at_state(invariant, &s1)?,
                Formula::implies(bexp_formula(cond, &s1), ta(body, &s1, env, fresh)?),
            );
            let s2 = fresh.after(s);
            let s3 = fresh.after(s);
            let preserved = Formula::implies(
                at_state(invariant, &s2)?,
                tc_then(body, &s2, &s3, env, fresh, |end, _| Ok(at_state(invariant, end)?))?,
            );
            Formula::and(
                Formula::and(entry, Formula::forall(vec![s1], inner)),
                Formula::forall(vec![s2, s3], preserved),
            )
        }
    })
}

/// `tc(c, s, s2, env, λp. p ⇒ k(s2))`, with `k` allowed to fail.
pub fn tc_then(
    c: &Com,
    s: &SymState,
    s2: &SymState,
    env: &ContractEnv,
    fresh: &mut Fresh,
    k: impl FnOnce(&SymState, &mut Fresh) -> Result<Formula, VcError>,
) -> Result<Formula, VcError> {
    let mut err = None;
    let end = s2.clone();
    let out = tc(
        c,
        s,
        s2,
        env,
        fresh,
        Box::new(|p, fresh| match k(&end, fresh) {
            Ok(q) => Formula::implies(p, q),
            Err(e) => {
                err = Some(e);
                Formula::False
            }
        }),
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Obligations that every procedure body in `procs` respects its contract.
/// Two goals per procedure: `tf.<y>.aux` and `tf.<y>.main`.
pub fn tf(env: &ContractEnv, procs: &ProcEnv) -> Result<Vec<Goal>, VcError> {
    let mut goals = Vec::new();
    for (y, body) in procs.iter() {
        let contract = env.get(y);
        let mut fresh = Fresh::new();
        let s = fresh.state("s");
        let s2 = fresh.state("s");
        let pre = at_state(&contract.pre, &s)?;
        goals.push(Goal {
            label: format!("tf.{y}.aux"),
            hypotheses: vec![pre.clone()],
            conclusion: ta(body, &s, env, &mut fresh)?,
        });
        let post = contract.post.clone();
        let s_pre = s.clone();
        goals.push(Goal {
            label: format!("tf.{y}.main"),
            hypotheses: vec![pre],
            conclusion: tc_then(body, &s, &s2, env, &mut fresh, move |end, _| {
                Ok(at_states(&post, &s_pre, end)?)
            })?,
        });
    }
    Ok(goals)
}

/// Goals for `{pre} c {post}`: the procedure obligations followed by
/// `<label>.aux` and `<label>.main`. All goals valid implies the triple holds.
pub fn hoare_goals(
    label: &str,
    pre: &Assertion,
    c: &Com,
    post: &Assertion,
    env: &ContractEnv,
    procs: &ProcEnv,
) -> Result<Vec<Goal>, VcError> {
    pre.check(AssertionSite::Unary)?;
    post.check(AssertionSite::UnaryPost)?;
    let mut goals = tf(env, procs)?;
    goals.extend(triple_goals(label, pre, c, post, env)?);
    Ok(goals)
}

/// Only the two goals of the triple itself, without the procedure obligations.
pub fn triple_goals(
    label: &str,
    pre: &Assertion,
    c: &Com,
    post: &Assertion,
    env: &ContractEnv,
) -> Result<Vec<Goal>, VcError> {
    let mut fresh = Fresh::new();
    let s = fresh.state("s");
    let s2 = fresh.state("s");
    let p = at_state(pre, &s)?;
    let aux = Goal {
        label: format!("{label}.aux"),
        hypotheses: vec![p.clone()],
        conclusion: ta(c, &s, env, &mut fresh)?,
    };
    let post = post.clone();
    let s_pre = s.clone();
    let main = Goal {
        label: format!("{label}.main"),
        hypotheses: vec![p],
        conclusion: tc_then(c, &s, &s2, env, &mut fresh, move |end, _| {
            Ok(at_states(&post, &s_pre, end)?)
        })?,
    };
    Ok(vec![aux, main])
}
