//! Reference weakest-precondition generator that duplicates the
//! postcondition at every conditional.
//!
//! This is a reconstruction used only to compare formula sizes with the
//! optimized generator and to check that optimized goals imply naive ones.
//! Formulas grow exponentially on chains of conditionals.

use crate::assertions::Assertion;
use crate::ast::{Com, ContractEnv, ProcEnv};
use crate::formula::{Formula, Fresh, SymState, Term};

use super::{aexp_term, at_state, at_states, bexp_formula, callee_post, callee_pre, Goal, VcError};

/// Postcondition over the final state; may be instantiated several times.
pub type Post<'a> = &'a dyn Fn(&SymState, &mut Fresh) -> Result<Formula, VcError>;

pub fn tc_naive(
    c: &Com,
    s: &SymState,
    env: &ContractEnv,
    fresh: &mut Fresh,
    post: Post<'_>,
) -> Result<Formula, VcError> {
    Ok(match c {
        Com::Skip => post(s, fresh)?,
        Com::Assign(x, a) => {
            let s2 = fresh.after(s);
            let upd = Formula::StoreEq {
                target: s2.clone(),
                base: s.clone(),
                addr: Term::Nat(x.addr()),
                value: aexp_term(a, s),
            };
            let q = post(&s2, fresh)?;
            Formula::forall(vec![s2], Formula::implies(upd, q))
        }
        Com::AssignIndirect(x, a) => {
            let s2 = fresh.after(s);
            let upd = Formula::StoreEq {
                target: s2.clone(),
                base: s.clone(),
                addr: Term::read(s.clone(), Term::Nat(x.addr())),
                value: aexp_term(a, s),
            };
            let q = post(&s2, fresh)?;
            Formula::forall(vec![s2], Formula::implies(upd, q))
        }
        Com::Assert(p) => Formula::implies(at_state(p, s)?, post(s, fresh)?),
        Com::Seq(c0, c1) => tc_naive(c0, s, env, fresh, &|mid, fresh| {
            tc_naive(c1, mid, env, fresh, post)
        })?,
        Com::If(b, c0, c1) => {
            let guard = bexp_formula(b, s);
            Formula::and(
                Formula::implies(guard.clone(), tc_naive(c0, s, env, fresh, post)?),
                Formula::implies(Formula::not(guard), tc_naive(c1, s, env, fresh, post)?),
            )
        }
        Com::Call(y) => {
            let s2 = fresh.after(s);
            let assumed = Formula::and(callee_pre(env, y, s)?, callee_post(env, y, s, &s2)?);
            let q = post(&s2, fresh)?;
            Formula::forall(vec![s2], Formula::implies(assumed, q))
        }
        Com::While {
            cond, invariant, ..
        } => {
            let s2 = fresh.after(s);
            let assumed = Formula::and(
                Formula::and(at_state(invariant, s)?, at_state(invariant, &s2)?),
                Formula::not(bexp_formula(cond, &s2)),
            );
            let q = post(&s2, fresh)?;
            Formula::forall(vec![s2], Formula::implies(assumed, q))
        }
    })
}

pub fn ta_naive(c: &Com, s: &SymState, env: &ContractEnv, fresh: &mut Fresh) -> Result<Formula, VcError> {
    Ok(match c {
        Com::Skip | Com::Assign(..) | Com::AssignIndirect(..) => Formula::True,
        Com::Assert(p) => at_state(p, s)?,
        Com::Seq(c0, c1) => Formula::and(
            ta_naive(c0, s, env, fresh)?,
            tc_naive(c0, s, env, fresh, &|mid, fresh| ta_naive(c1, mid, env, fresh))?,
        ),
        Com::If(b, c0, c1) => {
            let guard = bexp_formula(b, s);
            Formula::and(
                Formula::implies(guard.clone(), ta_naive(c0, s, env, fresh)?),
                Formula::implies(Formula::not(guard), ta_naive(c1, s, env, fresh)?),
            )
        }
        Com::Call(y) => callee_pre(env, y, s)?,
        Com::While {
            cond,
            invariant,
            body,
        } => {
            let s1 = fresh.after(s);
            let entered = Formula::and(at_state(invariant, &s1)?, bexp_formula(cond, &s1));
            let body_aux = ta_naive(body, &s1, env, fresh)?;
            let preserved = tc_naive(body, &s1, env, fresh, &|end, _| Ok(at_state(invariant, end)?))?;
            Formula::and(
                at_state(invariant, s)?,
                Formula::forall(
                    vec![s1],
                    Formula::implies(entered, Formula::and(body_aux, preserved)),
                ),
            )
        }
    })
}

pub fn tf_naive(env: &ContractEnv, procs: &ProcEnv) -> Result<Vec<Goal>, VcError> {
    let mut goals = Vec::new();
    for (y, body) in procs.iter() {
        let contract = env.get(y);
        let mut fresh = Fresh::new();
        let s = fresh.state("s");
        let pre = at_state(&contract.pre, &s)?;
        goals.push(Goal {
            label: format!("tfn.{y}.aux"),
            hypotheses: vec![pre.clone()],
            conclusion: ta_naive(body, &s, env, &mut fresh)?,
        });
        let post = &contract.post;
        let conclusion = tc_naive(body, &s, env, &mut fresh, &|end, _| Ok(at_states(post, &s, end)?))?;
        goals.push(Goal {
            label: format!("tfn.{y}.main"),
            hypotheses: vec![pre],
            conclusion,
        });
    }
    Ok(goals)
}

/// Naive counterpart of [`super::hoare_goals`].
pub fn naive_hoare_goals(
    label: &str,
    pre: &Assertion,
    c: &Com,
    post: &Assertion,
    env: &ContractEnv,
    procs: &ProcEnv,
) -> Result<Vec<Goal>, VcError> {
    let mut goals = tf_naive(env, procs)?;
    let mut fresh = Fresh::new();
    let s = fresh.state("s");
    let p = at_state(pre, &s)?;
    goals.push(Goal {
        label: format!("{label}.aux"),
        hypotheses: vec![p.clone()],
        conclusion: ta_naive(c, &s, env, &mut fresh)?,
    });
    let conclusion = tc_naive(c, &s, env, &mut fresh, &|end, _| Ok(at_states(post, &s, end)?))?;
    goals.push(Goal {
        label: format!("{label}.main"),
        hypotheses: vec![p],
        conclusion,
    });
    Ok(goals)
}
