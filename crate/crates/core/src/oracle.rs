//! Bounded-exhaustive semantic checking of Hoare and relational triples.
//!
//! Initial states range over every assignment of values `0..=max_val` to the
//! addresses `0..max_addr`; all other addresses start at zero. Runs that
//! exhaust their fuel are neither counterexamples nor evidence of validity,
//! so any such run turns `Holds` into `Inconclusive`.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::assertions::{eval_assertion, Assertion, AssertionError, AssertionSite, Bindings, StateRef};
use crate::ast::{Com, MemState, ProcEnv, UnboundProc};
use crate::interp::{exec, Outcome};

/// How many out-of-fuel examples a verdict keeps.
const KEEP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Addresses `0..max_addr` are enumerated.
    pub max_addr: u64,
    /// Values `0..=max_val`.
    pub max_val: u64,
    pub fuel: u64,
}

impl Bounds {
    /// Number of initial states, `None` on overflow.
    pub fn state_count(&self) -> Option<u64> {
        let base = self.max_val.checked_add(1)?;
        base.checked_pow(u32::try_from(self.max_addr).ok()?)
    }

    /// The `k`-th initial state in enumeration order.
    pub fn state(&self, mut k: u64) -> MemState {
        let base = self.max_val + 1;
        let mut s = MemState::new();
        for a in 0..self.max_addr {
            s.store(a.into(), (k % base).into());
            k /= base;
        }
        s
    }

    pub fn states(&self) -> impl Iterator<Item = MemState> + '_ {
        (0..self.state_count().unwrap_or(0)).map(|k| self.state(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// Initial states and the final states they reach, one per run.
    Counterexample { pre: Vec<MemState>, post: Vec<MemState> },
    /// No counterexample, but `count` initial tuples ran out of fuel.
    Inconclusive { count: u64, examples: Vec<Vec<MemState>> },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn is_counterexample(&self) -> bool {
        matches!(self, Verdict::Counterexample { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tuple = |v: &[MemState]| {
            v.iter()
                .map(|s| format!("[{s}]"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Counterexample { pre, post } => {
                write!(f, "counterexample: {} -> {}", tuple(pre), tuple(post))
            }
            Verdict::Inconclusive { count, examples } => {
                write!(f, "inconclusive: {count} initial state(s) ran out of fuel")?;
                if let Some(e) = examples.first() {
                    write!(f, ", e.g. {}", tuple(e))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub verdict: Verdict,
    /// Initial states (or tuples) that satisfied the precondition.
    pub checked: u64,
    /// Some run wrote a non-zero value outside the enumerated window, so the
    /// bounded domain may not be representative.
    pub left_window: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0}")]
    Assertion(#[from] AssertionError),
    #[error("unknown procedure `{}`", .0 .0)]
    UnboundProc(#[from] UnboundProc),
    #[error("bounds too large to enumerate")]
    TooLarge,
    #[error("no commands to check")]
    Empty,
}

// Partial result over a range of indices, merged associatively. Indices keep
// the result independent of scheduling.
#[derive(Debug, Clone)]
struct Acc {
    cex: Option<(u64, Vec<MemState>, Vec<MemState>)>,
    fuel_count: u64,
    fuel_examples: Vec<(u64, Vec<MemState>)>,
    checked: u64,
    left_window: bool,
}

impl Acc {
    fn empty() -> Self {
        Acc {
            cex: None,
            fuel_count: 0,
            fuel_examples: Vec::new(),
            checked: 0,
            left_window: false,
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.cex = match (self.cex, other.cex) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self.fuel_count += other.fuel_count;
        self.fuel_examples.extend(other.fuel_examples);
        self.fuel_examples.sort_by_key(|(k, _)| *k);
        self.fuel_examples.truncate(KEEP);
        self.checked += other.checked;
        self.left_window |= other.left_window;
        self
    }

    fn report(self) -> OracleReport {
        let verdict = match (self.cex, self.fuel_count) {
            (Some((_, pre, post)), _) => Verdict::Counterexample { pre, post },
            (None, 0) => Verdict::Holds,
            (None, count) => Verdict::Inconclusive {
                count,
                examples: self.fuel_examples.into_iter().map(|(_, e)| e).collect(),
            },
        };
        OracleReport {
            verdict,
            checked: self.checked,
            left_window: self.left_window,
        }
    }
}

fn outside_window(s: &MemState, bounds: &Bounds) -> bool {
    s.bindings().any(|(a, _)| *a >= bounds.max_addr.into())
}

/// Checks `{pre} c {post}` over the bounded domain.
pub fn check_hoare(
    pre: &Assertion,
    c: &Com,
    post: &Assertion,
    procs: &ProcEnv,
    bounds: &Bounds,
) -> Result<OracleReport, OracleError> {
    pre.check(AssertionSite::Unary)?;
    post.check(AssertionSite::UnaryPost)?;
    let n = bounds.state_count().ok_or(OracleError::TooLarge)?;
    let acc = (0..n)
        .into_par_iter()
        .map(|k| -> Result<Acc, OracleError> {
            let mut acc = Acc::empty();
            let s = bounds.state(k);
            if !eval_assertion(pre, &Bindings(&[(StateRef::Cur, &s)]))? {
                return Ok(acc);
            }
            acc.checked = 1;
            match exec(c, &s, procs, bounds.fuel)? {
                Outcome::OutOfFuel => {
                    acc.fuel_count = 1;
                    acc.fuel_examples.push((k, vec![s]));
                }
                Outcome::Final(s2) => {
                    acc.left_window = outside_window(&s2, bounds);
                    let env = [(StateRef::Old, &s), (StateRef::Cur, &s2)];
                    if !eval_assertion(post, &Bindings(&env))? {
                        acc.cex = Some((k, vec![s.clone()], vec![s2.clone()]));
                    }
                }
            }
            Ok(acc)
        })
        .try_reduce(Acc::empty, |a, b| Ok(a.merge(b)))?;
    Ok(acc.report())
}

/// Checks the relational triple `{pre} c1 ~ ... ~ cn {post}` over n-tuples
/// of bounded states.
pub fn check_rel(
    pre: &Assertion,
    cs: &[Com],
    post: &Assertion,
    procs: &ProcEnv,
    bounds: &Bounds,
) -> Result<OracleReport, OracleError> {
    let runs = cs.len();
    if runs == 0 {
        return Err(OracleError::Empty);
    }
    pre.check(AssertionSite::RelPre { runs })?;
    post.check(AssertionSite::RelPost { runs })?;
    let per_run = bounds.state_count().ok_or(OracleError::TooLarge)?;
    let total = per_run
        .checked_pow(u32::try_from(runs).map_err(|_| OracleError::TooLarge)?)
        .ok_or(OracleError::TooLarge)?;

    // Each run's outcome depends only on its own initial state.
    let states: Vec<MemState> = bounds.states().collect();
    let outcomes: Vec<Vec<Outcome>> = cs
        .iter()
        .map(|c| {
            states
                .par_iter()
                .map(|s| exec(c, s, procs, bounds.fuel))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let acc = (0..total)
        .into_par_iter()
        .map(|t| -> Result<Acc, OracleError> {
            let mut acc = Acc::empty();
            let mut idx = Vec::with_capacity(runs);
            let mut rest = t;
            for _ in 0..runs {
                idx.push((rest % per_run) as usize);
                rest /= per_run;
            }
            let pre_env: Vec<(StateRef, &MemState)> = idx
                .iter()
                .enumerate()
                .map(|(k, &i)| (StateRef::Tag(k + 1), &states[i]))
                .collect();
            if !eval_assertion(pre, &Bindings(&pre_env))? {
                return Ok(acc);
            }
            acc.checked = 1;
            let mut finals = Vec::with_capacity(runs);
            for (k, &i) in idx.iter().enumerate() {
                match &outcomes[k][i] {
                    Outcome::Final(s2) => finals.push(s2),
                    Outcome::OutOfFuel => {
                        acc.fuel_count = 1;
                        acc.fuel_examples
                            .push((t, idx.iter().map(|&i| states[i].clone()).collect()));
                        return Ok(acc);
                    }
                }
            }
            acc.left_window = finals.iter().any(|s| outside_window(s, bounds));
            let mut env = Vec::with_capacity(2 * runs);
            for (k, &i) in idx.iter().enumerate() {
                env.push((StateRef::OldTag(k + 1), &states[i]));
                env.push((StateRef::Tag(k + 1), finals[k]));
            }
            if !eval_assertion(post, &Bindings(&env))? {
                acc.cex = Some((
                    t,
                    idx.iter().map(|&i| states[i].clone()).collect(),
                    finals.into_iter().cloned().collect(),
                ));
            }
            Ok(acc)
        })
        .try_reduce(Acc::empty, |a, b| Ok(a.merge(b)))?;
    Ok(acc.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{CmpOp, LTerm};
    use crate::ast::{Aexp, Loc};

    fn small() -> Bounds {
        Bounds {
            max_addr: 3,
            max_val: 2,
            fuel: 8,
        }
    }

    #[test]
    fn enumeration() {
        let b = small();
        assert_eq!(b.state_count(), Some(27));
        assert_eq!(b.state(0), MemState::new());
        assert_eq!(b.state(26), MemState::from_pairs([(0, 2), (1, 2), (2, 2)]));
        let all: std::collections::BTreeSet<_> = b.states().collect();
        assert_eq!(all.len(), 27);
    }

    #[test]
    fn skip_keeps_state() {
        let post = Assertion::and(
            Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, 1), LTerm::loc(StateRef::Old, 1)),
            Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, 2), LTerm::loc(StateRef::Old, 2)),
        );
        let r = check_hoare(&Assertion::tt(), &Com::Skip, &post, &ProcEnv::new(), &small()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.checked, 27);
    }

    #[test]
    fn wrong_assignment_post() {
        let c = Com::Assign(Loc(1), Aexp::nat(1));
        let post = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, 1), LTerm::constant(2));
        let r = check_hoare(&Assertion::tt(), &c, &post, &ProcEnv::new(), &small()).unwrap();
        let Verdict::Counterexample { pre, post } = r.verdict else { panic!() };
        assert_eq!(pre, vec![MemState::new()]);
        assert_eq!(post, vec![MemState::from_pairs([(1, 1)])]);
    }

    #[test]
    fn fuel_makes_it_inconclusive() {
        let spin = Com::while_(crate::ast::Bexp::True, Assertion::tt(), Com::Skip);
        let r = check_hoare(&Assertion::tt(), &spin, &Assertion::Bool(false), &ProcEnv::new(), &small()).unwrap();
        assert!(matches!(r.verdict, Verdict::Inconclusive { count: 27, .. }));
    }

    #[test]
    fn relational_pair() {
        let c = Com::Assign(Loc(1), Aexp::bin(crate::assertions::ArithOp::Add, Aexp::var(1), Aexp::nat(1)));
        let pre = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Tag(1), 1), LTerm::loc(StateRef::Tag(2), 1));
        let post = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Tag(1), 1), LTerm::loc(StateRef::Tag(2), 1));
        let cs = [c.clone(), c];
        let r = check_rel(&pre, &cs, &post, &ProcEnv::new(), &small()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.checked, 27 * 9);
        let ne = Assertion::cmp(CmpOp::Ne, LTerm::loc(StateRef::Tag(1), 1), LTerm::loc(StateRef::Tag(2), 1));
        assert!(check_rel(&pre, &cs, &ne, &ProcEnv::new(), &small()).unwrap().verdict.is_counterexample());
    }

    #[test]
    fn arity_is_checked() {
        let bad = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Old, 1), LTerm::constant(0));
        let r = check_hoare(&bad, &Com::Skip, &Assertion::tt(), &ProcEnv::new(), &small());
        assert!(matches!(r, Err(OracleError::Assertion(AssertionError::Arity { .. }))));
    }

    #[test]
    fn repeated_runs_agree() {
        let c = Com::Assign(Loc(1), Aexp::nat(1));
        let post = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, 2), LTerm::constant(1));
        let a = check_hoare(&Assertion::tt(), &c, &post, &ProcEnv::new(), &small()).unwrap();
        let b = check_hoare(&Assertion::tt(), &c, &post, &ProcEnv::new(), &small()).unwrap();
        assert_eq!(a, b);
    }
}
