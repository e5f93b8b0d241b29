//! Verification conditions for relational properties over `n` runs.
//!
//! Each run keeps its own symbolic memory state, so no separation
//! hypotheses are needed. Relational contracts on sequences of procedures
//! are used through uninterpreted call atoms: every call emits
//! `call_y(pre, post)`, and the contract hypotheses only fire on states
//! linked by matching atoms.

use std::collections::BTreeMap;

use crate::assertions::{translate, Assertion, AssertionSite, StateRef};
use crate::ast::{Com, Contract, ContractEnv, ProcEnv, ProcName};
use crate::formula::{Formula, Fresh, SymState};
use crate::vcgen::{ta, tc, tc_then, Cont, Goal, VcError};

/// Relational pre/postcondition attached to a sequence of procedures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelContract {
    pub pre: Assertion,
    pub post: Assertion,
}

/// Finite map from procedure-name sequences to relational contracts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelContractEnv {
    entries: BTreeMap<Vec<ProcName>, RelContract>,
}

impl RelContractEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry after checking its assertions against the sequence length.
    pub fn insert(&mut self, procs: Vec<ProcName>, contract: RelContract) -> Result<(), VcError> {
        let runs = procs.len();
        if runs == 0 {
            return Err(VcError::LengthMismatch { expected: 1, got: 0 });
        }
        contract.pre.check(AssertionSite::RelPre { runs })?;
        contract.post.check(AssertionSite::RelPost { runs })?;
        self.entries.insert(procs, contract);
        Ok(())
    }

    pub fn remove(&mut self, procs: &[ProcName]) -> Option<RelContract> {
        self.entries.remove(procs)
    }

    pub fn get(&self, procs: &[ProcName]) -> Option<&RelContract> {
        self.entries.get(procs)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<ProcName>, &RelContract)> {
        self.entries.iter()
    }
}

/// A relational triple to verify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelGoalSpec {
    pub label: String,
    pub commands: Vec<Com>,
    pub pre: Assertion,
    pub post: Assertion,
}

fn check_lengths(n: usize, lens: &[usize]) -> Result<(), VcError> {
    match lens.iter().find(|&&l| l != n) {
        Some(&got) => Err(VcError::LengthMismatch { expected: n, got }),
        None => Ok(()),
    }
}

/// Relational precondition over the pre-states `ss`.
pub fn rel_pre_at(p: &Assertion, ss: &[SymState]) -> Result<Formula, VcError> {
    Ok(translate(p, &|r| match r {
        StateRef::Tag(k) if k >= 1 => ss.get(k - 1).cloned(),
        _ => None,
    })?)
}

/// Relational postcondition over pre-states `ss` and post-states `ss2`.
pub fn rel_post_at(q: &Assertion, ss: &[SymState], ss2: &[SymState]) -> Result<Formula, VcError> {
    Ok(translate(q, &|r| match r {
        StateRef::Tag(k) if k >= 1 => ss2.get(k - 1).cloned(),
        StateRef::OldTag(k) if k >= 1 => ss.get(k - 1).cloned(),
        _ => None,
    })?)
}

/// Main relational condition: `tc` chained over the runs, last run outermost.
pub fn tr(
    cs: &[Com],
    ss: &[SymState],
    ss2: &[SymState],
    env: &ContractEnv,
    fresh: &mut Fresh,
    f: Cont<'_>,
) -> Result<Formula, VcError> {
    check_lengths(cs.len(), &[ss.len(), ss2.len()])?;
    let Some((last, prefix)) = cs.split_last() else {
        return Ok(f(Formula::True, fresh));
    };
    let n = cs.len();
    let mut err = None;
    let out = tc(
        last,
        &ss[n - 1],
        &ss2[n - 1],
        env,
        fresh,
        Box::new(|pn, fresh| {
            match tr(
                prefix,
                &ss[..n - 1],
                &ss2[..n - 1],
                env,
                fresh,
                Box::new(move |rest, fresh| f(Formula::and(pn, rest), fresh)),
            ) {
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

/// Conjunction of the auxiliary conditions of every run.
pub fn tar(cs: &[Com], ss: &[SymState], env: &ContractEnv, fresh: &mut Fresh) -> Result<Formula, VcError> {
    check_lengths(cs.len(), &[ss.len()])?;
    let parts = cs
        .iter()
        .zip(ss)
        .map(|(c, s)| ta(c, s, env, fresh))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Formula::conj(parts))
}

pub fn proccall(y: &str, s: &SymState, s2: &SymState) -> Formula {
    Formula::Call {
        proc: y.to_string(),
        pre: s.clone(),
        post: s2.clone(),
    }
}

pub fn procpred(ys: &[ProcName], ss: &[SymState], ss2: &[SymState]) -> Result<Formula, VcError> {
    check_lengths(ys.len(), &[ss.len(), ss2.len()])?;
    Ok(Formula::conj(
        ys.iter()
            .zip(ss.iter().zip(ss2))
            .map(|(y, (s, s2))| proccall(y, s, s2)),
    ))
}

/// One quantified hypothesis per entry of `rel`, conjoined.
pub fn tpr(rel: &RelContractEnv) -> Result<Formula, VcError> {
    let mut hyps = Vec::new();
    for (ys, contract) in rel.iter() {
        let mut fresh = Fresh::new();
        let ss: Vec<_> = (1..=ys.len()).map(|k| fresh.state(&format!("t{k}"))).collect();
        let ss2: Vec<_> = (1..=ys.len()).map(|k| fresh.state(&format!("t{k}"))).collect();
        let triggers = ys
            .iter()
            .zip(ss.iter().zip(&ss2))
            .map(|(y, (s, s2))| proccall(y, s, s2))
            .collect();
        let body = Formula::implies(
            procpred(ys, &ss, &ss2)?,
            Formula::implies(rel_pre_at(&contract.pre, &ss)?, rel_post_at(&contract.post, &ss, &ss2)?),
        );
        let states = ss.into_iter().chain(ss2).collect();
        hyps.push(Formula::ForallState {
            states,
            triggers,
            body: Box::new(body),
        });
    }
    Ok(Formula::conj(hyps))
}

/// Standard contracts obtained from the singleton entries of `rel`, with
/// call tracking switched on.
pub fn phicall(rel: &RelContractEnv) -> ContractEnv {
    let mut env = ContractEnv::new();
    env.track_calls = true;
    for (ys, contract) in rel.iter() {
        if let [y] = ys.as_slice() {
            env.insert(
                y.clone(),
                Contract {
                    pre: unary_view(&contract.pre),
                    post: unary_view(&contract.post),
                },
            );
        }
    }
    env
}

/// Reads a single-run relational assertion as a unary one.
pub fn unary_view(a: &Assertion) -> Assertion {
    a.map_states(&|r| match r {
        StateRef::Tag(1) => StateRef::Cur,
        StateRef::OldTag(1) => StateRef::Old,
        other => other,
    })
}

/// Reads a unary assertion as a single-run relational one.
pub fn relational_view(a: &Assertion) -> Assertion {
    a.map_states(&|r| match r {
        StateRef::Cur => StateRef::Tag(1),
        StateRef::Old => StateRef::OldTag(1),
        other => other,
    })
}

fn run_states(fresh: &mut Fresh, n: usize) -> (Vec<SymState>, Vec<SymState>) {
    let ss: Vec<_> = (1..=n).map(|k| fresh.state(&format!("s{k}"))).collect();
    let ss2: Vec<_> = (1..=n).map(|k| fresh.state(&format!("s{k}"))).collect();
    (ss, ss2)
}

/// Relational-contract obligations, one goal per entry of `rel`, labelled
/// `<prefix>tfr.<y1,...,yn>`.
pub fn tfr(rel: &RelContractEnv, procs: &ProcEnv, prefix: &str) -> Result<Vec<Goal>, VcError> {
    let env = phicall(rel);
    let hyp = tpr(rel)?;
    let mut goals = Vec::new();
    for (ys, contract) in rel.iter() {
        let bodies = ys
            .iter()
            .map(|y| procs.body(y).cloned().map_err(|e| VcError::UnboundProc(e.0)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut fresh = Fresh::new();
        let (ss, ss2) = run_states(&mut fresh, ys.len());
        let aux = tar(&bodies, &ss, &env, &mut fresh)?;
        let main = tr_post(&bodies, &ss, &ss2, &contract.post, &env, &mut fresh)?;
        goals.push(Goal {
            label: format!("{prefix}tfr.{}", ys.join(",")),
            hypotheses: vec![rel_pre_at(&contract.pre, &ss)?, hyp.clone()],
            conclusion: Formula::and(aux, main),
        });
    }
    Ok(goals)
}

/// `tr(cs, ss, ss2, env, λp. p ⇒ post(ss, ss2))`.
pub fn tr_post(
    cs: &[Com],
    ss: &[SymState],
    ss2: &[SymState],
    post: &Assertion,
    env: &ContractEnv,
    fresh: &mut Fresh,
) -> Result<Formula, VcError> {
    let q = rel_post_at(post, ss, ss2)?;
    tr(cs, ss, ss2, env, fresh, Box::new(move |p, _| Formula::implies(p, q)))
}

/// All goals for a relational triple: the relational-contract obligations,
/// then `<label>.hyp2` (auxiliary conditions) and `<label>.hyp3` (main
/// condition). All valid implies the relational triple holds.
pub fn rel_goals(spec: &RelGoalSpec, rel: &RelContractEnv, procs: &ProcEnv) -> Result<Vec<Goal>, VcError> {
    let n = spec.commands.len();
    if n == 0 {
        return Err(VcError::LengthMismatch { expected: 1, got: 0 });
    }
    spec.pre.check(AssertionSite::RelPre { runs: n })?;
    spec.post.check(AssertionSite::RelPost { runs: n })?;
    let mut goals = tfr(rel, procs, &format!("{}.", spec.label))?;
    let env = phicall(rel);
    let hyp = tpr(rel)?;

    let mut fresh = Fresh::new();
    let (ss, ss2) = run_states(&mut fresh, n);
    let pre = rel_pre_at(&spec.pre, &ss)?;
    goals.push(Goal {
        label: format!("{}.hyp2", spec.label),
        hypotheses: vec![pre.clone(), hyp.clone()],
        conclusion: tar(&spec.commands, &ss, &env, &mut fresh)?,
    });
    goals.push(Goal {
        label: format!("{}.hyp3", spec.label),
        hypotheses: vec![pre, hyp],
        conclusion: tr_post(&spec.commands, &ss, &ss2, &spec.post, &env, &mut fresh)?,
    });
    Ok(goals)
}

/// Single-run helper used to compare `tr`/`tar` with `tc`/`ta`.
pub fn singleton_main(c: &Com, post: &Assertion, env: &ContractEnv) -> Result<(Formula, Formula), VcError> {
    let mut fresh = Fresh::new();
    let (ss, ss2) = run_states(&mut fresh, 1);
    let via_tr = tr_post(std::slice::from_ref(c), &ss, &ss2, &relational_view(post), env, &mut fresh)?;
    let mut fresh = Fresh::new();
    let (ss, ss2) = run_states(&mut fresh, 1);
    let post = post.clone();
    let s = ss[0].clone();
    let via_tc = tc_then(c, &ss[0], &ss2[0], env, &mut fresh, move |end, _| {
        Ok(crate::vcgen::at_states(&post, &s, end)?)
    })?;
    Ok((via_tr, via_tc))
}
