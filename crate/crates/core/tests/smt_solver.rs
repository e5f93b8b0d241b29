//! Lowering and solver round trips against the configured solver (Z3 by
//! default).

use std::time::Duration;

use relvc_core::assertions::{ArithOp, Assertion, CmpOp, LTerm, StateRef};
use relvc_core::ast::{Aexp, Bexp, Com, Contract, ContractEnv, Loc, ProcEnv};
use relvc_core::formula::{Formula, SymState, Term};
use relvc_core::smt::{self, check, lower, SolverConfig, SolverError, SolverVerdict};
use relvc_core::vcgen::{hoare_goals, triple_goals, Goal};

const T: Duration = Duration::from_secs(10);

fn cfg() -> SolverConfig {
    SolverConfig::resolve(None).unwrap()
}

fn goal(hyps: Vec<Formula>, concl: Formula) -> Goal {
    Goal {
        label: "g".into(),
        hypotheses: hyps,
        conclusion: concl,
    }
}

fn read(s: &str, i: u64) -> Term {
    Term::read(SymState::new(s), Term::nat(i))
}

#[test]
fn one_equals_one_is_valid() {
    let g = goal(vec![], Formula::Cmp(CmpOp::Eq, Term::nat(1), Term::nat(1)));
    assert_eq!(smt::discharge(&g, &cfg(), T).unwrap(), SolverVerdict::Valid);
}

#[test]
fn differing_reads_give_a_replayable_model() {
    let g = goal(vec![], Formula::Cmp(CmpOp::Eq, read("s", 1), read("s", 2)));
    let SolverVerdict::Invalid(m) = smt::discharge(&g, &cfg(), T).unwrap() else {
        panic!("expected a model")
    };
    assert_eq!(m.replay, Some(true));
    let at = |a: u32| {
        m.samples
            .iter()
            .find(|x| x.state == "s" && x.addr == a.into())
            .map(|x| x.value.clone())
            .expect("sample for a read address")
    };
    assert_ne!(at(1), at(2));
}

#[test]
fn false_goal_is_invalid() {
    let g = goal(vec![], Formula::False);
    assert!(matches!(smt::discharge(&g, &cfg(), T).unwrap(), SolverVerdict::Invalid(_)));
}

#[test]
fn zero_timeout_is_unknown() {
    let g = goal(vec![], Formula::True);
    assert_eq!(
        check(&lower(&g), &cfg(), Duration::ZERO).unwrap(),
        SolverVerdict::Unknown("timeout".into())
    );
}

#[test]
fn missing_solver_is_reported() {
    let bad = SolverConfig::from_command("relvc-no-such-solver -in").unwrap();
    let r = check(&lower(&goal(vec![], Formula::True)), &bad, T);
    assert_eq!(r, Err(SolverError::NotFound("relvc-no-such-solver".into())));
}

#[test]
fn solver_that_fails_is_reported() {
    let bad = SolverConfig::from_command("false").unwrap();
    let r = check(&lower(&goal(vec![], Formula::True)), &bad, T);
    assert!(matches!(r, Err(SolverError::NonZeroExit { .. })), "{r:?}");
    let mute = SolverConfig::from_command("true").unwrap();
    let r = check(&lower(&goal(vec![], Formula::True)), &mute, T);
    assert!(matches!(r, Err(SolverError::Protocol(_))), "{r:?}");
}

#[test]
fn example_three_is_valid() {
    let c = Com::if_(Bexp::False, Com::Skip, Com::Assign(Loc(1), Aexp::nat(2)));
    let post = Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, 1), LTerm::constant(2));
    let goals = triple_goals("ex3", &Assertion::tt(), &c, &post, &ContractEnv::new()).unwrap();
    for g in goals {
        assert_eq!(smt::discharge(&g, &cfg(), T).unwrap(), SolverVerdict::Valid, "{}", g.label);
    }
}

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

fn rp2_post() -> Assertion {
    Assertion::implies(
        Assertion::cmp(CmpOp::Ge, LTerm::loc(StateRef::Old, 1), LTerm::loc(StateRef::Old, 2)),
        Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Old, 3), LTerm::loc(StateRef::Cur, 3)),
    )
}

#[test]
fn csum_contract_is_valid() {
    let procs: ProcEnv = [("sum".to_string(), csum())].into_iter().collect();
    let mut env = ContractEnv::new();
    env.insert(
        "sum",
        Contract {
            pre: Assertion::tt(),
            post: rp2_post(),
        },
    );
    let goals = hoare_goals("rp2", &Assertion::tt(), &Com::Call("sum".into()), &rp2_post(), &env, &procs).unwrap();
    assert_eq!(goals.len(), 4);
    for g in goals {
        assert_eq!(smt::discharge(&g, &cfg(), T).unwrap(), SolverVerdict::Valid, "{}", g.label);
    }
}

#[test]
fn wrong_contract_gives_model() {
    let procs: ProcEnv = [("f".to_string(), Com::Assign(Loc(1), Aexp::nat(0)))].into_iter().collect();
    let mut env = ContractEnv::new();
    env.insert(
        "f",
        Contract {
            pre: Assertion::tt(),
            post: Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, 1), LTerm::constant(1)),
        },
    );
    let goals = relvc_core::vcgen::tf(&env, &procs).unwrap();
    let main = goals.iter().find(|g| g.label == "tf.f.main").unwrap();
    let SolverVerdict::Invalid(m) = smt::discharge(main, &cfg(), T).unwrap() else {
        panic!()
    };
    assert_eq!(m.replay, Some(true));
    assert!(m.samples.iter().any(|s| s.state == "s'" && s.addr == 1u8.into() && s.value == 0u8.into()));
}
