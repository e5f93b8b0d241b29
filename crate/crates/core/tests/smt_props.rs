//! Solver-backed properties: skolemization preserves verdicts, invalid
//! models really falsify goals, and the naive generator agrees with the
//! optimized one.

use std::time::Duration;

use relvc_core::assertions::{eval_assertion, ArithOp, Bindings, CmpOp, Quantifier, StateRef};
use relvc_core::ast::MemState;
use relvc_core::formula::{Formula, SymState, Term};
use relvc_core::gen::{Gen, GenConfig};
use relvc_core::interp::{exec, Outcome};
use relvc_core::smt::{check, lower, lower_with, LowerOptions, SolverConfig, SolverVerdict};
use relvc_core::vcgen::naive::naive_hoare_goals;
use relvc_core::vcgen::{hoare_goals, Goal};

const T: Duration = Duration::from_secs(10);

fn cfg() -> SolverConfig {
    SolverConfig::resolve(None).unwrap()
}

fn st(n: &str) -> SymState {
    SymState::new(n)
}

fn rd(s: &str, i: u64) -> Term {
    Term::read(st(s), Term::nat(i))
}

fn eq(a: Term, b: Term) -> Formula {
    Formula::Cmp(CmpOp::Eq, a, b)
}

fn lt(a: Term, b: Term) -> Formula {
    Formula::Cmp(CmpOp::Lt, a, b)
}

fn store(t: &str, b: &str, i: u64, v: Term) -> Formula {
    Formula::StoreEq {
        target: st(t),
        base: st(b),
        addr: Term::nat(i),
        value: v,
    }
}

fn call(p: &str, a: &str, b: &str) -> Formula {
    Formula::Call {
        proc: p.into(),
        pre: st(a),
        post: st(b),
    }
}

fn forall(states: &[&str], triggers: Vec<Formula>, body: Formula) -> Formula {
    Formula::ForallState {
        states: states.iter().map(|s| st(s)).collect(),
        triggers,
        body: Box::new(body),
    }
}

fn goal(label: &str, hyps: Vec<Formula>, concl: Formula) -> Goal {
    Goal {
        label: label.into(),
        hypotheses: hyps,
        conclusion: concl,
    }
}

fn hand_built() -> Vec<Goal> {
    let incr = |s: &str, t: &str| store(t, s, 1, Term::arith(ArithOp::Add, rd(s, 1), Term::nat(1)));
    let contract = forall(
        &["a", "b"],
        vec![call("p", "a", "b")],
        Formula::implies(call("p", "a", "b"), eq(rd("b", 1), Term::arith(ArithOp::Add, rd("a", 1), Term::nat(1)))),
    );
    vec![
        goal("h01", vec![], forall(&["u"], vec![], Formula::implies(incr("s", "u"), lt(rd("s", 1), rd("u", 1))))),
        goal("h02", vec![], forall(&["u"], vec![], Formula::implies(incr("s", "u"), eq(rd("s", 1), rd("u", 1))))),
        goal("h03", vec![Formula::not(forall(&["u"], vec![], eq(rd("u", 1), Term::nat(0))))], Formula::True),
        goal(
            "h04",
            vec![contract.clone(), call("p", "s", "t")],
            eq(rd("t", 1), Term::arith(ArithOp::Add, rd("s", 1), Term::nat(1))),
        ),
        goal("h05", vec![contract.clone(), call("p", "s", "t")], eq(rd("t", 1), rd("s", 1))),
        goal("h06", vec![contract.clone()], eq(rd("t", 1), Term::arith(ArithOp::Add, rd("s", 1), Term::nat(1)))),
        goal(
            "h07",
            vec![],
            Formula::implies(forall(&["u"], vec![], eq(rd("u", 2), Term::nat(3))), Formula::False),
        ),
        goal(
            "h08",
            vec![],
            forall(&["u"], vec![], forall(&["v"], vec![], Formula::implies(Formula::StateEq(st("u"), st("v")), eq(rd("u", 7), rd("v", 7))))),
        ),
        goal(
            "h09",
            vec![],
            forall(&["u"], vec![], forall(&["v"], vec![], Formula::implies(Formula::StateEq(st("u"), st("v")), eq(rd("u", 7), rd("s", 7))))),
        ),
        goal(
            "h10",
            vec![],
            Formula::or(
                forall(&["u"], vec![], Formula::Cmp(CmpOp::Ge, rd("u", 1), Term::nat(0))),
                Formula::False,
            ),
        ),
        goal(
            "h11",
            vec![],
            Formula::Quant {
                kind: Quantifier::Forall,
                var: "k".into(),
                bound: Some(4u32.into()),
                body: Box::new(Formula::Cmp(CmpOp::Ge, Term::read(st("s"), Term::Var("k".into())), Term::nat(0))),
            },
        ),
        goal(
            "h12",
            vec![],
            Formula::Quant {
                kind: Quantifier::Exists,
                var: "k".into(),
                bound: None,
                body: Box::new(eq(Term::Var("k".into()), rd("s", 1))),
            },
        ),
        goal(
            "h13",
            vec![],
            Formula::Quant {
                kind: Quantifier::Exists,
                var: "k".into(),
                bound: Some(2u32.into()),
                body: Box::new(eq(Term::Var("k".into()), rd("s", 1))),
            },
        ),
        goal(
            "h14",
            vec![Formula::Quant {
                kind: Quantifier::Forall,
                var: "k".into(),
                bound: Some(3u32.into()),
                body: Box::new(eq(Term::read(st("s"), Term::Var("k".into())), Term::nat(5))),
            }],
            eq(rd("s", 2), Term::nat(5)),
        ),
        goal(
            "h15",
            vec![Formula::not(Formula::not(forall(&["u"], vec![], eq(rd("u", 1), rd("s", 1)))))],
            Formula::False,
        ),
    ]
}

fn generated(n: usize) -> Vec<Goal> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < n {
        seed += 1;
        let f = Gen::new(seed, GenConfig::default()).hoare_instance();
        let goals = f.hoare_goals(None).unwrap();
        // Keep goals with at least one quantifier so polarity matters.
        if let Some(g) = goals.into_iter().find(|g| g.as_formula().has_quantifier()) {
            out.push(g);
        }
    }
    out
}

#[test]
fn skolemization_preserves_verdicts() {
    let goals: Vec<Goal> = hand_built().into_iter().chain(generated(15)).collect();
    assert_eq!(goals.len(), 30);
    let cfg = cfg();
    let mut known = 0;
    for g in &goals {
        let a = check(&lower_with(g, LowerOptions { skolemize: true }), &cfg, T).unwrap();
        let b = check(&lower_with(g, LowerOptions { skolemize: false }), &cfg, T).unwrap();
        let (a, b) = (a.status(), b.status());
        if a != "unknown" && b != "unknown" {
            known += 1;
            assert_eq!(a, b, "{}: {}", g.label, g.as_formula());
        }
    }
    // Unknowns are tolerated but must not swamp the suite.
    assert!(known >= 25, "only {known} goals decided");
}

#[test]
fn hand_built_expectations() {
    let want = [
        ("h01", true),
        ("h02", false),
        ("h03", true),
        ("h04", true),
        ("h05", false),
        // h07 is valid but needs an instantiation the solver does not find.
        ("h08", true),
        ("h10", true),
        ("h11", true),
        ("h12", true),
        ("h13", false),
        ("h14", true),
        ("h15", true),
    ];
    let goals = hand_built();
    for (label, valid) in want {
        let g = goals.iter().find(|g| g.label == label).unwrap();
        let v = check(&lower(g), &cfg(), T).unwrap();
        assert_eq!(v.is_valid(), valid, "{label}: {v:?}");
    }
}

fn state_from_model(m: &relvc_core::smt::CounterModel, name: &str) -> MemState {
    let mut s = MemState::new();
    for c in m.samples.iter().filter(|c| c.state == name) {
        s.store(c.addr.clone(), c.value.clone());
    }
    s
}

#[test]
fn invalid_models_falsify_goals_concretely() {
    let cfg = cfg();
    let gcfg = GenConfig {
        loops: false,
        pointers: false,
        ..GenConfig::default()
    };
    let mut falsified = 0;
    let mut seed = 0;
    while falsified < 25 && seed < 2000 {
        seed += 1;
        let f = Gen::new(seed, gcfg).hoare_instance();
        if !f.procs.is_empty() {
            continue;
        }
        let p = &f.properties[0];
        let goals = f.hoare_goals(None).unwrap();
        for mut g in goals {
            // Mention every location of the initial state so the model
            // reports all of them.
            let s = st("s");
            for i in 1..=4 {
                g.hypotheses.push(Formula::Cmp(CmpOp::Ge, Term::read(s.clone(), Term::nat(i)), Term::nat(0)));
            }
            let script = lower(&g);
            let SolverVerdict::Invalid(m) = check(&script, &cfg, T).unwrap() else {
                continue;
            };
            assert_eq!(m.replay, Some(true), "{}: {}", g.label, m.summary());
            if !g.label.ends_with(".main") {
                continue;
            }
            let init = state_from_model(&m, "s");
            let Outcome::Final(fin) = exec(&p.commands[0], &init, &f.proc_env(), 64).unwrap() else {
                panic!("loop-free program ran out of fuel")
            };
            let b = [(StateRef::Cur, &init)];
            assert!(eval_assertion(&p.pre, &Bindings(&b)).unwrap(), "seed {seed}: model violates pre");
            let b = [(StateRef::Old, &init), (StateRef::Cur, &fin)];
            assert!(!eval_assertion(&p.post, &Bindings(&b)).unwrap(), "seed {seed}: model does not falsify post");
            falsified += 1;
        }
    }
    assert!(falsified >= 25, "only {falsified} falsified instances");
}

#[test]
fn naive_and_optimized_generators_agree() {
    let cfg = cfg();
    let gcfg = GenConfig {
        loops: false,
        max_depth: 3,
        ..GenConfig::default()
    };
    let mut compared = 0;
    let mut seed = 0;
    while compared < 20 {
        seed += 1;
        let f = Gen::new(seed, gcfg).hoare_instance();
        let p = &f.properties[0];
        let env = f.contract_env();
        let procs = f.proc_env();
        let opt = hoare_goals("P", &p.pre, &p.commands[0], &p.post, &env, &procs).unwrap();
        let naive = naive_hoare_goals("P", &p.pre, &p.commands[0], &p.post, &env, &procs).unwrap();
        assert_eq!(opt.len(), naive.len());
        for (a, b) in opt.iter().zip(&naive) {
            let va = check(&lower(a), &cfg, T).unwrap();
            let vb = check(&lower(b), &cfg, T).unwrap();
            if va.is_valid() {
                assert!(!matches!(vb, SolverVerdict::Invalid(_)), "seed {seed} {}: optimized valid, naive invalid", a.label);
            }
            if vb.is_valid() {
                assert!(!matches!(va, SolverVerdict::Invalid(_)), "seed {seed} {}: naive valid, optimized invalid", a.label);
            }
        }
        compared += 1;
    }
}

#[test]
fn example3_as_text() {
    let f = relvc_core::parser::parse(include_str!("../../../corpus/example3.rl")).unwrap();
    for g in f.hoare_goals(None).unwrap() {
        assert!(check(&lower(&g), &cfg(), T).unwrap().is_valid(), "{}", g.label);
    }
}
