//! Laws of memory states, arithmetic and the interpreter.

use num_bigint::BigUint;
use proptest::prelude::*;

use relvc_core::assertions::ArithOp;
use relvc_core::ast::{Aexp, MemState, ProcEnv};
use relvc_core::gen::{Gen, GenConfig};
use relvc_core::interp::{eval_aexp, exec, Outcome};
use relvc_core::parser::parse;

fn state() -> impl Strategy<Value = MemState> {
    proptest::collection::vec((0u64..8, 0u64..10), 0..8).prop_map(MemState::from_pairs)
}

// Independent evaluator over i128 with explicit clamping.
fn signed(a: &Aexp, s: &MemState) -> i128 {
    let cell = |i: i128| -> i128 {
        let v: u128 = s.get_u64(i as u64).try_into().unwrap();
        v as i128
    };
    match a {
        Aexp::Nat(n) => u128::try_from(n).unwrap() as i128,
        Aexp::Var(x) => cell(x.0 as i128),
        Aexp::Deref(x) => cell(cell(x.0 as i128)),
        Aexp::AddrOf(x) => x.0 as i128,
        Aexp::Bin(op, l, r) => {
            let (l, r) = (signed(l, s), signed(r, s));
            match op {
                ArithOp::Add => l + r,
                ArithOp::Mul => l * r,
                ArithOp::Monus => if l >= r { l - r } else { 0 },
            }
        }
    }
}

fn program(seed: u64) -> (relvc_core::ast::Com, ProcEnv) {
    let mut g = Gen::new(seed, GenConfig::default());
    let f = g.hoare_instance();
    (f.properties[0].commands[0].clone(), f.proc_env())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn read_after_write_same_address(s in state(), i in 0u64..10, n in 0u64..10) {
        let t = s.set(i.into(), n.into());
        prop_assert_eq!(t.get_u64(i), &BigUint::from(n));
    }

    #[test]
    fn read_after_write_other_address(s in state(), i in 0u64..10, j in 0u64..10, n in 0u64..10) {
        prop_assume!(i != j);
        let t = s.set(i.into(), n.into());
        prop_assert_eq!(t.get_u64(j), s.get_u64(j));
    }

    #[test]
    fn writes_commute_on_distinct_addresses(s in state(), i in 0u64..10, j in 0u64..10, a in 0u64..5, b in 0u64..5) {
        prop_assume!(i != j);
        let l = s.set(i.into(), a.into()).set(j.into(), b.into());
        let r = s.set(j.into(), b.into()).set(i.into(), a.into());
        prop_assert_eq!(l, r);
    }

    #[test]
    fn monus_is_truncated_subtraction(a in 0u64..1000, b in 0u64..1000) {
        let got = ArithOp::Monus.apply(&a.into(), &b.into());
        let want = (i128::from(a) - i128::from(b)).max(0);
        prop_assert_eq!(got, BigUint::from(want as u128));
    }

    #[test]
    fn expressions_agree_with_signed_evaluation(seed in any::<u64>(), s in state()) {
        let mut g = Gen::new(seed, GenConfig { nonlinear: true, ..GenConfig::default() });
        let a = g.aexp(4);
        let got = eval_aexp(&a, &s);
        let want = signed(&a, &s);
        prop_assert!(want >= 0);
        prop_assert_eq!(got, BigUint::from(want as u128));
    }

    #[test]
    fn interpreter_is_deterministic(seed in any::<u64>(), s in state()) {
        let (c, procs) = program(seed);
        prop_assert_eq!(exec(&c, &s, &procs, 64).unwrap(), exec(&c, &s, &procs, 64).unwrap());
    }

    #[test]
    fn more_fuel_keeps_the_result(seed in any::<u64>(), s in state(), extra in 0u64..64) {
        let (c, procs) = program(seed);
        if let Outcome::Final(t) = exec(&c, &s, &procs, 32).unwrap() {
            prop_assert_eq!(exec(&c, &s, &procs, 32 + extra).unwrap(), Outcome::Final(t));
        }
    }

    #[test]
    fn annotations_do_not_affect_execution(seed in any::<u64>(), s in state()) {
        let (c, procs) = program(seed);
        let erased = c.erase_annotations();
        prop_assert_eq!(exec(&c, &s, &procs, 64).unwrap(), exec(&erased, &s, &procs, 64).unwrap());
    }
}

#[test]
fn csum_closed_form() {
    let f = parse(include_str!("../../../corpus/sum.rl")).unwrap();
    let procs = f.proc_env();
    let call = relvc_core::ast::Com::Call("sum".into());
    for x1 in 0..=6u64 {
        for x2 in 0..=6u64 {
            for x3 in 0..=6u64 {
                let s = MemState::from_pairs([(1, x1), (2, x2), (3, x3)]);
                let Outcome::Final(t) = exec(&call, &s, &procs, 100).unwrap() else {
                    panic!("sum ran out of fuel")
                };
                let want: u64 = x3 + (x1..x2).sum::<u64>();
                assert_eq!(t.get_u64(3), &BigUint::from(want));
            }
        }
    }
}
