//! Big-step semantics with an execution budget.
//!
//! Fuel is spent on each procedure call and each loop iteration; straight
//! line code is free. Running out of fuel yields [`Outcome::OutOfFuel`],
//! never a wrong final state.

use num_bigint::BigUint;

use crate::assertions::CmpOp;
use crate::ast::{Aexp, Bexp, Com, LogicOp, MemState, ProcEnv, UnboundProc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Final(MemState),
    OutOfFuel,
}

impl Outcome {
    pub fn final_state(&self) -> Option<&MemState> {
        match self {
            Outcome::Final(s) => Some(s),
            Outcome::OutOfFuel => None,
        }
    }
}

pub fn eval_aexp(a: &Aexp, s: &MemState) -> BigUint {
    match a {
        Aexp::Nat(n) => n.clone(),
        Aexp::Var(x) => s.get(&x.addr()).clone(),
        Aexp::Deref(x) => s.get(s.get(&x.addr())).clone(),
        Aexp::AddrOf(x) => x.addr(),
        Aexp::Bin(op, l, r) => op.apply(&eval_aexp(l, s), &eval_aexp(r, s)),
    }
}

pub fn eval_bexp(b: &Bexp, s: &MemState) -> bool {
    match b {
        Bexp::True => true,
        Bexp::False => false,
        Bexp::Cmp(op, l, r) => cmp(*op, &eval_aexp(l, s), &eval_aexp(r, s)),
        Bexp::Logic(LogicOp::And, l, r) => eval_bexp(l, s) && eval_bexp(r, s),
        Bexp::Logic(LogicOp::Or, l, r) => eval_bexp(l, s) || eval_bexp(r, s),
        Bexp::Not(b) => !eval_bexp(b, s),
    }
}

fn cmp(op: CmpOp, a: &BigUint, b: &BigUint) -> bool {
    op.holds(a, b)
}

/// Executes `c` from `s` under `procs` with the given fuel.
pub fn exec(c: &Com, s: &MemState, procs: &ProcEnv, fuel: u64) -> Result<Outcome, UnboundProc> {
    let mut state = s.clone();
    let mut fuel = fuel;
    Ok(if run(c, &mut state, procs, &mut fuel)? {
        Outcome::Final(state)
    } else {
        Outcome::OutOfFuel
    })
}

// Returns Ok(false) when fuel ran out.
fn run(c: &Com, s: &mut MemState, procs: &ProcEnv, fuel: &mut u64) -> Result<bool, UnboundProc> {
    match c {
        Com::Skip | Com::Assert(_) => Ok(true),
        Com::Assign(x, a) => {
            let v = eval_aexp(a, s);
            s.store(x.addr(), v);
            Ok(true)
        }
        Com::AssignIndirect(x, a) => {
            let v = eval_aexp(a, s);
            let target = s.get(&x.addr()).clone();
            s.store(target, v);
            Ok(true)
        }
        Com::Seq(a, b) => Ok(run(a, s, procs, fuel)? && run(b, s, procs, fuel)?),
        Com::If(b, t, e) => {
            if eval_bexp(b, s) {
                run(t, s, procs, fuel)
            } else {
                run(e, s, procs, fuel)
            }
        }
        Com::While { cond, body, .. } => {
            while eval_bexp(cond, s) {
                if *fuel == 0 {
                    return Ok(false);
                }
                *fuel -= 1;
                if !run(body, s, procs, fuel)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Com::Call(y) => {
            let body = procs.body(y)?;
            if *fuel == 0 {
                return Ok(false);
            }
            *fuel -= 1;
            run(body, s, procs, fuel)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{ArithOp, Assertion};
    use crate::ast::Loc;

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

    fn sum_env() -> ProcEnv {
        [("sum".to_string(), csum())].into_iter().collect()
    }

    #[test]
    fn bounded_subtraction() {
        let e = Aexp::bin(ArithOp::Monus, Aexp::nat(2), Aexp::nat(5));
        assert_eq!(eval_aexp(&e, &MemState::new()), BigUint::from(0u8));
        let b = Bexp::cmp(CmpOp::Eq, e, Aexp::nat(0));
        assert!(eval_bexp(&b, &MemState::new()));
    }

    #[test]
    fn pointer_expressions() {
        let s = MemState::from_pairs([(1, 5), (5, 7)]);
        assert_eq!(eval_aexp(&Aexp::Deref(Loc(1)), &s), BigUint::from(7u8));
        assert_eq!(eval_aexp(&Aexp::AddrOf(Loc(4)), &s), BigUint::from(4u8));
    }

    #[test]
    fn boolean_basics() {
        let s = MemState::from_pairs([(1, 1), (2, 3)]);
        assert!(eval_bexp(&Bexp::cmp(CmpOp::Lt, Aexp::var(1), Aexp::var(2)), &s));
        assert!(!eval_bexp(&Bexp::Not(Box::new(Bexp::True)), &s));
    }

    #[test]
    fn annotations_are_skips() {
        let s = MemState::from_pairs([(2, 2)]);
        let env = ProcEnv::new();
        assert_eq!(
            exec(&Com::Assert(Assertion::Bool(false)), &s, &env, 0).unwrap(),
            Outcome::Final(s.clone())
        );
        assert_eq!(exec(&Com::Skip, &s, &env, 0).unwrap(), Outcome::Final(s));
    }

    #[test]
    fn csum_from_one_to_three() {
        let s = MemState::from_pairs([(1, 1), (2, 3), (3, 0)]);
        let out = exec(&Com::Call("sum".into()), &s, &sum_env(), 100).unwrap();
        assert_eq!(out, Outcome::Final(MemState::from_pairs([(1, 3), (2, 3), (3, 3)])));
    }

    #[test]
    fn indirect_assignment_writes_through_pointer() {
        let s = MemState::from_pairs([(1, 4)]);
        let c = Com::AssignIndirect(Loc(1), Aexp::nat(9));
        let out = exec(&c, &s, &ProcEnv::new(), 0).unwrap();
        assert_eq!(out, Outcome::Final(MemState::from_pairs([(1, 4), (4, 9)])));
    }

    #[test]
    fn fuel_exhaustion() {
        let spin = Com::while_(Bexp::True, Assertion::tt(), Com::Skip);
        assert_eq!(exec(&spin, &MemState::new(), &ProcEnv::new(), 10).unwrap(), Outcome::OutOfFuel);
        let s = MemState::from_pairs([(1, 0), (2, 5)]);
        assert_eq!(exec(&Com::Call("sum".into()), &s, &sum_env(), 3).unwrap(), Outcome::OutOfFuel);
        // 5 recursive calls plus the final one that takes the else branch
        assert!(matches!(
            exec(&Com::Call("sum".into()), &s, &sum_env(), 6).unwrap(),
            Outcome::Final(_)
        ));
    }

    #[test]
    fn unbound_procedure() {
        let r = exec(&Com::Call("nope".into()), &MemState::new(), &ProcEnv::new(), 5);
        assert_eq!(r, Err(UnboundProc("nope".into())));
    }
}
