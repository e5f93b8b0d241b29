//! Goal to SMT-LIB lowering.
//!
//! States are `(Array Int Int)` constants constrained to be non-negative
//! everywhere, `set` is `store`, and monus is a guarded subtraction.
//! Validity is checked by asserting the hypotheses and the negated
//! conclusion. Quantifiers that behave existentially in that assertion set
//! are replaced by fresh constants; the others are kept, with instantiation
//! patterns on call atoms when available.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::assertions::{ArithOp, CmpOp, Quantifier};
use crate::formula::{Formula, SymState, Term};
use crate::vcgen::Goal;

use super::sexp::Sexp;

const ARRAY: &str = "(Array Int Int)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerOptions {
    /// Replace existential-polarity quantifiers by fresh constants. With
    /// `false` every quantifier is emitted as such.
    pub skolemize: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { skolemize: true }
    }
}

/// Symbol introduced at the top level of the script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalSym {
    /// Name in the goal (state or logical variable).
    pub source: String,
    /// Unquoted SMT symbol.
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoweredScript {
    pub label: String,
    /// Fragment the goal falls in, `AUFLIA` or `AUFNIA`. Recorded as a
    /// comment; the script declares `ALL` because Z3's AUFLIA strategy can
    /// loop on satisfiable goals with the non-negativity axioms.
    pub logic: &'static str,
    pub declarations: Vec<Sexp>,
    pub assertions: Vec<Sexp>,
    pub check: Sexp,
    /// State constants: free states of the goal, then skolems.
    pub states: Vec<GlobalSym>,
    /// Integer skolem constants.
    pub ints: Vec<GlobalSym>,
    /// Call atoms over top-level states, whose truth values are part of a
    /// counter-model.
    pub call_instances: Vec<Sexp>,
}

impl LoweredScript {
    /// Declarations and assertions, without the check command.
    pub fn body(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "; goal {}", self.label);
        let _ = writeln!(out, "; fragment {}", self.logic);
        let _ = writeln!(out, "(set-logic ALL)");
        for d in &self.declarations {
            let _ = writeln!(out, "{d}");
        }
        for a in &self.assertions {
            let _ = writeln!(out, "(assert {a})");
        }
        out
    }

    /// Complete script, as written by `dump-vc` and `--dump-dir`.
    pub fn to_smtlib(&self) -> String {
        format!("{}{}\n", self.body(), self.check)
    }
}

pub fn lower(goal: &Goal) -> LoweredScript {
    lower_with(goal, LowerOptions::default())
}

pub fn lower_with(goal: &Goal, opts: LowerOptions) -> LoweredScript {
    let mut cx = Lowerer {
        opts,
        used: HashSet::new(),
        states: Vec::new(),
        ints: Vec::new(),
        procs: BTreeSet::new(),
        nonlinear: false,
    };
    let mut scope = Scope::default();

    let mut free: BTreeSet<SymState> = BTreeSet::new();
    for h in &goal.hypotheses {
        free.extend(h.free_states());
    }
    free.extend(goal.conclusion.free_states());
    for s in &free {
        let sym = cx.global_state(s.name());
        scope.states.push((s.name().to_string(), sym));
    }

    let mut assertions = Vec::new();
    for h in &goal.hypotheses {
        assertions.push(cx.formula(h, true, false, &mut scope));
    }
    let concl = cx.formula(&goal.conclusion, false, false, &mut scope);
    assertions.push(Sexp::app("not", [concl]));

    let mut declarations = Vec::new();
    let mut axioms = Vec::new();
    for g in &cx.states {
        declarations.push(Sexp::list([
            Sexp::atom("declare-const"),
            Sexp::sym(&g.symbol),
            Sexp::atom(ARRAY),
        ]));
        axioms.push(nonneg_axiom(&g.symbol, &cx.fresh_name_peek("i")));
    }
    for g in &cx.ints {
        declarations.push(Sexp::list([
            Sexp::atom("declare-const"),
            Sexp::sym(&g.symbol),
            Sexp::atom("Int"),
        ]));
    }
    for p in &cx.procs {
        declarations.push(Sexp::list([
            Sexp::atom("declare-fun"),
            Sexp::sym(&call_symbol(p)),
            Sexp::atom(format!("({ARRAY} {ARRAY})")),
            Sexp::atom("Bool"),
        ]));
    }

    let globals: HashSet<&str> = cx.states.iter().map(|g| g.symbol.as_str()).collect();
    let mut call_instances = Vec::new();
    let mut seen = HashSet::new();
    for a in &assertions {
        collect_ground_calls(a, &cx.procs, &globals, &mut seen, &mut call_instances);
    }

    axioms.extend(assertions);
    LoweredScript {
        label: goal.label.clone(),
        logic: if cx.nonlinear { "AUFNIA" } else { "AUFLIA" },
        declarations,
        assertions: axioms,
        check: Sexp::app("check-sat", []),
        states: cx.states,
        ints: cx.ints,
        call_instances,
    }
}

pub fn call_symbol(proc: &str) -> String {
    format!("call_{proc}")
}

fn nonneg_axiom(state: &str, i: &str) -> Sexp {
    let read = Sexp::app("select", [Sexp::sym(state), Sexp::sym(i)]);
    Sexp::list([
        Sexp::atom("forall"),
        Sexp::list([Sexp::list([Sexp::sym(i), Sexp::atom("Int")])]),
        Sexp::list([
            Sexp::atom("!"),
            Sexp::app(">=", [read.clone(), Sexp::atom("0")]),
            Sexp::atom(":pattern"),
            Sexp::list([read]),
        ]),
    ])
}

fn collect_ground_calls(
    s: &Sexp,
    procs: &BTreeSet<String>,
    globals: &HashSet<&str>,
    seen: &mut HashSet<String>,
    out: &mut Vec<Sexp>,
) {
    let Sexp::List(items) = s else { return };
    if let Some(Sexp::Atom(head)) = items.first() {
        if matches!(head.as_str(), "forall" | "exists") {
            return;
        }
        let name = super::sexp::unquote(head);
        let is_call = name
            .strip_prefix("call_")
            .is_some_and(|p| procs.contains(p));
        if is_call
            && items[1..].iter().all(|a| {
                a.as_atom()
                    .is_some_and(|a| globals.contains(super::sexp::unquote(a)))
            })
        {
            if seen.insert(s.canonical()) {
                out.push(s.clone());
            }
            return;
        }
    }
    for x in items {
        collect_ground_calls(x, procs, globals, seen, out);
    }
}

#[derive(Default)]
struct Scope {
    states: Vec<(String, String)>,
    vars: Vec<(String, String)>,
}

impl Scope {
    fn state(&self, name: &str) -> Option<&str> {
        self.states
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_str())
    }

    fn var(&self, name: &str) -> Option<&str> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_str())
    }
}

struct Lowerer {
    opts: LowerOptions,
    used: HashSet<String>,
    states: Vec<GlobalSym>,
    ints: Vec<GlobalSym>,
    procs: BTreeSet<String>,
    nonlinear: bool,
}

impl Lowerer {
    fn fresh_name(&mut self, base: &str) -> String {
        let name = self.fresh_name_peek(base);
        self.used.insert(name.clone());
        name
    }

    fn fresh_name_peek(&self, base: &str) -> String {
        if !self.used.contains(base) && !base.starts_with("call_") {
            return base.to_string();
        }
        (1..)
            .map(|k| format!("{base}!{k}"))
            .find(|n| !self.used.contains(n))
            .unwrap()
    }

    fn global_state(&mut self, source: &str) -> String {
        let symbol = self.fresh_name(source);
        self.states.push(GlobalSym {
            source: source.to_string(),
            symbol: symbol.clone(),
        });
        symbol
    }

    fn term(&mut self, t: &Term, scope: &mut Scope) -> Sexp {
        match t {
            Term::Nat(n) => Sexp::atom(n.to_string()),
            Term::Var(v) => match scope.var(v) {
                Some(sym) => Sexp::sym(sym),
                None => {
                    // Free logical variables should not reach here; treat them
                    // as arbitrary naturals.
                    let sym = self.fresh_name(v);
                    self.ints.push(GlobalSym {
                        source: v.clone(),
                        symbol: sym.clone(),
                    });
                    scope.vars.insert(0, (v.clone(), sym.clone()));
                    Sexp::sym(&sym)
                }
            },
            Term::Read(s, addr) => {
                let arr = self.state_ref(s, scope);
                let a = self.term(addr, scope);
                Sexp::app("select", [arr, a])
            }
            Term::Arith(op, a, b) => {
                if t.is_nonlinear() {
                    self.nonlinear = true;
                }
                let (a, b) = (self.term(a, scope), self.term(b, scope));
                match op {
                    ArithOp::Add => Sexp::app("+", [a, b]),
                    ArithOp::Mul => Sexp::app("*", [a, b]),
                    ArithOp::Monus => Sexp::app(
                        "ite",
                        [
                            Sexp::app(">=", [a.clone(), b.clone()]),
                            Sexp::app("-", [a, b]),
                            Sexp::atom("0"),
                        ],
                    ),
                }
            }
        }
    }

    fn state_ref(&mut self, s: &SymState, scope: &mut Scope) -> Sexp {
        match scope.state(s.name()) {
            Some(sym) => Sexp::sym(sym),
            None => {
                let sym = self.global_state(s.name());
                scope.states.insert(0, (s.name().to_string(), sym.clone()));
                Sexp::sym(&sym)
            }
        }
    }

    /// `pos` is the polarity inside the asserted formula; `kept` is true
    /// below a quantifier that is emitted as such.
    fn formula(&mut self, f: &Formula, pos: bool, kept: bool, scope: &mut Scope) -> Sexp {
        match f {
            Formula::True => Sexp::atom("true"),
            Formula::False => Sexp::atom("false"),
            Formula::StateEq(a, b) => {
                let (a, b) = (self.state_ref(a, scope), self.state_ref(b, scope));
                Sexp::app("=", [a, b])
            }
            Formula::StoreEq {
                target,
                base,
                addr,
                value,
            } => {
                let t = self.state_ref(target, scope);
                let b = self.state_ref(base, scope);
                let (a, v) = (self.term(addr, scope), self.term(value, scope));
                Sexp::app("=", [t, Sexp::app("store", [b, a, v])])
            }
            Formula::Cmp(op, a, b) => {
                let (a, b) = (self.term(a, scope), self.term(b, scope));
                match op {
                    CmpOp::Eq => Sexp::app("=", [a, b]),
                    CmpOp::Ne => Sexp::app("not", [Sexp::app("=", [a, b])]),
                    CmpOp::Le => Sexp::app("<=", [a, b]),
                    CmpOp::Lt => Sexp::app("<", [a, b]),
                    CmpOp::Ge => Sexp::app(">=", [a, b]),
                    CmpOp::Gt => Sexp::app(">", [a, b]),
                }
            }
            Formula::Call { proc, pre, post } => {
                self.procs.insert(proc.clone());
                let (a, b) = (self.state_ref(pre, scope), self.state_ref(post, scope));
                Sexp::list([Sexp::sym(&call_symbol(proc)), a, b])
            }
            Formula::Not(a) => Sexp::app("not", [self.formula(a, !pos, kept, scope)]),
            Formula::And(a, b) => {
                let a = self.formula(a, pos, kept, scope);
                Sexp::app("and", [a, self.formula(b, pos, kept, scope)])
            }
            Formula::Or(a, b) => {
                let a = self.formula(a, pos, kept, scope);
                Sexp::app("or", [a, self.formula(b, pos, kept, scope)])
            }
            Formula::Implies(a, b) => {
                let a = self.formula(a, !pos, kept, scope);
                Sexp::app("=>", [a, self.formula(b, pos, kept, scope)])
            }
            Formula::ForallState {
                states,
                triggers,
                body,
            } => {
                let depth = scope.states.len();
                let out = if self.opts.skolemize && !pos && !kept {
                    for s in states {
                        let sym = self.global_state(s.name());
                        scope.states.push((s.name().to_string(), sym));
                    }
                    self.formula(body, pos, kept, scope)
                } else {
                    let syms: Vec<String> = states
                        .iter()
                        .map(|s| {
                            let sym = self.fresh_name(s.name());
                            scope.states.push((s.name().to_string(), sym.clone()));
                            sym
                        })
                        .collect();
                    let body = self.formula(body, pos, true, scope);
                    let pats: Vec<Sexp> = triggers
                        .iter()
                        .map(|t| self.formula(t, pos, true, scope))
                        .collect();
                    let mut covered = BTreeSet::new();
                    for t in triggers {
                        t.visit_states(&mut |s| {
                            covered.insert(s.name().to_string());
                        });
                    }
                    let all_covered =
                        !pats.is_empty() && states.iter().all(|s| covered.contains(s.name()));
                    let body = if all_covered {
                        Sexp::list([
                            Sexp::atom("!"),
                            body,
                            Sexp::atom(":pattern"),
                            Sexp::List(pats),
                        ])
                    } else {
                        let i = self.fresh_name("i");
                        let guards: Vec<Sexp> = syms
                            .iter()
                            .map(|s| {
                                let read = Sexp::app("select", [Sexp::sym(s), Sexp::sym(&i)]);
                                Sexp::list([
                                    Sexp::atom("forall"),
                                    Sexp::list([Sexp::list([Sexp::sym(&i), Sexp::atom("Int")])]),
                                    Sexp::app(">=", [read, Sexp::atom("0")]),
                                ])
                            })
                            .collect();
                        Sexp::app("=>", [conj(guards), body])
                    };
                    let binders = syms
                        .iter()
                        .map(|s| Sexp::list([Sexp::sym(s), Sexp::atom(ARRAY)]));
                    Sexp::list([Sexp::atom("forall"), Sexp::list(binders), body])
                };
                scope.states.truncate(depth);
                out
            }
            Formula::Quant {
                kind,
                var,
                bound,
                body,
            } => {
                let existential = (*kind == Quantifier::Exists) == pos;
                let depth = scope.vars.len();
                let out = if self.opts.skolemize && existential && !kept {
                    let sym = self.fresh_name(var);
                    self.ints.push(GlobalSym {
                        source: var.clone(),
                        symbol: sym.clone(),
                    });
                    scope.vars.push((var.clone(), sym.clone()));
                    let g = int_guard(&sym, bound.as_ref());
                    let b = self.formula(body, pos, kept, scope);
                    match kind {
                        Quantifier::Forall => Sexp::app("=>", [g, b]),
                        Quantifier::Exists => Sexp::app("and", [g, b]),
                    }
                } else {
                    let sym = self.fresh_name(var);
                    scope.vars.push((var.clone(), sym.clone()));
                    let g = int_guard(&sym, bound.as_ref());
                    let b = self.formula(body, pos, true, scope);
                    let binder = Sexp::list([Sexp::list([Sexp::sym(&sym), Sexp::atom("Int")])]);
                    match kind {
                        Quantifier::Forall => {
                            Sexp::list([Sexp::atom("forall"), binder, Sexp::app("=>", [g, b])])
                        }
                        Quantifier::Exists => {
                            Sexp::list([Sexp::atom("exists"), binder, Sexp::app("and", [g, b])])
                        }
                    }
                };
                scope.vars.truncate(depth);
                out
            }
        }
    }
}

fn int_guard(sym: &str, bound: Option<&BigUint>) -> Sexp {
    let lower = Sexp::app(">=", [Sexp::sym(sym), Sexp::atom("0")]);
    match bound {
        Some(n) => Sexp::app("and", [lower, Sexp::app("<", [Sexp::sym(sym), Sexp::atom(n.to_string())])]),
        None => lower,
    }
}

fn conj(mut parts: Vec<Sexp>) -> Sexp {
    match parts.len() {
        0 => Sexp::atom("true"),
        1 => parts.pop().unwrap(),
        _ => Sexp::app("and", parts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> SymState {
        SymState::new(n)
    }

    fn goal(hyps: Vec<Formula>, concl: Formula) -> Goal {
        Goal {
            label: "t".into(),
            hypotheses: hyps,
            conclusion: concl,
        }
    }

    #[test]
    fn trivial_goal_shape() {
        let g = goal(vec![], Formula::Cmp(CmpOp::Eq, Term::nat(1), Term::nat(1)));
        let script = lower(&g);
        assert_eq!(script.logic, "AUFLIA");
        assert!(script.declarations.is_empty());
        assert_eq!(script.assertions, vec![Sexp::app("not", [Sexp::app("=", [Sexp::atom("1"), Sexp::atom("1")])])]);
        assert!(script.to_smtlib().ends_with("(check-sat)\n"));
    }

    #[test]
    fn states_become_arrays_with_axioms() {
        let g = goal(
            vec![Formula::StoreEq {
                target: s("s'"),
                base: s("s"),
                addr: Term::nat(1),
                value: Term::arith(ArithOp::Monus, Term::read(s("s"), Term::nat(2)), Term::nat(1)),
            }],
            Formula::Cmp(CmpOp::Eq, Term::read(s("s'"), Term::nat(1)), Term::nat(0)),
        );
        let text = lower(&g).to_smtlib();
        assert!(text.contains("(declare-const |s| (Array Int Int))"), "{text}");
        assert!(text.contains("(declare-const |s'| (Array Int Int))"));
        assert!(text.contains("(= |s'| (store |s| 1 (ite (>= (select |s| 2) 1) (- (select |s| 2) 1) 0)))"));
        assert_eq!(text.matches(":pattern ((select").count(), 2);
    }

    #[test]
    fn positive_conclusion_forall_is_skolemized() {
        let body = Formula::StateEq(s("s"), s("s''"));
        let g = goal(vec![], Formula::forall(vec![s("s''")], body.clone()));
        let script = lower(&g);
        assert_eq!(script.states.len(), 2);
        assert!(!script.assertions.last().unwrap().has_binder());
        let kept = lower_with(&g, LowerOptions { skolemize: false });
        assert_eq!(kept.states.len(), 1);
        assert!(kept.assertions.last().unwrap().has_binder());
    }

    #[test]
    fn hypothesis_forall_is_kept_with_pattern() {
        let call = Formula::Call {
            proc: "f".into(),
            pre: s("t1"),
            post: s("t1'"),
        };
        let hyp = Formula::ForallState {
            states: vec![s("t1"), s("t1'")],
            triggers: vec![call.clone()],
            body: Box::new(Formula::implies(call, Formula::True)),
        };
        let script = lower(&goal(vec![hyp], Formula::True));
        let text = script.to_smtlib();
        assert!(text.contains(":pattern ((|call_f| |t1| |t1'|))"), "{text}");
        assert!(text.contains("(declare-fun |call_f| ((Array Int Int) (Array Int Int)) Bool)"));
        assert!(script.states.is_empty());
    }

    #[test]
    fn skolem_names_avoid_free_names() {
        let inner = Formula::forall(vec![s("s")], Formula::StateEq(s("s"), s("s")));
        let g = goal(vec![], Formula::and(Formula::StateEq(s("s"), s("s")), inner));
        let script = lower(&g);
        let names: Vec<_> = script.states.iter().map(|g| g.symbol.as_str()).collect();
        assert_eq!(names, ["s", "s!1"]);
    }

    #[test]
    fn nonlinear_switches_logic() {
        let t = Term::arith(ArithOp::Mul, Term::read(s("s"), Term::nat(1)), Term::read(s("s"), Term::nat(2)));
        let g = goal(vec![], Formula::Cmp(CmpOp::Ge, t, Term::nat(0)));
        assert_eq!(lower(&g).logic, "AUFNIA");
    }

    #[test]
    fn lowering_is_deterministic() {
        let g = goal(
            vec![Formula::StateEq(s("b"), s("a"))],
            Formula::forall(vec![s("c")], Formula::StateEq(s("c"), s("a"))),
        );
        assert_eq!(lower(&g).to_smtlib(), lower(&g).to_smtlib());
    }

    #[test]
    fn int_quantifiers_get_guards() {
        let body = Formula::Cmp(CmpOp::Ge, Term::Var("v".into()), Term::nat(0));
        let g = goal(
            vec![],
            Formula::Quant {
                kind: Quantifier::Forall,
                var: "v".into(),
                bound: Some(BigUint::from(3u8)),
                body: Box::new(body),
            },
        );
        let script = lower(&g);
        assert_eq!(script.ints.len(), 1);
        assert!(script.to_smtlib().contains("(=> (and (>= |v| 0) (< |v| 3)) (>= |v| 0))"));
    }
}
