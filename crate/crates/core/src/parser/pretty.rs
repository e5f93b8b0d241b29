//! Canonical formatting. `parse(pretty(p)) == p` for every well-formed file.

use std::fmt::Write as _;

use num_traits::ToPrimitive;

use crate::assertions::{ArithOp, Assertion, LTerm, Quantifier, StateRef};
use crate::ast::{Aexp, Bexp, Com, LogicOp};

use super::{Property, ProgramFile};

const INDENT: &str = "    ";

pub fn pretty(p: &ProgramFile) -> String {
    let mut items = Vec::new();
    for d in &p.procs {
        let mut head = format!("proc {}", d.name);
        if let Some(pre) = &d.pre {
            let _ = write!(head, " requires {}", pretty_assertion(pre));
        }
        if let Some(post) = &d.post {
            let _ = write!(head, " ensures {}", pretty_assertion(post));
        }
        items.push(format!("{head} {}", block(&d.body, 0)));
    }
    for r in &p.rel_contracts {
        items.push(format!(
            "relational [{}]\n{INDENT}requires {}\n{INDENT}ensures {}",
            r.procs.join(", "),
            pretty_assertion(&r.pre),
            pretty_assertion(&r.post)
        ));
    }
    for prop in &p.properties {
        items.push(property(prop));
    }
    let mut out = items.join("\n\n");
    out.push('\n');
    out
}

fn property(p: &Property) -> String {
    let blocks: Vec<String> = p.commands.iter().map(|c| block(c, 0)).collect();
    format!(
        "property {} {}\n{INDENT}requires {}\n{INDENT}ensures {}",
        p.label,
        blocks.join(" ~ "),
        pretty_assertion(&p.pre),
        pretty_assertion(&p.post)
    )
}

pub fn pretty_com(c: &Com) -> String {
    let mut out = String::new();
    seq(c, 0, &mut out);
    out
}

fn block(c: &Com, depth: usize) -> String {
    let mut out = String::from("{\n");
    seq(c, depth + 1, &mut out);
    out.push('\n');
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
    out
}

fn seq(c: &Com, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    match c {
        Com::Seq(a, b) => {
            out.push_str(&pad);
            match &**a {
                Com::Seq(..) => out.push_str(&block(a, depth)),
                other => out.push_str(&single(other, depth)),
            }
            out.push_str(";\n");
            seq(b, depth, out);
        }
        other => {
            out.push_str(&pad);
            out.push_str(&single(other, depth));
        }
    }
}

fn single(c: &Com, depth: usize) -> String {
    match c {
        Com::Skip => "skip".into(),
        Com::Assign(x, a) => format!("{x} := {}", pretty_aexp(a)),
        Com::AssignIndirect(x, a) => format!("*{x} := {}", pretty_aexp(a)),
        Com::Assert(p) => format!("assert {}", pretty_assertion(p)),
        Com::Call(y) => format!("call {y}"),
        Com::If(b, t, e) => format!(
            "if ({}) {} else {}",
            pretty_bexp(b),
            block(t, depth),
            block(e, depth)
        ),
        Com::While {
            cond,
            invariant,
            body,
        } => format!(
            "while ({}) invariant {} {}",
            pretty_bexp(cond),
            pretty_assertion(invariant),
            block(body, depth)
        ),
        Com::Seq(..) => block(c, depth),
    }
}

fn arith_prec(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Monus => 1,
        ArithOp::Mul => 2,
    }
}

fn paren(s: String, needed: bool) -> String {
    if needed {
        format!("({s})")
    } else {
        s
    }
}

pub fn pretty_aexp(a: &Aexp) -> String {
    aexp(a, 0)
}

fn aexp(a: &Aexp, ctx: u8) -> String {
    match a {
        Aexp::Nat(n) => n.to_string(),
        Aexp::Var(x) => x.to_string(),
        Aexp::Deref(x) => format!("*{x}"),
        Aexp::AddrOf(x) => format!("&{x}"),
        Aexp::Bin(op, l, r) => {
            let p = arith_prec(*op);
            let s = format!("{} {} {}", aexp(l, p), op.symbol(), aexp(r, p + 1));
            paren(s, p < ctx)
        }
    }
}

pub fn pretty_bexp(b: &Bexp) -> String {
    bexp(b, 0)
}

// Precedence: || 1, && 2, atoms 3.
fn bexp(b: &Bexp, ctx: u8) -> String {
    match b {
        Bexp::True => "true".into(),
        Bexp::False => "false".into(),
        Bexp::Cmp(op, l, r) => format!("{} {} {}", aexp(l, 0), op.symbol(), aexp(r, 0)),
        Bexp::Not(x) => format!("!({})", bexp(x, 0)),
        Bexp::Logic(LogicOp::Or, l, r) => paren(format!("{} || {}", bexp(l, 1), bexp(r, 2)), 1 < ctx),
        Bexp::Logic(LogicOp::And, l, r) => paren(format!("{} && {}", bexp(l, 2), bexp(r, 3)), 2 < ctx),
    }
}

pub fn pretty_assertion(a: &Assertion) -> String {
    assn(a, 0)
}

// Precedence: quantifiers 0, ==> 1, || 2, && 3, atoms 4. Quantifiers
// extend to the right as far as possible, so they are parenthesised
// everywhere except at the top and directly under another quantifier.
fn assn(a: &Assertion, ctx: u8) -> String {
    match a {
        Assertion::Bool(true) => "true".into(),
        Assertion::Bool(false) => "false".into(),
        Assertion::Cmp(op, l, r) => format!("{} {} {}", term(l, 0), op.symbol(), term(r, 0)),
        Assertion::Not(x) => format!("!({})", assn(x, 0)),
        Assertion::Implies(l, r) => paren(format!("{} ==> {}", assn(l, 2), assn(r, 1)), 1 < ctx),
        Assertion::Or(l, r) => paren(format!("{} || {}", assn(l, 2), assn(r, 3)), 2 < ctx),
        Assertion::And(l, r) => paren(format!("{} && {}", assn(l, 3), assn(r, 4)), 3 < ctx),
        Assertion::Quant {
            kind,
            var,
            bound,
            body,
        } => {
            let q = match kind {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            let b = bound.as_ref().map(|n| format!(" < {n}")).unwrap_or_default();
            paren(format!("{q} {var}{b}. {}", assn(body, 0)), ctx > 0)
        }
    }
}

pub fn pretty_term(t: &LTerm) -> String {
    term(t, 0)
}

fn tag(s: StateRef) -> String {
    match s {
        StateRef::Tag(k) | StateRef::OldTag(k) => format!("<{k}>"),
        StateRef::Cur | StateRef::Old => String::new(),
    }
}

fn is_old(s: StateRef) -> bool {
    matches!(s, StateRef::Old | StateRef::OldTag(_))
}

fn term(t: &LTerm, ctx: u8) -> String {
    match t {
        LTerm::Const(n) => n.to_string(),
        LTerm::Var(v) => v.clone(),
        LTerm::Arith(op, l, r) => {
            let p = arith_prec(*op);
            let s = format!("{} {} {}", term(l, p), op.symbol(), term(r, p + 1));
            paren(s, p < ctx)
        }
        LTerm::Read(s, idx) => {
            let inner = match &**idx {
                LTerm::Const(n) if n.to_u64().is_some() => format!("x{n}{}", tag(*s)),
                LTerm::Read(s2, i2) if s2 == s && matches!(&**i2, LTerm::Const(n) if n.to_u64().is_some()) => {
                    let LTerm::Const(n) = &**i2 else { unreachable!() };
                    format!("*x{n}{}", tag(*s))
                }
                other => format!("mem{}[{}]", tag(*s), term(other, 0)),
            };
            if is_old(*s) {
                format!("old({inner})")
            } else {
                inner
            }
        }
    }
}
