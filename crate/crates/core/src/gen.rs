//! Seeded random generation of programs, assertions and verification
//! instances, for property and differential tests.
//!
//! Instance postconditions are built from candidate atoms that survive a
//! handful of concrete runs. That makes a useful share of instances
//! provable while leaving some candidates that are only true on the sampled
//! states, which is where an unsound generator would be caught.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assertions::{eval_assertion, ArithOp, Assertion, AssertionSite, Bindings, CmpOp, LTerm, Quantifier, StateRef};
use crate::ast::{Aexp, Bexp, Com, Loc, LogicOp, MemState, ProcEnv};
use crate::interp::{exec, Outcome};
use crate::parser::{ProcDecl, ProgramFile, Property, RelDecl};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// Maximum nesting depth of commands.
    pub max_depth: u32,
    /// Locations `x1..=x{locs}` are used.
    pub locs: u64,
    pub max_const: u64,
    pub loops: bool,
    pub pointers: bool,
    /// Allow `*` between two non-constant operands.
    pub nonlinear: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 4,
            locs: 4,
            max_const: 3,
            loops: true,
            pointers: true,
            nonlinear: false,
        }
    }
}

pub struct Gen {
    rng: ChaCha8Rng,
    pub cfg: GenConfig,
}

const CMP: [CmpOp; 6] = CmpOp::ALL;

impl Gen {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
        }
    }

    fn loc(&mut self) -> Loc {
        Loc(self.rng.gen_range(1..=self.cfg.locs))
    }

    fn konst(&mut self) -> u64 {
        self.rng.gen_range(0..=self.cfg.max_const)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn aexp(&mut self, depth: u32) -> Aexp {
        if depth == 0 || self.chance(0.5) {
            return match self.rng.gen_range(0..10) {
                0..=3 => Aexp::Var(self.loc()),
                4..=6 => Aexp::nat(self.konst()),
                7 if self.cfg.pointers => Aexp::Deref(self.loc()),
                8 if self.cfg.pointers => Aexp::AddrOf(self.loc()),
                _ => Aexp::Var(self.loc()),
            };
        }
        let op = *[ArithOp::Add, ArithOp::Add, ArithOp::Monus, ArithOp::Mul]
            .choose(&mut self.rng)
            .unwrap();
        let l = self.aexp(depth - 1);
        let r = if op == ArithOp::Mul && !self.cfg.nonlinear {
            Aexp::nat(self.konst())
        } else {
            self.aexp(depth - 1)
        };
        Aexp::bin(op, l, r)
    }

    pub fn bexp(&mut self, depth: u32) -> Bexp {
        if depth == 0 || self.chance(0.6) {
            return match self.rng.gen_range(0..12) {
                0 => Bexp::True,
                1 => Bexp::False,
                _ => {
                    let op = *CMP.choose(&mut self.rng).unwrap();
                    Bexp::cmp(op, self.aexp(1), self.aexp(1))
                }
            };
        }
        match self.rng.gen_range(0..3) {
            0 => Bexp::Not(Box::new(self.bexp(depth - 1))),
            1 => Bexp::Logic(LogicOp::And, Box::new(self.bexp(depth - 1)), Box::new(self.bexp(depth - 1))),
            _ => Bexp::Logic(LogicOp::Or, Box::new(self.bexp(depth - 1)), Box::new(self.bexp(depth - 1))),
        }
    }

    /// A random command; `procs` are the callable procedure names.
    pub fn com(&mut self, depth: u32, procs: &[String]) -> Com {
        let leaf = depth == 0 || self.chance(0.35);
        if leaf {
            return match self.rng.gen_range(0..12) {
                0 => Com::Skip,
                1 if self.cfg.pointers => Com::AssignIndirect(self.loc(), self.aexp(1)),
                2 if !procs.is_empty() => Com::Call(procs.choose(&mut self.rng).unwrap().clone()),
                3 if !procs.is_empty() => Com::Call(procs.choose(&mut self.rng).unwrap().clone()),
                4 => Com::Assert(self.unary_atom(false)),
                _ => Com::Assign(self.loc(), self.aexp(2)),
            };
        }
        match self.rng.gen_range(0..10) {
            0..=4 => Com::seq(self.com(depth - 1, procs), self.com(depth - 1, procs)),
            5..=7 => Com::if_(self.bexp(1), self.com(depth - 1, procs), self.com(depth - 1, procs)),
            _ if self.cfg.loops => {
                // Counting loop; usually terminates within the fuel.
                let x = self.loc();
                let bound = self.konst() + 1;
                let body = Com::seq(
                    self.com(depth.saturating_sub(2), procs),
                    Com::Assign(x, Aexp::bin(ArithOp::Add, Aexp::Var(x), Aexp::nat(1))),
                );
                let inv = if self.chance(0.5) { Assertion::tt() } else { self.unary_atom(false) };
                Com::while_(Bexp::cmp(CmpOp::Lt, Aexp::Var(x), Aexp::nat(bound)), inv, body)
            }
            _ => Com::seq(self.com(depth - 1, procs), self.com(depth - 1, procs)),
        }
    }

    fn read(&mut self, s: StateRef) -> LTerm {
        let i = self.loc().0;
        if self.cfg.pointers && self.chance(0.1) {
            LTerm::deref(s, i)
        } else {
            LTerm::loc(s, i)
        }
    }

    /// Simple comparison over the current state, and over `old` if allowed.
    pub fn unary_atom(&mut self, with_old: bool) -> Assertion {
        let side = |g: &mut Gen| -> LTerm {
            let s = if with_old && g.chance(0.4) { StateRef::Old } else { StateRef::Cur };
            match g.rng.gen_range(0..6) {
                0 | 1 => LTerm::constant(g.konst()),
                2 => LTerm::arith(ArithOp::Add, g.read(s), LTerm::constant(g.konst())),
                _ => g.read(s),
            }
        };
        let l = side(self);
        let r = side(self);
        Assertion::cmp(*CMP.choose(&mut self.rng).unwrap(), l, r)
    }

    fn rel_atom(&mut self, runs: usize, with_old: bool) -> Assertion {
        let side = |g: &mut Gen| -> LTerm {
            let k = g.rng.gen_range(1..=runs);
            let s = if with_old && g.chance(0.3) { StateRef::OldTag(k) } else { StateRef::Tag(k) };
            match g.rng.gen_range(0..6) {
                0 => LTerm::constant(g.konst()),
                1 => LTerm::arith(ArithOp::Add, g.read(s), LTerm::constant(g.konst())),
                _ => g.read(s),
            }
        };
        let l = side(self);
        let r = side(self);
        let op = *[CmpOp::Eq, CmpOp::Eq, CmpOp::Le, CmpOp::Lt, CmpOp::Ne, CmpOp::Ge]
            .choose(&mut self.rng)
            .unwrap();
        Assertion::cmp(op, l, r)
    }

    fn random_state(&mut self, max_val: u64) -> MemState {
        let mut s = MemState::new();
        for a in 0..=self.cfg.locs {
            s.store(a.into(), self.rng.gen_range(0..=max_val).into());
        }
        s
    }

    /// Conjunction of candidates that hold on every sampled run, or a random
    /// candidate with probability `wild`.
    fn likely_post(&mut self, candidates: Vec<Assertion>, holds: impl Fn(&Assertion) -> bool, wild: f64) -> Assertion {
        if self.chance(wild) {
            return candidates.choose(&mut self.rng).cloned().unwrap_or_else(Assertion::tt);
        }
        let mut kept: Vec<Assertion> = candidates.into_iter().filter(|a| holds(a)).collect();
        kept.shuffle(&mut self.rng);
        let take = self.rng.gen_range(1..=2);
        kept.truncate(take);
        kept.into_iter().reduce(Assertion::and).unwrap_or_else(Assertion::tt)
    }

    fn unary_post(&mut self, pre: &Assertion, c: &Com, procs: &ProcEnv, wild: f64) -> Assertion {
        let mut runs = Vec::new();
        for _ in 0..24 {
            let s = self.random_state(self.cfg.max_const);
            if eval_assertion(pre, &Bindings(&[(StateRef::Cur, &s)])).unwrap_or(false) {
                if let Ok(Outcome::Final(s2)) = exec(c, &s, procs, 64) {
                    runs.push((s, s2));
                }
            }
            if runs.len() >= 6 {
                break;
            }
        }
        let mut candidates: Vec<Assertion> = (0..10).map(|_| self.unary_atom(true)).collect();
        for x in 1..=self.cfg.locs {
            candidates.push(Assertion::cmp(CmpOp::Eq, LTerm::loc(StateRef::Cur, x), LTerm::loc(StateRef::Old, x)));
        }
        self.likely_post(
            candidates,
            |a| {
                runs.iter().all(|(s, s2)| {
                    eval_assertion(a, &Bindings(&[(StateRef::Old, s), (StateRef::Cur, s2)])).unwrap_or(false)
                })
            },
            wild,
        )
    }

    fn unary_pre(&mut self) -> Assertion {
        if self.chance(0.6) {
            Assertion::tt()
        } else {
            self.unary_atom(false)
        }
    }

    /// A file with up to two procedures with contracts and one single-run
    /// property `P`.
    pub fn hoare_instance(&mut self) -> ProgramFile {
        let nprocs = self.rng.gen_range(0..=2);
        let names: Vec<String> = (0..nprocs).map(|i| format!("p{i}")).collect();
        let mut procs = ProcEnv::new();
        let mut decls = Vec::new();
        for name in &names {
            let depth = self.rng.gen_range(1..=3);
            let body = self.com(depth, &names);
            procs.insert(name.clone(), body.clone());
            decls.push((name.clone(), body));
        }
        let mut file = ProgramFile::default();
        for (name, body) in decls {
            let pre = self.unary_pre();
            let post = self.unary_post(&pre, &body, &procs, 0.2);
            file.procs.push(ProcDecl {
                name,
                pre: Some(pre),
                post: Some(post),
                body,
            });
        }
        let depth = self.rng.gen_range(1..=self.cfg.max_depth);
        let c = self.com(depth, &names);
        let pre = self.unary_pre();
        let post = self.unary_post(&pre, &c, &procs, 0.2);
        file.properties.push(Property {
            label: "P".into(),
            commands: vec![c],
            pre,
            post,
        });
        file
    }

    fn rel_pre(&mut self, runs: usize) -> Assertion {
        let mut parts = Vec::new();
        for x in 1..=self.cfg.locs {
            if self.chance(0.6) {
                for k in 2..=runs {
                    parts.push(Assertion::cmp(
                        CmpOp::Eq,
                        LTerm::loc(StateRef::Tag(1), x),
                        LTerm::loc(StateRef::Tag(k), x),
                    ));
                }
            }
        }
        if self.chance(0.2) {
            parts.push(self.rel_atom(runs, false));
        }
        parts.into_iter().reduce(Assertion::and).unwrap_or_else(Assertion::tt)
    }

    fn rel_post(&mut self, pre: &Assertion, cs: &[Com], procs: &ProcEnv, wild: f64) -> Assertion {
        let runs = cs.len();
        let mut samples: Vec<(Vec<MemState>, Vec<MemState>)> = Vec::new();
        for _ in 0..60 {
            let mut ss: Vec<MemState> = (0..runs).map(|_| self.random_state(self.cfg.max_const)).collect();
            // Bias towards tuples that agree, so equality preconditions hold.
            if self.chance(0.7) {
                let base = ss[0].clone();
                for s in ss.iter_mut().skip(1) {
                    for x in 1..=self.cfg.locs {
                        if self.rng.gen_bool(0.8) {
                            s.store(x.into(), base.get_u64(x).clone());
                        }
                    }
                }
            }
            let env: Vec<(StateRef, &MemState)> = ss.iter().enumerate().map(|(k, s)| (StateRef::Tag(k + 1), s)).collect();
            if !eval_assertion(pre, &Bindings(&env)).unwrap_or(false) {
                continue;
            }
            let finals: Option<Vec<MemState>> = cs
                .iter()
                .zip(&ss)
                .map(|(c, s)| match exec(c, s, procs, 64) {
                    Ok(Outcome::Final(s2)) => Some(s2),
                    _ => None,
                })
                .collect();
            if let Some(f) = finals {
                samples.push((ss, f));
            }
            if samples.len() >= 8 {
                break;
            }
        }
        let mut candidates: Vec<Assertion> = (0..10).map(|_| self.rel_atom(runs, true)).collect();
        if runs >= 2 {
            for x in 1..=self.cfg.locs {
                candidates.push(Assertion::cmp(
                    CmpOp::Eq,
                    LTerm::loc(StateRef::Tag(1), x),
                    LTerm::loc(StateRef::Tag(2), x),
                ));
            }
        }
        self.likely_post(
            candidates,
            |a| {
                samples.iter().all(|(ss, fs)| {
                    let mut env = Vec::new();
                    for (k, (s, f)) in ss.iter().zip(fs).enumerate() {
                        env.push((StateRef::OldTag(k + 1), s));
                        env.push((StateRef::Tag(k + 1), f));
                    }
                    eval_assertion(a, &Bindings(&env)).unwrap_or(false)
                })
            },
            wild,
        )
    }

    /// Mutates a command slightly, for the second run of a relational pair.
    fn mutate(&mut self, c: &Com) -> Com {
        match c {
            Com::Assign(x, a) if self.chance(0.3) => Com::Assign(*x, Aexp::bin(ArithOp::Add, a.clone(), Aexp::nat(self.konst()))),
            Com::Seq(a, b) => Com::seq(self.mutate(a), self.mutate(b)),
            Com::If(b, t, e) if self.chance(0.2) => Com::if_(b.clone(), (**e).clone(), (**t).clone()),
            Com::If(b, t, e) => Com::if_(b.clone(), self.mutate(t), self.mutate(e)),
            other => other.clone(),
        }
    }

    /// A file with at most one procedure and a relational property `R` over
    /// one or two runs, possibly with relational contracts.
    pub fn rel_instance(&mut self) -> ProgramFile {
        let mut file = ProgramFile::default();
        let mut procs = ProcEnv::new();
        let names: Vec<String> = if self.chance(0.5) { vec!["p0".into()] } else { vec![] };
        for name in &names {
            let depth = self.rng.gen_range(1..=2);
            let body = self.com(depth, &names);
            procs.insert(name.clone(), body.clone());
            let (pre, post) = if self.chance(0.5) {
                let pre = self.unary_pre();
                let post = self.unary_post(&pre, &body, &procs, 0.2);
                (Some(pre), Some(post))
            } else {
                (None, None)
            };
            file.procs.push(ProcDecl {
                name: name.clone(),
                pre,
                post,
                body: body.clone(),
            });
            if self.chance(0.6) {
                let pre = self.rel_pre(2);
                let post = self.rel_post(&pre, &[body.clone(), body.clone()], &procs, 0.15);
                file.rel_contracts.push(RelDecl {
                    procs: vec![name.clone(), name.clone()],
                    pre,
                    post,
                });
            }
        }
        let runs = if self.chance(0.8) { 2 } else { 1 };
        let depth = self.rng.gen_range(1..=3);
        let c1 = self.com(depth, &names);
        let c2 = if self.chance(0.6) { self.mutate(&c1) } else { self.com(depth, &names) };
        let cs = if runs == 2 { vec![c1, c2] } else { vec![c1] };
        let pre = self.rel_pre(runs);
        let post = self.rel_post(&pre, &cs, &procs, 0.15);
        let view = |a: &Assertion| {
            if runs == 1 {
                crate::relvcgen::unary_view(a)
            } else {
                a.clone()
            }
        };
        file.properties.push(Property {
            label: "R".into(),
            commands: cs,
            pre: view(&pre),
            post: view(&post),
        });
        file
    }

    // ---- syntax coverage for round-trip tests

    fn any_term(&mut self, states: &[StateRef], vars: &[String], depth: u32) -> LTerm {
        if depth == 0 || self.chance(0.4) {
            return match self.rng.gen_range(0..8) {
                0 | 1 => LTerm::constant(self.rng.gen_range(0..20)),
                2 if !vars.is_empty() => LTerm::Var(vars.choose(&mut self.rng).unwrap().clone()),
                3 if !states.is_empty() => {
                    let s = *states.choose(&mut self.rng).unwrap();
                    LTerm::deref(s, self.loc().0)
                }
                _ if !states.is_empty() => {
                    let s = *states.choose(&mut self.rng).unwrap();
                    LTerm::loc(s, self.rng.gen_range(0..12))
                }
                _ => LTerm::constant(self.rng.gen_range(0..20)),
            };
        }
        if !states.is_empty() && self.chance(0.2) {
            let s = *states.choose(&mut self.rng).unwrap();
            return LTerm::Read(s, Box::new(self.any_term(states, vars, depth - 1)));
        }
        let op = *[ArithOp::Add, ArithOp::Monus, ArithOp::Mul].choose(&mut self.rng).unwrap();
        LTerm::arith(op, self.any_term(states, vars, depth - 1), self.any_term(states, vars, depth - 1))
    }

    /// Arbitrary well-formed assertion for `site`, including quantifiers.
    pub fn any_assertion(&mut self, site: AssertionSite, depth: u32) -> Assertion {
        let states: Vec<StateRef> = match site {
            AssertionSite::Unary => vec![StateRef::Cur],
            AssertionSite::UnaryPost => vec![StateRef::Cur, StateRef::Old],
            AssertionSite::RelPre { runs } => (1..=runs).map(StateRef::Tag).collect(),
            AssertionSite::RelPost { runs } => (1..=runs).flat_map(|k| [StateRef::Tag(k), StateRef::OldTag(k)]).collect(),
        };
        let mut vars = Vec::new();
        self.any_assn(&states, &mut vars, depth)
    }

    fn any_assn(&mut self, states: &[StateRef], vars: &mut Vec<String>, depth: u32) -> Assertion {
        if depth == 0 || self.chance(0.3) {
            return match self.rng.gen_range(0..10) {
                0 => Assertion::Bool(self.chance(0.5)),
                _ => {
                    let op = *CMP.choose(&mut self.rng).unwrap();
                    let l = self.any_term(states, vars, 2);
                    let r = self.any_term(states, vars, 2);
                    Assertion::cmp(op, l, r)
                }
            };
        }
        match self.rng.gen_range(0..6) {
            0 => Assertion::and(self.any_assn(states, vars, depth - 1), self.any_assn(states, vars, depth - 1)),
            1 => Assertion::or(self.any_assn(states, vars, depth - 1), self.any_assn(states, vars, depth - 1)),
            2 => Assertion::implies(self.any_assn(states, vars, depth - 1), self.any_assn(states, vars, depth - 1)),
            3 => Assertion::Not(Box::new(self.any_assn(states, vars, depth - 1))),
            _ => {
                let var = ["v", "w", "k", "idx"][self.rng.gen_range(0..4)].to_string();
                let kind = if self.chance(0.5) { Quantifier::Forall } else { Quantifier::Exists };
                let bound = self.chance(0.6).then(|| BigUint::from(self.rng.gen_range(0..5u32)));
                vars.push(var.clone());
                let body = self.any_assn(states, vars, depth - 1);
                vars.pop();
                Assertion::Quant {
                    kind,
                    var,
                    bound,
                    body: Box::new(body),
                }
            }
        }
    }

    fn annotate(&mut self, c: Com) -> Com {
        match c {
            Com::Assert(_) => Com::Assert(self.any_assertion(AssertionSite::Unary, 2)),
            Com::While { cond, body, .. } => {
                let inv = self.any_assertion(AssertionSite::Unary, 2);
                Com::while_(cond, inv, self.annotate(*body))
            }
            Com::Seq(a, b) => Com::seq(self.annotate(*a), self.annotate(*b)),
            Com::If(b, t, e) => Com::if_(b, self.annotate(*t), self.annotate(*e)),
            other => other,
        }
    }

    /// Arbitrary well-formed file exercising the whole surface syntax.
    pub fn program_file(&mut self) -> ProgramFile {
        let mut file = ProgramFile::default();
        let n = self.rng.gen_range(0..=3);
        let names: Vec<String> = (0..n).map(|i| format!("proc_{i}")).collect();
        let saved = self.cfg;
        self.cfg.nonlinear = true;
        for name in &names {
            let body = self.com(3, &names);
            let body = self.annotate(body);
            let pre = self.chance(0.5).then(|| self.any_assertion(AssertionSite::Unary, 2));
            let post = self.chance(0.5).then(|| self.any_assertion(AssertionSite::UnaryPost, 2));
            file.procs.push(ProcDecl {
                name: name.clone(),
                pre,
                post,
                body,
            });
        }
        if !names.is_empty() {
            for _ in 0..self.rng.gen_range(0..=2) {
                let runs = self.rng.gen_range(1..=3);
                let seq: Vec<String> = (0..runs).map(|_| names.choose(&mut self.rng).unwrap().clone()).collect();
                if file.rel_contracts.iter().any(|r| r.procs == seq) {
                    continue;
                }
                file.rel_contracts.push(RelDecl {
                    procs: seq,
                    pre: self.any_assertion(AssertionSite::RelPre { runs }, 2),
                    post: self.any_assertion(AssertionSite::RelPost { runs }, 2),
                });
            }
        }
        for i in 0..self.rng.gen_range(0..=2) {
            let runs = self.rng.gen_range(1..=3);
            let commands: Vec<Com> = (0..runs)
                .map(|_| {
                    let c = self.com(3, &names);
                    self.annotate(c)
                })
                .collect();
            let (pre, post) = if runs == 1 {
                (self.any_assertion(AssertionSite::Unary, 2), self.any_assertion(AssertionSite::UnaryPost, 2))
            } else {
                (
                    self.any_assertion(AssertionSite::RelPre { runs }, 2),
                    self.any_assertion(AssertionSite::RelPost { runs }, 2),
                )
            };
            file.properties.push(Property {
                label: format!("Prop{i}"),
                commands,
                pre,
                post,
            });
        }
        self.cfg = saved;
        file
    }
}

/// If-chain of depth `d` over one location, the shape used to compare
/// formula growth of the two generators.
pub fn if_chain(d: usize) -> Com {
    Com::block((0..d).map(|k| {
        Com::if_(
            Bexp::cmp(CmpOp::Lt, Aexp::var(1), Aexp::nat(k as u64)),
            Com::Assign(Loc(2), Aexp::bin(ArithOp::Add, Aexp::var(2), Aexp::nat(1))),
            Com::Assign(Loc(3), Aexp::bin(ArithOp::Add, Aexp::var(3), Aexp::nat(1))),
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let a = Gen::new(7, GenConfig::default()).hoare_instance();
        let b = Gen::new(7, GenConfig::default()).hoare_instance();
        assert_eq!(a, b);
    }

    #[test]
    fn depth_is_bounded() {
        fn depth(c: &Com) -> u32 {
            match c {
                Com::Seq(a, b) | Com::If(_, a, b) => 1 + depth(a).max(depth(b)),
                Com::While { body, .. } => 1 + depth(body),
                _ => 0,
            }
        }
        let mut g = Gen::new(1, GenConfig::default());
        for _ in 0..200 {
            // loop bodies add one sequencing level below the loop
            assert!(depth(&g.com(4, &[])) <= 5);
        }
    }

    #[test]
    fn instances_are_well_formed() {
        for seed in 0..40 {
            let mut g = Gen::new(seed, GenConfig::default());
            for f in [g.hoare_instance(), g.rel_instance(), g.program_file()] {
                let text = crate::parser::pretty(&f);
                let back = crate::parser::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
                assert_eq!(back, f);
            }
        }
    }
}
