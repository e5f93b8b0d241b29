//! Counter-models: reading solver values back and replaying them against the
//! lowered assertions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use super::lower::LoweredScript;
use super::sexp::{unquote, Sexp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot evaluate `{0}`")]
pub struct EvalError(pub String);

#[derive(Debug, Clone)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Array(Rc<ArrayVal>),
}

#[derive(Debug, Clone)]
pub enum ArrayVal {
    Const(BigInt),
    Store(Rc<ArrayVal>, BigInt, BigInt),
    Lambda {
        param: String,
        body: Sexp,
        env: Env,
    },
}

type Env = Rc<Vec<(String, Value)>>;

impl ArrayVal {
    pub fn select(&self, i: &BigInt, m: &Model) -> Result<BigInt, EvalError> {
        match self {
            ArrayVal::Const(k) => Ok(k.clone()),
            ArrayVal::Store(base, j, v) => {
                if i == j {
                    Ok(v.clone())
                } else {
                    base.select(i, m)
                }
            }
            ArrayVal::Lambda { param, body, env } => {
                let mut e = (**env).clone();
                e.push((param.clone(), Value::Int(i.clone())));
                m.eval_in(body, &Rc::new(e))?.int()
            }
        }
    }

    /// Indices written explicitly in the value.
    pub fn explicit_indices(&self, out: &mut BTreeSet<BigInt>) {
        if let ArrayVal::Store(base, j, _) = self {
            out.insert(j.clone());
            base.explicit_indices(out);
        }
    }

    // Extensional equality, decided by sampling every index at which either
    // array may change value. Lambdas from solver models are piecewise
    // constant between the literals their parameter is compared with.
    fn extensionally_equal(&self, other: &ArrayVal, m: &Model) -> Result<bool, EvalError> {
        let mut cuts = BTreeSet::new();
        self.breakpoints(m, &mut cuts, 0)?;
        other.breakpoints(m, &mut cuts, 0)?;
        let mut points = BTreeSet::new();
        for k in &cuts {
            points.insert(k - 1);
            points.insert(k.clone());
            points.insert(k + 1);
        }
        let lo = cuts.first().cloned().unwrap_or_default() - 2;
        let hi = cuts.last().cloned().unwrap_or_default() + 2;
        points.insert(lo);
        points.insert(hi);
        for i in &points {
            if self.select(i, m)? != other.select(i, m)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn breakpoints(&self, m: &Model, out: &mut BTreeSet<BigInt>, depth: usize) -> Result<(), EvalError> {
        if depth > 8 {
            return Err(EvalError("lambda arrays nest too deeply".into()));
        }
        match self {
            ArrayVal::Const(_) => Ok(()),
            ArrayVal::Store(base, j, _) => {
                out.insert(j.clone());
                base.breakpoints(m, out, depth)
            }
            ArrayVal::Lambda { param, body, env } => lambda_cuts(param, body, env, m, out, depth),
        }
    }
}

fn mentions(e: &Sexp, name: &str) -> bool {
    match e {
        Sexp::Atom(a) => unquote(a) == name,
        Sexp::List(items) => items.iter().any(|x| mentions(x, name)),
    }
}

// Collects the constants `param` is compared with. Fails if `param` is used
// in any other way, since the lambda might then not be piecewise constant.
fn lambda_cuts(
    param: &str,
    e: &Sexp,
    env: &Env,
    m: &Model,
    out: &mut BTreeSet<BigInt>,
    depth: usize,
) -> Result<(), EvalError> {
    let items = match e {
        Sexp::Atom(a) if unquote(a) == param => {
            return Err(EvalError(format!("cannot decide equality: `{param}` used outside a comparison")))
        }
        Sexp::Atom(_) => return Ok(()),
        Sexp::List(items) => items,
    };
    let head = items.first().and_then(Sexp::as_atom);
    let is_param = |x: &Sexp| x.as_atom().is_some_and(|a| unquote(a) == param);
    match (head, &items[1..]) {
        (Some("=" | "<" | "<=" | ">" | ">="), [a, b]) if is_param(a) || is_param(b) => {
            let other = if is_param(a) { b } else { a };
            if mentions(other, param) {
                return Err(EvalError(format!("cannot decide equality: `{param}` compared with itself")));
            }
            out.insert(m.eval_in(other, env)?.int()?);
            Ok(())
        }
        (Some("select"), [arr, i]) if is_param(i) && !mentions(arr, param) => {
            m.eval_in(arr, env)?.array()?.breakpoints(m, out, depth + 1)
        }
        _ => items.iter().try_for_each(|x| lambda_cuts(param, x, env, m, out, depth)),
    }
}

impl Value {
    fn int(self) -> Result<BigInt, EvalError> {
        match self {
            Value::Int(n) => Ok(n),
            other => Err(EvalError(format!("expected integer, got {other:?}"))),
        }
    }

    fn bool(self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(b),
            other => Err(EvalError(format!("expected boolean, got {other:?}"))),
        }
    }

    fn array(self) -> Result<Rc<ArrayVal>, EvalError> {
        match self {
            Value::Array(a) => Ok(a),
            other => Err(EvalError(format!("expected array, got {other:?}"))),
        }
    }
}

/// Constant interpretations plus truth values of call-atom instances.
#[derive(Debug, Clone, Default)]
pub struct Model {
    consts: HashMap<String, Value>,
    calls: HashMap<String, bool>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a `get-value` response `((term value) ...)`. Terms that are
    /// applications are recorded as call instances.
    pub fn absorb(&mut self, response: &Sexp) -> Result<(), EvalError> {
        let pairs = response
            .as_list()
            .ok_or_else(|| EvalError(response.to_string()))?;
        for p in pairs {
            let [term, value] = p.as_list().unwrap_or(&[]) else {
                return Err(EvalError(p.to_string()));
            };
            let v = self.eval(value)?;
            match term {
                Sexp::Atom(a) => {
                    self.consts.insert(unquote(a).to_string(), v);
                }
                Sexp::List(_) => {
                    self.calls.insert(term.canonical(), v.bool()?);
                }
            }
        }
        Ok(())
    }

    pub fn set_int(&mut self, name: &str, v: BigInt) {
        self.consts.insert(name.to_string(), Value::Int(v));
    }

    pub fn set_array(&mut self, name: &str, a: ArrayVal) {
        self.consts.insert(name.to_string(), Value::Array(Rc::new(a)));
    }

    pub fn set_call(&mut self, instance: &Sexp, v: bool) {
        self.calls.insert(instance.canonical(), v);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.consts.get(name)
    }

    pub fn call_value(&self, instance: &Sexp) -> Option<bool> {
        self.calls.get(&instance.canonical()).copied()
    }

    pub fn eval(&self, e: &Sexp) -> Result<Value, EvalError> {
        self.eval_in(e, &Rc::new(Vec::new()))
    }

    fn eval_in(&self, e: &Sexp, env: &Env) -> Result<Value, EvalError> {
        match e {
            Sexp::Atom(a) => {
                if let Ok(n) = a.parse::<BigInt>() {
                    return Ok(Value::Int(n));
                }
                match a.as_str() {
                    "true" => return Ok(Value::Bool(true)),
                    "false" => return Ok(Value::Bool(false)),
                    _ => {}
                }
                let name = unquote(a);
                if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == name) {
                    return Ok(v.clone());
                }
                self.consts
                    .get(name)
                    .cloned()
                    .ok_or_else(|| EvalError(format!("unknown symbol {a}")))
            }
            Sexp::List(items) => self.eval_app(e, items, env),
        }
    }

    fn eval_app(&self, whole: &Sexp, items: &[Sexp], env: &Env) -> Result<Value, EvalError> {
        let err = || EvalError(whole.to_string());
        let (head, args) = items.split_first().ok_or_else(err)?;
        // ((as const (Array Int Int)) k)
        if let Sexp::List(h) = head {
            if h.first().and_then(Sexp::as_atom) == Some("as") && h.get(1).and_then(Sexp::as_atom) == Some("const") {
                let [k] = args else { return Err(err()) };
                return Ok(Value::Array(Rc::new(ArrayVal::Const(self.eval_in(k, env)?.int()?))));
            }
            return Err(err());
        }
        let head = head.as_atom().ok_or_else(err)?;
        let int = |i: usize| -> Result<BigInt, EvalError> { self.eval_in(args.get(i).ok_or_else(err)?, env)?.int() };
        let boolean = |x: &Sexp| -> Result<bool, EvalError> { self.eval_in(x, env)?.bool() };
        Ok(match head {
            "let" => {
                let binds = args.first().and_then(Sexp::as_list).ok_or_else(err)?;
                let mut e = (**env).clone();
                for b in binds {
                    let [name, val] = b.as_list().unwrap_or(&[]) else { return Err(err()) };
                    let v = self.eval_in(val, env)?;
                    e.push((unquote(name.as_atom().ok_or_else(err)?).to_string(), v));
                }
                return self.eval_in(args.get(1).ok_or_else(err)?, &Rc::new(e));
            }
            "lambda" => {
                let params = args.first().and_then(Sexp::as_list).ok_or_else(err)?;
                let [p] = params else { return Err(err()) };
                let name = p.as_list().and_then(|l| l.first()).and_then(Sexp::as_atom).ok_or_else(err)?;
                Value::Array(Rc::new(ArrayVal::Lambda {
                    param: unquote(name).to_string(),
                    body: args.get(1).ok_or_else(err)?.clone(),
                    env: env.clone(),
                }))
            }
            "forall" | "exists" => return Err(err()),
            "+" => Value::Int(args.iter().map(|a| self.eval_in(a, env)?.int()).sum::<Result<BigInt, _>>()?),
            "*" => Value::Int(args.iter().map(|a| self.eval_in(a, env)?.int()).product::<Result<BigInt, _>>()?),
            "-" if args.len() == 1 => Value::Int(-int(0)?),
            "-" => {
                let mut acc = int(0)?;
                for i in 1..args.len() {
                    acc -= int(i)?;
                }
                Value::Int(acc)
            }
            "<=" => Value::Bool(int(0)? <= int(1)?),
            "<" => Value::Bool(int(0)? < int(1)?),
            ">=" => Value::Bool(int(0)? >= int(1)?),
            ">" => Value::Bool(int(0)? > int(1)?),
            "not" => Value::Bool(!boolean(args.first().ok_or_else(err)?)?),
            "and" => {
                let mut acc = true;
                for a in args {
                    acc &= boolean(a)?;
                }
                Value::Bool(acc)
            }
            "or" => {
                let mut acc = false;
                for a in args {
                    acc |= boolean(a)?;
                }
                Value::Bool(acc)
            }
            "=>" => {
                let [a, b] = args else { return Err(err()) };
                Value::Bool(!boolean(a)? || boolean(b)?)
            }
            "ite" => {
                let [c, t, e] = args else { return Err(err()) };
                if boolean(c)? {
                    self.eval_in(t, env)?
                } else {
                    self.eval_in(e, env)?
                }
            }
            "=" => {
                let [a, b] = args else { return Err(err()) };
                let (a, b) = (self.eval_in(a, env)?, self.eval_in(b, env)?);
                Value::Bool(match (a, b) {
                    (Value::Int(x), Value::Int(y)) => x == y,
                    (Value::Bool(x), Value::Bool(y)) => x == y,
                    (Value::Array(x), Value::Array(y)) => x.extensionally_equal(&y, self)?,
                    _ => return Err(err()),
                })
            }
            "select" => {
                let arr = self.eval_in(args.first().ok_or_else(err)?, env)?.array()?;
                Value::Int(arr.select(&int(1)?, self)?)
            }
            "store" => {
                let arr = self.eval_in(args.first().ok_or_else(err)?, env)?.array()?;
                Value::Array(Rc::new(ArrayVal::Store(arr, int(1)?, int(2)?)))
            }
            _ => {
                // Uninterpreted applications are only known at the requested
                // instances.
                Value::Bool(self.calls.get(&whole.canonical()).copied().ok_or_else(err)?)
            }
        })
    }
}

/// One memory cell of a counter-model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Sample {
    pub state: String,
    pub addr: BigUint,
    pub value: BigUint,
}

/// A satisfying assignment of the negated goal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CounterModel {
    /// Cells of every state constant at the addresses the goal reads and
    /// the addresses the solver wrote explicitly.
    pub samples: Vec<Sample>,
    /// Integer constants introduced for logical variables.
    pub ints: Vec<(String, BigInt)>,
    /// Truth values of call atoms over top-level states.
    pub calls: Vec<(String, bool)>,
    /// Whether replaying the model makes every quantifier-free assertion true.
    /// `None` when some assertion could not be evaluated.
    pub replay: Option<bool>,
}

/// Evaluates every quantifier-free assertion of `script` under `m`.
/// `Some(true)` means the model falsifies the goal.
pub fn replay(script: &LoweredScript, m: &Model) -> Option<bool> {
    let mut ok = true;
    for a in &script.assertions {
        if a.has_binder() {
            continue;
        }
        match m.eval(a) {
            Ok(Value::Bool(b)) => ok &= b,
            _ => return None,
        }
    }
    Some(ok)
}

pub fn counter_model(script: &LoweredScript, m: &Model) -> CounterModel {
    let mut addrs: BTreeMap<String, BTreeSet<BigInt>> = BTreeMap::new();
    for a in &script.assertions {
        if !a.has_binder() {
            collect_reads(a, m, &mut addrs);
        }
    }
    let mut samples = Vec::new();
    for g in &script.states {
        let Some(Value::Array(arr)) = m.get(&g.symbol) else { continue };
        let mut idx = addrs.remove(&g.symbol).unwrap_or_default();
        arr.explicit_indices(&mut idx);
        for i in idx {
            let (Some(addr), Ok(v)) = (i.to_biguint(), arr.select(&i, m)) else { continue };
            if let Some(value) = v.to_biguint() {
                samples.push(Sample {
                    state: g.source.clone(),
                    addr,
                    value,
                });
            }
        }
    }
    let ints = script
        .ints
        .iter()
        .filter_map(|g| match m.get(&g.symbol) {
            Some(Value::Int(n)) => Some((g.source.clone(), n.clone())),
            _ => None,
        })
        .collect();
    let calls = script
        .call_instances
        .iter()
        .filter_map(|c| m.call_value(c).map(|b| (c.canonical(), b)))
        .collect();
    CounterModel {
        samples,
        ints,
        calls,
        replay: replay(script, m),
    }
}

fn collect_reads(e: &Sexp, m: &Model, out: &mut BTreeMap<String, BTreeSet<BigInt>>) {
    let Sexp::List(items) = e else { return };
    if let [Sexp::Atom(h), Sexp::Atom(arr), idx] = items.as_slice() {
        if h == "select" {
            if let Ok(Value::Int(i)) = m.eval(idx) {
                if !i.is_negative() && i.to_u64().is_some() {
                    out.entry(unquote(arr).to_string()).or_default().insert(i);
                }
            }
        }
    }
    for x in items {
        collect_reads(x, m, out);
    }
}

impl CounterModel {
    /// Compact single-line rendering, e.g. `s(1)=0 s'(1)=2`.
    pub fn summary(&self) -> String {
        let mut parts: Vec<String> = self
            .samples
            .iter()
            .map(|s| format!("{}({})={}", s.state, s.addr, s.value))
            .collect();
        parts.extend(self.ints.iter().map(|(v, n)| format!("{v}={n}")));
        parts.extend(self.calls.iter().map(|(c, b)| format!("{c}={b}")));
        parts.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::sexp::parse_prefix;
    use num_traits::Zero;

    fn sx(t: &str) -> Sexp {
        parse_prefix(t).unwrap().0
    }

    #[test]
    fn z3_style_array_values() {
        let mut m = Model::new();
        m.absorb(&sx(
            "((|s| (let ((a!1 (store ((as const (Array Int Int)) 5) 1 3))) (store a!1 2 (- 4)))) (k 7))",
        ))
        .unwrap();
        let n = |t: &str| match m.eval(&sx(t)).unwrap() {
            Value::Int(n) => n,
            v => panic!("{v:?}"),
        };
        assert_eq!(n("(select |s| 1)"), 3.into());
        assert_eq!(n("(select s 2)"), (-4).into());
        assert_eq!(n("(select |s| 9)"), 5.into());
        assert_eq!(n("(+ k 1 (* 2 3))"), 14.into());
        assert_eq!(n("(ite (>= 1 2) (- 1 2) 0)"), 0.into());
    }

    #[test]
    fn lambda_arrays() {
        let mut m = Model::new();
        m.absorb(&sx("((a (lambda ((x!1 Int)) (ite (= x!1 2) 9 0))))")).unwrap();
        assert!(matches!(m.eval(&sx("(= (select a 2) 9)")).unwrap(), Value::Bool(true)));
        assert!(matches!(m.eval(&sx("(select a 3)")).unwrap(), Value::Int(n) if n.is_zero()));
    }

    #[test]
    fn array_equality_is_extensional() {
        let mut m = Model::new();
        m.absorb(&sx(
            "((a (store ((as const (Array Int Int)) 0) 1 0)) (b ((as const (Array Int Int)) 0)))",
        ))
        .unwrap();
        assert!(matches!(m.eval(&sx("(= a b)")).unwrap(), Value::Bool(true)));
        assert!(matches!(m.eval(&sx("(= (store a 1 1) b)")).unwrap(), Value::Bool(false)));
    }

    #[test]
    fn lambda_equality() {
        let mut m = Model::new();
        m.absorb(&sx(
            "((a (lambda ((x!1 Int)) (ite (= x!1 2) 9 (ite (< x!1 0) 1 0)))) \
              (b (store (store ((as const (Array Int Int)) 0) 2 9) (- 1) 1)) \
              (c (lambda ((x!1 Int)) (ite (= x!1 2) 9 0))) \
              (d (lambda ((x!1 Int)) (select c x!1))) \
              (e (lambda ((x!1 Int)) (+ x!1 1))))",
        ))
        .unwrap();
        let truth = |t: &str| match m.eval(&sx(t)) {
            Ok(Value::Bool(b)) => Some(b),
            _ => None,
        };
        // a differs from b below -1.
        assert_eq!(truth("(= a b)"), Some(false));
        assert_eq!(truth("(= c (store ((as const (Array Int Int)) 0) 2 9))"), Some(true));
        assert_eq!(truth("(= c d)"), Some(true));
        assert_eq!(truth("(= (store c 5 1) d)"), Some(false));
        assert_eq!(truth("(= e c)"), None);
    }

    #[test]
    fn call_instances() {
        let mut m = Model::new();
        m.absorb(&sx("(((|call_sum| |s| |s'|) true))")).unwrap();
        assert_eq!(m.call_value(&sx("(call_sum s |s'|)")), Some(true));
        assert!(m.eval(&sx("(call_sum |s'| s)")).is_err());
    }
}
