//! Modular verification of functional and relational properties for a small
//! imperative language with pointers and procedures.
//!
//! Programs are checked by generating linear-size verification conditions
//! ([`vcgen`], [`relvcgen`]) and discharging them with an external SMT solver
//! ([`smt`]). An executable semantics ([`interp`]) and a bounded exhaustive
//! checker ([`oracle`]) provide ground truth for differential testing.

pub mod assertions;
pub mod ast;
pub mod formula;
pub mod gen;
pub mod interp;
pub mod oracle;
pub mod parser;
pub mod relvcgen;
pub mod smt;
pub mod vcgen;
