//! F<: extended with mutable records, a `readonly` type operator and
//! runtime seals.
//!
//! Everything here is `no_std` with `alloc`: syntax and substitution, the
//! surface parser and printer, normal forms, subtyping, a bidirectional
//! checker, a small-step store machine, and the harness that exercises the
//! safety properties on concrete runs.

#![no_std]

extern crate alloc;

pub mod diag;
pub mod harness;
pub mod machine;
pub mod parser;
pub mod pretty;
pub mod seals;
pub mod subst;
pub mod syntax;
pub mod types;

pub use diag::{Diagnostic, Severity};
pub use machine::{eval, step, Machine, MachineConfig, Mutation, Outcome, StepResult, StuckCause, Trace};
pub use parser::{parse_program, parse_term, parse_type, Program};
pub use pretty::{pretty_store, pretty_term, pretty_type};
pub use seals::{erase_seals, erase_store, seal_count, seal_leq, store_leq};
pub use syntax::{is_value, Location, Name, Span, Store, Term, TermKind, Type};
