//! Printing terms, types and stores in surface syntax.
//!
//! Output re-parses to an alpha-equivalent term. Runtime records print in
//! trace notation, `{x : 0x0001}`, which the parser deliberately rejects.

use alloc::string::String;
use core::fmt::{self, Write};

use crate::syntax::{Store, Term, TermKind, Type};

pub fn pretty_type(t: &Type) -> String {
    let mut s = String::new();
    write_type(&mut s, t, 0).expect("writing to a String");
    s
}

pub fn pretty_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t, 0).expect("writing to a String");
    s
}

/// `[0x0001: 10, 0x0002: {x : 0x0001}]`
pub fn pretty_store(store: &Store) -> String {
    let mut s = String::from("[");
    for (i, (l, v)) in store.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{l}: ");
        let _ = write_term(&mut s, v, 0);
    }
    s.push(']');
    s
}

// forall = 0, arrow = 1, intersection = 2, readonly = 3, atoms = 4
fn type_level(t: &Type) -> u8 {
    match t {
        Type::Forall(..) => 0,
        Type::Arrow(..) => 1,
        Type::Inter(..) => 2,
        Type::Readonly(_) => 3,
        _ => 4,
    }
}

fn write_type(out: &mut impl Write, t: &Type, min: u8) -> fmt::Result {
    if type_level(t) < min {
        out.write_char('(')?;
        write_type(out, t, 0)?;
        return out.write_char(')');
    }
    match t {
        Type::Top => out.write_str("Top"),
        Type::Nat => out.write_str("Nat"),
        Type::Var(x) => out.write_str(x),
        Type::Record(l, f) => {
            write!(out, "{{{l}: ")?;
            write_type(out, f, 0)?;
            out.write_char('}')
        }
        Type::Readonly(inner) => {
            out.write_str("readonly ")?;
            write_type(out, inner, 3)
        }
        Type::Inter(a, b) => {
            write_type(out, a, 2)?;
            out.write_str(" & ")?;
            write_type(out, b, 3)
        }
        Type::Arrow(a, b) => {
            write_type(out, a, 2)?;
            out.write_str(" -> ")?;
            write_type(out, b, 1)
        }
        Type::Forall(x, bound, body) => {
            write!(out, "forall({x} <: ")?;
            write_type(out, bound, 0)?;
            out.write_str(") ")?;
            write_type(out, body, 0)
        }
    }
}

// binders = 0, assignment = 1, application = 2, seal = 3, postfix = 4, atoms = 5
fn term_level(t: &Term) -> u8 {
    match &t.kind {
        TermKind::Abs(..) | TermKind::TyAbs(..) => 0,
        TermKind::Write(..) => 1,
        TermKind::App(..) => 2,
        TermKind::Seal(_) => 3,
        TermKind::Read(..) | TermKind::TyApp(..) => 4,
        _ => 5,
    }
}

fn write_term(out: &mut impl Write, t: &Term, min: u8) -> fmt::Result {
    if term_level(t) < min {
        out.write_char('(')?;
        write_term(out, t, 0)?;
        return out.write_char(')');
    }
    match &t.kind {
        TermKind::Var(x) => out.write_str(x),
        TermKind::Nat(n) => write!(out, "{n}"),
        TermKind::Abs(x, ty, body) => {
            write!(out, "fun({x}: ")?;
            write_type(out, ty, 0)?;
            out.write_str(") ")?;
            write_term(out, body, 0)
        }
        TermKind::TyAbs(x, bound, body) => {
            write!(out, "tfun({x} <: ")?;
            write_type(out, bound, 0)?;
            out.write_str(") ")?;
            write_term(out, body, 0)
        }
        TermKind::App(f, a) => {
            write_term(out, f, 2)?;
            out.write_char(' ')?;
            write_term(out, a, 3)
        }
        TermKind::TyApp(f, ty) => {
            write_term(out, f, 4)?;
            out.write_str(" [")?;
            write_type(out, ty, 0)?;
            out.write_char(']')
        }
        TermKind::Record(fields) => {
            out.write_char('{')?;
            for (i, (l, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write!(out, "{l} = ")?;
                write_term(out, v, 0)?;
            }
            out.write_char('}')
        }
        TermKind::RecordVal(fields) => {
            out.write_char('{')?;
            for (i, (l, loc)) in fields.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write!(out, "{l} : {loc}")?;
            }
            out.write_char('}')
        }
        TermKind::Read(target, l) => {
            write_term(out, target, 4)?;
            write!(out, ".{l}")
        }
        TermKind::Write(target, l, src) => {
            write_term(out, target, 4)?;
            write!(out, ".{l} := ")?;
            write_term(out, src, 0)
        }
        TermKind::Seal(inner) => {
            out.write_str("seal ")?;
            write_term(out, inner, 3)
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(f, self, 0)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Location;

    #[test]
    fn runtime_records_use_trace_notation() {
        let r = Term::record_val([("x", Location(1))]);
        assert_eq!(pretty_term(&r), "{x : 0x0001}");
        assert_eq!(pretty_term(&Term::seal(r.clone())), "seal {x : 0x0001}");
        let w = Term::write(Term::seal(r), "x", Term::nat(5));
        assert_eq!(pretty_term(&w), "(seal {x : 0x0001}).x := 5");
    }

    #[test]
    fn types() {
        assert_eq!(pretty_type(&Type::Top), "Top");
        let t = Type::inter(Type::record("x", Type::Nat), Type::record("y", Type::Nat));
        assert_eq!(pretty_type(&t), "{x: Nat} & {y: Nat}");
        let ro = Type::readonly(Type::inter(Type::var("X"), Type::var("Y")));
        assert_eq!(pretty_type(&ro), "readonly (X & Y)");
        let ar = Type::arrow(Type::arrow(Type::Nat, Type::Nat), Type::Nat);
        assert_eq!(pretty_type(&ar), "(Nat -> Nat) -> Nat");
    }

    #[test]
    fn terms() {
        let omega = Term::abs("x", Type::Top, Term::app(Term::var("x"), Term::var("x")));
        assert_eq!(
            pretty_term(&Term::app(omega.clone(), omega)),
            "(fun(x: Top) x x) (fun(x: Top) x x)"
        );
        let store = Store::from_cells([
            (Location(1), Term::nat(10)),
            (Location(2), Term::record_val([("x", Location(1))])),
        ]);
        assert_eq!(pretty_store(&store), "[0x0001: 10, 0x0002: {x : 0x0001}]");
    }
}
