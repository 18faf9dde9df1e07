//! Normal forms of types.
//!
//! A normal type is an intersection of components, each of which is `Top`,
//! `Nat`, an arrow, a universal, a record, a variable, or `readonly` applied
//! to exactly a record or a variable.

use alloc::vec::Vec;

use crate::syntax::Type;

pub fn is_normal(t: &Type) -> bool {
    match t {
        Type::Top | Type::Nat | Type::Var(_) => true,
        Type::Arrow(a, b) | Type::Forall(_, a, b) | Type::Inter(a, b) => is_normal(a) && is_normal(b),
        Type::Record(_, f) => is_normal(f),
        Type::Readonly(inner) => match &**inner {
            Type::Record(_, f) => is_normal(f),
            Type::Var(_) => true,
            _ => false,
        },
    }
}

/// Normalizes a type. `readonly` is pushed through intersections, dropped on
/// `Top`, `Nat`, arrows and universals, and collapsed when repeated.
pub fn nf(t: &Type) -> Type {
    match t {
        Type::Top => Type::Top,
        Type::Nat => Type::Nat,
        Type::Var(x) => Type::Var(x.clone()),
        Type::Arrow(a, b) => Type::arrow(nf(a), nf(b)),
        Type::Forall(x, b, body) => Type::forall(x.clone(), nf(b), nf(body)),
        Type::Inter(a, b) => Type::inter(nf(a), nf(b)),
        Type::Record(l, f) => Type::record(l.clone(), nf(f)),
        Type::Readonly(inner) => ro(nf(inner)),
    }
}

/// `readonly` applied to a type already in normal form.
fn ro(t: Type) -> Type {
    match t {
        Type::Top | Type::Nat | Type::Arrow(..) | Type::Forall(..) | Type::Readonly(_) => t,
        Type::Inter(a, b) => Type::inter(ro(*a), ro(*b)),
        Type::Record(..) | Type::Var(_) => Type::readonly(t),
    }
}

/// Whether applying `readonly` to the type changes nothing after normalization.
pub fn is_readonly_type(t: &Type) -> bool {
    let n = nf(t);
    ro(n.clone()) == n
}

/// The non-intersection parts of a type, left to right.
pub fn components(t: &Type) -> Vec<&Type> {
    let mut out = Vec::new();
    fn walk<'a>(t: &'a Type, out: &mut Vec<&'a Type>) {
        match t {
            Type::Inter(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            _ => out.push(t),
        }
    }
    walk(t, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(l: &str, t: Type) -> Type {
        Type::record(l, t)
    }

    #[test]
    fn normal_form_examples() {
        let good = Type::inter(
            rec("x", Type::var("X")),
            Type::readonly(rec("y", Type::var("Y"))),
        );
        assert!(is_normal(&good));
        let bad = Type::readonly(Type::inter(rec("x", Type::var("X")), rec("y", Type::var("Y"))));
        assert!(!is_normal(&bad));
        assert!(is_normal(&Type::Top));
        assert!(!is_normal(&Type::readonly(Type::Top)));
        assert!(!is_normal(&Type::readonly(Type::readonly(Type::var("X")))));
    }

    #[test]
    fn nf_examples() {
        let r = rec("x", Type::Nat);
        assert_eq!(nf(&Type::readonly(Type::readonly(r.clone()))), Type::readonly(r));
        let f = Type::arrow(Type::Nat, Type::Nat);
        assert_eq!(nf(&Type::readonly(f.clone())), f);
        let both = Type::readonly(Type::inter(rec("x", Type::var("X")), rec("y", Type::var("Y"))));
        assert_eq!(
            nf(&both),
            Type::inter(
                Type::readonly(rec("x", Type::var("X"))),
                Type::readonly(rec("y", Type::var("Y")))
            )
        );
    }

    #[test]
    fn readonly_predicate() {
        assert!(is_readonly_type(&Type::readonly(rec("x", Type::Nat))));
        assert!(!is_readonly_type(&rec("x", Type::Nat)));
        assert!(is_readonly_type(&Type::arrow(Type::Nat, Type::Nat)));
        assert!(is_readonly_type(&Type::Top));
        assert!(!is_readonly_type(&Type::inter(Type::Top, Type::var("X"))));
    }
}
