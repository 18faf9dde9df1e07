//! Capture-avoiding substitution and alpha-equivalence over named binders.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::syntax::{Name, Term, TermKind, Type};

/// Free type variables of a type.
pub fn free_type_vars(ty: &Type) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_ftv(ty, &mut Vec::new(), &mut out);
    out
}

fn collect_ftv(ty: &Type, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match ty {
        Type::Top | Type::Nat => {}
        Type::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Type::Arrow(a, b) | Type::Inter(a, b) => {
            collect_ftv(a, bound, out);
            collect_ftv(b, bound, out);
        }
        Type::Forall(x, b, body) => {
            collect_ftv(b, bound, out);
            bound.push(x.clone());
            collect_ftv(body, bound, out);
            bound.pop();
        }
        Type::Record(_, a) | Type::Readonly(a) => collect_ftv(a, bound, out),
    }
}

/// Free term variables of a term.
pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_fv(t, &mut Vec::new(), &mut out);
    out
}

fn collect_fv(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match &t.kind {
        TermKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        TermKind::Abs(x, _, body) => {
            bound.push(x.clone());
            collect_fv(body, bound, out);
            bound.pop();
        }
        _ => {
            for c in t.children() {
                collect_fv(c, bound, out);
            }
        }
    }
}

/// Free type variables occurring in the type annotations of a term.
pub fn free_type_vars_in_term(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_term_ftv(t, &mut Vec::new(), &mut out);
    out
}

fn collect_term_ftv(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match &t.kind {
        TermKind::Abs(_, ty, body) => {
            collect_ftv(ty, bound, out);
            collect_term_ftv(body, bound, out);
        }
        TermKind::TyAbs(x, b, body) => {
            collect_ftv(b, bound, out);
            bound.push(x.clone());
            collect_term_ftv(body, bound, out);
            bound.pop();
        }
        TermKind::TyApp(f, ty) => {
            collect_term_ftv(f, bound, out);
            collect_ftv(ty, bound, out);
        }
        _ => {
            for c in t.children() {
                collect_term_ftv(c, bound, out);
            }
        }
    }
}

/// A variant of `base` that does not occur in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    if !avoid.contains(base) {
        return Name::from(base);
    }
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply of names")
}

/// `body[ty/var]` on types.
pub fn substitute_type(body: &Type, var: &str, ty: &Type) -> Type {
    let fv = free_type_vars(ty);
    subst_ty(body, var, ty, &fv)
}

fn subst_ty(body: &Type, var: &str, ty: &Type, fv: &BTreeSet<Name>) -> Type {
    match body {
        Type::Top => Type::Top,
        Type::Nat => Type::Nat,
        Type::Var(x) if x == var => ty.clone(),
        Type::Var(_) => body.clone(),
        Type::Arrow(a, b) => Type::arrow(subst_ty(a, var, ty, fv), subst_ty(b, var, ty, fv)),
        Type::Inter(a, b) => Type::inter(subst_ty(a, var, ty, fv), subst_ty(b, var, ty, fv)),
        Type::Record(l, a) => Type::record(l.clone(), subst_ty(a, var, ty, fv)),
        Type::Readonly(a) => Type::readonly(subst_ty(a, var, ty, fv)),
        Type::Forall(x, b, inner) => {
            let b2 = subst_ty(b, var, ty, fv);
            if x == var {
                return Type::Forall(x.clone(), Box::new(b2), inner.clone());
            }
            if fv.contains(x) {
                let mut avoid = fv.clone();
                avoid.extend(free_type_vars(inner));
                avoid.insert(Name::from(var));
                let y = fresh_name(x, &avoid);
                let renamed = subst_ty(inner, x, &Type::Var(y.clone()), &single(&y));
                Type::forall(y, b2, subst_ty(&renamed, var, ty, fv))
            } else {
                Type::forall(x.clone(), b2, subst_ty(inner, var, ty, fv))
            }
        }
    }
}

fn single(n: &Name) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    s.insert(n.clone());
    s
}

/// `body[value/var]` on terms.
pub fn substitute_term(body: &Term, var: &str, value: &Term) -> Term {
    let fv = free_vars(value);
    subst_term(body, var, value, &fv)
}

fn subst_term(body: &Term, var: &str, value: &Term, fv: &BTreeSet<Name>) -> Term {
    let span = body.span;
    let kind = match &body.kind {
        TermKind::Var(x) if x == var => return value.clone(),
        TermKind::Abs(x, ty, inner) => {
            if x == var {
                return body.clone();
            }
            if fv.contains(x) {
                let mut avoid = fv.clone();
                avoid.extend(free_vars(inner));
                avoid.insert(Name::from(var));
                let y = fresh_name(x, &avoid);
                let renamed = subst_term(inner, x, &Term::var(y.clone()), &single(&y));
                TermKind::Abs(y, ty.clone(), Box::new(subst_term(&renamed, var, value, fv)))
            } else {
                TermKind::Abs(x.clone(), ty.clone(), Box::new(subst_term(inner, var, value, fv)))
            }
        }
        _ => return map_children(body, |c| subst_term(c, var, value, fv)),
    };
    Term::new(kind, span)
}

/// `body[ty/tyvar]` on the type annotations of a term.
pub fn substitute_type_in_term(body: &Term, tyvar: &str, ty: &Type) -> Term {
    let fv = free_type_vars(ty);
    subst_ty_term(body, tyvar, ty, &fv)
}

fn subst_ty_term(body: &Term, var: &str, ty: &Type, fv: &BTreeSet<Name>) -> Term {
    let span = body.span;
    let kind = match &body.kind {
        TermKind::Abs(x, pty, inner) => TermKind::Abs(
            x.clone(),
            subst_ty(pty, var, ty, fv),
            Box::new(subst_ty_term(inner, var, ty, fv)),
        ),
        TermKind::TyApp(f, arg) => {
            TermKind::TyApp(Box::new(subst_ty_term(f, var, ty, fv)), subst_ty(arg, var, ty, fv))
        }
        TermKind::TyAbs(x, b, inner) => {
            let b2 = subst_ty(b, var, ty, fv);
            if x == var {
                TermKind::TyAbs(x.clone(), b2, inner.clone())
            } else if fv.contains(x) {
                let mut avoid = fv.clone();
                avoid.extend(free_type_vars_in_term(inner));
                avoid.insert(Name::from(var));
                let y = fresh_name(x, &avoid);
                let renamed = subst_ty_term(inner, x, &Type::Var(y.clone()), &single(&y));
                TermKind::TyAbs(y, b2, Box::new(subst_ty_term(&renamed, var, ty, fv)))
            } else {
                TermKind::TyAbs(x.clone(), b2, Box::new(subst_ty_term(inner, var, ty, fv)))
            }
        }
        _ => return map_children(body, |c| subst_ty_term(c, var, ty, fv)),
    };
    Term::new(kind, span)
}

/// Rebuilds a non-binding node with `f` applied to each child.
pub(crate) fn map_children(t: &Term, mut f: impl FnMut(&Term) -> Term) -> Term {
    let kind = match &t.kind {
        TermKind::Var(_) | TermKind::Nat(_) | TermKind::RecordVal(_) => t.kind.clone(),
        TermKind::Abs(x, ty, b) => TermKind::Abs(x.clone(), ty.clone(), Box::new(f(b))),
        TermKind::TyAbs(x, ty, b) => TermKind::TyAbs(x.clone(), ty.clone(), Box::new(f(b))),
        TermKind::App(a, b) => {
            let a = f(a);
            TermKind::App(Box::new(a), Box::new(f(b)))
        }
        TermKind::TyApp(a, ty) => TermKind::TyApp(Box::new(f(a)), ty.clone()),
        TermKind::Record(fields) => {
            TermKind::Record(fields.iter().map(|(l, c)| (l.clone(), f(c))).collect())
        }
        TermKind::Read(a, l) => TermKind::Read(Box::new(f(a)), l.clone()),
        TermKind::Write(a, l, b) => {
            let a = f(a);
            TermKind::Write(Box::new(a), l.clone(), Box::new(f(b)))
        }
        TermKind::Seal(a) => TermKind::Seal(Box::new(f(a))),
    };
    Term::new(kind, t.span)
}

/// Pairs of binder names that are identified while comparing under binders.
#[derive(Default, Clone)]
pub struct AlphaEnv {
    pairs: Vec<(Name, Name)>,
}

impl AlphaEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, a: &Name, b: &Name) {
        self.pairs.push((a.clone(), b.clone()));
    }

    pub fn pop(&mut self) {
        self.pairs.pop();
    }

    /// Whether free occurrence `a` on the left matches `b` on the right.
    pub fn matches(&self, a: &Name, b: &Name) -> bool {
        for (x, y) in self.pairs.iter().rev() {
            if x == a || y == b {
                return x == a && y == b;
            }
        }
        a == b
    }
}

pub fn alpha_eq_type(a: &Type, b: &Type) -> bool {
    alpha_eq_type_in(a, b, &mut AlphaEnv::new())
}

pub fn alpha_eq_type_in(a: &Type, b: &Type, env: &mut AlphaEnv) -> bool {
    match (a, b) {
        (Type::Top, Type::Top) | (Type::Nat, Type::Nat) => true,
        (Type::Var(x), Type::Var(y)) => env.matches(x, y),
        (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) | (Type::Inter(a1, a2), Type::Inter(b1, b2)) => {
            alpha_eq_type_in(a1, b1, env) && alpha_eq_type_in(a2, b2, env)
        }
        (Type::Record(l, a1), Type::Record(m, b1)) => l == m && alpha_eq_type_in(a1, b1, env),
        (Type::Readonly(a1), Type::Readonly(b1)) => alpha_eq_type_in(a1, b1, env),
        (Type::Forall(x, ab, abody), Type::Forall(y, bb, bbody)) => {
            if !alpha_eq_type_in(ab, bb, env) {
                return false;
            }
            env.push(x, y);
            let r = alpha_eq_type_in(abody, bbody, env);
            env.pop();
            r
        }
        _ => false,
    }
}

/// Alpha-equivalence of terms, with separate scopes for term and type binders.
pub fn alpha_eq_term(a: &Term, b: &Term) -> bool {
    alpha_eq_term_in(a, b, &mut AlphaEnv::new(), &mut AlphaEnv::new())
}

pub(crate) fn alpha_eq_term_in(
    a: &Term,
    b: &Term,
    vars: &mut AlphaEnv,
    tvars: &mut AlphaEnv,
) -> bool {
    match (&a.kind, &b.kind) {
        (TermKind::Var(x), TermKind::Var(y)) => vars.matches(x, y),
        (TermKind::Nat(m), TermKind::Nat(n)) => m == n,
        (TermKind::RecordVal(f), TermKind::RecordVal(g)) => f == g,
        (TermKind::Abs(x, tx, bx), TermKind::Abs(y, ty, by)) => {
            if !alpha_eq_type_in(tx, ty, tvars) {
                return false;
            }
            vars.push(x, y);
            let r = alpha_eq_term_in(bx, by, vars, tvars);
            vars.pop();
            r
        }
        (TermKind::TyAbs(x, tx, bx), TermKind::TyAbs(y, ty, by)) => {
            if !alpha_eq_type_in(tx, ty, tvars) {
                return false;
            }
            tvars.push(x, y);
            let r = alpha_eq_term_in(bx, by, vars, tvars);
            tvars.pop();
            r
        }
        (TermKind::App(f1, a1), TermKind::App(f2, a2)) => {
            alpha_eq_term_in(f1, f2, vars, tvars) && alpha_eq_term_in(a1, a2, vars, tvars)
        }
        (TermKind::TyApp(f1, t1), TermKind::TyApp(f2, t2)) => {
            alpha_eq_term_in(f1, f2, vars, tvars) && alpha_eq_type_in(t1, t2, tvars)
        }
        (TermKind::Record(f), TermKind::Record(g)) => {
            f.len() == g.len()
                && f
                    .iter()
                    .zip(g)
                    .all(|((l, s), (m, t))| l == m && alpha_eq_term_in(s, t, vars, tvars))
        }
        (TermKind::Read(s, l), TermKind::Read(t, m)) => {
            l == m && alpha_eq_term_in(s, t, vars, tvars)
        }
        (TermKind::Write(s1, l, s2), TermKind::Write(t1, m, t2)) => {
            l == m && alpha_eq_term_in(s1, t1, vars, tvars) && alpha_eq_term_in(s2, t2, vars, tvars)
        }
        (TermKind::Seal(s), TermKind::Seal(t)) => alpha_eq_term_in(s, t, vars, tvars),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitute_replaces_free_occurrence() {
        assert_eq!(substitute_term(&Term::var("x"), "x", &Term::nat(5)), Term::nat(5));
    }

    #[test]
    fn substitute_respects_shadowing() {
        let f = Term::abs("x", Type::Nat, Term::var("x"));
        assert_eq!(substitute_term(&f, "x", &Term::nat(5)), f);
    }

    #[test]
    fn substitute_avoids_capture() {
        // (fun(y: Top) x)[y/x] must not capture y.
        let body = Term::abs("y", Type::Top, Term::var("x"));
        let out = substitute_term(&body, "x", &Term::var("y"));
        match &out.kind {
            TermKind::Abs(p, _, b) => {
                assert_ne!(p, "y");
                assert_eq!(b.kind, TermKind::Var("y".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_substitution_direct() {
        let t = Type::readonly(Type::var("X"));
        let r = Type::record("f", Type::Nat);
        assert_eq!(substitute_type(&t, "X", &r), Type::readonly(r));
    }

    #[test]
    fn type_substitution_avoids_capture() {
        let t = Type::forall("Y", Type::Top, Type::arrow(Type::var("X"), Type::var("Y")));
        let out = substitute_type(&t, "X", &Type::var("Y"));
        let expected = Type::forall("Z", Type::Top, Type::arrow(Type::var("Y"), Type::var("Z")));
        assert!(alpha_eq_type(&out, &expected));
        assert!(!alpha_eq_type(&out, &Type::forall("Y", Type::Top, Type::arrow(Type::var("Y"), Type::var("Y")))));
    }

    #[test]
    fn alpha_equivalence_of_binders() {
        let a = Type::forall("X", Type::Top, Type::var("X"));
        let b = Type::forall("Y", Type::Top, Type::var("Y"));
        assert!(alpha_eq_type(&a, &b));
        let c = Type::forall("Y", Type::Top, Type::var("X"));
        assert!(!alpha_eq_type(&a, &c));
        let f = Term::abs("x", Type::Nat, Term::var("x"));
        let g = Term::abs("z", Type::Nat, Term::var("z"));
        assert!(alpha_eq_term(&f, &g));
    }

    #[test]
    fn fresh_name_skips_used() {
        let mut avoid = BTreeSet::new();
        avoid.insert(Name::from("X"));
        avoid.insert(Name::from("X1"));
        assert_eq!(fresh_name("X", &avoid), "X2");
        assert_eq!(fresh_name("Y", &avoid), "Y");
    }
}
