//! Bidirectional type checking producing annotated derivations.
//!
//! Synthesis gives each form its natural type. Checking against an expected
//! type pushes field types into record literals and codomains into
//! functions where plain synthesis would be too precise for invariant record
//! fields, then falls back to subsumption.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::context::{StoreTyping, TypeContext};
use super::normal::{components, is_readonly_type, nf};
use super::subtype::{subtype_with_fuel, OutOfFuel, DEFAULT_SUBTYPE_FUEL};
use crate::diag::Diagnostic;
use crate::subst::{
    free_type_vars, free_type_vars_in_term, fresh_name, substitute_type, substitute_type_in_term,
};
use crate::syntax::{Location, Name, Span, Store, Term, TermKind, Type};

/// A term node with the type its own typing rule assigned.
#[derive(Clone, Debug, PartialEq)]
pub struct Typed {
    pub ty: Type,
    pub rule: &'static str,
    pub span: Span,
    pub node: TypedNode,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypedNode {
    Var(Name),
    Nat(u64),
    Abs(Name, Type, Box<Typed>),
    App(Box<Typed>, Box<Typed>),
    TyAbs(Name, Type, Box<Typed>),
    TyApp(Box<Typed>, Type),
    Record(Vec<(Name, Typed)>),
    RecordVal(Vec<(Name, Location)>),
    Read(Box<Typed>, Name),
    Write(Box<Typed>, Name, Box<Typed>),
    Seal(Box<Typed>),
}

/// A checked term: the annotated tree plus the type it was judged at, which
/// is the expected type when one was supplied.
#[derive(Clone, Debug, PartialEq)]
pub struct TypedTerm {
    pub root: Typed,
    pub judged: Type,
}

impl TypedTerm {
    /// The underlying term with annotations dropped.
    pub fn term(&self) -> Term {
        self.root.term()
    }
}

impl Typed {
    pub fn term(&self) -> Term {
        let kind = match &self.node {
            TypedNode::Var(x) => TermKind::Var(x.clone()),
            TypedNode::Nat(n) => TermKind::Nat(*n),
            TypedNode::Abs(x, ty, b) => TermKind::Abs(x.clone(), ty.clone(), Box::new(b.term())),
            TypedNode::App(f, a) => TermKind::App(Box::new(f.term()), Box::new(a.term())),
            TypedNode::TyAbs(x, ty, b) => TermKind::TyAbs(x.clone(), ty.clone(), Box::new(b.term())),
            TypedNode::TyApp(f, ty) => TermKind::TyApp(Box::new(f.term()), ty.clone()),
            TypedNode::Record(fields) => {
                TermKind::Record(fields.iter().map(|(l, t)| (l.clone(), t.term())).collect())
            }
            TypedNode::RecordVal(fields) => TermKind::RecordVal(fields.clone()),
            TypedNode::Read(t, l) => TermKind::Read(Box::new(t.term()), l.clone()),
            TypedNode::Write(t, l, s) => {
                TermKind::Write(Box::new(t.term()), l.clone(), Box::new(s.term()))
            }
            TypedNode::Seal(t) => TermKind::Seal(Box::new(t.term())),
        };
        Term::new(kind, self.span)
    }

    /// Immediate children, in the same order as [`Term::children`].
    pub fn children(&self) -> Vec<&Typed> {
        match &self.node {
            TypedNode::Var(_) | TypedNode::Nat(_) | TypedNode::RecordVal(_) => Vec::new(),
            TypedNode::Abs(_, _, b) | TypedNode::TyAbs(_, _, b) => vec![&**b],
            TypedNode::App(f, a) => vec![&**f, &**a],
            TypedNode::TyApp(f, _) | TypedNode::Read(f, _) | TypedNode::Seal(f) => vec![&**f],
            TypedNode::Record(fields) => fields.iter().map(|(_, t)| t).collect(),
            TypedNode::Write(t, _, s) => vec![&**t, &**s],
        }
    }

    pub fn at_path(&self, path: &[usize]) -> Option<&Typed> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    /// For a record literal, the type each field was given.
    pub fn field_types(&self) -> Option<Vec<(Name, Type)>> {
        if !matches!(self.node, TypedNode::Record(_)) {
            return None;
        }
        Some(
            components(&self.ty)
                .into_iter()
                .filter_map(|c| match c {
                    Type::Record(l, f) => Some((l.clone(), (**f).clone())),
                    _ => None,
                })
                .collect(),
        )
    }

    /// Visits every node, parents before children.
    pub fn for_each(&self, f: &mut impl FnMut(&Typed)) {
        f(self);
        for c in self.children() {
            c.for_each(f);
        }
    }
}

type CheckResult<T> = Result<T, Diagnostic>;

/// Synthesizes a type for `t`.
pub fn typecheck(
    ctx: &TypeContext,
    store: &StoreTyping,
    t: &Term,
) -> Result<TypedTerm, Vec<Diagnostic>> {
    let mut c = Checker::new(ctx, store);
    let root = c.synth(t).map_err(|d| vec![d])?;
    let judged = root.ty.clone();
    Ok(TypedTerm { root, judged })
}

/// Checks `t` against `expected`.
pub fn typecheck_against(
    ctx: &TypeContext,
    store: &StoreTyping,
    t: &Term,
    expected: &Type,
) -> Result<TypedTerm, Vec<Diagnostic>> {
    let mut c = Checker::new(ctx, store);
    c.well_scoped(expected, t.span).map_err(|d| vec![d])?;
    let root = c.check(t, expected).map_err(|d| vec![d])?;
    Ok(TypedTerm { root, judged: expected.clone() })
}

/// The store is well typed: same domain as the store typing, and every
/// stored value checks against its cell type.
pub fn check_store(
    ctx: &TypeContext,
    store_ty: &StoreTyping,
    store: &Store,
) -> Result<(), Vec<Diagnostic>> {
    let mut errs = Vec::new();
    for (l, _) in store_ty.iter() {
        if !store.contains(l) {
            errs.push(Diagnostic::error(
                "store-missing-location",
                Span::DUMMY,
                format!("location {l} is typed but not allocated"),
            ));
        }
    }
    for (l, v) in store.iter() {
        match store_ty.get(l) {
            None => errs.push(Diagnostic::error(
                "store-untyped-location",
                Span::DUMMY,
                format!("location {l} is allocated but has no type"),
            )),
            Some(ty) => {
                if let Err(mut ds) = typecheck_against(ctx, store_ty, v, ty) {
                    for d in &mut ds {
                        d.message = format!("at {l}: {}", d.message);
                    }
                    errs.extend(ds);
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

struct Checker<'a> {
    ctx: TypeContext,
    store: &'a StoreTyping,
    fuel: u64,
}

impl<'a> Checker<'a> {
    fn new(ctx: &TypeContext, store: &'a StoreTyping) -> Self {
        Checker { ctx: ctx.clone(), store, fuel: DEFAULT_SUBTYPE_FUEL }
    }

    fn sub(&self, s: &Type, t: &Type, span: Span) -> CheckResult<bool> {
        subtype_with_fuel(&self.ctx, s, t, self.fuel).map_err(|OutOfFuel| {
            Diagnostic::error(
                "subtype-fuel",
                span,
                format!("gave up deciding `{s} <: {t}`: subtyping ran out of fuel"),
            )
            .with_rule("SUB")
        })
    }

    fn well_scoped(&self, ty: &Type, span: Span) -> CheckResult<()> {
        for x in free_type_vars(ty) {
            if !self.ctx.has_tyvar(&x) {
                return Err(Diagnostic::error(
                    "unbound-type-variable",
                    span,
                    format!("type variable `{x}` is not in scope"),
                ));
            }
        }
        Ok(())
    }

    /// Components of the type with variables replaced by their bounds.
    fn expose(&self, ty: &Type) -> Vec<Type> {
        let mut out = Vec::new();
        self.expose_into(&nf(ty), &mut out, 0);
        out
    }

    fn expose_into(&self, ty: &Type, out: &mut Vec<Type>, depth: usize) {
        for c in components(ty) {
            match c {
                Type::Var(x) if depth < 64 => match self.ctx.bound_of(x) {
                    Some(b) => self.expose_into(&nf(b), out, depth + 1),
                    None => out.push(c.clone()),
                },
                Type::Readonly(inner) if depth < 64 => match &**inner {
                    Type::Var(x) => match self.ctx.bound_of(x) {
                        Some(b) => self.expose_into(&nf(&Type::readonly(b.clone())), out, depth + 1),
                        None => out.push(c.clone()),
                    },
                    _ => out.push(c.clone()),
                },
                _ => out.push(c.clone()),
            }
        }
    }

    fn synth(&mut self, t: &Term) -> CheckResult<Typed> {
        let span = t.span;
        let mk = |ty: Type, rule: &'static str, node: TypedNode| Typed { ty, rule, span, node };
        match &t.kind {
            TermKind::Var(x) => match self.ctx.lookup_term(x) {
                Some(ty) => Ok(mk(ty.clone(), "VAR", TypedNode::Var(x.clone()))),
                None => Err(Diagnostic::error(
                    "unbound-variable",
                    span,
                    format!("variable `{x}` is not in scope"),
                )
                .with_rule("VAR")),
            },
            TermKind::Nat(n) => Ok(mk(Type::Nat, "NAT", TypedNode::Nat(*n))),
            TermKind::Abs(x, pty, body) => {
                self.well_scoped(pty, span)?;
                self.ctx.push_term(x.clone(), pty.clone());
                let b = self.synth(body);
                self.ctx.pop();
                let b = b?;
                Ok(mk(
                    Type::arrow(pty.clone(), b.ty.clone()),
                    "ABS",
                    TypedNode::Abs(x.clone(), pty.clone(), Box::new(b)),
                ))
            }
            TermKind::TyAbs(x, bound, body) => {
                self.well_scoped(bound, span)?;
                let (x, body) = self.open_tyabs(x, body);
                self.ctx.push_tyvar(x.clone(), bound.clone());
                let b = self.synth(&body);
                self.ctx.pop();
                let b = b?;
                Ok(mk(
                    Type::forall(x.clone(), bound.clone(), b.ty.clone()),
                    "TABS",
                    TypedNode::TyAbs(x, bound.clone(), Box::new(b)),
                ))
            }
            TermKind::App(f, a) => self.synth_app(t, f, a),
            TermKind::TyApp(f, arg) => {
                self.well_scoped(arg, span)?;
                let ft = self.synth(f)?;
                let foralls: Vec<_> = self
                    .expose(&ft.ty)
                    .into_iter()
                    .filter_map(|c| match c {
                        Type::Forall(x, b, body) => Some((x, *b, *body)),
                        _ => None,
                    })
                    .collect();
                if foralls.is_empty() {
                    return Err(Diagnostic::error(
                        "not-a-type-abstraction",
                        f.span,
                        format!("type `{}` cannot be applied to a type", ft.ty),
                    )
                    .with_rule("TAPP"));
                }
                for (x, b, body) in &foralls {
                    if self.sub(arg, b, span)? {
                        let ty = substitute_type(body, x, arg);
                        return Ok(mk(ty, "TAPP", TypedNode::TyApp(Box::new(ft), arg.clone())));
                    }
                }
                Err(Diagnostic::error(
                    "bound-mismatch",
                    span,
                    format!("type argument `{arg}` does not satisfy the bound"),
                )
                .with_rule("TAPP")
                .with_types(foralls[0].1.to_string(), arg.to_string()))
            }
            TermKind::Record(fields) => {
                let mut typed = Vec::with_capacity(fields.len());
                let mut tys = Vec::with_capacity(fields.len());
                for (l, ft) in fields {
                    let f = self.synth(ft)?;
                    tys.push((l.clone(), f.ty.clone()));
                    typed.push((l.clone(), f));
                }
                Ok(mk(Type::record_of(tys), "RECORD", TypedNode::Record(typed)))
            }
            TermKind::RecordVal(fields) => {
                let mut tys = Vec::with_capacity(fields.len());
                for (l, loc) in fields {
                    match self.store.get(*loc) {
                        Some(ty) => tys.push((l.clone(), ty.clone())),
                        None => {
                            return Err(Diagnostic::error(
                                "unknown-location",
                                span,
                                format!("location {loc} has no type in the store typing"),
                            )
                            .with_rule("LOC"))
                        }
                    }
                }
                Ok(mk(Type::record_of(tys), "LOC", TypedNode::RecordVal(fields.clone())))
            }
            TermKind::Read(target, label) => {
                let tt = self.synth(target)?;
                match self.field_candidates(&tt.ty, label).into_iter().next() {
                    Some((ty, rule)) => Ok(mk(ty, rule, TypedNode::Read(Box::new(tt), label.clone()))),
                    None => Err(Diagnostic::error(
                        "field-missing",
                        span,
                        format!("type `{}` has no field `{label}`", tt.ty),
                    )
                    .with_rule("RECORD-ELIM")),
                }
            }
            TermKind::Write(target, label, src) => self.synth_write(t, target, label, src),
            TermKind::Seal(inner) => {
                let it = self.synth(inner)?;
                Ok(mk(Type::readonly(it.ty.clone()), "SEAL", TypedNode::Seal(Box::new(it))))
            }
        }
    }

    /// Renames a type binder that would shadow a variable already in scope.
    fn open_tyabs(&self, x: &Name, body: &Term) -> (Name, Term) {
        if !self.ctx.has_tyvar(x) {
            return (x.clone(), body.clone());
        }
        let mut avoid: BTreeSet<Name> = self.ctx.tyvar_names();
        avoid.extend(free_type_vars_in_term(body));
        let y = fresh_name(x, &avoid);
        let renamed = substitute_type_in_term(body, x, &Type::Var(y.clone()));
        (y, renamed)
    }

    fn arrows(&self, ty: &Type) -> Vec<(Type, Type)> {
        self.expose(ty)
            .into_iter()
            .filter_map(|c| match c {
                Type::Arrow(a, b) => Some((*a, *b)),
                _ => None,
            })
            .collect()
    }

    fn synth_app(&mut self, t: &Term, f: &Term, a: &Term) -> CheckResult<Typed> {
        let ft = self.synth(f)?;
        let arrows = self.arrows(&ft.ty);
        if arrows.is_empty() {
            return Err(Diagnostic::error(
                "not-a-function",
                f.span,
                format!("type `{}` is not a function type", ft.ty),
            )
            .with_rule("APP"));
        }
        let mut first_err = None;
        for (dom, cod) in &arrows {
            match self.check(a, dom) {
                Ok(at) => {
                    return Ok(Typed {
                        ty: cod.clone(),
                        rule: "APP",
                        span: t.span,
                        node: TypedNode::App(Box::new(ft), Box::new(at)),
                    })
                }
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        let inner = first_err.expect("at least one arrow was tried");
        if inner.code != "type-mismatch" {
            return Err(inner);
        }
        Err(Diagnostic {
            code: "argument-mismatch",
            message: format!("argument does not match the parameter type: {}", inner.message),
            rule: Some("APP"),
            ..inner
        })
    }

    fn synth_write(&mut self, t: &Term, target: &Term, label: &Name, src: &Term) -> CheckResult<Typed> {
        let tt = self.synth(target)?;
        let comps = self.expose(&tt.ty);
        let fields: Vec<Type> = comps
            .iter()
            .filter_map(|c| match c {
                Type::Record(l, f) if l == label => Some((**f).clone()),
                _ => None,
            })
            .collect();
        if fields.is_empty() {
            let readonly = comps.iter().any(|c| {
                matches!(c, Type::Readonly(r) if matches!(&**r, Type::Record(l, _) if l == label))
            });
            return Err(if readonly {
                Diagnostic::error(
                    "write-through-readonly",
                    t.span,
                    format!("cannot write field `{label}` through read-only type `{}`", tt.ty),
                )
                .with_rule("RECORD-WRITE")
            } else {
                Diagnostic::error(
                    "field-missing",
                    t.span,
                    format!("type `{}` has no field `{label}`", tt.ty),
                )
                .with_rule("RECORD-WRITE")
            });
        }
        let mut first = None;
        for field in fields {
            match self.check(src, &field) {
                Ok(st) => {
                    return Ok(Typed {
                        ty: field,
                        rule: "RECORD-WRITE",
                        span: t.span,
                        node: TypedNode::Write(Box::new(tt), label.clone(), Box::new(st)),
                    })
                }
                Err(e) => {
                    first.get_or_insert(e);
                }
            }
        }
        let first = first.expect("at least one mutable field");
        // Retry with the target checked at the written value's type.
        if let Ok(st) = self.synth(src) {
            let want = Type::record(label.clone(), st.ty.clone());
            if let Ok(tt2) = self.check(target, &want) {
                let ok = self.expose(&tt2.ty).iter().any(|c| {
                    matches!(c, Type::Record(l, f) if l == label && **f == st.ty)
                });
                if ok {
                    return Ok(Typed {
                        ty: st.ty.clone(),
                        rule: "RECORD-WRITE",
                        span: t.span,
                        node: TypedNode::Write(Box::new(tt2), label.clone(), Box::new(st)),
                    });
                }
            }
        }
        Err(first)
    }

    fn mismatch(&self, expected: &Type, actual: &Type, span: Span) -> Diagnostic {
        Diagnostic::error(
            "type-mismatch",
            span,
            format!("expected a term of type `{expected}`, found `{actual}`"),
        )
        .with_rule("SUB")
        .with_types(expected.to_string(), actual.to_string())
    }

    /// Returned annotation's type is a subtype of `expected`.
    fn check(&mut self, t: &Term, expected: &Type) -> CheckResult<Typed> {
        let span = t.span;
        match &t.kind {
            TermKind::Record(fields) => {
                let want = components(&nf(expected))
                    .into_iter()
                    .filter_map(|c| match c {
                        Type::Record(l, f) => Some((l.clone(), (**f).clone())),
                        Type::Readonly(r) => match &**r {
                            Type::Record(l, f) => Some((l.clone(), (**f).clone())),
                            _ => None,
                        },
                        _ => None,
                    })
                    .collect::<Vec<_>>();
                let mut typed = Vec::with_capacity(fields.len());
                let mut tys = Vec::with_capacity(fields.len());
                for (l, ft) in fields {
                    let target = want.iter().find(|(m, _)| m == l).map(|(_, f)| f.clone());
                    let f = match &target {
                        Some(fty) => self.check(ft, fty)?,
                        None => self.synth(ft)?,
                    };
                    tys.push((l.clone(), target.unwrap_or_else(|| f.ty.clone())));
                    typed.push((l.clone(), f));
                }
                let ty = Type::record_of(tys);
                if !self.sub(&ty, expected, span)? {
                    return Err(self.mismatch(expected, &ty, span));
                }
                Ok(Typed { ty, rule: "RECORD", span, node: TypedNode::Record(typed) })
            }
            TermKind::Abs(x, pty, body) => {
                let synthesized = self.synth(t)?;
                if self.sub(&synthesized.ty, expected, span)? {
                    return Ok(synthesized);
                }
                if let Some((dom, cod)) = self.single_arrow(expected) {
                    if self.sub(&dom, pty, span)? {
                        self.ctx.push_term(x.clone(), pty.clone());
                        let b = self.check(body, &cod);
                        self.ctx.pop();
                        if let Ok(b) = b {
                            return Ok(Typed {
                                ty: Type::arrow(pty.clone(), b.ty.clone()),
                                rule: "ABS",
                                span,
                                node: TypedNode::Abs(x.clone(), pty.clone(), Box::new(b)),
                            });
                        }
                    }
                }
                Err(self.mismatch(expected, &synthesized.ty, span))
            }
            TermKind::TyAbs(x, bound, body) => {
                let synthesized = self.synth(t)?;
                if self.sub(&synthesized.ty, expected, span)? {
                    return Ok(synthesized);
                }
                if let Some((y, ebound, ebody)) = self.single_forall(expected) {
                    if self.sub(&ebound, bound, span)? {
                        let (x, body) = self.open_tyabs(x, body);
                        let want = substitute_type(&ebody, &y, &Type::Var(x.clone()));
                        self.ctx.push_tyvar(x.clone(), bound.clone());
                        let b = self.check(&body, &want);
                        self.ctx.pop();
                        if let Ok(b) = b {
                            let ty = Type::forall(x.clone(), bound.clone(), b.ty.clone());
                            if self.sub(&ty, expected, span)? {
                                return Ok(Typed {
                                    ty,
                                    rule: "TABS",
                                    span,
                                    node: TypedNode::TyAbs(x, bound.clone(), Box::new(b)),
                                });
                            }
                        }
                    }
                }
                Err(self.mismatch(expected, &synthesized.ty, span))
            }
            TermKind::Seal(inner) if is_readonly_type(expected) => {
                if let Ok(it) = self.check(inner, expected) {
                    let ty = Type::readonly(it.ty.clone());
                    if self.sub(&ty, expected, span)? {
                        return Ok(Typed { ty, rule: "SEAL", span, node: TypedNode::Seal(Box::new(it)) });
                    }
                }
                self.check_by_subsumption(t, expected)
            }
            TermKind::App(f, a) => {
                let synthesized = self.synth(t);
                if let Ok(st) = &synthesized {
                    if self.sub(&st.ty, expected, span)? {
                        return synthesized;
                    }
                }
                // A literal function: check the argument at the declared
                // parameter type and the body at the expected result.
                if let Some(pty) = literal_param(f) {
                    if let Ok(at) = self.check(a, &pty) {
                        let want = Type::arrow(pty.clone(), expected.clone());
                        if let Ok(ft) = self.check(f, &want) {
                            if let Some(app) = self.apply_checked(ft, at, expected, span)? {
                                return Ok(app);
                            }
                        }
                    }
                }
                // Otherwise push the expected result into the function position.
                if let Ok(at) = self.synth(a) {
                    let want = Type::arrow(at.ty.clone(), expected.clone());
                    if let Ok(ft) = self.check(f, &want) {
                        if let Some(app) = self.apply_checked(ft, at, expected, span)? {
                            return Ok(app);
                        }
                    }
                }
                match synthesized {
                    Ok(st) => Err(self.mismatch(expected, &st.ty, span)),
                    Err(e) => Err(e),
                }
            }
            // Any matching component may be the one eliminated, not just the
            // first that synthesis picks.
            TermKind::Read(target, label) => {
                let tt = self.synth(target)?;
                for (ty, rule) in self.field_candidates(&tt.ty, label) {
                    if self.sub(&ty, expected, span)? {
                        let node = TypedNode::Read(Box::new(tt), label.clone());
                        return Ok(Typed { ty, rule, span, node });
                    }
                }
                self.check_by_subsumption(t, expected)
            }
            _ => self.check_by_subsumption(t, expected),
        }
    }

    /// Types a read of `label` can have through each component of `ty`,
    /// mutable components first.
    fn field_candidates(&self, ty: &Type, label: &Name) -> Vec<(Type, &'static str)> {
        let comps = self.expose(ty);
        let mutable = comps.iter().filter_map(|c| match c {
            Type::Record(l, f) if l == label => Some(((**f).clone(), "RECORD-ELIM")),
            _ => None,
        });
        let readonly = comps.iter().filter_map(|c| match c {
            Type::Readonly(r) => match &**r {
                Type::Record(l, f) if l == label => Some((Type::readonly((**f).clone()), "READONLY-RECORD-ELIM")),
                _ => None,
            },
            _ => None,
        });
        mutable.chain(readonly).collect()
    }

    fn check_by_subsumption(&mut self, t: &Term, expected: &Type) -> CheckResult<Typed> {
        let synthesized = self.synth(t)?;
        if self.sub(&synthesized.ty, expected, t.span)? {
            Ok(synthesized)
        } else {
            Err(self.mismatch(expected, &synthesized.ty, t.span))
        }
    }

    fn apply_checked(
        &self,
        ft: Typed,
        at: Typed,
        expected: &Type,
        span: Span,
    ) -> CheckResult<Option<Typed>> {
        for (dom, cod) in self.arrows(&ft.ty) {
            if self.sub(&at.ty, &dom, span)? && self.sub(&cod, expected, span)? {
                return Ok(Some(Typed {
                    ty: cod,
                    rule: "APP",
                    span,
                    node: TypedNode::App(Box::new(ft), Box::new(at)),
                }));
            }
        }
        Ok(None)
    }

    /// The expected type's only non-`Top` component, when it is an arrow.
    fn single_arrow(&self, expected: &Type) -> Option<(Type, Type)> {
        let n = nf(expected);
        let mut parts = components(&n).into_iter().filter(|c| **c != Type::Top);
        match (parts.next(), parts.next()) {
            (Some(Type::Arrow(a, b)), None) => Some(((**a).clone(), (**b).clone())),
            _ => None,
        }
    }

    fn single_forall(&self, expected: &Type) -> Option<(Name, Type, Type)> {
        let n = nf(expected);
        let mut parts = components(&n).into_iter().filter(|c| **c != Type::Top);
        match (parts.next(), parts.next()) {
            (Some(Type::Forall(x, b, body)), None) => Some((x.clone(), (**b).clone(), (**body).clone())),
            _ => None,
        }
    }
}

/// Parameter type of a function literal, looking through seals.
fn literal_param(f: &Term) -> Option<Type> {
    match &f.kind {
        TermKind::Abs(_, pty, _) => Some(pty.clone()),
        TermKind::Seal(inner) => literal_param(inner),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_term, parse_type};

    fn synth(src: &str) -> Result<Type, Vec<Diagnostic>> {
        let t = parse_term(src).unwrap();
        typecheck(&TypeContext::new(), &StoreTyping::new(), &t).map(|tt| tt.judged)
    }

    fn ty(src: &str) -> Type {
        parse_type(src).unwrap()
    }

    #[test]
    fn seal_gives_readonly() {
        assert_eq!(synth("seal {x = 10}").unwrap(), Type::readonly(ty("{x: Nat}")));
    }

    #[test]
    fn readonly_read_is_viewpoint_adapted() {
        let ctx = TypeContext::new().with_term("z", ty("readonly {first: {x: Nat}}"));
        let t = parse_term("z.first").unwrap();
        let tt = typecheck(&ctx, &StoreTyping::new(), &t).unwrap();
        assert_eq!(tt.judged, ty("readonly {x: Nat}"));
        assert_eq!(tt.root.rule, "READONLY-RECORD-ELIM");
    }

    #[test]
    fn write_through_readonly_is_rejected() {
        let ctx = TypeContext::new().with_term("y", ty("readonly {first: Nat}"));
        let t = parse_term("y.first := 7").unwrap();
        let err = typecheck(&ctx, &StoreTyping::new(), &t).unwrap_err();
        assert_eq!(err[0].code, "write-through-readonly");
        assert_eq!(err[0].span, t.span);
    }

    #[test]
    fn mutable_rule_preferred() {
        let ctx = TypeContext::new().with_term("z", ty("{f: Nat} & readonly {f: Nat}"));
        let tt = typecheck(&ctx, &StoreTyping::new(), &parse_term("z.f").unwrap()).unwrap();
        assert_eq!(tt.judged, Type::Nat);
        assert_eq!(tt.root.rule, "RECORD-ELIM");
    }

    #[test]
    fn write_returns_field_type() {
        assert_eq!(synth("{x = 10}.x := 5").unwrap(), Type::Nat);
    }

    #[test]
    fn record_literal_is_an_intersection() {
        assert_eq!(synth("{a = 1, b = {}}").unwrap(), ty("{a: Nat, b: Top}"));
    }

    #[test]
    fn errors() {
        assert_eq!(synth("x").unwrap_err()[0].code, "unbound-variable");
        assert_eq!(synth("{a = 1}.b").unwrap_err()[0].code, "field-missing");
        assert_eq!(synth("1 2").unwrap_err()[0].code, "not-a-function");
        assert_eq!(synth("(fun(x: {a: Nat}) x) 3").unwrap_err()[0].code, "argument-mismatch");
        assert_eq!(synth("fun(x: X) x").unwrap_err()[0].code, "unbound-type-variable");
        assert_eq!(
            synth("(tfun(X <: {a: Nat}) 1) [Top]").unwrap_err()[0].code,
            "bound-mismatch"
        );
    }

    #[test]
    fn polymorphism() {
        let t = synth("(tfun(X <: Top) fun(x: X) x) [Nat] 3").unwrap();
        assert_eq!(t, Type::Nat);
        let ro = synth("tfun(X <: Top) fun(f: readonly X -> X) fun(x: X) f x").unwrap();
        assert!(matches!(ro, Type::Forall(..)));
    }

    #[test]
    fn checking_a_read_tries_every_component() {
        let ctx = TypeContext::new().with_term("x", ty("{a: Top} & {a: Nat}"));
        let st = StoreTyping::new();
        let read = parse_term("x.a").unwrap();
        assert_eq!(typecheck(&ctx, &st, &read).unwrap().judged, Type::Top);
        let tt = typecheck_against(&ctx, &st, &read, &Type::Nat).unwrap();
        assert_eq!(tt.root.ty, Type::Nat);
        let write = parse_term("x.a := fun(y: Nat) y").unwrap();
        assert_eq!(typecheck(&ctx, &st, &write).unwrap().judged, Type::Top);
    }

    #[test]
    fn checking_widens_record_fields() {
        let t = parse_term("{g = 5}").unwrap();
        let tt = typecheck_against(&TypeContext::new(), &StoreTyping::new(), &t, &ty("{g: Top}"))
            .unwrap();
        assert_eq!(tt.root.ty, ty("{g: Top}"));
        assert_eq!(tt.root.field_types().unwrap(), vec![("g".into(), Type::Top)]);
        // synthesis alone would give {g: Nat}, which is not below {g: Top}
        let s = synth("{g = 5}").unwrap();
        assert!(!crate::types::subtype(&TypeContext::new(), &s, &ty("{g: Top}")).unwrap());
    }

    #[test]
    fn checking_pushes_into_functions() {
        let t = parse_term("(fun(y: Top) {g = 5}) 7").unwrap();
        assert!(
            typecheck_against(&TypeContext::new(), &StoreTyping::new(), &t, &ty("{g: Top}")).is_ok()
        );
    }

    #[test]
    fn store_checks() {
        let empty = Store::new();
        assert!(check_store(&TypeContext::new(), &StoreTyping::new(), &empty).is_ok());
        let store = Store::from_cells([(Location(1), Term::nat(10))]);
        let good: StoreTyping = [(Location(1), Type::Nat)].into_iter().collect();
        assert!(check_store(&TypeContext::new(), &good, &store).is_ok());
        let bad: StoreTyping = [(Location(1), ty("{x: Nat}"))].into_iter().collect();
        assert!(check_store(&TypeContext::new(), &bad, &store).is_err());
        assert!(check_store(&TypeContext::new(), &StoreTyping::new(), &store).is_err());
    }

    #[test]
    fn locations_use_store_typing() {
        let st: StoreTyping = [(Location(1), Type::Nat)].into_iter().collect();
        let t = Term::seal(Term::record_val([("x", Location(1))]));
        let tt = typecheck(&TypeContext::new(), &st, &t).unwrap();
        assert_eq!(tt.judged, Type::readonly(ty("{x: Nat}")));
        let missing = typecheck(&TypeContext::new(), &StoreTyping::new(), &t).unwrap_err();
        assert_eq!(missing[0].code, "unknown-location");
    }

    #[test]
    fn shadowed_type_binders_are_renamed() {
        let t = synth("tfun(X <: Top) fun(x: X) tfun(X <: {a: Nat}) fun(y: X) x").unwrap();
        // The inner binder must not capture the outer X in x's type.
        let expected = ty("forall(X <: Top) X -> forall(Y <: {a: Nat}) Y -> X");
        assert!(crate::subst::alpha_eq_type(&t, &expected), "{t}");
    }
}
