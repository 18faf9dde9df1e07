//! Terms, types, locations and stores.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Variable, type variable and field names.
pub type Name = String;

/// Byte range into the source text a node was parsed from.
///
/// Nodes built by the machine or by generators carry [`Span::DUMMY`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const DUMMY: Span = Span { start: 0, end: 0 };

    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn is_dummy(&self) -> bool {
        *self == Span::DUMMY
    }

    pub fn join(self, other: Span) -> Span {
        if self.is_dummy() {
            return other;
        }
        if other.is_dummy() {
            return self;
        }
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    /// One-based line and column of the start, plus length in characters.
    pub fn line_col(&self, src: &str) -> (usize, usize, usize) {
        let start = self.start.min(src.len());
        let end = self.end.clamp(start, src.len());
        let mut line = 1;
        let mut col = 1;
        for (i, ch) in src.char_indices() {
            if i >= start {
                break;
            }
            if ch == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        let len = src[start..end].chars().count();
        (line, col, len)
    }
}

/// A store cell address. Allocation hands these out in increasing order
/// starting from `0x0001`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location(pub u64);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:04x}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Top,
    Nat,
    Arrow(Box<Type>, Box<Type>),
    /// `forall(X <: bound) body`
    Forall(Name, Box<Type>, Box<Type>),
    /// Single-field record type. Wider records are intersections of these.
    Record(Name, Box<Type>),
    Inter(Box<Type>, Box<Type>),
    Readonly(Box<Type>),
    Var(Name),
}

impl Type {
    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn forall(var: impl Into<Name>, bound: Type, body: Type) -> Type {
        Type::Forall(var.into(), Box::new(bound), Box::new(body))
    }

    pub fn record(label: impl Into<Name>, field: Type) -> Type {
        Type::Record(label.into(), Box::new(field))
    }

    pub fn inter(left: Type, right: Type) -> Type {
        Type::Inter(Box::new(left), Box::new(right))
    }

    pub fn readonly(inner: Type) -> Type {
        Type::Readonly(Box::new(inner))
    }

    pub fn var(name: impl Into<Name>) -> Type {
        Type::Var(name.into())
    }

    /// Left-nested intersection of the given types, `Top` when empty.
    pub fn inter_all(parts: impl IntoIterator<Item = Type>) -> Type {
        parts
            .into_iter()
            .reduce(Type::inter)
            .unwrap_or(Type::Top)
    }

    /// Record type with several fields, encoded as an intersection.
    pub fn record_of<L: Into<Name>>(fields: impl IntoIterator<Item = (L, Type)>) -> Type {
        Type::inter_all(fields.into_iter().map(|(l, t)| Type::record(l, t)))
    }

    /// Constructor depth; leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Type::Top | Type::Nat | Type::Var(_) => 0,
            Type::Arrow(a, b) | Type::Forall(_, a, b) | Type::Inter(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Type::Record(_, a) | Type::Readonly(a) => 1 + a.depth(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

/// Equality ignores spans.
impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Term {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermKind {
    Var(Name),
    Abs(Name, Type, Box<Term>),
    App(Box<Term>, Box<Term>),
    /// `tfun(X <: bound) body`
    TyAbs(Name, Type, Box<Term>),
    TyApp(Box<Term>, Type),
    /// Record literal, fields in source order.
    Record(Vec<(Name, Term)>),
    /// Allocated record: each field points at a store cell. Runtime only.
    RecordVal(Vec<(Name, Location)>),
    Read(Box<Term>, Name),
    Write(Box<Term>, Name, Box<Term>),
    Seal(Box<Term>),
    Nat(u64),
}

impl From<TermKind> for Term {
    fn from(kind: TermKind) -> Self {
        Term { kind, span: Span::DUMMY }
    }
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Self {
        Term { kind, span }
    }

    pub fn var(name: impl Into<Name>) -> Term {
        TermKind::Var(name.into()).into()
    }

    pub fn abs(param: impl Into<Name>, ty: Type, body: Term) -> Term {
        TermKind::Abs(param.into(), ty, Box::new(body)).into()
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        TermKind::App(Box::new(fun), Box::new(arg)).into()
    }

    pub fn ty_abs(var: impl Into<Name>, bound: Type, body: Term) -> Term {
        TermKind::TyAbs(var.into(), bound, Box::new(body)).into()
    }

    pub fn ty_app(fun: Term, arg: Type) -> Term {
        TermKind::TyApp(Box::new(fun), arg).into()
    }

    pub fn record<L: Into<Name>>(fields: impl IntoIterator<Item = (L, Term)>) -> Term {
        TermKind::Record(fields.into_iter().map(|(l, t)| (l.into(), t)).collect()).into()
    }

    pub fn record_val<L: Into<Name>>(fields: impl IntoIterator<Item = (L, Location)>) -> Term {
        TermKind::RecordVal(fields.into_iter().map(|(l, t)| (l.into(), t)).collect()).into()
    }

    pub fn read(target: Term, label: impl Into<Name>) -> Term {
        TermKind::Read(Box::new(target), label.into()).into()
    }

    pub fn write(target: Term, label: impl Into<Name>, src: Term) -> Term {
        TermKind::Write(Box::new(target), label.into(), Box::new(src)).into()
    }

    pub fn seal(inner: Term) -> Term {
        TermKind::Seal(Box::new(inner)).into()
    }

    pub fn nat(n: u64) -> Term {
        TermKind::Nat(n).into()
    }

    pub fn with_span(mut self, span: Span) -> Term {
        self.span = span;
        self
    }

    pub fn is_value(&self) -> bool {
        is_value(self)
    }

    /// Immediate subterms in evaluation order.
    pub fn children(&self) -> Vec<&Term> {
        match &self.kind {
            TermKind::Var(_) | TermKind::Nat(_) | TermKind::RecordVal(_) => Vec::new(),
            TermKind::Abs(_, _, b) | TermKind::TyAbs(_, _, b) => alloc::vec![&**b],
            TermKind::App(f, a) => alloc::vec![&**f, &**a],
            TermKind::TyApp(f, _) => alloc::vec![&**f],
            TermKind::Record(fields) => fields.iter().map(|(_, t)| t).collect(),
            TermKind::Read(t, _) | TermKind::Seal(t) => alloc::vec![&**t],
            TermKind::Write(t, _, s) => alloc::vec![&**t, &**s],
        }
    }

    /// Subterm reached by following child indices.
    pub fn at_path(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Whether any runtime-only form (an allocated record) occurs in the term.
    pub fn has_runtime_forms(&self) -> bool {
        match &self.kind {
            TermKind::RecordVal(_) => true,
            _ => self.children().into_iter().any(Term::has_runtime_forms),
        }
    }

    /// Locations mentioned anywhere in the term.
    pub fn locations(&self) -> Vec<Location> {
        let mut out = Vec::new();
        fn walk(t: &Term, out: &mut Vec<Location>) {
            if let TermKind::RecordVal(fields) = &t.kind {
                out.extend(fields.iter().map(|(_, l)| *l));
            }
            for c in t.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Number of term nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }
}

/// Values: abstractions, numerals, allocated records and sealed allocated
/// records. `seal (fun ..)` and `seal (seal r)` still reduce, so they are not.
pub fn is_value(t: &Term) -> bool {
    match &t.kind {
        TermKind::Abs(..) | TermKind::TyAbs(..) | TermKind::Nat(_) | TermKind::RecordVal(_) => true,
        TermKind::Seal(inner) => matches!(inner.kind, TermKind::RecordVal(_)),
        _ => false,
    }
}

/// Finite map from locations to values, with the allocation counter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Store {
    cells: BTreeMap<Location, Term>,
    next: u64,
}

impl Store {
    pub fn new() -> Self {
        Store { cells: BTreeMap::new(), next: 1 }
    }

    pub fn get(&self, loc: Location) -> Option<&Term> {
        self.cells.get(&loc)
    }

    pub fn contains(&self, loc: Location) -> bool {
        self.cells.contains_key(&loc)
    }

    /// Overwrites an existing cell, returning the previous value.
    pub fn set(&mut self, loc: Location, value: Term) -> Option<Term> {
        self.cells.insert(loc, value)
    }

    /// Binds a fresh location. Indices strictly increase and are never reused.
    pub fn alloc(&mut self, value: Term) -> Location {
        debug_assert!(is_value(&value), "only values are stored");
        let next = self.next.max(1);
        let loc = Location(next);
        self.next = next + 1;
        self.cells.insert(loc, value);
        loc
    }

    /// The location the next allocation will produce.
    pub fn next_location(&self) -> Location {
        Location(self.next.max(1))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Location, &Term)> {
        self.cells.iter().map(|(l, t)| (*l, t))
    }

    pub fn locations(&self) -> impl Iterator<Item = Location> + '_ {
        self.cells.keys().copied()
    }

    /// Builds a store from explicit cells; the counter resumes after the
    /// largest index.
    pub fn from_cells(cells: impl IntoIterator<Item = (Location, Term)>) -> Self {
        let cells: BTreeMap<_, _> = cells.into_iter().collect();
        let next = cells.keys().next_back().map_or(1, |l| l.0 + 1);
        Store { cells, next }
    }
}

/// Standalone allocation: returns the fresh location and the extended store.
pub fn alloc(store: &Store, value: Term) -> (Location, Store) {
    let mut out = store.clone();
    let loc = out.alloc(value);
    (loc, out)
}
