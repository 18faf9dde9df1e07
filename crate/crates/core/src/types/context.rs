use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::subst::free_type_vars;
use crate::syntax::{Location, Name, Type};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Term(Name, Type),
    TyVar(Name, Type),
}

/// Ordered term and type-variable bindings. Later entries shadow earlier
/// ones with the same name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeContext {
    entries: Vec<Binding>,
}

impl TypeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, name: impl Into<Name>, ty: Type) -> Self {
        self.push_term(name, ty);
        self
    }

    pub fn with_tyvar(mut self, name: impl Into<Name>, bound: Type) -> Self {
        self.push_tyvar(name, bound);
        self
    }

    pub fn push_term(&mut self, name: impl Into<Name>, ty: Type) {
        self.entries.push(Binding::Term(name.into(), ty));
    }

    pub fn push_tyvar(&mut self, name: impl Into<Name>, bound: Type) {
        self.entries.push(Binding::TyVar(name.into(), bound));
    }

    pub fn pop(&mut self) -> Option<Binding> {
        self.entries.pop()
    }

    pub fn lookup_term(&self, name: &str) -> Option<&Type> {
        self.entries.iter().rev().find_map(|b| match b {
            Binding::Term(n, t) if n == name => Some(t),
            _ => None,
        })
    }

    pub fn bound_of(&self, tyvar: &str) -> Option<&Type> {
        self.entries.iter().rev().find_map(|b| match b {
            Binding::TyVar(n, t) if n == tyvar => Some(t),
            _ => None,
        })
    }

    pub fn has_tyvar(&self, tyvar: &str) -> bool {
        self.bound_of(tyvar).is_some()
    }

    pub fn tyvar_names(&self) -> BTreeSet<Name> {
        self.entries
            .iter()
            .filter_map(|b| match b {
                Binding::TyVar(n, _) => Some(n.clone()),
                Binding::Term(..) => None,
            })
            .collect()
    }

    /// Type variables in scope, innermost last.
    pub fn tyvars(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.entries.iter().filter_map(|b| match b {
            Binding::TyVar(n, t) => Some((n, t)),
            Binding::Term(..) => None,
        })
    }

    /// Term variables in scope, innermost last.
    pub fn terms(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.entries.iter().filter_map(|b| match b {
            Binding::Term(n, t) => Some((n, t)),
            Binding::TyVar(..) => None,
        })
    }

    /// Every free type variable of `ty` is bound here.
    pub fn is_well_scoped(&self, ty: &Type) -> bool {
        free_type_vars(ty).iter().all(|x| self.has_tyvar(x))
    }

    pub fn entries(&self) -> &[Binding] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Types of store cells. Grows during evaluation; cells are never rebound.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StoreTyping {
    cells: BTreeMap<Location, Type>,
}

impl StoreTyping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, loc: Location) -> Option<&Type> {
        self.cells.get(&loc)
    }

    /// Adds a cell type. Returns `false`, leaving the map unchanged, when
    /// the location is already typed.
    pub fn extend(&mut self, loc: Location, ty: Type) -> bool {
        if self.cells.contains_key(&loc) {
            return false;
        }
        self.cells.insert(loc, ty);
        true
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Location, &Type)> {
        self.cells.iter().map(|(l, t)| (*l, t))
    }

    /// Every cell of `self` is typed identically in `other`.
    pub fn is_extended_by(&self, other: &StoreTyping) -> bool {
        self.cells.iter().all(|(l, t)| other.cells.get(l) == Some(t))
    }
}

impl FromIterator<(Location, Type)> for StoreTyping {
    fn from_iter<I: IntoIterator<Item = (Location, Type)>>(iter: I) -> Self {
        StoreTyping { cells: iter.into_iter().collect() }
    }
}
