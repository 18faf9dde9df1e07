//! Bounded search over the declarative subtyping rules.
//!
//! Used to cross-check the algorithmic engine. A `Proven` answer means a
//! derivation of at most the given height exists using only the rules below;
//! `NoProofWithinDepth` says nothing beyond that height.
//!
//! Rules: reflexivity (up to renaming), `Top`, the variable axiom `X <: Γ(X)`,
//! arrows, full F<: universals, invariant record depth, intersection
//! introduction on the right and elimination on the left, `T <: readonly T`,
//! `readonly` monotonicity, `readonly readonly T <: readonly T`, rewriting
//! either side to its normal form, and transitivity through a finite set of
//! candidate middle types.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::context::TypeContext;
use super::normal::nf;
use crate::subst::{alpha_eq_type, free_type_vars, fresh_name, substitute_type};
use crate::syntax::{Name, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    Proven,
    NoProofWithinDepth,
}

impl OracleAnswer {
    pub fn is_proven(self) -> bool {
        self == OracleAnswer::Proven
    }
}

/// Searches for a derivation of `ctx ⊢ s <: t` of height at most `max_depth`.
pub fn subtype_oracle(ctx: &TypeContext, s: &Type, t: &Type, max_depth: u32) -> OracleAnswer {
    let mut search = Search::new(ctx);
    if search.prove(s, t, max_depth.max(1)) {
        OracleAnswer::Proven
    } else {
        OracleAnswer::NoProofWithinDepth
    }
}

/// Smallest derivation height at which the oracle finds a proof, if any
/// within `max_depth`.
pub fn oracle_min_depth(ctx: &TypeContext, s: &Type, t: &Type, max_depth: u32) -> Option<u32> {
    let mut search = Search::new(ctx);
    (1..=max_depth).find(|&d| search.prove(s, t, d))
}

type Key = (Vec<(Name, Type)>, Type, Type);

#[derive(Default, Clone, Copy)]
struct Memo {
    /// Smallest height known to suffice.
    proved: Option<u32>,
    /// Largest height known not to suffice.
    failed: u32,
}

struct Search {
    bounds: Vec<(Name, Type)>,
    memo: BTreeMap<Key, Memo>,
}

impl Search {
    fn new(ctx: &TypeContext) -> Self {
        Search {
            bounds: ctx.tyvars().map(|(n, b)| (n.clone(), b.clone())).collect(),
            memo: BTreeMap::new(),
        }
    }

    fn bound(&self, x: &str) -> Option<Type> {
        self.bounds
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, b)| b.clone())
    }

    fn prove(&mut self, s: &Type, t: &Type, depth: u32) -> bool {
        if depth == 0 {
            return false;
        }
        let key: Key = (self.bounds.clone(), s.clone(), t.clone());
        let entry = self.memo.get(&key).copied().unwrap_or_default();
        if entry.proved.is_some_and(|p| p <= depth) {
            return true;
        }
        if depth <= entry.failed {
            return false;
        }
        let ok = self.try_rules(s, t, depth);
        let slot = self.memo.entry(key).or_default();
        if ok {
            slot.proved = Some(slot.proved.map_or(depth, |p| p.min(depth)));
        } else {
            slot.failed = slot.failed.max(depth);
        }
        ok
    }

    fn try_rules(&mut self, s: &Type, t: &Type, depth: u32) -> bool {
        let d = depth - 1;

        // axioms
        if alpha_eq_type(s, t) || *t == Type::Top {
            return true;
        }
        if let Type::Var(x) = s {
            if self.bound(x).is_some_and(|b| alpha_eq_type(&b, t)) {
                return true;
            }
        }
        if let Type::Readonly(u) = t {
            if alpha_eq_type(s, u) {
                return true;
            }
        }
        if let Type::Readonly(inner) = s {
            if matches!(&**inner, Type::Readonly(u) if alpha_eq_type(&Type::readonly((**u).clone()), t)) {
                return true;
            }
        }
        if d == 0 {
            return false;
        }

        // structural rules
        match (s, t) {
            (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => {
                if self.prove(a2, a1, d) && self.prove(b1, b2, d) {
                    return true;
                }
            }
            (Type::Forall(x, b1, body1), Type::Forall(y, b2, body2)) => {
                if self.prove(b2, b1, d) {
                    let mut avoid: BTreeSet<Name> =
                        self.bounds.iter().map(|(n, _)| n.clone()).collect();
                    avoid.extend(free_type_vars(s));
                    avoid.extend(free_type_vars(t));
                    let z = fresh_name(x, &avoid);
                    let zv = Type::Var(z.clone());
                    let lhs = substitute_type(body1, x, &zv);
                    let rhs = substitute_type(body2, y, &zv);
                    self.bounds.push((z, (**b2).clone()));
                    let ok = self.prove(&lhs, &rhs, d);
                    self.bounds.pop();
                    if ok {
                        return true;
                    }
                }
            }
            (Type::Record(l, sf), Type::Record(m, tf)) if l == m => {
                if self.prove(sf, tf, d) && self.prove(tf, sf, d) {
                    return true;
                }
            }
            (Type::Readonly(a), Type::Readonly(b)) => {
                if self.prove(a, b, d) {
                    return true;
                }
            }
            _ => {}
        }
        if let Type::Inter(a, b) = t {
            if self.prove(s, a, d) && self.prove(s, b, d) {
                return true;
            }
        }
        if let Type::Inter(a, b) = s {
            if self.prove(a, t, d) || self.prove(b, t, d) {
                return true;
            }
        }

        // normal-form rewriting
        let ns = nf(s);
        if ns != *s && self.prove(&ns, t, d) {
            return true;
        }
        let nt = nf(t);
        if nt != *t && self.prove(s, &nt, d) {
            return true;
        }

        // transitivity
        for mid in self.middles(s, t) {
            if alpha_eq_type(&mid, s) || alpha_eq_type(&mid, t) {
                continue;
            }
            if self.prove(s, &mid, d) && self.prove(&mid, t, d) {
                return true;
            }
        }
        false
    }

    fn middles(&self, s: &Type, t: &Type) -> Vec<Type> {
        let mut out = Vec::new();
        match s {
            Type::Var(x) => out.extend(self.bound(x)),
            Type::Readonly(inner) => {
                if let Type::Var(x) = &**inner {
                    out.extend(self.bound(x).map(Type::readonly));
                }
            }
            _ => out.push(Type::readonly(s.clone())),
        }
        if let Type::Readonly(u) = t {
            out.push((**u).clone());
        }
        out
    }
}
