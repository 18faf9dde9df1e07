//! Algorithmic subtyping on normal forms.
//!
//! Both sides are normalized first, so `readonly` only ever sits directly on
//! a record or a type variable. Universals compare bounds contravariantly, as
//! in full F<:, which makes the relation undecidable in general; every query
//! runs on a fuel budget and reports exhaustion separately from "no".

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use super::context::TypeContext;
use super::normal::nf;
use crate::subst::{alpha_eq_type, free_type_vars, fresh_name, substitute_type};
use crate::syntax::{Name, Type};

/// Recursive calls allowed per query unless a caller picks its own budget.
pub const DEFAULT_SUBTYPE_FUEL: u64 = 200_000;

/// Nesting limit; diverging queries also grow deep, and this keeps them off
/// the end of the stack. Hitting it counts as running out of fuel.
const MAX_NESTING: u32 = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutOfFuel;

impl fmt::Display for OutOfFuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("subtyping ran out of fuel")
    }
}

impl core::error::Error for OutOfFuel {}

/// `ctx ⊢ s <: t` with the default budget.
pub fn subtype(ctx: &TypeContext, s: &Type, t: &Type) -> Result<bool, OutOfFuel> {
    subtype_with_fuel(ctx, s, t, DEFAULT_SUBTYPE_FUEL)
}

pub fn subtype_with_fuel(
    ctx: &TypeContext,
    s: &Type,
    t: &Type,
    fuel: u64,
) -> Result<bool, OutOfFuel> {
    let mut engine = Engine {
        bounds: ctx.tyvars().map(|(n, b)| (n.clone(), b.clone())).collect(),
        fuel,
        nesting: 0,
    };
    engine.sub(&nf(s), &nf(t))
}

/// Mutual subtyping.
pub fn equivalent(ctx: &TypeContext, s: &Type, t: &Type) -> Result<bool, OutOfFuel> {
    Ok(subtype(ctx, s, t)? && subtype(ctx, t, s)?)
}

struct Engine {
    bounds: Vec<(Name, Type)>,
    fuel: u64,
    nesting: u32,
}

impl Engine {
    fn bound(&self, x: &str) -> Option<Type> {
        self.bounds
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, b)| b.clone())
    }

    fn tick(&mut self) -> Result<(), OutOfFuel> {
        if self.fuel == 0 {
            return Err(OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn equiv(&mut self, a: &Type, b: &Type) -> Result<bool, OutOfFuel> {
        Ok(self.sub(a, b)? && self.sub(b, a)?)
    }

    /// Both arguments are in normal form.
    fn sub(&mut self, s: &Type, t: &Type) -> Result<bool, OutOfFuel> {
        self.tick()?;
        if self.nesting >= MAX_NESTING {
            return Err(OutOfFuel);
        }
        self.nesting += 1;
        let r = self.sub_rules(s, t);
        self.nesting -= 1;
        r
    }

    fn sub_rules(&mut self, s: &Type, t: &Type) -> Result<bool, OutOfFuel> {
        if alpha_eq_type(s, t) {
            return Ok(true);
        }
        match (s, t) {
            (_, Type::Top) => Ok(true),
            (_, Type::Inter(a, b)) => Ok(self.sub(s, a)? && self.sub(s, b)?),
            (Type::Inter(a, b), _) => Ok(self.sub(a, t)? || self.sub(b, t)?),

            (Type::Var(x), Type::Readonly(u)) if matches!(&**u, Type::Var(y) if y == x) => Ok(true),
            (Type::Var(x), _) => match self.bound(x) {
                Some(b) => self.sub(&nf(&b), t),
                None => Ok(false),
            },
            (Type::Readonly(inner), _) if matches!(&**inner, Type::Var(_)) => {
                let Type::Var(x) = &**inner else { unreachable!() };
                match self.bound(x) {
                    Some(b) => self.sub(&nf(&Type::readonly(b)), t),
                    None => Ok(false),
                }
            }

            (_, Type::Readonly(u)) => match (s, &**u) {
                (Type::Record(l, sf), Type::Record(m, tf)) => Ok(l == m && self.equiv(sf, tf)?),
                (Type::Readonly(r), Type::Record(m, tf)) => match &**r {
                    Type::Record(l, sf) => Ok(l == m && self.equiv(sf, tf)?),
                    _ => Ok(false),
                },
                _ => Ok(false),
            },

            (Type::Nat, Type::Nat) => Ok(true),
            (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => Ok(self.sub(a2, a1)? && self.sub(b1, b2)?),
            (Type::Forall(x, b1, body1), Type::Forall(y, b2, body2)) => {
                if !self.sub(b2, b1)? {
                    return Ok(false);
                }
                let mut avoid: BTreeSet<Name> = self.bounds.iter().map(|(n, _)| n.clone()).collect();
                avoid.extend(free_type_vars(s));
                avoid.extend(free_type_vars(t));
                let z = fresh_name(x, &avoid);
                let zv = Type::Var(z.clone());
                let lhs = substitute_type(body1, x, &zv);
                let rhs = substitute_type(body2, y, &zv);
                self.bounds.push((z, (**b2).clone()));
                let r = self.sub(&lhs, &rhs);
                self.bounds.pop();
                r
            }
            (Type::Record(l, sf), Type::Record(m, tf)) => Ok(l == m && self.equiv(sf, tf)?),
            _ => Ok(false),
        }
    }
}
