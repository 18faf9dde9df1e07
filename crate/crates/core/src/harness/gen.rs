//! Random types and type-directed random well-typed terms.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::subst::{alpha_eq_type, fresh_name, substitute_type};
use crate::syntax::{Name, Term, Type};
use crate::types::{components, is_readonly_type, nf, subtype, TypeContext};

const LABELS: [&str; 3] = ["a", "b", "c"];

/// A random type of at most the given depth whose variables are bound in `ctx`.
pub fn gen_type<R: Rng + ?Sized>(depth: u32, ctx: &TypeContext, rng: &mut R) -> Type {
    let vars: Vec<Name> = ctx.tyvars().map(|(n, _)| n.clone()).collect();
    if depth == 0 {
        let leaves = 2 + usize::from(!vars.is_empty());
        return match rng.random_range(0..leaves) {
            0 => Type::Top,
            1 => Type::Nat,
            _ => Type::Var(vars[rng.random_range(0..vars.len())].clone()),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..9) {
        0 => gen_type(0, ctx, rng),
        1 => Type::arrow(gen_type(d, ctx, rng), gen_type(d, ctx, rng)),
        2 => {
            let avoid: BTreeSet<Name> = ctx.tyvar_names();
            let x = fresh_name("X", &avoid);
            let bound = gen_type(d, ctx, rng);
            let inner = ctx.clone().with_tyvar(x.clone(), bound.clone());
            Type::forall(x, bound, gen_type(d, &inner, rng))
        }
        3 | 4 => Type::record(label(rng), gen_type(d, ctx, rng)),
        5 | 6 => Type::inter(gen_type(d, ctx, rng), gen_type(d, ctx, rng)),
        _ => Type::readonly(gen_type(d, ctx, rng)),
    }
}

fn label<R: Rng + ?Sized>(rng: &mut R) -> Name {
    LABELS[rng.random_range(0..LABELS.len())].into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GiveUp;

/// A closed-over-`ctx` term that checks against `target`, built from the
/// shape of the target type. `fuel` bounds the number of nodes attempted.
pub fn gen_well_typed<R: Rng + ?Sized>(
    ctx: &TypeContext,
    target: &Type,
    fuel: u32,
    rng: &mut R,
) -> Result<Term, GiveUp> {
    let mut g = Gen { fuel, counter: 0, rng };
    g.term(ctx, target, 4)
}

/// A random target type paired with a program checking against it.
pub fn gen_program<R: Rng + ?Sized>(type_depth: u32, fuel: u32, rng: &mut R) -> (Type, Term) {
    let empty = TypeContext::new();
    loop {
        let ty = gen_type(type_depth, &empty, rng);
        if let Ok(t) = gen_well_typed(&empty, &ty, fuel, rng) {
            return (ty, t);
        }
    }
}

struct Gen<'r, R: ?Sized> {
    fuel: u32,
    counter: u32,
    rng: &'r mut R,
}

/// What a target type asks for once `Top` parts are dropped.
enum Shape {
    Anything,
    Nat,
    Arrow(Type, Type),
    Forall(Name, Type, Type),
    /// Label, field type, whether every occurrence is read-only.
    Records(Vec<(Name, Type, bool)>),
    Var(Name, bool),
    Other,
}

impl<R: Rng + ?Sized> Gen<'_, R> {
    fn fresh(&mut self, base: &str) -> Name {
        self.counter += 1;
        format!("{base}{}", self.counter)
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn shape(&self, ctx: &TypeContext, target: &Type) -> Shape {
        let n = nf(target);
        let parts: Vec<&Type> = components(&n).into_iter().filter(|c| **c != Type::Top).collect();
        match parts.as_slice() {
            [] => Shape::Anything,
            [Type::Nat] => Shape::Nat,
            [Type::Arrow(a, b)] => Shape::Arrow((**a).clone(), (**b).clone()),
            [Type::Forall(x, b, body)] => Shape::Forall(x.clone(), (**b).clone(), (**body).clone()),
            [Type::Var(x)] => Shape::Var(x.clone(), false),
            [Type::Readonly(inner)] if matches!(&**inner, Type::Var(_)) => {
                let Type::Var(x) = &**inner else { unreachable!() };
                Shape::Var(x.clone(), true)
            }
            _ => {
                let mut fields: Vec<(Name, Type, bool)> = Vec::new();
                for p in &parts {
                    let (l, f, ro) = match p {
                        Type::Record(l, f) => (l, f, false),
                        Type::Readonly(r) => match &**r {
                            Type::Record(l, f) => (l, f, true),
                            _ => return Shape::Other,
                        },
                        _ => return Shape::Other,
                    };
                    match fields.iter_mut().find(|(m, _, _)| m == l) {
                        Some((_, g, all_ro)) => {
                            let same = alpha_eq_type(g, f)
                                || (subtype(ctx, g, f) == Ok(true) && subtype(ctx, f, g) == Ok(true));
                            if !same {
                                return Shape::Other;
                            }
                            *all_ro &= ro;
                        }
                        None => fields.push((l.clone(), (**f).clone(), ro)),
                    }
                }
                Shape::Records(fields)
            }
        }
    }

    fn term(&mut self, ctx: &TypeContext, target: &Type, depth: u32) -> Result<Term, GiveUp> {
        if self.fuel == 0 {
            return Err(GiveUp);
        }
        self.fuel -= 1;
        // Elimination forms first when there is room, then variables, then
        // the introduction form the type asks for.
        if depth > 0 && self.coin(0.5) {
            if let Ok(t) = self.elim(ctx, target, depth) {
                return Ok(t);
            }
        }
        if self.coin(0.5) {
            if let Some(t) = self.variable(ctx, target) {
                return Ok(t);
            }
        }
        match self.intro(ctx, target, depth) {
            Ok(t) => Ok(t),
            Err(GiveUp) => match self.variable(ctx, target) {
                Some(t) => Ok(t),
                None if depth > 0 => self.elim(ctx, target, depth),
                None => Err(GiveUp),
            },
        }
    }

    fn intro(&mut self, ctx: &TypeContext, target: &Type, depth: u32) -> Result<Term, GiveUp> {
        let d = depth.saturating_sub(1);
        match self.shape(ctx, target) {
            Shape::Anything => {
                if depth == 0 || self.coin(0.4) {
                    Ok(Term::nat(self.rng.random_range(0..100)))
                } else {
                    let ty = gen_type(1, ctx, self.rng);
                    self.term(ctx, &ty, d)
                }
            }
            Shape::Nat => Ok(Term::nat(self.rng.random_range(0..100))),
            Shape::Arrow(a, b) => {
                let x = self.fresh("x");
                let inner = ctx.clone().with_term(x.clone(), a.clone());
                Ok(Term::abs(x, a, self.term(&inner, &b, d)?))
            }
            Shape::Forall(x, bound, body) => {
                let mut avoid = ctx.tyvar_names();
                avoid.insert(x.clone());
                let y = fresh_name("Y", &avoid);
                let body = substitute_type(&body, &x, &Type::Var(y.clone()));
                let inner = ctx.clone().with_tyvar(y.clone(), bound.clone());
                Ok(Term::ty_abs(y, bound, self.term(&inner, &body, d)?))
            }
            Shape::Records(fields) => {
                let all_ro = fields.iter().all(|(_, _, ro)| *ro);
                let mut lits = Vec::with_capacity(fields.len());
                for (l, f, _) in fields {
                    lits.push((l, self.term(ctx, &f, d)?));
                }
                let lit = Term::record(lits);
                Ok(if all_ro && self.coin(0.5) { Term::seal(lit) } else { lit })
            }
            Shape::Var(x, ro) => {
                if ro {
                    // A value of type X sealed, or read-only already.
                    let t = self.variable(ctx, &Type::Var(x)).ok_or(GiveUp)?;
                    Ok(Term::seal(t))
                } else {
                    Err(GiveUp)
                }
            }
            Shape::Other => Err(GiveUp),
        }
    }

    /// A variable, or a field read of one, whose type fits the target.
    fn variable(&mut self, ctx: &TypeContext, target: &Type) -> Option<Term> {
        let fits = |ty: &Type| subtype(ctx, ty, target) == Ok(true);
        let mut choices: Vec<Term> = Vec::new();
        let mut seen = BTreeSet::new();
        for (x, ty) in ctx.terms().collect::<Vec<_>>().into_iter().rev() {
            if !seen.insert(x.clone()) {
                continue;
            }
            if fits(ty) {
                choices.push(Term::var(x.clone()));
            }
            for c in components(&nf(ty)) {
                let read = match c {
                    Type::Record(l, f) => Some((l, (**f).clone())),
                    Type::Readonly(r) => match &**r {
                        Type::Record(l, f) => Some((l, Type::readonly((**f).clone()))),
                        _ => None,
                    },
                    _ => None,
                };
                if let Some((l, fty)) = read {
                    if fits(&fty) {
                        choices.push(Term::read(Term::var(x.clone()), l.clone()));
                    }
                }
            }
        }
        if choices.is_empty() {
            return None;
        }
        let i = self.rng.random_range(0..choices.len());
        Some(choices.swap_remove(i))
    }

    fn elim(&mut self, ctx: &TypeContext, target: &Type, depth: u32) -> Result<Term, GiveUp> {
        let d = depth - 1;
        match self.rng.random_range(0..8) {
            // (fun(x: A) body) arg
            0 | 1 => {
                let a = self.arg_type(ctx);
                let x = self.fresh("x");
                let inner = ctx.clone().with_term(x.clone(), a.clone());
                let body = self.term(&inner, target, d)?;
                let arg = self.term(ctx, &a, d)?;
                Ok(Term::app(Term::abs(x, a, body), arg))
            }
            // (fun(r: {l: T}) r.l) {l = …}
            2 => {
                let l = label(self.rng);
                let rty = Type::record(l.clone(), target.clone());
                let r = self.fresh("r");
                let arg = self.term(ctx, &rty, d)?;
                Ok(Term::app(Term::abs(r.clone(), rty, Term::read(Term::var(r), l)), arg))
            }
            // (fun(r: {m: U} & {l: T}) r.l := …) {m = …, l = …}
            3 => {
                let l = label(self.rng);
                let mut rty = Type::record(l.clone(), target.clone());
                let others: Vec<&str> = LABELS.iter().copied().filter(|m| *m != l).collect();
                if self.coin(0.5) {
                    let m = others[self.rng.random_range(0..others.len())];
                    rty = Type::inter(Type::record(m, gen_type(1, ctx, self.rng)), rty);
                }
                let r = self.fresh("r");
                let inner = ctx.clone().with_term(r.clone(), rty.clone());
                let src = self.term(&inner, target, d)?;
                let arg = self.term(ctx, &rty, d)?;
                let body = Term::write(Term::var(r.clone()), l, src);
                Ok(Term::app(Term::abs(r, rty, body), arg))
            }
            // polymorphic identity at the target
            4 => {
                let mut avoid = ctx.tyvar_names();
                avoid.extend(crate::subst::free_type_vars(target));
                let x = fresh_name("Z", &avoid);
                let v = self.fresh("v");
                let id = Term::ty_abs(x.clone(), Type::Top, Term::abs(v.clone(), Type::Var(x), Term::var(v)));
                Ok(Term::app(Term::ty_app(id, target.clone()), self.term(ctx, target, d)?))
            }
            // one record bound under a mutable and a read-only name
            5 | 6 => {
                let rty = Type::record(label(self.rng), gen_type(1, ctx, self.rng));
                let (r, q) = (self.fresh("r"), self.fresh("q"));
                let inner = ctx
                    .clone()
                    .with_term(r.clone(), rty.clone())
                    .with_term(q.clone(), Type::readonly(rty.clone()));
                let body = self.term(&inner, target, d)?;
                let arg = self.term(ctx, &rty, d)?;
                let view = Term::app(Term::abs(q, Type::readonly(rty.clone()), body), Term::var(r.clone()));
                Ok(Term::app(Term::abs(r, rty, view), arg))
            }
            _ => {
                if is_readonly_type(target) {
                    Ok(Term::seal(self.term(ctx, target, d)?))
                } else {
                    Err(GiveUp)
                }
            }
        }
    }

    /// Parameter types for beta redexes, biased toward records so that
    /// aliases with different mutability show up.
    fn arg_type(&mut self, ctx: &TypeContext) -> Type {
        match self.rng.random_range(0..4) {
            0 => {
                let f = gen_type(1, ctx, self.rng);
                Type::record(label(self.rng), f)
            }
            1 => {
                let f = gen_type(1, ctx, self.rng);
                Type::readonly(Type::record(label(self.rng), Type::record(label(self.rng), f)))
            }
            _ => gen_type(2, ctx, self.rng),
        }
    }
}
