//! Seal counting, the seal ordering on terms and stores, and seal erasure.

use crate::subst::{alpha_eq_type_in, map_children, AlphaEnv};
use crate::syntax::{Store, Term, TermKind};

/// Number of `seal` constructors in a term. Stored values are not visited.
pub fn seal_count(t: &Term) -> usize {
    let own = usize::from(matches!(t.kind, TermKind::Seal(_)));
    own + t.children().into_iter().map(seal_count).sum::<usize>()
}

/// `s <= t`: `t` is `s` with zero or more extra seals wrapped around
/// subterms. Compared up to renaming of bound variables.
pub fn seal_leq(s: &Term, t: &Term) -> bool {
    leq(s, t, &mut AlphaEnv::new(), &mut AlphaEnv::new())
}

fn leq(s: &Term, t: &Term, vars: &mut AlphaEnv, tvars: &mut AlphaEnv) -> bool {
    if let TermKind::Seal(t_inner) = &t.kind {
        if let TermKind::Seal(s_inner) = &s.kind {
            if leq(s_inner, t_inner, vars, tvars) {
                return true;
            }
        }
        // the seal on the right is an inserted one
        return leq(s, t_inner, vars, tvars);
    }
    match (&s.kind, &t.kind) {
        (TermKind::Var(x), TermKind::Var(y)) => vars.matches(x, y),
        (TermKind::Nat(m), TermKind::Nat(n)) => m == n,
        (TermKind::RecordVal(f), TermKind::RecordVal(g)) => f == g,
        (TermKind::Abs(x, tx, bx), TermKind::Abs(y, ty, by)) => {
            if !alpha_eq_type_in(tx, ty, tvars) {
                return false;
            }
            vars.push(x, y);
            let r = leq(bx, by, vars, tvars);
            vars.pop();
            r
        }
        (TermKind::TyAbs(x, tx, bx), TermKind::TyAbs(y, ty, by)) => {
            if !alpha_eq_type_in(tx, ty, tvars) {
                return false;
            }
            tvars.push(x, y);
            let r = leq(bx, by, vars, tvars);
            tvars.pop();
            r
        }
        (TermKind::App(f1, a1), TermKind::App(f2, a2)) => {
            leq(f1, f2, vars, tvars) && leq(a1, a2, vars, tvars)
        }
        (TermKind::TyApp(f1, t1), TermKind::TyApp(f2, t2)) => {
            leq(f1, f2, vars, tvars) && alpha_eq_type_in(t1, t2, tvars)
        }
        (TermKind::Record(f), TermKind::Record(g)) => {
            f.len() == g.len()
                && f
                    .iter()
                    .zip(g)
                    .all(|((l, a), (m, b))| l == m && leq(a, b, vars, tvars))
        }
        (TermKind::Read(a, l), TermKind::Read(b, m)) => l == m && leq(a, b, vars, tvars),
        (TermKind::Write(a1, l, a2), TermKind::Write(b1, m, b2)) => {
            l == m && leq(a1, b1, vars, tvars) && leq(a2, b2, vars, tvars)
        }
        _ => false,
    }
}

/// `σ1 <= σ2`: same domain and the ordering holds cell by cell.
pub fn store_leq(s1: &Store, s2: &Store) -> bool {
    s1.len() == s2.len()
        && s1
            .iter()
            .all(|(l, v)| s2.get(l).is_some_and(|w| seal_leq(v, w)))
}

/// Removes every seal.
pub fn erase_seals(t: &Term) -> Term {
    match &t.kind {
        TermKind::Seal(inner) => erase_seals(inner),
        _ => map_children(t, erase_seals),
    }
}

/// Removes every seal from every stored value.
pub fn erase_store(s: &Store) -> Store {
    Store::from_cells(s.iter().map(|(l, v)| (l, erase_seals(v))))
}
