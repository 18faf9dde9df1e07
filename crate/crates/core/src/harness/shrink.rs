use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::syntax::{Term, TermKind};

/// Greedily simplifies a failing program while `fails` keeps holding: drops
/// seals, zeroes number literals and prunes record-literal fields. Each
/// accepted candidate is strictly smaller, so this terminates.
pub fn shrink(program: &Term, mut fails: impl FnMut(&Term) -> bool) -> Term {
    let mut current = program.clone();
    'outer: loop {
        for candidate in candidates(&current) {
            if fails(&candidate) {
                current = candidate;
                continue 'outer;
            }
        }
        return current;
    }
}

/// All one-edit simplifications of `t`.
fn candidates(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    match &t.kind {
        TermKind::Seal(inner) => out.push((**inner).clone()),
        TermKind::Nat(n) if *n > 0 => out.push(Term::nat(0).with_span(t.span)),
        TermKind::Record(fields) if fields.len() > 1 => {
            for i in 0..fields.len() {
                let mut fewer = fields.clone();
                fewer.remove(i);
                out.push(Term::new(TermKind::Record(fewer), t.span));
            }
        }
        _ => {}
    }
    let rebuild = |kind: TermKind| Term::new(kind, t.span);
    match &t.kind {
        TermKind::Abs(x, ty, b) => {
            for b in candidates(b) {
                out.push(rebuild(TermKind::Abs(x.clone(), ty.clone(), Box::new(b))));
            }
        }
        TermKind::TyAbs(x, ty, b) => {
            for b in candidates(b) {
                out.push(rebuild(TermKind::TyAbs(x.clone(), ty.clone(), Box::new(b))));
            }
        }
        TermKind::TyApp(f, ty) => {
            for f in candidates(f) {
                out.push(rebuild(TermKind::TyApp(Box::new(f), ty.clone())));
            }
        }
        TermKind::App(f, a) => {
            for f2 in candidates(f) {
                out.push(rebuild(TermKind::App(Box::new(f2), a.clone())));
            }
            for a2 in candidates(a) {
                out.push(rebuild(TermKind::App(f.clone(), Box::new(a2))));
            }
        }
        TermKind::Record(fields) => {
            for (i, (_, f)) in fields.iter().enumerate() {
                for f2 in candidates(f) {
                    let mut fs = fields.clone();
                    fs[i].1 = f2;
                    out.push(rebuild(TermKind::Record(fs)));
                }
            }
        }
        TermKind::Read(r, l) => {
            for r in candidates(r) {
                out.push(rebuild(TermKind::Read(Box::new(r), l.clone())));
            }
        }
        TermKind::Write(r, l, s) => {
            for r2 in candidates(r) {
                out.push(rebuild(TermKind::Write(Box::new(r2), l.clone(), s.clone())));
            }
            for s2 in candidates(s) {
                out.push(rebuild(TermKind::Write(r.clone(), l.clone(), Box::new(s2))));
            }
        }
        TermKind::Seal(inner) => {
            for i in candidates(inner) {
                out.push(rebuild(TermKind::Seal(Box::new(i))));
            }
        }
        TermKind::Var(_) | TermKind::Nat(_) | TermKind::RecordVal(_) => {}
    }
    out
}
