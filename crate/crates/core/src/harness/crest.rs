use alloc::boxed::Box;

use crate::syntax::{Term, TermKind, Type};
use crate::types::{components, is_readonly_type, nf, Typed, TypedNode, TypedTerm};

/// Seals every subterm the derivation gives a read-only type.
///
/// Nat-typed subterms are left alone: sealing a scalar is inert. Existing
/// seals are not wrapped again, and neither is the body of a seal, so the
/// transformation is idempotent.
pub fn crest(tt: &TypedTerm) -> Term {
    go(&tt.root, false)
}

/// Whether crest wraps a node of this type.
pub fn crest_seals(ty: &Type) -> bool {
    is_readonly_type(ty) && !components(&nf(ty)).iter().any(|c| **c == Type::Nat)
}

fn go(n: &Typed, under_seal: bool) -> Term {
    let is_seal = matches!(n.node, TypedNode::Seal(_));
    let kind = match &n.node {
        TypedNode::Var(x) => TermKind::Var(x.clone()),
        TypedNode::Nat(k) => TermKind::Nat(*k),
        TypedNode::Abs(x, ty, b) => TermKind::Abs(x.clone(), ty.clone(), Box::new(go(b, false))),
        TypedNode::App(f, a) => TermKind::App(Box::new(go(f, false)), Box::new(go(a, false))),
        TypedNode::TyAbs(x, ty, b) => TermKind::TyAbs(x.clone(), ty.clone(), Box::new(go(b, false))),
        TypedNode::TyApp(f, ty) => TermKind::TyApp(Box::new(go(f, false)), ty.clone()),
        TypedNode::Record(fields) => {
            TermKind::Record(fields.iter().map(|(l, t)| (l.clone(), go(t, false))).collect())
        }
        TypedNode::RecordVal(cells) => TermKind::RecordVal(cells.clone()),
        TypedNode::Read(t, l) => TermKind::Read(Box::new(go(t, false)), l.clone()),
        TypedNode::Write(t, l, s) => {
            TermKind::Write(Box::new(go(t, false)), l.clone(), Box::new(go(s, false)))
        }
        TypedNode::Seal(t) => TermKind::Seal(Box::new(go(t, true))),
    };
    let t = Term::new(kind, n.span);
    if !is_seal && !under_seal && crest_seals(&n.ty) {
        Term::seal(t).with_span(n.span)
    } else {
        t
    }
}
