// Worked examples for each layer, checked end to end through the public API.

use fm_core::harness::{crest, diff_run, erased_run, gen_type, gen_well_typed, monitor_run};
use fm_core::subst::{alpha_eq_term, substitute_term, substitute_type};
use fm_core::types::{
    check_store, equivalent, is_normal, is_readonly_type, nf, subtype, subtype_oracle, typecheck, OracleAnswer,
    StoreTyping, TypeContext,
};
use fm_core::{
    erase_seals, eval, is_value, parse_term, parse_type, pretty_store, pretty_term, pretty_type,
    seal_count, seal_leq, step, store_leq, Location, MachineConfig, Outcome, StepResult, Store,
    StuckCause, Term, Type,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ty(s: &str) -> Type {
    parse_type(s).unwrap()
}

fn term(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn rv(cells: &[(&str, u64)]) -> Term {
    Term::record_val(cells.iter().map(|(l, n)| (*l, Location(*n))))
}

#[test]
fn values() {
    assert!(is_value(&Term::seal(rv(&[("y", 1)]))));
    assert!(is_value(&term("fun(x: Nat) x")));
    let sealed_fn = term("seal (fun(x: Nat) x)");
    assert!(!is_value(&sealed_fn));
    match step(&MachineConfig::new(sealed_fn)) {
        StepResult::Stepped { config, rule, .. } => {
            assert_eq!(rule, "seal-pass");
            assert_eq!(config.term, term("fun(x: Nat) x"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn seal_counting_and_ordering() {
    let r = rv(&[("x", 1)]);
    assert_eq!(seal_count(&Term::var("x")), 0);
    assert_eq!(seal_count(&Term::seal(Term::seal(r.clone()))), 2);
    assert_eq!(seal_count(&Term::read(Term::seal(r.clone()), "x")), 1);

    let s = term("fun(r: {x: Nat}) r.x");
    assert!(seal_leq(&s, &Term::seal(s.clone())));
    assert!(seal_leq(&term("r.x"), &term("(seal r).x")));
    assert!(!seal_leq(&Term::seal(s.clone()), &s));

    let v = rv(&[("x", 1)]);
    assert!(store_leq(&Store::new(), &Store::new()));
    let a = Store::from_cells([(Location(1), v.clone())]);
    let b = Store::from_cells([(Location(1), Term::seal(v.clone()))]);
    let c = Store::from_cells([(Location(1), v.clone()), (Location(2), v)]);
    assert!(store_leq(&a, &b));
    assert!(!store_leq(&a, &c));
}

#[test]
fn substitution() {
    assert_eq!(substitute_term(&Term::var("x"), "x", &Term::nat(5)), Term::nat(5));
    let shadow = term("fun(x: Nat) x");
    assert_eq!(substitute_term(&shadow, "x", &Term::nat(5)), shadow);
    let r = substitute_type(&Type::readonly(Type::var("X")), "X", &ty("{f: Nat}"));
    assert_eq!(r, ty("readonly {f: Nat}"));
}

#[test]
fn parsing() {
    assert_eq!(
        term("{x = 10}.x := 5"),
        Term::write(Term::record([("x", Term::nat(10))]), "x", Term::nat(5))
    );
    assert_eq!(
        term("seal {y = {x = 10}}"),
        Term::seal(Term::record([("y", Term::record([("x", Term::nat(10))]))]))
    );
    assert_eq!(term("fun(x: Top) x"), Term::abs("x", Type::Top, Term::var("x")));
    assert_eq!(
        ty("readonly {x: Nat} & {y: Nat}"),
        Type::inter(Type::readonly(Type::record("x", Type::Nat)), Type::record("y", Type::Nat))
    );
    assert_eq!(
        ty("forall(X <: Top) X -> X"),
        Type::forall("X", Type::Top, Type::arrow(Type::var("X"), Type::var("X")))
    );
    assert_eq!(
        ty("readonly readonly {x: Nat}"),
        Type::readonly(Type::readonly(Type::record("x", Type::Nat)))
    );
}

#[test]
fn printing() {
    assert_eq!(pretty_term(&rv(&[("x", 1)])), "{x : 0x0001}");
    assert_eq!(pretty_type(&Type::Top), "Top");
    assert_eq!(pretty_type(&ty("{x: Nat} & {y: Nat}")), "{x: Nat} & {y: Nat}");
}

#[test]
fn normal_forms() {
    assert!(is_normal(&ty("{x: X} & readonly {y: Y}")));
    assert!(!is_normal(&ty("readonly ({x: X} & {y: Y})")));
    assert!(is_normal(&Type::Top));

    assert_eq!(nf(&ty("readonly readonly {x: Nat}")), ty("readonly {x: Nat}"));
    assert_eq!(nf(&ty("readonly (Nat -> Nat)")), ty("Nat -> Nat"));
    let spread = ty("readonly ({x: X} & {y: Y})");
    let expected = ty("readonly {x: X} & readonly {y: Y}");
    assert_eq!(nf(&spread), expected);
    let ctx = TypeContext::new().with_tyvar("X", Type::Top).with_tyvar("Y", Type::Top);
    assert!(subtype_oracle(&ctx, &spread, &expected, 8).is_proven());
    assert!(subtype_oracle(&ctx, &expected, &spread, 8).is_proven());

    assert!(is_readonly_type(&ty("readonly {x: Nat}")));
    assert!(!is_readonly_type(&ty("{x: Nat}")));
    assert!(is_readonly_type(&ty("Nat -> Nat")));
}

#[test]
fn subtyping() {
    let e = TypeContext::new();
    let sub = |s: &str, t: &str| subtype(&e, &ty(s), &ty(t)).unwrap();
    assert!(sub("{x: Nat}", "readonly {x: Nat}"));
    assert!(sub("readonly readonly {x: Nat}", "readonly {x: Nat}"));
    assert!(!sub("readonly {x: Nat}", "{x: Nat}"));
    assert_eq!(
        subtype_oracle(&e, &ty("readonly {x: Nat}"), &ty("{x: Nat}"), 8),
        OracleAnswer::NoProofWithinDepth
    );
    assert_eq!(subtype_oracle(&e, &Type::Top, &ty("{x: Nat}"), 8), OracleAnswer::NoProofWithinDepth);
    assert_eq!(subtype_oracle(&e, &ty("{x: Nat} & {y: Nat}"), &ty("{x: Nat}"), 8), OracleAnswer::Proven);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let t = gen_type(3, &e, &mut rng);
        let ro = Type::readonly(Type::readonly(t.clone()));
        assert!(subtype(&e, &ro, &Type::readonly(t.clone())).unwrap(), "{t}");
        assert!(subtype_oracle(&e, &t, &nf(&t), 8).is_proven(), "{t}");
    }
}

#[test]
fn typing() {
    let e = TypeContext::new();
    let st = StoreTyping::new();
    let sealed = typecheck(&e, &st, &term("seal {x = 10}")).unwrap();
    assert_eq!(sealed.judged, ty("readonly {x: Nat}"));

    let z = e.clone().with_term("z", ty("readonly {first: {x: Nat}}"));
    assert_eq!(typecheck(&z, &st, &term("z.first")).unwrap().judged, ty("readonly {x: Nat}"));

    let y = e.clone().with_term("y", ty("readonly {first: Nat}"));
    let errs = typecheck(&y, &st, &term("y.first := 7")).unwrap_err();
    assert_eq!(errs[0].code, "write-through-readonly");

    assert!(check_store(&e, &StoreTyping::new(), &Store::new()).is_ok());
    let cell = Store::from_cells([(Location(1), Term::nat(10))]);
    let nat: StoreTyping = [(Location(1), Type::Nat)].into_iter().collect();
    let rec: StoreTyping = [(Location(1), ty("{x: Nat}"))].into_iter().collect();
    assert!(check_store(&e, &nat, &cell).is_ok());
    assert!(check_store(&e, &rec, &cell).is_err());
}

#[test]
fn write_trace() {
    let out = eval(MachineConfig::new(term("{x = 10}.x := 5")), 100);
    let configs: Vec<String> = out.trace().configs().map(ToString::to_string).collect();
    assert_eq!(
        configs,
        [
            "⟨{x = 10}.x := 5, []⟩",
            "⟨{x : 0x0001}.x := 5, [0x0001: 10]⟩",
            "⟨10, [0x0001: 5]⟩",
        ]
    );
    assert_eq!(out.trace().rules().collect::<Vec<_>>(), ["alloc", "write-field"]);
}

#[test]
fn sealed_write_is_stuck() {
    let out = eval(MachineConfig::new(term("(seal {x = 10}).x := 5")), 100);
    match &out {
        Outcome::Stuck { cause, trace } => {
            assert_eq!(*cause, StuckCause::WriteThroughSeal);
            assert_eq!(trace.rules().collect::<Vec<_>>(), ["alloc"]);
            assert_eq!(trace.last().to_string(), "⟨(seal {x : 0x0001}).x := 5, [0x0001: 10]⟩");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn viewpoint_adaptation() {
    let out = eval(MachineConfig::new(term("(seal {y = {x = 10}}).y")), 100);
    let Outcome::Finished { value, store, .. } = out else { panic!() };
    assert_eq!(value, Term::seal(rv(&[("x", 1)])));
    assert_eq!(pretty_store(&store), "[0x0001: 10, 0x0002: {x : 0x0001}]");
}

#[test]
fn evaluation_edges() {
    let out = eval(MachineConfig::new(term("seal (fun(x: Nat) x)")), 10);
    assert!(out.is_finished());
    assert_eq!(out.trace().len(), 1);
    assert!(out.final_config().store.is_empty());

    let out = eval(MachineConfig::new(Term::nat(10)), 0);
    assert!(out.is_finished() && out.trace().is_empty());

    let omega = term("(fun(x: Top) x x) (fun(x: Top) x x)");
    assert_eq!(eval(MachineConfig::new(omega), 100).kind(), "out-of-fuel");
}

#[test]
fn allocation() {
    let mut s = Store::new();
    assert_eq!(s.alloc(Term::nat(10)), Location(1));
    assert_eq!(s.alloc(rv(&[("x", 1)])), Location(2));
    let base = Store::new();
    let (a, _) = fm_core::syntax::alloc(&base, Term::nat(1));
    let (b, s2) = fm_core::syntax::alloc(&base, Term::nat(2));
    let (c, _) = fm_core::syntax::alloc(&s2, Term::nat(3));
    assert_eq!(a, b);
    assert_ne!(b, c);
}

#[test]
fn crest_examples() {
    let z = TypeContext::new().with_term("z", ty("readonly {first: {x: Nat}}"));
    let tt = typecheck(&z, &StoreTyping::new(), &term("z.first")).unwrap();
    let c = crest(&tt);
    assert_eq!(c, term("seal ((seal z).first)"));
    let again = typecheck(&z, &StoreTyping::new(), &c).unwrap().judged;
    assert!(equivalent(&z, &again, &tt.judged).unwrap(), "{again}");

    let f = term("fun(x: Nat) x");
    let cf = crest(&typecheck(&TypeContext::new(), &StoreTyping::new(), &f).unwrap());
    assert_eq!(cf, Term::seal(f.clone()));
    assert!(diff_run(&f, 100).unwrap().is_equivalent());

    let n = crest(&typecheck(&TypeContext::new(), &StoreTyping::new(), &Term::nat(10)).unwrap());
    assert_eq!(n, Term::nat(10));
}

#[test]
fn erasure_examples() {
    assert_eq!(erase_seals(&Term::seal(Term::seal(rv(&[("x", 1)])))), rv(&[("x", 1)]));
    let plain = term("{x = 10}.x := 5");
    assert_eq!(erase_seals(&plain), plain);

    let r = erased_run(&term("seal {x = 10}"), 100).unwrap();
    assert!(r.is_equivalent());
    assert_eq!(r.value_leq, Some(true));
    let r = erased_run(&term("(seal (fun(x: Nat) x)) 5"), 100).unwrap();
    assert!(r.is_equivalent());
    assert!(r.transformed_outcome.is_finished());
    assert_eq!(r.transformed_outcome.final_config().term, Term::nat(5));
}

#[test]
fn diff_examples() {
    let r = diff_run(&term("{x = 10}.x := 5"), 100).unwrap();
    assert!(r.is_equivalent(), "{:?}", r.verdict);
    assert_eq!(r.original_outcome.final_config().term, Term::nat(10));
    assert_eq!(r.transformed_outcome.final_config().term, Term::nat(10));

    let r = diff_run(&term("(seal {y = {x = 10}}).y"), 100).unwrap();
    assert!(r.is_equivalent(), "{:?}", r.verdict);
    assert!(matches!(r.original_outcome.final_config().term.kind, fm_core::TermKind::Seal(_)));
    assert!(matches!(r.transformed_outcome.final_config().term.kind, fm_core::TermKind::Seal(_)));
}

#[test]
fn monitor_examples() {
    let access = term(
        "(fun(z: readonly {first: {x: Nat}, second: {x: Nat}}) z.first) \
         (seal {first = {x = 1}, second = {x = 2}})",
    );
    assert!(monitor_run(&access, 500).unwrap().is_clean());
    for v in ["10", "fun(x: Nat) x", "tfun(X <: Top) fun(x: X) x"] {
        let r = monitor_run(&term(v), 10).unwrap();
        assert!(r.is_clean() && r.steps.is_empty());
    }
}

#[test]
fn generator_examples() {
    let e = TypeContext::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let t = gen_type(0, &e, &mut rng);
        assert!(t == Type::Top || t == Type::Nat, "{t}");
    }
    for target in [Type::Nat, ty("readonly {x: Nat}")] {
        for _ in 0..20 {
            if let Ok(p) = gen_well_typed(&e, &target, 30, &mut rng) {
                let tt = typecheck(&e, &StoreTyping::new(), &p).unwrap();
                assert!(subtype(&e, &tt.judged, &target).unwrap(), "{p} : {}", tt.judged);
            }
        }
    }
    let crested_corpus = term("(fun(r: readonly {a: {b: Nat}}) r.a) (seal {a = {b = 1}})");
    let c = crest(&typecheck(&e, &StoreTyping::new(), &crested_corpus).unwrap());
    assert!(alpha_eq_term(&erase_seals(&c), &erase_seals(&crested_corpus)));
}
