//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::process::Command;
use std::time::{Duration, Instant};

use fm::corpus::{default_dir, load_corpus, CorpusEntry, Expectation};
use fm_core::harness::{diff_with, erased_with, gen_program, gen_type, monitor_with};
use fm_core::types::{
    equivalent, is_normal, nf, oracle_min_depth, subtype, subtype_oracle, typecheck_against,
    StoreTyping, TypeContext,
};
use fm_core::{
    parse_term, pretty_store, Location, Machine, MachineConfig, Mutation, Outcome, StuckCause, Term,
    TermKind, Type,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_f00d;

type Verdict = Result<String, String>;

fn fm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fm")).args(args).output().expect("run fm");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

// Configurations transcribed from the reference traces, written in this
// project's surface syntax (record literals use `=`, writes use `:=`).
const WRITE_TRACE: &str = "
   ⟨{x = 10}.x := 5, []⟩
⟶ ⟨{x : 0x0001}.x := 5, [0x0001: 10]⟩  (alloc)
⟶ ⟨10, [0x0001: 5]⟩  (write-field)
";

fn trace_reproduction() -> Verdict {
    let (code, out, err) = fm(&["trace", "-e", "{x = 10}.x := 5"]);
    ensure(code == 0, || format!("exit {code}: {err}"))?;
    ensure(squash(&out) == squash(WRITE_TRACE), || format!("got:\n{out}"))?;
    let (code, out, _) = fm(&["trace", "corpus/write.fm"]);
    ensure(code == 0 && squash(&out) == squash(WRITE_TRACE), || format!("corpus trace differs:\n{out}"))?;
    Ok("2 steps, final ⟨10, [0x0001: 5]⟩".into())
}

fn sealed_write(machine: &Machine) -> Verdict {
    let p = parse_term("(seal {x = 10}).x := 5").unwrap();
    match machine.eval(MachineConfig::new(p), 100) {
        Outcome::Stuck { cause: StuckCause::WriteThroughSeal, trace } => {
            let rules: Vec<_> = trace.rules().collect();
            ensure(rules == ["alloc"], || format!("stuck after {rules:?}"))?;
            let last = trace.last().to_string();
            ensure(last == "⟨(seal {x : 0x0001}).x := 5, [0x0001: 10]⟩", || format!("stuck at {last}"))?;
            Ok(format!("stuck at {last}"))
        }
        other => Err(format!("run ended {}: {}", other.kind(), other.final_config())),
    }
}

fn sealed_write_cli() -> Verdict {
    let found = sealed_write(&Machine::new())?;
    let (code, out, _) = fm(&["run", "--no-check", "-e", "(seal {x = 10}).x := 5"]);
    ensure(code == 1 && out.starts_with("stuck after 1 step: write through seal"), || {
        format!("cli exit {code}: {out}")
    })?;
    Ok(found)
}

/// Renames locations in order of first appearance in the store.
fn canonical_locations(value: &Term, store: &fm_core::Store) -> (String, String) {
    let mut names = std::collections::BTreeMap::new();
    for (i, l) in store.locations().enumerate() {
        names.insert(l, Location(i as u64 + 1));
    }
    let rename = |t: &Term| -> Term { rename_locs(t, &names) };
    let store = fm_core::Store::from_cells(store.iter().map(|(l, v)| (names[&l], rename(v))));
    (rename(value).to_string(), pretty_store(&store))
}

fn rename_locs(t: &Term, names: &std::collections::BTreeMap<Location, Location>) -> Term {
    match &t.kind {
        TermKind::RecordVal(cells) => {
            Term::record_val(cells.iter().map(|(l, loc)| (l.clone(), *names.get(loc).unwrap_or(loc))))
        }
        TermKind::Seal(inner) => Term::seal(rename_locs(inner, names)),
        _ => t.clone(),
    }
}

fn viewpoint(machine: &Machine) -> Verdict {
    let p = parse_term("(seal {y = {x = 10}}).y").unwrap();
    let out = machine.eval(MachineConfig::new(p), 100);
    let Outcome::Finished { value, store, trace } = &out else {
        return Err(format!("run ended {}", out.kind()));
    };
    let (v, s) = canonical_locations(value, store);
    ensure(v == "seal {x : 0x0001}", || format!("value {v}"))?;
    ensure(s == "[0x0001: 10, 0x0002: {x : 0x0001}]", || format!("store {s}"))?;
    let rules: Vec<_> = trace.rules().collect();
    ensure(rules == ["alloc", "alloc", "sealed-field"], || format!("rules {rules:?}"))?;
    Ok(format!("⟨{v}, {s}⟩"))
}

fn corpus_section2(corpus: &[CorpusEntry]) -> Verdict {
    let mut seen = Vec::new();
    for name in ["good", "access", "bad1", "bad2"] {
        let e = corpus.iter().find(|e| e.name == name).ok_or(format!("{name}.fm missing"))?;
        let want = if name.starts_with("bad") {
            Expectation::RejectWith("write-through-readonly".into())
        } else {
            Expectation::Accept
        };
        ensure(e.expected == want, || format!("{name} expects {}", e.expected))?;
        ensure(!name.starts_with("bad") || e.at.is_some(), || format!("{name} has no span expectation"))?;
        e.verify(10_000).map_err(|m| format!("{name}: {m}"))?;
        seen.push(format!("{name}: {}", e.expected));
    }
    let (code, _, err) = fm(&["check", "corpus/bad1.fm"]);
    ensure(code == 1 && err.contains("7:34: error[write-through-readonly]"), || format!("cli: {code} {err}"))?;
    Ok(seen.join(", "))
}

fn normalization() -> Verdict {
    let e = TypeContext::new();
    let mut r = rng(5);
    let (mut total, mut oracle) = (0, 0);
    while total < 10_000 {
        let t = gen_type(r.next_u32() % 6, &e, &mut r);
        let n = nf(&t);
        ensure(nf(&n) == n, || format!("nf not idempotent on {t}"))?;
        ensure(is_normal(&n), || format!("nf({t}) = {n} not normal"))?;
        if t.depth() <= 3 {
            let both = subtype_oracle(&e, &t, &n, 8).is_proven() && subtype_oracle(&e, &n, &t, 8).is_proven();
            ensure(both, || format!("no oracle proof of {t} ≡ {n}"))?;
            oracle += 1;
        }
        total += 1;
    }
    ensure(oracle >= 1000, || format!("only {oracle} shallow types"))?;
    Ok(format!("{total} types, {oracle} oracle-proven equivalent to their normal form"))
}

fn agreement() -> Verdict {
    let e = TypeContext::new();
    let mut r = rng(6);
    let (mut yes, mut proven) = (0, 0);
    for _ in 0..1000 {
        let s = gen_type(3, &e, &mut r);
        // Mix independent pairs with related ones, which are rarely drawn independently.
        let t = match r.next_u32() % 4 {
            0 => gen_type(3, &e, &mut r),
            1 => Type::readonly(s.clone()),
            2 => Type::inter(s.clone(), gen_type(2, &e, &mut r)),
            _ => nf(&Type::readonly(s.clone())),
        };
        let (s, t) = if r.next_u32() % 2 == 0 { (s, t) } else { (t, s) };
        let engine = subtype(&e, &s, &t).map_err(|_| format!("engine out of fuel on {s} <: {t}"))?;
        if engine {
            yes += 1;
            ensure(oracle_min_depth(&e, &s, &t, 10).is_some(), || format!("engine yes, no proof: {s} <: {t}"))?;
        }
        if subtype_oracle(&e, &s, &t, 5).is_proven() {
            proven += 1;
            ensure(engine, || format!("proof found, engine no: {s} <: {t}"))?;
        }
    }
    Ok(format!("1000 pairs, {yes} engine-true, {proven} proven at depth 5, no contradictions"))
}

fn readonly_facts() -> Verdict {
    let e = TypeContext::new();
    let mut r = rng(7);
    for _ in 0..100 {
        let t = gen_type(3, &e, &mut r);
        let s = gen_type(2, &e, &mut r);
        let ro = Type::readonly(t.clone());
        ensure(subtype(&e, &t, &ro) == Ok(true), || format!("{t} ≰ readonly {t}"))?;
        ensure(equivalent(&e, &Type::readonly(ro.clone()), &ro) == Ok(true), || format!("readonly readonly {t}"))?;
        let f = Type::arrow(s, t);
        ensure(equivalent(&e, &Type::readonly(f.clone()), &f) == Ok(true), || format!("readonly ({f})"))?;
    }
    Ok("100 sampled types".into())
}

struct Batch {
    programs: Vec<(Type, Term)>,
    corpus: Vec<Term>,
}

fn batch(corpus: &[CorpusEntry]) -> Batch {
    let programs = (0..1000).map(|i| gen_program(3, 40, &mut rng(100 + i))).collect();
    let corpus = corpus
        .iter()
        .filter(|e| e.expected == Expectation::Accept)
        .map(|e| e.parse().unwrap().main)
        .collect();
    Batch { programs, corpus }
}

impl Batch {
    fn all(&self) -> impl Iterator<Item = (&Term, Option<&Type>)> {
        self.programs.iter().map(|(t, p)| (p, Some(t))).chain(self.corpus.iter().map(|p| (p, None)))
    }
}

fn monitors(b: &Batch) -> Verdict {
    let e = TypeContext::new();
    let (mut steps, mut finished) = (0, 0);
    for (ty, p) in &b.programs {
        ensure(typecheck_against(&e, &StoreTyping::new(), p, ty).is_ok(), || format!("ill-typed: {p} : {ty}"))?;
        let m = monitor_with(&Machine::new(), p, Some(ty), 500).map_err(|d| d[0].message.clone())?;
        if let Some(v) = &m.violation {
            return Err(format!("{} violation at step {} of {p}: {}", v.kind, v.step, v.detail));
        }
        let o = m.outcome.as_ref().unwrap();
        ensure(!o.is_stuck(), || format!("stuck: {p}"))?;
        finished += usize::from(o.is_finished());
        steps += m.steps.len();
    }
    Ok(format!("{} programs, {finished} finished, {steps} steps re-checked", b.programs.len()))
}

fn immutability(b: &Batch, machine: &Machine) -> Verdict {
    let (mut n, mut drops) = (0, 0);
    for (p, ty) in b.all() {
        let d = diff_with(machine, p, ty, 500).map_err(|d| d[0].message.clone())?;
        if !d.original_outcome.is_finished() {
            continue;
        }
        n += 1;
        if let fm_core::harness::Verdict::Violation(v) = &d.verdict {
            return Err(format!("{v} in {p}"));
        }
        ensure(d.transformed_outcome.is_finished(), || format!("crested run {}: {p}", d.transformed_outcome.kind()))?;
        ensure(d.value_leq == Some(true) && d.store_leq == Some(true), || format!("results unrelated: {p}"))?;
        let extra = d.transformed_outcome.trace().len() - d.matched_steps;
        ensure(extra == d.seal_drops.len(), || format!("{extra} extra steps, {} drops: {p}", d.seal_drops.len()))?;
        ensure(d.seal_drops.iter().all(|s| s.after < s.before), || format!("drop without fewer seals: {p}"))?;
        drops += d.seal_drops.len();
    }
    Ok(format!("{n} terminating programs equivalent, {drops} seal drops"))
}

fn erasure(b: &Batch) -> Verdict {
    let mut n = 0;
    for (p, ty) in b.all() {
        let d = diff_with(&Machine::new(), p, ty, 500).map_err(|d| d[0].message.clone())?;
        for sealed in [p, &d.transformed] {
            let r = erased_with(&Machine::new(), sealed, ty, 500).map_err(|d| d[0].message.clone())?;
            if !r.transformed_outcome.is_finished() {
                continue;
            }
            n += 1;
            if let fm_core::harness::Verdict::Violation(v) = &r.verdict {
                return Err(format!("{v} in {sealed}"));
            }
            ensure(r.typed_erasure == Some(true), || format!("erased result untyped: {sealed}"))?;
            ensure(r.value_leq == Some(true), || format!("erased value not below: {sealed}"))?;
        }
    }
    Ok(format!("{n} sealed programs equivalent to their erasure"))
}

fn mutants(b: &Batch) -> Verdict {
    let mut lines = Vec::new();
    for m in [Mutation::UnsealedSealedRead, Mutation::WriteThroughSeal] {
        let machine = Machine::mutated(m);
        let caught: Vec<&str> = [
            ("2", sealed_write(&machine).is_err()),
            ("3", viewpoint(&machine).is_err()),
            ("9", immutability(b, &machine).is_err()),
        ]
        .into_iter()
        .filter_map(|(c, failed)| failed.then_some(c))
        .collect();
        ensure(!caught.is_empty(), || format!("{m:?} not detected"))?;
        lines.push(format!("{m:?} fails {}", caught.join(",")));
    }
    Ok(lines.join("; "))
}

fn main() {
    // Tests run from the package root; the CLI is given paths relative to it.
    let corpus = load_corpus(&default_dir()).expect("bundled corpus");
    let mut failed = 0;
    let mut report = |n: u32, name: &str, limit: Duration, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > limit => Err(format!("took {took:.2?}, limit {limit:?} ({msg})")),
            r => r,
        };
        let (tag, msg) = match &result {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        failed += usize::from(result.is_err());
        println!("{tag} {n:>2} {name:<28} {:>9.3}s  {msg}", took.as_secs_f64());
    };
    let secs = Duration::from_secs;
    let plain = Machine::new();
    report(1, "trace reproduction", secs(1), &mut trace_reproduction);
    report(2, "sealed write gets stuck", secs(1), &mut sealed_write_cli);
    report(3, "viewpoint adaptation", secs(1), &mut || viewpoint(&plain));
    report(4, "reference corpus", secs(1), &mut || corpus_section2(&corpus));
    report(5, "normalization", secs(60), &mut normalization);
    report(6, "engine/oracle agreement", secs(120), &mut agreement);
    report(7, "readonly subtyping facts", secs(5), &mut readonly_facts);
    let b = batch(&corpus);
    report(8, "progress and preservation", secs(300), &mut || monitors(&b));
    report(9, "immutability safety", secs(300), &mut || immutability(&b, &plain));
    report(10, "erasure", secs(300), &mut || erasure(&b));
    report(11, "mutants are detected", secs(300), &mut || mutants(&b));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
