//! Generator-driven campaigns over the type-level and run-time properties.
//!
//! Item `i` of a campaign draws from its own ChaCha stream (`seed`, stream
//! `i`), so results do not depend on how work is split across threads.

use std::collections::BTreeMap;

use fm_core::harness::{diff_with, erased_with, gen_program, gen_type, monitor_with, shrink};
use fm_core::types::{
    equivalent, is_normal, nf, oracle_min_depth, subtype, subtype_oracle, typecheck_against,
    StoreTyping, TypeContext,
};
use fm_core::{Machine, Mutation, Outcome, Term, Type};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{CorpusEntry, Expectation};

/// Property names, in report order.
pub const PROPERTIES: &[&str] = &[
    "nf-idempotent",
    "nf-normal",
    "nf-equivalent",
    "subtype-complete",
    "subtype-sound",
    "readonly-laws",
    "generator-typed",
    "monitor",
    "never-stuck",
    "diff",
    "erase",
    "corpus",
];

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub seed: u64,
    pub count: usize,
    /// Depth bound for generated program types.
    pub depth: u32,
    /// Evaluation fuel per run.
    pub fuel: u64,
    pub oracle_depth: u32,
    pub mutation: Option<Mutation>,
    /// Which groups of properties to check.
    pub types: bool,
    pub programs: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seed: 0,
            count: 1000,
            depth: 3,
            fuel: 500,
            oracle_depth: 8,
            mutation: None,
            types: true,
            programs: true,
        }
    }
}

impl CampaignConfig {
    fn machine(&self) -> Machine {
        self.mutation.map_or_else(Machine::new, Machine::mutated)
    }

    /// Depth up to which an engine "yes" must have an oracle proof.
    fn complete_depth(&self) -> u32 {
        self.oracle_depth + 2
    }

    /// Depth up to which an oracle proof must be matched by the engine.
    fn sound_depth(&self) -> u32 {
        self.oracle_depth.saturating_sub(3).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    /// Campaign item, or the corpus entry's name.
    pub item: String,
    pub property: &'static str,
    pub detail: String,
    /// The program or types involved.
    pub subject: String,
    /// A smaller program failing the same way, when one was found.
    pub shrunk: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checked: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Outcomes {
    pub finished: usize,
    pub stuck: usize,
    pub out_of_fuel: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CampaignSummary {
    pub seed: u64,
    pub count: usize,
    pub properties: BTreeMap<&'static str, Tally>,
    pub outcomes: Outcomes,
    /// Steps over all original runs.
    pub steps: usize,
    /// Extra seal-discharging steps taken by crested runs.
    pub seal_drops: usize,
    pub failures: Vec<Failure>,
}

impl CampaignSummary {
    pub fn violations(&self) -> usize {
        self.properties.values().map(|t| t.failed).sum()
    }

    pub fn failed(&self, property: &str) -> usize {
        self.properties.get(property).map_or(0, |t| t.failed)
    }
}

/// Findings for one campaign item.
#[derive(Default)]
struct ItemReport {
    checks: Vec<(&'static str, Result<(), Found>)>,
    outcome: Option<&'static str>,
    steps: usize,
    seal_drops: usize,
}

struct Found {
    detail: String,
    subject: String,
    shrunk: Option<String>,
}

impl ItemReport {
    fn check(&mut self, property: &'static str, ok: bool, detail: impl FnOnce() -> (String, String)) {
        let found = || {
            let (detail, subject) = detail();
            Found { detail, subject, shrunk: None }
        };
        self.checks.push((property, if ok { Ok(()) } else { Err(found()) }));
    }

    /// Records a failing program check, shrinking the program first.
    fn program_check(&mut self, property: &'static str, p: &Term, detail: Option<String>, fails: impl FnMut(&Term) -> bool) {
        let Some(detail) = detail else {
            self.checks.push((property, Ok(())));
            return;
        };
        let small = shrink(p, fails);
        let shrunk = (small != *p).then(|| small.to_string());
        self.checks.push((property, Err(Found { detail, subject: p.to_string(), shrunk })));
    }
}

pub fn run_campaign(cfg: &CampaignConfig, corpus: &[CorpusEntry]) -> CampaignSummary {
    let items: Vec<ItemReport> = (0..cfg.count).into_par_iter().map(|i| run_item(cfg, i as u64)).collect();
    let corpus_items: Vec<ItemReport> = corpus.par_iter().map(|e| run_entry(cfg, e)).collect();

    let mut summary = CampaignSummary { seed: cfg.seed, count: cfg.count, ..Default::default() };
    for p in PROPERTIES {
        summary.properties.insert(p, Tally::default());
    }
    let labelled = items
        .into_iter()
        .enumerate()
        .map(|(i, r)| (i.to_string(), r))
        .chain(corpus.iter().map(|e| e.name.clone()).zip(corpus_items));
    for (item, r) in labelled {
        for (property, result) in r.checks {
            let tally = summary.properties.entry(property).or_default();
            tally.checked += 1;
            if let Err(Found { detail, subject, shrunk }) = result {
                tally.failed += 1;
                summary.failures.push(Failure { item: item.clone(), property, detail, subject, shrunk });
            }
        }
        match r.outcome {
            Some("finished") => summary.outcomes.finished += 1,
            Some("stuck") => summary.outcomes.stuck += 1,
            Some("out-of-fuel") => summary.outcomes.out_of_fuel += 1,
            _ => {}
        }
        summary.steps += r.steps;
        summary.seal_drops += r.seal_drops;
    }
    summary
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_item(cfg: &CampaignConfig, index: u64) -> ItemReport {
    let mut rng = rng_for(cfg.seed, index);
    let mut r = ItemReport::default();
    if cfg.types {
        type_checks(cfg, &mut rng, &mut r);
    }
    if cfg.programs {
        let (ty, p) = gen_program(cfg.depth, 40, &mut rng);
        let typed = typecheck_against(&TypeContext::new(), &StoreTyping::new(), &p, &ty).is_ok();
        r.check("generator-typed", typed, || ("does not check at its target".into(), format!("{p} : {ty}")));
        if typed {
            program_checks(cfg, &p, Some(&ty), &mut r);
        }
    }
    r
}

fn run_entry(cfg: &CampaignConfig, e: &CorpusEntry) -> ItemReport {
    let mut r = ItemReport::default();
    let verified = e.verify(cfg.fuel.max(10_000));
    r.check("corpus", verified.is_ok(), || (verified.clone().unwrap_err(), e.path.display().to_string()));
    if e.expected == Expectation::Accept && cfg.programs {
        if let Ok(program) = e.parse() {
            program_checks(cfg, &program.main, None, &mut r);
        }
    }
    r
}

fn type_checks(cfg: &CampaignConfig, rng: &mut ChaCha8Rng, r: &mut ItemReport) {
    let e = TypeContext::new();
    let t = gen_type(1 + rng.next_u32() % 5, &e, rng);
    let n = nf(&t);
    let pair = || (format!("{t} vs {n}"), t.to_string());
    r.check("nf-idempotent", nf(&n) == n, pair);
    r.check("nf-normal", is_normal(&n), || ("not in normal form".into(), n.to_string()));
    if t.depth() <= 3 {
        let both = subtype_oracle(&e, &t, &n, cfg.oracle_depth).is_proven()
            && subtype_oracle(&e, &n, &t, cfg.oracle_depth).is_proven();
        r.check("nf-equivalent", both, || ("no oracle proof of T ≡ nf(T)".into(), t.to_string()));
    }

    let s = gen_type(3, &e, rng);
    let u = match rng.next_u32() % 4 {
        0 => gen_type(3, &e, rng),
        1 => Type::readonly(s.clone()),
        2 => Type::inter(s.clone(), gen_type(2, &e, rng)),
        _ => nf(&Type::readonly(s.clone())),
    };
    let (s, u) = if rng.next_u32() % 2 == 0 { (s, u) } else { (u, s) };
    let subject = || format!("{s} <: {u}");
    match subtype(&e, &s, &u) {
        Err(_) => r.check("subtype-complete", false, || ("engine out of fuel".into(), subject())),
        Ok(engine) => {
            if engine {
                let found = oracle_min_depth(&e, &s, &u, cfg.complete_depth()).is_some();
                r.check("subtype-complete", found, || ("engine yes, oracle finds no proof".into(), subject()));
            }
            if subtype_oracle(&e, &s, &u, cfg.sound_depth()).is_proven() {
                r.check("subtype-sound", engine, || ("oracle proof, engine no".into(), subject()));
            }
        }
    }

    let ro = Type::readonly(t.clone());
    let f = Type::arrow(s.clone(), t.clone());
    let laws = subtype(&e, &t, &ro) == Ok(true)
        && equivalent(&e, &Type::readonly(ro.clone()), &ro) == Ok(true)
        && equivalent(&e, &Type::readonly(f.clone()), &f) == Ok(true);
    r.check("readonly-laws", laws, || ("readonly law fails".into(), format!("{t}; {f}")));
}

fn program_checks(cfg: &CampaignConfig, p: &Term, ty: Option<&Type>, r: &mut ItemReport) {
    let machine = cfg.machine();
    let fuel = cfg.fuel;
    let monitor_fails = |q: &Term| match monitor_with(&machine, q, ty, fuel) {
        Err(_) => None,
        Ok(m) => m.violation.map(|v| format!("{} at step {}: {}", v.kind, v.step, v.detail)),
    };
    match monitor_with(&machine, p, ty, fuel) {
        Err(ds) => r.check("monitor", false, || (ds[0].message.clone(), p.to_string())),
        Ok(m) => {
            let outcome = m.outcome.as_ref().map(Outcome::kind);
            let detail = m.violation.as_ref().map(|v| format!("{} at step {}: {}", v.kind, v.step, v.detail));
            r.program_check("monitor", p, detail, |q| monitor_fails(q).is_some());
            let stuck = (outcome == Some("stuck")).then(|| "stuck".to_string());
            r.program_check("never-stuck", p, stuck, |q| {
                monitor_with(&machine, q, ty, fuel)
                    .is_ok_and(|m| m.outcome.as_ref().is_some_and(Outcome::is_stuck))
            });
            r.outcome = outcome;
            r.steps = m.trace.len();
        }
    }
    let diff_fails = |q: &Term| diff_with(&machine, q, ty, fuel).is_ok_and(|d| !d.is_equivalent());
    match diff_with(&machine, p, ty, fuel) {
        Err(ds) => r.check("diff", false, || (ds[0].message.clone(), p.to_string())),
        Ok(d) => {
            r.seal_drops = d.seal_drops.len();
            let detail = (!d.is_equivalent()).then(|| verdict(&d.verdict));
            r.program_check("diff", p, detail, diff_fails);
            // Erase both the program's own seals and the crested copy's.
            for sealed in [p, &d.transformed] {
                match erased_with(&machine, sealed, ty, fuel) {
                    Err(ds) => r.check("erase", false, || (ds[0].message.clone(), sealed.to_string())),
                    Ok(x) => {
                        let detail = (!x.is_equivalent()).then(|| verdict(&x.verdict));
                        r.program_check("erase", sealed, detail, |q| {
                            erased_with(&machine, q, ty, fuel).is_ok_and(|x| !x.is_equivalent())
                        });
                    }
                }
            }
        }
    }
}

fn verdict(v: &fm_core::harness::Verdict) -> String {
    match v {
        fm_core::harness::Verdict::Equivalent => "equivalent".into(),
        fm_core::harness::Verdict::Violation(v) => v.to_string(),
    }
}
