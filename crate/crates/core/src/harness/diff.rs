//! Paired runs of a program and a copy with more (or fewer) seals.
//!
//! `diff_run` drives the original program and, after each of its steps,
//! advances the crested copy until the two are related by seal insertion
//! again; every extra step on the crested side must discharge a seal.
//! `erased_run` does the converse: it drives a sealed program and demands
//! that its seal-free copy keeps up.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::crest::crest;
use super::monitor::monitor_with;
use crate::diag::Diagnostic;
use crate::machine::{Machine, MachineConfig, Outcome, StepResult, Trace};
use crate::seals::{erase_seals, seal_count, seal_leq, store_leq};
use crate::syntax::{Term, Type};
use crate::types::{typecheck, typecheck_against, StoreTyping, TypeContext, TypedTerm};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Which relation failed.
    pub check: &'static str,
    /// Steps taken by the driving run when it was noticed.
    pub step: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at step {}: {}", self.check, self.step, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Violation(Violation),
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
}

/// A step of the more-sealed run that only removed seals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SealDrop {
    /// Index of the step in the more-sealed run.
    pub step: usize,
    pub rule: &'static str,
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffReport {
    pub ty: Type,
    /// The less-sealed program and how it ran.
    pub original: Term,
    pub original_outcome: Outcome,
    /// The more-sealed program and how it ran.
    pub transformed: Term,
    pub transformed_outcome: Outcome,
    /// Steps where both sides made corresponding progress.
    pub matched_steps: usize,
    pub seal_drops: Vec<SealDrop>,
    /// `v_s ≤ v_t`, when both finished.
    pub value_leq: Option<bool>,
    /// `σ_s ≤ σ_t`, when both finished.
    pub store_leq: Option<bool>,
    /// The seal-free result re-checks at the program's type (erasure runs only).
    pub typed_erasure: Option<bool>,
    pub verdict: Verdict,
}

impl DiffReport {
    pub fn is_equivalent(&self) -> bool {
        self.verdict.is_equivalent()
    }
}

/// Type-checks the program, crests it, and checks the crested run against
/// the original one.
pub fn diff_run(program: &Term, fuel: u64) -> Result<DiffReport, Vec<Diagnostic>> {
    diff_with(&Machine::new(), program, None, fuel)
}

pub fn diff_with(
    machine: &Machine,
    program: &Term,
    expected: Option<&Type>,
    fuel: u64,
) -> Result<DiffReport, Vec<Diagnostic>> {
    let tt = judge(program, expected)?;
    let crested = crest(&tt);
    let mut report = simulate_original(machine, program, &crested, fuel);
    report.ty = tt.judged.clone();
    if report.verdict.is_equivalent() {
        if let Err(ds) = judge(&crested, Some(&tt.judged)) {
            report.verdict = Verdict::Violation(Violation {
                check: "crest-typing",
                step: 0,
                detail: format!("crested program does not check at `{}`: {}", tt.judged, ds[0].message),
            });
        }
    }
    Ok(report)
}

/// Runs the program and its seal-free copy, which must keep up with it.
pub fn erased_run(program: &Term, fuel: u64) -> Result<DiffReport, Vec<Diagnostic>> {
    erased_with(&Machine::new(), program, None, fuel)
}

pub fn erased_with(
    machine: &Machine,
    program: &Term,
    expected: Option<&Type>,
    fuel: u64,
) -> Result<DiffReport, Vec<Diagnostic>> {
    let tt = judge(program, expected)?;
    let erased = erase_seals(program);
    let mut report = simulate_sealed(machine, &erased, program, fuel);
    report.ty = tt.judged.clone();
    if report.verdict.is_equivalent() && report.transformed_outcome.is_finished() {
        // The erased program runs at the same type, ending in a value of that type.
        let typed = match monitor_with(machine, &erased, Some(&tt.judged), fuel) {
            Err(ds) => Err(format!("erased program does not check: {}", ds[0].message)),
            Ok(m) => match (&m.violation, &m.outcome) {
                (Some(v), _) => Err(format!("{} violation: {}", v.kind, v.detail)),
                (None, Some(Outcome::Finished { .. })) => Ok(()),
                (None, _) => Err(format!("erased program did not finish within {fuel} steps")),
            },
        };
        report.typed_erasure = Some(typed.is_ok());
        if let Err(detail) = typed {
            report.verdict = Verdict::Violation(Violation { check: "typed-erasure", step: 0, detail });
        }
    }
    Ok(report)
}

fn judge(program: &Term, expected: Option<&Type>) -> Result<TypedTerm, Vec<Diagnostic>> {
    let empty = TypeContext::new();
    match expected {
        Some(ty) => typecheck_against(&empty, &StoreTyping::new(), program, ty),
        None => typecheck(&empty, &StoreTyping::new(), program),
    }
}

/// One side of a paired run.
struct Side {
    cfg: MachineConfig,
    trace: Trace,
}

impl Side {
    fn new(term: &Term) -> Self {
        let cfg = MachineConfig::new(term.clone());
        Side { trace: Trace::new(cfg.clone()), cfg }
    }

    fn advance(&mut self, config: MachineConfig, rule: &'static str) {
        self.trace.push(config.clone(), rule);
        self.cfg = config;
    }

    fn related_to(&self, other: &MachineConfig) -> bool {
        seal_leq(&self.cfg.term, &other.term) && store_leq(&self.cfg.store, &other.store)
    }
}

struct Pair {
    s: Side,
    t: Side,
    original: Term,
    transformed: Term,
    matched: usize,
    drops: Vec<SealDrop>,
}

impl Pair {
    fn new(s: &Term, t: &Term) -> Self {
        Pair {
            s: Side::new(s),
            t: Side::new(t),
            original: s.clone(),
            transformed: t.clone(),
            matched: 0,
            drops: Vec::new(),
        }
    }

    fn finish(self, s_out: Outcome, t_out: Outcome, verdict: Verdict) -> DiffReport {
        let (value_leq, store_leq_) = match (&s_out, &t_out) {
            (Outcome::Finished { value: vs, store: ss, .. }, Outcome::Finished { value: vt, store: st, .. }) => {
                (Some(seal_leq(vs, vt)), Some(store_leq(ss, st)))
            }
            _ => (None, None),
        };
        let verdict = match verdict {
            Verdict::Equivalent if value_leq == Some(false) || store_leq_ == Some(false) => {
                Verdict::Violation(Violation {
                    check: "final-relation",
                    step: s_out.trace().len(),
                    detail: format!(
                        "results not related by seal insertion: {} vs {}",
                        s_out.final_config(),
                        t_out.final_config()
                    ),
                })
            }
            v => v,
        };
        DiffReport {
            ty: Type::Top,
            original: self.original,
            original_outcome: s_out,
            transformed: self.transformed,
            transformed_outcome: t_out,
            matched_steps: self.matched,
            seal_drops: self.drops,
            value_leq,
            store_leq: store_leq_,
            typed_erasure: None,
            verdict,
        }
    }

    fn violation(self, check: &'static str, step: usize, detail: String, s_out: Outcome, t_out: Outcome) -> DiffReport {
        self.finish(s_out, t_out, Verdict::Violation(Violation { check, step, detail }))
    }

    /// Records a step of `t` that only removed seals, if that is what it was.
    fn try_drop(&mut self, next: &MachineConfig, rule: &'static str) -> bool {
        let before = seal_count(&self.t.cfg.term);
        let after = seal_count(&next.term);
        if after < before && self.s.related_to(next) {
            self.drops.push(SealDrop { step: self.t.trace.len(), rule, before, after });
            true
        } else {
            false
        }
    }
}

fn finished(side: &Side) -> Outcome {
    Outcome::Finished { value: side.cfg.term.clone(), store: side.cfg.store.clone(), trace: side.trace.clone() }
}

fn partial(side: &Side) -> Outcome {
    Outcome::OutOfFuel { trace: side.trace.clone() }
}

/// Drives `s`; `t` (with `s ≤ t`) follows.
fn simulate_original(machine: &Machine, s: &Term, t: &Term, fuel: u64) -> DiffReport {
    let mut p = Pair::new(s, t);
    // Seal discharges are bounded by the seals present, but substitution can
    // copy seals, so allow the sealed side a generous multiple.
    let t_budget = fuel.saturating_mul(8).saturating_add(seal_count(t) as u64 + 64);
    loop {
        let step_no = p.s.trace.len();
        if p.s.cfg.term.is_value() {
            // Only seal-removing steps remain for t.
            loop {
                if p.t.cfg.term.is_value() {
                    let (so, to) = (finished(&p.s), finished(&p.t));
                    return p.finish(so, to, Verdict::Equivalent);
                }
                if p.t.trace.len() as u64 >= t_budget {
                    let (so, to) = (finished(&p.s), partial(&p.t));
                    let detail = "crested run did not reach a value".into();
                    return p.violation("value-descent", step_no, detail, so, to);
                }
                match machine.step(&p.t.cfg) {
                    StepResult::Stepped { config, rule, .. } => {
                        if !p.try_drop(&config, rule) {
                            let detail = format!("`{rule}` beside value {} gave {}", p.s.cfg.term, config.term);
                            let (so, to) = (finished(&p.s), partial(&p.t));
                            return p.violation("value-descent", step_no, detail, so, to);
                        }
                        p.t.advance(config, rule);
                    }
                    StepResult::Stuck { cause, .. } => {
                        let (so, to) = (finished(&p.s), Outcome::Stuck { cause: cause.clone(), trace: p.t.trace.clone() });
                        return p.violation("crest-stuck", step_no, format!("crested run stuck: {cause}"), so, to);
                    }
                    StepResult::AlreadyValue => unreachable!(),
                }
            }
        }
        if step_no as u64 >= fuel {
            let (so, to) = (partial(&p.s), partial(&p.t));
            return p.finish(so, to, Verdict::Equivalent);
        }
        let (s_next, s_rule) = match machine.step(&p.s.cfg) {
            StepResult::Stepped { config, rule, .. } => (config, rule),
            StepResult::Stuck { cause, .. } => {
                let so = Outcome::Stuck { cause: cause.clone(), trace: p.s.trace.clone() };
                let to = partial(&p.t);
                return p.violation("original-stuck", step_no, format!("original run stuck: {cause}"), so, to);
            }
            StepResult::AlreadyValue => unreachable!(),
        };
        // Advance t until it matches s's step.
        loop {
            if p.t.trace.len() as u64 >= t_budget {
                let (so, to) = (partial(&p.s), partial(&p.t));
                let detail = "crested run fell behind".into();
                return p.violation("paired-simulation", step_no, detail, so, to);
            }
            match machine.step(&p.t.cfg) {
                StepResult::Stepped { config, rule, .. } => {
                    let next_s = Side { cfg: s_next.clone(), trace: Trace::new(s_next.clone()) };
                    if next_s.related_to(&config) {
                        p.t.advance(config, rule);
                        p.matched += 1;
                        break;
                    }
                    if p.try_drop(&config, rule) {
                        p.t.advance(config, rule);
                        continue;
                    }
                    let detail = format!(
                        "original took `{s_rule}` to {}, crested took `{rule}` to {}",
                        s_next.term, config.term
                    );
                    let (so, to) = (partial(&p.s), partial(&p.t));
                    return p.violation("paired-simulation", step_no, detail, so, to);
                }
                StepResult::Stuck { cause, .. } => {
                    let blame = if cause == crate::machine::StuckCause::WriteThroughSeal {
                        "the crested side was blocked writing through a seal"
                    } else {
                        "stuck for a reason other than a sealed write"
                    };
                    let detail = format!("original took `{s_rule}`; crested stuck ({cause}): {blame}");
                    let so = partial(&p.s);
                    let to = Outcome::Stuck { cause, trace: p.t.trace.clone() };
                    return p.violation("crest-stuck", step_no, detail, so, to);
                }
                StepResult::AlreadyValue => {
                    let detail = format!("crested side is a value but original {} is not", p.s.cfg.term);
                    let (so, to) = (partial(&p.s), finished(&p.t));
                    return p.violation("seal-value", step_no, detail, so, to);
                }
            }
        }
        p.s.advance(s_next, s_rule);
    }
}

/// Drives `t`; `s` (with `s ≤ t`) follows.
fn simulate_sealed(machine: &Machine, s: &Term, t: &Term, fuel: u64) -> DiffReport {
    let mut p = Pair::new(s, t);
    loop {
        let step_no = p.t.trace.len();
        if p.t.cfg.term.is_value() {
            if !p.s.cfg.term.is_value() {
                let detail = format!("sealed side is a value but erased {} is not", p.s.cfg.term);
                let (so, to) = (partial(&p.s), finished(&p.t));
                return p.violation("seal-value", step_no, detail, so, to);
            }
            let (so, to) = (finished(&p.s), finished(&p.t));
            return p.finish(so, to, Verdict::Equivalent);
        }
        if step_no as u64 >= fuel {
            let (so, to) = (partial(&p.s), partial(&p.t));
            return p.finish(so, to, Verdict::Equivalent);
        }
        let (t_next, t_rule) = match machine.step(&p.t.cfg) {
            StepResult::Stepped { config, rule, .. } => (config, rule),
            StepResult::Stuck { cause, .. } => {
                // Nothing is claimed about programs whose sealed form gets stuck.
                let (so, to) = (partial(&p.s), Outcome::Stuck { cause, trace: p.t.trace.clone() });
                return p.finish(so, to, Verdict::Equivalent);
            }
            StepResult::AlreadyValue => unreachable!(),
        };
        if p.try_drop(&t_next, t_rule) {
            p.t.advance(t_next, t_rule);
            continue;
        }
        match machine.step(&p.s.cfg) {
            StepResult::Stepped { config, rule, .. } => {
                let next_s = Side { cfg: config.clone(), trace: Trace::new(config.clone()) };
                if !next_s.related_to(&t_next) {
                    let detail = format!(
                        "sealed took `{t_rule}` to {}, erased took `{rule}` to {}",
                        t_next.term, config.term
                    );
                    let (so, to) = (partial(&p.s), partial(&p.t));
                    return p.violation("step-exists", step_no, detail, so, to);
                }
                p.s.advance(config, rule);
                p.t.advance(t_next, t_rule);
                p.matched += 1;
            }
            StepResult::Stuck { cause, .. } => {
                let detail = format!("sealed took `{t_rule}`, erased stuck: {cause}");
                let so = Outcome::Stuck { cause, trace: p.s.trace.clone() };
                let to = partial(&p.t);
                return p.violation("erased-stuck", step_no, detail, so, to);
            }
            StepResult::AlreadyValue => {
                let detail = format!("sealed took `{t_rule}` but erased side is already a value");
                let (so, to) = (finished(&p.s), partial(&p.t));
                return p.violation("step-exists", step_no, detail, so, to);
            }
        }
    }
}
