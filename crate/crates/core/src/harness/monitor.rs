use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::diag::Diagnostic;
use crate::machine::{Machine, MachineConfig, Outcome, StepResult, Trace};
use crate::syntax::{Location, Term, Type};
use crate::types::{check_store, typecheck, typecheck_against, StoreTyping, TypeContext, Typed};

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorStep {
    pub index: usize,
    pub rule: &'static str,
    /// The stepped term type-checked at the program's type.
    pub preserved: bool,
    pub store_typed: bool,
    /// Store-typing entries added for cells allocated by this step.
    pub extension: Vec<(Location, Type)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Preservation,
    StoreTyping,
    Progress,
    /// No derivation node to type a freshly allocated cell.
    Allocation,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Preservation => "preservation",
            ViolationKind::StoreTyping => "store-typing",
            ViolationKind::Progress => "progress",
            ViolationKind::Allocation => "allocation",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorViolation {
    /// Number of steps taken before the offending configuration arose.
    pub step: usize,
    pub kind: ViolationKind,
    pub detail: String,
    pub config: MachineConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorReport {
    pub ty: Type,
    pub steps: Vec<MonitorStep>,
    /// How the run ended; `None` when monitoring stopped at a violation on
    /// a configuration that could still step.
    pub outcome: Option<Outcome>,
    /// Every configuration reached.
    pub trace: Trace,
    pub store_typing: StoreTyping,
    /// The first violation; monitoring stops there.
    pub violation: Option<MonitorViolation>,
}

impl MonitorReport {
    pub fn is_clean(&self) -> bool {
        self.violation.is_none()
    }

    pub fn violations(&self) -> usize {
        usize::from(self.violation.is_some())
    }
}

/// Runs a closed program, re-checking its type and the store after every
/// step and insisting that every non-value configuration steps.
pub fn monitor_run(program: &Term, fuel: u64) -> Result<MonitorReport, Vec<Diagnostic>> {
    monitor_with(&Machine::new(), program, None, fuel)
}

/// As [`monitor_run`], with a chosen machine and optionally a type to hold
/// the program to instead of its synthesized type.
pub fn monitor_with(
    machine: &Machine,
    program: &Term,
    expected: Option<&Type>,
    fuel: u64,
) -> Result<MonitorReport, Vec<Diagnostic>> {
    let empty = TypeContext::new();
    let tt = match expected {
        Some(ty) => typecheck_against(&empty, &StoreTyping::new(), program, ty)?,
        None => typecheck(&empty, &StoreTyping::new(), program)?,
    };
    let ty = tt.judged;
    let mut derivation = tt.root;
    let mut cfg = MachineConfig::new(program.clone());

    let mut report = MonitorReport {
        ty,
        steps: Vec::new(),
        outcome: None,
        trace: Trace::new(cfg.clone()),
        store_typing: StoreTyping::new(),
        violation: None,
    };

    loop {
        if cfg.term.is_value() {
            let trace = report.trace.clone();
            report.outcome = Some(Outcome::Finished { value: cfg.term, store: cfg.store, trace });
            return Ok(report);
        }
        if report.trace.len() as u64 >= fuel {
            report.outcome = Some(Outcome::OutOfFuel { trace: report.trace.clone() });
            return Ok(report);
        }
        match machine.step(&cfg) {
            StepResult::AlreadyValue => unreachable!("values handled above"),
            StepResult::Stuck { cause, .. } => {
                report.violation = Some(MonitorViolation {
                    step: report.trace.len(),
                    kind: ViolationKind::Progress,
                    detail: format!("well-typed configuration is stuck: {cause}"),
                    config: cfg,
                });
                report.outcome = Some(Outcome::Stuck { cause, trace: report.trace.clone() });
                return Ok(report);
            }
            StepResult::Stepped { config, rule, focus, allocated } => {
                let index = report.trace.len();
                report.trace.push(config.clone(), rule);
                let stop = |report: &mut MonitorReport, kind, detail: String| {
                    report.violation = Some(MonitorViolation {
                        step: index + 1,
                        kind,
                        detail,
                        config: config.clone(),
                    });
                };

                let extension = match allocation_types(&derivation, &focus, &allocated) {
                    Ok(ext) => ext,
                    Err(detail) => {
                        stop(&mut report, ViolationKind::Allocation, detail);
                        return Ok(report);
                    }
                };
                for (l, t) in &extension {
                    if !report.store_typing.extend(*l, t.clone()) {
                        stop(&mut report, ViolationKind::Allocation, format!("location {l} allocated twice"));
                        return Ok(report);
                    }
                }
                let retyped = typecheck_against(&empty, &report.store_typing, &config.term, &report.ty);
                let store_ok = check_store(&empty, &report.store_typing, &config.store);
                report.steps.push(MonitorStep {
                    index,
                    rule,
                    preserved: retyped.is_ok(),
                    store_typed: store_ok.is_ok(),
                    extension,
                });
                match (retyped, store_ok) {
                    (Err(ds), _) => {
                        let detail = format!("after `{rule}`: {}", first_message(&ds));
                        stop(&mut report, ViolationKind::Preservation, detail);
                        return Ok(report);
                    }
                    (Ok(_), Err(ds)) => {
                        let detail = format!("after `{rule}`: {}", first_message(&ds));
                        stop(&mut report, ViolationKind::StoreTyping, detail);
                        return Ok(report);
                    }
                    (Ok(tt), Ok(())) => derivation = tt.root,
                }
                cfg = config;
            }
        }
    }
}

fn first_message(ds: &[Diagnostic]) -> String {
    ds.first().map_or_else(|| "unknown error".to_string(), |d| d.message.clone())
}

/// Cell types for an allocation: the field types the derivation gave the
/// record literal that was contracted.
fn allocation_types(
    derivation: &Typed,
    focus: &[usize],
    allocated: &[Location],
) -> Result<Vec<(Location, Type)>, String> {
    if allocated.is_empty() {
        return Ok(Vec::new());
    }
    let fields = derivation
        .at_path(focus)
        .and_then(Typed::field_types)
        .ok_or_else(|| "allocation outside a typed record literal".to_string())?;
    if fields.len() != allocated.len() {
        return Err(format!(
            "record literal typed with {} fields but {} cells allocated",
            fields.len(),
            allocated.len()
        ));
    }
    Ok(allocated.iter().copied().zip(fields.into_iter().map(|(_, t)| t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Mutation;
    use crate::parser::{parse_term, parse_type};

    fn report(src: &str) -> MonitorReport {
        monitor_run(&parse_term(src).unwrap(), 500).unwrap()
    }

    #[test]
    fn clean_runs() {
        let r = report("{x = 10}.x := 5");
        assert!(r.is_clean());
        assert_eq!(r.steps.len(), 2);
        assert_eq!(r.steps[0].extension, [(Location(1), Type::Nat)]);
        assert!(report("10").steps.is_empty());
        let nested = report("(fun(z: readonly {first: {x: Nat}}) z.first) (seal {first = {x = 1}})");
        assert!(nested.is_clean(), "{:?}", nested.violation);
        assert!(nested.outcome.unwrap().is_finished());
    }

    #[test]
    fn cell_types_come_from_the_derivation() {
        let t = parse_term("(fun(y: Top) {g = 5}) 7").unwrap();
        let r = monitor_with(&Machine::new(), &t, Some(&parse_type("{g: Top}").unwrap()), 100).unwrap();
        assert!(r.is_clean(), "{:?}", r.violation);
        assert_eq!(r.store_typing.get(Location(1)), Some(&Type::Top));
    }

    #[test]
    fn misdirected_write_is_caught() {
        let t = parse_term("{a = 1, b = fun(x: Nat) x}.b := fun(y: Nat) y").unwrap();
        let r = monitor_with(&Machine::mutated(Mutation::MisdirectedWrite), &t, None, 100).unwrap();
        let v = r.violation.unwrap();
        // The old value returned is the wrong cell's, so the term itself stops checking.
        assert_eq!(v.kind, ViolationKind::Preservation);
        assert!(!r.steps[1].store_typed);
        assert_eq!(v.step, 2);
    }

    #[test]
    fn ill_typed_programs_are_refused() {
        assert!(monitor_run(&parse_term("(seal {x = 10}).x := 5").unwrap(), 10).is_err());
    }
}
