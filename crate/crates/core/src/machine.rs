//! Small-step evaluation of `⟨term, store⟩` configurations.
//!
//! Call-by-value, leftmost-innermost, by explicit congruence: functions
//! before arguments, record fields left to right, write targets before the
//! written value, seal bodies to a value. A record literal whose fields are
//! all values allocates one cell per field in field order.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::pretty::pretty_store;
use crate::subst::{substitute_term, substitute_type_in_term};
use crate::syntax::{Location, Name, Store, Term, TermKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    pub term: Term,
    pub store: Store,
}

impl MachineConfig {
    pub fn new(term: Term) -> Self {
        MachineConfig { term, store: Store::new() }
    }

    pub fn with_store(term: Term, store: Store) -> Self {
        MachineConfig { term, store }
    }

    pub fn next_location(&self) -> Location {
        self.store.next_location()
    }
}

impl fmt::Display for MachineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}⟩", self.term, pretty_store(&self.store))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StuckCause {
    /// A field write whose target is a sealed record.
    WriteThroughSeal,
    FieldMissing(Name),
    NotARecord,
    NotAFunction,
    FreeVariable(Name),
    Other(String),
}

impl StuckCause {
    /// Stable kebab-case name, for reports.
    pub fn code(&self) -> &'static str {
        match self {
            StuckCause::WriteThroughSeal => "write-through-seal",
            StuckCause::FieldMissing(_) => "field-missing",
            StuckCause::NotARecord => "not-a-record",
            StuckCause::NotAFunction => "not-a-function",
            StuckCause::FreeVariable(_) => "free-variable",
            StuckCause::Other(_) => "other",
        }
    }
}

impl fmt::Display for StuckCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckCause::WriteThroughSeal => f.write_str("write through seal"),
            StuckCause::FieldMissing(l) => write!(f, "field `{l}` missing"),
            StuckCause::NotARecord => f.write_str("not a record"),
            StuckCause::NotAFunction => f.write_str("not a function"),
            StuckCause::FreeVariable(x) => write!(f, "free variable `{x}`"),
            StuckCause::Other(msg) => f.write_str(msg),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Stepped {
        config: MachineConfig,
        rule: &'static str,
        /// Path to the contracted redex, as indices into [`Term::children`].
        focus: Vec<usize>,
        /// Locations allocated by this step, in order.
        allocated: Vec<Location>,
    },
    AlreadyValue,
    Stuck {
        cause: StuckCause,
        focus: Vec<usize>,
    },
}

/// Deliberate defects, used to check that the harness notices broken rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Reading through a seal returns the field unsealed.
    UnsealedSealedRead,
    /// Writes through a seal go ahead as if the record were unsealed.
    WriteThroughSeal,
    /// A write lands in the record's first field rather than the named one.
    MisdirectedWrite,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Machine {
    mutation: Option<Mutation>,
}

impl Machine {
    pub fn new() -> Self {
        Machine::default()
    }

    pub fn mutated(mutation: Mutation) -> Self {
        Machine { mutation: Some(mutation) }
    }

    pub fn mutation(&self) -> Option<Mutation> {
        self.mutation
    }

    pub fn step(&self, c: &MachineConfig) -> StepResult {
        if c.term.is_value() {
            return StepResult::AlreadyValue;
        }
        let mut store = c.store.clone();
        let mut focus = Vec::new();
        let mut allocated = Vec::new();
        match self.reduce(&c.term, &mut store, &mut focus, &mut allocated) {
            Ok((term, rule)) => StepResult::Stepped {
                config: MachineConfig { term, store },
                rule,
                focus,
                allocated,
            },
            Err(cause) => StepResult::Stuck { cause, focus },
        }
    }

    /// Steps the non-value `t`, recording the path to the redex.
    fn reduce(
        &self,
        t: &Term,
        store: &mut Store,
        focus: &mut Vec<usize>,
        allocated: &mut Vec<Location>,
    ) -> Result<(Term, &'static str), StuckCause> {
        let span = t.span;
        let rebuild = |kind: TermKind| Term::new(kind, span);
        // Steps child `i` in place, returning the rebuilt parent.
        macro_rules! congruence {
            ($i:expr, $child:expr, $wrap:expr) => {{
                focus.push($i);
                let (c, rule) = self.reduce($child, store, focus, allocated)?;
                return Ok((rebuild($wrap(c)), rule));
            }};
        }
        match &t.kind {
            TermKind::Var(x) => Err(StuckCause::FreeVariable(x.clone())),
            TermKind::Nat(_) | TermKind::Abs(..) | TermKind::TyAbs(..) | TermKind::RecordVal(_) => {
                Err(StuckCause::Other("value in redex position".into()))
            }
            TermKind::App(f, a) => {
                if !f.is_value() {
                    congruence!(0, f, |c| TermKind::App(Box::new(c), a.clone()));
                }
                if !a.is_value() {
                    congruence!(1, a, |c| TermKind::App(f.clone(), Box::new(c)));
                }
                match &f.kind {
                    TermKind::Abs(x, _, body) => Ok((substitute_term(body, x, a), "beta")),
                    _ => Err(StuckCause::NotAFunction),
                }
            }
            TermKind::TyApp(f, ty) => {
                if !f.is_value() {
                    congruence!(0, f, |c| TermKind::TyApp(Box::new(c), ty.clone()));
                }
                match &f.kind {
                    TermKind::TyAbs(x, _, body) => Ok((substitute_type_in_term(body, x, ty), "type-beta")),
                    _ => Err(StuckCause::NotAFunction),
                }
            }
            TermKind::Record(fields) => {
                if let Some(i) = fields.iter().position(|(_, v)| !v.is_value()) {
                    congruence!(i, &fields[i].1, |c| {
                        let mut fs = fields.clone();
                        fs[i].1 = c;
                        TermKind::Record(fs)
                    });
                }
                let mut cells = Vec::with_capacity(fields.len());
                for (l, v) in fields {
                    let loc = store.alloc(v.clone());
                    allocated.push(loc);
                    cells.push((l.clone(), loc));
                }
                Ok((rebuild(TermKind::RecordVal(cells)), "alloc"))
            }
            TermKind::Read(target, label) => {
                if !target.is_value() {
                    congruence!(0, target, |c| TermKind::Read(Box::new(c), label.clone()));
                }
                let (cells, sealed) = record_cells(target).ok_or(StuckCause::NotARecord)?;
                let loc = lookup(cells, label)?;
                let v = store
                    .get(loc)
                    .cloned()
                    .ok_or_else(|| StuckCause::Other(alloc::format!("dangling location {loc}")))?;
                if sealed {
                    if self.mutation == Some(Mutation::UnsealedSealedRead) {
                        Ok((v, "sealed-field"))
                    } else {
                        Ok((Term::seal(v), "sealed-field"))
                    }
                } else {
                    Ok((v, "field"))
                }
            }
            TermKind::Write(target, label, src) => {
                if !target.is_value() {
                    congruence!(0, target, |c| TermKind::Write(Box::new(c), label.clone(), src.clone()));
                }
                if !src.is_value() {
                    congruence!(1, src, |c| TermKind::Write(target.clone(), label.clone(), Box::new(c)));
                }
                let (cells, sealed) = record_cells(target).ok_or(StuckCause::NotARecord)?;
                if sealed && self.mutation != Some(Mutation::WriteThroughSeal) {
                    return Err(StuckCause::WriteThroughSeal);
                }
                let mut loc = lookup(cells, label)?;
                if self.mutation == Some(Mutation::MisdirectedWrite) {
                    loc = cells[0].1;
                }
                let old = store
                    .set(loc, (**src).clone())
                    .ok_or_else(|| StuckCause::Other(alloc::format!("dangling location {loc}")))?;
                Ok((old, "write-field"))
            }
            TermKind::Seal(inner) => {
                if !inner.is_value() {
                    congruence!(0, inner, |c| TermKind::Seal(Box::new(c)));
                }
                match &inner.kind {
                    TermKind::Abs(..) | TermKind::TyAbs(..) | TermKind::Nat(_) => {
                        Ok(((**inner).clone(), "seal-pass"))
                    }
                    TermKind::Seal(_) => Ok(((**inner).clone(), "seal-collapse")),
                    _ => Err(StuckCause::Other("sealed record is already a value".into())),
                }
            }
        }
    }

    pub fn eval(&self, c: MachineConfig, fuel: u64) -> Outcome {
        let mut trace = Trace::new(c.clone());
        let mut cur = c;
        loop {
            if cur.term.is_value() {
                return Outcome::Finished { value: cur.term, store: cur.store, trace };
            }
            if trace.len() as u64 >= fuel {
                return Outcome::OutOfFuel { trace };
            }
            match self.step(&cur) {
                StepResult::Stepped { config, rule, .. } => {
                    trace.push(config.clone(), rule);
                    cur = config;
                }
                StepResult::AlreadyValue => unreachable!("checked above"),
                StepResult::Stuck { cause, .. } => return Outcome::Stuck { cause, trace },
            }
        }
    }
}

fn record_cells(v: &Term) -> Option<(&[(Name, Location)], bool)> {
    match &v.kind {
        TermKind::RecordVal(cells) => Some((cells, false)),
        TermKind::Seal(inner) => match &inner.kind {
            TermKind::RecordVal(cells) => Some((cells, true)),
            _ => None,
        },
        _ => None,
    }
}

fn lookup(cells: &[(Name, Location)], label: &str) -> Result<Location, StuckCause> {
    cells
        .iter()
        .find(|(l, _)| l == label)
        .map(|(_, loc)| *loc)
        .ok_or_else(|| StuckCause::FieldMissing(label.into()))
}

/// One step with the unmodified rules.
pub fn step(c: &MachineConfig) -> StepResult {
    Machine::new().step(c)
}

/// Runs to a value, a stuck state, or `fuel` steps.
pub fn eval(c: MachineConfig, fuel: u64) -> Outcome {
    Machine::new().eval(c, fuel)
}

/// The configurations visited, each after the first labelled with the rule
/// that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: MachineConfig,
    pub steps: Vec<(MachineConfig, &'static str)>,
}

impl Trace {
    pub fn new(initial: MachineConfig) -> Self {
        Trace { initial, steps: Vec::new() }
    }

    pub fn push(&mut self, config: MachineConfig, rule: &'static str) {
        self.steps.push((config, rule));
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &MachineConfig {
        self.steps.last().map_or(&self.initial, |(c, _)| c)
    }

    pub fn rules(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.steps.iter().map(|(_, r)| *r)
    }

    /// All configurations, initial first.
    pub fn configs(&self) -> impl Iterator<Item = &MachineConfig> {
        core::iter::once(&self.initial).chain(self.steps.iter().map(|(c, _)| c))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "   {}", self.initial)?;
        for (c, rule) in &self.steps {
            writeln!(f, "⟶ {c}  ({rule})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Finished { value: Term, store: Store, trace: Trace },
    Stuck { cause: StuckCause, trace: Trace },
    OutOfFuel { trace: Trace },
}

impl Outcome {
    pub fn trace(&self) -> &Trace {
        match self {
            Outcome::Finished { trace, .. } | Outcome::Stuck { trace, .. } | Outcome::OutOfFuel { trace } => {
                trace
            }
        }
    }

    pub fn is_finished(&self) -> bool {
        matches!(self, Outcome::Finished { .. })
    }

    pub fn is_stuck(&self) -> bool {
        matches!(self, Outcome::Stuck { .. })
    }

    pub fn final_config(&self) -> &MachineConfig {
        self.trace().last()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Finished { .. } => "finished",
            Outcome::Stuck { .. } => "stuck",
            Outcome::OutOfFuel { .. } => "out-of-fuel",
        }
    }
}
