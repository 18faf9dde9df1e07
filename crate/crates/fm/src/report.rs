//! Serializable views of core results for `--format structured`.

use fm_core::harness::{DiffReport, MonitorReport, Verdict};
use fm_core::{pretty_store, Diagnostic, MachineConfig, Outcome, Trace};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct DiagnosticView {
    pub code: &'static str,
    pub message: String,
    pub rule: Option<&'static str>,
    pub expected: Option<String>,
    pub actual: Option<String>,
    /// Byte offsets into the source.
    pub span: [usize; 2],
    pub line: usize,
    pub column: usize,
}

impl DiagnosticView {
    pub fn new(d: &Diagnostic, src: &str) -> Self {
        let (line, column, _) = d.span.line_col(src);
        DiagnosticView {
            code: d.code,
            message: d.message.clone(),
            rule: d.rule,
            expected: d.expected.clone(),
            actual: d.actual.clone(),
            span: [d.span.start, d.span.end],
            line,
            column,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckView {
    pub ok: bool,
    #[serde(rename = "type")]
    pub ty: Option<String>,
    pub diagnostics: Vec<DiagnosticView>,
}

#[derive(Debug, Serialize)]
pub struct ConfigView {
    pub term: String,
    pub store: String,
}

impl From<&MachineConfig> for ConfigView {
    fn from(c: &MachineConfig) -> Self {
        ConfigView { term: c.term.to_string(), store: pretty_store(&c.store) }
    }
}

#[derive(Debug, Serialize)]
pub struct StepView {
    pub rule: &'static str,
    #[serde(flatten)]
    pub config: ConfigView,
}

#[derive(Debug, Serialize)]
pub struct RunView {
    /// `finished`, `stuck` or `out-of-fuel`.
    pub outcome: &'static str,
    pub steps: usize,
    #[serde(rename = "final")]
    pub last: ConfigView,
    pub stuck: Option<&'static str>,
}

impl From<&Outcome> for RunView {
    fn from(o: &Outcome) -> Self {
        RunView {
            outcome: o.kind(),
            steps: o.trace().len(),
            last: o.final_config().into(),
            stuck: match o {
                Outcome::Stuck { cause, .. } => Some(cause.code()),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TraceView {
    pub initial: ConfigView,
    pub steps: Vec<StepView>,
    pub outcome: &'static str,
    pub stuck: Option<&'static str>,
}

impl TraceView {
    pub fn new(trace: &Trace, outcome: &Outcome) -> Self {
        TraceView {
            initial: (&trace.initial).into(),
            steps: trace.steps.iter().map(|(c, rule)| StepView { rule, config: c.into() }).collect(),
            outcome: outcome.kind(),
            stuck: RunView::from(outcome).stuck,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ViolationView {
    pub check: &'static str,
    pub step: usize,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct SealDropView {
    pub step: usize,
    pub rule: &'static str,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Serialize)]
pub struct DiffView {
    #[serde(rename = "type")]
    pub ty: String,
    pub verdict: &'static str,
    pub violation: Option<ViolationView>,
    pub original: String,
    pub original_run: RunView,
    pub transformed: String,
    pub transformed_run: RunView,
    pub matched_steps: usize,
    pub seal_drops: Vec<SealDropView>,
    pub value_leq: Option<bool>,
    pub store_leq: Option<bool>,
    pub typed_erasure: Option<bool>,
}

impl From<&DiffReport> for DiffView {
    fn from(r: &DiffReport) -> Self {
        let violation = match &r.verdict {
            Verdict::Equivalent => None,
            Verdict::Violation(v) => Some(ViolationView { check: v.check, step: v.step, detail: v.detail.clone() }),
        };
        DiffView {
            ty: r.ty.to_string(),
            verdict: if violation.is_none() { "equivalent" } else { "violation" },
            violation,
            original: r.original.to_string(),
            original_run: (&r.original_outcome).into(),
            transformed: r.transformed.to_string(),
            transformed_run: (&r.transformed_outcome).into(),
            matched_steps: r.matched_steps,
            seal_drops: r
                .seal_drops
                .iter()
                .map(|d| SealDropView { step: d.step, rule: d.rule, before: d.before, after: d.after })
                .collect(),
            value_leq: r.value_leq,
            store_leq: r.store_leq,
            typed_erasure: r.typed_erasure,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MonitorView {
    #[serde(rename = "type")]
    pub ty: String,
    pub run: Option<RunView>,
    pub steps: usize,
    pub store_typing: Vec<(String, String)>,
    pub violation: Option<ViolationView>,
}

impl From<&MonitorReport> for MonitorView {
    fn from(m: &MonitorReport) -> Self {
        MonitorView {
            ty: m.ty.to_string(),
            run: m.outcome.as_ref().map(Into::into),
            steps: m.steps.len(),
            store_typing: m.store_typing.iter().map(|(l, t)| (l.to_string(), t.to_string())).collect(),
            violation: m.violation.as_ref().map(|v| ViolationView {
                check: match v.kind {
                    fm_core::harness::ViolationKind::Preservation => "preservation",
                    fm_core::harness::ViolationKind::StoreTyping => "store-typing",
                    fm_core::harness::ViolationKind::Progress => "progress",
                    fm_core::harness::ViolationKind::Allocation => "allocation",
                },
                step: v.step,
                detail: v.detail.clone(),
            }),
        }
    }
}
