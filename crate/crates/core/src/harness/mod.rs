//! Executable forms of the safety properties: crest, paired runs against
//! crested and seal-erased copies, per-step progress and preservation
//! monitoring, random generators to feed them and a shrinker for what
//! they find.

mod crest;
mod diff;
mod gen;
mod monitor;
mod shrink;

pub use crest::{crest, crest_seals};
pub use diff::{diff_run, diff_with, erased_run, erased_with, DiffReport, SealDrop, Verdict, Violation};
pub use gen::{gen_program, gen_type, gen_well_typed, GiveUp};
pub use monitor::{monitor_run, monitor_with, MonitorReport, MonitorStep, MonitorViolation, ViolationKind};
pub use shrink::shrink;
