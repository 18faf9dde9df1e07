//! Normal forms, subtyping, and type checking.

mod check;
mod context;
mod normal;
mod oracle;
mod subtype;

pub use check::{check_store, typecheck, typecheck_against, Typed, TypedNode, TypedTerm};
pub use context::{Binding, StoreTyping, TypeContext};
pub use normal::{components, is_normal, is_readonly_type, nf};
pub use oracle::{oracle_min_depth, subtype_oracle, OracleAnswer};
pub use subtype::{equivalent, subtype, subtype_with_fuel, OutOfFuel, DEFAULT_SUBTYPE_FUEL};
