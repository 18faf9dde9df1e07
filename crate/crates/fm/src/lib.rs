//! Command-line front end: file loading, the bundled corpus, fuzz campaigns
//! and report formats on top of `fm_core`.

pub mod campaign;
pub mod cli;
pub mod corpus;
pub mod report;
