//! Bundled example programs and what each is expected to do.
//!
//! Expectations live in the leading `//` comment block of each `.fm` file:
//!
//! ```text
//! // expect: accept | reject <diagnostic-code>
//! // at: <source text the diagnostic must cover>
//! // value: <printed final value>
//! // unchecked: stuck <stuck-cause-code>
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use fm_core::types::{typecheck, StoreTyping, TypeContext};
use fm_core::{eval, parse_program, pretty_term, MachineConfig, Outcome, Program};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    Accept,
    RejectWith(String),
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Accept => f.write_str("accept"),
            Expectation::RejectWith(code) => write!(f, "reject {code}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    pub expected: Expectation,
    /// Text of the span the rejecting diagnostic must point at.
    pub at: Option<String>,
    /// Printed final value of a checked run.
    pub value: Option<String>,
    /// Stuck cause when run without checking.
    pub unchecked_stuck: Option<String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: no `// expect:` line", path.display())]
    MissingExpectation { path: PathBuf },
    #[error("{}: bad header line `{line}`", path.display())]
    BadHeader { path: PathBuf, line: String },
}

/// Default location of the bundled corpus.
pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every `.fm` file in `dir`, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let io = |source| CorpusError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "fm"));
    paths.sort();
    paths.iter().map(|p| load_entry(p)).collect()
}

fn load_entry(path: &Path) -> Result<CorpusEntry, CorpusError> {
    let source =
        fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let bad = |line: &str| CorpusError::BadHeader { path: path.to_path_buf(), line: line.to_string() };
    let mut expected = None;
    let (mut at, mut value, mut unchecked_stuck) = (None, None, None);
    for line in source.lines().map(str::trim) {
        let Some(comment) = line.strip_prefix("//") else {
            if line.is_empty() {
                continue;
            }
            break;
        };
        let Some((key, rest)) = comment.trim().split_once(':') else { continue };
        let rest = rest.trim();
        match key {
            "expect" => {
                expected = Some(match rest.split_once(' ') {
                    None if rest == "accept" => Expectation::Accept,
                    Some(("reject", code)) => Expectation::RejectWith(code.trim().to_string()),
                    _ => return Err(bad(line)),
                })
            }
            "at" => at = Some(rest.to_string()),
            "value" => value = Some(rest.to_string()),
            "unchecked" => match rest.split_once(' ') {
                Some(("stuck", cause)) => unchecked_stuck = Some(cause.trim().to_string()),
                _ => return Err(bad(line)),
            },
            _ => {}
        }
    }
    let expected = expected.ok_or_else(|| CorpusError::MissingExpectation { path: path.to_path_buf() })?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(CorpusEntry { name, path: path.to_path_buf(), source, expected, at, value, unchecked_stuck })
}

impl CorpusEntry {
    pub fn parse(&self) -> Result<Program, String> {
        parse_program(&self.source).map_err(|ds| ds[0].render(&self.path.display().to_string(), &self.source))
    }

    /// Checks every expectation the entry states; the error says which failed.
    pub fn verify(&self, fuel: u64) -> Result<(), String> {
        let program = self.parse()?;
        let checked = typecheck(&TypeContext::new(), &StoreTyping::new(), &program.main);
        match (&self.expected, &checked) {
            (Expectation::Accept, Err(ds)) => {
                return Err(format!("expected to check, got {}", ds[0].code));
            }
            (Expectation::RejectWith(code), Ok(tt)) => {
                return Err(format!("expected {code}, but it checks at {}", tt.judged));
            }
            (Expectation::RejectWith(code), Err(ds)) => {
                let d = ds.iter().find(|d| d.code == code.as_str()).ok_or_else(|| {
                    format!("expected {code}, got {}", ds.iter().map(|d| d.code).collect::<Vec<_>>().join(", "))
                })?;
                if let Some(want) = &self.at {
                    let got = self.source.get(d.span.start..d.span.end).unwrap_or("");
                    if got != want {
                        return Err(format!("{code} reported at `{got}`, expected `{want}`"));
                    }
                }
            }
            (Expectation::Accept, Ok(_)) => {}
        }
        if let Some(want) = &self.value {
            match eval(MachineConfig::new(program.main.clone()), fuel) {
                Outcome::Finished { value, .. } if pretty_term(&value) == *want => {}
                other => return Err(format!("expected value {want}, run ended {}", describe(&other))),
            }
        }
        if let Some(want) = &self.unchecked_stuck {
            match eval(MachineConfig::new(program.main), fuel) {
                Outcome::Stuck { cause, .. } if cause.code() == want => {}
                other => return Err(format!("expected to get stuck ({want}), run ended {}", describe(&other))),
            }
        }
        Ok(())
    }
}

fn describe(o: &Outcome) -> String {
    match o {
        Outcome::Finished { value, .. } => format!("with {value}"),
        Outcome::Stuck { cause, .. } => format!("stuck: {cause}"),
        Outcome::OutOfFuel { .. } => "out of fuel".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_expectations() {
        let entries = load_corpus(&default_dir()).unwrap();
        let find = |n: &str| entries.iter().find(|e| e.name == n).unwrap();
        assert_eq!(find("good").expected, Expectation::Accept);
        assert_eq!(find("bad2").expected, Expectation::RejectWith("write-through-readonly".into()));
        assert_eq!(find("sealed-write").unchecked_stuck.as_deref(), Some("write-through-seal"));
        for e in &entries {
            e.verify(10_000).unwrap_or_else(|msg| panic!("{}: {msg}", e.name));
        }
    }

    #[test]
    fn missing_expectation_is_an_error() {
        let dir = std::env::temp_dir().join(format!("fm-corpus-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("x.fm"), "// nothing to see\n10\n").unwrap();
        let err = load_corpus(&dir).unwrap_err();
        fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(err, CorpusError::MissingExpectation { .. }));
    }
}
