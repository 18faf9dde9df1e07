use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fm_core::harness::{crest, diff_with, erased_with, monitor_with, DiffReport, Verdict};
use fm_core::types::{typecheck, StoreTyping, TypeContext, TypedTerm};
use fm_core::{parse_program, Diagnostic, Machine, MachineConfig, Mutation, Outcome, Program};
use serde::Serialize;

use crate::campaign::{run_campaign, CampaignConfig, CampaignSummary, PROPERTIES};
use crate::corpus::{default_dir, load_corpus};
use crate::report::{CheckView, DiagnosticView, DiffView, MonitorView, RunView, TraceView};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FUEL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fm", version, about = "Type-check, run and stress-test programs with mutable records, readonly types and seals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format for results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Maximum number of evaluation steps per run.
    #[arg(long, global = true, env = "FM_FUEL", default_value_t = 10_000)]
    pub fuel: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the program's type, or its type errors.
    Check(Input),
    /// Evaluate the program and print its final value and store.
    Run {
        #[command(flatten)]
        input: Input,
        /// Evaluate without type-checking first.
        #[arg(long)]
        no_check: bool,
        /// Re-check typing of every configuration reached.
        #[arg(long, conflicts_with = "no_check")]
        monitor: bool,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Print every configuration the machine passes through.
    Trace {
        #[command(flatten)]
        input: Input,
        /// Evaluate without type-checking first.
        #[arg(long)]
        no_check: bool,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Print the program with every read-only-typed subterm sealed.
    Crest(Input),
    /// Run the program next to its crested copy and compare the runs.
    Diff {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Run the program next to a copy with all seals removed.
    Erase {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Check the harness properties over randomly generated types and programs.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    /// Source file.
    #[arg(required_unless_present = "expr", conflicts_with = "expr")]
    pub file: Option<PathBuf>,
    /// Program text given inline.
    #[arg(short = 'e', long = "expr", value_name = "SOURCE")]
    pub expr: Option<String>,
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    /// Run on a deliberately broken machine.
    #[arg(long, value_enum)]
    pub mutant: Option<Mutant>,
}

impl MachineArgs {
    fn machine(&self) -> Machine {
        self.mutant.map_or_else(Machine::new, |m| Machine::mutated(m.into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mutant {
    /// Reads through a seal come back unsealed.
    UnsealedRead,
    /// Writes through a seal are allowed.
    WriteThroughSeal,
    /// Writes land in the record's first field.
    MisdirectedWrite,
}

impl From<Mutant> for Mutation {
    fn from(m: Mutant) -> Self {
        match m {
            Mutant::UnsealedRead => Mutation::UnsealedSealedRead,
            Mutant::WriteThroughSeal => Mutation::WriteThroughSeal,
            Mutant::MisdirectedWrite => Mutation::MisdirectedWrite,
        }
    }
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of generated items.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Depth bound for generated program types.
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
    /// Height bound for the declarative subtyping search.
    #[arg(long, default_value_t = 8)]
    pub oracle_depth: u32,
    /// Also check the corpus in DIR (the bundled one if no DIR is given).
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<Option<PathBuf>>,
    /// How many failures to list.
    #[arg(long, default_value_t = 10)]
    pub show: usize,
    #[command(flatten)]
    pub machine: MachineArgs,
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let mut ctx = Ctx { format: cli.format, fuel: cli.fuel, out, err };
    match &cli.command {
        Command::Check(input) => ctx.check(input),
        Command::Run { input, no_check, monitor, machine } => ctx.run(input, *no_check, *monitor, machine),
        Command::Trace { input, no_check, machine } => ctx.trace(input, *no_check, machine),
        Command::Crest(input) => ctx.crest(input),
        Command::Diff { input, machine } => ctx.diff(input, machine, false),
        Command::Erase { input, machine } => ctx.diff(input, machine, true),
        Command::Fuzz(args) => ctx.fuzz(args),
    }
}

struct Source {
    name: String,
    text: String,
}

struct Ctx<'a> {
    format: Format,
    fuel: u64,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn structured(&self) -> bool {
        self.format == Format::Structured
    }

    fn emit<T: Serialize>(&mut self, value: &T) -> io::Result<()> {
        let json = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        writeln!(self.out, "{json}")
    }

    fn read(&mut self, input: &Input) -> io::Result<Result<Source, i32>> {
        if let Some(text) = &input.expr {
            return Ok(Ok(Source { name: "<expr>".into(), text: text.clone() }));
        }
        let path = input.file.as_ref().expect("clap requires a file or an expression");
        match fs::read_to_string(path) {
            Ok(text) => Ok(Ok(Source { name: path.display().to_string(), text })),
            Err(e) => {
                writeln!(self.err, "error: cannot read {}: {e}", path.display())?;
                Ok(Err(EXIT_USAGE))
            }
        }
    }

    fn report(&mut self, src: &Source, ds: &[Diagnostic]) -> io::Result<()> {
        for d in ds {
            writeln!(self.err, "{}", d.render(&src.name, &src.text))?;
        }
        Ok(())
    }

    /// Parses, reporting syntax errors.
    fn parse(&mut self, input: &Input) -> io::Result<Result<(Source, Program), i32>> {
        let src = match self.read(input)? {
            Ok(src) => src,
            Err(code) => return Ok(Err(code)),
        };
        match parse_program(&src.text) {
            Ok(p) => Ok(Ok((src, p))),
            Err(ds) => {
                self.report(&src, &ds)?;
                Ok(Err(EXIT_FAILED))
            }
        }
    }

    /// Parses and type-checks, reporting any errors.
    fn load(&mut self, input: &Input) -> io::Result<Result<(Source, Program, TypedTerm), i32>> {
        let (src, program) = match self.parse(input)? {
            Ok(x) => x,
            Err(code) => return Ok(Err(code)),
        };
        match typecheck(&TypeContext::new(), &StoreTyping::new(), &program.main) {
            Ok(tt) => Ok(Ok((src, program, tt))),
            Err(ds) => {
                self.report(&src, &ds)?;
                Ok(Err(EXIT_FAILED))
            }
        }
    }

    fn check(&mut self, input: &Input) -> io::Result<i32> {
        let (src, program) = match self.parse(input)? {
            Ok(x) => x,
            Err(code) => return Ok(code),
        };
        let checked = typecheck(&TypeContext::new(), &StoreTyping::new(), &program.main);
        if self.structured() {
            let view = match &checked {
                Ok(tt) => CheckView { ok: true, ty: Some(tt.judged.to_string()), diagnostics: vec![] },
                Err(ds) => CheckView {
                    ok: false,
                    ty: None,
                    diagnostics: ds.iter().map(|d| DiagnosticView::new(d, &src.text)).collect(),
                },
            };
            self.emit(&view)?;
        }
        match checked {
            Ok(tt) => {
                if !self.structured() {
                    writeln!(self.out, "{}", tt.judged)?;
                }
                Ok(EXIT_OK)
            }
            Err(ds) => {
                self.report(&src, &ds)?;
                Ok(EXIT_FAILED)
            }
        }
    }

    fn prepare(&mut self, input: &Input, no_check: bool) -> io::Result<Result<Program, i32>> {
        if no_check {
            return Ok(self.parse(input)?.map(|(_, p)| p));
        }
        Ok(self.load(input)?.map(|(_, p, _)| p))
    }

    fn run(&mut self, input: &Input, no_check: bool, monitor: bool, m: &MachineArgs) -> io::Result<i32> {
        let program = match self.prepare(input, no_check)? {
            Ok(p) => p,
            Err(code) => return Ok(code),
        };
        let machine = m.machine();
        if monitor {
            let report = match monitor_with(&machine, &program.main, None, self.fuel) {
                Ok(r) => r,
                Err(_) => unreachable!("program already checked"),
            };
            if self.structured() {
                self.emit(&MonitorView::from(&report))?;
            } else {
                if let Some(o) = &report.outcome {
                    self.print_outcome(o)?;
                }
                match &report.violation {
                    None => writeln!(self.out, "monitor: {} steps re-checked, no violations", report.steps.len())?,
                    Some(v) => {
                        writeln!(self.out, "monitor: {} violation after step {}: {}", v.kind, v.step, v.detail)?;
                        writeln!(self.out, "  at {}", v.config)?;
                    }
                }
            }
            return Ok(match (&report.violation, &report.outcome) {
                (Some(_), _) => EXIT_FAILED,
                (None, Some(Outcome::OutOfFuel { .. })) => EXIT_FUEL,
                _ => EXIT_OK,
            });
        }
        let outcome = machine.eval(MachineConfig::new(program.main), self.fuel);
        if self.structured() {
            self.emit(&RunView::from(&outcome))?;
        } else {
            self.print_outcome(&outcome)?;
        }
        Ok(outcome_code(&outcome))
    }

    fn print_outcome(&mut self, o: &Outcome) -> io::Result<()> {
        let steps = o.trace().len();
        match o {
            Outcome::Finished { value, store, .. } => {
                writeln!(self.out, "value: {value}")?;
                writeln!(self.out, "store: {}", fm_core::pretty_store(store))
            }
            Outcome::Stuck { cause, trace } => {
                writeln!(self.out, "stuck after {steps} {}: {cause}", plural(steps, "step"))?;
                writeln!(self.out, "  at {}", trace.last())
            }
            Outcome::OutOfFuel { trace } => {
                writeln!(self.out, "out of fuel after {steps} steps")?;
                writeln!(self.out, "  at {}", trace.last())
            }
        }
    }

    fn trace(&mut self, input: &Input, no_check: bool, m: &MachineArgs) -> io::Result<i32> {
        let program = match self.prepare(input, no_check)? {
            Ok(p) => p,
            Err(code) => return Ok(code),
        };
        let outcome = m.machine().eval(MachineConfig::new(program.main), self.fuel);
        if self.structured() {
            self.emit(&TraceView::new(outcome.trace(), &outcome))?;
        } else {
            write!(self.out, "{}", outcome.trace())?;
            match &outcome {
                Outcome::Finished { .. } => {}
                Outcome::Stuck { cause, .. } => writeln!(self.out, "stuck: {cause}")?,
                Outcome::OutOfFuel { trace } => writeln!(self.out, "out of fuel after {} steps", trace.len())?,
            }
        }
        Ok(outcome_code(&outcome))
    }

    fn crest(&mut self, input: &Input) -> io::Result<i32> {
        let (_, _, tt) = match self.load(input)? {
            Ok(x) => x,
            Err(code) => return Ok(code),
        };
        let crested = crest(&tt);
        if self.structured() {
            #[derive(Serialize)]
            struct CrestView {
                #[serde(rename = "type")]
                ty: String,
                program: String,
            }
            self.emit(&CrestView { ty: tt.judged.to_string(), program: crested.to_string() })?;
        } else {
            writeln!(self.out, "{crested}")?;
        }
        Ok(EXIT_OK)
    }

    fn diff(&mut self, input: &Input, m: &MachineArgs, erase: bool) -> io::Result<i32> {
        let (src, program) = match self.parse(input)? {
            Ok(x) => x,
            Err(code) => return Ok(code),
        };
        let machine = m.machine();
        let result = if erase {
            erased_with(&machine, &program.main, None, self.fuel)
        } else {
            diff_with(&machine, &program.main, None, self.fuel)
        };
        let report = match result {
            Ok(r) => r,
            Err(ds) => {
                self.report(&src, &ds)?;
                return Ok(EXIT_FAILED);
            }
        };
        if self.structured() {
            self.emit(&DiffView::from(&report))?;
        } else {
            self.print_diff(&report, erase)?;
        }
        // The side that drives the comparison decides whether fuel ran out.
        let driver = if erase { &report.transformed_outcome } else { &report.original_outcome };
        Ok(match (&report.verdict, driver) {
            (Verdict::Violation(_), _) => EXIT_FAILED,
            (_, Outcome::OutOfFuel { .. }) => EXIT_FUEL,
            _ => EXIT_OK,
        })
    }

    fn print_diff(&mut self, r: &DiffReport, erase: bool) -> io::Result<()> {
        let (less, more) = if erase { ("erased", "sealed") } else { ("original", "crested") };
        let yes_no = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        writeln!(self.out, "type: {}", r.ty)?;
        writeln!(self.out, "{less}: {}", r.original)?;
        writeln!(self.out, "{more}: {}", r.transformed)?;
        for (label, o) in [(less, &r.original_outcome), (more, &r.transformed_outcome)] {
            let steps = o.trace().len();
            writeln!(self.out, "{label} run: {} after {steps} {} at {}", o.kind(), plural(steps, "step"), o.final_config())?;
        }
        writeln!(self.out, "matched steps: {}", r.matched_steps)?;
        write!(self.out, "seal drops: {}", r.seal_drops.len())?;
        for d in &r.seal_drops {
            write!(self.out, " [{} at {}: {} → {}]", d.rule, d.step, d.before, d.after)?;
        }
        writeln!(self.out)?;
        writeln!(self.out, "value ≤: {}, store ≤: {}", yes_no(r.value_leq), yes_no(r.store_leq))?;
        if erase {
            writeln!(self.out, "typed erasure: {}", yes_no(r.typed_erasure))?;
        }
        match &r.verdict {
            Verdict::Equivalent => writeln!(self.out, "verdict: equivalent"),
            Verdict::Violation(v) => writeln!(self.out, "verdict: violation ({v})"),
        }
    }

    fn fuzz(&mut self, args: &FuzzArgs) -> io::Result<i32> {
        let corpus = match &args.corpus {
            None => Vec::new(),
            Some(dir) => {
                let dir = dir.clone().unwrap_or_else(default_dir);
                match load_corpus(&dir) {
                    Ok(c) => c,
                    Err(e) => {
                        writeln!(self.err, "error: {e}")?;
                        return Ok(EXIT_USAGE);
                    }
                }
            }
        };
        let cfg = CampaignConfig {
            seed: args.seed,
            count: args.count,
            depth: args.depth,
            fuel: self.fuel,
            oracle_depth: args.oracle_depth,
            mutation: args.machine.mutant.map(Into::into),
            ..CampaignConfig::default()
        };
        let summary = run_campaign(&cfg, &corpus);
        if self.structured() {
            self.emit(&summary)?;
        } else {
            self.print_summary(&summary, &cfg, corpus.len(), args.show)?;
        }
        Ok(if summary.violations() == 0 { EXIT_OK } else { EXIT_FAILED })
    }

    fn print_summary(&mut self, s: &CampaignSummary, cfg: &CampaignConfig, corpus: usize, show: usize) -> io::Result<()> {
        write!(self.out, "seed {}, {} generated items", s.seed, s.count)?;
        if corpus > 0 {
            write!(self.out, " + {corpus} corpus programs")?;
        }
        writeln!(self.out, ", fuel {}, oracle depth {}", cfg.fuel, cfg.oracle_depth)?;
        for p in PROPERTIES {
            let t = s.properties.get(p).copied().unwrap_or_default();
            if t.checked > 0 {
                writeln!(self.out, "  {p:<17} {:>6} checked  {:>4} failed", t.checked, t.failed)?;
            }
        }
        let o = &s.outcomes;
        writeln!(
            self.out,
            "runs: {} finished, {} stuck, {} out of fuel; {} steps, {} seal drops",
            o.finished, o.stuck, o.out_of_fuel, s.steps, s.seal_drops
        )?;
        for f in s.failures.iter().take(show) {
            writeln!(self.out, "FAIL {} [{}]: {}\n     {}", f.property, f.item, f.detail, f.subject)?;
            if let Some(small) = &f.shrunk {
                writeln!(self.out, "     shrunk: {small}")?;
            }
        }
        if s.failures.len() > show {
            writeln!(self.out, "... {} more failures", s.failures.len() - show)?;
        }
        writeln!(self.out, "violations: {}", s.violations())
    }
}

fn outcome_code(o: &Outcome) -> i32 {
    match o {
        Outcome::Finished { .. } => EXIT_OK,
        Outcome::Stuck { .. } => EXIT_FAILED,
        Outcome::OutOfFuel { .. } => EXIT_FUEL,
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 { word.to_string() } else { format!("{word}s") }
}
