//! Command-line driver for the toolchain.
//!
//! One binary, three verbs:
//!
//! * `loopw infer x.loop` — parse a partially annotated program, infer the
//!   full derivation and its obligation table, and write the two-column
//!   certification view `x.typ`.  `-pprint` also writes the complete proof
//!   `x.proof`, `-uprint` the erased program `x.cs`, `-print` the
//!   re-formatted source `x.rev.loop`.
//! * `loopw check x.proof` — re-check a fully annotated proof, translate
//!   it to the functional core, and check that too.  `-fprint` writes the
//!   erased functional program `x.fun`, `-uprint` the erased imperative
//!   program `x.pcs`.
//! * `loopw run x.proof` — translate and evaluate, printing the resulting
//!   value.
//!
//! Success is silent (except for `run`).  Diagnostics go to stderr as
//! `file:line:col: RULE: message`.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use log::LevelFilter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use loopw::checker::{check_program, check_program_all, Chain};
use loopw::functional::{
    fcheck, feval, fprint, logical_str, program_goal, translate_program, DEFAULT_FUEL,
};
use loopw::infer::infer_program;
use loopw::obligations::{discharge, export_smtlib, Discharge, Obligation};
use loopw::parser::{parse_program, parse_proof};
use loopw::printer::{print_erased, print_proof, print_source, print_typ};

const EXIT_PARSE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_STRICT: u8 = 3;
const EXIT_EVAL: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "loopw", version, about = "Certifying toolchain for the LoopW language")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Infer a full proof derivation for a partially annotated program
    Infer(Job),
    /// Check a fully annotated proof, then its functional translation
    Check(Job),
    /// Translate a fully annotated proof and evaluate the result
    Run(Job),
}

#[derive(Args)]
struct Job {
    /// Input file: `.loop` for infer, `.proof` for check and run
    input: PathBuf,

    /// Trace level: 1 quiet, 2 rule trace, 3 environment dumps
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    verbosity: u8,

    /// Erase all type information and pretty print (`.cs` / `.pcs`)
    #[arg(long)]
    uprint: bool,

    /// Pretty print the parsed source (`.rev.loop`)
    #[arg(long)]
    print: bool,

    /// Write the complete inferred proof (`.proof`)
    #[arg(long)]
    pprint: bool,

    /// Display formula-like types instead of imperative types
    #[arg(long)]
    form: bool,

    /// Write the functional translation, untyped (`.fun`)
    #[arg(long)]
    fprint: bool,

    /// Fail when any arithmetic obligation is not proven
    #[arg(long)]
    strict: bool,

    /// Export the obligation table as an SMT-LIB script (`.smt2`)
    #[arg(long)]
    smt_export: bool,

    /// Evaluation step budget for `run`
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
}

fn main() -> ExitCode {
    let argv = normalize(std::env::args());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let (Verb::Infer(job) | Verb::Check(job) | Verb::Run(job)) = &cli.verb;
    init_logging(job.verbosity);
    let code = match &cli.verb {
        Verb::Infer(job) => infer_verb(job),
        Verb::Check(job) => check_verb(job),
        Verb::Run(job) => run_verb(job),
    };
    ExitCode::from(code)
}

/// The historical tools took single-dash long flags (`-uprint`, `-v2`).
/// Accept those spellings by rewriting them to the standard form.
fn normalize(args: impl IntoIterator<Item = String>) -> Vec<String> {
    args.into_iter()
        .map(|a| match a.as_str() {
            "-uprint" | "-print" | "-pprint" | "-form" | "-fprint" | "-strict" | "-fuel"
            | "-verbosity" | "-version" | "-help" => format!("-{a}"),
            "-smt-export" => "--smt-export".into(),
            "-v1" => "--verbosity=1".into(),
            "-v2" => "--verbosity=2".into(),
            "-v3" => "--verbosity=3".into(),
            _ => a,
        })
        .collect()
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        1 => LevelFilter::Warn,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
}

fn infer_verb(job: &Job) -> u8 {
    let (file, src) = match read_input(&job.input) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let seq = match parse_program(&src, &file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_PARSE;
        }
    };
    let (prog, obs) = match infer_program(&seq) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CHECK;
        }
    };
    let discharges: Vec<Discharge> = obs.iter().map(discharge).collect();
    let mut outs = vec![(sibling(&job.input, "typ"), print_typ(&prog, &obs, &discharges, job.form))];
    if job.pprint {
        outs.push((sibling(&job.input, "proof"), print_proof(&prog, &obs)));
    }
    if job.uprint {
        outs.push((sibling(&job.input, "cs"), print_erased(&seq)));
    }
    if job.print {
        outs.push((sibling(&job.input, "rev.loop"), print_source(&seq)));
    }
    if job.smt_export {
        outs.push((sibling(&job.input, "smt2"), export_smtlib(&obs)));
    }
    for (path, content) in &outs {
        if let Err(code) = write_output(path, content) {
            return code;
        }
    }
    strict_gate(job, &file, &obs, &discharges)
}

fn check_verb(job: &Job) -> u8 {
    let (file, src) = match read_input(&job.input) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let (prog, obs) = match parse_proof(&src, &file) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_PARSE;
        }
    };
    // At verbosity 2 and above the checker keeps going after a failure and
    // reports every broken rule, not just the first.
    if job.verbosity >= 2 {
        let chains = check_program_all(&prog, &obs);
        if !chains.is_empty() {
            chains.iter().for_each(|ch| report(job, ch));
            return EXIT_CHECK;
        }
    } else if let Err(ch) = check_program(&prog, &obs) {
        report(job, &ch);
        return EXIT_CHECK;
    }
    let t = translate_program(&prog);
    if let Err(ch) = fcheck(&t, &program_goal(&prog), &obs) {
        report(job, &ch);
        return EXIT_CHECK;
    }
    let mut outs = Vec::new();
    if job.fprint {
        outs.push((sibling(&job.input, "fun"), fprint(&t, true, &obs)));
    }
    if job.uprint {
        outs.push((sibling(&job.input, "pcs"), print_erased(&prog.seq)));
    }
    if job.smt_export {
        outs.push((sibling(&job.input, "smt2"), export_smtlib(&obs)));
    }
    for (path, content) in &outs {
        if let Err(code) = write_output(path, content) {
            return code;
        }
    }
    let discharges: Vec<Discharge> = obs.iter().map(discharge).collect();
    strict_gate(job, &file, &obs, &discharges)
}

fn run_verb(job: &Job) -> u8 {
    let (file, src) = match read_input(&job.input) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let (prog, _obs) = match parse_proof(&src, &file) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_PARSE;
        }
    };
    let t = translate_program(&prog);
    match feval(&t, job.fuel) {
        Ok(v) => {
            println!("{v}");
            0
        }
        Err(e) => {
            eprintln!("{file}: {e}");
            EXIT_EVAL
        }
    }
}

fn read_input(path: &Path) -> Result<(String, String), u8> {
    let file = path.display().to_string();
    match std::fs::read_to_string(path) {
        Ok(src) => Ok((file, src)),
        Err(e) => {
            eprintln!("{file}: {e}");
            Err(EXIT_PARSE)
        }
    }
}

fn write_output(path: &Path, content: &str) -> Result<(), u8> {
    std::fs::write(path, content).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_PARSE
    })
}

/// Derive an output path next to the input: `add.loop` → `add.typ`.
fn sibling(input: &Path, ext: &str) -> PathBuf {
    input.with_extension(ext)
}

/// Print a diagnostic chain; with `-form`, structured expected/actual
/// types are echoed in the logical notation.
fn report(job: &Job, chain: &Chain) {
    for d in chain {
        eprintln!("{d}");
        if job.form {
            if let (Some(exp), Some(act)) = (&d.expected, &d.actual) {
                eprintln!("  expected: {}", logical_str(exp));
                eprintln!("  actual:   {}", logical_str(act));
            }
        }
    }
}

/// Under `-strict`, any obligation the normalizer cannot prove fails the
/// run with its own exit code.
fn strict_gate(job: &Job, file: &str, obs: &[Obligation], discharges: &[Discharge]) -> u8 {
    if !job.strict {
        return 0;
    }
    let mut code = 0;
    for (ob, d) in obs.iter().zip(discharges) {
        if matches!(d, Discharge::Unknown) {
            eprintln!("{file}: obligation #{} is not proven: |- {} = {}", ob.id, ob.lhs, ob.rhs);
            code = EXIT_STRICT;
        }
    }
    code
}
