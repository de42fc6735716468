use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ffa_core::conformance::Mode;
use ffa_core::domains::{Direction, Selector};
use ffa_core::formatspec::{FormatSpec, Mapping, Tables};
use ffa_core::oracle::{Bounds, DEFAULT_FUEL};
use ffa_core::session::{pretty, refine};
use ffa_core::{FfaError, OutputFormat, Session};

/// File-format-aware dataflow analysis.
#[derive(Parser)]
#[command(name = "ffa", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Inputs {
    /// Program source (.mcbl).
    #[arg(long)]
    program: PathBuf,
    /// Format description (.ffs).
    #[arg(long)]
    format: Option<PathBuf>,
    /// Table snapshot: JSON object from table name to key list.
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Write the artifact here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format: text, json or dot.
    #[arg(long, default_value = "text")]
    emit: OutputFormat,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-point, per-file-state facts.
    Analyze {
        #[command(flatten)]
        io: Inputs,
        /// Input automaton; omit to analyze the plain CFG.
        #[arg(long)]
        automaton: Option<String>,
        #[arg(long, default_value = "cp*uninit")]
        domain: Selector,
    },
    /// Under- or over-acceptance warnings.
    Conformance {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        automaton: String,
        #[arg(long, default_value = "under")]
        mode: Mode,
        #[arg(long, default_value = "cp")]
        domain: Selector,
    },
    /// Specialized sources for one or more criteria.
    Specialize {
        #[command(flatten)]
        io: Inputs,
        /// Comma-separated automaton names.
        #[arg(long, value_delimiter = ',', required = true)]
        criteria: Vec<String>,
        /// Stop after projection.
        #[arg(long)]
        no_simplify: bool,
    },
    /// The program file state graph.
    Pfsg {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        automaton: String,
        /// Domain whose solution prunes the graph.
        #[arg(long, default_value = "cp")]
        domain: Selector,
        /// Shorthand for `--emit dot`.
        #[arg(long)]
        dot: bool,
        /// Run this domain on the graph and print its facts.
        #[arg(long)]
        run_domain: Option<Selector>,
        /// f (forward) or b (backward).
        #[arg(long, default_value = "f")]
        direction: String,
    },
    /// Bounded soundness check against concrete runs.
    Verify {
        #[command(flatten)]
        io: Inputs,
        /// Omit to check the plain CFG analysis on every file.
        #[arg(long)]
        automaton: Option<String>,
        #[arg(long, default_value = "cp*uninit")]
        domain: Selector,
        #[arg(long, default_value_t = 4)]
        max_records: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Does one automaton refine another?
    Refine {
        #[arg(long)]
        format: PathBuf,
        /// The coarser automaton.
        #[arg(long)]
        refined: String,
        /// The finer automaton.
        #[arg(long)]
        refining: String,
        /// JSON object from refining state to refined state.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        emit: OutputFormat,
    },
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<FfaError> for Failure {
    fn from(e: FfaError) -> Failure {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn read(p: &Path) -> Result<String, Failure> {
    fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
}

fn load(io: &Inputs) -> Result<Session, Failure> {
    let program = read(&io.program)?;
    let spec = io.format.as_deref().map(read).transpose()?;
    let mut s = Session::new(&program, spec.as_deref())?;
    if let Some(t) = &io.tables {
        s = s.with_tables(Tables::from_json(&read(t)?).map_err(|e| Failure::Input(e.to_string()))?);
    }
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Run one command; the flag says whether it found something.
fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.cmd {
        Cmd::Analyze { io, automaton, domain } => {
            let s = load(&io)?;
            emit(io.out.as_deref(), &s.analyze(automaton.as_deref(), domain, io.emit)?)?;
            Ok(false)
        }
        Cmd::Conformance { io, automaton, mode, domain } => {
            let s = load(&io)?;
            let r = s.conformance(&automaton, mode, domain)?;
            for n in &r.notes {
                log::warn!("{n}");
            }
            let text = if io.emit == OutputFormat::Json { pretty(&r.to_json()) } else { r.render_text() };
            emit(io.out.as_deref(), &text)?;
            Ok(!r.is_clean())
        }
        Cmd::Specialize { io, criteria, no_simplify } => {
            let s = load(&io)?;
            let names: Vec<&str> = criteria.iter().map(String::as_str).collect();
            let results = s.specialize(&names, !no_simplify)?;
            let report = Session::specialize_report(&results);
            match &io.out {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
                    for r in &results {
                        emit(Some(&dir.join(format!("{}.mcbl", r.criterion))), &r.source)?;
                    }
                    emit(Some(&dir.join("report.json")), &pretty(&report))?;
                }
                None if io.emit == OutputFormat::Json => emit(None, &pretty(&report))?,
                None => {
                    for r in &results {
                        emit(None, &format!("*> specialized for {}\n{}", r.criterion, r.source))?;
                        emit(None, &format!("*> unreachable lines: {:?}\n", r.unreachable_lines))?;
                    }
                    emit(None, &pretty(&report["commonality"]))?;
                }
            }
            Ok(false)
        }
        Cmd::Pfsg { io, automaton, domain, dot, run_domain, direction } => {
            let s = load(&io)?;
            let g = s.pfsg(&automaton, domain)?;
            let text = match run_domain {
                Some(d) => {
                    let dir = match direction.as_str() {
                        "f" | "forward" => Direction::Forward,
                        "b" | "backward" => Direction::Backward,
                        other => return Err(Failure::Input(format!("unknown direction '{other}' (expected f or b)"))),
                    };
                    s.pfsg_facts(&g, d, dir, io.emit)?
                }
                None if io.emit == OutputFormat::Json => pretty(&g.to_json(&s.cfg)),
                None => {
                    let _ = dot;
                    g.export_dot(&s.cfg)
                }
            };
            emit(io.out.as_deref(), &text)?;
            Ok(false)
        }
        Cmd::Verify { io, automaton, domain, max_records, fuel } => {
            let s = load(&io)?;
            let r = s.verify(automaton.as_deref(), domain, Bounds { max_records, fuel })?;
            let text = if io.emit == OutputFormat::Json {
                pretty(&serde_json::to_value(&r).expect("reports serialize"))
            } else {
                r.render_text()
            };
            emit(io.out.as_deref(), &text)?;
            Ok(r.violation.is_some())
        }
        Cmd::Refine { format, refined, refining, mapping, out, emit: fmt } => {
            let spec = FormatSpec::parse(&read(&format)?).map_err(|e| Failure::Input(e.to_string()))?;
            let mapping: Option<Mapping> = match mapping {
                Some(p) => Some(
                    serde_json::from_str(&read(&p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
                ),
                None => None,
            };
            let v = refine(&spec, &refined, &refining, mapping.as_ref())?;
            let json = serde_json::to_value(&v).expect("verdicts serialize");
            let text = if fmt == OutputFormat::Json {
                pretty(&json)
            } else if v.holds() {
                format!("{refining} refines {refined}\n{}", pretty(&json))
            } else {
                format!("{refining} does not refine {refined}\n{}", pretty(&json))
            };
            emit(out.as_deref(), &text)?;
            Ok(!v.holds())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FFA_LOG", "warn")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(false)) => ExitCode::SUCCESS,
        Ok(Ok(true)) => ExitCode::from(1),
        Ok(Err(Failure::Input(m))) => {
            eprintln!("ffa: {m}");
            ExitCode::from(2)
        }
        Ok(Err(Failure::Internal(m))) => {
            eprintln!("ffa: internal error: {m}");
            ExitCode::from(3)
        }
        Err(_) => ExitCode::from(3),
    }
}
