//! One loaded program plus its format description, with every command of
//! the tool as a method. The CLI and the C interface both sit on this.

use std::fmt::Write;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::conformance::{check_over_acceptance, check_under_acceptance, ConformanceReport, Mode};
use crate::domains::{AnalysisEnv, Direction, Domain, DomainVisitor, EnvError, Selector};
use crate::formatspec::{check_refinement, FormatSpec, InputAutomaton, Mapping, RefinementVerdict, SpecError, Tables};
use crate::lifted::{analyze, analyze_direct, render_text, solution_json, LiftedError, Options, Solution};
use crate::minilang::{build_cfg, parse_program, Cfg, ParseError, Program};
use crate::oracle::{enumerate_files, record_universe, soundness_check, Bounds, Concretize, EnumerateError, Harness};
use crate::pfsg::{analyze_on_pfsg, build_pfsg, Pfsg, PfsgError};
use crate::specializer::{commonality, specialize, SpecializationResult, SpecializeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FfaError {
    #[error("program: {0}")]
    Parse(#[from] ParseError),
    #[error("format: {0}")]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("this command needs a format description")]
    NoSpec,
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Lifted(#[from] LiftedError),
    #[error(transparent)]
    Specialize(#[from] SpecializeError),
    #[error(transparent)]
    Pfsg(#[from] PfsgError),
}

impl FfaError {
    /// Bad input rather than a broken invariant of the tool.
    pub fn is_input_error(&self) -> bool {
        match self {
            FfaError::Parse(_)
            | FfaError::Spec(_)
            | FfaError::Env(_)
            | FfaError::NoSpec
            | FfaError::Usage(_)
            | FfaError::Enumerate(_) => true,
            FfaError::Specialize(e) => !matches!(e, SpecializeError::Lifted(_)),
            FfaError::Pfsg(e) => matches!(e, PfsgError::Direction { .. }),
            FfaError::Lifted(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, FfaError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Dot,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "dot" => Ok(OutputFormat::Dot),
            _ => Err(format!("unknown format '{s}' (expected text, json or dot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub automaton: String,
    pub domain: String,
    pub files: usize,
    pub traces: usize,
    pub steps: usize,
    pub violation: Option<String>,
}

impl VerifyReport {
    pub fn render_text(&self) -> String {
        let head = format!(
            "verified {} on {}: {} files, {} traces, {} states",
            self.domain, self.automaton, self.files, self.traces, self.steps
        );
        match &self.violation {
            None => format!("{head}\nno violations\n"),
            Some(v) => format!("{head}\nviolation: {v}\n"),
        }
    }
}

#[derive(Debug)]
pub struct Session {
    pub program: Arc<Program>,
    pub spec: Option<FormatSpec>,
    pub tables: Option<Tables>,
    pub env: Arc<AnalysisEnv>,
    pub cfg: Cfg,
}

fn forward_only<D: Domain>(d: &D) -> Result<()> {
    if d.supports(Direction::Forward) {
        Ok(())
    } else {
        Err(FfaError::Usage(format!("domain {} only runs backward; use it on a PFSG with direction b", d.name())))
    }
}

fn run<D: Domain>(cfg: &Cfg, a: Option<&InputAutomaton>, d: &D, opts: &Options) -> Result<Solution<D::Value>> {
    forward_only(d)?;
    Ok(match a {
        Some(a) => analyze(cfg, a, d, opts)?,
        None => analyze_direct(cfg, d, opts)?,
    })
}

impl Session {
    pub fn new(program: &str, spec: Option<&str>) -> Result<Session> {
        let program = Arc::new(parse_program(program)?);
        let spec = spec.map(FormatSpec::parse).transpose()?;
        for w in spec.iter().flat_map(|s| &s.warnings) {
            log::warn!("{w}");
        }
        let env = AnalysisEnv::new(program.clone(), spec.as_ref())?;
        let cfg = build_cfg(&program);
        log::debug!("{} CFG nodes, {} edges", cfg.len(), cfg.edges.len());
        Ok(Session { program, spec, tables: None, env, cfg })
    }

    pub fn with_tables(mut self, tables: Tables) -> Session {
        self.tables = Some(tables);
        self
    }

    pub fn spec(&self) -> Result<&FormatSpec> {
        self.spec.as_ref().ok_or(FfaError::NoSpec)
    }

    pub fn automaton(&self, name: &str) -> Result<&InputAutomaton> {
        Ok(self.spec()?.automaton(name)?)
    }

    fn automaton_opt(&self, name: Option<&str>) -> Result<Option<&InputAutomaton>> {
        name.map(|n| self.automaton(n)).transpose()
    }

    /// The fixpoint under `automaton`, or directly on the CFG without one.
    pub fn analyze(&self, automaton: Option<&str>, sel: Selector, format: OutputFormat) -> Result<String> {
        struct V<'a>(&'a Session, Option<&'a InputAutomaton>, OutputFormat);
        impl DomainVisitor for V<'_> {
            type Output = Result<String>;
            fn visit<D: Domain + Concretize>(self, d: D) -> Result<String> {
                let sol = run(&self.0.cfg, self.1, &d, &Options::default())?;
                Ok(match self.2 {
                    OutputFormat::Json => pretty(&solution_json(&self.0.cfg, &d, &sol)),
                    _ => render_text(&self.0.cfg, &d, &sol),
                })
            }
        }
        let a = self.automaton_opt(automaton)?;
        sel.visit(self.env.clone(), V(self, a, format))
    }

    pub fn conformance(&self, automaton: &str, mode: Mode, sel: Selector) -> Result<ConformanceReport> {
        struct V<'a>(&'a Cfg, &'a InputAutomaton, Mode);
        impl DomainVisitor for V<'_> {
            type Output = Result<ConformanceReport>;
            fn visit<D: Domain + Concretize>(self, d: D) -> Result<ConformanceReport> {
                forward_only(&d)?;
                Ok(match self.2 {
                    Mode::Under => check_under_acceptance(self.0, self.1, &d)?,
                    Mode::Over => check_over_acceptance(self.0, self.1, &d)?,
                })
            }
        }
        sel.visit(self.env.clone(), V(&self.cfg, self.automaton(automaton)?, mode))
    }

    pub fn specialize(&self, criteria: &[&str], simplify: bool) -> Result<Vec<SpecializationResult>> {
        let spec = self.spec()?;
        criteria.iter().map(|c| Ok(specialize(&self.program, spec, self.automaton(c)?, simplify)?)).collect()
    }

    /// Per-criterion diffs with the specialized sources, plus commonality.
    pub fn specialize_report(results: &[SpecializationResult]) -> serde_json::Value {
        let criteria: Vec<serde_json::Value> = results
            .iter()
            .map(|r| {
                let mut d = r.diff_json();
                d["source"] = serde_json::Value::String(r.source.clone());
                d
            })
            .collect();
        serde_json::json!({ "criteria": criteria, "commonality": commonality(results) })
    }

    /// The PFSG built from a `sel` solution under `automaton`.
    pub fn pfsg(&self, automaton: &str, sel: Selector) -> Result<Pfsg> {
        struct V<'a>(&'a Cfg, &'a InputAutomaton);
        impl DomainVisitor for V<'_> {
            type Output = Result<Pfsg>;
            fn visit<D: Domain + Concretize>(self, d: D) -> Result<Pfsg> {
                let sol = run(self.0, Some(self.1), &d, &Options::default())?;
                Ok(build_pfsg(self.0, self.1, &d, &sol)?)
            }
        }
        sel.visit(self.env.clone(), V(&self.cfg, self.automaton(automaton)?))
    }

    /// Run `sel` on `g` and list the fact before every node copy.
    pub fn pfsg_facts(&self, g: &Pfsg, sel: Selector, direction: Direction, format: OutputFormat) -> Result<String> {
        struct V<'a>(&'a Session, &'a Pfsg, Direction, OutputFormat);
        impl DomainVisitor for V<'_> {
            type Output = Result<String>;
            fn visit<D: Domain + Concretize>(self, d: D) -> Result<String> {
                let (s, g) = (self.0, self.1);
                let sol = analyze_on_pfsg(g, &s.cfg, &d, self.2)?;
                let mut rows = Vec::new();
                for &(m, q) in &g.nodes {
                    let n = s.cfg.node(m);
                    let at = if m == s.cfg.exit {
                        "exit".to_string()
                    } else if m == s.cfg.entry {
                        "entry".to_string()
                    } else {
                        n.line.to_string()
                    };
                    let v = sol.get(&d, (m, q));
                    let desc = if d.is_bottom(&v) { "unreachable".to_string() } else { d.describe(&v) };
                    rows.push((format!("{at}/{}", g.states[q]), desc));
                }
                Ok(match self.3 {
                    OutputFormat::Json => {
                        let map: serde_json::Map<String, serde_json::Value> =
                            rows.into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
                        pretty(&serde_json::json!({ "domain": d.name(), "facts": map }))
                    }
                    _ => {
                        let mut out = format!("domain {} on pfsg of {}\n", d.name(), g.automaton);
                        for (k, v) in rows {
                            let _ = writeln!(out, "before {k}: {v}");
                        }
                        out
                    }
                })
            }
        }
        sel.visit(self.env.clone(), V(self, g, direction, format))
    }

    /// Check a `sel` solution against concrete runs on every file of at
    /// most `bounds.max_records` records the automaton accepts; every file
    /// over the record universe without an automaton.
    pub fn verify(&self, automaton: Option<&str>, sel: Selector, bounds: Bounds) -> Result<VerifyReport> {
        struct V<'a>(&'a Session, Option<&'a InputAutomaton>, Bounds);
        impl DomainVisitor for V<'_> {
            type Output = Result<VerifyReport>;
            fn visit<D: Domain + Concretize>(self, d: D) -> Result<VerifyReport> {
                let (s, a) = (self.0, self.1);
                let spec = s.spec()?;
                let tables = s.tables.as_ref();
                let universe = record_universe(spec, tables);
                let files = enumerate_files(spec, a, &universe, tables, self.2.max_records)?;
                let sol = run(&s.cfg, a, &d, &Options::default())?;
                let h = Harness { env: &s.env, cfg: &s.cfg, spec, tables, fuel: self.2.fuel };
                let mut r = VerifyReport {
                    automaton: a.map_or("direct".into(), |a| a.name.clone()),
                    domain: d.name(),
                    files: files.len(),
                    traces: 0,
                    steps: 0,
                    violation: None,
                };
                match soundness_check(&h, &d, &sol, a, &files) {
                    Ok(st) => {
                        r.traces = st.traces;
                        r.steps = st.steps;
                    }
                    Err(v) => r.violation = Some(v.to_string()),
                }
                Ok(r)
            }
        }
        let a = self.automaton_opt(automaton)?;
        sel.visit(self.env.clone(), V(self, a, bounds))
    }
}

/// Does `refining` refine `refined` within one format description?
pub fn refine(
    spec: &FormatSpec,
    refined: &str,
    refining: &str,
    mapping: Option<&Mapping>,
) -> Result<RefinementVerdict> {
    Ok(check_refinement(spec, spec.automaton(refined)?, spec.automaton(refining)?, mapping))
}

pub fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}
