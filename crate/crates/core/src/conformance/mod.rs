//! File format conformance checks: under-acceptance (a rejection point is
//! reachable on a well-formed file) and over-acceptance (an ill-formed file
//! runs to the end of the main procedure).

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use serde::Serialize;

use crate::domains::Domain;
use crate::formatspec::InputAutomaton;
use crate::lifted::{analyze, LiftedError, Options};
use crate::minilang::{Cfg, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Under,
    Over,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Under => "under",
            Mode::Over => "over",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "under" => Ok(Mode::Under),
            "over" => Ok(Mode::Over),
            _ => Err(format!("unknown mode '{s}' (expected under or over)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub node: NodeId,
    pub line: u32,
    pub state: String,
    pub fact: String,
    /// Calling contexts in which the state is non-bottom.
    pub contexts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub mode: Mode,
    pub automaton: String,
    pub domain: String,
    /// Rejection points, by source line.
    pub reject_lines: Vec<u32>,
    pub warnings: Vec<Warning>,
    pub notes: Vec<String>,
}

impl ConformanceReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    /// Distinct file states with a warning.
    pub fn warning_states(&self) -> BTreeSet<&str> {
        self.warnings.iter().map(|w| w.state.as_str()).collect()
    }

    /// Distinct program points with a warning.
    pub fn warning_lines(&self) -> BTreeSet<u32> {
        self.warnings.iter().map(|w| w.line).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("reports serialize")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}-acceptance check, automaton {}, domain {}", self.mode, self.automaton, self.domain);
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        for w in &self.warnings {
            let at = if self.mode == Mode::Over { "exit".to_string() } else { format!("line {}", w.line) };
            let _ = writeln!(s, "warning: {at} reachable in {}: {}", w.state, w.fact);
        }
        let _ = writeln!(
            s,
            "{} warning(s) at {} point(s) over {} file state(s)",
            self.warnings.len(),
            self.warning_lines().len(),
            self.warning_states().len()
        );
        s
    }
}

fn reject_nodes(cfg: &Cfg) -> Vec<NodeId> {
    let mut v: Vec<(u32, NodeId)> = cfg.nodes.iter().filter(|n| n.reject).map(|n| (n.line, n.id)).collect();
    v.sort();
    v.into_iter().map(|(_, n)| n).collect()
}

fn warnings_at<D: Domain>(
    d: &D,
    sol: &crate::lifted::Solution<D::Value>,
    cfg: &Cfg,
    node: NodeId,
    keep: impl Fn(usize) -> bool,
) -> Vec<Warning> {
    let joined = sol.at(d, node);
    joined
        .iter()
        .filter(|(q, _)| keep(*q))
        .map(|(q, v)| Warning {
            node,
            line: cfg.node(node).line,
            state: sol.states[q].clone(),
            fact: d.describe(v),
            contexts: sol.contexts(node).filter(|(_, f)| f.get(q).is_some()).count(),
        })
        .collect()
}

const NO_REJECTS: &str = "no statement is marked as a rejection point";

/// One warning per rejection point and file state with a non-bottom fact
/// under the well-formed automaton.
pub fn check_under_acceptance<D: Domain>(
    cfg: &Cfg,
    wellformed: &InputAutomaton,
    d: &D,
) -> Result<ConformanceReport, LiftedError> {
    let rejects = reject_nodes(cfg);
    let mut report = ConformanceReport {
        mode: Mode::Under,
        automaton: wellformed.name.clone(),
        domain: d.name(),
        reject_lines: rejects.iter().map(|&n| cfg.node(n).line).collect(),
        warnings: Vec::new(),
        notes: Vec::new(),
    };
    if rejects.is_empty() {
        report.notes.push(NO_REJECTS.into());
        return Ok(report);
    }
    let sol = analyze(cfg, wellformed, d, &Options::default())?;
    for n in rejects {
        report.warnings.extend(warnings_at(d, &sol, cfg, n, |_| true));
    }
    Ok(report)
}

/// Analyze under the full automaton with rejection points blocking; warn
/// for every file state at exit that is not final in `wellformed`.
pub fn check_over_acceptance<D: Domain>(
    cfg: &Cfg,
    wellformed: &InputAutomaton,
    d: &D,
) -> Result<ConformanceReport, LiftedError> {
    let rejects = reject_nodes(cfg);
    let full = wellformed.extend_to_full();
    let mut report = ConformanceReport {
        mode: Mode::Over,
        automaton: wellformed.name.clone(),
        domain: d.name(),
        reject_lines: rejects.iter().map(|&n| cfg.node(n).line).collect(),
        warnings: Vec::new(),
        notes: Vec::new(),
    };
    if rejects.is_empty() {
        report.notes.push(NO_REJECTS.into());
    }
    let sol = analyze(cfg, &full, d, &Options { block_rejects: true, ..Options::default() })?;
    report.warnings = warnings_at(d, &sol, cfg, cfg.exit, |q| !wellformed.is_final(q));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::testenv::*;
    use crate::domains::{AnalysisEnv, Cp};
    use crate::formatspec::FormatSpec;
    use crate::minilang::{build_cfg, parse_program};
    use std::sync::Arc;

    #[test]
    fn running_example_has_no_under_acceptance() {
        let (env, spec) = running();
        let cfg = build_cfg(&env.program);
        let r = check_under_acceptance(&cfg, spec.automaton("wellformed").unwrap(), &Cp::new(env.clone())).unwrap();
        assert_eq!(r.reject_lines, vec![34]);
        assert!(r.is_clean(), "{}", r.render_text());
    }

    #[test]
    fn unchecked_trailers_over_accept() {
        let p = Arc::new(parse_program(include_str!("../../fixtures/running_no_trl_check.mcbl")).unwrap());
        let spec = FormatSpec::parse(include_str!("../../fixtures/running.ffs")).unwrap();
        let env = AnalysisEnv::new(p.clone(), Some(&spec)).unwrap();
        let cfg = build_cfg(&p);
        let r = check_over_acceptance(&cfg, spec.automaton("wellformed").unwrap(), &Cp::new(env)).unwrap();
        assert!(!r.is_clean());
        assert!(r.warnings.iter().all(|w| w.node == cfg.exit));
        assert!(r.warning_states().contains("q_x"));
    }

    #[test]
    fn no_rejects_gives_a_note() {
        let src = "DATA DIVISION.\nFILE f INPUT BUFFER b LENGTH 3.\nPROCEDURE DIVISION.\n    OPEN INPUT f.\n    READ f END-READ.\n    STOP RUN.\n";
        let p = Arc::new(parse_program(src).unwrap());
        let spec = FormatSpec::parse("layout l length 3\nfield t at 0 len 3\ntype A layout l where t == \"AAA\"\nautomaton w start s final e\ntrans s -A-> a\ntrans a -eof-> e\n").unwrap();
        let env = AnalysisEnv::new(p.clone(), Some(&spec)).unwrap();
        let cfg = build_cfg(&p);
        let r = check_under_acceptance(&cfg, spec.automaton("w").unwrap(), &Cp::new(env)).unwrap();
        assert!(r.is_clean());
        assert_eq!(r.notes, vec![NO_REJECTS.to_string()]);
    }
}
