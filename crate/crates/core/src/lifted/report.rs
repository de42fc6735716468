use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::*;
use crate::minilang::Cfg;

/// The facts before one node, by file state name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointReport {
    pub node: NodeId,
    pub line: u32,
    pub kind: &'static str,
    pub states: BTreeMap<String, String>,
}

/// One report per executable node and the exit, in line order. The key is
/// the source line, suffixed `.k` for the k-th further node on that line.
pub fn point_reports<D: Domain>(cfg: &Cfg, d: &D, sol: &Solution<D::Value>) -> Vec<(String, PointReport)> {
    let mut nodes: Vec<&crate::minilang::CfgNode> = cfg.nodes.iter().filter(|n| n.is_executable()).collect();
    nodes.sort_by_key(|n| (n.line, n.id));
    nodes.push(cfg.node(cfg.exit));
    let mut out = Vec::new();
    let mut last: Option<(u32, usize)> = None;
    for n in nodes {
        let key = if n.id == cfg.exit {
            "exit".to_string()
        } else {
            let k = match last {
                Some((l, k)) if l == n.line => k + 1,
                _ => 0,
            };
            last = Some((n.line, k));
            if k == 0 {
                n.line.to_string()
            } else {
                format!("{}.{}", n.line, k)
            }
        };
        let states = sol.at(d, n.id).iter().map(|(q, v)| (sol.states[q].clone(), d.describe(v))).collect();
        out.push((key, PointReport { node: n.id, line: n.line, kind: n.kind.name(), states }));
    }
    out
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    automaton: &'a str,
    domain: &'a str,
    iterations: usize,
    points: BTreeMap<String, PointReport>,
}

/// Deterministic JSON keyed by line, then file state.
pub fn solution_json<D: Domain>(cfg: &Cfg, d: &D, sol: &Solution<D::Value>) -> serde_json::Value {
    let doc = SolutionDoc {
        automaton: &sol.automaton,
        domain: &sol.domain,
        iterations: sol.iterations,
        points: point_reports(cfg, d, sol).into_iter().collect(),
    };
    serde_json::to_value(doc).expect("solution documents serialize")
}

/// One table per point, unreachable states omitted.
pub fn render_text<D: Domain>(cfg: &Cfg, d: &D, sol: &Solution<D::Value>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "automaton {} domain {}", sol.automaton, sol.domain);
    for (key, p) in point_reports(cfg, d, sol) {
        let _ = writeln!(s, "before {key} ({})", p.kind);
        if p.states.is_empty() {
            let _ = writeln!(s, "  unreachable");
        }
        for (q, v) in &p.states {
            let _ = writeln!(s, "  {q}: {v}");
        }
    }
    s
}
