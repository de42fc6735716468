//! The program file state graph: the CFG exploded over file states, keeping
//! only the node copies and edges a lifted solution finds feasible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::domains::{Direction, Domain, ReadOutcome};
use crate::formatspec::{FormatSpec, InputAutomaton, Label, StateId, Tables};
use crate::lifted::{read_targets, ReadStep, Solution};
use crate::minilang::{Cfg, EdgeLabel, NodeId, NodeKind};
use crate::oracle::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PfsgError {
    #[error("solution and graph disagree: {0}")]
    Mismatch(String),
    #[error("domain {domain} has no {direction} transfer functions")]
    Direction { domain: String, direction: &'static str },
}

/// A node copy `(m, q)`.
pub type PNode = (NodeId, StateId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PEdge {
    pub from: PNode,
    pub to: PNode,
    pub label: EdgeLabel,
    /// The automaton step taken, on edges out of primary READs.
    pub step: Option<ReadStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pfsg {
    pub automaton: String,
    pub states: Vec<String>,
    pub cfg_nodes: usize,
    pub entry: PNode,
    pub nodes: BTreeSet<PNode>,
    pub edges: BTreeSet<PEdge>,
}

fn is_primary_read(cfg: &Cfg, n: NodeId, primary: Option<crate::minilang::BufferId>) -> bool {
    matches!(cfg.node(n).kind, NodeKind::Read { buffer, .. } if Some(buffer) == primary)
}

/// Explode `cfg` over the states of `a`. A READ edge follows the automaton
/// steps of its class; other edges stay in their column. Either way both
/// ends must have a non-bottom fact in `sol`.
pub fn build_pfsg<D: Domain>(
    cfg: &Cfg,
    a: &InputAutomaton,
    d: &D,
    sol: &Solution<D::Value>,
) -> Result<Pfsg, PfsgError> {
    if sol.node_count != cfg.len() {
        return Err(PfsgError::Mismatch(format!("{} nodes in the solution, {} in the CFG", sol.node_count, cfg.len())));
    }
    if sol.states != a.states {
        return Err(PfsgError::Mismatch(format!("solution is over '{}', not '{}'", sol.automaton, a.name)));
    }
    let facts: Vec<BTreeSet<StateId>> = (0..cfg.len()).map(|n| sol.at(d, n).states().collect()).collect();
    let live = |n: NodeId, q: StateId| facts[n].contains(&q);
    let primary = d.env().primary;
    let mut edges = BTreeSet::new();
    let (at_end, not_at_end) = (read_targets(a, EdgeLabel::AtEnd), read_targets(a, EdgeLabel::NotAtEnd));
    for e in &cfg.edges {
        if is_primary_read(cfg, e.from, primary) {
            let steps = if e.label == EdgeLabel::AtEnd { &at_end } else { &not_at_end };
            for s in steps.iter().filter(|s| live(e.from, s.from) && live(e.to, s.to)) {
                edges.insert(PEdge { from: (e.from, s.from), to: (e.to, s.to), label: e.label, step: Some(*s) });
            }
        } else {
            for q in (0..a.states.len()).filter(|&q| live(e.from, q) && live(e.to, q)) {
                edges.insert(PEdge { from: (e.from, q), to: (e.to, q), label: e.label, step: None });
            }
        }
    }
    let entry = (cfg.entry, a.start);
    let mut nodes: BTreeSet<PNode> = edges.iter().flat_map(|e| [e.from, e.to]).collect();
    nodes.insert(entry);
    Ok(Pfsg { automaton: a.name.clone(), states: a.states.clone(), cfg_nodes: cfg.len(), entry, nodes, edges })
}

impl Pfsg {
    pub fn succ(&self, n: PNode) -> impl Iterator<Item = &PEdge> {
        let lo = PEdge { from: n, to: (0, 0), label: EdgeLabel::Fallthrough, step: None };
        self.edges.range(lo..).take_while(move |e| e.from == n)
    }

    pub fn has_edge(&self, from: PNode, to: PNode) -> bool {
        self.succ(from).any(|e| e.to == to)
    }

    /// Copies of a CFG node.
    pub fn copies(&self, m: NodeId) -> impl Iterator<Item = PNode> + '_ {
        self.nodes.range((m, 0)..=(m, usize::MAX)).copied()
    }

    fn label(&self, cfg: &Cfg, (m, q): PNode) -> String {
        let n = cfg.node(m);
        let at = match n.kind {
            NodeKind::Entry => "entry".to_string(),
            NodeKind::Exit => "exit".to_string(),
            _ => n.line.to_string(),
        };
        format!("{at}/{}", self.states[q])
    }

    /// Graphviz text with one cluster per file state. Edge labels name
    /// both ends as `(line,state)`.
    pub fn export_dot(&self, cfg: &Cfg) -> String {
        let id = |(m, q): PNode| format!("n{m}_{q}");
        let short = |(m, q): PNode| {
            let n = cfg.node(m);
            let at = match n.kind {
                NodeKind::Entry => "entry".to_string(),
                NodeKind::Exit => "exit".to_string(),
                _ => n.line.to_string(),
            };
            format!("({at},{})", self.states[q])
        };
        let mut s = String::new();
        let _ = writeln!(s, "digraph pfsg {{");
        let _ =
            writeln!(s, "  // automaton {}: {} nodes, {} edges", self.automaton, self.nodes.len(), self.edges.len());
        let _ = writeln!(s, "  node [shape=box, fontname=\"monospace\"];");
        for (q, name) in self.states.iter().enumerate() {
            let members: Vec<PNode> = self.nodes.iter().filter(|n| n.1 == q).copied().collect();
            if members.is_empty() {
                continue;
            }
            let _ = writeln!(s, "  subgraph \"cluster_{name}\" {{");
            let _ = writeln!(s, "    label=\"{name}\";");
            for n in members {
                let shape = if n == self.entry { ", style=bold" } else { "" };
                let _ = writeln!(s, "    {} [label=\"{}\"{shape}];", id(n), self.label(cfg, n));
            }
            let _ = writeln!(s, "  }}");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  {} -> {} [label=\"{}->{}\"];", id(e.from), id(e.to), short(e.from), short(e.to));
        }
        let _ = writeln!(s, "}}");
        s
    }

    pub fn to_json(&self, cfg: &Cfg) -> serde_json::Value {
        #[derive(Serialize)]
        struct N {
            node: NodeId,
            line: u32,
            kind: &'static str,
            state: String,
        }
        #[derive(Serialize)]
        struct E {
            from: (NodeId, String),
            to: (NodeId, String),
            edge: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            sigma: Option<String>,
        }
        let st = |q: StateId| self.states[q].clone();
        let nodes: Vec<N> = self
            .nodes
            .iter()
            .map(|&(m, q)| N { node: m, line: cfg.node(m).line, kind: cfg.node(m).kind.name(), state: st(q) })
            .collect();
        let edges: Vec<E> = self
            .edges
            .iter()
            .map(|e| E {
                from: (e.from.0, st(e.from.1)),
                to: (e.to.0, st(e.to.1)),
                edge: format!("{:?}", e.label).to_lowercase(),
                sigma: e.step.map(|s| match s.outcome {
                    ReadOutcome::Record(t) => format!("type {t}"),
                    ReadOutcome::Unmatched => "NA".into(),
                    ReadOutcome::Eof => "eof".into(),
                }),
            })
            .collect();
        serde_json::json!({
            "automaton": self.automaton,
            "entry": [self.entry.0, st(self.entry.1)],
            "node_count": self.nodes.len(),
            "edge_count": self.edges.len(),
            "nodes": nodes,
            "edges": edges,
        })
    }
}

/// True iff every edge of `p1` is an edge of `p2`.
pub fn compare_pfsg_precision(p1: &Pfsg, p2: &Pfsg) -> Result<bool, PfsgError> {
    if p1.cfg_nodes != p2.cfg_nodes || p1.states != p2.states {
        return Err(PfsgError::Mismatch("graphs over different programs or automatons".into()));
    }
    Ok(p1.edges.is_subset(&p2.edges))
}

/// Facts per node copy from a run on the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PfsgSolution<V> {
    pub direction: Direction,
    pub facts: BTreeMap<PNode, V>,
}

impl<V: Clone> PfsgSolution<V> {
    /// The fact at `(m, q)`; bottom if the copy was never reached.
    pub fn get<D: Domain<Value = V>>(&self, d: &D, n: PNode) -> V {
        self.facts.get(&n).cloned().unwrap_or_else(|| d.bottom())
    }

    /// Join over every copy of `m`.
    pub fn flat<D: Domain<Value = V>>(&self, d: &D, m: NodeId) -> V {
        self.facts.range((m, 0)..=(m, usize::MAX)).fold(d.bottom(), |acc, (_, v)| d.join(&acc, v))
    }
}

fn edge_transfer<D: Domain>(cfg: &Cfg, d: &D, e: &PEdge, v: &D::Value) -> D::Value {
    let node = cfg.node(e.from.0);
    match (&node.kind, e.step) {
        (NodeKind::Read { buffer, .. }, Some(s)) => d.transfer_read(node, *buffer, s.outcome, v),
        (NodeKind::Read { buffer, .. }, None) => d.transfer_read(node, *buffer, ReadOutcome::Eof, v),
        (NodeKind::KeyRead(l), _) => d.transfer_lookup(node, l, e.label == EdgeLabel::KeyFound, v),
        (NodeKind::If(c) | NodeKind::Loop(c), _) => d.transfer_branch(c, e.label == EdgeLabel::True, v),
        _ => d.transfer_stmt(node, v),
    }
}

/// Run `d` on the graph, treating each copy `(m, q)` as statement `m`.
/// Forward facts hold before a node; backward facts before it too, given
/// the join over its successors after it.
pub fn analyze_on_pfsg<D: Domain>(
    p: &Pfsg,
    cfg: &Cfg,
    d: &D,
    direction: Direction,
) -> Result<PfsgSolution<D::Value>, PfsgError> {
    if !d.supports(direction) {
        let direction = if direction == Direction::Forward { "forward" } else { "backward" };
        return Err(PfsgError::Direction { domain: d.name(), direction });
    }
    let mut facts: BTreeMap<PNode, D::Value> = BTreeMap::new();
    let mut work: BTreeSet<PNode> = BTreeSet::new();
    match direction {
        Direction::Forward => {
            facts.insert(p.entry, d.initial());
            work.insert(p.entry);
            while let Some(n) = work.pop_first() {
                let v = facts[&n].clone();
                for e in p.succ(n) {
                    let out = edge_transfer(cfg, d, e, &v);
                    let old = facts.get(&e.to).cloned().unwrap_or_else(|| d.bottom());
                    if !d.leq(&out, &old) {
                        facts.insert(e.to, d.join(&old, &out));
                        work.insert(e.to);
                    }
                }
            }
        }
        Direction::Backward => {
            let mut preds: BTreeMap<PNode, Vec<PNode>> = BTreeMap::new();
            let mut succs: BTreeMap<PNode, Vec<PNode>> = BTreeMap::new();
            for e in &p.edges {
                preds.entry(e.to).or_default().push(e.from);
                succs.entry(e.from).or_default().push(e.to);
            }
            work.extend(p.nodes.iter().copied());
            while let Some(n) = work.pop_last() {
                let after = if n.0 == cfg.exit {
                    d.backward_initial()
                } else {
                    succs
                        .get(&n)
                        .into_iter()
                        .flatten()
                        .fold(d.bottom(), |acc, s| facts.get(s).map_or(acc.clone(), |v| d.join(&acc, v)))
                };
                let before = d.transfer_backward(cfg.node(n.0), &after).expect("supported direction");
                if facts.get(&n) != Some(&before) {
                    facts.insert(n, before);
                    work.extend(preds.get(&n).into_iter().flatten().copied());
                }
            }
        }
    }
    facts.retain(|_, v| !d.is_bottom(v));
    Ok(PfsgSolution { direction, facts })
}

/// A trace step the graph cannot follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathFailure {
    pub step: usize,
    pub node: NodeId,
    pub line: u32,
}

/// Follow `trace` through the graph from its entry. READ edges must take
/// an automaton step whose label the record actually carries.
pub fn check_trace_path(
    p: &Pfsg,
    cfg: &Cfg,
    spec: &FormatSpec,
    tables: Option<&Tables>,
    file: &[Vec<u8>],
    trace: &Trace,
) -> Result<(), PathFailure> {
    let mut cur: BTreeSet<PNode> = BTreeSet::from([p.entry]);
    for (i, w) in trace.steps.windows(2).enumerate() {
        let (s, t) = (&w[0], &w[1]);
        let record = (t.consumed > s.consumed).then(|| spec.record_labels(&file[s.consumed], tables));
        let allowed = |e: &PEdge| match (e.step, &record) {
            (None, _) => true,
            (Some(st), Some(ls)) => match st.outcome {
                ReadOutcome::Record(ty) => ls.contains(&Label::Type(ty)),
                ReadOutcome::Unmatched => ls.contains(&Label::Unmatched),
                ReadOutcome::Eof => false,
            },
            (Some(st), None) => st.outcome == ReadOutcome::Eof,
        };
        cur = cur.iter().flat_map(|&n| p.succ(n)).filter(|e| e.to.0 == t.node && allowed(e)).map(|e| e.to).collect();
        if cur.is_empty() {
            return Err(PathFailure { step: i + 1, node: t.node, line: cfg.node(t.node).line });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::testenv::*;
    use crate::domains::{Cp, Live, Uninit, Unit};
    use crate::lifted::{analyze, Options};
    use crate::minilang::build_cfg;

    fn at(cfg: &Cfg, line: u32) -> NodeId {
        cfg.nodes_at_line(line)[0]
    }

    fn setup() -> (Cfg, crate::formatspec::FormatSpec, std::sync::Arc<crate::domains::AnalysisEnv>) {
        let (env, spec) = running();
        (build_cfg(&env.program), spec, env)
    }

    #[test]
    fn first_read_fans_out_to_header_columns() {
        let (cfg, spec, env) = setup();
        let a = spec.automaton("wellformed").unwrap();
        let d = Cp::new(env);
        let g = build_pfsg(&cfg, a, &d, &analyze(&cfg, a, &d, &Options::default()).unwrap()).unwrap();
        let q = |n: &str| a.state_id(n).unwrap();
        let (read, lp) = (at(&cfg, 13), at(&cfg, 14));
        let succ: Vec<PNode> = g.succ((read, q("q_s"))).map(|e| e.to).collect();
        assert_eq!(succ, vec![(lp, q("q_sh")), (lp, q("q_dh"))]);
        assert!(!g.has_edge((at(&cfg, 15), q("q_sh")), (at(&cfg, 16), q("q_sh"))));
        assert!(g.edges.iter().all(|e| cfg.has_edge(e.from.0, e.to.0)));
    }

    #[test]
    fn cp_graph_is_strictly_inside_the_unit_graph() {
        let (cfg, spec, env) = setup();
        let a = spec.automaton("wellformed").unwrap();
        let cp = Cp::new(env.clone());
        let unit = Unit::new(env);
        let g1 = build_pfsg(&cfg, a, &cp, &analyze(&cfg, a, &cp, &Options::default()).unwrap()).unwrap();
        let g2 = build_pfsg(&cfg, a, &unit, &analyze(&cfg, a, &unit, &Options::default()).unwrap()).unwrap();
        assert!(compare_pfsg_precision(&g1, &g2).unwrap());
        assert!(!compare_pfsg_precision(&g2, &g1).unwrap());
        assert!(compare_pfsg_precision(&g1, &g1).unwrap());
    }

    #[test]
    fn uninit_on_the_graph_sees_the_flag_set() {
        let (cfg, spec, env) = setup();
        let a = spec.automaton("wellformed").unwrap();
        let cp = Cp::new(env.clone());
        let g = build_pfsg(&cfg, a, &cp, &analyze(&cfg, a, &cp, &Options::default()).unwrap()).unwrap();
        let u = Uninit::new(env.clone());
        let s = analyze_on_pfsg(&g, &cfg, &u, Direction::Forward).unwrap();
        let flag = slice(&env, "same-flag");
        let guard = at(&cfg, 17);
        assert!(g.copies(guard).count() > 0);
        for c in g.copies(guard) {
            assert!(!s.get(&u, c).possibly_uninit(flag));
        }
        assert!(!s.flat(&u, guard).possibly_uninit(flag));
    }

    #[test]
    fn backward_needs_a_backward_domain() {
        let (cfg, spec, env) = setup();
        let a = spec.automaton("wellformed").unwrap();
        let cp = Cp::new(env.clone());
        let g = build_pfsg(&cfg, a, &cp, &analyze(&cfg, a, &cp, &Options::default()).unwrap()).unwrap();
        assert!(matches!(analyze_on_pfsg(&g, &cfg, &cp, Direction::Backward), Err(PfsgError::Direction { .. })));
        let live = Live::new(env.clone());
        let s = analyze_on_pfsg(&g, &cfg, &live, Direction::Backward).unwrap();
        // same-flag is read at the guard, so it is live before every copy.
        let flag = slice(&env, "same-flag");
        assert!(g.copies(at(&cfg, 17)).all(|c| s.get(&live, c).is_live(flag)));
    }

    #[test]
    fn dot_is_deterministic_and_clustered() {
        let (cfg, spec, env) = setup();
        let a = spec.automaton("wellformed").unwrap();
        let cp = Cp::new(env);
        let sol = analyze(&cfg, a, &cp, &Options::default()).unwrap();
        let t1 = build_pfsg(&cfg, a, &cp, &sol).unwrap().export_dot(&cfg);
        let t2 = build_pfsg(&cfg, a, &cp, &sol).unwrap().export_dot(&cfg);
        assert_eq!(t1, t2);
        assert!(t1.contains("subgraph \"cluster_q_sh\""));
        assert!(t1.contains("label=\"(13,q_s)->(14,q_sh)\""));
    }
}
