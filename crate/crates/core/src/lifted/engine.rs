use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::domains::ReadOutcome;
use crate::formatspec::{InputAutomaton, Label};
use crate::minilang::{Cfg, CfgNode, Edge, EdgeLabel, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    /// Reject-flagged nodes send bottom to all successors.
    pub block_rejects: bool,
    pub max_visits: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { block_rejects: false, max_visits: 5_000_000 }
    }
}

/// One way a primary READ can move the file state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReadStep {
    pub from: StateId,
    pub outcome: ReadOutcome,
    pub to: StateId,
}

fn outcome(l: Label) -> ReadOutcome {
    match l {
        Label::Type(t) => ReadOutcome::Record(t),
        Label::Unmatched => ReadOutcome::Unmatched,
        Label::Eof => ReadOutcome::Eof,
    }
}

/// The automaton steps a primary READ takes along an edge of class
/// `label`: eof steps into final states feed the at-end successor, the
/// rest the not-at-end one. A final state rereads eof and stays put.
pub fn read_targets(a: &InputAutomaton, label: EdgeLabel) -> Vec<ReadStep> {
    let at_end = label == EdgeLabel::AtEnd;
    let mut out: Vec<ReadStep> = a
        .transitions
        .iter()
        .filter(|t| a.is_final(t.to) == at_end)
        .map(|t| ReadStep { from: t.from, outcome: outcome(t.label), to: t.to })
        .collect();
    if at_end {
        out.extend(a.finals.iter().map(|&q| ReadStep { from: q, outcome: ReadOutcome::Eof, to: q }));
    }
    out.sort();
    out.dedup();
    out
}

struct Space {
    name: String,
    states: Vec<String>,
    start: StateId,
    /// Read steps indexed by source state.
    at_end: Vec<Vec<ReadStep>>,
    not_at_end: Vec<Vec<ReadStep>>,
}

fn by_source(states: usize, steps: Vec<ReadStep>) -> Vec<Vec<ReadStep>> {
    let mut out = vec![Vec::new(); states];
    for s in steps {
        out[s.from].push(s);
    }
    out
}

impl Space {
    fn lifted(a: &InputAutomaton) -> Space {
        Space {
            name: a.name.clone(),
            states: a.states.clone(),
            start: a.start,
            at_end: by_source(a.states.len(), read_targets(a, EdgeLabel::AtEnd)),
            not_at_end: by_source(a.states.len(), read_targets(a, EdgeLabel::NotAtEnd)),
        }
    }

    fn direct(types: usize) -> Space {
        let mut not_at_end: Vec<ReadStep> =
            (0..types).map(|t| ReadStep { from: 0, outcome: ReadOutcome::Record(t), to: 0 }).collect();
        not_at_end.push(ReadStep { from: 0, outcome: ReadOutcome::Unmatched, to: 0 });
        Space {
            name: "direct".into(),
            states: vec!["*".into()],
            start: 0,
            at_end: vec![vec![ReadStep { from: 0, outcome: ReadOutcome::Eof, to: 0 }]],
            not_at_end: vec![not_at_end],
        }
    }
}

/// The calling context after following an edge labelled `label`; `None`
/// for a return to a site other than the innermost call.
fn next_context(ctx: &Context, label: EdgeLabel) -> Option<Context> {
    match label {
        EdgeLabel::Call(site) => {
            let mut c = ctx.clone();
            c.push(site);
            Some(c)
        }
        EdgeLabel::Return(site) if ctx.last() == Some(&site) => Some(ctx[..ctx.len() - 1].to_vec()),
        EdgeLabel::Return(_) => None,
        _ => Some(ctx.clone()),
    }
}

struct Engine<'a, D: Domain> {
    cfg: &'a Cfg,
    d: &'a D,
    space: Space,
    opts: Options,
}

impl<D: Domain> Engine<'_, D> {
    fn transfer(&self, node: &CfgNode, e: &Edge, fact: &LiftedFact<D::Value>) -> LiftedFact<D::Value> {
        let d = self.d;
        if self.opts.block_rejects && node.reject {
            return LiftedFact::new();
        }
        match &node.kind {
            NodeKind::Read { buffer, .. } if Some(*buffer) == d.env().primary => {
                let steps = if e.label == EdgeLabel::AtEnd { &self.space.at_end } else { &self.space.not_at_end };
                let mut out = LiftedFact::new();
                for (q, v) in fact.iter() {
                    for s in &steps[q] {
                        out.join_at(d, s.to, d.transfer_read(node, *buffer, s.outcome, v));
                    }
                }
                out
            }
            NodeKind::Read { buffer, .. } => {
                fact.map_values(d, |v| d.transfer_read(node, *buffer, ReadOutcome::Eof, v))
            }
            NodeKind::KeyRead(l) => {
                let found = e.label == EdgeLabel::KeyFound;
                fact.map_values(d, |v| d.transfer_lookup(node, l, found, v))
            }
            NodeKind::If(c) | NodeKind::Loop(c) => {
                let pol = e.label == EdgeLabel::True;
                fact.map_values(d, |v| d.transfer_branch(c, pol, v))
            }
            _ => fact.map_values(d, |v| d.transfer_stmt(node, v)),
        }
    }

    fn run(self) -> Result<Solution<D::Value>, LiftedError> {
        let cfg = self.cfg;
        let mut rank = vec![usize::MAX; cfg.len()];
        for (i, n) in cfg.reverse_postorder().into_iter().enumerate() {
            rank[n] = i;
        }
        let mut facts: BTreeMap<(NodeId, Context), LiftedFact<D::Value>> = BTreeMap::new();
        // States whose value changed since the point was last visited.
        let mut dirty: BTreeMap<(NodeId, Context), BTreeSet<StateId>> = BTreeMap::new();
        let mut work: BTreeSet<(usize, NodeId, Context)> = BTreeSet::new();
        facts.insert((cfg.entry, Vec::new()), LiftedFact::singleton(self.d, self.space.start, self.d.initial()));
        dirty.insert((cfg.entry, Vec::new()), BTreeSet::from([self.space.start]));
        work.insert((rank[cfg.entry], cfg.entry, Vec::new()));
        let mut visits = 0;
        while let Some((_, n, ctx)) = work.pop_first() {
            visits += 1;
            if visits > self.opts.max_visits {
                return Err(LiftedError::NoConvergence { visits });
            }
            let key = (n, ctx);
            let changed = dirty.remove(&key).unwrap_or_default();
            let all = &facts[&key];
            let mut fact = LiftedFact::new();
            for q in changed {
                if let Some(v) = all.get(q) {
                    fact.join_at(self.d, q, v.clone());
                }
            }
            let ctx = key.1;
            let node = cfg.node(n);
            for e in cfg.succ_edges(n) {
                let Some(ctx2) = next_context(&ctx, e.label) else { continue };
                let out = self.transfer(node, e, &fact);
                let key = (e.to, ctx2);
                let target = facts.entry(key.clone()).or_default();
                let grown: Vec<StateId> =
                    out.iter().filter_map(|(q, v)| target.join_at(self.d, q, v.clone()).then_some(q)).collect();
                if !grown.is_empty() {
                    dirty.entry(key.clone()).or_default().extend(grown);
                    work.insert((rank[e.to], key.0, key.1));
                }
            }
        }
        Ok(Solution {
            automaton: self.space.name,
            states: self.space.states,
            domain: self.d.name(),
            iterations: visits,
            node_count: cfg.len(),
            facts,
        })
    }
}

/// Least fixpoint of the lifted analysis, starting from `(q_s, i_L)`.
pub fn analyze<D: Domain>(
    cfg: &Cfg,
    automaton: &InputAutomaton,
    d: &D,
    opts: &Options,
) -> Result<Solution<D::Value>, LiftedError> {
    Engine { cfg, d, space: Space::lifted(automaton), opts: *opts }.run()
}

/// The underlying analysis run directly on the CFG: a READ yields any
/// record type or NA on the not-at-end edge and eof on the at-end edge.
pub fn analyze_direct<D: Domain>(cfg: &Cfg, d: &D, opts: &Options) -> Result<Solution<D::Value>, LiftedError> {
    Engine { cfg, d, space: Space::direct(d.env().types.len()), opts: *opts }.run()
}
