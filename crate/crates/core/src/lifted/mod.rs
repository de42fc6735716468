//! The lifted analysis over `Q -> L`: a worklist fixpoint that tracks one
//! underlying value per file state, plus solution queries, precision
//! comparison and serialization.

mod engine;
mod report;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domains::Domain;
use crate::formatspec::StateId;
use crate::minilang::NodeId;

pub use engine::{analyze, analyze_direct, read_targets, Options, ReadStep};
pub use report::{point_reports, render_text, solution_json, PointReport};

/// Call sites of the active PERFORMs, innermost last.
pub type Context = Vec<NodeId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftedError {
    #[error("no fixpoint after {visits} node visits; a transfer function is probably not monotone")]
    NoConvergence { visits: usize },
    #[error("solutions are over different programs ({0} vs {1} nodes)")]
    Mismatch(usize, usize),
}

/// A map from file states to non-bottom values. Absent states are bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedFact<V> {
    map: BTreeMap<StateId, V>,
}

impl<V> Default for LiftedFact<V> {
    fn default() -> Self {
        LiftedFact { map: BTreeMap::new() }
    }
}

impl<V: Clone> LiftedFact<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton<D: Domain<Value = V>>(d: &D, q: StateId, v: V) -> Self {
        let mut f = Self::new();
        f.join_at(d, q, v);
        f
    }

    pub fn get(&self, q: StateId) -> Option<&V> {
        self.map.get(&q)
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &V)> {
        self.map.iter().map(|(q, v)| (*q, v))
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.map.keys().copied()
    }

    pub fn is_bottom(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Join `v` into state `q`; true if the fact grew.
    pub fn join_at<D: Domain<Value = V>>(&mut self, d: &D, q: StateId, v: V) -> bool {
        if d.is_bottom(&v) {
            return false;
        }
        match self.map.get_mut(&q) {
            None => {
                self.map.insert(q, v);
                true
            }
            Some(old) if d.leq(&v, old) => false,
            Some(old) => {
                *old = d.join(old, &v);
                true
            }
        }
    }

    pub fn join<D: Domain<Value = V>>(&mut self, d: &D, other: &LiftedFact<V>) -> bool {
        let mut changed = false;
        for (q, v) in other.iter() {
            changed |= self.join_at(d, q, v.clone());
        }
        changed
    }

    pub fn map_values<D: Domain<Value = V>>(&self, d: &D, f: impl Fn(&V) -> V) -> Self {
        let mut out = Self::new();
        for (q, v) in self.iter() {
            out.join_at(d, q, f(v));
        }
        out
    }

    /// Join over all file states.
    pub fn flatten<D: Domain<Value = V>>(&self, d: &D) -> V {
        self.map.values().fold(d.bottom(), |acc, v| d.join(&acc, v))
    }

    pub fn leq<D: Domain<Value = V>>(&self, d: &D, other: &LiftedFact<V>) -> bool {
        self.iter().all(|(q, v)| other.get(q).is_some_and(|w| d.leq(v, w)))
    }
}

/// A fixpoint: the fact before every reachable program point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution<V> {
    pub automaton: String,
    /// File state names; a single pseudo-state for direct runs.
    pub states: Vec<String>,
    pub domain: String,
    pub iterations: usize,
    pub node_count: usize,
    pub facts: BTreeMap<(NodeId, Context), LiftedFact<V>>,
}

impl<V: Clone> Solution<V> {
    pub fn contexts(&self, node: NodeId) -> impl Iterator<Item = (&Context, &LiftedFact<V>)> {
        self.facts.range((node, Vec::new())..).take_while(move |((n, _), _)| *n == node).map(|((_, c), f)| (c, f))
    }

    /// The fact before `node`, joined over calling contexts.
    pub fn at<D: Domain<Value = V>>(&self, d: &D, node: NodeId) -> LiftedFact<V> {
        let mut out = LiftedFact::new();
        for (_, f) in self.contexts(node) {
            out.join(d, f);
        }
        out
    }

    pub fn flatten<D: Domain<Value = V>>(&self, d: &D, node: NodeId) -> V {
        self.at(d, node).flatten(d)
    }

    /// Bottom in every state and every context.
    pub fn unreachable(&self, node: NodeId) -> bool {
        self.contexts(node).all(|(_, f)| f.is_bottom())
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    /// Non-bottom states before `node`, by name.
    pub fn state_names_at<D: Domain<Value = V>>(&self, d: &D, node: NodeId) -> Vec<String> {
        self.at(d, node).states().map(|q| self.states[q].clone()).collect()
    }
}

/// The outcome of comparing two solutions at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointVerdict {
    pub node: NodeId,
    /// Every state of the first solution is below some state of the second.
    pub pointwise: bool,
    /// The joined first solution is below the joined second one.
    pub flat: bool,
}

/// Compare `g1` against `g2` node by node over the same program.
pub fn compare_solution_precision<D: Domain>(
    d: &D,
    g1: &Solution<D::Value>,
    g2: &Solution<D::Value>,
) -> Result<Vec<PointVerdict>, LiftedError> {
    if g1.node_count != g2.node_count {
        return Err(LiftedError::Mismatch(g1.node_count, g2.node_count));
    }
    Ok((0..g1.node_count)
        .map(|n| {
            let (f1, f2) = (g1.at(d, n), g2.at(d, n));
            let pointwise = f1.iter().all(|(_, v1)| f2.iter().any(|(_, v2)| d.leq(v1, v2)));
            let flat = d.leq(&f1.flatten(d), &f2.flatten(d));
            PointVerdict { node: n, pointwise, flat }
        })
        .collect())
}

/// True when every point satisfies both orderings.
pub fn more_precise<D: Domain>(d: &D, g1: &Solution<D::Value>, g2: &Solution<D::Value>) -> Result<bool, LiftedError> {
    Ok(compare_solution_precision(d, g1, g2)?.iter().all(|v| v.pointwise && v.flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::testenv::running;
    use crate::domains::{Cp, Unit};
    use crate::minilang::build_cfg;

    #[test]
    fn bottom_values_are_not_stored() {
        let (env, _) = running();
        let d = Unit::new(env);
        let mut f = LiftedFact::new();
        assert!(!f.join_at(&d, 3, d.bottom()));
        assert!(f.is_bottom());
        assert!(f.join_at(&d, 3, d.initial()));
        assert!(!f.join_at(&d, 3, d.initial()));
        assert_eq!(f.states().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn a_solution_is_as_precise_as_itself() {
        let (env, spec) = running();
        let cfg = build_cfg(&env.program);
        let d = Cp::new(env);
        let sol = analyze(&cfg, spec.automaton("wellformed").unwrap(), &d, &Options::default()).unwrap();
        assert!(more_precise(&d, &sol, &sol).unwrap());
    }

    #[test]
    fn solutions_over_other_programs_do_not_compare() {
        let (env, spec) = running();
        let cfg = build_cfg(&env.program);
        let d = Cp::new(env);
        let a = analyze(&cfg, spec.automaton("wellformed").unwrap(), &d, &Options::default()).unwrap();
        let mut b = a.clone();
        b.node_count += 1;
        assert_eq!(compare_solution_precision(&d, &a, &b), Err(LiftedError::Mismatch(a.node_count, b.node_count)));
    }
}
