use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::*;

/// Sound, incomplete entailment `c2 => c1`.
pub fn constraint_implies(c2: &Constraint, c1: &Constraint) -> bool {
    c1.atoms.iter().all(|a1| {
        c2.atoms.contains(a1)
            || matches!(a1, Atom::FieldNeq(f, w)
                if c2.atoms.iter().any(|a2| matches!(a2, Atom::FieldEq(g, v) if g == f && v != w)))
    })
}

fn label_implies(spec: &FormatSpec, l2: Label, l1: Label) -> bool {
    match (l2, l1) {
        (Label::Eof, Label::Eof) | (Label::Unmatched, Label::Unmatched) => true,
        (Label::Type(a), Label::Type(b)) => {
            spec.types[a].len == spec.types[b].len
                && constraint_implies(&spec.types[a].constraint, &spec.types[b].constraint)
        }
        _ => false,
    }
}

/// A state map from the refining automaton to the refined one, by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mapping(pub BTreeMap<String, String>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum RefinementVerdict {
    Holds { mapping: Mapping, finals_preserved: bool },
    Fails { witness: Option<String>, reason: String },
}

impl RefinementVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, RefinementVerdict::Holds { .. })
    }
}

struct Ctx<'a> {
    spec: &'a FormatSpec,
    s1: &'a InputAutomaton,
    s2: &'a InputAutomaton,
}

impl Ctx<'_> {
    fn transition_ok(&self, t2: &Transition, m: &[Option<StateId>]) -> Option<bool> {
        let (p1, q1) = (m[t2.from]?, m[t2.to]?);
        let mut candidates = self.s1.transitions.iter().filter(|t| t.from == p1 && t.to == q1).peekable();
        if candidates.peek().is_none() {
            return Some(false);
        }
        Some(candidates.all(|t1| label_implies(self.spec, t2.label, t1.label)))
    }

    fn first_failure(&self, m: &[Option<StateId>]) -> Option<&Transition> {
        self.s2.transitions.iter().find(|t| self.transition_ok(t, m) == Some(false))
    }

    fn search(
        &self,
        order: &[StateId],
        k: usize,
        m: &mut Vec<Option<StateId>>,
        best: &mut (usize, Option<Transition>),
    ) -> bool {
        if let Some(t) = self.first_failure(m) {
            if k >= best.0 {
                *best = (k, Some(*t));
            }
            return false;
        }
        let Some(&q2) = order.get(k) else { return true };
        for q1 in 0..self.s1.states.len() {
            m[q2] = Some(q1);
            if self.search(order, k + 1, m, best) {
                return true;
            }
        }
        m[q2] = None;
        false
    }

    fn verdict(&self, m: &[Option<StateId>]) -> RefinementVerdict {
        let mapping = Mapping(
            m.iter()
                .enumerate()
                .map(|(q2, q1)| (self.s2.states[q2].clone(), self.s1.states[q1.expect("total")].clone()))
                .collect(),
        );
        let finals_preserved = self.s2.finals.iter().all(|&f| m[f].is_some_and(|q| self.s1.is_final(q)));
        RefinementVerdict::Holds { mapping, finals_preserved }
    }
}

/// Decide whether `s2` refines `s1`, verifying `mapping` when given and
/// searching for one otherwise.
pub fn check_refinement(
    spec: &FormatSpec,
    s1: &InputAutomaton,
    s2: &InputAutomaton,
    mapping: Option<&Mapping>,
) -> RefinementVerdict {
    let ctx = Ctx { spec, s1, s2 };
    let n2 = s2.states.len();
    if let Some(given) = mapping {
        let mut m = vec![None; n2];
        for (q2, name) in s2.states.iter().enumerate() {
            let Some(target) = given.0.get(name) else {
                return RefinementVerdict::Fails {
                    witness: None,
                    reason: format!("mapping has no entry for '{name}'"),
                };
            };
            let Some(q1) = s1.state_id(target) else {
                return RefinementVerdict::Fails {
                    witness: None,
                    reason: format!("'{target}' is not a state of '{}'", s1.name),
                };
            };
            m[q2] = Some(q1);
        }
        if m[s2.start] != Some(s1.start) {
            return RefinementVerdict::Fails {
                witness: None,
                reason: "start state is not mapped to the start state".into(),
            };
        }
        return match ctx.first_failure(&m) {
            Some(t) => RefinementVerdict::Fails {
                witness: Some(s2.describe(t)),
                reason: "no compatible transition in the refined automaton".into(),
            },
            None => ctx.verdict(&m),
        };
    }

    // BFS order from the start keeps related states adjacent and prunes early.
    let mut order = vec![s2.start];
    let mut queue = VecDeque::from([s2.start]);
    while let Some(q) = queue.pop_front() {
        for t in s2.outgoing(q) {
            if !order.contains(&t.to) {
                order.push(t.to);
                queue.push_back(t.to);
            }
        }
    }
    let rest: Vec<StateId> = (0..n2).filter(|q| !order.contains(q)).collect();
    order.extend(rest);
    let mut m = vec![None; n2];
    m[s2.start] = Some(s1.start);
    let mut best = (0, None);
    if ctx.search(&order, 1, &mut m, &mut best) {
        ctx.verdict(&m)
    } else {
        RefinementVerdict::Fails {
            witness: best.1.map(|t| s2.describe(&t)),
            reason: "no state mapping satisfies the transition conditions".into(),
        }
    }
}
