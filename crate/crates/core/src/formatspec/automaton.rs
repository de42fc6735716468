use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::SpecError;

pub type StateId = usize;

/// A transition label: a record type, the complement type NA, or eof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Type(usize),
    Unmatched,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: StateId,
    pub label: Label,
    pub to: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputAutomaton {
    pub name: String,
    pub states: Vec<String>,
    pub start: StateId,
    pub finals: BTreeSet<StateId>,
    pub transitions: Vec<Transition>,
    /// Names of the record types labels refer to.
    pub type_names: Vec<String>,
}

impl InputAutomaton {
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals.contains(&q)
    }

    pub fn label_name(&self, l: Label) -> String {
        match l {
            Label::Type(t) => self.type_names[t].clone(),
            Label::Unmatched => "NA".into(),
            Label::Eof => "eof".into(),
        }
    }

    pub fn outgoing(&self, q: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == q)
    }

    pub fn step(&self, from: &BTreeSet<StateId>, label: Label) -> BTreeSet<StateId> {
        self.transitions.iter().filter(|t| t.label == label && from.contains(&t.from)).map(|t| t.to).collect()
    }

    /// Every state whose type language contains `seq`.
    pub fn states_after(&self, seq: &[Label]) -> BTreeSet<StateId> {
        let mut cur = BTreeSet::from([self.start]);
        for &l in seq {
            cur = self.step(&cur, l);
        }
        cur
    }

    /// Like [`states_after`](Self::states_after) where each record may carry
    /// several labels.
    pub fn states_after_sets(&self, seq: &[Vec<Label>]) -> BTreeSet<StateId> {
        let mut cur = BTreeSet::from([self.start]);
        for ls in seq {
            cur = ls.iter().flat_map(|&l| self.step(&cur, l)).collect();
        }
        cur
    }

    /// True iff `seq` followed by eof reaches a final state.
    pub fn accepts(&self, seq: &[Label]) -> bool {
        !self.step(&self.states_after(seq), Label::Eof).is_empty()
    }

    pub fn accepts_sets(&self, seq: &[Vec<Label>]) -> bool {
        !self.step(&self.states_after_sets(seq), Label::Eof).is_empty()
    }

    /// Check the structural invariants. Returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>, SpecError> {
        let err = |m: String| Err(SpecError::Invalid { automaton: self.name.clone(), message: m });
        let n = self.states.len();
        if self.finals.is_empty() {
            return err("no final state".into());
        }
        if self.start >= n {
            return err("start state does not exist".into());
        }
        if self.is_final(self.start) {
            return err(format!("start state '{}' is final", self.states[self.start]));
        }
        for t in &self.transitions {
            let d = self.describe(t);
            if (t.label == Label::Eof) != self.is_final(t.to) {
                return err(format!("transition {d}: eof edges must lead exactly to final states"));
            }
            if self.is_final(t.from) {
                return err(format!("transition {d}: final states have no outgoing transitions"));
            }
        }
        let fwd = self.reach(&[self.start], false);
        let finals: Vec<StateId> = self.finals.iter().copied().collect();
        let bwd = self.reach(&finals, true);
        for q in 0..n {
            if !self.is_final(q) && !(fwd.contains(&q) && bwd.contains(&q)) {
                return err(format!(
                    "state '{}' is not on any path from the start state to a final state",
                    self.states[q]
                ));
            }
        }
        let mut warnings = Vec::new();
        for q in 0..n {
            let incoming: BTreeSet<Label> =
                self.transitions.iter().filter(|t| t.to == q && t.label != Label::Eof).map(|t| t.label).collect();
            if incoming.len() > 1 {
                let names: Vec<String> = incoming.iter().map(|&l| self.label_name(l)).collect();
                warnings.push(format!(
                    "automaton '{}': transitions into '{}' carry different types ({})",
                    self.name,
                    self.states[q],
                    names.join(", ")
                ));
            }
        }
        Ok(warnings)
    }

    fn reach(&self, from: &[StateId], backward: bool) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = from.iter().copied().collect();
        let mut queue: VecDeque<StateId> = from.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for t in &self.transitions {
                let (a, b) = if backward { (t.to, t.from) } else { (t.from, t.to) };
                if a == q && seen.insert(b) {
                    queue.push_back(b);
                }
            }
        }
        seen
    }

    pub fn describe(&self, t: &Transition) -> String {
        format!("{} -{}-> {}", self.states[t.from], self.label_name(t.label), self.states[t.to])
    }

    fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.states.contains(&name) {
            name.push('\'');
        }
        name
    }

    /// Extend to an automaton that accepts every file: a sink `q_y` absorbs
    /// records no original state can take, including the complement type
    /// NA; a new final `q_x` takes eof from every non-final state that has
    /// no eof edge of its own.
    pub fn extend_to_full(&self) -> InputAutomaton {
        let mut full = self.clone();
        full.name = format!("{}+full", self.name);
        let qy = full.states.len();
        full.states.push(full.fresh_name("q_y"));
        let mut labels: Vec<Label> = (0..self.type_names.len()).map(Label::Type).collect();
        labels.push(Label::Unmatched);
        let mut added = Vec::new();
        for q in 0..=qy {
            if q < qy && self.is_final(q) {
                continue;
            }
            for &l in &labels {
                if !full.transitions.iter().any(|t| t.from == q && t.label == l) {
                    added.push(Transition { from: q, label: l, to: qy });
                }
            }
        }
        full.transitions.extend(added);
        if !full.transitions.iter().any(|t| t.to == qy && t.from != qy) {
            full.transitions.retain(|t| t.from != qy && t.to != qy);
            full.states.pop();
        }
        let qx = full.states.len();
        full.states.push(full.fresh_name("q_x"));
        for q in 0..qx {
            if !full.is_final(q) && !full.transitions.iter().any(|t| t.from == q && t.label == Label::Eof) {
                full.transitions.push(Transition { from: q, label: Label::Eof, to: qx });
            }
        }
        full.finals.insert(qx);
        full
    }

    /// The one-state automaton: every record keeps the file in `q_0`.
    pub fn universal(type_names: &[String]) -> InputAutomaton {
        let mut transitions: Vec<Transition> =
            (0..type_names.len()).map(|t| Transition { from: 0, label: Label::Type(t), to: 0 }).collect();
        transitions.push(Transition { from: 0, label: Label::Unmatched, to: 0 });
        transitions.push(Transition { from: 0, label: Label::Eof, to: 1 });
        InputAutomaton {
            name: "universal".into(),
            states: vec!["q_0".into(), "q_f".into()],
            start: 0,
            finals: BTreeSet::from([1]),
            transitions,
            type_names: type_names.to_vec(),
        }
    }
}

impl fmt::Display for InputAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let finals: Vec<&str> = self.finals.iter().map(|&q| self.states[q].as_str()).collect();
        writeln!(f, "automaton {} start {} final {}", self.name, self.states[self.start], finals.join(","))?;
        for t in &self.transitions {
            writeln!(f, "trans {}", self.describe(t))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formatspec::FormatSpec;

    fn spec() -> FormatSpec {
        FormatSpec::parse(include_str!("../../fixtures/running.ffs")).unwrap()
    }

    #[test]
    fn full_automaton_of_the_batch_format() {
        let s = spec();
        let full = s.automaton("wellformed").unwrap().extend_to_full();
        assert_eq!(full.states.len(), 8);
        assert!(full.validate().is_ok());
        assert_eq!(full.state_id("q_x").map(|q| full.is_final(q)), Some(true));
    }

    #[test]
    fn full_automaton_accepts_everything() {
        let s = spec();
        let full = s.automaton("wellformed").unwrap().extend_to_full();
        let mut labels: Vec<Label> = (0..s.types.len()).map(Label::Type).collect();
        labels.push(Label::Unmatched);
        let mut seqs: Vec<Vec<Label>> = vec![vec![]];
        let mut frontier = seqs.clone();
        for _ in 0..3 {
            frontier =
                frontier.iter().flat_map(|s| labels.iter().map(move |&l| [s.clone(), vec![l]].concat())).collect();
            seqs.extend(frontier.iter().cloned());
        }
        for seq in &seqs {
            assert!(!full.states_after(seq).is_empty());
            assert!(full.accepts(seq), "{seq:?}");
        }
    }

    #[test]
    fn sink_pruned_when_already_total() {
        let names = vec!["A".to_string()];
        let u = InputAutomaton::universal(&names);
        let full = u.extend_to_full();
        assert_eq!(full.states, vec!["q_0", "q_f", "q_x"]);
        assert_eq!(full.transitions.len(), u.transitions.len());
    }

    #[test]
    fn sink_absorbs_records_of_the_empty_format() {
        let s = spec();
        let full = s.automaton("empty_only").unwrap().extend_to_full();
        let qy = full.state_id("q_y").unwrap();
        for t in 0..s.types.len() {
            assert_eq!(full.states_after(&[Label::Type(t)]), BTreeSet::from([qy]));
        }
        assert!(full.accepts(&[Label::Unmatched, Label::Type(0)]));
    }

    #[test]
    fn validation_errors() {
        let bad_eof = "layout l length 1\nfield a at 0 len 1\ntype A layout l\nautomaton x start p final f\ntrans p -eof-> q\ntrans p -A-> f\n";
        assert!(FormatSpec::parse(bad_eof).is_err());
        let dead = "layout l length 1\nfield a at 0 len 1\ntype A layout l\nautomaton x start p final f\ntrans p -eof-> f\ntrans p -A-> d\n";
        assert!(FormatSpec::parse(dead).is_err());
        let ok = "automaton x start q_s final q_e\ntrans q_s -eof-> q_e\n";
        let s = FormatSpec::parse(ok).unwrap();
        let a = s.automaton("x").unwrap();
        assert!(a.accepts(&[]));
        assert!(!a.accepts(&[Label::Unmatched]));
    }

    #[test]
    fn thumb_rule_is_only_a_warning() {
        let text = "layout l length 1\nfield a at 0 len 1\ntype A layout l where a == \"a\"\ntype B layout l where a == \"b\"\nautomaton x start p final f\ntrans p -A-> q\ntrans p -B-> q\ntrans q -eof-> f\n";
        let s = FormatSpec::parse(text).unwrap();
        assert_eq!(s.warnings.len(), 1);
    }
}
