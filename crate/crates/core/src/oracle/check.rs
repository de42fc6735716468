use std::collections::BTreeSet;
use std::fmt;

use super::*;
use crate::formatspec::{FormatSpec, InputAutomaton, Label, StateId};
use crate::lifted::{LiftedFact, Solution};
use crate::minilang::{Cfg, NodeId};

/// What the oracle may run: enumeration depth and per-trace fuel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_records: usize,
    pub fuel: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_records: 4, fuel: DEFAULT_FUEL }
    }
}

/// The fixed inputs of a check: program, spec and table snapshot.
#[derive(Clone, Copy)]
pub struct Harness<'a> {
    pub env: &'a AnalysisEnv,
    pub cfg: &'a Cfg,
    pub spec: &'a FormatSpec,
    pub tables: Option<&'a Tables>,
    pub fuel: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckStats {
    pub files: usize,
    pub traces: usize,
    pub steps: usize,
}

/// A concrete state the analysis result does not cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub file: Vec<String>,
    pub node: NodeId,
    pub line: u32,
    pub states: Vec<String>,
    pub fact: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "before line {} (node {}) on file [{}] in states {{{}}}: state not in {}",
            self.line,
            self.node,
            self.file.join(", "),
            self.states.join(", "),
            self.fact
        )
    }
}

pub(crate) fn render_record(r: &[u8]) -> String {
    String::from_utf8_lossy(r).trim_end().to_string()
}

/// File states after the first `consumed` records, then eof if the trace
/// already saw the end. Finals reread eof in place.
fn file_states(a: &InputAutomaton, labels: &[Vec<Label>], consumed: usize, at_eof: bool) -> BTreeSet<StateId> {
    let s = a.states_after_sets(&labels[..consumed]);
    if !at_eof {
        return s;
    }
    let mut e = a.step(&s, Label::Eof);
    e.extend(s.iter().copied().filter(|&q| a.is_final(q)));
    e
}

/// Run every file and check each visited state against the solution. With
/// an automaton the state must lie in the join over the file states its
/// consumed prefix can reach; without one, in the join over all states.
pub fn soundness_check<D: Concretize>(
    h: &Harness<'_>,
    d: &D,
    sol: &Solution<D::Value>,
    automaton: Option<&InputAutomaton>,
    files: &FileSet,
) -> Result<CheckStats, Violation> {
    let mut stats = CheckStats::default();
    let empty = LiftedFact::new();
    for file in files.iter() {
        stats.files += 1;
        let labels: Vec<Vec<Label>> = file.iter().map(|r| h.spec.record_labels(r, h.tables)).collect();
        for t in concrete_exec(h.env, h.cfg, file, h.tables, h.fuel) {
            stats.traces += 1;
            let mut at_eof = false;
            for (i, s) in t.steps.iter().enumerate() {
                stats.steps += 1;
                // The previous node was a READ that hit the end.
                if i > 0 {
                    let prev = &t.steps[i - 1];
                    at_eof |= prev.consumed == s.consumed
                        && matches!(h.cfg.node(prev.node).kind, crate::minilang::NodeKind::Read { buffer, .. } if Some(buffer) == h.env.primary);
                }
                let fact = sol.facts.get(&(s.node, s.ctx.clone())).unwrap_or(&empty);
                let (v, states) = match automaton {
                    Some(a) => {
                        let qs = file_states(a, &labels, s.consumed, at_eof);
                        let v =
                            fact.iter().filter(|(q, _)| qs.contains(q)).fold(d.bottom(), |acc, (_, v)| d.join(&acc, v));
                        (v, qs.iter().map(|&q| a.states[q].clone()).collect())
                    }
                    None => (fact.flatten(d), Vec::new()),
                };
                if !d.contains(&v, &s.state, h.tables) {
                    let n = h.cfg.node(s.node);
                    return Err(Violation {
                        file: file.iter().map(|r| render_record(r)).collect(),
                        node: s.node,
                        line: n.line,
                        states,
                        fact: d.describe(&v),
                    });
                }
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::testenv::*;
    use crate::lifted::{analyze, analyze_direct, Options};
    use crate::minilang::build_cfg;

    fn files(spec: &FormatSpec, a: Option<&InputAutomaton>, n: usize) -> FileSet {
        let u = record_universe(spec, None);
        enumerate_files(spec, a, &u, None, n).unwrap()
    }

    #[test]
    fn cp_uninit_is_sound_on_wellformed_files() {
        let (env, spec) = running();
        let cfg = build_cfg(&env.program);
        let a = spec.automaton("wellformed").unwrap();
        let d = Product::new(Cp::new(env.clone()), Uninit::new(env.clone()));
        let sol = analyze(&cfg, a, &d, &Options::default()).unwrap();
        let h = Harness { env: &env, cfg: &cfg, spec: &spec, tables: None, fuel: DEFAULT_FUEL };
        let st = soundness_check(&h, &d, &sol, Some(a), &files(&spec, Some(a), 8)).unwrap();
        assert!(st.files > 10 && st.steps > 20 * st.files);
    }

    #[test]
    fn direct_cp_is_sound_on_all_short_files() {
        let (env, spec) = running();
        let cfg = build_cfg(&env.program);
        let d = Cp::new(env.clone());
        let sol = analyze_direct(&cfg, &d, &Options::default()).unwrap();
        let h = Harness { env: &env, cfg: &cfg, spec: &spec, tables: None, fuel: DEFAULT_FUEL };
        soundness_check(&h, &d, &sol, None, &files(&spec, None, 3)).unwrap();
    }

    #[test]
    fn a_wrong_automaton_is_caught() {
        let (env, spec) = running();
        let cfg = build_cfg(&env.program);
        let d = Cp::new(env.clone());
        // Analyze assuming SAME-only batches, then run DIFF batches.
        let sol = analyze(&cfg, spec.automaton("same_only").unwrap(), &d, &Options::default()).unwrap();
        let h = Harness { env: &env, cfg: &cfg, spec: &spec, tables: None, fuel: DEFAULT_FUEL };
        let diff = spec.automaton("diff_only").unwrap();
        let v = soundness_check(&h, &d, &sol, None, &files(&spec, Some(diff), 3)).unwrap_err();
        assert!(v.to_string().contains("DIFF"), "{v}");
    }
}
