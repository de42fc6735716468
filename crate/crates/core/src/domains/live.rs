use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::minilang::{NodeKind, Operand};

/// Live bytes: read on some path before being overwritten. A backward
/// domain; `Bottom` means the exit is unreachable from the point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiveValue {
    Bottom,
    Live(BTreeSet<ByteLoc>),
}

impl LiveValue {
    pub fn is_live(&self, s: Slice) -> bool {
        match self {
            LiveValue::Bottom => false,
            LiveValue::Live(set) => bytes_of(s).any(|b| set.contains(&b)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Live {
    env: Arc<AnalysisEnv>,
}

impl Live {
    pub fn new(env: Arc<AnalysisEnv>) -> Live {
        Live { env }
    }
}

fn uses(set: &mut BTreeSet<ByteLoc>, ops: impl IntoIterator<Item = Slice>) {
    for s in ops {
        set.extend(bytes_of(s));
    }
}

fn kill(set: &mut BTreeSet<ByteLoc>, s: Slice) {
    for b in bytes_of(s) {
        set.remove(&b);
    }
}

impl Domain for Live {
    type Value = LiveValue;

    fn name(&self) -> String {
        "live".into()
    }

    fn env(&self) -> &AnalysisEnv {
        &self.env
    }

    fn bottom(&self) -> LiveValue {
        LiveValue::Bottom
    }

    fn initial(&self) -> LiveValue {
        LiveValue::Live(BTreeSet::new())
    }

    fn is_bottom(&self, v: &LiveValue) -> bool {
        *v == LiveValue::Bottom
    }

    fn join(&self, a: &LiveValue, b: &LiveValue) -> LiveValue {
        match (a, b) {
            (LiveValue::Bottom, x) | (x, LiveValue::Bottom) => x.clone(),
            (LiveValue::Live(x), LiveValue::Live(y)) => LiveValue::Live(x | y),
        }
    }

    fn leq(&self, a: &LiveValue, b: &LiveValue) -> bool {
        match (a, b) {
            (LiveValue::Bottom, _) => true,
            (_, LiveValue::Bottom) => false,
            (LiveValue::Live(x), LiveValue::Live(y)) => x.is_subset(y),
        }
    }

    // Forward transfers are the identity: liveness only runs backward.
    fn transfer_stmt(&self, _node: &CfgNode, v: &LiveValue) -> LiveValue {
        v.clone()
    }

    fn transfer_branch(&self, _cond: &Cond, _polarity: bool, v: &LiveValue) -> LiveValue {
        v.clone()
    }

    fn transfer_read(&self, _node: &CfgNode, _buffer: BufferId, _outcome: ReadOutcome, v: &LiveValue) -> LiveValue {
        v.clone()
    }

    fn transfer_lookup(&self, _node: &CfgNode, _lookup: &KeyLookup, _found: bool, v: &LiveValue) -> LiveValue {
        v.clone()
    }

    fn describe(&self, v: &LiveValue) -> String {
        match v {
            LiveValue::Bottom => "⊥".into(),
            LiveValue::Live(set) => describe_bytes(&self.env, set),
        }
    }

    fn supports(&self, d: Direction) -> bool {
        d == Direction::Backward
    }

    fn transfer_backward(&self, node: &CfgNode, v: &LiveValue) -> Option<LiveValue> {
        let LiveValue::Live(set) = v else { return Some(LiveValue::Bottom) };
        let mut set = set.clone();
        match &node.kind {
            NodeKind::Move { src, dst } => {
                kill(&mut set, dst.slice);
                uses(&mut set, src.slice());
            }
            NodeKind::Add { src, dst } => uses(&mut set, src.slice().into_iter().chain([dst.slice])),
            NodeKind::Read { buffer, .. } => kill(&mut set, self.env.whole(*buffer)),
            NodeKind::KeyRead(l) => uses(&mut set, [l.key.slice]),
            NodeKind::Write { buffer } => uses(&mut set, [buffer.slice]),
            NodeKind::If(c) | NodeKind::Loop(c) => uses(&mut set, c.slices()),
            NodeKind::Display(items) => uses(&mut set, items.iter().filter_map(Operand::slice)),
            _ => {}
        }
        Some(LiveValue::Live(set))
    }
}

#[cfg(test)]
mod tests {
    use super::super::testenv::*;
    use super::*;
    use crate::minilang::SliceRef;

    #[test]
    fn move_kills_destination_and_uses_source() {
        let (env, _) = running();
        let l = Live::new(env.clone());
        let sr = |n: &str| SliceRef { text: n.into(), slice: slice(&env, n) };
        let mv = node(NodeKind::Move { src: Operand::Slice(sr("in-rec.pyr")), dst: sr("out-rec.pyr") });
        let after = LiveValue::Live(bytes_of(slice(&env, "out-rec")).collect());
        let before = l.transfer_backward(&mv, &after).unwrap();
        assert!(before.is_live(slice(&env, "in-rec.pyr")));
        assert!(!before.is_live(slice(&env, "out-rec.pyr")));
        assert!(before.is_live(slice(&env, "out-rec.rcv")));
        assert!(l.supports(Direction::Backward) && !l.supports(Direction::Forward));
    }
}
