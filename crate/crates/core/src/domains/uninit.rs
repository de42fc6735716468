use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::minilang::{NodeKind, Operand};

/// Bytes that may hold an undefined value. `Bottom` is unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UninitValue {
    Bottom,
    Maybe(BTreeSet<ByteLoc>),
}

impl UninitValue {
    /// True if some byte of `s` may be undefined.
    pub fn possibly_uninit(&self, s: Slice) -> bool {
        match self {
            UninitValue::Bottom => false,
            UninitValue::Maybe(set) => bytes_of(s).any(|b| set.contains(&b)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Uninit {
    env: Arc<AnalysisEnv>,
}

impl Uninit {
    pub fn new(env: Arc<AnalysisEnv>) -> Uninit {
        Uninit { env }
    }

    fn set_all(set: &mut BTreeSet<ByteLoc>, s: Slice, undef: bool) {
        for b in bytes_of(s) {
            if undef {
                set.insert(b);
            } else {
                set.remove(&b);
            }
        }
    }
}

impl Domain for Uninit {
    type Value = UninitValue;

    fn name(&self) -> String {
        "uninit".into()
    }

    fn env(&self) -> &AnalysisEnv {
        &self.env
    }

    fn bottom(&self) -> UninitValue {
        UninitValue::Bottom
    }

    fn initial(&self) -> UninitValue {
        let mut set = BTreeSet::new();
        for b in self.env.buffers() {
            if self.env.program.buffer(b).value.is_none() {
                set.extend(bytes_of(self.env.whole(b)));
            }
        }
        UninitValue::Maybe(set)
    }

    fn is_bottom(&self, v: &UninitValue) -> bool {
        *v == UninitValue::Bottom
    }

    fn join(&self, a: &UninitValue, b: &UninitValue) -> UninitValue {
        match (a, b) {
            (UninitValue::Bottom, x) | (x, UninitValue::Bottom) => x.clone(),
            (UninitValue::Maybe(x), UninitValue::Maybe(y)) => UninitValue::Maybe(x | y),
        }
    }

    fn leq(&self, a: &UninitValue, b: &UninitValue) -> bool {
        match (a, b) {
            (UninitValue::Bottom, _) => true,
            (_, UninitValue::Bottom) => false,
            (UninitValue::Maybe(x), UninitValue::Maybe(y)) => x.is_subset(y),
        }
    }

    fn transfer_stmt(&self, node: &CfgNode, v: &UninitValue) -> UninitValue {
        let UninitValue::Maybe(set) = v else { return UninitValue::Bottom };
        let mut set = set.clone();
        match &node.kind {
            NodeKind::Move { src, dst } => {
                let d = dst.slice;
                // Byte-wise copy; padding bytes are defined.
                let status: Vec<bool> = (0..d.len)
                    .map(|i| match src {
                        Operand::Slice(r) if i < r.slice.len => set.contains(&(r.slice.buffer, r.slice.offset + i)),
                        _ => false,
                    })
                    .collect();
                for (i, u) in status.into_iter().enumerate() {
                    Self::set_all(&mut set, Slice::new(d.buffer, d.offset + i as u32, 1), u);
                }
            }
            NodeKind::Add { src, dst } => {
                let undef = v.possibly_uninit(dst.slice) || src.slice().is_some_and(|s| v.possibly_uninit(s));
                Self::set_all(&mut set, dst.slice, undef);
            }
            _ => {}
        }
        UninitValue::Maybe(set)
    }

    fn transfer_branch(&self, _cond: &Cond, _polarity: bool, v: &UninitValue) -> UninitValue {
        v.clone()
    }

    fn transfer_read(&self, _node: &CfgNode, buffer: BufferId, outcome: ReadOutcome, v: &UninitValue) -> UninitValue {
        let UninitValue::Maybe(set) = v else { return UninitValue::Bottom };
        let mut set = set.clone();
        Self::set_all(&mut set, self.env.whole(buffer), outcome == ReadOutcome::Eof);
        UninitValue::Maybe(set)
    }

    fn transfer_lookup(&self, _node: &CfgNode, lookup: &KeyLookup, found: bool, v: &UninitValue) -> UninitValue {
        let UninitValue::Maybe(set) = v else { return UninitValue::Bottom };
        let mut set = set.clone();
        if found {
            Self::set_all(&mut set, lookup.into.slice, false);
        }
        UninitValue::Maybe(set)
    }

    fn describe(&self, v: &UninitValue) -> String {
        match v {
            UninitValue::Bottom => "⊥".into(),
            UninitValue::Maybe(set) => describe_bytes(&self.env, set),
        }
    }
}
