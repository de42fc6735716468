use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::minilang::{NodeId, NodeKind};

/// A definition of `slice` made at `node`. Definitions from the entry
/// node stand for initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Def {
    pub slice: Slice,
    pub node: NodeId,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RdValue {
    Bottom,
    Defs(BTreeSet<Def>),
}

impl RdValue {
    pub fn defs(&self) -> impl Iterator<Item = &Def> {
        match self {
            RdValue::Bottom => None,
            RdValue::Defs(d) => Some(d.iter()),
        }
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone)]
pub struct Rd {
    env: Arc<AnalysisEnv>,
    entry: NodeId,
}

impl Rd {
    pub fn new(env: Arc<AnalysisEnv>) -> Rd {
        Rd { env, entry: 0 }
    }

    /// A write to `s` kills the definitions it fully overwrites.
    fn define(&self, v: &RdValue, s: Slice, node: &CfgNode) -> RdValue {
        let RdValue::Defs(d) = v else { return RdValue::Bottom };
        let mut d: BTreeSet<Def> = d.iter().filter(|x| !s.covers(&x.slice)).copied().collect();
        d.insert(Def { slice: s, node: node.id, line: node.line });
        RdValue::Defs(d)
    }
}

impl Domain for Rd {
    type Value = RdValue;

    fn name(&self) -> String {
        "rd".into()
    }

    fn env(&self) -> &AnalysisEnv {
        &self.env
    }

    fn bottom(&self) -> RdValue {
        RdValue::Bottom
    }

    fn initial(&self) -> RdValue {
        RdValue::Defs(self.env.buffers().map(|b| Def { slice: self.env.whole(b), node: self.entry, line: 0 }).collect())
    }

    fn is_bottom(&self, v: &RdValue) -> bool {
        *v == RdValue::Bottom
    }

    fn join(&self, a: &RdValue, b: &RdValue) -> RdValue {
        match (a, b) {
            (RdValue::Bottom, x) | (x, RdValue::Bottom) => x.clone(),
            (RdValue::Defs(x), RdValue::Defs(y)) => RdValue::Defs(x | y),
        }
    }

    fn leq(&self, a: &RdValue, b: &RdValue) -> bool {
        match (a, b) {
            (RdValue::Bottom, _) => true,
            (_, RdValue::Bottom) => false,
            (RdValue::Defs(x), RdValue::Defs(y)) => x.is_subset(y),
        }
    }

    fn transfer_stmt(&self, node: &CfgNode, v: &RdValue) -> RdValue {
        match &node.kind {
            NodeKind::Move { dst, .. } | NodeKind::Add { dst, .. } => self.define(v, dst.slice, node),
            _ => v.clone(),
        }
    }

    fn transfer_branch(&self, _cond: &Cond, _polarity: bool, v: &RdValue) -> RdValue {
        v.clone()
    }

    fn transfer_read(&self, node: &CfgNode, buffer: BufferId, _outcome: ReadOutcome, v: &RdValue) -> RdValue {
        self.define(v, self.env.whole(buffer), node)
    }

    fn transfer_lookup(&self, node: &CfgNode, lookup: &KeyLookup, found: bool, v: &RdValue) -> RdValue {
        if found {
            self.define(v, lookup.into.slice, node)
        } else {
            v.clone()
        }
    }

    fn describe(&self, v: &RdValue) -> String {
        match v {
            RdValue::Bottom => "⊥".into(),
            RdValue::Defs(d) => {
                let items: Vec<String> = d
                    .iter()
                    .map(|x| {
                        let at = if x.node == self.entry { "init".to_string() } else { x.line.to_string() };
                        format!("{}@{}", self.env.slice_name(&x.slice), at)
                    })
                    .collect();
                format!("{{{}}}", items.join(", "))
            }
        }
    }
}
