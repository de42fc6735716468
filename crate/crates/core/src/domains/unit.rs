use std::sync::Arc;

use super::*;

/// Plain reachability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UnitValue {
    Bottom,
    Reachable,
}

#[derive(Debug, Clone)]
pub struct Unit {
    env: Arc<AnalysisEnv>,
}

impl Unit {
    pub fn new(env: Arc<AnalysisEnv>) -> Unit {
        Unit { env }
    }
}

impl Domain for Unit {
    type Value = UnitValue;

    fn name(&self) -> String {
        "unit".into()
    }

    fn env(&self) -> &AnalysisEnv {
        &self.env
    }

    fn bottom(&self) -> UnitValue {
        UnitValue::Bottom
    }

    fn initial(&self) -> UnitValue {
        UnitValue::Reachable
    }

    fn is_bottom(&self, v: &UnitValue) -> bool {
        *v == UnitValue::Bottom
    }

    fn join(&self, a: &UnitValue, b: &UnitValue) -> UnitValue {
        *a.max(b)
    }

    fn leq(&self, a: &UnitValue, b: &UnitValue) -> bool {
        a <= b
    }

    fn transfer_stmt(&self, _node: &CfgNode, v: &UnitValue) -> UnitValue {
        *v
    }

    fn transfer_branch(&self, _cond: &Cond, _polarity: bool, v: &UnitValue) -> UnitValue {
        *v
    }

    fn transfer_read(&self, _node: &CfgNode, _buffer: BufferId, _outcome: ReadOutcome, v: &UnitValue) -> UnitValue {
        *v
    }

    fn transfer_lookup(&self, _node: &CfgNode, _lookup: &KeyLookup, _found: bool, v: &UnitValue) -> UnitValue {
        *v
    }

    fn describe(&self, v: &UnitValue) -> String {
        match v {
            UnitValue::Bottom => "⊥".into(),
            UnitValue::Reachable => "reachable".into(),
        }
    }

    fn supports(&self, _d: Direction) -> bool {
        true
    }

    fn transfer_backward(&self, _node: &CfgNode, v: &UnitValue) -> Option<UnitValue> {
        Some(*v)
    }
}
