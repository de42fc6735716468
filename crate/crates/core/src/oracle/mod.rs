//! Ground truth: file enumeration, a concrete interpreter, and checks of
//! analysis results against observed executions.

mod check;
mod enumerate;
mod exec;

use crate::domains::*;
use crate::formatspec::Tables;
use crate::minilang::{BufferId, Program, Slice};

pub use check::{soundness_check, Bounds, CheckStats, Harness, Violation};
pub use enumerate::{enumerate_files, field_alphabets, record_universe, EnumerateError, FileSet, MAX_FILES};
pub use exec::{concrete_exec, Status, Step, Trace, DEFAULT_FUEL};

/// Memory of a running program: one byte vector per buffer, `None` for an
/// undefined byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteState {
    pub mem: Vec<Vec<Option<u8>>>,
}

impl ConcreteState {
    pub fn initial(p: &Program) -> ConcreteState {
        ConcreteState {
            mem: p
                .buffers
                .iter()
                .map(|b| match &b.value {
                    Some(v) => v.iter().map(|&x| Some(x)).collect(),
                    None => vec![None; b.len as usize],
                })
                .collect(),
        }
    }

    pub fn get(&self, s: Slice) -> &[Option<u8>] {
        &self.mem[s.buffer.index()][s.offset as usize..s.end() as usize]
    }

    /// The bytes of `s` when all are defined.
    pub fn value(&self, s: Slice) -> Option<Vec<u8>> {
        self.get(s).iter().copied().collect()
    }

    pub fn set(&mut self, s: Slice, bytes: &[Option<u8>]) {
        self.mem[s.buffer.index()][s.offset as usize..s.end() as usize].copy_from_slice(bytes);
    }

    pub fn set_defined(&mut self, s: Slice, bytes: &[u8]) {
        let v: Vec<Option<u8>> = bytes.iter().map(|&b| Some(b)).collect();
        self.set(s, &v);
    }

    pub fn buffer(&self, b: BufferId) -> &[Option<u8>] {
        &self.mem[b.index()]
    }
}

/// Membership of a concrete state in the concretization of a value.
pub trait Concretize: Domain {
    fn contains(&self, v: &Self::Value, s: &ConcreteState, tables: Option<&Tables>) -> bool;
}

impl Concretize for Cp {
    fn contains(&self, v: &CpValue, s: &ConcreteState, _t: Option<&Tables>) -> bool {
        match v {
            CpValue::Bottom => false,
            CpValue::Known(m) => m.iter().all(|(k, val)| s.value(*k).as_deref() == Some(&val[..])),
        }
    }
}

impl Concretize for Uninit {
    fn contains(&self, v: &UninitValue, s: &ConcreteState, _t: Option<&Tables>) -> bool {
        match v {
            UninitValue::Bottom => false,
            UninitValue::Maybe(set) => s.mem.iter().enumerate().all(|(b, bytes)| {
                bytes.iter().enumerate().all(|(i, x)| x.is_some() || set.contains(&(BufferId(b as u32), i as u32)))
            }),
        }
    }
}

impl Concretize for Unit {
    fn contains(&self, v: &UnitValue, _s: &ConcreteState, _t: Option<&Tables>) -> bool {
        *v == UnitValue::Reachable
    }
}

// Definitions and liveness describe histories and futures, not states;
// only reachability is checkable.
impl Concretize for Rd {
    fn contains(&self, v: &RdValue, _s: &ConcreteState, _t: Option<&Tables>) -> bool {
        *v != RdValue::Bottom
    }
}

impl Concretize for Live {
    fn contains(&self, _v: &LiveValue, _s: &ConcreteState, _t: Option<&Tables>) -> bool {
        true
    }
}

impl<D1: Concretize, D2: Concretize> Concretize for Product<D1, D2> {
    fn contains(&self, v: &Self::Value, s: &ConcreteState, t: Option<&Tables>) -> bool {
        !self.is_bottom(v) && self.first.contains(&v.first, s, t) && self.second.contains(&v.second, s, t)
    }
}

impl<D: Concretize> Concretize for Integrity<D> {
    fn contains(&self, v: &Self::Value, s: &ConcreteState, t: Option<&Tables>) -> bool {
        let IntegrityValue::Val { preds, inner } = v else { return false };
        let preds_hold = preds.iter().all(|p| match (t, s.value(p.slice)) {
            (None, _) => true,
            (Some(t), Some(val)) => t.contains(&p.table, &val) == p.member,
            // An undefined key may hold anything outside the table.
            (Some(_), None) => !p.member,
        });
        preds_hold && self.inner.contains(inner, s, t)
    }
}
