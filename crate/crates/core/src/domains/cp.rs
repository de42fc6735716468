use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::minilang::{fit, render_bytes, CmpOp, NodeKind, Operand};

/// Constant propagation over slices. An absent key is non-constant;
/// `Bottom` is unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CpValue {
    Bottom,
    Known(BTreeMap<Slice, Vec<u8>>),
}

impl CpValue {
    pub fn top() -> CpValue {
        CpValue::Known(BTreeMap::new())
    }

    pub fn get(&self, s: Slice) -> Option<&[u8]> {
        match self {
            CpValue::Bottom => None,
            CpValue::Known(m) => m.get(&s).map(|v| &v[..]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cp {
    env: Arc<AnalysisEnv>,
}

type Map = BTreeMap<Slice, Vec<u8>>;

/// Per-byte knowledge of an operand.
fn known_bytes(m: &Map, s: Slice) -> Vec<Option<u8>> {
    let mut out = vec![None; s.len as usize];
    for (k, v) in m.range(Slice::new(s.buffer, 0, 0)..) {
        if k.buffer != s.buffer {
            break;
        }
        if !k.overlaps(&s) {
            continue;
        }
        for i in k.offset.max(s.offset)..k.end().min(s.end()) {
            out[(i - s.offset) as usize] = Some(v[(i - k.offset) as usize]);
        }
    }
    out
}

fn operand_bytes(m: &Map, o: &Operand) -> Vec<Option<u8>> {
    match o {
        Operand::Lit(l) => l.iter().map(|&b| Some(b)).collect(),
        Operand::Slice(r) => known_bytes(m, r.slice),
    }
}

fn full(bytes: &[Option<u8>]) -> Option<Vec<u8>> {
    bytes.iter().copied().collect()
}

/// Equality of two operands where the shorter is space padded.
fn eq3(a: &[Option<u8>], b: &[Option<u8>]) -> Option<bool> {
    let n = a.len().max(b.len());
    let at = |v: &[Option<u8>], i: usize| if i < v.len() { v[i] } else { Some(b' ') };
    let mut all = true;
    for i in 0..n {
        match (at(a, i), at(b, i)) {
            (Some(x), Some(y)) if x != y => return Some(false),
            (Some(_), Some(_)) => {}
            _ => all = false,
        }
    }
    all.then_some(true)
}

impl Cp {
    pub fn new(env: Arc<AnalysisEnv>) -> Cp {
        Cp { env }
    }

    fn kill(&self, m: &mut Map, s: Slice) {
        m.retain(|k, _| !k.overlaps(&s));
    }

    /// Record `s = v` and the values of tracked slices inside `s`.
    fn assume(&self, m: &mut Map, s: Slice, v: &[u8]) {
        for u in self.env.covered(s) {
            let from = (u.offset - s.offset) as usize;
            m.insert(u, v[from..from + u.len as usize].to_vec());
        }
        m.insert(s, v.to_vec());
    }

    fn assign(&self, m: &mut Map, s: Slice, v: Option<Vec<u8>>) {
        self.kill(m, s);
        if let Some(v) = v {
            self.assume(m, s, &fit(&v, s.len as usize));
        }
    }

    /// Truth of `c` in every state `v` represents; `None` when unknown or
    /// `v` is bottom.
    pub fn truth(&self, c: &Cond, v: &CpValue) -> Option<bool> {
        match v {
            CpValue::Bottom => None,
            CpValue::Known(m) => self.eval(c, m),
        }
    }

    /// Three-valued truth of `c`.
    pub fn eval(&self, c: &Cond, m: &Map) -> Option<bool> {
        match c {
            Cond::Cmp { lhs, op, rhs } => {
                let eq = eq3(&operand_bytes(m, lhs), &operand_bytes(m, rhs))?;
                Some(if *op == CmpOp::Eq { eq } else { !eq })
            }
            Cond::And(cs) => {
                let vs: Vec<Option<bool>> = cs.iter().map(|c| self.eval(c, m)).collect();
                if vs.contains(&Some(false)) {
                    Some(false)
                } else if vs.iter().all(|v| *v == Some(true)) {
                    Some(true)
                } else {
                    None
                }
            }
            Cond::Or(cs) => {
                let vs: Vec<Option<bool>> = cs.iter().map(|c| self.eval(c, m)).collect();
                if vs.contains(&Some(true)) {
                    Some(true)
                } else if vs.iter().all(|v| *v == Some(false)) {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }

    fn refine(&self, c: &Cond, polarity: bool, m: &mut Map) -> bool {
        if self.eval(c, m) == Some(!polarity) {
            return false;
        }
        match c {
            Cond::Cmp { lhs, op, rhs } if (*op == CmpOp::Eq) == polarity => {
                let (lb, rb) = (operand_bytes(m, lhs), operand_bytes(m, rhs));
                if let (Operand::Slice(l), Some(v)) = (lhs, full(&rb)) {
                    self.assume(m, l.slice, &fit(&v, l.slice.len as usize));
                } else if let (Operand::Slice(r), Some(v)) = (rhs, full(&lb)) {
                    self.assume(m, r.slice, &fit(&v, r.slice.len as usize));
                }
                true
            }
            Cond::And(cs) if polarity => cs.iter().all(|c| self.refine(c, true, m)),
            Cond::Or(cs) if !polarity => cs.iter().all(|c| self.refine(c, false, m)),
            _ => true,
        }
    }
}

impl Domain for Cp {
    type Value = CpValue;

    fn name(&self) -> String {
        "cp".into()
    }

    fn env(&self) -> &AnalysisEnv {
        &self.env
    }

    fn bottom(&self) -> CpValue {
        CpValue::Bottom
    }

    fn initial(&self) -> CpValue {
        let mut m = Map::new();
        for b in self.env.buffers() {
            if let Some(v) = &self.env.program.buffer(b).value {
                self.assume(&mut m, self.env.whole(b), v);
            }
        }
        CpValue::Known(m)
    }

    fn is_bottom(&self, v: &CpValue) -> bool {
        *v == CpValue::Bottom
    }

    fn join(&self, a: &CpValue, b: &CpValue) -> CpValue {
        match (a, b) {
            (CpValue::Bottom, x) | (x, CpValue::Bottom) => x.clone(),
            (CpValue::Known(x), CpValue::Known(y)) => {
                CpValue::Known(x.iter().filter(|(k, v)| y.get(k) == Some(v)).map(|(k, v)| (*k, v.clone())).collect())
            }
        }
    }

    fn leq(&self, a: &CpValue, b: &CpValue) -> bool {
        match (a, b) {
            (CpValue::Bottom, _) => true,
            (_, CpValue::Bottom) => false,
            (CpValue::Known(x), CpValue::Known(y)) => y.iter().all(|(k, v)| x.get(k) == Some(v)),
        }
    }

    fn transfer_stmt(&self, node: &CfgNode, v: &CpValue) -> CpValue {
        let CpValue::Known(m) = v else { return CpValue::Bottom };
        let mut m = m.clone();
        match &node.kind {
            NodeKind::Move { src, dst } => {
                let val = full(&operand_bytes(&m, src));
                self.assign(&mut m, dst.slice, val);
            }
            NodeKind::Add { dst, .. } => self.kill(&mut m, dst.slice),
            _ => {}
        }
        CpValue::Known(m)
    }

    fn transfer_branch(&self, cond: &Cond, polarity: bool, v: &CpValue) -> CpValue {
        let CpValue::Known(m) = v else { return CpValue::Bottom };
        let mut m = m.clone();
        if self.refine(cond, polarity, &mut m) {
            CpValue::Known(m)
        } else {
            CpValue::Bottom
        }
    }

    fn transfer_read(&self, _node: &CfgNode, buffer: BufferId, outcome: ReadOutcome, v: &CpValue) -> CpValue {
        let CpValue::Known(m) = v else { return CpValue::Bottom };
        let mut m = m.clone();
        self.kill(&mut m, self.env.whole(buffer));
        if let ReadOutcome::Record(t) = outcome {
            if Some(buffer) == self.env.primary {
                for (s, lit) in &self.env.types[t].eqs {
                    self.assume(&mut m, *s, lit);
                }
            }
        }
        CpValue::Known(m)
    }

    fn transfer_lookup(&self, _node: &CfgNode, lookup: &KeyLookup, found: bool, v: &CpValue) -> CpValue {
        let CpValue::Known(m) = v else { return CpValue::Bottom };
        let mut m = m.clone();
        if found {
            self.kill(&mut m, lookup.into.slice);
        }
        CpValue::Known(m)
    }

    fn describe(&self, v: &CpValue) -> String {
        match v {
            CpValue::Bottom => "⊥".into(),
            CpValue::Known(m) => {
                let items: Vec<String> = m
                    .iter()
                    .filter(|(k, _)| self.is_named(**k, m))
                    .map(|(k, v)| format!("{}='{}'", self.env.slice_name(k), render_bytes(v)))
                    .collect();
                format!("<{}>", items.join(", "))
            }
        }
    }
}

impl Cp {
    /// Hide constants implied by a larger known slice.
    fn is_named(&self, k: Slice, m: &Map) -> bool {
        !m.keys().any(|o| *o != k && o.covers(&k))
    }
}
