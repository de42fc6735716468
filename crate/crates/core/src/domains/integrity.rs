use std::collections::BTreeSet;

use super::*;
use crate::minilang::{NodeKind, Operand};

/// `member` true is `isInTable(table, slice)`, false its negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TablePred {
    pub table: String,
    pub slice: Slice,
    pub member: bool,
}

impl TablePred {
    pub fn new(table: &str, slice: Slice, member: bool) -> TablePred {
        TablePred { table: table.to_ascii_lowercase(), slice, member }
    }

    fn negated(&self) -> TablePred {
        TablePred { member: !self.member, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntegrityValue<V> {
    Bottom,
    Val { preds: BTreeSet<TablePred>, inner: V },
}

impl<V> IntegrityValue<V> {
    pub fn preds(&self) -> Option<&BTreeSet<TablePred>> {
        match self {
            IntegrityValue::Bottom => None,
            IntegrityValue::Val { preds, .. } => Some(preds),
        }
    }
}

/// Must-hold table membership facts paired with an inner domain.
#[derive(Debug, Clone)]
pub struct Integrity<D> {
    pub inner: D,
}

impl<D: Domain> Integrity<D> {
    pub fn new(inner: D) -> Self {
        Integrity { inner }
    }

    fn make(&self, preds: BTreeSet<TablePred>, inner: D::Value) -> IntegrityValue<D::Value> {
        if self.inner.is_bottom(&inner) {
            IntegrityValue::Bottom
        } else {
            IntegrityValue::Val { preds, inner }
        }
    }

    fn kill(preds: &BTreeSet<TablePred>, s: Slice) -> BTreeSet<TablePred> {
        preds.iter().filter(|p| !p.slice.overlaps(&s)).cloned().collect()
    }
}

impl<D: Domain> Domain for Integrity<D> {
    type Value = IntegrityValue<D::Value>;

    fn name(&self) -> String {
        format!("integrity({})", self.inner.name())
    }

    fn env(&self) -> &AnalysisEnv {
        self.inner.env()
    }

    fn bottom(&self) -> Self::Value {
        IntegrityValue::Bottom
    }

    fn initial(&self) -> Self::Value {
        self.make(BTreeSet::new(), self.inner.initial())
    }

    fn is_bottom(&self, v: &Self::Value) -> bool {
        matches!(v, IntegrityValue::Bottom)
    }

    fn join(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        match (a, b) {
            (IntegrityValue::Bottom, x) | (x, IntegrityValue::Bottom) => x.clone(),
            (IntegrityValue::Val { preds: p, inner: x }, IntegrityValue::Val { preds: q, inner: y }) => {
                self.make(p & q, self.inner.join(x, y))
            }
        }
    }

    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool {
        match (a, b) {
            (IntegrityValue::Bottom, _) => true,
            (_, IntegrityValue::Bottom) => false,
            (IntegrityValue::Val { preds: p, inner: x }, IntegrityValue::Val { preds: q, inner: y }) => {
                p.is_superset(q) && self.inner.leq(x, y)
            }
        }
    }

    fn transfer_stmt(&self, node: &CfgNode, v: &Self::Value) -> Self::Value {
        let IntegrityValue::Val { preds, inner } = v else { return IntegrityValue::Bottom };
        let preds = match &node.kind {
            NodeKind::Move { src, dst } => {
                let mut out = Self::kill(preds, dst.slice);
                if let Operand::Slice(s) = src {
                    if s.slice.len == dst.slice.len && !s.slice.overlaps(&dst.slice) {
                        out.extend(
                            preds
                                .iter()
                                .filter(|p| p.slice == s.slice)
                                .map(|p| TablePred { slice: dst.slice, ..p.clone() }),
                        );
                    }
                }
                out
            }
            NodeKind::Add { dst, .. } => Self::kill(preds, dst.slice),
            _ => preds.clone(),
        };
        self.make(preds, self.inner.transfer_stmt(node, inner))
    }

    fn transfer_branch(&self, cond: &Cond, polarity: bool, v: &Self::Value) -> Self::Value {
        let IntegrityValue::Val { preds, inner } = v else { return IntegrityValue::Bottom };
        self.make(preds.clone(), self.inner.transfer_branch(cond, polarity, inner))
    }

    fn transfer_read(&self, node: &CfgNode, buffer: BufferId, outcome: ReadOutcome, v: &Self::Value) -> Self::Value {
        let IntegrityValue::Val { preds, inner } = v else { return IntegrityValue::Bottom };
        let env = self.inner.env();
        let mut preds = Self::kill(preds, env.whole(buffer));
        if let ReadOutcome::Record(t) = outcome {
            if Some(buffer) == env.primary {
                preds.extend(env.types[t].tables.iter().cloned());
            }
        }
        self.make(preds, self.inner.transfer_read(node, buffer, outcome, inner))
    }

    fn transfer_lookup(&self, node: &CfgNode, lookup: &KeyLookup, found: bool, v: &Self::Value) -> Self::Value {
        let IntegrityValue::Val { preds, inner } = v else { return IntegrityValue::Bottom };
        let fact = TablePred::new(&lookup.table, lookup.key.slice, found);
        if preds.contains(&fact.negated()) {
            return IntegrityValue::Bottom;
        }
        let mut preds = preds.clone();
        preds.insert(fact);
        if found {
            preds = Self::kill(&preds, lookup.into.slice);
        }
        self.make(preds, self.inner.transfer_lookup(node, lookup, found, inner))
    }

    fn describe(&self, v: &Self::Value) -> String {
        match v {
            IntegrityValue::Bottom => "⊥".into(),
            IntegrityValue::Val { preds, inner } => {
                let env = self.inner.env();
                let ps: Vec<String> = preds
                    .iter()
                    .map(|p| {
                        let f = if p.member { "isInTable" } else { "isNotInTable" };
                        format!("{f}({}, {})", p.table, env.slice_name(&p.slice))
                    })
                    .collect();
                format!("[{}] {}", ps.join(", "), self.inner.describe(inner))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testenv::node;
    use super::*;
    use crate::minilang::{parse_program, resolve_slice, SliceRef};
    use std::sync::Arc;

    const PROG: &str = "DATA DIVISION.\nFILE pay-file INPUT BUFFER pay-rec LENGTH 10.\n  LAYOUT p: typ 3, rcv 5, amt 2.\nTABLE accounts BUFFER acc-row LENGTH 8.\n  LAYOUT a: key 5, bal 3.\nWORKING-STORAGE.\n  VAR w-acct LENGTH 5.\nPROCEDURE DIVISION.\n";
    const SPEC: &str = "layout p length 10\nfield typ at 0 len 3\nfield rcv at 3 len 5\ntype Itm layout p where typ == \"ITM\" and in_table(accounts, rcv)\n";

    fn setup() -> (Integrity<Cp>, Arc<AnalysisEnv>) {
        let prog = Arc::new(parse_program(PROG).unwrap());
        let spec = crate::formatspec::FormatSpec::parse(SPEC).unwrap();
        let env = AnalysisEnv::new(prog, Some(&spec)).unwrap();
        (Integrity::new(Cp::new(env.clone())), env)
    }

    fn sref(env: &AnalysisEnv, n: &str) -> SliceRef {
        SliceRef { text: n.into(), slice: resolve_slice(&env.program, n).unwrap().slice }
    }

    #[test]
    fn read_adds_table_atoms_and_move_copies_them() {
        let (d, env) = setup();
        let n = node(NodeKind::Stop);
        let after = d.transfer_read(&n, env.primary.unwrap(), ReadOutcome::Record(0), &d.initial());
        let rcv = sref(&env, "pay-rec.rcv");
        assert!(after.preds().unwrap().contains(&TablePred::new("accounts", rcv.slice, true)));
        let mv = node(NodeKind::Move { src: Operand::Slice(rcv.clone()), dst: sref(&env, "w-acct") });
        let moved = d.transfer_stmt(&mv, &after);
        let w = sref(&env, "w-acct").slice;
        assert!(moved.preds().unwrap().contains(&TablePred::new("accounts", w, true)));
        assert!(moved.preds().unwrap().contains(&TablePred::new("accounts", rcv.slice, true)));
        let eof = d.transfer_read(&n, env.primary.unwrap(), ReadOutcome::Eof, &moved);
        assert_eq!(eof.preds().unwrap().iter().map(|p| p.slice).collect::<Vec<_>>(), vec![w]);
    }

    #[test]
    fn key_lookup_prunes_the_impossible_outcome() {
        let (d, env) = setup();
        let n = node(NodeKind::Stop);
        let after = d.transfer_read(&n, env.primary.unwrap(), ReadOutcome::Record(0), &d.initial());
        let lookup =
            KeyLookup { table: "ACCOUNTS".into(), into: sref(&env, "acc-row"), key: sref(&env, "pay-rec.rcv") };
        assert!(d.is_bottom(&d.transfer_lookup(&n, &lookup, false, &after)));
        assert!(!d.is_bottom(&d.transfer_lookup(&n, &lookup, true, &after)));
        let unknown = d.initial();
        let miss = d.transfer_lookup(&n, &lookup, false, &unknown);
        assert!(d.is_bottom(&d.transfer_lookup(&n, &lookup, true, &miss)));
    }

    #[test]
    fn join_intersects_predicates() {
        let (d, env) = setup();
        let s = sref(&env, "w-acct").slice;
        let t = sref(&env, "pay-rec.rcv").slice;
        let p = TablePred::new("accounts", s, true);
        let q = TablePred::new("accounts", t, true);
        let a = IntegrityValue::Val { preds: BTreeSet::from([p.clone(), q]), inner: CpValue::top() };
        let b = IntegrityValue::Val { preds: BTreeSet::from([p.clone()]), inner: CpValue::top() };
        assert_eq!(d.join(&a, &b), b);
        assert!(d.leq(&a, &b) && !d.leq(&b, &a));
        assert_eq!(d.describe(&b), "[isInTable(accounts, w-acct)] <>");
    }
}
