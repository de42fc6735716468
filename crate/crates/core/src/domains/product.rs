use super::*;

/// A pair of component values. Either component being bottom makes the
/// pair bottom; values are kept in that normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductValue<A, B> {
    pub first: A,
    pub second: B,
}

#[derive(Debug, Clone)]
pub struct Product<D1, D2> {
    pub first: D1,
    pub second: D2,
}

impl<D1: Domain, D2: Domain> Product<D1, D2> {
    pub fn new(first: D1, second: D2) -> Self {
        Product { first, second }
    }

    fn pair(&self, a: D1::Value, b: D2::Value) -> ProductValue<D1::Value, D2::Value> {
        if self.first.is_bottom(&a) || self.second.is_bottom(&b) {
            self.bottom()
        } else {
            ProductValue { first: a, second: b }
        }
    }
}

type PV<D1, D2> = ProductValue<<D1 as Domain>::Value, <D2 as Domain>::Value>;

impl<D1: Domain, D2: Domain> Domain for Product<D1, D2> {
    type Value = PV<D1, D2>;

    fn name(&self) -> String {
        format!("{}*{}", self.first.name(), self.second.name())
    }

    fn env(&self) -> &AnalysisEnv {
        self.first.env()
    }

    fn bottom(&self) -> Self::Value {
        ProductValue { first: self.first.bottom(), second: self.second.bottom() }
    }

    fn initial(&self) -> Self::Value {
        self.pair(self.first.initial(), self.second.initial())
    }

    fn is_bottom(&self, v: &Self::Value) -> bool {
        self.first.is_bottom(&v.first)
    }

    fn join(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        if self.is_bottom(a) {
            return b.clone();
        }
        if self.is_bottom(b) {
            return a.clone();
        }
        self.pair(self.first.join(&a.first, &b.first), self.second.join(&a.second, &b.second))
    }

    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool {
        self.is_bottom(a)
            || (!self.is_bottom(b) && self.first.leq(&a.first, &b.first) && self.second.leq(&a.second, &b.second))
    }

    fn transfer_stmt(&self, node: &CfgNode, v: &Self::Value) -> Self::Value {
        if self.is_bottom(v) {
            return v.clone();
        }
        self.pair(self.first.transfer_stmt(node, &v.first), self.second.transfer_stmt(node, &v.second))
    }

    fn transfer_branch(&self, cond: &Cond, polarity: bool, v: &Self::Value) -> Self::Value {
        if self.is_bottom(v) {
            return v.clone();
        }
        self.pair(
            self.first.transfer_branch(cond, polarity, &v.first),
            self.second.transfer_branch(cond, polarity, &v.second),
        )
    }

    fn transfer_read(&self, node: &CfgNode, buffer: BufferId, outcome: ReadOutcome, v: &Self::Value) -> Self::Value {
        if self.is_bottom(v) {
            return v.clone();
        }
        self.pair(
            self.first.transfer_read(node, buffer, outcome, &v.first),
            self.second.transfer_read(node, buffer, outcome, &v.second),
        )
    }

    fn transfer_lookup(&self, node: &CfgNode, lookup: &KeyLookup, found: bool, v: &Self::Value) -> Self::Value {
        if self.is_bottom(v) {
            return v.clone();
        }
        self.pair(
            self.first.transfer_lookup(node, lookup, found, &v.first),
            self.second.transfer_lookup(node, lookup, found, &v.second),
        )
    }

    fn describe(&self, v: &Self::Value) -> String {
        if self.is_bottom(v) {
            return "⊥".into();
        }
        format!("{} {}", self.first.describe(&v.first), self.second.describe(&v.second))
    }

    fn supports(&self, d: Direction) -> bool {
        self.first.supports(d) && self.second.supports(d)
    }

    fn backward_initial(&self) -> Self::Value {
        self.pair(self.first.backward_initial(), self.second.backward_initial())
    }

    fn transfer_backward(&self, node: &CfgNode, v: &Self::Value) -> Option<Self::Value> {
        if self.is_bottom(v) {
            return Some(v.clone());
        }
        Some(self.pair(self.first.transfer_backward(node, &v.first)?, self.second.transfer_backward(node, &v.second)?))
    }
}
