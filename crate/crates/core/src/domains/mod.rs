//! Underlying abstract domains and the contract the lifted engine needs
//! from them.

mod cp;
mod integrity;
mod live;
mod product;
mod rd;
mod uninit;
mod unit;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::formatspec::{Atom, FieldRef, FormatSpec, TypeId};
use crate::minilang::{BufferId, BufferRole, CfgNode, Cond, KeyLookup, Program, Slice};

pub use cp::{Cp, CpValue};
pub use integrity::{Integrity, IntegrityValue, TablePred};
pub use live::{Live, LiveValue};
pub use product::{Product, ProductValue};
pub use rd::{Def, Rd, RdValue};
pub use uninit::{Uninit, UninitValue};
pub use unit::{Unit, UnitValue};

/// What a READ produced: a record carrying one of the declared types, a
/// record matching none of them, or end of file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReadOutcome {
    Record(TypeId),
    Unmatched,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

/// The operations every underlying domain provides. Transfers must be
/// monotone and map bottom to bottom.
pub trait Domain: Clone + Send + Sync {
    type Value: Clone + PartialEq + Eq + fmt::Debug + Send + Sync;

    fn name(&self) -> String;
    fn env(&self) -> &AnalysisEnv;
    fn bottom(&self) -> Self::Value;
    /// Value at program entry.
    fn initial(&self) -> Self::Value;
    fn is_bottom(&self, v: &Self::Value) -> bool;
    fn join(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool;
    /// Every node kind other than reads, key reads and conditionals.
    fn transfer_stmt(&self, node: &CfgNode, v: &Self::Value) -> Self::Value;
    fn transfer_branch(&self, cond: &Cond, polarity: bool, v: &Self::Value) -> Self::Value;
    fn transfer_read(&self, node: &CfgNode, buffer: BufferId, outcome: ReadOutcome, v: &Self::Value) -> Self::Value;
    fn transfer_lookup(&self, node: &CfgNode, lookup: &KeyLookup, found: bool, v: &Self::Value) -> Self::Value;
    fn describe(&self, v: &Self::Value) -> String;

    fn supports(&self, d: Direction) -> bool {
        d == Direction::Forward
    }

    /// Value at the exit of the program for backward runs.
    fn backward_initial(&self) -> Self::Value {
        self.initial()
    }

    /// Value before `node` given the value after it.
    fn transfer_backward(&self, _node: &CfgNode, _v: &Self::Value) -> Option<Self::Value> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("primary file '{0}' is not an input file of the program")]
    UnknownPrimary(String),
    #[error("field '{field}' of type '{ty}' lies outside the primary buffer")]
    FieldOutOfBuffer { ty: String, field: String },
    #[error("the format declares record types but the program has no primary input file")]
    NoPrimary,
}

/// A record type as seen through the primary buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeInfo {
    pub name: String,
    pub len: u32,
    pub eqs: Vec<(Slice, Vec<u8>)>,
    pub neqs: Vec<(Slice, Vec<u8>)>,
    pub tables: Vec<TablePred>,
}

/// Shared context of one analysis: the program's buffers, the primary
/// input buffer and the record types resolved onto it.
#[derive(Debug, Clone)]
pub struct AnalysisEnv {
    pub program: Arc<Program>,
    pub primary: Option<BufferId>,
    pub types: Vec<TypeInfo>,
    /// Every slice the analyses track by name: declared fields, whole
    /// buffers and type fields.
    pub universe: Vec<Slice>,
}

impl AnalysisEnv {
    pub fn new(program: Arc<Program>, spec: Option<&FormatSpec>) -> Result<Arc<AnalysisEnv>, EnvError> {
        let inputs: Vec<BufferId> = (0..program.buffers.len())
            .map(|i| BufferId(i as u32))
            .filter(|&b| program.buffer(b).role == BufferRole::InputFileBuffer)
            .collect();
        let primary = match spec.and_then(|s| s.primary_file.as_deref()) {
            Some(name) => match program.buffer_for_owner(name) {
                Some(b) if program.buffer(b).role == BufferRole::InputFileBuffer => Some(b),
                _ => return Err(EnvError::UnknownPrimary(name.to_string())),
            },
            None if inputs.len() == 1 => Some(inputs[0]),
            None => None,
        };
        let mut universe: BTreeSet<Slice> = BTreeSet::new();
        for (i, b) in program.buffers.iter().enumerate() {
            let id = BufferId(i as u32);
            universe.insert(program.whole(id));
            for l in &b.layouts {
                for f in &l.fields {
                    universe.insert(Slice::new(id, f.offset, f.len));
                }
            }
        }
        let mut types = Vec::new();
        if let Some(spec) = spec {
            if !spec.types.is_empty() && primary.is_none() {
                return Err(EnvError::NoPrimary);
            }
            for ty in &spec.types {
                let buf = primary.expect("checked above");
                let blen = program.buffer(buf).len;
                let slice = |f: &FieldRef| {
                    if f.offset + f.len > blen {
                        Err(EnvError::FieldOutOfBuffer { ty: ty.name.clone(), field: f.name.clone() })
                    } else {
                        Ok(Slice::new(buf, f.offset, f.len))
                    }
                };
                let mut info =
                    TypeInfo { name: ty.name.clone(), len: ty.len, eqs: vec![], neqs: vec![], tables: vec![] };
                for a in &ty.constraint.atoms {
                    let s = slice(a.field())?;
                    universe.insert(s);
                    match a {
                        Atom::FieldEq(_, v) => info.eqs.push((s, v.clone())),
                        Atom::FieldNeq(_, v) => info.neqs.push((s, v.clone())),
                        Atom::InTable(t, _) => info.tables.push(TablePred::new(t, s, true)),
                        Atom::NotInTable(t, _) => info.tables.push(TablePred::new(t, s, false)),
                    }
                }
                types.push(info);
            }
        }
        Ok(Arc::new(AnalysisEnv { program, primary, types, universe: universe.into_iter().collect() }))
    }

    pub fn slice_name(&self, s: &Slice) -> String {
        self.program.slice_name(s)
    }

    /// Universe slices lying inside `s`, `s` included when tracked.
    pub fn covered(&self, s: Slice) -> impl Iterator<Item = Slice> + '_ {
        self.universe.iter().copied().filter(move |u| s.covers(u))
    }

    pub fn whole(&self, b: BufferId) -> Slice {
        self.program.whole(b)
    }

    pub fn buffers(&self) -> impl Iterator<Item = BufferId> {
        (0..self.program.buffers.len()).map(|i| BufferId(i as u32))
    }
}

pub type ByteLoc = (BufferId, u32);

pub(crate) fn bytes_of(s: Slice) -> impl Iterator<Item = ByteLoc> {
    (s.offset..s.end()).map(move |i| (s.buffer, i))
}

/// Names for a set of buffer bytes: whole buffers, then fully contained
/// tracked slices, then leftover ranges.
pub(crate) fn describe_bytes(env: &AnalysisEnv, set: &BTreeSet<ByteLoc>) -> String {
    let mut names = Vec::new();
    for b in env.buffers() {
        let whole = env.whole(b);
        let mut left: BTreeSet<u32> = set.iter().filter(|(x, _)| *x == b).map(|&(_, i)| i).collect();
        if left.is_empty() {
            continue;
        }
        if left.len() == whole.len as usize {
            names.push(env.slice_name(&whole));
            continue;
        }
        for u in env.covered(whole).filter(|u| *u != whole) {
            if (u.offset..u.end()).all(|i| set.contains(&(b, i))) && (u.offset..u.end()).any(|i| left.contains(&i)) {
                names.push(env.slice_name(&u));
                for i in u.offset..u.end() {
                    left.remove(&i);
                }
            }
        }
        let mut runs: Vec<(u32, u32)> = Vec::new();
        for i in left {
            match runs.last_mut() {
                Some((_, end)) if *end == i => *end += 1,
                _ => runs.push((i, i + 1)),
            }
        }
        for (a, e) in runs {
            names.push(env.slice_name(&Slice::new(b, a, e - a)));
        }
    }
    format!("{{{}}}", names.join(", "))
}

/// The selectors accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Cp,
    Uninit,
    Rd,
    Unit,
    Live,
    CpUninit,
    CpRd,
    IntegrityCp,
    IntegrityCpUninit,
}

impl Selector {
    pub const ALL: [Selector; 9] = [
        Selector::Cp,
        Selector::Uninit,
        Selector::Rd,
        Selector::Unit,
        Selector::Live,
        Selector::CpUninit,
        Selector::CpRd,
        Selector::IntegrityCp,
        Selector::IntegrityCpUninit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Cp => "cp",
            Selector::Uninit => "uninit",
            Selector::Rd => "rd",
            Selector::Unit => "unit",
            Selector::Live => "live",
            Selector::CpUninit => "cp*uninit",
            Selector::CpRd => "cp*rd",
            Selector::IntegrityCp => "integrity(cp)",
            Selector::IntegrityCpUninit => "integrity(cp*uninit)",
        }
    }

    /// Run `visitor` with the selected domain instantiated over `env`.
    pub fn visit<V: DomainVisitor>(self, env: Arc<AnalysisEnv>, visitor: V) -> V::Output {
        match self {
            Selector::Cp => visitor.visit(Cp::new(env)),
            Selector::Uninit => visitor.visit(Uninit::new(env)),
            Selector::Rd => visitor.visit(Rd::new(env)),
            Selector::Unit => visitor.visit(Unit::new(env)),
            Selector::Live => visitor.visit(Live::new(env)),
            Selector::CpUninit => visitor.visit(Product::new(Cp::new(env.clone()), Uninit::new(env))),
            Selector::CpRd => visitor.visit(Product::new(Cp::new(env.clone()), Rd::new(env))),
            Selector::IntegrityCp => visitor.visit(Integrity::new(Cp::new(env))),
            Selector::IntegrityCpUninit => {
                visitor.visit(Integrity::new(Product::new(Cp::new(env.clone()), Uninit::new(env))))
            }
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        Selector::ALL.into_iter().find(|sel| sel.as_str() == norm).ok_or_else(|| {
            let all: Vec<&str> = Selector::ALL.iter().map(|s| s.as_str()).collect();
            format!("unknown domain '{s}' (expected one of {})", all.join(", "))
        })
    }
}

/// Receives a concrete domain chosen at run time.
pub trait DomainVisitor {
    type Output;
    fn visit<D: Domain + crate::oracle::Concretize>(self, d: D) -> Self::Output;
}

#[cfg(test)]
pub(crate) mod testenv {
    use super::*;
    use crate::minilang::parse_program;

    pub const RUNNING: &str = include_str!("../../fixtures/running.mcbl");
    pub const RUNNING_SPEC: &str = include_str!("../../fixtures/running.ffs");

    pub fn running() -> (Arc<AnalysisEnv>, FormatSpec) {
        let p = Arc::new(parse_program(RUNNING).unwrap());
        let s = FormatSpec::parse(RUNNING_SPEC).unwrap();
        (AnalysisEnv::new(p, Some(&s)).unwrap(), s)
    }

    pub fn slice(env: &AnalysisEnv, name: &str) -> Slice {
        crate::minilang::resolve_slice(&env.program, name).unwrap().slice
    }

    pub fn node(kind: crate::minilang::NodeKind) -> CfgNode {
        CfgNode { id: 7, kind, line: 1, reject: false, stmt: None, paragraph: None }
    }
}

#[cfg(test)]
mod tests {
    use super::testenv::*;
    use super::*;

    #[test]
    fn environment_of_running_example() {
        let (env, _) = running();
        let primary = env.primary.unwrap();
        assert_eq!(env.program.buffer(primary).name, "in-rec");
        assert_eq!(env.types.len(), 4);
        let shdr = &env.types[0];
        assert_eq!(shdr.eqs.len(), 2);
        assert!(shdr.eqs.contains(&(slice(&env, "in-rec.src"), b"SAME".to_vec())));
        assert!(env.universe.contains(&slice(&env, "in-rec.typ")));
    }

    #[test]
    fn selectors_round_trip() {
        for s in Selector::ALL {
            assert_eq!(s.as_str().parse::<Selector>().unwrap(), s);
        }
        assert_eq!("CP * Uninit".parse::<Selector>().unwrap(), Selector::CpUninit);
        assert!("octagon".parse::<Selector>().is_err());
    }

    #[test]
    fn unknown_primary_is_an_error() {
        let p = Arc::new(crate::minilang::parse_program(RUNNING).unwrap());
        let s = FormatSpec::parse(&RUNNING_SPEC.replace("primary_file in-file", "primary_file out-file")).unwrap();
        assert!(matches!(AnalysisEnv::new(p, Some(&s)), Err(EnvError::UnknownPrimary(_))));
    }

    #[test]
    fn byte_sets_are_named_by_fields() {
        let (env, _) = running();
        let mut set: BTreeSet<ByteLoc> = bytes_of(slice(&env, "same-flag")).collect();
        assert_eq!(describe_bytes(&env, &set), "{same-flag}");
        set.extend(bytes_of(slice(&env, "out-rec.amt")));
        set.insert((slice(&env, "out-rec").buffer, 0));
        assert_eq!(describe_bytes(&env, &set), "{out-rec.amt, out-rec[0..1], same-flag}");
    }
}
