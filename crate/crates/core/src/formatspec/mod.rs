//! Record types, constraints and input automatons, plus the line-oriented
//! format description language that declares them.

mod automaton;
mod parse;
mod refine;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::minilang::fit;

pub use automaton::{InputAutomaton, Label, StateId, Transition};
pub use refine::{check_refinement, constraint_implies, Mapping, RefinementVerdict};

pub type TypeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("automaton '{automaton}': {message}")]
    Invalid { automaton: String, message: String },
    #[error("unknown type '{0}'")]
    UnknownType(String),
    #[error("unknown automaton '{0}'")]
    UnknownAutomaton(String),
    #[error("bad table snapshot: {0}")]
    Tables(String),
}

/// A field of a spec layout. Identity (equality, order) is the byte range;
/// the name is carried for display.
#[derive(Debug, Clone)]
pub struct FieldRef {
    pub name: String,
    pub offset: u32,
    pub len: u32,
}

impl PartialEq for FieldRef {
    fn eq(&self, o: &Self) -> bool {
        (self.offset, self.len) == (o.offset, o.len)
    }
}
impl Eq for FieldRef {}
impl PartialOrd for FieldRef {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for FieldRef {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.offset, self.len).cmp(&(o.offset, o.len))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    FieldEq(FieldRef, Vec<u8>),
    FieldNeq(FieldRef, Vec<u8>),
    InTable(String, FieldRef),
    NotInTable(String, FieldRef),
}

impl Atom {
    pub fn field(&self) -> &FieldRef {
        match self {
            Atom::FieldEq(f, _) | Atom::FieldNeq(f, _) | Atom::InTable(_, f) | Atom::NotInTable(_, f) => f,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[u8]| String::from_utf8_lossy(v).trim_end().to_string();
        match self {
            Atom::FieldEq(fr, v) => write!(f, "{} == \"{}\"", fr.name, s(v)),
            Atom::FieldNeq(fr, v) => write!(f, "{} != \"{}\"", fr.name, s(v)),
            Atom::InTable(t, fr) => write!(f, "in_table({}, {})", t, fr.name),
            Atom::NotInTable(t, fr) => write!(f, "not_in_table({}, {})", t, fr.name),
        }
    }
}

/// A conjunction of atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraint {
    pub atoms: BTreeSet<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecLayout {
    pub name: String,
    pub len: u32,
    pub fields: Vec<FieldRef>,
}

impl SpecLayout {
    pub fn field(&self, name: &str) -> Option<&FieldRef> {
        self.fields.iter().find(|f| f.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordType {
    pub name: String,
    pub layout: usize,
    pub len: u32,
    pub constraint: Constraint,
}

/// Rows of persistent tables, by key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct Tables {
    pub tables: BTreeMap<String, BTreeSet<String>>,
}

impl Tables {
    pub fn from_json(text: &str) -> Result<Tables, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Tables(e.to_string()))
    }

    /// Keys of `table`, each fitted to `len` bytes.
    pub fn keys(&self, table: &str, len: usize) -> Vec<Vec<u8>> {
        self.tables
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(table))
            .map(|(_, ks)| ks.iter().map(|k| fit(k.as_bytes(), len)).collect())
            .unwrap_or_default()
    }

    pub fn contains(&self, table: &str, value: &[u8]) -> bool {
        self.keys(table, value.len()).iter().any(|k| k == value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatSpec {
    pub layouts: Vec<SpecLayout>,
    pub types: Vec<RecordType>,
    pub automatons: Vec<InputAutomaton>,
    pub primary_file: Option<String>,
    pub tables: BTreeSet<String>,
    pub warnings: Vec<String>,
}

impl FormatSpec {
    pub fn parse(text: &str) -> Result<FormatSpec, SpecError> {
        parse::parse(text)
    }

    pub fn type_names(&self) -> Vec<String> {
        self.types.iter().map(|t| t.name.clone()).collect()
    }

    pub fn type_id(&self, name: &str) -> Result<TypeId, SpecError> {
        self.types.iter().position(|t| t.name == name).ok_or_else(|| SpecError::UnknownType(name.to_string()))
    }

    pub fn automaton(&self, name: &str) -> Result<&InputAutomaton, SpecError> {
        self.automatons.iter().find(|a| a.name == name).ok_or_else(|| SpecError::UnknownAutomaton(name.to_string()))
    }

    pub fn layout_of(&self, t: TypeId) -> &SpecLayout {
        &self.layouts[self.types[t].layout]
    }

    /// Map type names to labels. `NA` names the complement label.
    pub fn labels(&self, names: &[&str]) -> Result<Vec<Label>, SpecError> {
        names.iter().map(|n| if *n == "NA" { Ok(Label::Unmatched) } else { self.type_id(n).map(Label::Type) }).collect()
    }

    pub fn type_sequence_accepted(&self, a: &InputAutomaton, names: &[&str]) -> Result<bool, SpecError> {
        Ok(a.accepts(&self.labels(names)?))
    }

    pub fn states_after(&self, a: &InputAutomaton, names: &[&str]) -> Result<BTreeSet<String>, SpecError> {
        Ok(a.states_after(&self.labels(names)?).into_iter().map(|q| a.states[q].clone()).collect())
    }

    /// Length and value constraints. Table atoms are checked only when a
    /// snapshot is given.
    pub fn record_of_type(&self, record: &[u8], t: TypeId, tables: Option<&Tables>) -> bool {
        let ty = &self.types[t];
        if record.len() != ty.len as usize {
            return false;
        }
        let field = |f: &FieldRef| &record[f.offset as usize..(f.offset + f.len) as usize];
        ty.constraint.atoms.iter().all(|a| match a {
            Atom::FieldEq(f, v) => field(f) == &v[..],
            Atom::FieldNeq(f, v) => field(f) != &v[..],
            Atom::InTable(tab, f) => tables.is_none_or(|ts| ts.contains(tab, field(f))),
            Atom::NotInTable(tab, f) => tables.is_none_or(|ts| !ts.contains(tab, field(f))),
        })
    }

    /// Every label a record can carry: the matching types, or NA alone.
    pub fn record_labels(&self, record: &[u8], tables: Option<&Tables>) -> Vec<Label> {
        let ts: Vec<Label> =
            (0..self.types.len()).filter(|&t| self.record_of_type(record, t, tables)).map(Label::Type).collect();
        if ts.is_empty() {
            vec![Label::Unmatched]
        } else {
            ts
        }
    }

    pub fn label_name(&self, l: Label) -> String {
        match l {
            Label::Type(t) => self.types[t].name.clone(),
            Label::Unmatched => "NA".into(),
            Label::Eof => "eof".into(),
        }
    }
}
