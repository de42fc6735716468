use std::collections::BTreeSet;

use thiserror::Error;

use crate::formatspec::{Atom, FieldRef, FormatSpec, InputAutomaton, Label, StateId, Tables};

/// Hard cap on the number of files a single enumeration may produce.
pub const MAX_FILES: usize = 1_000_000;

/// Literal values tried per constrained field.
const ALPHABET: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error("enumeration would produce more than {limit} files")]
    TooLarge { limit: usize },
}

/// Files as record sequences, plus the type labels of every record.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileSet {
    pub files: Vec<Vec<Vec<u8>>>,
}

impl FileSet {
    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Vec<u8>>> {
        self.files.iter()
    }
}

fn filler(len: u32, b: u8) -> Vec<u8> {
    vec![b; len as usize]
}

/// The values each field of each spec layout ranges over: a field mentioned
/// by a constraint takes up to three literals (those the constraints name,
/// table keys, then a value matching none); other fields hold one fixed
/// digit string.
pub fn field_alphabets(spec: &FormatSpec, tables: Option<&Tables>) -> Vec<Vec<(FieldRef, Vec<Vec<u8>>)>> {
    spec.layouts
        .iter()
        .enumerate()
        .map(|(li, layout)| {
            let atoms: Vec<&Atom> =
                spec.types.iter().filter(|t| t.layout == li).flat_map(|t| t.constraint.atoms.iter()).collect();
            layout
                .fields
                .iter()
                .enumerate()
                .map(|(fi, f)| {
                    let mut lits: BTreeSet<Vec<u8>> = BTreeSet::new();
                    let mut constrained = false;
                    for a in atoms.iter().filter(|a| a.field() == f) {
                        constrained = true;
                        match a {
                            Atom::FieldEq(_, v) | Atom::FieldNeq(_, v) => {
                                lits.insert(v.clone());
                            }
                            Atom::InTable(t, _) | Atom::NotInTable(t, _) => {
                                if let Some(ts) = tables {
                                    lits.extend(ts.keys(t, f.len as usize).into_iter().take(ALPHABET - 1));
                                }
                            }
                        }
                    }
                    let mut lits: Vec<Vec<u8>> = lits.into_iter().take(ALPHABET).collect();
                    if !constrained {
                        lits = vec![filler(f.len, b'0' + (fi % 10) as u8)];
                    } else if lits.len() < ALPHABET {
                        lits.push(filler(f.len, b'Z'));
                    }
                    (f.clone(), lits)
                })
                .collect()
        })
        .collect()
}

/// Every combination of [`field_alphabets`] per layout; unnamed bytes are
/// spaces.
pub fn record_universe(spec: &FormatSpec, tables: Option<&Tables>) -> Vec<Vec<u8>> {
    let mut out = BTreeSet::new();
    for (layout, alphabets) in spec.layouts.iter().zip(field_alphabets(spec, tables)) {
        let mut recs = vec![filler(layout.len, b' ')];
        for (f, lits) in &alphabets {
            recs = recs
                .iter()
                .flat_map(|r| {
                    lits.iter().map(move |l| {
                        let mut r = r.clone();
                        r[f.offset as usize..(f.offset + f.len) as usize].copy_from_slice(l);
                        r
                    })
                })
                .collect();
        }
        out.extend(recs);
    }
    out.into_iter().collect()
}

/// Every file of at most `max_records` records over `universe`. With an
/// automaton, only files it accepts; otherwise all of them.
pub fn enumerate_files(
    spec: &FormatSpec,
    automaton: Option<&InputAutomaton>,
    universe: &[Vec<u8>],
    tables: Option<&Tables>,
    max_records: usize,
) -> Result<FileSet, EnumerateError> {
    let labels: Vec<Vec<Label>> = universe.iter().map(|r| spec.record_labels(r, tables)).collect();
    if automaton.is_none() {
        let total: f64 = (0..=max_records).map(|k| (universe.len() as f64).powi(k as i32)).sum();
        if total > MAX_FILES as f64 {
            return Err(EnumerateError::TooLarge { limit: MAX_FILES });
        }
    }
    let mut out = FileSet::default();
    // Depth-first over prefixes; each prefix carries the states it reaches.
    let start: BTreeSet<StateId> = automaton.map(|a| BTreeSet::from([a.start])).unwrap_or_default();
    let mut stack: Vec<(Vec<usize>, BTreeSet<StateId>)> = vec![(Vec::new(), start)];
    while let Some((prefix, states)) = stack.pop() {
        let keep = match automaton {
            Some(a) => !a.step(&states, Label::Eof).is_empty(),
            None => true,
        };
        if keep {
            if out.files.len() >= MAX_FILES {
                return Err(EnumerateError::TooLarge { limit: MAX_FILES });
            }
            out.files.push(prefix.iter().map(|&i| universe[i].clone()).collect());
        }
        if prefix.len() == max_records {
            continue;
        }
        for i in (0..universe.len()).rev() {
            let next = match automaton {
                Some(a) => {
                    let n: BTreeSet<StateId> = labels[i].iter().flat_map(|&l| a.step(&states, l)).collect();
                    if n.is_empty() {
                        continue;
                    }
                    n
                }
                None => BTreeSet::new(),
            };
            let mut p = prefix.clone();
            p.push(i);
            stack.push((p, next));
        }
    }
    Ok(out)
}
