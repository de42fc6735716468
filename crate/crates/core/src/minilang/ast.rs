use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BufferId(pub u32);

impl BufferId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A byte range inside one buffer. This is the canonical identity of a
/// field: two overlay fields with the same offset and length are the same
/// slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Slice {
    pub buffer: BufferId,
    pub offset: u32,
    pub len: u32,
}

impl Slice {
    pub fn new(buffer: BufferId, offset: u32, len: u32) -> Self {
        Slice { buffer, offset, len }
    }

    pub fn end(&self) -> u32 {
        self.offset + self.len
    }

    pub fn overlaps(&self, other: &Slice) -> bool {
        self.buffer == other.buffer && self.offset < other.end() && other.offset < self.end()
    }

    /// True if `other` lies entirely inside `self`.
    pub fn covers(&self, other: &Slice) -> bool {
        self.buffer == other.buffer && self.offset <= other.offset && other.end() <= self.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferRole {
    InputFileBuffer,
    OutputFileBuffer,
    WorkingStorage,
    TableRowBuffer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldDecl {
    pub name: String,
    pub offset: u32,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub name: String,
    pub fields: Vec<FieldDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BufferDecl {
    pub name: String,
    pub role: BufferRole,
    pub len: u32,
    /// File or table name for file and table buffers.
    pub owner: Option<String>,
    pub layouts: Vec<Layout>,
    /// Initial VALUE clause, already padded to `len`.
    pub value: Option<Vec<u8>>,
    pub line: u32,
}

/// A resolved field reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldSlice {
    pub buffer: String,
    pub layout: String,
    pub field: String,
    pub offset: u32,
    pub len: u32,
    #[serde(skip)]
    pub slice: Slice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StmtId(pub u32);

/// A slice as written in source, kept for printing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceRef {
    pub text: String,
    pub slice: Slice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Lit(Vec<u8>),
    Slice(SliceRef),
}

impl Operand {
    pub fn slice(&self) -> Option<Slice> {
        match self {
            Operand::Slice(r) => Some(r.slice),
            Operand::Lit(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Cmp { lhs: Operand, op: CmpOp, rhs: Operand },
    And(Vec<Cond>),
    Or(Vec<Cond>),
}

impl Cond {
    /// Every slice the condition reads.
    pub fn slices(&self) -> Vec<Slice> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<Slice>) {
        match self {
            Cond::Cmp { lhs, rhs, .. } => {
                out.extend(lhs.slice());
                out.extend(rhs.slice());
            }
            Cond::And(cs) | Cond::Or(cs) => cs.iter().for_each(|c| c.collect(out)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyLookup {
    pub table: String,
    pub into: SliceRef,
    pub key: SliceRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub line: u32,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Open { files: Vec<(Option<OpenMode>, String)> },
    Close { files: Vec<String> },
    Read { file: String, buffer: BufferId, at_end: Option<Clause>, not_at_end: Option<Clause>, end_line: Option<u32> },
    KeyRead { lookup: KeyLookup, invalid: Clause, found: Option<Clause>, end_line: Option<u32> },
    Move { src: Operand, dst: SliceRef },
    Add { src: Operand, dst: SliceRef },
    Write { target: String, buffer: SliceRef },
    Display { items: Vec<Operand> },
    If { cond: Cond, then: Vec<Stmt>, els: Option<Clause>, end_line: u32 },
    PerformPara { name: String },
    PerformUntil { cond: Cond, body: Vec<Stmt>, end_line: u32 },
    Stop { goback: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub line: u32,
    pub reject: bool,
    pub kind: StmtKind,
}

impl Stmt {
    /// Direct child statement lists, in source order.
    pub fn children(&self) -> Vec<&Vec<Stmt>> {
        match &self.kind {
            StmtKind::Read { at_end, not_at_end, .. } => {
                at_end.iter().chain(not_at_end.iter()).map(|c| &c.body).collect()
            }
            StmtKind::KeyRead { invalid, found, .. } => {
                std::iter::once(&invalid.body).chain(found.iter().map(|c| &c.body)).collect()
            }
            StmtKind::If { then, els, .. } => std::iter::once(then).chain(els.iter().map(|c| &c.body)).collect(),
            StmtKind::PerformUntil { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub name: String,
    pub line: u32,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub buffers: Vec<BufferDecl>,
    pub main: Vec<Stmt>,
    pub paragraphs: Vec<Paragraph>,
    /// Source text up to and including the PROCEDURE DIVISION header line.
    pub header_text: String,
    pub procedure_line: u32,
}

impl Program {
    pub fn buffer(&self, id: BufferId) -> &BufferDecl {
        &self.buffers[id.index()]
    }

    pub fn buffer_id(&self, name: &str) -> Option<BufferId> {
        self.buffers.iter().position(|b| b.name.eq_ignore_ascii_case(name)).map(|i| BufferId(i as u32))
    }

    /// Buffer bound to a file or table name, or the buffer itself by name.
    pub fn buffer_for_owner(&self, name: &str) -> Option<BufferId> {
        self.buffers
            .iter()
            .position(|b| b.owner.as_deref().is_some_and(|o| o.eq_ignore_ascii_case(name)))
            .map(|i| BufferId(i as u32))
            .or_else(|| self.buffer_id(name))
    }

    pub fn whole(&self, id: BufferId) -> Slice {
        Slice::new(id, 0, self.buffer(id).len)
    }

    pub fn paragraph(&self, name: &str) -> Option<usize> {
        self.paragraphs.iter().position(|p| p.name.eq_ignore_ascii_case(name))
    }

    /// Visit every statement in source order (main first, then paragraphs).
    pub fn visit(&self, f: &mut dyn FnMut(&Stmt)) {
        fn walk(stmts: &[Stmt], f: &mut dyn FnMut(&Stmt)) {
            for s in stmts {
                f(s);
                for c in s.children() {
                    walk(c, f);
                }
            }
        }
        walk(&self.main, f);
        for p in &self.paragraphs {
            walk(&p.body, f);
        }
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Human-readable name for a slice: the first declared field at exactly
    /// that location, else `buffer[off..end]`.
    pub fn slice_name(&self, s: &Slice) -> String {
        let b = self.buffer(s.buffer);
        if s.offset == 0 && s.len == b.len {
            return b.name.clone();
        }
        for l in &b.layouts {
            for f in &l.fields {
                if f.offset == s.offset && f.len == s.len && !f.name.eq_ignore_ascii_case("FILLER") {
                    return format!("{}.{}", b.name, f.name);
                }
            }
        }
        format!("{}[{}..{}]", b.name, s.offset, s.end())
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmpOp::Eq => write!(f, "="),
            CmpOp::Ne => write!(f, "<>"),
        }
    }
}

/// Pad with spaces or truncate to `len` bytes.
pub fn fit(bytes: &[u8], len: usize) -> Vec<u8> {
    let mut v: Vec<u8> = bytes.iter().copied().take(len).collect();
    v.resize(len, b' ');
    v
}

pub fn render_bytes(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_overlap_and_cover() {
        let b = BufferId(0);
        let a = Slice::new(b, 0, 4);
        let c = Slice::new(b, 3, 2);
        let d = Slice::new(b, 4, 1);
        assert!(a.overlaps(&c));
        assert!(!a.overlaps(&d));
        assert!(a.covers(&Slice::new(b, 1, 2)));
        assert!(!a.covers(&c));
        assert!(!a.overlaps(&Slice::new(BufferId(1), 0, 4)));
    }

    #[test]
    fn fit_pads_and_truncates() {
        assert_eq!(fit(b"AB", 4), b"AB  ".to_vec());
        assert_eq!(fit(b"ABCDE", 3), b"ABC".to_vec());
    }
}
