use serde::Serialize;

use super::ast::*;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    Open,
    Close,
    Read { file: String, buffer: BufferId },
    KeyRead(KeyLookup),
    Move { src: Operand, dst: SliceRef },
    Add { src: Operand, dst: SliceRef },
    Write { buffer: SliceRef },
    If(Cond),
    Loop(Cond),
    Display(Vec<Operand>),
    Stop,
    Call { paragraph: usize },
    Return { paragraph: usize },
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Entry => "entry",
            NodeKind::Exit => "exit",
            NodeKind::Open => "open",
            NodeKind::Close => "close",
            NodeKind::Read { .. } => "read",
            NodeKind::KeyRead(_) => "table-read-key",
            NodeKind::Move { .. } => "move",
            NodeKind::Add { .. } => "add",
            NodeKind::Write { .. } => "write",
            NodeKind::If(_) => "if-cond",
            NodeKind::Loop(_) => "loop-cond",
            NodeKind::Display(_) => "display",
            NodeKind::Stop => "stop",
            NodeKind::Call { .. } => "paragraph-call",
            NodeKind::Return { .. } => "paragraph-return",
        }
    }

    pub fn is_conditional(&self) -> bool {
        matches!(self, NodeKind::If(_) | NodeKind::Loop(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub line: u32,
    pub reject: bool,
    pub stmt: Option<StmtId>,
    pub paragraph: Option<usize>,
}

impl CfgNode {
    /// Entry and exit are structural; everything else is executable.
    pub fn is_executable(&self) -> bool {
        !matches!(self.kind, NodeKind::Entry | NodeKind::Exit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLabel {
    Fallthrough,
    True,
    False,
    AtEnd,
    NotAtEnd,
    InvalidKey,
    KeyFound,
    Call(NodeId),
    Return(NodeId),
}

impl EdgeLabel {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeLabel::Fallthrough => "fallthrough",
            EdgeLabel::True => "true",
            EdgeLabel::False => "false",
            EdgeLabel::AtEnd => "at-end",
            EdgeLabel::NotAtEnd => "not-at-end",
            EdgeLabel::InvalidKey => "invalid-key",
            EdgeLabel::KeyFound => "key-found",
            EdgeLabel::Call(_) => "call",
            EdgeLabel::Return(_) => "return",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<Edge>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub para_entry: Vec<NodeId>,
    pub para_return: Vec<NodeId>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn node(&self, id: NodeId) -> &CfgNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn succ_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.succ[id].iter().map(move |&e| &self.edges[e])
    }

    pub fn pred_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.pred[id].iter().map(move |&e| &self.edges[e])
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.succ_edges(from).any(|e| e.to == to)
    }

    /// Nodes whose source line is `line`, in id order.
    pub fn nodes_at_line(&self, line: u32) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.is_executable() && n.line == line).map(|n| n.id).collect()
    }

    /// Reverse postorder from entry; nodes not reachable by edges follow in id order.
    pub fn reverse_postorder(&self) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut post = Vec::with_capacity(n);
        let mut stack: Vec<(NodeId, usize)> = vec![(self.entry, 0)];
        seen[self.entry] = true;
        while let Some((v, i)) = stack.pop() {
            if let Some(&e) = self.succ[v].get(i) {
                stack.push((v, i + 1));
                let w = self.edges[e].to;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                post.push(v);
            }
        }
        post.reverse();
        post.extend((0..n).filter(|&v| !seen[v]));
        post
    }
}

#[derive(Clone, Copy)]
enum Src {
    Node(NodeId),
    ParaReturn(usize),
}

struct Builder {
    nodes: Vec<CfgNode>,
    edges: Vec<Edge>,
    calls: Vec<(NodeId, usize)>,
    returns: Vec<(usize, NodeId, NodeId)>,
}

type Dangling = Vec<(Src, EdgeLabel)>;

impl Builder {
    fn node(&mut self, kind: NodeKind, s: &Stmt, para: Option<usize>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(CfgNode { id, kind, line: s.line, reject: s.reject, stmt: Some(s.id), paragraph: para });
        id
    }

    fn connect(&mut self, preds: Dangling, to: NodeId) {
        for (src, label) in preds {
            match src {
                Src::Node(from) => self.edges.push(Edge { from, to, label }),
                Src::ParaReturn(p) => {
                    let EdgeLabel::Return(site) = label else { unreachable!() };
                    self.returns.push((p, to, site));
                }
            }
        }
    }

    fn seq(
        &mut self,
        stmts: &[Stmt],
        mut preds: Dangling,
        para: Option<usize>,
        exit: NodeId,
        program: &Program,
    ) -> Dangling {
        for s in stmts {
            preds = self.stmt(s, preds, para, exit, program);
        }
        preds
    }

    fn stmt(&mut self, s: &Stmt, preds: Dangling, para: Option<usize>, exit: NodeId, program: &Program) -> Dangling {
        let simple = |b: &mut Builder, kind: NodeKind, preds: Dangling| {
            let n = b.node(kind, s, para);
            b.connect(preds, n);
            vec![(Src::Node(n), EdgeLabel::Fallthrough)]
        };
        match &s.kind {
            StmtKind::Open { .. } => simple(self, NodeKind::Open, preds),
            StmtKind::Close { .. } => simple(self, NodeKind::Close, preds),
            StmtKind::Move { src, dst } => simple(self, NodeKind::Move { src: src.clone(), dst: dst.clone() }, preds),
            StmtKind::Add { src, dst } => simple(self, NodeKind::Add { src: src.clone(), dst: dst.clone() }, preds),
            StmtKind::Write { buffer, .. } => simple(self, NodeKind::Write { buffer: buffer.clone() }, preds),
            StmtKind::Display { items } => simple(self, NodeKind::Display(items.clone()), preds),
            StmtKind::Stop { .. } => {
                let n = self.node(NodeKind::Stop, s, para);
                self.connect(preds, n);
                self.edges.push(Edge { from: n, to: exit, label: EdgeLabel::Fallthrough });
                Vec::new()
            }
            StmtKind::Read { file, buffer, at_end, not_at_end, .. } => {
                let n = self.node(NodeKind::Read { file: file.clone(), buffer: *buffer }, s, para);
                self.connect(preds, n);
                let mut out =
                    self.clause(at_end.as_ref().map(|c| &c.body[..]), n, EdgeLabel::AtEnd, para, exit, program);
                out.extend(self.clause(
                    not_at_end.as_ref().map(|c| &c.body[..]),
                    n,
                    EdgeLabel::NotAtEnd,
                    para,
                    exit,
                    program,
                ));
                out
            }
            StmtKind::KeyRead { lookup, invalid, found, .. } => {
                let n = self.node(NodeKind::KeyRead(lookup.clone()), s, para);
                self.connect(preds, n);
                let mut out = self.clause(Some(&invalid.body), n, EdgeLabel::InvalidKey, para, exit, program);
                out.extend(self.clause(
                    found.as_ref().map(|c| &c.body[..]),
                    n,
                    EdgeLabel::KeyFound,
                    para,
                    exit,
                    program,
                ));
                out
            }
            StmtKind::If { cond, then, els, .. } => {
                let n = self.node(NodeKind::If(cond.clone()), s, para);
                self.connect(preds, n);
                let mut out = self.clause(Some(then), n, EdgeLabel::True, para, exit, program);
                out.extend(self.clause(els.as_ref().map(|c| &c.body[..]), n, EdgeLabel::False, para, exit, program));
                out
            }
            StmtKind::PerformUntil { cond, body, .. } => {
                let n = self.node(NodeKind::Loop(cond.clone()), s, para);
                self.connect(preds, n);
                let back = self.seq(body, vec![(Src::Node(n), EdgeLabel::False)], para, exit, program);
                self.connect(back, n);
                vec![(Src::Node(n), EdgeLabel::True)]
            }
            StmtKind::PerformPara { name } => {
                let p = program.paragraph(name).expect("resolved at parse");
                let n = self.node(NodeKind::Call { paragraph: p }, s, para);
                self.connect(preds, n);
                self.calls.push((n, p));
                vec![(Src::ParaReturn(p), EdgeLabel::Return(n))]
            }
        }
    }

    fn clause(
        &mut self,
        body: Option<&[Stmt]>,
        from: NodeId,
        label: EdgeLabel,
        para: Option<usize>,
        exit: NodeId,
        program: &Program,
    ) -> Dangling {
        let start = vec![(Src::Node(from), label)];
        match body {
            Some(b) => self.seq(b, start, para, exit, program),
            None => start,
        }
    }
}

pub fn build(program: &Program) -> Cfg {
    let mut b = Builder { nodes: Vec::new(), edges: Vec::new(), calls: Vec::new(), returns: Vec::new() };
    let structural =
        |id: NodeId, kind: NodeKind, line: u32| CfgNode { id, kind, line, reject: false, stmt: None, paragraph: None };
    b.nodes.push(structural(0, NodeKind::Entry, program.procedure_line));
    b.nodes.push(structural(1, NodeKind::Exit, program.procedure_line));
    let (entry, exit) = (0, 1);
    let out = b.seq(&program.main, vec![(Src::Node(entry), EdgeLabel::Fallthrough)], None, exit, program);
    b.connect(out, exit);

    let mut para_entry = Vec::new();
    let mut para_return = Vec::new();
    for (pi, para) in program.paragraphs.iter().enumerate() {
        let first = b.nodes.len();
        let out = b.seq(&para.body, Vec::new(), Some(pi), exit, program);
        let ret = b.nodes.len();
        b.nodes.push(CfgNode {
            id: ret,
            kind: NodeKind::Return { paragraph: pi },
            line: para.line,
            reject: false,
            stmt: None,
            paragraph: Some(pi),
        });
        b.connect(out, ret);
        para_entry.push(if para.body.is_empty() { ret } else { first });
        para_return.push(ret);
    }
    for (site, p) in std::mem::take(&mut b.calls) {
        b.edges.push(Edge { from: site, to: para_entry[p], label: EdgeLabel::Call(site) });
    }
    for (p, to, site) in std::mem::take(&mut b.returns) {
        b.edges.push(Edge { from: para_return[p], to, label: EdgeLabel::Return(site) });
    }

    let n = b.nodes.len();
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for (i, e) in b.edges.iter().enumerate() {
        succ[e.from].push(i);
        pred[e.to].push(i);
    }
    Cfg { nodes: b.nodes, edges: b.edges, entry, exit, para_entry, para_return, succ, pred }
}
