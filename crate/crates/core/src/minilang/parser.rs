use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{ParseError, ResolveError};

const KEYWORDS: &[&str] = &[
    "OPEN",
    "CLOSE",
    "READ",
    "MOVE",
    "ADD",
    "WRITE",
    "IF",
    "THEN",
    "ELSE",
    "END-IF",
    "PERFORM",
    "UNTIL",
    "END-PERFORM",
    "DISPLAY",
    "STOP",
    "RUN",
    "GOBACK",
    "AT",
    "END",
    "NOT",
    "INVALID",
    "KEY",
    "INTO",
    "TO",
    "END-READ",
    "INPUT",
    "OUTPUT",
    "AND",
    "OR",
];

const STMT_START: &[&str] =
    &["OPEN", "CLOSE", "READ", "MOVE", "ADD", "WRITE", "IF", "PERFORM", "DISPLAY", "STOP", "GOBACK"];

fn is_keyword(w: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(w))
}

/// Resolve a dotted name against a set of buffer declarations.
pub fn resolve_in(buffers: &[BufferDecl], name: &str) -> Result<FieldSlice, ResolveError> {
    let parts: Vec<&str> = name.split('.').collect();
    let unknown = || ResolveError::UnknownField(name.to_string());
    let find_buf = |n: &str| buffers.iter().position(|b| b.name.eq_ignore_ascii_case(n));
    let make = |bi: usize, layout: &str, field: &str, off: u32, len: u32| FieldSlice {
        buffer: buffers[bi].name.clone(),
        layout: layout.to_string(),
        field: field.to_string(),
        offset: off,
        len,
        slice: Slice::new(BufferId(bi as u32), off, len),
    };
    let is_filler = |f: &str| f.eq_ignore_ascii_case("FILLER");
    match parts.as_slice() {
        [single] => {
            if let Some(bi) = find_buf(single) {
                return Ok(make(bi, "", "", 0, buffers[bi].len));
            }
            if is_filler(single) {
                return Err(unknown());
            }
            let mut hits: Vec<(usize, &Layout, &FieldDecl)> = Vec::new();
            for (bi, b) in buffers.iter().enumerate() {
                for l in &b.layouts {
                    for f in &l.fields {
                        if f.name.eq_ignore_ascii_case(single) {
                            hits.push((bi, l, f));
                        }
                    }
                }
            }
            pick(name, hits, make)
        }
        [buf, field] => {
            let bi = find_buf(buf).ok_or_else(unknown)?;
            if is_filler(field) {
                return Err(unknown());
            }
            let hits: Vec<(usize, &Layout, &FieldDecl)> = buffers[bi]
                .layouts
                .iter()
                .flat_map(|l| l.fields.iter().map(move |f| (bi, l, f)))
                .filter(|(_, _, f)| f.name.eq_ignore_ascii_case(field))
                .collect();
            pick(name, hits, make)
        }
        [buf, layout, field] => {
            let bi = find_buf(buf).ok_or_else(unknown)?;
            let l = buffers[bi].layouts.iter().find(|l| l.name.eq_ignore_ascii_case(layout)).ok_or_else(unknown)?;
            let f = l
                .fields
                .iter()
                .find(|f| f.name.eq_ignore_ascii_case(field) && !is_filler(&f.name))
                .ok_or_else(unknown)?;
            Ok(make(bi, &l.name, &f.name, f.offset, f.len))
        }
        _ => Err(unknown()),
    }
}

fn pick(
    name: &str,
    hits: Vec<(usize, &Layout, &FieldDecl)>,
    make: impl Fn(usize, &str, &str, u32, u32) -> FieldSlice,
) -> Result<FieldSlice, ResolveError> {
    let distinct: BTreeSet<(usize, u32, u32)> = hits.iter().map(|(b, _, f)| (*b, f.offset, f.len)).collect();
    match distinct.len() {
        0 => Err(ResolveError::UnknownField(name.to_string())),
        1 => {
            let (bi, l, f) = hits[0];
            Ok(make(bi, &l.name, &f.name, f.offset, f.len))
        }
        _ => Err(ResolveError::Ambiguous(name.to_string())),
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    buffers: Vec<BufferDecl>,
    next_id: u32,
    perform_sites: Vec<(String, u32, u32)>,
    last_line: u32,
    reject_lines: BTreeSet<u32>,
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(src: &str) -> PResult<Program> {
    let (toks, reject_lines) = lex(src)?;
    let last_line = src.lines().count() as u32;
    let mut p =
        Parser { toks, pos: 0, buffers: Vec::new(), next_id: 0, perform_sites: Vec::new(), last_line, reject_lines };
    p.data_division()?;
    let procedure_line = p.expect_kw("PROCEDURE")?.line;
    p.expect_kw("DIVISION")?;
    p.expect(Tok::Period, "'.'")?;
    let header_text: String = src.lines().take(procedure_line as usize).map(|l| format!("{l}\n")).collect();

    let main = p.stmts(false)?;
    let mut paragraphs: Vec<Paragraph> = Vec::new();
    while let Some(t) = p.peek().cloned() {
        if !p.at_paragraph_header() {
            return Err(ParseError::syntax(t.line, t.col, format!("unexpected {}", describe(&t.tok))));
        }
        let name = p.word()?;
        p.expect(Tok::Period, "'.'")?;
        if paragraphs.iter().any(|q| q.name.eq_ignore_ascii_case(&name)) {
            return Err(ParseError::DuplicateParagraph { name, line: t.line });
        }
        let body = p.stmts(false)?;
        paragraphs.push(Paragraph { name, line: t.line, body });
    }

    let program = Program { buffers: p.buffers, main, paragraphs, header_text, procedure_line };
    for (name, line, col) in &p.perform_sites {
        if program.paragraph(name).is_none() {
            return Err(ParseError::Unresolved { name: name.clone(), line: *line, col: *col });
        }
    }
    check_recursion(&program)?;
    Ok(program)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Str(s) => format!("literal '{}'", String::from_utf8_lossy(s)),
        Tok::Period => "'.'".into(),
        Tok::Eq => "'='".into(),
        Tok::Ne => "'<>'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Colon => "':'".into(),
    }
}

fn performs(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        if let StmtKind::PerformPara { name } = &s.kind {
            out.push(name.to_ascii_lowercase());
        }
        for c in s.children() {
            performs(c, out);
        }
    }
}

fn check_recursion(p: &Program) -> PResult<()> {
    let mut graph: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for para in &p.paragraphs {
        let mut out = Vec::new();
        performs(&para.body, &mut out);
        graph.insert(para.name.to_ascii_lowercase(), out);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark: BTreeMap<String, u8> = BTreeMap::new();
    fn dfs(
        n: &str,
        graph: &BTreeMap<String, Vec<String>>,
        mark: &mut BTreeMap<String, u8>,
        stack: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        mark.insert(n.to_string(), 1);
        stack.push(n.to_string());
        for m in graph.get(n).into_iter().flatten() {
            match mark.get(m.as_str()).copied().unwrap_or(0) {
                1 => {
                    let start = stack.iter().position(|s| s == m).unwrap_or(0);
                    let mut chain = stack[start..].to_vec();
                    chain.push(m.clone());
                    return Some(chain);
                }
                0 => {
                    if let Some(c) = dfs(m, graph, mark, stack) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        stack.pop();
        mark.insert(n.to_string(), 2);
        None
    }
    for name in graph.keys() {
        if mark.get(name).copied().unwrap_or(0) == 0 {
            if let Some(chain) = dfs(name, &graph, &mut mark, &mut Vec::new()) {
                return Err(ParseError::Recursion { chain });
            }
        }
    }
    Ok(())
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.pos + k)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_error(&self, what: &str) -> ParseError {
        ParseError::syntax(self.last_line.max(1), 1, format!("expected {what}, found end of input"))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Token> {
        match self.next() {
            Some(t) if t.tok == tok => Ok(t),
            Some(t) => Err(ParseError::syntax(t.line, t.col, format!("expected {what}, found {}", describe(&t.tok)))),
            None => Err(self.eof_error(what)),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token> {
        match self.next() {
            Some(t) if t.is_kw(kw) => Ok(t),
            Some(t) => Err(ParseError::syntax(t.line, t.col, format!("expected {kw}, found {}", describe(&t.tok)))),
            None => Err(self.eof_error(kw)),
        }
    }

    fn accept_kw(&mut self, kw: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_kw(kw)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn accept(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn word(&mut self) -> PResult<String> {
        match self.next() {
            Some(Token { tok: Tok::Word(w), .. }) => Ok(w),
            Some(t) => Err(ParseError::syntax(t.line, t.col, format!("expected a name, found {}", describe(&t.tok)))),
            None => Err(self.eof_error("a name")),
        }
    }

    fn number(&mut self) -> PResult<u32> {
        match self.next() {
            Some(Token { tok: Tok::Word(w), line, col, .. }) => {
                w.parse::<u32>().map_err(|_| ParseError::syntax(line, col, format!("expected a number, found '{w}'")))
            }
            Some(t) => Err(ParseError::syntax(t.line, t.col, format!("expected a number, found {}", describe(&t.tok)))),
            None => Err(self.eof_error("a number")),
        }
    }

    // ---- data division ----

    fn data_division(&mut self) -> PResult<()> {
        self.expect_kw("DATA")?;
        self.expect_kw("DIVISION")?;
        self.expect(Tok::Period, "'.'")?;
        loop {
            let Some(t) = self.peek().cloned() else {
                return Err(self.eof_error("PROCEDURE DIVISION"));
            };
            if t.is_kw("PROCEDURE") {
                return Ok(());
            } else if t.is_kw("FILE") || t.is_kw("TABLE") {
                self.pos += 1;
                let owner = self.word()?;
                let role = if t.is_kw("TABLE") {
                    BufferRole::TableRowBuffer
                } else if self.accept_kw("INPUT") {
                    BufferRole::InputFileBuffer
                } else {
                    self.expect_kw("OUTPUT")?;
                    BufferRole::OutputFileBuffer
                };
                self.expect_kw("BUFFER")?;
                let name = self.word()?;
                self.expect_kw("LENGTH")?;
                let len = self.number()?;
                self.expect(Tok::Period, "'.'")?;
                self.add_buffer(BufferDecl {
                    name,
                    role,
                    len,
                    owner: Some(owner),
                    layouts: Vec::new(),
                    value: None,
                    line: t.line,
                })?;
            } else if t.is_kw("WORKING-STORAGE") {
                self.pos += 1;
                self.accept_kw("SECTION");
                self.expect(Tok::Period, "'.'")?;
            } else if t.is_kw("VAR") {
                self.pos += 1;
                let name = self.word()?;
                self.expect_kw("LENGTH")?;
                let len = self.number()?;
                let value = if self.accept_kw("VALUE") {
                    match self.next() {
                        Some(Token { tok: Tok::Str(s), .. }) => Some(fit(&s, len as usize)),
                        Some(Token { tok: Tok::Word(w), .. }) if w.bytes().all(|b| b.is_ascii_digit()) => {
                            Some(fit(w.as_bytes(), len as usize))
                        }
                        Some(x) => return Err(ParseError::syntax(x.line, x.col, "expected a literal after VALUE")),
                        None => return Err(self.eof_error("a literal")),
                    }
                } else {
                    None
                };
                self.expect(Tok::Period, "'.'")?;
                let role = BufferRole::WorkingStorage;
                self.add_buffer(BufferDecl { name, role, len, owner: None, layouts: Vec::new(), value, line: t.line })?;
            } else if t.is_kw("LAYOUT") {
                self.pos += 1;
                self.layout(&t)?;
            } else {
                return Err(ParseError::syntax(
                    t.line,
                    t.col,
                    format!("unexpected {} in DATA DIVISION", describe(&t.tok)),
                ));
            }
        }
    }

    fn add_buffer(&mut self, b: BufferDecl) -> PResult<()> {
        if b.len == 0 {
            return Err(ParseError::Layout { line: b.line, message: format!("buffer '{}' has zero length", b.name) });
        }
        let clash = self.buffers.iter().any(|o| {
            o.name.eq_ignore_ascii_case(&b.name)
                || (b.owner.is_some()
                    && o.owner
                        .as_deref()
                        .is_some_and(|x| b.owner.as_deref().is_some_and(|y| x.eq_ignore_ascii_case(y))))
        });
        if clash {
            return Err(ParseError::Layout { line: b.line, message: format!("duplicate declaration '{}'", b.name) });
        }
        self.buffers.push(b);
        Ok(())
    }

    fn layout(&mut self, kw: &Token) -> PResult<()> {
        let name = self.word()?;
        self.expect(Tok::Colon, "':'")?;
        let mut fields = Vec::new();
        let mut offset = 0u32;
        loop {
            let fname = self.word()?;
            let len = self.number()?;
            if len == 0 {
                return Err(ParseError::Layout { line: kw.line, message: format!("field '{fname}' has zero length") });
            }
            fields.push(FieldDecl { name: fname, offset, len });
            offset += len;
            if !self.accept(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Period, "'.'")?;
        let Some(buf) = self.buffers.last_mut() else {
            return Err(ParseError::Layout { line: kw.line, message: "LAYOUT before any buffer declaration".into() });
        };
        if offset != buf.len {
            return Err(ParseError::Layout {
                line: kw.line,
                message: format!(
                    "layout '{}' covers {} bytes but buffer '{}' has length {}",
                    name, offset, buf.name, buf.len
                ),
            });
        }
        if buf.layouts.iter().any(|l| l.name.eq_ignore_ascii_case(&name)) {
            return Err(ParseError::Layout { line: kw.line, message: format!("duplicate layout '{name}'") });
        }
        buf.layouts.push(Layout { name, fields });
        Ok(())
    }

    // ---- procedure division ----

    /// A name and a period right after a period.
    fn at_paragraph_header(&self) -> bool {
        if self.pos > 0 && self.toks[self.pos - 1].tok != Tok::Period {
            return false;
        }
        match (self.peek(), self.peek_at(1)) {
            (Some(Token { tok: Tok::Word(w), .. }), Some(Token { tok: Tok::Period, .. })) => !is_keyword(w),
            _ => false,
        }
    }

    fn at_stmt_start(&self) -> bool {
        self.peek().is_some_and(|t| STMT_START.iter().any(|k| t.is_kw(k)))
    }

    fn stmts(&mut self, in_clause: bool) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while let Some(t) = self.peek() {
            if t.tok == Tok::Period {
                if in_clause {
                    break;
                }
                self.pos += 1;
                continue;
            }
            if !self.at_stmt_start() {
                break;
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn fresh(&mut self) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        id
    }

    fn resolve(&self, name: &str, t: &Token) -> PResult<SliceRef> {
        match resolve_in(&self.buffers, name) {
            Ok(fs) => Ok(SliceRef { text: name.to_string(), slice: fs.slice }),
            Err(ResolveError::UnknownField(_)) => {
                Err(ParseError::Unresolved { name: name.into(), line: t.line, col: t.col })
            }
            Err(ResolveError::Ambiguous(_)) => {
                Err(ParseError::Ambiguous { name: name.into(), line: t.line, col: t.col })
            }
        }
    }

    fn slice_ref(&mut self) -> PResult<SliceRef> {
        let t = self.next().ok_or_else(|| self.eof_error("a field name"))?;
        match &t.tok {
            Tok::Word(w) if !is_keyword(w) => self.resolve(w, &t),
            other => {
                Err(ParseError::syntax(t.line, t.col, format!("expected a field name, found {}", describe(other))))
            }
        }
    }

    fn operand(&mut self) -> PResult<Operand> {
        let t = self.next().ok_or_else(|| self.eof_error("an operand"))?;
        match &t.tok {
            Tok::Str(s) => Ok(Operand::Lit(s.clone())),
            Tok::Word(w) if w.bytes().all(|b| b.is_ascii_digit()) => Ok(Operand::Lit(w.as_bytes().to_vec())),
            Tok::Word(w) if !is_keyword(w) => Ok(Operand::Slice(self.resolve(w, &t)?)),
            other => Err(ParseError::syntax(t.line, t.col, format!("expected an operand, found {}", describe(other)))),
        }
    }

    fn file_buffer(&self, t: &Token, name: &str) -> PResult<BufferId> {
        self.buffers
            .iter()
            .position(|b| b.owner.as_deref().is_some_and(|o| o.eq_ignore_ascii_case(name)))
            .map(|i| BufferId(i as u32))
            .ok_or_else(|| ParseError::Unresolved { name: name.into(), line: t.line, col: t.col })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let t = self.next().expect("caller checked");
        let id = self.fresh();
        // the pragma belongs to the first statement starting on its line
        let reject = self.reject_lines.remove(&t.line);
        let kw = match &t.tok {
            Tok::Word(w) => w.to_ascii_uppercase(),
            _ => unreachable!(),
        };
        let kind = match kw.as_str() {
            "OPEN" => {
                let mut files = Vec::new();
                let mut mode = None;
                loop {
                    if self.accept_kw("INPUT") {
                        mode = Some(OpenMode::Input);
                    } else if self.accept_kw("OUTPUT") {
                        mode = Some(OpenMode::Output);
                    } else if let Some(nt) = self.peek().cloned() {
                        match &nt.tok {
                            Tok::Word(w) if !is_keyword(w) && !self.at_paragraph_header() => {
                                self.file_buffer(&nt, w)?;
                                files.push((mode.take(), w.clone()));
                                self.pos += 1;
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                if files.is_empty() {
                    return Err(ParseError::syntax(t.line, t.col, "OPEN needs at least one file"));
                }
                StmtKind::Open { files }
            }
            "CLOSE" => {
                let mut files = Vec::new();
                while let Some(nt) = self.peek().cloned() {
                    match &nt.tok {
                        Tok::Word(w) if !is_keyword(w) && !self.at_paragraph_header() => {
                            self.file_buffer(&nt, w)?;
                            files.push(w.clone());
                            self.pos += 1;
                        }
                        _ => break,
                    }
                }
                if files.is_empty() {
                    return Err(ParseError::syntax(t.line, t.col, "CLOSE needs at least one file"));
                }
                StmtKind::Close { files }
            }
            "READ" => self.read(&t)?,
            "MOVE" | "ADD" => {
                let src = self.operand()?;
                self.expect_kw("TO")?;
                let dst = self.slice_ref()?;
                let src = match src {
                    Operand::Lit(l) if kw == "MOVE" => Operand::Lit(fit(&l, dst.slice.len as usize)),
                    other => other,
                };
                if kw == "MOVE" {
                    StmtKind::Move { src, dst }
                } else {
                    StmtKind::Add { src, dst }
                }
            }
            "WRITE" => {
                let nt = self.next().ok_or_else(|| self.eof_error("a buffer name"))?;
                let Tok::Word(w) = &nt.tok else {
                    return Err(ParseError::syntax(nt.line, nt.col, "expected a buffer name"));
                };
                let bi = self
                    .buffers
                    .iter()
                    .position(|b| {
                        b.name.eq_ignore_ascii_case(w) || b.owner.as_deref().is_some_and(|o| o.eq_ignore_ascii_case(w))
                    })
                    .ok_or_else(|| ParseError::Unresolved { name: w.clone(), line: nt.line, col: nt.col })?;
                let b = &self.buffers[bi];
                if b.role != BufferRole::OutputFileBuffer {
                    return Err(ParseError::syntax(nt.line, nt.col, format!("'{w}' is not an output file buffer")));
                }
                let slice = Slice::new(BufferId(bi as u32), 0, b.len);
                StmtKind::Write { target: w.clone(), buffer: SliceRef { text: b.name.clone(), slice } }
            }
            "DISPLAY" => {
                let mut items = Vec::new();
                while let Some(nt) = self.peek().cloned() {
                    match &nt.tok {
                        Tok::Str(_) => items.push(self.operand()?),
                        Tok::Word(w) if !is_keyword(w) => {
                            if resolve_in(&self.buffers, w).is_err() && !w.bytes().all(|b| b.is_ascii_digit()) {
                                break;
                            }
                            items.push(self.operand()?);
                        }
                        _ => break,
                    }
                }
                StmtKind::Display { items }
            }
            "IF" => {
                let cond = self.cond()?;
                self.accept_kw("THEN");
                let then = self.stmts(false)?;
                let els = match self.peek().cloned() {
                    Some(et) if et.is_kw("ELSE") => {
                        self.pos += 1;
                        Some(Clause { line: et.line, body: self.stmts(false)? })
                    }
                    _ => None,
                };
                let end_line = self.expect_kw("END-IF")?.line;
                StmtKind::If { cond, then, els, end_line }
            }
            "PERFORM" => {
                if self.accept_kw("UNTIL") {
                    let cond = self.cond()?;
                    let body = self.stmts(false)?;
                    let end_line = self.expect_kw("END-PERFORM")?.line;
                    StmtKind::PerformUntil { cond, body, end_line }
                } else {
                    let nt = self.peek().cloned().ok_or_else(|| self.eof_error("a paragraph name"))?;
                    let name = self.word()?;
                    self.perform_sites.push((name.clone(), nt.line, nt.col));
                    StmtKind::PerformPara { name }
                }
            }
            "STOP" => {
                self.expect_kw("RUN")?;
                StmtKind::Stop { goback: false }
            }
            "GOBACK" => StmtKind::Stop { goback: true },
            _ => unreachable!(),
        };
        Ok(Stmt { id, line: t.line, reject, kind })
    }

    fn read(&mut self, t: &Token) -> PResult<StmtKind> {
        let nt = self.next().ok_or_else(|| self.eof_error("a file name"))?;
        let Tok::Word(file) = nt.tok.clone() else {
            return Err(ParseError::syntax(nt.line, nt.col, "expected a file name"));
        };
        let buffer = self.file_buffer(&nt, &file)?;
        let role = self.buffers[buffer.index()].role;
        match role {
            BufferRole::TableRowBuffer => {
                self.expect_kw("INTO")?;
                let into = self.slice_ref()?;
                self.expect_kw("KEY")?;
                let key = self.slice_ref()?;
                let it = self.expect_kw("INVALID")?;
                self.accept_kw("KEY");
                let invalid = Clause { line: it.line, body: self.stmts(true)? };
                let found = if self.peek_kw("NOT") && self.peek_at(1).is_some_and(|x| x.is_kw("INVALID")) {
                    let nt = self.next().unwrap();
                    self.pos += 1;
                    self.accept_kw("KEY");
                    Some(Clause { line: nt.line, body: self.stmts(true)? })
                } else {
                    None
                };
                let end_line = self.read_end()?;
                Ok(StmtKind::KeyRead { lookup: KeyLookup { table: file, into, key }, invalid, found, end_line })
            }
            BufferRole::InputFileBuffer => {
                let at_end = if self.peek_kw("AT") && self.peek_at(1).is_some_and(|x| x.is_kw("END")) {
                    let at = self.next().unwrap();
                    self.pos += 1;
                    Some(Clause { line: at.line, body: self.stmts(true)? })
                } else {
                    None
                };
                let not_at_end = if self.peek_kw("NOT") && self.peek_at(1).is_some_and(|x| x.is_kw("AT")) {
                    let nt = self.next().unwrap();
                    self.pos += 1;
                    self.expect_kw("END")?;
                    Some(Clause { line: nt.line, body: self.stmts(true)? })
                } else {
                    None
                };
                let end_line = self.read_end()?;
                Ok(StmtKind::Read { file, buffer, at_end, not_at_end, end_line })
            }
            _ => Err(ParseError::syntax(t.line, t.col, format!("'{file}' is not an input file or table"))),
        }
    }

    fn read_end(&mut self) -> PResult<Option<u32>> {
        match self.peek().cloned() {
            Some(t) if t.is_kw("END-READ") => {
                self.pos += 1;
                Ok(Some(t.line))
            }
            Some(t) if t.tok == Tok::Period => {
                self.pos += 1;
                Ok(None)
            }
            _ => Ok(None),
        }
    }

    // ---- conditions ----

    fn cond(&mut self) -> PResult<Cond> {
        let mut parts = vec![self.conj()?];
        while self.accept_kw("OR") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Cond::Or(parts) })
    }

    fn conj(&mut self) -> PResult<Cond> {
        let mut parts = vec![self.atom()?];
        while self.accept_kw("AND") {
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Cond::And(parts) })
    }

    fn atom(&mut self) -> PResult<Cond> {
        if self.accept(&Tok::LParen) {
            let c = self.cond()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(c);
        }
        let lhs = self.operand()?;
        let op = match self.next() {
            Some(Token { tok: Tok::Eq, .. }) => CmpOp::Eq,
            Some(Token { tok: Tok::Ne, .. }) => CmpOp::Ne,
            Some(t) if t.is_kw("NOT") => {
                self.expect(Tok::Eq, "'='")?;
                CmpOp::Ne
            }
            Some(t) => {
                return Err(ParseError::syntax(
                    t.line,
                    t.col,
                    format!("expected a comparison, found {}", describe(&t.tok)),
                ))
            }
            None => return Err(self.eof_error("a comparison")),
        };
        let rhs = self.operand()?;
        Ok(normalize_cmp(lhs, op, rhs))
    }
}

/// Put the slice on the left and fit the literal to the slice width.
/// A literal that cannot fit (non-blank excess) becomes a constant
/// literal-to-literal comparison.
fn normalize_cmp(lhs: Operand, op: CmpOp, rhs: Operand) -> Cond {
    let (lhs, rhs) = match (&lhs, &rhs) {
        (Operand::Lit(_), Operand::Slice(_)) => (rhs, lhs),
        _ => (lhs, rhs),
    };
    if let (Operand::Slice(s), Operand::Lit(l)) = (&lhs, &rhs) {
        let n = s.slice.len as usize;
        if l.len() > n && l[n..].iter().any(|&b| b != b' ') {
            return Cond::Cmp { lhs: Operand::Lit(vec![0]), op, rhs: Operand::Lit(vec![1]) };
        }
        return Cond::Cmp { lhs, op, rhs: Operand::Lit(fit(l, n)) };
    }
    Cond::Cmp { lhs, op, rhs }
}
