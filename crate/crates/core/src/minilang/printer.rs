//! Source printer that keeps every statement on its original line, so that
//! reports on a rewritten program still refer to the lines of the input.

use std::collections::BTreeSet;

use super::ast::*;

struct Out {
    lines: Vec<String>,
    reject_lines: BTreeSet<usize>,
    cur: usize,
}

impl Out {
    fn put(&mut self, line: u32, depth: usize, text: &str) {
        let line = line as usize;
        if line > self.cur {
            self.cur = line;
        }
        if self.lines.len() <= self.cur {
            self.lines.resize(self.cur + 1, String::new());
        }
        let l = &mut self.lines[self.cur];
        if l.is_empty() {
            l.push_str(&" ".repeat(4 + depth * 2));
        } else {
            l.push(' ');
        }
        l.push_str(text);
    }
}

fn quote(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    format!("'{}'", s.replace('\'', "''"))
}

fn operand(o: &Operand) -> String {
    match o {
        Operand::Lit(l) => quote(l),
        Operand::Slice(r) => r.text.clone(),
    }
}

fn cond(c: &Cond, nested: bool) -> String {
    match c {
        Cond::Cmp { lhs, op, rhs } => format!("{} {} {}", operand(lhs), op, operand(rhs)),
        Cond::And(cs) => {
            let inner: Vec<String> = cs.iter().map(|c| cond(c, true)).collect();
            let s = inner.join(" AND ");
            if nested {
                format!("({s})")
            } else {
                s
            }
        }
        Cond::Or(cs) => {
            let inner: Vec<String> = cs.iter().map(|c| cond(c, true)).collect();
            let s = inner.join(" OR ");
            if nested {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub fn print_cond(c: &Cond) -> String {
    cond(c, false)
}

pub fn print_operand(o: &Operand) -> String {
    operand(o)
}

fn stmts(out: &mut Out, body: &[Stmt], depth: usize, top: bool) {
    for s in body {
        stmt(out, s, depth);
        if top {
            out.lines[out.cur].push('.');
        }
    }
}

fn stmt(out: &mut Out, s: &Stmt, depth: usize) {
    let start = out.cur.max(s.line as usize);
    match &s.kind {
        StmtKind::Open { files } => {
            let mut t = String::from("OPEN");
            for (mode, f) in files {
                match mode {
                    Some(OpenMode::Input) => t.push_str(" INPUT"),
                    Some(OpenMode::Output) => t.push_str(" OUTPUT"),
                    None => {}
                }
                t.push(' ');
                t.push_str(f);
            }
            out.put(s.line, depth, &t);
        }
        StmtKind::Close { files } => out.put(s.line, depth, &format!("CLOSE {}", files.join(" "))),
        StmtKind::Move { src, dst } => out.put(s.line, depth, &format!("MOVE {} TO {}", operand(src), dst.text)),
        StmtKind::Add { src, dst } => out.put(s.line, depth, &format!("ADD {} TO {}", operand(src), dst.text)),
        StmtKind::Write { target, .. } => out.put(s.line, depth, &format!("WRITE {target}")),
        StmtKind::Display { items } => {
            let parts: Vec<String> = items.iter().map(operand).collect();
            let t = if parts.is_empty() { "DISPLAY".to_string() } else { format!("DISPLAY {}", parts.join(" ")) };
            out.put(s.line, depth, &t);
        }
        StmtKind::Stop { goback } => out.put(s.line, depth, if *goback { "GOBACK" } else { "STOP RUN" }),
        StmtKind::PerformPara { name } => out.put(s.line, depth, &format!("PERFORM {name}")),
        StmtKind::Read { file, at_end, not_at_end, end_line, .. } => {
            out.put(s.line, depth, &format!("READ {file}"));
            if let Some(c) = at_end {
                out.put(c.line, depth + 1, "AT END");
                stmts(out, &c.body, depth + 2, false);
            }
            if let Some(c) = not_at_end {
                out.put(c.line, depth + 1, "NOT AT END");
                stmts(out, &c.body, depth + 2, false);
            }
            out.put(end_line.unwrap_or(s.line), depth, "END-READ");
        }
        StmtKind::KeyRead { lookup, invalid, found, end_line } => {
            out.put(s.line, depth, &format!("READ {} INTO {} KEY {}", lookup.table, lookup.into.text, lookup.key.text));
            out.put(invalid.line, depth + 1, "INVALID KEY");
            stmts(out, &invalid.body, depth + 2, false);
            if let Some(c) = found {
                out.put(c.line, depth + 1, "NOT INVALID KEY");
                stmts(out, &c.body, depth + 2, false);
            }
            out.put(end_line.unwrap_or(s.line), depth, "END-READ");
        }
        StmtKind::If { cond: c, then, els, end_line } => {
            out.put(s.line, depth, &format!("IF {}", cond(c, false)));
            stmts(out, then, depth + 1, false);
            if let Some(e) = els {
                out.put(e.line, depth, "ELSE");
                stmts(out, &e.body, depth + 1, false);
            }
            out.put(*end_line, depth, "END-IF");
        }
        StmtKind::PerformUntil { cond: c, body, end_line } => {
            out.put(s.line, depth, &format!("PERFORM UNTIL {}", cond(c, false)));
            stmts(out, body, depth + 1, false);
            out.put(*end_line, depth, "END-PERFORM");
        }
    }
    if s.reject {
        out.reject_lines.insert(start);
    }
}

/// Print a program. Statement lines match the `line` fields of the AST.
pub fn print_program(p: &Program) -> String {
    let header: Vec<String> = p.header_text.lines().map(str::to_string).collect();
    let mut out = Out { lines: vec![String::new()], reject_lines: BTreeSet::new(), cur: p.procedure_line as usize };
    out.lines.extend(header);
    stmts(&mut out, &p.main, 0, true);
    for para in &p.paragraphs {
        if out.cur >= para.line as usize {
            out.cur += 1;
        }
        let line = out.cur.max(para.line as usize) as u32;
        out.cur = line as usize;
        if out.lines.len() <= out.cur {
            out.lines.resize(out.cur + 1, String::new());
        }
        out.lines[out.cur] = format!("{}.", para.name);
        stmts(&mut out, &para.body, 0, true);
    }
    for l in &out.reject_lines {
        out.lines[*l].push_str(" *> @reject");
    }
    let mut text = String::new();
    for l in out.lines.iter().skip(1) {
        text.push_str(l.trim_end_matches(' '));
        text.push('\n');
    }
    text
}
