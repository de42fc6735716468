//! The Cobol-like input language: parsing, field resolution, control-flow
//! graphs and a line-preserving printer.

pub mod ast;
pub mod cfg;
mod lexer;
mod parser;
pub mod printer;

use thiserror::Error;

pub use ast::*;
pub use cfg::{Cfg, CfgNode, Edge, EdgeLabel, NodeId, NodeKind};
pub use parser::resolve_in;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("line {line}: duplicate paragraph '{name}'")]
    DuplicateParagraph { name: String, line: u32 },
    #[error("line {line}, column {col}: unresolved name '{name}'")]
    Unresolved { name: String, line: u32, col: u32 },
    #[error("line {line}, column {col}: '{name}' is ambiguous across overlays")]
    Ambiguous { name: String, line: u32, col: u32 },
    #[error("recursive PERFORM chain: {}", chain.join(" -> "))]
    Recursion { chain: Vec<String> },
    #[error("line {line}: {message}")]
    Layout { line: u32, message: String },
}

impl ParseError {
    pub(crate) fn syntax(line: u32, col: u32, message: impl Into<String>) -> Self {
        ParseError::Syntax { line, col, message: message.into() }
    }

    /// Source line of the error, 0 when it has none.
    pub fn line(&self) -> u32 {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::DuplicateParagraph { line, .. }
            | ParseError::Unresolved { line, .. }
            | ParseError::Ambiguous { line, .. }
            | ParseError::Layout { line, .. } => *line,
            ParseError::Recursion { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown field '{0}'")]
    UnknownField(String),
    #[error("'{0}' is ambiguous across overlays")]
    Ambiguous(String),
}

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    parser::parse(source)
}

pub fn build_cfg(p: &Program) -> Cfg {
    cfg::build(p)
}

pub fn resolve_slice(p: &Program, name: &str) -> Result<FieldSlice, ResolveError> {
    resolve_in(&p.buffers, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "DATA DIVISION.\nWORKING-STORAGE.\n  VAR a LENGTH 1.\n  VAR b LENGTH 2 VALUE 'X'.\nPROCEDURE DIVISION.\n";

    fn prog(body: &str) -> Program {
        parse_program(&format!("{HEADER}{body}")).unwrap()
    }

    #[test]
    fn empty_procedure_gives_entry_exit() {
        let p = prog("");
        let cfg = build_cfg(&p);
        assert_eq!(cfg.len(), 2);
        assert_eq!(cfg.edges.len(), 1);
        assert!(cfg.has_edge(cfg.entry, cfg.exit));
    }

    #[test]
    fn straight_line_chain() {
        let p = prog("MOVE 'A' TO a.\nMOVE a TO b.\nDISPLAY b.\n");
        let cfg = build_cfg(&p);
        assert_eq!(cfg.len(), 5);
        assert_eq!(cfg.edges.len(), 4);
    }

    #[test]
    fn if_makes_a_diamond() {
        let p = prog("IF a = 'Y'\n  MOVE 'A' TO b\nELSE\n  MOVE 'B' TO b\nEND-IF.\nDISPLAY b.\n");
        let cfg = build_cfg(&p);
        let cond = cfg.nodes.iter().find(|n| n.kind.is_conditional()).unwrap().id;
        let labels: Vec<EdgeLabel> = cfg.succ_edges(cond).map(|e| e.label).collect();
        assert_eq!(labels, vec![EdgeLabel::True, EdgeLabel::False]);
        let display = cfg.nodes.iter().find(|n| matches!(n.kind, NodeKind::Display(_))).unwrap().id;
        assert_eq!(cfg.pred_edges(display).count(), 2);
    }

    #[test]
    fn value_clause_is_padded() {
        let p = prog("");
        assert_eq!(p.buffers[1].value.as_deref(), Some(&b"X "[..]));
    }

    #[test]
    fn self_recursion_is_rejected() {
        let err =
            parse_program(&format!("{HEADER}PERFORM a-para.\nSTOP RUN.\na-para.\n  PERFORM a-para.\n")).unwrap_err();
        assert!(matches!(err, ParseError::Recursion { .. }));
    }

    #[test]
    fn transitive_recursion_is_rejected() {
        let src = format!("{HEADER}PERFORM p1.\np1.\n  PERFORM p2.\np2.\n  PERFORM p1.\n");
        assert!(matches!(parse_program(&src).unwrap_err(), ParseError::Recursion { .. }));
    }

    #[test]
    fn duplicate_paragraph_is_rejected() {
        let src = format!("{HEADER}PERFORM p1.\np1.\n  DISPLAY a.\np1.\n  DISPLAY b.\n");
        assert!(matches!(parse_program(&src).unwrap_err(), ParseError::DuplicateParagraph { .. }));
    }

    #[test]
    fn unresolved_perform_target() {
        let src = format!("{HEADER}PERFORM nowhere.\n");
        assert!(matches!(parse_program(&src).unwrap_err(), ParseError::Unresolved { .. }));
    }

    #[test]
    fn unresolved_field_reports_position() {
        let src = format!("{HEADER}MOVE 'A' TO zz.\n");
        match parse_program(&src).unwrap_err() {
            ParseError::Unresolved { name, line, col } => {
                assert_eq!(name, "zz");
                assert_eq!(line, 6);
                assert_eq!(col, 13);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let src = format!("{HEADER}MOVE 'A' a.\n");
        let err = parse_program(&src).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 6, .. }), "{err}");
    }

    #[test]
    fn perform_call_and_return_edges_pair_up() {
        let src = format!("{HEADER}PERFORM p1.\nPERFORM p1.\nSTOP RUN.\np1.\n  DISPLAY a.\n");
        let cfg = build_cfg(&parse_program(&src).unwrap());
        let calls: Vec<&Edge> = cfg.edges.iter().filter(|e| matches!(e.label, EdgeLabel::Call(_))).collect();
        let rets: Vec<&Edge> = cfg.edges.iter().filter(|e| matches!(e.label, EdgeLabel::Return(_))).collect();
        assert_eq!(calls.len(), 2);
        assert_eq!(rets.len(), 2);
        for c in calls {
            let EdgeLabel::Call(site) = c.label else { unreachable!() };
            assert!(rets.iter().any(|r| r.label == EdgeLabel::Return(site) && cfg.has_edge(site, c.to)));
        }
    }

    #[test]
    fn paragraph_stop_goes_to_exit() {
        let src = format!("{HEADER}PERFORM p1.\nDISPLAY a.\np1.\n  STOP RUN.\n");
        let cfg = build_cfg(&parse_program(&src).unwrap());
        let stop = cfg.nodes.iter().find(|n| n.kind == NodeKind::Stop).unwrap();
        assert_eq!(stop.paragraph, Some(0));
        assert!(cfg.has_edge(stop.id, cfg.exit));
    }

    #[test]
    fn printer_round_trip_keeps_lines() {
        let body = "IF a = 'Y' AND (b = 'X' OR b <> a)\n  MOVE 'A' TO b\nELSE\n  DISPLAY 'no' *> @reject\nEND-IF.\nPERFORM UNTIL a = 'Y'\n  MOVE 'Y' TO a\nEND-PERFORM.\nSTOP RUN.\n";
        let p = prog(body);
        let text = printer::print_program(&p);
        let q = parse_program(&text).unwrap();
        let (c1, c2) = (build_cfg(&p), build_cfg(&q));
        assert_eq!(c1.len(), c2.len());
        for (a, b) in c1.nodes.iter().zip(&c2.nodes) {
            assert_eq!((a.line, a.reject, a.kind.name()), (b.line, b.reject, b.kind.name()));
        }
        assert_eq!(c1.edges, c2.edges);
    }
}
