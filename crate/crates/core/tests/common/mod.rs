#![allow(dead_code)]

use std::sync::Arc;

use ffa_core::domains::AnalysisEnv;
use ffa_core::formatspec::{FormatSpec, Tables};
use ffa_core::minilang::{build_cfg, parse_program, Cfg, NodeId, Program};

pub const RUNNING: &str = include_str!("../../fixtures/running.mcbl");
pub const NO_TRL_CHECK: &str = include_str!("../../fixtures/running_no_trl_check.mcbl");
pub const PARAGRAPHS: &str = include_str!("../../fixtures/running_paragraphs.mcbl");
pub const RUNNING_FFS: &str = include_str!("../../fixtures/running.ffs");
pub const PAYMENTS: &str = include_str!("../../fixtures/payments.mcbl");
pub const PAYMENTS_FFS: &str = include_str!("../../fixtures/payments.ffs");
pub const PAYMENTS_TABLES: &str = include_str!("../../fixtures/payments_tables.json");

/// Lines of the published listing sit this far above the fixture's lines.
pub const LINE_OFFSET: u32 = 11;

pub fn line(listing_line: u32) -> u32 {
    listing_line + LINE_OFFSET
}

pub struct Fixture {
    pub name: &'static str,
    pub program: Arc<Program>,
    pub spec: FormatSpec,
    pub tables: Option<Tables>,
    pub env: Arc<AnalysisEnv>,
    pub cfg: Cfg,
}

impl Fixture {
    pub fn load(name: &'static str, program: &str, spec: &str, tables: Option<&str>) -> Fixture {
        let program = Arc::new(parse_program(program).unwrap());
        let spec = FormatSpec::parse(spec).unwrap();
        let tables = tables.map(|t| Tables::from_json(t).unwrap());
        let env = AnalysisEnv::new(program.clone(), Some(&spec)).unwrap();
        let cfg = build_cfg(&program);
        Fixture { name, program, spec, tables, env, cfg }
    }

    /// Executable nodes on a source line.
    pub fn nodes_at(&self, line: u32) -> Vec<NodeId> {
        self.cfg.nodes_at_line(line).into_iter().filter(|&n| self.cfg.node(n).is_executable()).collect()
    }

    /// The single executable node on a source line.
    pub fn node_at(&self, line: u32) -> NodeId {
        let ns = self.nodes_at(line);
        assert_eq!(ns.len(), 1, "line {line} has nodes {ns:?}");
        ns[0]
    }
}

pub fn running() -> Fixture {
    Fixture::load("running", RUNNING, RUNNING_FFS, None)
}

pub fn no_trl_check() -> Fixture {
    Fixture::load("running_no_trl_check", NO_TRL_CHECK, RUNNING_FFS, None)
}

pub fn paragraphs() -> Fixture {
    Fixture::load("running_paragraphs", PARAGRAPHS, RUNNING_FFS, None)
}

pub fn payments() -> Fixture {
    Fixture::load("payments", PAYMENTS, PAYMENTS_FFS, Some(PAYMENTS_TABLES))
}

pub fn all() -> Vec<Fixture> {
    vec![running(), no_trl_check(), paragraphs(), payments()]
}
