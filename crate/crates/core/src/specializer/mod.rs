//! Program specialization: statements unreachable on every file a
//! specialization automaton accepts are projected out, then guards and
//! writes made useless by the projection are simplified away.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::domains::{AnalysisEnv, Cp, Domain, EnvError};
use crate::formatspec::{FormatSpec, InputAutomaton};
use crate::lifted::{analyze, analyze_direct, LiftedError, Options, Solution};
use crate::minilang::printer::print_program;
use crate::minilang::{build_cfg, Cfg, NodeId, NodeKind, Operand, Program, Slice, Stmt, StmtId, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecializeError {
    #[error("paragraph '{0}' would be removed but is still performed")]
    Orphan(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Lifted(#[from] LiftedError),
}

/// Executable nodes whose fact is bottom in every file state and context.
pub fn find_unreachable<D: Domain>(
    cfg: &Cfg,
    automaton: &InputAutomaton,
    d: &D,
) -> Result<BTreeSet<NodeId>, LiftedError> {
    let sol = analyze(cfg, automaton, d, &Options::default())?;
    Ok(unreachable_in(cfg, &sol))
}

fn unreachable_in<V: Clone>(cfg: &Cfg, sol: &Solution<V>) -> BTreeSet<NodeId> {
    cfg.nodes.iter().filter(|n| n.is_executable() && sol.unreachable(n.id)).map(|n| n.id).collect()
}

fn stmt_nodes(cfg: &Cfg) -> BTreeMap<StmtId, NodeId> {
    cfg.nodes.iter().filter_map(|n| n.stmt.map(|s| (s, n.id))).collect()
}

fn prune(body: &[Stmt], dead: &BTreeSet<StmtId>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        if dead.contains(&s.id) {
            continue;
        }
        let mut s = s.clone();
        let clause = |c: &mut Option<crate::minilang::Clause>| {
            if let Some(cl) = c {
                cl.body = prune(&cl.body, dead);
                if cl.body.is_empty() {
                    *c = None;
                }
            }
        };
        match &mut s.kind {
            StmtKind::Read { at_end, not_at_end, .. } => {
                clause(at_end);
                clause(not_at_end);
            }
            StmtKind::KeyRead { invalid, found, .. } => {
                invalid.body = prune(&invalid.body, dead);
                clause(found);
            }
            StmtKind::If { then, els, .. } => {
                *then = prune(then, dead);
                clause(els);
            }
            StmtKind::PerformUntil { body, .. } => *body = prune(body, dead),
            _ => {}
        }
        out.push(s);
    }
    out
}

fn performed(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        if let StmtKind::PerformPara { name } = &s.kind {
            out.insert(name.to_ascii_lowercase());
        }
        for c in s.children() {
            performed(c, out);
        }
    }
}

/// Delete the statements of `unreachable` nodes. An IF that loses a branch
/// keeps the other under its condition; an empty clause is dropped.
pub fn project(program: &Program, cfg: &Cfg, unreachable: &BTreeSet<NodeId>) -> Result<Program, SpecializeError> {
    let dead: BTreeSet<StmtId> =
        stmt_nodes(cfg).into_iter().filter(|(_, n)| unreachable.contains(n)).map(|(s, _)| s).collect();
    let mut p = program.clone();
    p.main = prune(&program.main, &dead);
    let mut emptied = BTreeSet::new();
    for para in &mut p.paragraphs {
        let had = !para.body.is_empty();
        para.body = prune(&para.body, &dead);
        if had && para.body.is_empty() {
            emptied.insert(para.name.to_ascii_lowercase());
        }
    }
    let mut calls = BTreeSet::new();
    performed(&p.main, &mut calls);
    for para in &p.paragraphs {
        performed(&para.body, &mut calls);
    }
    if let Some(name) = emptied.iter().find(|n| calls.contains(*n)) {
        return Err(SpecializeError::Orphan(name.clone()));
    }
    p.paragraphs.retain(|para| !emptied.contains(&para.name.to_ascii_lowercase()));
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Rewrite {
    /// An IF whose condition is constant was replaced by the branch taken:
    /// THEN when `holds`, else the ELSE clause of an IF with an empty THEN.
    CollapseIf { line: u32, cond: String, holds: bool },
    /// An assignment to storage nothing reads was removed.
    RemoveDeadWrite { line: u32, target: String },
}

fn reads(s: &Stmt, out: &mut Vec<Slice>) {
    let op = |o: &Operand, out: &mut Vec<Slice>| out.extend(o.slice());
    match &s.kind {
        StmtKind::Move { src, .. } => op(src, out),
        StmtKind::Add { src, dst } => {
            op(src, out);
            out.push(dst.slice);
        }
        StmtKind::Write { buffer, .. } => out.push(buffer.slice),
        StmtKind::Display { items } => items.iter().for_each(|o| op(o, out)),
        StmtKind::KeyRead { lookup, .. } => out.push(lookup.key.slice),
        StmtKind::If { cond, .. } | StmtKind::PerformUntil { cond, .. } => out.extend(cond.slices()),
        _ => {}
    }
}

fn find_dead_writes(p: &Program) -> BTreeSet<StmtId> {
    let mut used = Vec::new();
    p.visit(&mut |s| reads(s, &mut used));
    let mut dead = BTreeSet::new();
    p.visit(&mut |s| {
        if let StmtKind::Move { dst, .. } | StmtKind::Add { dst, .. } = &s.kind {
            if !used.iter().any(|u| u.overlaps(&dst.slice)) {
                dead.insert(s.id);
            }
        }
    });
    dead
}

/// Replace the IF `target` by its THEN branch, or by its ELSE branch when
/// `holds` is false.
fn collapse(body: &mut Vec<Stmt>, target: StmtId, holds: bool) -> bool {
    for i in 0..body.len() {
        if body[i].id == target {
            let StmtKind::If { then, els, .. } = body[i].kind.clone() else { return false };
            let kept = if holds { then } else { els.map(|c| c.body).unwrap_or_default() };
            body.splice(i..=i, kept);
            return true;
        }
        let found = match &mut body[i].kind {
            StmtKind::Read { at_end, not_at_end, .. } => {
                at_end.iter_mut().chain(not_at_end.iter_mut()).any(|c| collapse(&mut c.body, target, holds))
            }
            StmtKind::KeyRead { invalid, found, .. } => {
                collapse(&mut invalid.body, target, holds)
                    || found.iter_mut().any(|c| collapse(&mut c.body, target, holds))
            }
            StmtKind::If { then, els, .. } => {
                collapse(then, target, holds) || els.iter_mut().any(|c| collapse(&mut c.body, target, holds))
            }
            StmtKind::PerformUntil { body, .. } => collapse(body, target, holds),
            _ => false,
        };
        if found {
            return true;
        }
    }
    false
}

fn cp_solution(
    p: &Arc<Program>,
    spec: Option<&FormatSpec>,
    automaton: Option<&InputAutomaton>,
) -> Result<(Cp, Cfg, Solution<crate::domains::CpValue>), SpecializeError> {
    let env = AnalysisEnv::new(p.clone(), spec)?;
    let cp = Cp::new(env);
    let cfg = build_cfg(p);
    let sol = match automaton {
        Some(a) => analyze(&cfg, a, &cp, &Options::default())?,
        None => analyze_direct(&cfg, &cp, &Options::default())?,
    };
    Ok((cp, cfg, sol))
}

/// The first IF that can lose its test: an ELSE-less IF whose condition
/// holds in every reachable state, or an IF with an empty THEN whose
/// condition never does, according to a fresh constant propagation run.
fn collapsible(
    p: &Arc<Program>,
    spec: Option<&FormatSpec>,
    a: Option<&InputAutomaton>,
) -> Result<Option<(StmtId, u32, String, bool)>, SpecializeError> {
    let (cp, cfg, sol) = cp_solution(p, spec, a)?;
    let mut cands = Vec::new();
    p.visit(&mut |s| match &s.kind {
        StmtKind::If { cond, els: None, .. } => cands.push((s.id, s.line, cond.clone(), true)),
        StmtKind::If { cond, then, els: Some(_), .. } if then.is_empty() => {
            cands.push((s.id, s.line, cond.clone(), false))
        }
        _ => {}
    });
    let nodes = stmt_nodes(&cfg);
    for (id, line, cond, want) in cands {
        let Some(&n) = nodes.get(&id) else { continue };
        let fact = sol.at(&cp, n);
        if !fact.is_bottom() && fact.iter().all(|(_, v)| cp.truth(&cond, v) == Some(want)) {
            debug_assert!(matches!(cfg.node(n).kind, NodeKind::If(_)));
            return Ok(Some((id, line, crate::minilang::printer::print_cond(&cond), want)));
        }
    }
    Ok(None)
}

/// Rewrite to a fixpoint: collapse IFs with a constant condition, then drop
/// assignments to storage nothing reads.
pub fn simplify(
    program: &Program,
    spec: Option<&FormatSpec>,
    automaton: Option<&InputAutomaton>,
) -> Result<(Program, Vec<Rewrite>), SpecializeError> {
    let mut p = program.clone();
    let mut log = Vec::new();
    loop {
        let arc = Arc::new(p.clone());
        if let Some((id, line, cond, holds)) = collapsible(&arc, spec, automaton)? {
            let done = collapse(&mut p.main, id, holds)
                || p.paragraphs.iter_mut().any(|para| collapse(&mut para.body, id, holds));
            debug_assert!(done);
            log::debug!("collapsed IF at line {line}");
            log.push(Rewrite::CollapseIf { line, cond, holds });
            continue;
        }
        let dead = find_dead_writes(&p);
        if dead.is_empty() {
            break;
        }
        p.visit(&mut |s| {
            if let (true, StmtKind::Move { dst, .. } | StmtKind::Add { dst, .. }) = (dead.contains(&s.id), &s.kind) {
                log.push(Rewrite::RemoveDeadWrite { line: s.line, target: dst.text.clone() });
            }
        });
        p.main = prune(&p.main, &dead);
        for para in &mut p.paragraphs {
            para.body = prune(&para.body, &dead);
        }
    }
    Ok((p, log))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecializationResult {
    pub criterion: String,
    pub unreachable: BTreeSet<NodeId>,
    pub retained: BTreeSet<NodeId>,
    pub unreachable_lines: Vec<u32>,
    pub projected: Program,
    pub rewrites: Vec<Rewrite>,
    /// The final program: projected, then simplified when asked.
    pub program: Program,
    pub source: String,
    pub notes: Vec<String>,
}

impl SpecializationResult {
    /// Removed lines and rewrites as JSON.
    pub fn diff_json(&self) -> serde_json::Value {
        serde_json::json!({
            "criterion": self.criterion,
            "unreachable_lines": self.unreachable_lines,
            "unreachable_nodes": self.unreachable.len(),
            "retained_nodes": self.retained.len(),
            "rewrites": self.rewrites,
            "notes": self.notes,
        })
    }
}

/// Specialize `program` to the files `automaton` accepts, using constant
/// propagation to find unreachable statements.
pub fn specialize(
    program: &Arc<Program>,
    spec: &FormatSpec,
    automaton: &InputAutomaton,
    simplify_too: bool,
) -> Result<SpecializationResult, SpecializeError> {
    let (_, cfg, sol) = cp_solution(program, Some(spec), Some(automaton))?;
    let unreachable = unreachable_in(&cfg, &sol);
    let retained: BTreeSet<NodeId> =
        cfg.nodes.iter().filter(|n| n.is_executable() && !unreachable.contains(&n.id)).map(|n| n.id).collect();
    let mut notes = Vec::new();
    for n in cfg.nodes.iter().filter(|n| n.reject && retained.contains(&n.id)) {
        notes.push(format!("rejection point at line {} is reachable under '{}' and is kept", n.line, automaton.name));
    }
    let mut lines: Vec<u32> = unreachable.iter().map(|&n| cfg.node(n).line).collect();
    lines.sort();
    lines.dedup();
    let projected = project(program, &cfg, &unreachable)?;
    let (program, rewrites) =
        if simplify_too { simplify(&projected, Some(spec), Some(automaton))? } else { (projected.clone(), Vec::new()) };
    Ok(SpecializationResult {
        criterion: automaton.name.clone(),
        source: print_program(&program),
        unreachable,
        retained,
        unreachable_lines: lines,
        projected,
        rewrites,
        program,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionCount {
    pub criterion: String,
    pub retained: usize,
    pub specific: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Commonality {
    /// Nodes retained by every criterion.
    pub common: usize,
    pub criteria: Vec<CriterionCount>,
}

/// Common nodes are retained by every criterion; the rest of a
/// criterion's retained nodes are specific to it.
pub fn commonality(results: &[SpecializationResult]) -> Commonality {
    let common: BTreeSet<NodeId> = match results.split_first() {
        None => BTreeSet::new(),
        Some((first, rest)) => {
            rest.iter().fold(first.retained.clone(), |acc, r| acc.intersection(&r.retained).copied().collect())
        }
    };
    Commonality {
        common: common.len(),
        criteria: results
            .iter()
            .map(|r| CriterionCount {
                criterion: r.criterion.clone(),
                retained: r.retained.len(),
                specific: r.retained.difference(&common).count(),
            })
            .collect(),
    }
}
