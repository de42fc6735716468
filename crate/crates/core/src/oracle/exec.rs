use super::*;
use crate::formatspec::Tables;
use crate::lifted::Context;
use crate::minilang::{fit, Cfg, CmpOp, Cond, EdgeLabel, NodeId, NodeKind, Operand};

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Reached the exit after falling off the end of the main procedure.
    Exit,
    /// Reached the exit through STOP RUN or GOBACK.
    Stop,
    FuelExhausted,
}

/// The state before executing `node`, with `consumed` records read so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub node: NodeId,
    pub ctx: Context,
    pub consumed: usize,
    pub state: ConcreteState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub status: Status,
    /// Some reject-flagged node was executed.
    pub passed_reject: bool,
    /// Records written, by output buffer name.
    pub writes: Vec<(String, Vec<Option<u8>>)>,
    pub consumed: usize,
}

impl Trace {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.steps.iter().map(|s| s.node)
    }

    pub fn final_state(&self) -> Option<&ConcreteState> {
        self.steps.last().map(|s| &s.state)
    }
}

fn operand(s: &ConcreteState, o: &Operand) -> Vec<Option<u8>> {
    match o {
        Operand::Lit(l) => l.iter().map(|&b| Some(b)).collect(),
        Operand::Slice(r) => s.get(r.slice).to_vec(),
    }
}

fn fit_opt(v: &[Option<u8>], len: usize) -> Vec<Option<u8>> {
    let mut out: Vec<Option<u8>> = v.iter().copied().take(len).collect();
    out.resize(len, Some(b' '));
    out
}

/// States in which `c` evaluates to `want`. Comparisons touching
/// undefined bytes go both ways; the equal outcome fixes the undefined
/// bytes to the compared value.
pub(crate) fn assume(c: &Cond, want: bool, s: &ConcreteState) -> Vec<ConcreteState> {
    let mut out = match c {
        Cond::Cmp { lhs, op, rhs } => {
            let want_eq = want == (*op == CmpOp::Eq);
            let (a, b) = (operand(s, lhs), operand(s, rhs));
            let n = a.len().max(b.len());
            let (a, b) = (fit_opt(&a, n), fit_opt(&b, n));
            let differs = a.iter().zip(&b).any(|(x, y)| matches!((x, y), (Some(x), Some(y)) if x != y));
            let known = a.iter().chain(&b).all(Option::is_some);
            if differs {
                if want_eq {
                    vec![]
                } else {
                    vec![s.clone()]
                }
            } else if known || !want_eq {
                if known && !want_eq {
                    vec![]
                } else {
                    vec![s.clone()]
                }
            } else {
                let mut t = s.clone();
                let merged: Vec<Option<u8>> = a.iter().zip(&b).map(|(x, y)| x.or(*y)).collect();
                for o in [lhs, rhs] {
                    if let Operand::Slice(r) = o {
                        t.set(r.slice, &merged[..r.slice.len as usize]);
                    }
                }
                vec![t]
            }
        }
        Cond::And(cs) if want => {
            cs.iter().fold(vec![s.clone()], |acc, c| acc.iter().flat_map(|x| assume(c, true, x)).collect())
        }
        Cond::Or(cs) if !want => {
            cs.iter().fold(vec![s.clone()], |acc, c| acc.iter().flat_map(|x| assume(c, false, x)).collect())
        }
        Cond::And(cs) | Cond::Or(cs) => cs.iter().flat_map(|c| assume(c, want, s)).collect(),
    };
    out.sort();
    out.dedup();
    out
}

fn add(a: &[Option<u8>], b: &[Option<u8>], len: usize) -> Vec<Option<u8>> {
    let num = |v: &[Option<u8>]| -> Option<u128> {
        let bytes: Vec<u8> = v.iter().copied().collect::<Option<Vec<u8>>>()?;
        let t = String::from_utf8(bytes).ok()?;
        let t = t.trim();
        if t.is_empty() {
            return Some(0);
        }
        if t.len() > 30 || !t.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        t.parse().ok()
    };
    match (num(a), num(b)) {
        (Some(x), Some(y)) => {
            let m = 10u128.saturating_pow(len.min(30) as u32);
            let r = format!("{:0len$}", (x + y) % m, len = len);
            r.bytes().map(Some).collect()
        }
        _ => vec![None; len],
    }
}

struct Run {
    node: NodeId,
    ctx: Context,
    state: ConcreteState,
    cursor: usize,
    trace: Trace,
}

/// Execute `cfg` on `file`. Undefined comparisons fork, so the result may
/// hold several traces; without undefined reads there is exactly one.
pub fn concrete_exec(
    env: &AnalysisEnv,
    cfg: &Cfg,
    file: &[Vec<u8>],
    tables: Option<&Tables>,
    fuel: usize,
) -> Vec<Trace> {
    let program = &env.program;
    let empty = Tables::default();
    let tables = tables.unwrap_or(&empty);
    let mut done = Vec::new();
    let mut pending = vec![Run {
        node: cfg.entry,
        ctx: Vec::new(),
        state: ConcreteState::initial(program),
        cursor: 0,
        trace: Trace { steps: vec![], status: Status::Exit, passed_reject: false, writes: vec![], consumed: 0 },
    }];
    while let Some(mut r) = pending.pop() {
        loop {
            if r.trace.steps.len() >= fuel {
                r.trace.status = Status::FuelExhausted;
                break;
            }
            r.trace.steps.push(Step { node: r.node, ctx: r.ctx.clone(), consumed: r.cursor, state: r.state.clone() });
            let node = cfg.node(r.node);
            r.trace.passed_reject |= node.reject;
            if r.node == cfg.exit {
                break;
            }
            // Successor choices: (edge label, state, cursor).
            let mut next: Vec<(EdgeLabel, ConcreteState)> = Vec::new();
            let mut state = r.state.clone();
            match &node.kind {
                NodeKind::Read { buffer, .. } => {
                    let whole = program.whole(*buffer);
                    if Some(*buffer) == env.primary && r.cursor < file.len() {
                        state.set_defined(whole, &fit(&file[r.cursor], whole.len as usize));
                        r.cursor += 1;
                        next.push((EdgeLabel::NotAtEnd, state));
                    } else {
                        state.set(whole, &vec![None; whole.len as usize]);
                        next.push((EdgeLabel::AtEnd, state));
                    }
                }
                NodeKind::KeyRead(l) => {
                    let key = state.get(l.key.slice).to_vec();
                    let keys = tables.keys(&l.table, key.len());
                    let matching: Vec<&Vec<u8>> =
                        keys.iter().filter(|k| k.iter().zip(&key).all(|(a, b)| b.is_none_or(|b| b == *a))).collect();
                    let defined = key.iter().all(Option::is_some);
                    for k in &matching {
                        let mut t = state.clone();
                        t.set_defined(l.key.slice, k);
                        t.set_defined(l.into.slice, &fit(k, l.into.slice.len as usize));
                        next.push((EdgeLabel::KeyFound, t));
                    }
                    if !defined || matching.is_empty() {
                        next.push((EdgeLabel::InvalidKey, state));
                    }
                }
                NodeKind::Move { src, dst } => {
                    let v = fit_opt(&operand(&state, src), dst.slice.len as usize);
                    state.set(dst.slice, &v);
                    next.push((EdgeLabel::Fallthrough, state));
                }
                NodeKind::Add { src, dst } => {
                    let v = add(&operand(&state, src), state.get(dst.slice), dst.slice.len as usize);
                    state.set(dst.slice, &v);
                    next.push((EdgeLabel::Fallthrough, state));
                }
                NodeKind::Write { buffer } => {
                    r.trace.writes.push((program.slice_name(&buffer.slice), state.get(buffer.slice).to_vec()));
                    next.push((EdgeLabel::Fallthrough, state));
                }
                NodeKind::If(c) | NodeKind::Loop(c) => {
                    for (b, lab) in [(true, EdgeLabel::True), (false, EdgeLabel::False)] {
                        next.extend(assume(c, b, &state).into_iter().map(|s| (lab, s)));
                    }
                }
                NodeKind::Stop => {
                    r.trace.status = Status::Stop;
                    next.push((EdgeLabel::Fallthrough, state));
                }
                _ => next.push((EdgeLabel::Fallthrough, state)),
            }
            let mut succs = Vec::new();
            for (lab, st) in next {
                for e in cfg.succ_edges(r.node) {
                    let ctx = match e.label {
                        EdgeLabel::Call(site) => {
                            let mut c = r.ctx.clone();
                            c.push(site);
                            c
                        }
                        EdgeLabel::Return(site) if r.ctx.last() == Some(&site) => r.ctx[..r.ctx.len() - 1].to_vec(),
                        EdgeLabel::Return(_) => continue,
                        l if l == lab => r.ctx.clone(),
                        // Plain statements have a single untyped successor.
                        _ if lab == EdgeLabel::Fallthrough => r.ctx.clone(),
                        _ => continue,
                    };
                    succs.push((e.to, ctx, st.clone()));
                }
            }
            let Some((first, rest)) = succs.split_first() else { break };
            for (n, c, s) in rest {
                pending.push(Run {
                    node: *n,
                    ctx: c.clone(),
                    state: s.clone(),
                    cursor: r.cursor,
                    trace: r.trace.clone(),
                });
            }
            r.node = first.0;
            r.ctx = first.1.clone();
            r.state = first.2.clone();
        }
        r.trace.consumed = r.cursor;
        done.push(r.trace);
    }
    done
}
