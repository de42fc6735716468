//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Statement numbers in the numbered listing of the batch program start at
//! its OPEN statement; `common::line` maps them to fixture lines.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{line, Fixture};
use ffa_core::conformance::{check_over_acceptance, check_under_acceptance};
use ffa_core::domains::{Cp, CpValue, Direction, Domain, Integrity, Product, Rd, Uninit, Unit};
use ffa_core::formatspec::{check_refinement, FormatSpec, InputAutomaton, Label, Mapping, RefinementVerdict};
use ffa_core::lifted::{analyze, analyze_direct, compare_solution_precision, Options, Solution};
use ffa_core::minilang::{resolve_slice, NodeId, NodeKind, Slice};
use ffa_core::oracle::{
    concrete_exec, enumerate_files, field_alphabets, record_universe, soundness_check, Concretize, Harness, Status,
    DEFAULT_FUEL,
};
use ffa_core::pfsg::{analyze_on_pfsg, build_pfsg, compare_pfsg_precision, Pfsg};
use ffa_core::specializer::{commonality, specialize, Rewrite};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($c:expr, $($fmt:tt)+) => {
        if !$c {
            return Err(format!($($fmt)+));
        }
    };
}

fn slice(f: &Fixture, name: &str) -> Slice {
    resolve_slice(&f.program, name).unwrap().slice
}

fn cp_uninit(f: &Fixture) -> Product<Cp, Uninit> {
    Product::new(Cp::new(f.env.clone()), Uninit::new(f.env.clone()))
}

fn automaton<'a>(f: &'a Fixture, name: &str) -> &'a InputAutomaton {
    f.spec.automaton(name).unwrap()
}

fn node_of_kind(f: &Fixture, line: u32, want: impl Fn(&NodeKind) -> bool) -> NodeId {
    let ns: Vec<NodeId> = f.cfg.nodes_at_line(line).into_iter().filter(|&n| want(&f.cfg.node(n).kind)).collect();
    assert_eq!(ns.len(), 1, "line {line}: {ns:?}");
    ns[0]
}

fn read_node(f: &Fixture, line: u32) -> NodeId {
    node_of_kind(f, line, |k| matches!(k, NodeKind::Read { .. }))
}

fn cp_const(v: &CpValue, s: Slice) -> Option<String> {
    v.get(s).map(|b| String::from_utf8_lossy(b).into_owned())
}

fn state_names(sol_states: &[String], qs: impl IntoIterator<Item = usize>) -> BTreeSet<String> {
    qs.into_iter().map(|q| sol_states[q].clone()).collect()
}

/// File states a concrete run is in before each node, over every file
/// the automaton accepts up to `max` records. Only steps before the end
/// of the file is seen are recorded.
fn observed_states(f: &Fixture, a: &InputAutomaton, max: usize) -> BTreeMap<NodeId, BTreeSet<String>> {
    let universe = record_universe(&f.spec, f.tables.as_ref());
    let files = enumerate_files(&f.spec, Some(a), &universe, f.tables.as_ref(), max).unwrap();
    let mut out: BTreeMap<NodeId, BTreeSet<String>> = BTreeMap::new();
    for file in files.iter() {
        let labels: Vec<Vec<Label>> = file.iter().map(|r| f.spec.record_labels(r, f.tables.as_ref())).collect();
        for t in concrete_exec(&f.env, &f.cfg, file, f.tables.as_ref(), DEFAULT_FUEL) {
            let mut eof_seen = false;
            let mut prev: Option<(NodeId, usize)> = None;
            for s in &t.steps {
                if let Some((pn, pc)) = prev {
                    if matches!(f.cfg.node(pn).kind, NodeKind::Read { buffer, .. } if Some(buffer) == f.env.primary)
                        && pc == s.consumed
                    {
                        eof_seen = true;
                    }
                }
                prev = Some((s.node, s.consumed));
                if eof_seen {
                    continue;
                }
                let qs = a.states_after_sets(&labels[..s.consumed]);
                out.entry(s.node).or_default().extend(qs.into_iter().map(|q| a.states[q].clone()));
            }
        }
    }
    out
}

fn c1_state_table() -> Outcome {
    let f = common::running();
    let wf = automaton(&f, "wellformed");
    let d = cp_uninit(&f);
    let sol = analyze(&f.cfg, wf, &d, &Options::default()).map_err(|e| e.to_string())?;
    let (typ, src, eof, same) =
        (slice(&f, "in-rec.typ"), slice(&f, "in-rec.src"), slice(&f, "eof-flag"), slice(&f, "same-flag"));

    let at4 = sol.at(&d, f.node_at(line(4)));
    let states = state_names(&sol.states, at4.states());
    let want: BTreeSet<String> = ["q_sh", "q_dh", "q_i", "q_t"].map(String::from).into();
    ensure!(states == want, "before listing line 4: states {states:?}");
    let expect = [
        ("q_sh", "HDR", Some("SAME"), true),
        ("q_dh", "HDR", Some("DIFF"), true),
        ("q_i", "ITM", None, false),
        ("q_t", "TRL", None, false),
    ];
    for (q, t, s, uninit) in expect {
        let v = at4.get(sol.state_id(q).unwrap()).unwrap();
        ensure!(cp_const(&v.first, typ).as_deref() == Some(t), "{q}: in-rec.typ = {:?}", cp_const(&v.first, typ));
        ensure!(cp_const(&v.first, eof).as_deref() == Some("N"), "{q}: eof-flag not 'N'");
        if let Some(s) = s {
            ensure!(cp_const(&v.first, src).as_deref() == Some(s), "{q}: in-rec.src = {:?}", cp_const(&v.first, src));
        }
        ensure!(v.second.possibly_uninit(same) == uninit, "{q}: same-flag possibly uninitialized = {}", !uninit);
        ensure!(!v.second.possibly_uninit(typ), "{q}: in-rec.typ possibly uninitialized");
    }

    // The joined fact: the record type is no longer constant.
    let flat = at4.flatten(&d);
    ensure!(cp_const(&flat.first, typ).is_none(), "joined in-rec.typ still constant");
    ensure!(flat.second.possibly_uninit(same), "joined fact has same-flag initialized");

    // Only the item state reaches the true branch, and there same-flag is set.
    let at5 = sol.at(&d, f.node_at(line(5)));
    ensure!(state_names(&sol.states, at5.states()) == BTreeSet::from(["q_i".to_string()]), "before line 5");
    let at6 = sol.at(&d, f.node_at(line(6)));
    ensure!(at6.iter().all(|(_, v)| !v.second.possibly_uninit(same)), "same-flag possibly uninitialized before line 6");

    // State sets at the tabulated points equal those concrete runs reach.
    let seen = observed_states(&f, wf, 4);
    for l in [4, 5, 6, 7, 9, 11, 14, 15, 17, 20] {
        let n = f.node_at(line(l));
        let got = state_names(&sol.states, sol.at(&d, n).states());
        let conc = seen.get(&n).cloned().unwrap_or_default();
        ensure!(got == conc, "listing line {l}: analysis {got:?}, concrete runs {conc:?}");
    }
    Ok(())
}

fn c2_under_acceptance() -> Outcome {
    let f = common::running();
    let wf = automaton(&f, "wellformed");
    let r = check_under_acceptance(&f.cfg, wf, &Cp::new(f.env.clone())).map_err(|e| e.to_string())?;
    ensure!(r.reject_lines == vec![line(23)], "rejection points {:?}", r.reject_lines);
    ensure!(r.is_clean(), "{}", r.render_text());
    let r = check_under_acceptance(&f.cfg, wf, &cp_uninit(&f)).map_err(|e| e.to_string())?;
    ensure!(r.is_clean(), "{}", r.render_text());
    Ok(())
}

fn c3_specialization() -> Outcome {
    let f = common::running();
    let same = specialize(&f.program, &f.spec, automaton(&f, "same_only"), true).map_err(|e| e.to_string())?;
    let base = specialize(&f.program, &f.spec, automaton(&f, "wellformed"), true).map_err(|e| e.to_string())?;
    let extra: BTreeSet<u32> =
        same.unreachable_lines.iter().copied().filter(|l| !base.unreachable_lines.contains(l)).collect();
    ensure!(extra == BTreeSet::from([line(9), line(17)]), "criterion-specific unreachable lines {extra:?}");

    let specific: Vec<&Rewrite> = same.rewrites.iter().filter(|r| !base.rewrites.contains(r)).collect();
    let want = [
        Rewrite::CollapseIf { line: line(6), cond: "same-flag = 'S'".into(), holds: true },
        Rewrite::CollapseIf { line: line(14), cond: "in-rec.src = 'SAME'".into(), holds: true },
        Rewrite::RemoveDeadWrite { line: line(15), target: "same-flag".into() },
    ];
    ensure!(specific == want.iter().collect::<Vec<_>>(), "criterion-specific rewrites {specific:?}");

    let q = ffa_core::minilang::parse_program(&same.source).map_err(|e| e.to_string())?;
    let same_flag = slice(&f, "same-flag");
    let mut touches = 0;
    q.visit(&mut |s| match &s.kind {
        ffa_core::minilang::StmtKind::Move { dst, .. } if dst.slice.overlaps(&same_flag) => touches += 1,
        ffa_core::minilang::StmtKind::If { cond, .. } if cond.slices().iter().any(|x| x.overlaps(&same_flag)) => {
            touches += 1
        }
        _ => {}
    });
    ensure!(touches == 0, "specialized source still sets or tests same-flag");

    let diff = specialize(&f.program, &f.spec, automaton(&f, "diff_only"), true).map_err(|e| e.to_string())?;
    let c = commonality(&[same, diff]);
    ensure!(c.criteria.iter().all(|k| k.specific > 0) && c.common > 0, "commonality {c:?}");
    Ok(())
}

fn cp_pfsg(f: &Fixture, a: &InputAutomaton) -> Pfsg {
    let d = Cp::new(f.env.clone());
    let sol = analyze(&f.cfg, a, &d, &Options::default()).unwrap();
    build_pfsg(&f.cfg, a, &d, &sol).unwrap()
}

fn c4_pfsg_edges() -> Outcome {
    let f = common::running();
    let wf = automaton(&f, "wellformed");
    let p = cp_pfsg(&f, wf);
    let q = |n: &str| wf.state_id(n).unwrap();
    let (n2, n3, n4, n5) = (read_node(&f, line(2)), f.node_at(line(3)), f.node_at(line(4)), f.node_at(line(5)));
    ensure!(p.has_edge((n2, q("q_s")), (n3, q("q_sh"))), "missing (2,q_s)->(3,q_sh)");
    ensure!(p.has_edge((n2, q("q_s")), (n3, q("q_dh"))), "missing (2,q_s)->(3,q_dh)");
    ensure!(!p.has_edge((n4, q("q_sh")), (n5, q("q_sh"))), "has (4,q_sh)->(5,q_sh)");

    // Walk copies of listing lines 1..=6 edge by edge.
    let mut cur: BTreeSet<_> = p.nodes.iter().copied().filter(|(m, _)| f.cfg.node(*m).line == line(1)).collect();
    for l in 2..=6 {
        cur =
            cur.iter().flat_map(|&n| p.succ(n)).map(|e| e.to).filter(|(m, _)| f.cfg.node(*m).line == line(l)).collect();
    }
    ensure!(cur.is_empty(), "a path visits copies of lines 1-6 in order: ends at {cur:?}");
    Ok(())
}

fn c5_analysis_on_pfsg() -> Outcome {
    let f = common::running();
    let wf = automaton(&f, "wellformed");
    let p = cp_pfsg(&f, wf);
    let same = slice(&f, "same-flag");
    let n6 = f.node_at(line(6));

    let u = Uninit::new(f.env.clone());
    let on_pfsg = analyze_on_pfsg(&p, &f.cfg, &u, Direction::Forward).map_err(|e| e.to_string())?;
    let copies: Vec<_> = p.copies(n6).collect();
    ensure!(!copies.is_empty(), "no copies of line 6");
    for c in &copies {
        ensure!(!on_pfsg.get(&u, *c).possibly_uninit(same), "same-flag possibly uninitialized at {c:?}");
    }
    let raw = analyze_direct(&f.cfg, &u, &Options::default()).map_err(|e| e.to_string())?;
    ensure!(raw.flatten(&u, n6).possibly_uninit(same), "raw CFG analysis has same-flag initialized at line 6");

    let cp = Cp::new(f.env.clone());
    let cp_on = analyze_on_pfsg(&p, &f.cfg, &cp, Direction::Forward).map_err(|e| e.to_string())?;
    let n25 = read_node(&f, line(25));
    for (q, want) in [("q_sh", "S"), ("q_dh", "D")] {
        let v = cp_on.get(&cp, (n25, wf.state_id(q).unwrap()));
        ensure!(
            cp_const(&v, same).as_deref() == Some(want),
            "before line 25 in {q}: same-flag {:?}",
            cp_const(&v, same)
        );
    }
    Ok(())
}

fn check<D: Concretize>(f: &Fixture, d: &D, a: &InputAutomaton, max: usize) -> Result<usize, String> {
    let h = Harness { env: &f.env, cfg: &f.cfg, spec: &f.spec, tables: f.tables.as_ref(), fuel: DEFAULT_FUEL };
    let sol = analyze(&f.cfg, a, d, &Options::default()).map_err(|e| e.to_string())?;
    let universe = record_universe(&f.spec, f.tables.as_ref());
    let files = enumerate_files(&f.spec, Some(a), &universe, f.tables.as_ref(), max).map_err(|e| e.to_string())?;
    let stats = soundness_check(&h, d, &sol, Some(a), &files).map_err(|v| format!("{}/{}: {v}", f.name, a.name))?;
    Ok(stats.files)
}

fn c6_soundness() -> Outcome {
    let mut files = 0;
    for f in [common::running(), common::no_trl_check(), common::paragraphs()] {
        let wf = automaton(&f, "wellformed");
        files += check(&f, &cp_uninit(&f), wf, 4)?;
        files += check(&f, &cp_uninit(&f), &wf.extend_to_full(), 3)?;
    }
    let f = common::payments();
    for a in ["wellformed", "any_account"] {
        files += check(&f, &Integrity::new(cp_uninit(&f)), automaton(&f, a), 4)?;
    }
    files += check(&f, &Integrity::new(Cp::new(f.env.clone())), &automaton(&f, "wellformed").extend_to_full(), 3)?;

    // At most three literals per field, and the universe is their product.
    for f in common::all() {
        let alphabets = field_alphabets(&f.spec, f.tables.as_ref());
        for (fld, lits) in alphabets.iter().flatten() {
            ensure!(lits.len() <= 3, "{}: field {} takes {} values", f.name, fld.name, lits.len());
        }
        let product: usize = alphabets.iter().map(|l| l.iter().map(|(_, v)| v.len()).product::<usize>()).sum();
        let universe = record_universe(&f.spec, f.tables.as_ref());
        ensure!(universe.len() <= product, "{}: {} records from {product} combinations", f.name, universe.len());
    }
    ensure!(files > 1000, "only {files} files checked");
    Ok(())
}

fn c7_over_acceptance_complete() -> Outcome {
    let f = common::no_trl_check();
    let wf = automaton(&f, "wellformed");
    let full = wf.extend_to_full();
    let report = check_over_acceptance(&f.cfg, wf, &Cp::new(f.env.clone())).map_err(|e| e.to_string())?;
    let warned = report.warning_states();
    let universe = record_universe(&f.spec, None);
    let files = enumerate_files(&f.spec, None, &universe, None, 3).map_err(|e| e.to_string())?;
    let mut ill = 0;
    for file in files.iter() {
        let labels: Vec<Vec<Label>> = file.iter().map(|r| f.spec.record_labels(r, None)).collect();
        if wf.accepts_sets(&labels) {
            continue;
        }
        for t in concrete_exec(&f.env, &f.cfg, file, None, DEFAULT_FUEL) {
            if !matches!(t.status, Status::Exit | Status::Stop) || t.passed_reject {
                continue;
            }
            ill += 1;
            let mut seq = labels[..t.consumed].to_vec();
            if t.consumed == file.len() {
                seq.push(vec![Label::Eof]);
            }
            let qs = full.states_after_sets(&seq);
            ensure!(
                qs.iter().any(|&q| warned.contains(full.states[q].as_str())),
                "ill-formed run ending in {:?} not covered by warnings {warned:?}",
                qs.iter().map(|&q| &full.states[q]).collect::<Vec<_>>()
            );
        }
    }
    ensure!(ill > 0, "no ill-formed file reached the exit");
    Ok(())
}

fn precise_everywhere<D: Domain>(d: &D, g1: &Solution<D::Value>, g2: &Solution<D::Value>) -> Outcome {
    for v in compare_solution_precision(d, g1, g2).map_err(|e| e.to_string())? {
        ensure!(v.pointwise && v.flat, "node {}: {v:?}", v.node);
    }
    Ok(())
}

fn c8_lifted_vs_single_state() -> Outcome {
    for f in common::all() {
        let cp = Cp::new(f.env.clone());
        let direct = analyze_direct(&f.cfg, &cp, &Options::default()).map_err(|e| e.to_string())?;
        let mut automatons: Vec<InputAutomaton> = f.spec.automatons.clone();
        automatons.extend(f.spec.automatons.iter().map(|a| a.extend_to_full()));
        for a in &automatons {
            let lifted = analyze(&f.cfg, a, &cp, &Options::default()).map_err(|e| e.to_string())?;
            precise_everywhere(&cp, &lifted, &direct).map_err(|e| format!("{}/{}: {e}", f.name, a.name))?;
        }
    }
    Ok(())
}

/// `s2` refines `s1`; check the solutions state by state through the map.
fn refinement_pair(f: &Fixture, s1: &str, s2: &str, given: Option<Mapping>) -> Outcome {
    let (a1, a2) = (automaton(f, s1), automaton(f, s2));
    let verdict = check_refinement(&f.spec, a1, a2, given.as_ref());
    let RefinementVerdict::Holds { mapping, .. } = verdict else {
        return Err(format!("{s2} does not refine {s1}: {verdict:?}"));
    };
    let d = cp_uninit(f);
    let g1 = analyze(&f.cfg, a1, &d, &Options::default()).map_err(|e| e.to_string())?;
    let g2 = analyze(&f.cfg, a2, &d, &Options::default()).map_err(|e| e.to_string())?;
    for n in 0..f.cfg.len() {
        let (f1, f2) = (g1.at(&d, n), g2.at(&d, n));
        for (q2, v2) in f2.iter() {
            let q1 = g1.state_id(&mapping.0[&g2.states[q2]]).unwrap();
            let v1 = f1.get(q1).cloned().unwrap_or_else(|| d.bottom());
            ensure!(d.leq(v2, &v1), "{s2} vs {s1} at node {n}, state {}", g2.states[q2]);
        }
        ensure!(d.leq(&f2.flatten(&d), &f1.flatten(&d)), "{s2} vs {s1} at node {n}: joined facts");
    }
    Ok(())
}

fn c9_refinement() -> Outcome {
    let r = common::running();
    refinement_pair(&r, "wellformed", "same_only", None)?;
    let m: Mapping = serde_json::from_str(
        r#"{"q_s":"q_s","q_sh":"q_sh","q_dh":"q_dh","q_i1":"q_i","q_i2":"q_i","q_t":"q_t","q_e":"q_e"}"#,
    )
    .unwrap();
    refinement_pair(&r, "wellformed", "items_unrolled", Some(m))?;
    refinement_pair(&common::payments(), "any_account", "wellformed", None)?;
    Ok(())
}

fn c10_pfsg_ordering() -> Outcome {
    let f = common::running();
    let wf = automaton(&f, "wellformed");
    let p_cp = cp_pfsg(&f, wf);
    let unit = Unit::new(f.env.clone());
    let sol = analyze(&f.cfg, wf, &unit, &Options::default()).map_err(|e| e.to_string())?;
    let p_unit = build_pfsg(&f.cfg, wf, &unit, &sol).map_err(|e| e.to_string())?;
    ensure!(compare_pfsg_precision(&p_cp, &p_unit).map_err(|e| e.to_string())?, "PFSG(cp) not within PFSG(unit)");
    ensure!(!compare_pfsg_precision(&p_unit, &p_cp).map_err(|e| e.to_string())?, "PFSG(unit) within PFSG(cp)");
    let q = wf.state_id("q_sh").unwrap();
    let w = ((f.node_at(line(4)), q), (f.node_at(line(5)), q));
    ensure!(p_unit.has_edge(w.0, w.1) && !p_cp.has_edge(w.0, w.1), "witness edge (4,q_sh)->(5,q_sh)");
    Ok(())
}

fn pfsg_below_cfg<D: Domain>(f: &Fixture, p: &Pfsg, d: &D) -> Outcome {
    let on = analyze_on_pfsg(p, &f.cfg, d, Direction::Forward).map_err(|e| e.to_string())?;
    let raw = analyze_direct(&f.cfg, d, &Options::default()).map_err(|e| e.to_string())?;
    for n in 0..f.cfg.len() {
        ensure!(
            d.leq(&on.flat(d, n), &raw.flatten(d, n)),
            "{}: {} at node {n} (line {})",
            f.name,
            d.name(),
            f.cfg.node(n).line
        );
    }
    Ok(())
}

fn c11_pfsg_corollary() -> Outcome {
    for f in common::all() {
        for a in &f.spec.automatons {
            let p = cp_pfsg(&f, a);
            pfsg_below_cfg(&f, &p, &Rd::new(f.env.clone()))?;
            pfsg_below_cfg(&f, &p, &Uninit::new(f.env.clone()))?;
        }
    }
    Ok(())
}

/// An automaton over the running spec with exactly `n` states: a ring of
/// `n - 1` states counting records modulo `n - 1`, any of which may end
/// the file.
fn padded(n: usize) -> String {
    let k = n - 1;
    let mut s = format!("automaton pad{n} start c0 final q_e\n");
    for j in 0..k {
        for t in ["SHdr", "DHdr", "Itm", "Trl"] {
            s += &format!("trans c{j} -{t}-> c{}\n", (j + 1) % k);
        }
        s += &format!("trans c{j} -eof-> q_e\n");
    }
    s
}

fn c12_complexity() -> Outcome {
    let sizes = [4, 8, 16, 32];
    let text = sizes.iter().fold(common::RUNNING_FFS.to_string(), |acc, &n| acc + &padded(n));
    let spec = FormatSpec::parse(&text).map_err(|e| e.to_string())?;
    let f = common::running();
    let d = cp_uninit(&f);
    let mut times = Vec::new();
    for n in sizes {
        let a = spec.automaton(&format!("pad{n}")).unwrap();
        ensure!(a.states.len() == n, "pad{n} has {} states", a.states.len());
        let mut best = Duration::MAX;
        for _ in 0..7 {
            let t = Instant::now();
            for _ in 0..5 {
                std::hint::black_box(analyze(&f.cfg, a, &d, &Options::default()).map_err(|e| e.to_string())?);
            }
            best = best.min(t.elapsed());
        }
        times.push(best);
    }
    for (i, w) in times.windows(2).enumerate() {
        let ratio = w[1].as_secs_f64() / w[0].as_secs_f64();
        ensure!(
            ratio.le(&3.0),
            "|Q| {} -> {}: time ratio {ratio:.2} ({:?} -> {:?})",
            sizes[i],
            sizes[i + 1],
            w[0],
            w[1]
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("state table before the record-type test", c1_state_table, Duration::from_secs(1)),
        ("no under-acceptance on the running example", c2_under_acceptance, Duration::from_secs(1)),
        ("SAME-only specialization and simplification", c3_specialization, Duration::from_secs(1)),
        ("PFSG edges and infeasible path", c4_pfsg_edges, Duration::from_secs(1)),
        ("analysis on the PFSG", c5_analysis_on_pfsg, Duration::from_secs(1)),
        ("bounded soundness oracle", c6_soundness, Duration::from_secs(60)),
        ("over-acceptance warnings cover ill-formed runs", c7_over_acceptance_complete, Duration::from_secs(30)),
        ("lifted CP at least as precise as plain CP", c8_lifted_vs_single_state, Duration::from_secs(5)),
        ("refinement orders solutions", c9_refinement, Duration::from_secs(5)),
        ("PFSG(cp) strictly inside PFSG(unit)", c10_pfsg_ordering, Duration::from_secs(1)),
        ("RD and Uninit on the PFSG refine the CFG results", c11_pfsg_corollary, Duration::from_secs(10)),
        ("analysis time grows with |Q|", c12_complexity, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(r) => r,
            Err(e) => Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let took = t.elapsed();
        let outcome =
            outcome.and_then(|()| if took > limit { Err(format!("took {took:?}, limit {limit:?}")) } else { Ok(()) });
        match outcome {
            Ok(()) => println!("PASS {:>2} {name} ({took:.2?})", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.2?}): {e}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
