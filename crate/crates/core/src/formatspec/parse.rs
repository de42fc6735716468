use std::collections::{BTreeMap, BTreeSet};

use super::*;

struct PendingAutomaton {
    line: u32,
    name: String,
    start: String,
    finals: Vec<String>,
    trans: Vec<(u32, String, String, String)>,
}

fn syntax(line: u32, message: impl Into<String>) -> SpecError {
    SpecError::Syntax { line, message: message.into() }
}

/// Drop a `#` comment that is not inside a quoted literal.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

#[derive(Debug, Clone, PartialEq)]
enum T {
    Word(String),
    Str(Vec<u8>),
    Sym(&'static str),
}

fn tokens(line: u32, text: &str) -> Result<Vec<T>, SpecError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'"' {
            let mut lit = Vec::new();
            let mut j = i + 1;
            loop {
                match b.get(j) {
                    None => return Err(syntax(line, "unterminated literal")),
                    Some(b'\\') => {
                        let Some(&n) = b.get(j + 1) else { return Err(syntax(line, "unterminated literal")) };
                        lit.push(n);
                        j += 2;
                    }
                    Some(b'"') => {
                        j += 1;
                        break;
                    }
                    Some(&x) => {
                        lit.push(x);
                        j += 1;
                    }
                }
            }
            out.push(T::Str(lit));
            i = j;
        } else if text[i..].starts_with("==") {
            out.push(T::Sym("=="));
            i += 2;
        } else if text[i..].starts_with("!=") {
            out.push(T::Sym("!="));
            i += 2;
        } else if c == b'(' || c == b')' || c == b',' {
            out.push(T::Sym(match c {
                b'(' => "(",
                b')' => ")",
                _ => ",",
            }));
            i += 1;
        } else {
            let mut j = i;
            while j < b.len() && !b[j].is_ascii_whitespace() && !b"(),\"=!".contains(&b[j]) {
                j += 1;
            }
            if j == i {
                return Err(syntax(line, format!("unexpected character '{}'", c as char)));
            }
            out.push(T::Word(text[i..j].to_string()));
            i = j;
        }
    }
    Ok(out)
}

fn word(line: u32, t: Option<&T>, what: &str) -> Result<String, SpecError> {
    match t {
        Some(T::Word(w)) => Ok(w.clone()),
        _ => Err(syntax(line, format!("expected {what}"))),
    }
}

fn number(line: u32, t: Option<&T>, what: &str) -> Result<u32, SpecError> {
    word(line, t, what)?.parse().map_err(|_| syntax(line, format!("expected a number for {what}")))
}

fn kw(line: u32, t: Option<&T>, k: &str) -> Result<(), SpecError> {
    match t {
        Some(T::Word(w)) if w == k => Ok(()),
        _ => Err(syntax(line, format!("expected '{k}'"))),
    }
}

pub fn parse(text: &str) -> Result<FormatSpec, SpecError> {
    let mut layouts: Vec<SpecLayout> = Vec::new();
    let mut raw_types: Vec<(u32, String, String, Vec<T>)> = Vec::new();
    let mut pending: Vec<PendingAutomaton> = Vec::new();
    let mut primary_file = None;
    let mut tables = BTreeSet::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln as u32 + 1;
        let ts = tokens(line, strip_comment(raw))?;
        let Some(T::Word(head)) = ts.first() else {
            if ts.is_empty() {
                continue;
            }
            return Err(syntax(line, "expected a declaration keyword"));
        };
        let rest_len = |n: usize| -> Result<(), SpecError> {
            if ts.len() != n {
                Err(syntax(line, format!("unexpected tokens after '{head}' declaration")))
            } else {
                Ok(())
            }
        };
        match head.as_str() {
            "layout" => {
                let name = word(line, ts.get(1), "a layout name")?;
                kw(line, ts.get(2), "length")?;
                let len = number(line, ts.get(3), "the layout length")?;
                rest_len(4)?;
                if layouts.iter().any(|l| l.name == name) {
                    return Err(syntax(line, format!("duplicate layout '{name}'")));
                }
                layouts.push(SpecLayout { name, len, fields: Vec::new() });
            }
            "field" => {
                let name = word(line, ts.get(1), "a field name")?;
                kw(line, ts.get(2), "at")?;
                let offset = number(line, ts.get(3), "the field offset")?;
                kw(line, ts.get(4), "len")?;
                let len = number(line, ts.get(5), "the field length")?;
                rest_len(6)?;
                let Some(l) = layouts.last_mut() else {
                    return Err(syntax(line, "field declared before any layout"));
                };
                if len == 0 || offset + len > l.len {
                    return Err(syntax(line, format!("field '{name}' does not fit layout '{}'", l.name)));
                }
                let f = FieldRef { name: name.clone(), offset, len };
                if l.fields.iter().any(|g| g.name == name) {
                    return Err(syntax(line, format!("duplicate field '{name}'")));
                }
                if l.fields.iter().any(|g| g.offset < offset + len && offset < g.offset + g.len) {
                    return Err(syntax(line, format!("field '{name}' overlaps another field of '{}'", l.name)));
                }
                l.fields.push(f);
            }
            "type" => {
                let name = word(line, ts.get(1), "a type name")?;
                if name == "eof" || name == "NA" {
                    return Err(syntax(line, format!("'{name}' is reserved")));
                }
                kw(line, ts.get(2), "layout")?;
                let layout = word(line, ts.get(3), "a layout name")?;
                let atoms = match ts.get(4) {
                    None => Vec::new(),
                    Some(T::Word(w)) if w == "where" => ts[5..].to_vec(),
                    _ => return Err(syntax(line, "expected 'where'")),
                };
                raw_types.push((line, name, layout, atoms));
            }
            "table" => {
                tables.insert(word(line, ts.get(1), "a table name")?);
                rest_len(2)?;
            }
            "primary_file" => {
                primary_file = Some(word(line, ts.get(1), "a buffer or file name")?);
                rest_len(2)?;
            }
            "automaton" => {
                let name = word(line, ts.get(1), "an automaton name")?;
                kw(line, ts.get(2), "start")?;
                let start = word(line, ts.get(3), "a start state")?;
                kw(line, ts.get(4), "final")?;
                let mut finals = Vec::new();
                for t in &ts[5..] {
                    match t {
                        T::Word(w) => finals.extend(w.split(',').filter(|s| !s.is_empty()).map(str::to_string)),
                        T::Sym(",") => {}
                        _ => return Err(syntax(line, "expected final state names")),
                    }
                }
                if pending.iter().any(|a| a.name == name) {
                    return Err(syntax(line, format!("duplicate automaton '{name}'")));
                }
                pending.push(PendingAutomaton { line, name, start, finals, trans: Vec::new() });
            }
            "trans" => {
                let from = word(line, ts.get(1), "a source state")?;
                let arrow = word(line, ts.get(2), "a labeled arrow -Label->")?;
                let to = word(line, ts.get(3), "a target state")?;
                rest_len(4)?;
                let label = arrow
                    .strip_prefix('-')
                    .and_then(|a| a.strip_suffix("->"))
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| syntax(line, format!("malformed arrow '{arrow}'")))?;
                let Some(a) = pending.last_mut() else {
                    return Err(syntax(line, "transition declared before any automaton"));
                };
                a.trans.push((line, from, label.to_string(), to));
            }
            other => return Err(syntax(line, format!("unknown declaration '{other}'"))),
        }
    }

    let mut types = Vec::new();
    for (line, name, layout, atoms) in raw_types {
        if types.iter().any(|t: &RecordType| t.name == name) {
            return Err(syntax(line, format!("duplicate type '{name}'")));
        }
        let li = layouts
            .iter()
            .position(|l| l.name == layout)
            .ok_or_else(|| syntax(line, format!("unknown layout '{layout}'")))?;
        let constraint = parse_constraint(line, &atoms, &layouts[li], &mut tables)?;
        types.push(RecordType { name, layout: li, len: layouts[li].len, constraint });
    }

    let type_names: Vec<String> = types.iter().map(|t| t.name.clone()).collect();
    let mut automatons = Vec::new();
    let mut warnings = Vec::new();
    for p in pending {
        let a = build_automaton(p, &type_names)?;
        warnings.extend(a.validate()?);
        automatons.push(a);
    }
    Ok(FormatSpec { layouts, types, automatons, primary_file, tables, warnings })
}

fn parse_constraint(
    line: u32,
    ts: &[T],
    layout: &SpecLayout,
    tables: &mut BTreeSet<String>,
) -> Result<Constraint, SpecError> {
    let mut atoms = BTreeSet::new();
    let field = |name: &str| {
        layout
            .field(name)
            .cloned()
            .ok_or_else(|| syntax(line, format!("field '{name}' is not in layout '{}'", layout.name)))
    };
    let mut i = 0;
    while i < ts.len() {
        if i > 0 {
            kw(line, ts.get(i), "and")?;
            i += 1;
        }
        let head = word(line, ts.get(i), "an atom")?;
        if head == "in_table" || head == "not_in_table" {
            if ts.get(i + 1) != Some(&T::Sym("("))
                || ts.get(i + 3) != Some(&T::Sym(","))
                || ts.get(i + 5) != Some(&T::Sym(")"))
            {
                return Err(syntax(line, format!("expected {head}(<table>, <field>)")));
            }
            let tab = word(line, ts.get(i + 2), "a table name")?;
            let f = field(&word(line, ts.get(i + 4), "a field name")?)?;
            tables.insert(tab.clone());
            atoms.insert(if head == "in_table" { Atom::InTable(tab, f) } else { Atom::NotInTable(tab, f) });
            i += 6;
        } else {
            let f = field(&head)?;
            let op = ts.get(i + 1);
            let Some(T::Str(lit)) = ts.get(i + 2) else {
                return Err(syntax(line, "expected a quoted literal"));
            };
            if lit.len() > f.len as usize {
                return Err(syntax(line, format!("literal longer than field '{}'", f.name)));
            }
            let v = fit(lit, f.len as usize);
            match op {
                Some(T::Sym("==")) => atoms.insert(Atom::FieldEq(f, v)),
                Some(T::Sym("!=")) => atoms.insert(Atom::FieldNeq(f, v)),
                _ => return Err(syntax(line, "expected '==' or '!='")),
            };
            i += 3;
        }
    }
    check_satisfiable(line, &atoms)?;
    Ok(Constraint { atoms })
}

fn check_satisfiable(line: u32, atoms: &BTreeSet<Atom>) -> Result<(), SpecError> {
    let mut eqs: BTreeMap<&FieldRef, &Vec<u8>> = BTreeMap::new();
    for a in atoms {
        if let Atom::FieldEq(f, v) = a {
            if let Some(prev) = eqs.insert(f, v) {
                if prev != v {
                    return Err(syntax(
                        line,
                        format!("unsatisfiable constraint: field '{}' equals two literals", f.name),
                    ));
                }
            }
        }
    }
    for a in atoms {
        let clash = match a {
            Atom::FieldNeq(f, v) => eqs.get(f).is_some_and(|e| *e == v),
            Atom::InTable(t, f) => atoms.contains(&Atom::NotInTable(t.clone(), f.clone())),
            _ => false,
        };
        if clash {
            return Err(syntax(line, format!("unsatisfiable constraint on field '{}'", a.field().name)));
        }
    }
    Ok(())
}

fn build_automaton(p: PendingAutomaton, type_names: &[String]) -> Result<InputAutomaton, SpecError> {
    let mut states: Vec<String> = vec![p.start.clone()];
    let intern = |s: &str, states: &mut Vec<String>| match states.iter().position(|x| x == s) {
        Some(i) => i,
        None => {
            states.push(s.to_string());
            states.len() - 1
        }
    };
    let mut transitions = Vec::new();
    for (line, from, label, to) in &p.trans {
        let f = intern(from, &mut states);
        let t = intern(to, &mut states);
        let l = if label == "eof" {
            Label::Eof
        } else {
            Label::Type(
                type_names
                    .iter()
                    .position(|n| n == label)
                    .ok_or_else(|| syntax(*line, format!("unknown type '{label}'")))?,
            )
        };
        let tr = Transition { from: f, label: l, to: t };
        if !transitions.contains(&tr) {
            transitions.push(tr);
        }
    }
    let mut finals = BTreeSet::new();
    for f in &p.finals {
        finals.insert(intern(f, &mut states));
    }
    if finals.is_empty() {
        return Err(syntax(p.line, format!("automaton '{}' has no final state", p.name)));
    }
    Ok(InputAutomaton { name: p.name, states, start: 0, finals, transitions, type_names: type_names.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "layout l length 6\nfield a at 0 len 3\nfield b at 3 len 3\n";

    #[test]
    fn unsatisfiable_constraints_rejected() {
        for body in [
            "type T layout l where a == \"x\" and a == \"y\"",
            "type T layout l where a == \"x\" and a != \"x\"",
            "type T layout l where in_table(t, a) and not_in_table(t, a)",
        ] {
            assert!(parse(&format!("{BASE}{body}\n")).is_err(), "{body}");
        }
        assert!(parse(&format!("{BASE}type T layout l where a == \"x\" and a != \"y\"\n")).is_ok());
    }

    #[test]
    fn literal_padding_and_length() {
        let s = parse(&format!("{BASE}type T layout l where a == \"x\"\n")).unwrap();
        let atom = s.types[0].constraint.atoms.iter().next().unwrap();
        assert_eq!(atom, &Atom::FieldEq(FieldRef { name: "a".into(), offset: 0, len: 3 }, b"x  ".to_vec()));
        assert!(parse(&format!("{BASE}type T layout l where a == \"xxxx\"\n")).is_err());
    }

    #[test]
    fn comments_escapes_and_errors() {
        let s = parse(&format!("{BASE}type T layout l where a == \"#\\\"z\" # trailing\n")).unwrap();
        let atom = s.types[0].constraint.atoms.iter().next().unwrap();
        assert_eq!(atom, &Atom::FieldEq(FieldRef { name: "a".into(), offset: 0, len: 3 }, b"#\"z".to_vec()));
        let e = parse("layout l length 2\nfield x at 1 len 2\n").unwrap_err();
        assert_eq!(e, SpecError::Syntax { line: 2, message: "field 'x' does not fit layout 'l'".into() });
        assert!(parse("bogus\n").is_err());
        assert!(parse("automaton a start s final f\ntrans s -Nope-> f\n").is_err());
        assert!(parse("automaton a start s final f\ntrans s eof f\n").is_err());
    }

    #[test]
    fn finals_accept_comma_lists() {
        let s = parse("automaton a start s final f1, f2\ntrans s -eof-> f1\ntrans s -eof-> f2\n").unwrap();
        assert_eq!(s.automatons[0].finals.len(), 2);
    }
}
