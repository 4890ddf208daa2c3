//! CPLEX LP text format for [`ConstraintSystem`]. Coefficients are written
//! with 17 significant digits so that a dump parses back bit-for-bit.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{ConstraintSystem, RowKind, RowTag};
use crate::error::{Error, Result};

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_lp<W: Write>(cs: &ConstraintSystem, mut out: W) -> Result<()> {
    let cols = cs.columns();
    writeln!(out, "\\ scenario program: {} rows, {} columns", cs.num_rows(), cols.len())?;
    writeln!(out, "Minimize")?;
    writeln!(out, " obj: {}", cols[0])?;
    writeln!(out, "Subject To")?;
    let mut line = String::new();
    for i in 0..cs.num_constraint_rows() {
        line.clear();
        line.push(' ');
        line.push_str(&cs.tag(i).to_string());
        line.push(':');
        let mut any = false;
        for (a, name) in cs.row_coefficients(i).iter().zip(cols) {
            if *a == 0.0 {
                continue;
            }
            any = true;
            let sign = if a.is_sign_negative() { '-' } else { '+' };
            line.push_str(&format!(" {sign} {} {name}", num(a.abs())));
        }
        if !any {
            line.push_str(&format!(" 0 {}", cols[0]));
        }
        line.push_str(&format!(" <= {}", num(cs.rhs(i))));
        writeln!(out, "{line}")?;
    }
    writeln!(out, "Bounds")?;
    for (v, name) in cols.iter().enumerate() {
        let (lo, hi) = (cs.lower_bounds()[v], cs.upper_bounds()[v]);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " {name} free")?,
            (true, false) => writeln!(out, " {} <= {name}", num(lo))?,
            _ => writeln!(out, " {} <= {name} <= {}", num(lo), num(hi))?,
        }
    }
    writeln!(out, "End")?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace("<=", " <= ")
        .replace(">=", " >= ")
        .replace(':', " : ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn is_operator(t: &str) -> bool {
    matches!(t, "<=" | ">=" | "=" | "<" | ">")
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::LpFormat {
        line,
        message: format!("expected a number, found `{tok}`"),
    })
}

/// Linear expression tokens into `(name, coefficient)` terms.
fn parse_terms(tokens: &[String], line: usize) -> Result<Vec<(String, f64)>> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for t in tokens {
        match t.as_str() {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(v) = t.parse::<f64>() {
                    if coef.is_some() {
                        return Err(Error::LpFormat { line, message: format!("unexpected number `{t}`") });
                    }
                    coef = Some(v);
                } else {
                    terms.push((t.clone(), sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(Error::LpFormat { line, message: "dangling coefficient".into() });
    }
    Ok(terms)
}

struct RawRow {
    line: usize,
    tag: RowTag,
    terms: Vec<(String, f64)>,
    rhs: f64,
}

/// Parses a minimisation of a single variable subject to `<=`/`>=` rows
/// and simple bounds. The objective variable must be the first column.
pub fn parse_lp<R: BufRead>(input: R) -> Result<ConstraintSystem> {
    let mut section = Section::Preamble;
    let mut objective: Option<(usize, Vec<(String, f64)>)> = None;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut pending_line = 0;
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();

    for (ln, text) in input.lines().enumerate() {
        let text = text?;
        let line = ln + 1;
        let body = text.split('\\').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(body) {
            if !pending.is_empty() {
                return Err(Error::LpFormat { line, message: "unterminated constraint".into() });
            }
            section = s;
            continue;
        }
        let mut toks = tokenize(body);
        match section {
            Section::Preamble | Section::End => {
                return Err(Error::LpFormat { line, message: "content outside a section".into() });
            }
            Section::Objective => {
                if toks.len() >= 2 && toks[1] == ":" {
                    toks.drain(..2);
                }
                let terms = parse_terms(&toks, line)?;
                match &mut objective {
                    Some((_, t)) => t.extend(terms),
                    None => objective = Some((line, terms)),
                }
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.extend(toks);
                let Some(op) = pending.iter().position(|t| is_operator(t)) else {
                    continue;
                };
                if op + 1 >= pending.len() {
                    continue;
                }
                if op + 2 != pending.len() {
                    return Err(Error::LpFormat { line, message: "trailing tokens after right-hand side".into() });
                }
                let mut expr: &[String] = &pending[..op];
                let tag = if expr.len() >= 2 && expr[1] == ":" {
                    let name = &expr[0];
                    expr = &expr[2..];
                    RowTag::parse(name).ok_or_else(|| Error::LpFormat {
                        line: pending_line,
                        message: format!("unrecognised row name `{name}`"),
                    })?
                } else {
                    RowTag::new(RowKind::Custom, rows.len() as u64)
                };
                let mut terms = parse_terms(expr, line)?;
                let mut rhs = parse_number(&pending[op + 1], line)?;
                match pending[op].as_str() {
                    "<=" | "<" => {}
                    ">=" | ">" => {
                        for t in &mut terms {
                            t.1 = -t.1;
                        }
                        rhs = -rhs;
                    }
                    _ => {
                        return Err(Error::LpFormat { line, message: "equality rows are not supported".into() })
                    }
                }
                rows.push(RawRow { line: pending_line, tag, terms, rhs });
                pending.clear();
            }
            Section::Bounds => {
                let t: Vec<&str> = toks.iter().map(String::as_str).collect();
                let entry = match t.as_slice() {
                    [name, free] if free.eq_ignore_ascii_case("free") => (name.to_string(), f64::NEG_INFINITY, f64::INFINITY),
                    [lo, "<=", name, "<=", hi] => (name.to_string(), parse_number(lo, line)?, parse_number(hi, line)?),
                    [lo, "<=", name] if lo.parse::<f64>().is_ok() => {
                        (name.to_string(), parse_number(lo, line)?, f64::INFINITY)
                    }
                    [name, "<=", hi] => (name.to_string(), 0.0, parse_number(hi, line)?),
                    [name, ">=", lo] => (name.to_string(), parse_number(lo, line)?, f64::INFINITY),
                    _ => return Err(Error::LpFormat { line, message: "unrecognised bound".into() }),
                };
                bounds.push(entry);
            }
        }
    }
    if !pending.is_empty() {
        return Err(Error::LpFormat { line: pending_line, message: "unterminated constraint".into() });
    }
    let (obj_line, obj) = objective.ok_or(Error::LpFormat { line: 0, message: "missing objective".into() })?;

    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: &str, order: &mut Vec<String>| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            order.push(name.to_string());
            order.len() - 1
        })
    };
    for (name, _, _) in &bounds {
        intern(name, &mut order);
    }
    for (name, _) in &obj {
        intern(name, &mut order);
    }
    let mut resolved = Vec::with_capacity(rows.len());
    for r in &rows {
        let ids: Vec<(usize, f64)> = r.terms.iter().map(|(n, a)| (intern(n, &mut order), *a)).collect();
        resolved.push(ids);
    }
    if obj.len() != 1 || obj[0].1 != 1.0 || index[&obj[0].0] != 0 {
        return Err(Error::LpFormat {
            line: obj_line,
            message: "objective must be `min` of the first column".into(),
        });
    }

    let m = order.len();
    let mut cs = ConstraintSystem::new(order);
    let mut coeffs = vec![0.0; m];
    for (r, ids) in rows.iter().zip(resolved) {
        coeffs.fill(0.0);
        for (j, a) in ids {
            coeffs[j] += a;
        }
        cs.push_row(&coeffs, r.rhs, r.tag)
            .map_err(|e| Error::LpFormat { line: r.line, message: e.to_string() })?;
    }
    // LP convention: unlisted variables are non-negative
    let mut lower = vec![0.0; m];
    let mut upper = vec![f64::INFINITY; m];
    for (name, lo, hi) in bounds {
        let j = index[&name];
        lower[j] = lo;
        upper[j] = hi;
    }
    cs.set_bounds(lower, upper)?;
    Ok(cs)
}
