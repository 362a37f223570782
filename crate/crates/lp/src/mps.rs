//! Fixed-format MPS export and a whitespace-tokenising reader.
//!
//! Field layout follows the fixed format (names in columns 5 and 15, values
//! right-aligned in columns 25-36). Values use the shortest representation
//! that parses back to the same `f64`, which can be wider than 12 columns;
//! the reader splits on whitespace, so this round-trips.

use std::fmt::Write as _;

use crate::error::{LpError, Result};
use crate::model::{LpModel, Sense};

fn fmt_value(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        plain
    } else {
        format!("{v:e}")
    }
}

fn objective_row_name(model: &LpModel) -> String {
    let mut name = String::from("OBJ");
    while model.rows.iter().any(|r| r.name == name) {
        name.push('_');
    }
    name
}

fn entry(out: &mut String, first: &str, second: &str, value: f64) {
    let _ = writeln!(out, "    {first:<8}  {second:<8}  {:>12}", fmt_value(value));
}

fn bound(out: &mut String, kind: &str, var: &str, value: Option<f64>) {
    match value {
        Some(v) => {
            let _ = writeln!(out, " {kind:<2} BND       {var:<8}  {:>12}", fmt_value(v));
        }
        None => {
            let _ = writeln!(out, " {kind:<2} BND       {var}");
        }
    }
}

/// Writes `model` as MPS text. Row and column order follow the model.
pub fn export_lp_file(model: &LpModel) -> String {
    let obj = objective_row_name(model);
    let mut out = String::new();
    let name = if model.name.is_empty() {
        "MODEL"
    } else {
        model.name.as_str()
    };
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {obj}");
    for r in &model.rows {
        let kind = match r.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        let _ = writeln!(out, " {kind}  {}", r.name);
    }

    // Column-major view of the row coefficients.
    let mut by_column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, v) in &r.coeffs {
            by_column[j].push((i, v));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, var) in model.var_names.iter().enumerate() {
        let cost = model.objective[j];
        if cost != 0.0 || by_column[j].is_empty() {
            entry(&mut out, var, &obj, cost);
        }
        for &(i, v) in &by_column[j] {
            entry(&mut out, var, &model.rows[i].name, v);
        }
    }

    out.push_str("RHS\n");
    for r in &model.rows {
        if r.rhs != 0.0 {
            entry(&mut out, "RHS", &r.name, r.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for (j, var) in model.var_names.iter().enumerate() {
        let (lo, hi) = (model.lower[j], model.upper[j]);
        if lo == hi {
            bound(&mut out, "FX", var, Some(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            bound(&mut out, "FR", var, None);
            continue;
        }
        if lo == f64::NEG_INFINITY {
            bound(&mut out, "MI", var, None);
        } else if lo != 0.0 {
            bound(&mut out, "LO", var, Some(lo));
        }
        if hi.is_finite() {
            bound(&mut out, "UP", var, Some(hi));
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Ranges,
    End,
}

/// Reads MPS text produced by [`export_lp_file`] (or any MPS without
/// RANGES and without integer markers). Fields are split on whitespace.
pub fn parse_lp_file(text: &str) -> Result<LpModel> {
    let mut model = LpModel::new("");
    let mut objective_row: Option<String> = None;
    let mut row_index = std::collections::HashMap::new();
    let mut var_index = std::collections::HashMap::new();
    let mut coeffs: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut senses: Vec<Sense> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut section = Section::None;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| LpError::Parse { line: line_no, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => Section::Ranges,
                "ENDATA" => Section::End,
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        let number = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}"))) };
        match section {
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(err("ROWS entries need a type and a name".into()));
                }
                let sense = match fields[0] {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(fields[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "E" => Sense::Eq,
                    "G" => Sense::Ge,
                    other => return Err(err(format!("unknown row type {other}"))),
                };
                row_index.insert(fields[1].to_string(), row_names.len());
                row_names.push(fields[1].to_string());
                senses.push(sense);
                coeffs.push(Vec::new());
                rhs.push(0.0);
            }
            Section::Columns => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("COLUMNS entries need 3 or 5 fields".into()));
                }
                let var = fields[0];
                let j = *var_index
                    .entry(var.to_string())
                    .or_insert_with(|| model.add_var(var, 0.0, 0.0, f64::INFINITY));
                for pair in fields[1..].chunks(2) {
                    let value = number(pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        model.objective[j] = value;
                    } else {
                        let i = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        coeffs[i].push((j, value));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("RHS entries need 3 or 5 fields".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let value = number(pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        continue;
                    }
                    let i = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                    rhs[i] = value;
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err("BOUNDS entries need at least 3 fields".into()));
                }
                let j = *var_index
                    .get(fields[2])
                    .ok_or_else(|| err(format!("unknown column {}", fields[2])))?;
                let value = || -> Result<f64> {
                    fields
                        .get(3)
                        .ok_or_else(|| err("bound value missing".into()))
                        .and_then(|s| number(s))
                };
                match fields[0] {
                    "UP" => model.upper[j] = value()?,
                    "LO" => model.lower[j] = value()?,
                    "FX" => {
                        let v = value()?;
                        model.lower[j] = v;
                        model.upper[j] = v;
                    }
                    "FR" => {
                        model.lower[j] = f64::NEG_INFINITY;
                        model.upper[j] = f64::INFINITY;
                    }
                    "MI" => model.lower[j] = f64::NEG_INFINITY,
                    "PL" => model.upper[j] = f64::INFINITY,
                    other => return Err(err(format!("unsupported bound type {other}"))),
                }
            }
            Section::Ranges => return Err(err("RANGES are not supported".into())),
            Section::None | Section::End => {
                return Err(err("data outside of a section".into()));
            }
        }
    }
    if section != Section::End {
        return Err(LpError::Parse {
            line: text.lines().count(),
            message: "missing ENDATA".into(),
        });
    }
    for (i, name) in row_names.into_iter().enumerate() {
        model.add_row(name, std::mem::take(&mut coeffs[i]), senses[i], rhs[i]);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_has_all_sections() {
        let text = export_lp_file(&LpModel::new("EMPTY"));
        for s in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(text.lines().any(|l| l.starts_with(s)), "{s} missing");
        }
        assert_eq!(parse_lp_file(&text).unwrap(), LpModel::new("EMPTY"));
    }

    #[test]
    fn fixed_columns() {
        let mut m = LpModel::new("T");
        let x = m.add_var("X1", 1.5, 0.0, 1.0);
        m.add_row("BUD", [(x, 1.0)], Sense::Eq, 1.0);
        let text = export_lp_file(&m);
        let line = text.lines().find(|l| l.contains("BUD") && l.contains("X1")).unwrap();
        assert_eq!(&line[4..12], "X1      ");
        assert_eq!(&line[14..22], "BUD     ");
        assert_eq!(line[24..36].trim(), "1");
    }

    #[test]
    fn round_trips_every_bound_kind() {
        let mut m = LpModel::new("B");
        let a = m.add_var("A", 0.1, 0.0, f64::INFINITY);
        let b = m.add_var("B", -2.0, f64::NEG_INFINITY, f64::INFINITY);
        let c = m.add_var("C", 0.0, -1.25, 3.0);
        let d = m.add_var("D", 1e-300, 2.0, 2.0);
        let e = m.add_var("E", 0.0, f64::NEG_INFINITY, 4.0);
        let f = m.add_var("F", 1.0 / 3.0, 0.5, f64::INFINITY);
        m.add_row("R1", [(a, 1.0), (b, -0.3), (c, 1.0 / 7.0)], Sense::Le, 5.0);
        m.add_row("R2", [(d, 2.0), (e, 1e-17)], Sense::Ge, -1.0);
        m.add_row("OBJ", [(f, 1.0)], Sense::Eq, 0.0);
        let back = parse_lp_file(&export_lp_file(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_lp_file("NAME X\nROWS\n Q  R\nENDATA\n").is_err());
        assert!(parse_lp_file("NAME X\nROWS\n N  OBJ\n").is_err());
        assert!(parse_lp_file("NAME X\nROWS\n N  OBJ\nCOLUMNS\n    X  OBJ  abc\nENDATA\n").is_err());
    }
}
