//! Free-format MPS reading and writing.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{LinearRow, MipModel, ObjectiveSense, VarType, Variable};

/// Values at or beyond this magnitude are read as infinite.
const MPS_INFINITY: f64 = 1e30;
const MAX_NAME_LEN: usize = 255;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("missing ENDATA")]
    MissingEnd,
    #[error("name too long ({len} > 255 chars): {name}")]
    NameTooLong { name: String, len: usize },
    #[error("name contains whitespace: {0:?}")]
    InvalidName(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MpsOptions {
    /// Integer columns without explicit bounds get [0, inf) instead of the
    /// classic [0, 1].
    pub int_default_unbounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowSense {
    Free,
    Le,
    Ge,
    Eq,
}

struct RowEntry {
    name: String,
    sense: RowSense,
    terms: Vec<(usize, f64)>,
    rhs: f64,
    range: Option<f64>,
}

struct ColEntry {
    var: Variable,
    lower_set: bool,
    upper_set: bool,
}

fn err(line: usize, message: impl Into<String>) -> MpsError {
    MpsError::Parse {
        line,
        message: message.into(),
    }
}

fn number(tok: &str, line: usize) -> Result<f64, MpsError> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("malformed number `{tok}`")))?;
    if v.is_nan() {
        return Err(err(line, format!("malformed number `{tok}`")));
    }
    Ok(if v >= MPS_INFINITY {
        f64::INFINITY
    } else if v <= -MPS_INFINITY {
        f64::NEG_INFINITY
    } else {
        v
    })
}

pub fn parse_mps(bytes: &[u8]) -> Result<MipModel, MpsError> {
    parse_mps_with(bytes, MpsOptions::default())
}

pub fn parse_mps_with(bytes: &[u8], opts: MpsOptions) -> Result<MipModel, MpsError> {
    let text = std::str::from_utf8(bytes).map_err(|_| MpsError::Encoding)?;
    let mut name = String::new();
    let mut sense = ObjectiveSense::Minimize;
    let mut section: Option<Section> = None;
    let mut objective_row: Option<String> = None;
    let mut rows: Vec<RowEntry> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<ColEntry> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut objective_offset = 0.0;
    let mut in_integer_block = false;
    let mut ended = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            let head = tokens[0].to_ascii_uppercase();
            section = match head.as_str() {
                "NAME" => {
                    name = tokens.get(1..).map(|t| t.join(" ")).unwrap_or_default();
                    Some(Section::Name)
                }
                "OBJSENSE" => {
                    if let Some(s) = tokens.get(1) {
                        sense = parse_sense(s, line_no)?;
                    }
                    Some(Section::ObjSense)
                }
                "ROWS" => Some(Section::Rows),
                "COLUMNS" => Some(Section::Columns),
                "RHS" => Some(Section::Rhs),
                "RANGES" => Some(Section::Ranges),
                "BOUNDS" => Some(Section::Bounds),
                "ENDATA" => {
                    ended = true;
                    break;
                }
                "SOS" => return Err(err(line_no, "SOS sections are not supported")),
                other => return Err(err(line_no, format!("unknown section `{other}`"))),
            };
            continue;
        }
        let Some(sec) = section else {
            return Err(err(line_no, "data line before any section"));
        };
        match sec {
            Section::Name => return Err(err(line_no, "unexpected data in NAME section")),
            Section::ObjSense => sense = parse_sense(tokens[0], line_no)?,
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err(line_no, "ROWS entry needs a sense and a name"));
                }
                let row_sense = match tokens[0].to_ascii_uppercase().as_str() {
                    "N" => RowSense::Free,
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    other => return Err(err(line_no, format!("unknown row sense `{other}`"))),
                };
                let row_name = tokens[1].to_string();
                if row_sense == RowSense::Free && objective_row.is_none() {
                    objective_row = Some(row_name);
                    continue;
                }
                if row_index.contains_key(&row_name) || objective_row.as_deref() == Some(&row_name) {
                    return Err(err(line_no, format!("duplicate row `{row_name}`")));
                }
                row_index.insert(row_name.clone(), rows.len());
                rows.push(RowEntry {
                    name: row_name,
                    sense: row_sense,
                    terms: Vec::new(),
                    rhs: 0.0,
                    range: None,
                });
            }
            Section::Columns => {
                if tokens.len() >= 3 && tokens[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    match tokens[2].trim_matches('\'').to_ascii_uppercase().as_str() {
                        "INTORG" => in_integer_block = true,
                        "INTEND" => in_integer_block = false,
                        other => return Err(err(line_no, format!("unknown marker `{other}`"))),
                    }
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line_no, "COLUMNS entry needs 3 or 5 fields"));
                }
                let col_name = tokens[0];
                let col = match col_index.get(col_name) {
                    Some(&c) => c,
                    None => {
                        let var = if in_integer_block {
                            let upper = if opts.int_default_unbounded { f64::INFINITY } else { 1.0 };
                            Variable::integer(col_name, 0.0, upper)
                        } else {
                            Variable::continuous(col_name, 0.0, f64::INFINITY)
                        };
                        col_index.insert(col_name.to_string(), cols.len());
                        cols.push(ColEntry {
                            var,
                            lower_set: false,
                            upper_set: false,
                        });
                        cols.len() - 1
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let value = number(pair[1], line_no)?;
                    if !value.is_finite() {
                        return Err(err(line_no, "infinite coefficient"));
                    }
                    if objective_row.as_deref() == Some(pair[0]) {
                        if value != 0.0 {
                            objective.push((col, value));
                        }
                        continue;
                    }
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(line_no, format!("unknown row `{}`", pair[0])))?;
                    if value != 0.0 {
                        if rows[r].terms.iter().any(|&(v, _)| v == col) {
                            return Err(err(line_no, format!("column `{col_name}` repeats row `{}`", pair[0])));
                        }
                        rows[r].terms.push((col, value));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = if tokens.len() % 2 == 1 { &tokens[1..] } else { &tokens[..] };
                if pairs.is_empty() {
                    return Err(err(line_no, "missing row/value pair"));
                }
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(line_no, "missing value"));
                    }
                    let value = number(pair[1], line_no)?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        if sec == Section::Rhs {
                            objective_offset = -value;
                        }
                        continue;
                    }
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(line_no, format!("unknown row `{}`", pair[0])))?;
                    if sec == Section::Rhs {
                        rows[r].rhs = value;
                    } else {
                        rows[r].range = Some(value);
                    }
                }
            }
            Section::Bounds => parse_bound(&tokens, line_no, &col_index, &mut cols)?,
        }
    }
    if !ended {
        return Err(MpsError::MissingEnd);
    }

    let mut model = MipModel::new(name);
    model.sense = sense;
    for entry in cols {
        let mut var = entry.var;
        if var.var_type == VarType::Integer && var.lower >= 0.0 && var.upper <= 1.0 {
            var.var_type = VarType::Binary;
        }
        model.variables.push(var);
    }
    for entry in rows {
        let (lhs, rhs) = row_sides(&entry);
        model.rows.push(LinearRow::new(entry.name, entry.terms, lhs, rhs));
    }
    // The file stores the objective as written; the model keeps minimization form.
    let stored = match sense {
        ObjectiveSense::Minimize => (objective, objective_offset),
        ObjectiveSense::Maximize => (objective.into_iter().map(|(v, c)| (v, -c)).collect(), -objective_offset),
    };
    model.objective = stored.0;
    model.objective_offset = stored.1;
    Ok(model)
}

fn parse_sense(tok: &str, line: usize) -> Result<ObjectiveSense, MpsError> {
    match tok.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" => Ok(ObjectiveSense::Minimize),
        "MAX" | "MAXIMIZE" => Ok(ObjectiveSense::Maximize),
        other => Err(err(line, format!("unknown objective sense `{other}`"))),
    }
}

fn row_sides(entry: &RowEntry) -> (f64, f64) {
    let rhs = entry.rhs;
    match (entry.sense, entry.range) {
        (RowSense::Free, _) => (f64::NEG_INFINITY, f64::INFINITY),
        (RowSense::Le, None) => (f64::NEG_INFINITY, rhs),
        (RowSense::Ge, None) => (rhs, f64::INFINITY),
        (RowSense::Eq, None) => (rhs, rhs),
        (RowSense::Le, Some(r)) => (rhs - r.abs(), rhs),
        (RowSense::Ge, Some(r)) => (rhs, rhs + r.abs()),
        (RowSense::Eq, Some(r)) if r >= 0.0 => (rhs, rhs + r),
        (RowSense::Eq, Some(r)) => (rhs + r, rhs),
    }
}

fn parse_bound(tokens: &[&str], line: usize, col_index: &HashMap<String, usize>, cols: &mut [ColEntry]) -> Result<(), MpsError> {
    let kind = tokens[0].to_ascii_uppercase();
    let needs_value = !matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
    // With a value: [kind, set, col, value] or [kind, col, value].
    // Without:      [kind, set, col] or [kind, col].
    let (col_tok, value_tok) = match (needs_value, tokens.len()) {
        (true, 4) => (tokens[2], Some(tokens[3])),
        (true, 3) => (tokens[1], Some(tokens[2])),
        (false, 3) if kind == "BV" && col_index.contains_key(tokens[1]) && !col_index.contains_key(tokens[2]) => {
            (tokens[1], Some(tokens[2]))
        }
        (false, 3) => (tokens[2], None),
        (false, 4) if kind == "BV" => (tokens[2], Some(tokens[3])),
        (false, 2) => (tokens[1], None),
        _ => return Err(err(line, "malformed BOUNDS entry")),
    };
    let c = *col_index
        .get(col_tok)
        .ok_or_else(|| err(line, format!("unknown column `{col_tok}`")))?;
    let value = value_tok.map(|t| number(t, line)).transpose()?;
    let entry = &mut cols[c];
    let var = &mut entry.var;
    match kind.as_str() {
        "UP" | "UI" => {
            let v = value.unwrap();
            var.upper = v;
            entry.upper_set = true;
            if v < 0.0 && !entry.lower_set && var.lower == 0.0 {
                var.lower = f64::NEG_INFINITY;
            }
            if kind == "UI" {
                var.var_type = VarType::Integer;
            }
        }
        "LO" | "LI" => {
            var.lower = value.unwrap();
            entry.lower_set = true;
            if kind == "LI" {
                var.var_type = VarType::Integer;
                if !entry.upper_set {
                    var.upper = f64::INFINITY;
                }
            }
        }
        "FX" => {
            let v = value.unwrap();
            var.lower = v;
            var.upper = v;
            entry.lower_set = true;
            entry.upper_set = true;
        }
        "FR" => {
            var.lower = f64::NEG_INFINITY;
            var.upper = f64::INFINITY;
            entry.lower_set = true;
            entry.upper_set = true;
        }
        "MI" => {
            var.lower = f64::NEG_INFINITY;
            entry.lower_set = true;
        }
        "PL" => {
            var.upper = f64::INFINITY;
            entry.upper_set = true;
        }
        "BV" => {
            var.var_type = VarType::Binary;
            var.lower = 0.0;
            var.upper = 1.0;
            entry.lower_set = true;
            entry.upper_set = true;
        }
        "SC" => return Err(err(line, "semicontinuous bounds are not supported")),
        other => return Err(err(line, format!("unknown bound type `{other}`"))),
    }
    Ok(())
}

fn check_name(name: &str) -> Result<(), MpsError> {
    let len = name.chars().count();
    if len > MAX_NAME_LEN {
        return Err(MpsError::NameTooLong {
            name: name.to_string(),
            len,
        });
    }
    if name.chars().any(char::is_whitespace) || name.starts_with('*') {
        return Err(MpsError::InvalidName(name.to_string()));
    }
    Ok(())
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Writes free MPS. Unnamed columns and rows are named `C0001…` / `R0001…`.
pub fn write_mps(model: &MipModel) -> Result<Vec<u8>, MpsError> {
    let col_names: Vec<String> = model
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| if v.name.is_empty() { format!("C{:04}", i + 1) } else { v.name.clone() })
        .collect();
    let row_names: Vec<String> = model
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| if r.name.is_empty() { format!("R{:04}", i + 1) } else { r.name.clone() })
        .collect();
    let obj_name = {
        let mut name = "OBJ".to_string();
        while row_names.contains(&name) {
            name.push('_');
        }
        name
    };
    let mut seen = std::collections::HashSet::new();
    for n in col_names.iter() {
        check_name(n)?;
        if !seen.insert(n.as_str()) {
            return Err(MpsError::DuplicateName(n.clone()));
        }
    }
    seen.clear();
    for n in row_names.iter() {
        check_name(n)?;
        if !seen.insert(n.as_str()) {
            return Err(MpsError::DuplicateName(n.clone()));
        }
    }

    let mut out = String::new();
    let model_name = if model.name.is_empty() { "UNNAMED" } else { model.name.as_str() };
    let _ = writeln!(out, "NAME {model_name}");
    if model.sense == ObjectiveSense::Maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let _ = writeln!(out, "ROWS\n N  {obj_name}");
    let mut ranges = Vec::new();
    let mut rhs_entries = Vec::new();
    for (r, row) in model.rows.iter().enumerate() {
        let (sense, rhs) = match (row.lhs.is_finite(), row.rhs.is_finite()) {
            (false, false) => ("N", None),
            (false, true) => ("L", Some(row.rhs)),
            (true, false) => ("G", Some(row.lhs)),
            (true, true) if row.lhs == row.rhs => ("E", Some(row.rhs)),
            (true, true) => {
                ranges.push((r, row.rhs - row.lhs));
                ("G", Some(row.lhs))
            }
        };
        let _ = writeln!(out, " {sense}  {}", row_names[r]);
        if let Some(v) = rhs {
            if v != 0.0 {
                rhs_entries.push((r, v));
            }
        }
    }

    let sign = if model.sense == ObjectiveSense::Maximize { -1.0 } else { 1.0 };
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for (r, row) in model.rows.iter().enumerate() {
        for &(v, c) in &row.terms {
            columns[v].push((r, c));
        }
    }
    let mut obj_coef = vec![0.0; model.variables.len()];
    for &(v, c) in &model.objective {
        obj_coef[v] += sign * c;
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for (v, var) in model.variables.iter().enumerate() {
        if var.is_integral() != in_int {
            let tag = if var.is_integral() { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER{marker:04}  'MARKER'  '{tag}'");
            marker += 1;
            in_int = var.is_integral();
        }
        let name = &col_names[v];
        if obj_coef[v] != 0.0 || columns[v].is_empty() {
            let _ = writeln!(out, "    {name}  {obj_name}  {}", fmt_num(obj_coef[v]));
        }
        for &(r, c) in &columns[v] {
            let _ = writeln!(out, "    {name}  {}  {}", row_names[r], fmt_num(c));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{marker:04}  'MARKER'  'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    if model.objective_offset != 0.0 {
        let _ = writeln!(out, "    RHS  {obj_name}  {}", fmt_num(-sign * model.objective_offset));
    }
    for (r, v) in rhs_entries {
        let _ = writeln!(out, "    RHS  {}  {}", row_names[r], fmt_num(v));
    }
    if !ranges.is_empty() {
        let _ = writeln!(out, "RANGES");
        for (r, width) in ranges {
            let _ = writeln!(out, "    RNG  {}  {}", row_names[r], fmt_num(width));
        }
    }
    let mut bounds = String::new();
    for (v, var) in model.variables.iter().enumerate() {
        write_bounds(&mut bounds, &col_names[v], var);
    }
    if !bounds.is_empty() {
        let _ = writeln!(out, "BOUNDS");
        out.push_str(&bounds);
    }
    let _ = writeln!(out, "ENDATA");
    Ok(out.into_bytes())
}

fn write_bounds(out: &mut String, name: &str, var: &Variable) {
    let (lo, up) = (var.lower, var.upper);
    if var.var_type == VarType::Binary && lo == 0.0 && up == 1.0 {
        let _ = writeln!(out, " BV BND  {name}");
        return;
    }
    if lo == up && lo.is_finite() {
        let _ = writeln!(out, " FX BND  {name}  {}", fmt_num(lo));
        return;
    }
    if lo == f64::NEG_INFINITY && up == f64::INFINITY {
        let _ = writeln!(out, " FR BND  {name}");
        return;
    }
    if lo == f64::NEG_INFINITY {
        let _ = writeln!(out, " MI BND  {name}");
    } else if lo != 0.0 || var.is_integral() {
        let _ = writeln!(out, " LO BND  {name}  {}", fmt_num(lo));
    }
    if up.is_finite() {
        let _ = writeln!(out, " UP BND  {name}  {}", fmt_num(up));
    } else if var.is_integral() {
        let _ = writeln!(out, " PL BND  {name}");
    }
}
