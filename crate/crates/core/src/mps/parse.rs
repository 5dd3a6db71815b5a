use std::collections::HashMap;
use std::path::Path;

use super::{MpsDialect, MpsError, MpsParseError};
use crate::model::{Instance, Row, Sense, VarKind, Variable};

/// Parsed instance plus non-fatal findings (ignored extra `N` rows and the
/// entries referencing them).
#[derive(Debug, Clone)]
pub struct ParsedMps {
    pub instance: Instance,
    pub warnings: Vec<String>,
}

pub fn parse_mps_file(path: &Path, dialect: &MpsDialect) -> Result<ParsedMps, MpsError> {
    let text = std::fs::read_to_string(path).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_mps(&text, dialect)?)
}

pub fn parse_mps(text: &str, dialect: &MpsDialect) -> Result<ParsedMps, MpsParseError> {
    Parser::new(dialect).run(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objsense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

impl Section {
    fn order(self) -> u8 {
        match self {
            Section::Preamble => 0,
            Section::Objsense => 1,
            Section::Rows => 2,
            Section::Columns => 3,
            Section::Rhs => 4,
            Section::Ranges => 5,
            Section::Bounds => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowCode {
    Objective,
    Less,
    Greater,
    Equal,
}

struct RowBuild {
    name: String,
    code: RowCode,
    coefficients: Vec<(usize, f64)>,
    /// Value from the RHS section, if any.
    rhs_value: Option<f64>,
    range: Option<f64>,
}

struct VarBuild {
    name: String,
    kind: VarKind,
    lower: f64,
    upper: f64,
    objective_coefficient: f64,
    has_objective_entry: bool,
    lower_explicit: bool,
}

/// A token with its 1-based start column.
struct Tok<'a> {
    text: &'a str,
    column: usize,
}

struct Parser<'a> {
    dialect: &'a MpsDialect,
    section: Section,
    seen: Vec<Section>,
    name: String,
    sense: Sense,
    objective_constant: f64,
    objective_row: Option<String>,
    ignored_n_rows: std::collections::HashSet<String>,
    rows: Vec<RowBuild>,
    row_index: HashMap<String, usize>,
    vars: Vec<VarBuild>,
    var_index: HashMap<String, usize>,
    current_column: Option<usize>,
    integer_mode: bool,
    saw_endata: bool,
    objective_constant_set: bool,
    warnings: Vec<String>,
    /// Precision pins from `* reoptbench-exact-side` comments:
    /// (is_lhs, row name, value, line).
    side_pins: Vec<(bool, String, f64, usize)>,
}

impl<'a> Parser<'a> {
    fn new(dialect: &'a MpsDialect) -> Self {
        Parser {
            dialect,
            section: Section::Preamble,
            seen: Vec::new(),
            name: String::new(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            objective_row: None,
            ignored_n_rows: Default::default(),
            rows: Vec::new(),
            row_index: HashMap::new(),
            vars: Vec::new(),
            var_index: HashMap::new(),
            current_column: None,
            integer_mode: false,
            saw_endata: false,
            objective_constant_set: false,
            warnings: Vec::new(),
            side_pins: Vec::new(),
        }
    }

    fn run(mut self, text: &str) -> Result<ParsedMps, MpsParseError> {
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            if self.saw_endata {
                break; // anything after ENDATA is ignored
            }
            if raw.starts_with('*') {
                self.comment(line_no, raw)?;
                continue;
            }
            if raw.trim().is_empty() {
                continue;
            }
            let header = !raw.starts_with(|c: char| c.is_whitespace());
            let toks = tokenize(raw);
            if header {
                self.header(line_no, &toks)?;
            } else {
                self.data(line_no, &toks)?;
            }
        }
        if !self.saw_endata {
            return fail(last_line + 1, 1, "missing ENDATA".to_string());
        }
        self.finish(last_line)
    }

    fn header(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        let word = toks[0].text;
        let target = match word {
            "NAME" => {
                if let Some(t) = toks.get(1) {
                    self.name = t.text.to_string();
                }
                return Ok(());
            }
            "OBJSENSE" => {
                // Either inline (`OBJSENSE MAX`) or on the following data line.
                if let Some(t) = toks.get(1) {
                    if self.seen.iter().any(|s| s.order() >= Section::Objsense.order()) {
                        return fail(line, toks[0].column, "section OBJSENSE out of order or repeated".to_string());
                    }
                    self.seen.push(Section::Objsense);
                    self.set_sense(line, t)?;
                    return Ok(());
                }
                Section::Objsense
            }
            "ROWS" => Section::Rows,
            "COLUMNS" => Section::Columns,
            "RHS" => Section::Rhs,
            "RANGES" => Section::Ranges,
            "BOUNDS" => Section::Bounds,
            "ENDATA" => {
                self.saw_endata = true;
                return Ok(());
            }
            other => return fail(line, toks[0].column, format!("unknown section {other:?}")),
        };
        if self.seen.iter().any(|s| s.order() >= target.order()) {
            return fail(line, toks[0].column, format!("section {word} out of order or repeated"));
        }
        self.seen.push(target);
        self.section = target;
        Ok(())
    }

    fn data(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        match self.section {
            Section::Preamble => {
                fail(line, toks[0].column, "data before any section header".to_string())
            }
            Section::Objsense => self.set_sense(line, &toks[0]),
            Section::Rows => self.row_line(line, toks),
            Section::Columns => self.column_line(line, toks),
            Section::Rhs => self.rhs_line(line, toks),
            Section::Ranges => self.ranges_line(line, toks),
            Section::Bounds => self.bounds_line(line, toks),
        }
    }

    /// Comments are skipped except for this writer's precision pins, which
    /// carry a side of a ranged row that standard RANGES arithmetic cannot
    /// reproduce bit-exactly.
    fn comment(&mut self, line: usize, raw: &str) -> Result<(), MpsParseError> {
        let toks = tokenize(raw);
        if toks.len() < 2 || toks[1].text != "reoptbench-exact-side" {
            return Ok(());
        }
        if toks.len() != 5 {
            return fail(line, toks[0].column, "expected: * reoptbench-exact-side <LHS|RHS> <row> <value>".to_string());
        }
        let is_lhs = match toks[2].text {
            "LHS" => true,
            "RHS" => false,
            other => return fail(line, toks[2].column, format!("expected LHS or RHS, got {other:?}")),
        };
        let value = parse_number(line, &toks[4])?;
        self.side_pins.push((is_lhs, toks[3].text.to_string(), value, line));
        Ok(())
    }

    fn set_sense(&mut self, line: usize, tok: &Tok) -> Result<(), MpsParseError> {
        let sense = match tok.text {
            "MAX" | "MAXIMIZE" => Sense::Maximize,
            "MIN" | "MINIMIZE" => Sense::Minimize,
            other => return fail(line, tok.column, format!("unknown objective sense {other:?}")),
        };
        if self.dialect.objective_sense_section_honored {
            self.sense = sense;
        } else {
            self.warnings.push(format!("line {line}: OBJSENSE ignored by dialect"));
        }
        Ok(())
    }

    fn row_line(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        if toks.len() != 2 {
            return fail(line, toks[0].column, "expected: <code> <row name>".to_string());
        }
        let code = match toks[0].text {
            "N" => RowCode::Objective,
            "L" => RowCode::Less,
            "G" => RowCode::Greater,
            "E" => RowCode::Equal,
            other => return fail(line, toks[0].column, format!("unknown row code {other:?}")),
        };
        let name = toks[1].text;
        if self.row_index.contains_key(name)
            || self.objective_row.as_deref() == Some(name)
            || self.ignored_n_rows.contains(name)
        {
            return fail(line, toks[1].column, format!("duplicate row name {name:?}"));
        }
        if code == RowCode::Objective {
            if self.objective_row.is_none() {
                self.objective_row = Some(name.to_string());
            } else {
                self.warnings.push(format!("line {line}: extra N row {name:?} ignored"));
                self.ignored_n_rows.insert(name.to_string());
            }
            return Ok(());
        }
        self.row_index.insert(name.to_string(), self.rows.len());
        self.rows.push(RowBuild {
            name: name.to_string(),
            code,
            coefficients: Vec::new(),
            rhs_value: None,
            range: None,
        });
        Ok(())
    }

    fn column_line(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        if toks.iter().any(|t| t.text == "'MARKER'") {
            return self.marker_line(line, toks);
        }
        if toks.len() < 3 || toks.len() % 2 == 0 {
            return fail(
                line,
                toks[0].column,
                "expected: <column> (<row> <value>)+".to_string(),
            );
        }
        let col = self.column_for(line, &toks[0])?;
        for pair in toks[1..].chunks(2) {
            let row_tok = &pair[0];
            let value = parse_number(line, &pair[1])?;
            if self.objective_row.as_deref() == Some(row_tok.text) {
                if self.vars[col].has_objective_entry {
                    return fail(
                        line,
                        row_tok.column,
                        format!("duplicate objective entry for column {:?}", self.vars[col].name),
                    );
                }
                self.vars[col].objective_coefficient = value;
                self.vars[col].has_objective_entry = true;
            } else if self.ignored_n_rows.contains(row_tok.text) {
                self.warnings.push(format!(
                    "line {line}: entry on ignored N row {:?} dropped",
                    row_tok.text
                ));
            } else if let Some(&r) = self.row_index.get(row_tok.text) {
                if value != 0.0 {
                    if self.rows[r].coefficients.iter().any(|&(j, _)| j == col) {
                        return fail(
                            line,
                            row_tok.column,
                            format!(
                                "duplicate entry for column {:?} in row {:?}",
                                self.vars[col].name, row_tok.text
                            ),
                        );
                    }
                    self.rows[r].coefficients.push((col, value));
                }
            } else {
                return fail(line, row_tok.column, format!("unknown row {:?}", row_tok.text));
            }
        }
        Ok(())
    }

    fn marker_line(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        if toks.iter().any(|t| t.text == "'INTORG'") {
            self.integer_mode = true;
        } else if toks.iter().any(|t| t.text == "'INTEND'") {
            self.integer_mode = false;
        } else {
            return fail(line, toks[0].column, "marker is neither 'INTORG' nor 'INTEND'".to_string());
        }
        self.current_column = None;
        Ok(())
    }

    fn column_for(&mut self, line: usize, tok: &Tok) -> Result<usize, MpsParseError> {
        if let Some(&j) = self.var_index.get(tok.text) {
            if self.current_column != Some(j) {
                return fail(
                    line,
                    tok.column,
                    format!("column {:?} revisited; column entries must be contiguous", tok.text),
                );
            }
            return Ok(j);
        }
        let j = self.vars.len();
        self.var_index.insert(tok.text.to_string(), j);
        self.vars.push(VarBuild {
            name: tok.text.to_string(),
            kind: if self.integer_mode { VarKind::GeneralInteger } else { VarKind::Continuous },
            lower: 0.0,
            upper: f64::INFINITY,
            objective_coefficient: 0.0,
            has_objective_entry: false,
            lower_explicit: false,
        });
        self.current_column = Some(j);
        Ok(j)
    }

    fn rhs_line(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        // First token is the (ignored) RHS set name.
        if toks.len() < 3 || toks.len() % 2 == 0 {
            return fail(line, toks[0].column, "expected: <set> (<row> <value>)+".to_string());
        }
        for pair in toks[1..].chunks(2) {
            let row_tok = &pair[0];
            let value = parse_number(line, &pair[1])?;
            if self.objective_row.as_deref() == Some(row_tok.text) {
                if self.objective_constant_set {
                    return fail(line, row_tok.column, "duplicate objective RHS entry".to_string());
                }
                // An RHS on the objective row is the negated constant term.
                self.objective_constant = -value;
                self.objective_constant_set = true;
            } else if self.ignored_n_rows.contains(row_tok.text) {
                self.warnings
                    .push(format!("line {line}: RHS on ignored N row {:?} dropped", row_tok.text));
            } else if let Some(&r) = self.row_index.get(row_tok.text) {
                if self.rows[r].rhs_value.is_some() {
                    return fail(
                        line,
                        row_tok.column,
                        format!("duplicate RHS entry for row {:?}", row_tok.text),
                    );
                }
                self.rows[r].rhs_value = Some(value);
            } else {
                return fail(line, row_tok.column, format!("unknown row {:?}", row_tok.text));
            }
        }
        Ok(())
    }

    fn ranges_line(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        if toks.len() < 3 || toks.len() % 2 == 0 {
            return fail(line, toks[0].column, "expected: <set> (<row> <value>)+".to_string());
        }
        for pair in toks[1..].chunks(2) {
            let row_tok = &pair[0];
            let value = parse_number(line, &pair[1])?;
            if self.objective_row.as_deref() == Some(row_tok.text)
                || self.ignored_n_rows.contains(row_tok.text)
            {
                return fail(line, row_tok.column, "RANGES entry on an N row".to_string());
            }
            let Some(&r) = self.row_index.get(row_tok.text) else {
                return fail(line, row_tok.column, format!("unknown row {:?}", row_tok.text));
            };
            if self.rows[r].range.is_some() {
                return fail(
                    line,
                    row_tok.column,
                    format!("duplicate RANGES entry for row {:?}", row_tok.text),
                );
            }
            self.rows[r].range = Some(value);
        }
        Ok(())
    }

    fn bounds_line(&mut self, line: usize, toks: &[Tok]) -> Result<(), MpsParseError> {
        if toks.len() < 3 {
            return fail(line, toks[0].column, "expected: <code> <set> <column> [value]".to_string());
        }
        let code = toks[0].text;
        let var_tok = &toks[2];
        let Some(&j) = self.var_index.get(var_tok.text) else {
            return fail(line, var_tok.column, format!("unknown column {:?}", var_tok.text));
        };
        let value = |needed: bool| -> Result<Option<f64>, MpsParseError> {
            match toks.get(3) {
                Some(t) => Ok(Some(parse_number(line, t)?)),
                None if needed => fail(line, var_tok.column, format!("bound code {code} needs a value")),
                None => Ok(None),
            }
        };
        let v = &mut self.vars[j];
        match code {
            "LO" => {
                v.lower = value(true)?.unwrap();
                v.lower_explicit = true;
            }
            "UP" => {
                let b = value(true)?.unwrap();
                v.upper = b;
                if b < 0.0 && !v.lower_explicit && v.kind == VarKind::Continuous {
                    v.lower = f64::NEG_INFINITY;
                    v.lower_explicit = true;
                }
            }
            "FX" => {
                let b = value(true)?.unwrap();
                v.lower = b;
                v.upper = b;
                v.lower_explicit = true;
            }
            "BV" => {
                v.kind = VarKind::Binary;
                v.lower = 0.0;
                v.upper = 1.0;
                v.lower_explicit = true;
            }
            "MI" => {
                v.lower = f64::NEG_INFINITY;
                v.lower_explicit = true;
            }
            "PL" => v.upper = f64::INFINITY,
            "FR" => {
                v.lower = f64::NEG_INFINITY;
                v.upper = f64::INFINITY;
                v.lower_explicit = true;
            }
            "UI" => {
                v.upper = value(true)?.unwrap();
                if v.kind == VarKind::Continuous {
                    v.kind = VarKind::GeneralInteger;
                }
            }
            "LI" => {
                v.lower = value(true)?.unwrap();
                v.lower_explicit = true;
                if v.kind == VarKind::Continuous {
                    v.kind = VarKind::GeneralInteger;
                }
            }
            other => return fail(line, toks[0].column, format!("unknown bound code {other:?}")),
        }
        Ok(())
    }

    fn finish(self, endata_line: usize) -> Result<ParsedMps, MpsParseError> {
        let row_index = self.row_index;
        let mut rows = Vec::with_capacity(self.rows.len());
        for build in self.rows {
            let base = build.rhs_value.unwrap_or(0.0);
            let (lhs, rhs) = match (build.code, build.range) {
                (RowCode::Less, None) => (f64::NEG_INFINITY, base),
                (RowCode::Greater, None) => (base, f64::INFINITY),
                (RowCode::Equal, None) => (base, base),
                (RowCode::Less, Some(r)) => (base - r.abs(), base),
                (RowCode::Greater, Some(r)) => (base, base + r.abs()),
                (RowCode::Equal, Some(r)) => {
                    if r >= 0.0 {
                        (base, base + r)
                    } else {
                        (base + r, base)
                    }
                }
                (RowCode::Objective, _) => unreachable!("objective rows are not materialized"),
            };
            rows.push(Row::new(build.name, build.coefficients, lhs, rhs));
        }
        for (is_lhs, row_name, value, line) in self.side_pins {
            let Some(&i) = row_index.get(&row_name) else {
                return fail(line, 1, format!("precision pin for unknown row {row_name:?}"));
            };
            if is_lhs {
                rows[i].lhs = value;
            } else {
                rows[i].rhs = value;
            }
        }
        let variables = self
            .vars
            .into_iter()
            .map(|v| Variable {
                name: v.name,
                kind: v.kind,
                lower: v.lower,
                upper: v.upper,
                objective_coefficient: v.objective_coefficient,
            })
            .collect();
        let instance = Instance {
            name: self.name,
            sense: self.sense,
            objective_constant: self.objective_constant,
            variables,
            rows,
        };
        if let Err(e) = instance.validate() {
            return fail(endata_line, 1, e.to_string());
        }
        Ok(ParsedMps { instance, warnings: self.warnings })
    }
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { text: &line[s..i], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok { text: &line[s..], column: s + 1 });
    }
    toks
}

fn parse_number(line: usize, tok: &Tok) -> Result<f64, MpsParseError> {
    match tok.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => fail(line, tok.column, format!("non-finite value {:?}", tok.text)),
        Err(_) => fail(line, tok.column, format!("expected a number, got {:?}", tok.text)),
    }
}

fn fail<T>(line: usize, column: usize, message: String) -> Result<T, MpsParseError> {
    Err(MpsParseError { line, column, message })
}
