use std::fmt::Write as _;
use std::path::Path;

use super::{MpsDialect, MpsError, MpsMode, MpsWriteError};
use crate::model::{Instance, Sense, VarKind};

const FIXED_NAME_WIDTH: usize = 8;
/// Objective row name used on output (the model does not keep one).
const OBJ_ROW: &str = "OBJ";

pub fn write_mps_file(
    instance: &Instance,
    dialect: &MpsDialect,
    path: &Path,
) -> Result<(), MpsError> {
    let text = write_mps(instance, dialect)?;
    std::fs::write(path, text).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serializes `instance` so that parsing the result with the same dialect
/// reproduces every field bit-exactly.
pub fn write_mps(instance: &Instance, dialect: &MpsDialect) -> Result<String, MpsWriteError> {
    instance
        .validate()
        .map_err(|e| MpsWriteError::InvalidInstance(e.to_string()))?;
    check_name(OBJ_ROW, dialect)?;
    if instance.name.chars().any(|c| c.is_whitespace()) {
        return Err(MpsWriteError::UnwritableName { name: instance.name.clone() });
    }
    for v in &instance.variables {
        check_name(&v.name, dialect)?;
    }
    for r in &instance.rows {
        check_name(&r.name, dialect)?;
        if r.name == OBJ_ROW {
            return Err(MpsWriteError::UnwritableName { name: r.name.clone() });
        }
    }
    if instance.sense == Sense::Maximize && !dialect.objective_sense_section_honored {
        return Err(MpsWriteError::SenseNotRecordable);
    }

    let rows: Vec<RowForm> = instance
        .rows
        .iter()
        .map(|r| RowForm::classify(&r.name, r.lhs, r.rhs))
        .collect::<Result<_, _>>()?;

    // Column-major view of the constraint matrix.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.variables.len()];
    for (i, r) in instance.rows.iter().enumerate() {
        for &(j, c) in &r.coefficients {
            columns[j].push((i, c));
        }
    }

    let fixed = dialect.mode == MpsMode::Fixed;
    let mut out = String::new();
    let name_field = |n: &str| {
        if fixed {
            format!("{:<width$}", n, width = FIXED_NAME_WIDTH)
        } else {
            n.to_string()
        }
    };

    if instance.name.is_empty() {
        writeln!(out, "NAME").unwrap();
    } else {
        writeln!(out, "NAME {}", instance.name).unwrap();
    }
    if instance.sense == Sense::Maximize {
        writeln!(out, "OBJSENSE").unwrap();
        writeln!(out, "    MAX").unwrap();
    }

    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N  {}", name_field(OBJ_ROW)).unwrap();
    for (r, form) in instance.rows.iter().zip(&rows) {
        writeln!(out, " {}  {}", form.code(), name_field(&r.name)).unwrap();
    }

    writeln!(out, "COLUMNS").unwrap();
    let mut integer_mode = false;
    for (j, v) in instance.variables.iter().enumerate() {
        let wants_integer = v.kind.is_integer();
        if wants_integer != integer_mode {
            let marker = if wants_integer { "'INTORG'" } else { "'INTEND'" };
            writeln!(out, "    MARKER                 'MARKER'                 {marker}").unwrap();
            integer_mode = wants_integer;
        }
        // Emit the objective entry whenever the coefficient is not a plain
        // +0.0, and also when the column would otherwise vanish from the
        // file entirely.
        let obj_bits = v.objective_coefficient.to_bits();
        if obj_bits != 0.0f64.to_bits() || columns[j].is_empty() {
            entry(&mut out, fixed, &v.name, OBJ_ROW, v.objective_coefficient);
        }
        for &(i, c) in &columns[j] {
            entry(&mut out, fixed, &v.name, &instance.rows[i].name, c);
        }
    }
    if integer_mode {
        writeln!(out, "    MARKER                 'MARKER'                 'INTEND'").unwrap();
    }

    writeln!(out, "RHS").unwrap();
    if instance.objective_constant.to_bits() != 0.0f64.to_bits() {
        entry(&mut out, fixed, "RHS", OBJ_ROW, -instance.objective_constant);
    }
    for (r, form) in instance.rows.iter().zip(&rows) {
        if let Some(v) = form.rhs_entry() {
            if v.to_bits() != 0.0f64.to_bits() {
                entry(&mut out, fixed, "RHS", &r.name, v);
            }
        }
    }

    if rows.iter().any(|f| f.range_entry().is_some()) {
        writeln!(out, "RANGES").unwrap();
        for (r, form) in instance.rows.iter().zip(&rows) {
            if let Some(v) = form.range_entry() {
                entry(&mut out, fixed, "RNG", &r.name, v);
            }
        }
    }

    let bound_lines = bounds_section(instance, fixed);
    if !bound_lines.is_empty() {
        writeln!(out, "BOUNDS").unwrap();
        for l in bound_lines {
            out.push_str(&l);
            out.push('\n');
        }
    }

    for (r, form) in instance.rows.iter().zip(&rows) {
        if let Some(lhs) = form.pinned_lhs() {
            writeln!(out, "* reoptbench-exact-side LHS {} {}", r.name, format_value(lhs)).unwrap();
        }
    }

    writeln!(out, "ENDATA").unwrap();
    Ok(out)
}

fn check_name(name: &str, dialect: &MpsDialect) -> Result<(), MpsWriteError> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
        return Err(MpsWriteError::UnwritableName { name: name.to_string() });
    }
    if dialect.mode == MpsMode::Fixed && name.len() > FIXED_NAME_WIDTH {
        return Err(MpsWriteError::NameTooLong { name: name.to_string() });
    }
    Ok(())
}

fn entry(out: &mut String, fixed: bool, item: &str, row: &str, value: f64) {
    if fixed {
        writeln!(
            out,
            "    {:<8}  {:<8}  {}",
            item,
            row,
            format_value(value)
        )
        .unwrap();
    } else {
        writeln!(out, "    {}  {}  {}", item, row, format_value(value)).unwrap();
    }
}

/// Shortest decimal form that parses back to the identical bits. Plain
/// `Display` is used for moderate magnitudes, exponent form otherwise so a
/// 1e300 does not become a 300-digit literal.
pub fn format_value(v: f64) -> String {
    debug_assert!(v.is_finite());
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

enum RowForm {
    Equal { value: f64 },
    Less { rhs: f64 },
    Greater { lhs: f64 },
    /// Two finite sides: `code` is the anchored side, `range` the RANGES value.
    RangedLess { rhs: f64, range: f64 },
    RangedGreater { lhs: f64, range: f64 },
    /// No representable range reproduces the lhs exactly; the standard
    /// encoding is emitted with the closest range and the lhs is pinned by a
    /// precision comment.
    RangedPinned { lhs: f64, rhs: f64, range: f64 },
}

impl RowForm {
    fn classify(name: &str, lhs: f64, rhs: f64) -> Result<RowForm, MpsWriteError> {
        match (lhs.is_finite(), rhs.is_finite()) {
            (false, false) => Err(MpsWriteError::FreeRow { name: name.to_string() }),
            (false, true) => Ok(RowForm::Less { rhs }),
            (true, false) => Ok(RowForm::Greater { lhs }),
            (true, true) => {
                if lhs.to_bits() == rhs.to_bits() {
                    return Ok(RowForm::Equal { value: lhs });
                }
                // Anchor the smaller-magnitude side exactly and search for a
                // RANGES value whose parse-side reconstruction reproduces the
                // other side bit for bit.
                let anchor_lhs = lhs.abs() <= rhs.abs();
                if anchor_lhs {
                    if let Some(range) = exact_range(rhs - lhs, |r| lhs + r, rhs) {
                        return Ok(RowForm::RangedGreater { lhs, range });
                    }
                    if let Some(range) = exact_range(rhs - lhs, |r| rhs - r, lhs) {
                        return Ok(RowForm::RangedLess { rhs, range });
                    }
                } else {
                    if let Some(range) = exact_range(rhs - lhs, |r| rhs - r, lhs) {
                        return Ok(RowForm::RangedLess { rhs, range });
                    }
                    if let Some(range) = exact_range(rhs - lhs, |r| lhs + r, rhs) {
                        return Ok(RowForm::RangedGreater { lhs, range });
                    }
                }
                // The difference can overflow for huge opposite-signed
                // sides; any finite stand-in works since the pin carries
                // the exact lhs.
                let range = (rhs - lhs).abs().clamp(f64::MIN_POSITIVE, f64::MAX);
                Ok(RowForm::RangedPinned { lhs, rhs, range })
            }
        }
    }

    fn code(&self) -> char {
        match self {
            RowForm::Equal { .. } => 'E',
            RowForm::Less { .. } | RowForm::RangedLess { .. } | RowForm::RangedPinned { .. } => 'L',
            RowForm::Greater { .. } | RowForm::RangedGreater { .. } => 'G',
        }
    }

    fn rhs_entry(&self) -> Option<f64> {
        Some(match self {
            RowForm::Equal { value } => *value,
            RowForm::Less { rhs }
            | RowForm::RangedLess { rhs, .. }
            | RowForm::RangedPinned { rhs, .. } => *rhs,
            RowForm::Greater { lhs } | RowForm::RangedGreater { lhs, .. } => *lhs,
        })
    }

    fn range_entry(&self) -> Option<f64> {
        match self {
            RowForm::RangedLess { range, .. }
            | RowForm::RangedGreater { range, .. }
            | RowForm::RangedPinned { range, .. } => Some(*range),
            _ => None,
        }
    }

    fn pinned_lhs(&self) -> Option<f64> {
        match self {
            RowForm::RangedPinned { lhs, .. } => Some(*lhs),
            _ => None,
        }
    }
}

/// Finds a positive range value `r` near `difference` with
/// `reconstruct(|r|) == target` bit-exactly, trying the rounded difference
/// and its immediate floating-point neighbours.
fn exact_range(difference: f64, reconstruct: impl Fn(f64) -> f64, target: f64) -> Option<f64> {
    let d = difference.abs();
    let candidates = [d, d.next_up(), d.next_down(), d.next_up().next_up(), d.next_down().next_down()];
    candidates
        .into_iter()
        .find(|&r| r.is_finite() && r > 0.0 && reconstruct(r).to_bits() == target.to_bits())
}

fn bounds_section(instance: &Instance, fixed: bool) -> Vec<String> {
    let mut lines = Vec::new();
    let mut push = |code: &str, name: &str, value: Option<f64>| {
        let val = value.map(format_value).unwrap_or_default();
        if fixed {
            lines.push(format!(" {code} {:<8}  {:<8}  {val}", "BND", name));
        } else {
            lines.push(format!(" {code} BND  {name}  {val}"));
        }
    };
    let zero = 0.0f64.to_bits();
    let one = 1.0f64.to_bits();
    for v in &instance.variables {
        let lo = v.lower;
        let up = v.upper;
        match v.kind {
            VarKind::Binary => {
                // BV establishes the kind with the canonical [0, 1] box;
                // follow-up codes narrow it when the instance differs.
                push("BV", &v.name, None);
                if lo.to_bits() == up.to_bits() && lo.to_bits() != zero && lo.to_bits() != one {
                    push("FX", &v.name, Some(lo));
                } else {
                    if lo.to_bits() != zero {
                        push("LO", &v.name, Some(lo));
                    }
                    if up.to_bits() != one {
                        push("UP", &v.name, Some(up));
                    }
                }
            }
            VarKind::GeneralInteger => {
                // Integrality comes from the COLUMNS markers. The upper bound
                // is always written because dialects disagree on the integer
                // default; PL pins an infinite one explicitly.
                if lo == f64::NEG_INFINITY {
                    push("MI", &v.name, None);
                } else if lo.to_bits() != zero {
                    push("LO", &v.name, Some(lo));
                }
                if up == f64::INFINITY {
                    push("PL", &v.name, None);
                } else {
                    push("UP", &v.name, Some(up));
                }
            }
            VarKind::Continuous => {
                if lo == f64::NEG_INFINITY && up == f64::INFINITY {
                    push("FR", &v.name, None);
                } else if lo.to_bits() == up.to_bits() {
                    push("FX", &v.name, Some(lo));
                } else {
                    if lo == f64::NEG_INFINITY {
                        push("MI", &v.name, None);
                    } else if lo.to_bits() != zero {
                        push("LO", &v.name, Some(lo));
                    }
                    if up != f64::INFINITY {
                        push("UP", &v.name, Some(up));
                    }
                }
            }
        }
    }
    lines
}
