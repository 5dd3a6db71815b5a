//! Solution files exchanged through the solver protocol.
//!
//! One `<variable name> <value>` pair per line, names matching the instance.
//! Variables missing from the file default to zero; unknown names are errors.
//! Lines starting with `#` are comments.

use std::collections::HashMap;
use std::path::Path;

use crate::model::{Instance, Solution};

pub fn parse_solution(text: &str, instance: &Instance) -> Result<Solution, String> {
    let index: HashMap<&str, usize> = instance
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| (v.name.as_str(), j))
        .collect();
    let mut values = vec![0.0; instance.variables.len()];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
            return Err(format!("solution line {}: expected `<name> <value>`", i + 1));
        };
        if parts.next().is_some() {
            return Err(format!("solution line {}: trailing tokens", i + 1));
        }
        let Some(&j) = index.get(name) else {
            return Err(format!("solution line {}: unknown variable {name:?}", i + 1));
        };
        values[j] = value
            .parse::<f64>()
            .map_err(|_| format!("solution line {}: bad value {value:?}", i + 1))?;
    }
    Ok(Solution::new(values))
}

pub fn read_solution(path: &Path, instance: &Instance) -> Result<Solution, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_solution(&text, instance)
}

pub fn format_solution(instance: &Instance, solution: &Solution) -> String {
    let mut out = String::new();
    for (v, x) in instance.variables.iter().zip(&solution.values) {
        out.push_str(&v.name);
        out.push(' ');
        out.push_str(&format!("{x}"));
        out.push('\n');
    }
    out
}

pub fn write_solution(path: &Path, instance: &Instance, solution: &Solution) -> std::io::Result<()> {
    std::fs::write(path, format_solution(instance, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sense, VarKind, Variable};

    fn instance() -> Instance {
        Instance {
            name: "t".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![
                Variable {
                    name: "x".into(),
                    kind: VarKind::Continuous,
                    lower: 0.0,
                    upper: 1.0,
                    objective_coefficient: 1.0,
                },
                Variable {
                    name: "y".into(),
                    kind: VarKind::Continuous,
                    lower: 0.0,
                    upper: 1.0,
                    objective_coefficient: 1.0,
                },
            ],
            rows: vec![],
        }
    }

    #[test]
    fn roundtrip_and_defaults() {
        let inst = instance();
        let sol = parse_solution("y 0.25\n", &inst).unwrap();
        assert_eq!(sol.values, vec![0.0, 0.25]);
        let text = format_solution(&inst, &sol);
        let again = parse_solution(&text, &inst).unwrap();
        assert_eq!(again, sol);
    }

    #[test]
    fn unknown_variable_is_an_error() {
        let err = parse_solution("z 1\n", &instance()).unwrap_err();
        assert!(err.contains("unknown variable"), "{err}");
    }
}
